//! Identifying the local case at a normalized point.
//!
//! Near the origin the domain looks like one of four sets: the box `N_c`, the
//! part `U_c` below an upper curve, the part `O_c` above a lower curve, or the
//! part `B_c` between both. Family 1 means every sampled point off the curves
//! is interior; family 2 means none of them belongs to the domain.

use std::fmt;

use serde::Serialize;

use crate::config::ClassifierConfig;
use crate::domain::{band, Direction, PointClass, ProblemSpec, Side};
use crate::error::{Error, Result};
use crate::normalize::{to_origin_with, BoundaryCurve, NormalizedProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Family {
    N,
    U1,
    U2,
    O1,
    O2,
    B1,
    B2,
    Unclassified,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::N => "N",
            Family::U1 => "U1",
            Family::U2 => "U2",
            Family::O1 => "O1",
            Family::O2 => "O2",
            Family::B1 => "B1",
            Family::B2 => "B2",
            Family::Unclassified => "unclassified",
        }
    }

    pub fn is_second(self) -> bool {
        matches!(self, Family::U2 | Family::O2 | Family::B2)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseTag {
    pub family: Family,
    pub direction: Direction,
    /// `>` or `=` for the upper curve, when the case involves one.
    pub upper: Option<&'static str>,
    /// `<` or `=` for the lower curve.
    pub lower: Option<&'static str>,
    pub upper_id: Option<usize>,
    pub lower_id: Option<usize>,
    /// Window `c` at which the identity was observed.
    pub witness: Option<f64>,
    pub diagnostics: Vec<String>,
}

impl CaseTag {
    pub fn tag(&self) -> String {
        let subs: Vec<&str> = [self.upper, self.lower].into_iter().flatten().collect();
        if subs.is_empty() {
            self.family.as_str().to_string()
        } else {
            format!("{}[{}]", self.family.as_str(), subs.join(","))
        }
    }
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tag())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Shape {
    N,
    U,
    O,
    B,
}

struct Slice {
    lo: f64,
    lo_on: Option<usize>,
    hi: f64,
    hi_on: Option<usize>,
}

fn slice(
    shape: Shape,
    x: f64,
    c: f64,
    up: Option<&BoundaryCurve>,
    low: Option<&BoundaryCurve>,
) -> Result<Slice, String> {
    let mut s = Slice {
        lo: -c,
        lo_on: None,
        hi: c,
        hi_on: None,
    };
    if matches!(shape, Shape::U | Shape::B) {
        let up = up.expect("upper curve present");
        if x <= up.a {
            s.hi = up.b(x).map_err(|e| e.to_string())?;
            s.hi_on = Some(up.id());
        }
    }
    if matches!(shape, Shape::O | Shape::B) {
        let low = low.expect("lower curve present");
        if x <= low.a {
            s.lo = low.b(x).map_err(|e| e.to_string())?;
            s.lo_on = Some(low.id());
        }
    }
    Ok(s)
}

/// Checks the set identity for `shape` at window `c`. Returns the family
/// index (1 or 2) or the reason it fails.
fn identity(np: &NormalizedProblem, shape: Shape, c: f64, cfg: &ClassifierConfig) -> Result<u8, String> {
    let (up, low) = (np.upper(), np.lower());
    let anchored = np.anchored_ids();
    let mut family: Option<u8> = None;
    let m = cfg.samples.max(3);
    for i in 1..=cfg.slices {
        let x = c * i as f64 / cfg.slices as f64;
        let s = slice(shape, x, c, up, low)?;
        if s.lo > s.hi + band(s.hi) {
            return Err(format!("curves cross at u = {x}"));
        }
        for (y, on) in [(s.lo, s.lo_on), (s.hi, s.hi_on)] {
            if let Some(id) = on {
                match np.classify(x, y) {
                    PointClass::Boundary { curve: Some(k), .. } if k == id => {}
                    other => return Err(format!("curve {id} point ({x}, {y}) classified {other:?}")),
                }
            }
        }
        // other curves through the anchor put boundary points inside the set
        for &id in &anchored {
            if Some(id) == s.lo_on || Some(id) == s.hi_on {
                continue;
            }
            let lc = &np.locals[id];
            if !lc.contains_u(x) {
                continue;
            }
            if let Ok(y) = lc.b(x) {
                if y > s.lo + 4.0 * band(y)
                    && y < s.hi - 4.0 * band(y)
                    && matches!(np.classify(x, y), PointClass::Boundary { .. })
                {
                    return Err(format!("curve {id} runs through the set at u = {x}"));
                }
            }
        }
        for j in 0..m {
            let y = s.lo + (s.hi - s.lo) * j as f64 / (m - 1) as f64;
            if (s.lo_on.is_some() && (y - s.lo).abs() <= 4.0 * band(y))
                || (s.hi_on.is_some() && (s.hi - y).abs() <= 4.0 * band(y))
            {
                continue;
            }
            let got = match np.classify(x, y) {
                PointClass::Interior => 1,
                PointClass::Outside => 2,
                PointClass::Boundary { .. } => {
                    return Err(format!("boundary point ({x}, {y}) off the case curves"));
                }
            };
            match family {
                None => family = Some(got),
                Some(f) if f != got => {
                    return Err(format!("mixed membership near ({x}, {y})"));
                }
                _ => {}
            }
        }
    }
    match (shape, family) {
        (Shape::N, Some(2)) => Err("box misses the domain".into()),
        (_, Some(f)) => Ok(f),
        (_, None) => Err("no off-curve samples".into()),
    }
}

/// Identifies the case of `np` in its own direction.
pub fn classify(np: &NormalizedProblem, cfg: &ClassifierConfig) -> CaseTag {
    let up = np.upper();
    let low = np.lower();
    let mut shapes = Vec::new();
    if up.is_some() && low.is_some() {
        shapes.push(Shape::B);
    }
    if up.is_some() {
        shapes.push(Shape::U);
    }
    if low.is_some() {
        shapes.push(Shape::O);
    }
    shapes.push(Shape::N);

    let mut diagnostics: Vec<String> = np
        .irregular
        .iter()
        .map(|c| format!("curve {} irregular: {}", c.local.id, c.reason))
        .collect();
    for k in 0..=cfg.halvings {
        let c = cfg.c_star * 0.5f64.powi(k as i32);
        for &shape in &shapes {
            match identity(np, shape, c, cfg) {
                Ok(f) => {
                    let family = match (shape, f) {
                        (Shape::N, _) => Family::N,
                        (Shape::U, 1) => Family::U1,
                        (Shape::U, _) => Family::U2,
                        (Shape::O, 1) => Family::O1,
                        (Shape::O, _) => Family::O2,
                        (Shape::B, 1) => Family::B1,
                        (Shape::B, _) => Family::B2,
                    };
                    let uses_up = matches!(shape, Shape::U | Shape::B);
                    let uses_low = matches!(shape, Shape::O | Shape::B);
                    return CaseTag {
                        family,
                        direction: np.direction(),
                        upper: up.filter(|_| uses_up).map(|c| c.slope_symbol()),
                        lower: low.filter(|_| uses_low).map(|c| c.slope_symbol()),
                        upper_id: up.filter(|_| uses_up).map(|c| c.id()),
                        lower_id: low.filter(|_| uses_low).map(|c| c.id()),
                        witness: Some(c),
                        diagnostics,
                    };
                }
                Err(reason) if k == 0 => diagnostics.push(format!("{shape:?} at c = {c}: {reason}")),
                Err(_) => {}
            }
        }
    }
    CaseTag {
        family: Family::Unclassified,
        direction: np.direction(),
        upper: None,
        lower: None,
        upper_id: None,
        lower_id: None,
        witness: None,
        diagnostics,
    }
}

pub fn classify_right(p: &ProblemSpec, anchor: (f64, f64), cfg: &ClassifierConfig) -> Result<CaseTag> {
    let np = to_origin_with(p, anchor, Direction::Right, cfg.curve_window)?;
    Ok(classify(&np, cfg))
}

pub fn classify_left(p: &ProblemSpec, anchor: (f64, f64), cfg: &ClassifierConfig) -> Result<CaseTag> {
    let np = to_origin_with(p, anchor, Direction::Left, cfg.curve_window)?;
    Ok(classify(&np, cfg))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Condition4 {
    /// The field never points outward along the curve. `equality` records
    /// whether it is tangent at every sample.
    Holds { equality: bool },
    /// First sampled violation: local abscissa, field value, curve slope.
    Fails { u: f64, field: f64, slope: f64 },
    /// Only tangent curves carry the condition.
    NotApplicable,
}

const COND4_SAMPLES: usize = 256;

/// Checks that the field does not point out of the domain along a tangent
/// boundary curve.
pub fn check_condition4(np: &NormalizedProblem, curve: &BoundaryCurve) -> Result<Condition4> {
    if curve.slope0 != 0.0 {
        return Ok(Condition4::NotApplicable);
    }
    let out = curve.side().outward();
    let mut equality = true;
    for i in 1..=COND4_SAMPLES {
        let u = curve.a * i as f64 / COND4_SAMPLES as f64;
        let v = curve.b(u)?;
        let slope = curve.deriv(u)?;
        let field = np.f0(u, v).map_err(Error::from)?;
        let tol = 1e-6 * (1.0 + slope.abs());
        let excess = out * (field - slope);
        if excess > tol {
            return Ok(Condition4::Fails { u, field, slope });
        }
        if excess < -tol {
            equality = false;
        }
    }
    Ok(Condition4::Holds { equality })
}

/// The curve of `np` on `side`, if regular.
pub fn curve_on(np: &NormalizedProblem, side: Side) -> Option<BoundaryCurve> {
    match side {
        Side::Upper => np.upper().cloned(),
        Side::Lower => np.lower().cloned(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{CurveSpec, Region};
    use crate::expr::Expr;
    use crate::normalize::{reflect_left, to_origin};

    fn problem(field: &str, interior: &[&str], curves: &[(Side, &str)]) -> ProblemSpec {
        let cs = curves
            .iter()
            .map(|(s, b)| CurveSpec::new(*s, Expr::parse(b).unwrap(), 0.0, f64::INFINITY).unwrap())
            .collect();
        let r = Region::new(interior, cs, [-1.0, 2.0, -2.0, 4.0]).unwrap();
        ProblemSpec::new("t", r, Expr::parse(field).unwrap(), None).unwrap()
    }

    fn eq6() -> ProblemSpec {
        problem(
            "sqrt(y) - 2*sqrt(x^2 - y) + x",
            &["x >= 0", "y >= 0", "y <= x^2"],
            &[(Side::Upper, "x^2"), (Side::Lower, "0")],
        )
    }

    #[test]
    fn quadrant_corner_is_o1() {
        let p = problem("3*sqrt(x)*sqrt(y)", &["x >= 0", "y >= 0"], &[(Side::Lower, "0")]);
        let t = classify_right(&p, (0.0, 0.0), &ClassifierConfig::default()).unwrap();
        assert_eq!(t.tag(), "O1[=]");
        assert_eq!(t.witness, Some(0.5));
        let i = classify_right(&p, (1.0, 1.0), &ClassifierConfig::default()).unwrap();
        assert_eq!(i.tag(), "N");
    }

    #[test]
    fn cusp_region_is_b1() {
        let p = eq6();
        let t = classify_right(&p, (0.0, 0.0), &ClassifierConfig::default()).unwrap();
        assert_eq!(t.tag(), "B1[=,=]");
    }

    #[test]
    fn upper_side_of_parabola_is_u1() {
        let p = eq6();
        let t = classify_right(&p, (1.0, 1.0), &ClassifierConfig::default()).unwrap();
        assert_eq!(t.tag(), "U1[=]");
    }

    #[test]
    fn sloped_curve_subcase() {
        let p = problem("0", &["y <= x"], &[(Side::Upper, "x")]);
        let t = classify_right(&p, (0.0, 0.0), &ClassifierConfig::default()).unwrap();
        assert_eq!(t.tag(), "U1[>]");
        // the curve does not continue to the left, and the box is cut by y = x
        let l = classify_left(&p, (0.0, 0.0), &ClassifierConfig::default()).unwrap();
        assert_eq!(l.family, Family::Unclassified);
        assert!(!l.diagnostics.is_empty());
    }

    #[test]
    fn curve_alone_is_second_family() {
        // the domain is the closed upper half-plane with y = x^2 attached
        let p = problem("2*x", &["y - x^2 >= 0 && y - x^2 <= 0 || x <= -1"], &[(Side::Upper, "x^2")]);
        let t = classify_right(&p, (0.0, 0.0), &ClassifierConfig::default()).unwrap();
        assert_eq!(t.tag(), "U2[=]");
        assert!(t.family.is_second());
    }

    #[test]
    fn two_sided_curves_unclassified() {
        let p = problem(
            "piecewise(x <= 0: 2*sqrt(abs(y))^3, else: 2*sqrt(abs(y) - x^2)^3 + 2*x*sign(y))",
            &["x <= 0 || abs(y) - x^2 >= 0"],
            &[(Side::Lower, "x^2"), (Side::Upper, "-x^2")],
        );
        let t = classify_right(&p, (0.0, 0.0), &ClassifierConfig::default()).unwrap();
        assert_eq!(t.family, Family::Unclassified);
        let l = classify_left(&p, (0.0, 0.0), &ClassifierConfig::default()).unwrap();
        assert_eq!(l.tag(), "N");
    }

    #[test]
    fn condition4_on_the_cusp() {
        let p = eq6();
        let np = to_origin(&p, (0.0, 0.0)).unwrap();
        match check_condition4(&np, np.upper().unwrap()).unwrap() {
            Condition4::Holds { equality } => assert!(equality),
            other => panic!("{other:?}"),
        }
        match check_condition4(&np, np.lower().unwrap()).unwrap() {
            Condition4::Fails { u, field, .. } => assert!((field + u).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn condition4_not_applicable_on_slopes() {
        let p = problem("0", &["y <= x"], &[(Side::Upper, "x")]);
        let np = to_origin(&p, (0.0, 0.0)).unwrap();
        assert_eq!(check_condition4(&np, np.upper().unwrap()).unwrap(), Condition4::NotApplicable);
    }

    #[test]
    fn left_view_of_interior_point() {
        let p = eq6();
        let np = to_origin(&p, (1.0, 0.5)).unwrap();
        let l = reflect_left(&np);
        assert_eq!(classify(&l, &ClassifierConfig::default()).tag(), "N");
    }
}
