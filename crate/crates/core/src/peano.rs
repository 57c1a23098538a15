//! Existence intervals: the classical rectangle for interior points and the
//! boundary triangle for points of the good boundary.

use serde::Serialize;

use crate::classifier::{check_condition4, CaseTag, Condition4, Family};
use crate::config::PeanoConfig;
use crate::domain::{Direction, PointClass, ProblemSpec};
use crate::error::{Error, Result};
use crate::normalize::{BoundaryCurve, NormalizedProblem};

/// Window used when the classifier supplied none.
pub const DEFAULT_WINDOW: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PeanoKind {
    Interior,
    Boundary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "reason", rename_all = "kebab-case")]
pub enum TriangleFailure {
    /// The field points outward along a tangent curve at `u`.
    Condition4 { curve: usize, u: f64 },
    SecondFamily,
    Unclassified,
    Modulus { message: String },
    Containment,
}

#[derive(Debug, Clone, Serialize)]
pub struct PeanoGeometry {
    pub kind: PeanoKind,
    pub direction: Direction,
    /// Half-width of the rectangle, or the window of the triangle.
    pub a: f64,
    pub b: f64,
    /// Sampled bound on |f|.
    pub m: f64,
    /// Length of the existence interval. When `failure` is set this is only
    /// a tentative length for exploratory integration.
    pub h: f64,
    pub upper_leg: f64,
    pub lower_leg: f64,
    pub tau: Option<f64>,
    pub delta: Option<f64>,
    pub failure: Option<TriangleFailure>,
}

impl PeanoGeometry {
    pub fn is_valid(&self) -> bool {
        self.failure.is_none() && self.h > 0.0
    }
}

fn grid_points(n: usize) -> impl Iterator<Item = f64> {
    let n = n.max(2);
    (0..n).map(move |i| i as f64 / (n - 1) as f64)
}

/// Classical Peano segment at an interior point.
pub fn interior_segment(p: &ProblemSpec, anchor: (f64, f64), a: f64, b: f64, grid: usize) -> Result<PeanoGeometry> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::Input(format!("rectangle needs a, b > 0, got {a}, {b}")));
    }
    let (x0, y0) = anchor;
    let mut m = 0.0f64;
    for s in grid_points(grid) {
        let x = x0 - a + 2.0 * a * s;
        for t in grid_points(grid) {
            let y = y0 - b + 2.0 * b * t;
            if p.classify_point(x, y) != PointClass::Interior {
                return Err(Error::Input(format!("rectangle leaves the open domain at ({x}, {y})")));
            }
            m = m.max(p.eval(x, y)?.abs());
        }
    }
    let h = if m == 0.0 { a } else { a.min(b / m) };
    Ok(PeanoGeometry {
        kind: PeanoKind::Interior,
        direction: Direction::Right,
        a,
        b,
        m,
        h,
        upper_leg: m,
        lower_leg: -m,
        tau: None,
        delta: None,
        failure: None,
    })
}

fn half_rectangle(np: &NormalizedProblem, c: f64, grid: usize) -> Result<f64> {
    let mut m = 0.0f64;
    for s in grid_points(grid) {
        for t in grid_points(grid) {
            let (u, v) = (c * s, c * (2.0 * t - 1.0));
            if np.classify(u, v).in_domain() {
                m = m.max(np.f0(u, v)?.abs());
            }
        }
    }
    Ok(m)
}

fn contained(np: &NormalizedProblem, h: f64, tau: f64, up: Option<&BoundaryCurve>, low: Option<&BoundaryCurve>, n: usize) -> bool {
    let side = (n as f64).sqrt().ceil().max(2.0) as usize;
    for i in 1..=side {
        let u = h * i as f64 / side as f64;
        let mut hi = tau * u;
        let mut lo = -tau * u;
        if let Some(c) = up {
            match c.b(u) {
                Ok(b) => hi = hi.min(b),
                Err(_) => return false,
            }
        }
        if let Some(c) = low {
            match c.b(u) {
                Ok(b) => lo = lo.max(b),
                Err(_) => return false,
            }
        }
        if lo > hi {
            continue;
        }
        for j in 0..side {
            let v = lo + (hi - lo) * j as f64 / (side - 1) as f64;
            if !np.classify(u, v).in_domain() {
                return false;
            }
        }
    }
    true
}

/// Boundary triangle for the case `tag` of `np`.
pub fn boundary_triangle(np: &NormalizedProblem, tag: &CaseTag, cfg: &PeanoConfig) -> Result<PeanoGeometry> {
    let c = tag.witness.unwrap_or(DEFAULT_WINDOW);
    let up = tag.upper_id.and(np.upper());
    let low = tag.lower_id.and(np.lower());
    let mut g = PeanoGeometry {
        kind: PeanoKind::Boundary,
        direction: np.direction(),
        a: c,
        b: c,
        m: 0.0,
        h: 0.0,
        upper_leg: 0.0,
        lower_leg: 0.0,
        tau: None,
        delta: None,
        failure: None,
    };
    if tag.family == Family::N {
        let m = half_rectangle(np, c, cfg.grid)?;
        g.m = m;
        g.h = if m == 0.0 { c } else { c.min(c / m) };
        g.upper_leg = m;
        g.lower_leg = -m;
        return Ok(g);
    }

    let slopes = [up.map(|c| c.slope0.abs() / 2.0), low.map(|c| c.slope0.abs() / 2.0)];
    let tau = slopes
        .into_iter()
        .flatten()
        .filter(|t| *t > 0.0)
        .fold(None, |acc: Option<f64>, t| Some(acc.map_or(t, |a| a.min(t))))
        .unwrap_or(cfg.tau_default);
    g.tau = Some(tau);
    g.m = tau;
    let delta = match np.continuity_modulus(tau, c) {
        Ok(d) => d,
        Err(e) => {
            g.failure = Some(TriangleFailure::Modulus { message: e.to_string() });
            return Ok(g);
        }
    };
    g.delta = Some(delta);
    let mut h = delta.min(delta / tau).min(c);
    for curve in up.iter().chain(low.iter()) {
        h = h.min(curve.a);
    }
    g.upper_leg = match up {
        Some(c) if c.slope0 == 0.0 => 0.0,
        _ => tau,
    };
    g.lower_leg = match low {
        Some(c) if c.slope0 == 0.0 => 0.0,
        _ => -tau,
    };

    match tag.family {
        Family::Unclassified => g.failure = Some(TriangleFailure::Unclassified),
        f if f.is_second() => g.failure = Some(TriangleFailure::SecondFamily),
        _ => {
            for curve in up.iter().chain(low.iter()) {
                if let Condition4::Fails { u, .. } = check_condition4(np, curve)? {
                    g.failure = Some(TriangleFailure::Condition4 { curve: curve.id(), u });
                    break;
                }
            }
        }
    }
    if g.failure.is_none() {
        let mut tries = 0;
        while !contained(np, h, tau, up, low, cfg.containment) {
            h /= 2.0;
            tries += 1;
            if tries > 30 {
                g.failure = Some(TriangleFailure::Containment);
                break;
            }
        }
    }
    g.h = h;
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::classify;
    use crate::config::ClassifierConfig;
    use crate::domain::{CurveSpec, Region, Side};
    use crate::expr::Expr;
    use crate::normalize::to_origin;

    fn problem(field: &str, interior: &[&str], curves: &[(Side, &str)]) -> ProblemSpec {
        let cs = curves
            .iter()
            .map(|(s, b)| CurveSpec::new(*s, Expr::parse(b).unwrap(), 0.0, f64::INFINITY).unwrap())
            .collect();
        let r = Region::new(interior, cs, [0.0, 2.0, -2.0, 4.0]).unwrap();
        ProblemSpec::new("t", r, Expr::parse(field).unwrap(), None).unwrap()
    }

    fn quadrant() -> ProblemSpec {
        problem("3*sqrt(x)*sqrt(y)", &["x >= 0", "y >= 0"], &[(Side::Lower, "0")])
    }

    #[test]
    fn rectangle_at_interior_point() {
        let p = quadrant();
        let g = interior_segment(&p, (1.0, 1.0), 0.5, 0.5, 129).unwrap();
        // sup of 3 sqrt(x y) on [0.5, 1.5]^2 is 4.5
        assert!((g.m - 4.5).abs() < 1e-12);
        assert!((g.h - 0.5 / 4.5).abs() < 1e-12);
        let fine = interior_segment(&p, (1.0, 1.0), 0.5, 0.5, 257).unwrap();
        assert!((fine.m - g.m).abs() <= 0.01 * g.m);
    }

    #[test]
    fn rectangle_escaping_domain_is_rejected() {
        let p = quadrant();
        assert!(interior_segment(&p, (0.2, 1.0), 0.5, 0.5, 33).is_err());
        assert!(interior_segment(&p, (1.0, 1.0), 0.0, 0.5, 33).is_err());
    }

    #[test]
    fn zero_field_uses_full_width() {
        let p = problem("0", &["x > -10"], &[]);
        let g = interior_segment(&p, (0.0, 0.0), 0.5, 0.5, 17).unwrap();
        assert_eq!(g.h, 0.5);
    }

    #[test]
    fn quadrant_corner_triangle() {
        let p = quadrant();
        let np = to_origin(&p, (0.0, 0.0)).unwrap();
        let tag = classify(&np, &ClassifierConfig::default());
        let g = boundary_triangle(&np, &tag, &PeanoConfig::default()).unwrap();
        assert!(g.is_valid());
        assert_eq!(g.tau, Some(1.0));
        assert!((g.h - 1.0 / 3.0).abs() < 1e-3, "{}", g.h);
        assert_eq!(g.lower_leg, 0.0);
    }

    #[test]
    fn cusp_triangle_fails_on_lower_curve() {
        let p = problem(
            "sqrt(y) - 2*sqrt(x^2 - y) + x",
            &["x >= 0", "y >= 0", "y <= x^2"],
            &[(Side::Upper, "x^2"), (Side::Lower, "0")],
        );
        let np = to_origin(&p, (0.0, 0.0)).unwrap();
        let tag = classify(&np, &ClassifierConfig::default());
        let g = boundary_triangle(&np, &tag, &PeanoConfig::default()).unwrap();
        assert!(matches!(g.failure, Some(TriangleFailure::Condition4 { curve: 1, .. })));
        assert!(!g.is_valid());
        assert!((g.h - 0.5).abs() < 1e-12);
    }

    #[test]
    fn interior_tag_uses_half_rectangle() {
        let p = quadrant();
        let np = to_origin(&p, (1.0, 1.0)).unwrap();
        let tag = classify(&np, &ClassifierConfig::default());
        assert_eq!(tag.family, Family::N);
        let g = boundary_triangle(&np, &tag, &PeanoConfig::default()).unwrap();
        assert!(g.h > 0.0 && g.h <= 0.5);
    }
}
