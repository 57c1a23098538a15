//! The equation's domain: an open set described by inequalities together with
//! the part of its boundary on which the field is still defined.
//!
//! Non-strict inequality atoms contribute their zero set to the good
//! boundary, strict atoms exclude it. Curves listed on the region are graphs
//! `y = b(x)` lying in the good boundary; they drive the local case analysis
//! and the sliding rule of the Euler integrator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, EvalError, Result};
use crate::expr::{Expr, Predicate};

/// Relative width of the band treated as "on" a curve or an inequality's
/// zero set: `|y - b(x)| <= BAND_REL * (1 + |y|)`.
pub const BAND_REL: f64 = 1e-9;

/// Default finite-difference step for curve derivatives.
pub const FD_STEP: f64 = 1e-6;

/// Sample count for the convexity and slope conditions on boundary curves.
pub const SHAPE_SAMPLES: usize = 64;

#[inline]
pub fn band(y: f64) -> f64 {
    BAND_REL * (1.0 + y.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// The domain lies below the curve.
    Upper,
    /// The domain lies above the curve.
    Lower,
}

impl Side {
    /// `+1` when moving up leaves the domain.
    pub fn outward(self) -> f64 {
        match self {
            Side::Upper => 1.0,
            Side::Lower => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Upper => "upper",
            Side::Lower => "lower",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Right,
    Left,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Right => 1.0,
            Direction::Left => -1.0,
        }
    }

    pub fn flip(self) -> Direction {
        match self {
            Direction::Right => Direction::Left,
            Direction::Left => Direction::Right,
        }
    }
}

/// A good-boundary curve in global coordinates.
#[derive(Debug, Clone)]
pub struct CurveSpec {
    pub side: Side,
    pub b: Expr,
    pub x_min: f64,
    pub x_max: f64,
}

impl CurveSpec {
    pub fn new(side: Side, b: Expr, x_min: f64, x_max: f64) -> Result<CurveSpec> {
        if b.uses_y() {
            return Err(Error::Input(format!("curve `{b}` must depend on x only")));
        }
        if !(x_min < x_max) {
            return Err(Error::Input(format!(
                "curve `{b}` has empty range [{x_min}, {x_max}]"
            )));
        }
        Ok(CurveSpec { side, b, x_min, x_max })
    }

    pub fn contains_x(&self, x: f64) -> bool {
        x >= self.x_min - 1e-12 && x <= self.x_max + 1e-12
    }
}

/// Derivative of `b` at `x` by a central difference, one-sided (second
/// order) when `x` sits within `h` of an end of `[lo, hi]`.
pub fn curve_deriv(b: &Expr, x: f64, h: f64, lo: f64, hi: f64) -> Result<f64, EvalError> {
    diff(|t| b.eval_x(t), x, h, lo, hi)
}

pub(crate) fn diff<F>(g: F, x: f64, h: f64, lo: f64, hi: f64) -> Result<f64, EvalError>
where
    F: Fn(f64) -> Result<f64, EvalError>,
{
    if x - h >= lo && x + h <= hi {
        Ok((g(x + h)? - g(x - h)?) / (2.0 * h))
    } else if x + 2.0 * h <= hi {
        Ok((-3.0 * g(x)? + 4.0 * g(x + h)? - g(x + 2.0 * h)?) / (2.0 * h))
    } else if x - 2.0 * h >= lo {
        Ok((3.0 * g(x)? - 4.0 * g(x - h)? + g(x - 2.0 * h)?) / (2.0 * h))
    } else {
        Err(EvalError::NonFinite)
    }
}

/// Local coordinate frame anchored at an initial point.
///
/// `x = x0 + sign * u` and `y = y0 + v + sign * shear * u`, so the field seen
/// in the frame is `f0(u, v) = sign * (f(x, y) - shear)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub x0: f64,
    pub y0: f64,
    pub shear: f64,
    pub direction: Direction,
}

impl Frame {
    pub fn identity() -> Frame {
        Frame {
            x0: 0.0,
            y0: 0.0,
            shear: 0.0,
            direction: Direction::Right,
        }
    }

    #[inline]
    pub fn to_global(&self, u: f64, v: f64) -> (f64, f64) {
        let s = self.direction.sign();
        (self.x0 + s * u, self.y0 + v + s * self.shear * u)
    }

    #[inline]
    pub fn to_local(&self, x: f64, y: f64) -> (f64, f64) {
        let s = self.direction.sign();
        let u = s * (x - self.x0);
        (u, y - self.y0 - self.shear * (x - self.x0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PointClass {
    Interior,
    /// On the good boundary. `curve` names the listed curve the point lies
    /// on, if any, and `x` is the curve parameter.
    Boundary { curve: Option<usize>, x: f64 },
    Outside,
}

impl PointClass {
    pub fn in_domain(self) -> bool {
        !matches!(self, PointClass::Outside)
    }
}

#[derive(Debug, Clone)]
pub struct Region {
    constraints: Vec<Predicate>,
    sources: Vec<String>,
    curves: Vec<CurveSpec>,
    bbox: [f64; 4],
}

impl Region {
    /// `constraints` are joined by conjunction; each may use `&&` and `||`.
    /// `bbox` is `[x_min, x_max, y_min, y_max]` and only bounds sampling.
    pub fn new(constraints: &[&str], curves: Vec<CurveSpec>, bbox: [f64; 4]) -> Result<Region> {
        let mut preds = Vec::with_capacity(constraints.len());
        for c in constraints {
            preds.push(Predicate::parse(c)?);
        }
        if !(bbox[0] < bbox[1] && bbox[2] < bbox[3]) {
            return Err(Error::Input(format!("degenerate bounding box {bbox:?}")));
        }
        Ok(Region {
            constraints: preds,
            sources: constraints.iter().map(|s| s.to_string()).collect(),
            curves,
            bbox,
        })
    }

    pub fn curves(&self) -> &[CurveSpec] {
        &self.curves
    }

    pub fn bbox(&self) -> [f64; 4] {
        self.bbox
    }

    pub fn constraint_sources(&self) -> &[String] {
        &self.sources
    }

    /// Half the shorter side of the bounding box.
    pub fn scale(&self) -> f64 {
        0.5 * (self.bbox[1] - self.bbox[0]).min(self.bbox[3] - self.bbox[2])
    }

    /// Three-valued membership: 2 interior, 1 boundary, 0 outside.
    fn level(&self, x: f64, y: f64) -> u8 {
        let tol = band(y);
        let mut overall = 2u8;
        for p in &self.constraints {
            let mut disj = 0u8;
            for conj in &p.any {
                let mut c_level = 2u8;
                for c in conj {
                    let l = match c.margin(x, y) {
                        Ok(m) if m > tol => 2,
                        Ok(m) if m >= -tol => {
                            if c.op.is_strict() {
                                0
                            } else {
                                1
                            }
                        }
                        _ => 0,
                    };
                    c_level = c_level.min(l);
                    if c_level == 0 {
                        break;
                    }
                }
                disj = disj.max(c_level);
                if disj == 2 {
                    break;
                }
            }
            overall = overall.min(disj);
            if overall == 0 {
                break;
            }
        }
        overall
    }

    /// Listed curve through `(x, y)` within the band, nearest first.
    pub fn curve_at(&self, x: f64, y: f64) -> Option<usize> {
        let tol = band(y);
        let mut best: Option<(usize, f64)> = None;
        for (i, c) in self.curves.iter().enumerate() {
            if !c.contains_x(x) {
                continue;
            }
            if let Ok(b) = c.b.eval_x(x) {
                let d = (y - b).abs();
                if d <= tol && best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((i, d));
                }
            }
        }
        best.map(|(i, _)| i)
    }

    pub fn classify_point(&self, x: f64, y: f64) -> PointClass {
        if !x.is_finite() || !y.is_finite() {
            return PointClass::Outside;
        }
        match self.level(x, y) {
            2 => PointClass::Interior,
            1 => PointClass::Boundary {
                curve: self.curve_at(x, y),
                x,
            },
            _ => PointClass::Outside,
        }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.level(x, y) > 0
    }
}

/// Continuous extension of a problem to a larger domain.
#[derive(Debug, Clone)]
pub struct Extension {
    pub region: Region,
    pub field: Expr,
}

#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub region: Region,
    pub field: Expr,
    pub extension: Option<Extension>,
}

impl ProblemSpec {
    /// Builds a problem, checking that an extension agrees with the field on
    /// sampled points of the original domain.
    pub fn new(
        name: impl Into<String>,
        region: Region,
        field: Expr,
        extension: Option<Extension>,
    ) -> Result<ProblemSpec> {
        let p = ProblemSpec {
            name: name.into(),
            region,
            field,
            extension,
        };
        if let Some(ext) = &p.extension {
            let [x0, x1, y0, y1] = p.region.bbox();
            let n = 41;
            for i in 0..n {
                let x = x0 + (x1 - x0) * i as f64 / (n - 1) as f64;
                for j in 0..n {
                    let y = y0 + (y1 - y0) * j as f64 / (n - 1) as f64;
                    if !p.region.contains(x, y) {
                        continue;
                    }
                    if !ext.region.contains(x, y) {
                        return Err(Error::Input(format!(
                            "extension domain misses ({x}, {y})"
                        )));
                    }
                    let (Ok(a), Ok(b)) = (p.field.eval(x, y), ext.field.eval(x, y)) else {
                        continue;
                    };
                    if (a - b).abs() > 1e-9 * (1.0 + a.abs()) {
                        return Err(Error::Input(format!(
                            "extension disagrees with the field at ({x}, {y}): {b} vs {a}"
                        )));
                    }
                }
            }
        }
        Ok(p)
    }

    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        self.field.eval(x, y)
    }

    pub fn classify_point(&self, x: f64, y: f64) -> PointClass {
        self.region.classify_point(x, y)
    }

    /// The extended problem, if an extension is attached.
    pub fn extended(&self) -> Option<ProblemSpec> {
        self.extension.as_ref().map(|e| ProblemSpec {
            name: format!("{}+ext", self.name),
            region: e.region.clone(),
            field: e.field.clone(),
            extension: None,
        })
    }
}

/// Curve entry of a problem file.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CurveFile {
    pub side: Side,
    pub b: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_max: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ExtensionFile {
    pub interior: Vec<String>,
    #[serde(default)]
    pub curves: Vec<CurveFile>,
    pub field: String,
}

/// JSON problem document.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ProblemFile {
    pub name: String,
    pub interior: Vec<String>,
    #[serde(default)]
    pub curves: Vec<CurveFile>,
    pub field: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extension: Option<ExtensionFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_point: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bbox: Option<[f64; 4]>,
}

pub const DEFAULT_BBOX: [f64; 4] = [-2.0, 2.0, -2.0, 2.0];

fn build_curves(files: &[CurveFile]) -> Result<Vec<CurveSpec>> {
    files
        .iter()
        .map(|c| {
            CurveSpec::new(
                c.side,
                Expr::parse(&c.b)?,
                c.x_min.unwrap_or(f64::NEG_INFINITY),
                c.x_max.unwrap_or(f64::INFINITY),
            )
        })
        .collect()
}

fn curve_files(curves: &[CurveSpec]) -> Vec<CurveFile> {
    curves
        .iter()
        .map(|c| CurveFile {
            side: c.side,
            b: c.b.to_string(),
            x_min: c.x_min.is_finite().then_some(c.x_min),
            x_max: c.x_max.is_finite().then_some(c.x_max),
        })
        .collect()
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<ProblemFile> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem file serializes")
    }

    pub fn build(&self) -> Result<ProblemSpec> {
        let bbox = self.bbox.unwrap_or(DEFAULT_BBOX);
        let interior: Vec<&str> = self.interior.iter().map(String::as_str).collect();
        let region = Region::new(&interior, build_curves(&self.curves)?, bbox)?;
        let extension = match &self.extension {
            None => None,
            Some(e) => {
                let interior: Vec<&str> = e.interior.iter().map(String::as_str).collect();
                Some(Extension {
                    region: Region::new(&interior, build_curves(&e.curves)?, bbox)?,
                    field: Expr::parse(&e.field)?,
                })
            }
        };
        ProblemSpec::new(self.name.clone(), region, Expr::parse(&self.field)?, extension)
    }

    pub fn from_problem(p: &ProblemSpec, initial_point: Option<[f64; 2]>) -> ProblemFile {
        ProblemFile {
            name: p.name.clone(),
            interior: p.region.constraint_sources().to_vec(),
            curves: curve_files(p.region.curves()),
            field: p.field.to_string(),
            extension: p.extension.as_ref().map(|e| ExtensionFile {
                interior: e.region.constraint_sources().to_vec(),
                curves: curve_files(e.region.curves()),
                field: e.field.to_string(),
            }),
            initial_point,
            bbox: Some(p.region.bbox()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadrant() -> Region {
        let y0 = CurveSpec::new(Side::Lower, Expr::parse("0").unwrap(), 0.0, f64::INFINITY).unwrap();
        Region::new(&["x >= 0", "y >= 0"], vec![y0], [0.0, 2.0, 0.0, 2.0]).unwrap()
    }

    #[test]
    fn quadrant_membership() {
        let r = quadrant();
        assert_eq!(r.classify_point(1.0, 1.0), PointClass::Interior);
        assert_eq!(
            r.classify_point(2.0, 0.0),
            PointClass::Boundary {
                curve: Some(0),
                x: 2.0
            }
        );
        assert_eq!(r.classify_point(-1.0, 0.0), PointClass::Outside);
        // the vertical ray is good boundary but not a listed curve
        assert_eq!(
            r.classify_point(0.0, 1.0),
            PointClass::Boundary { curve: None, x: 0.0 }
        );
        assert_eq!(r.classify_point(f64::NAN, 0.0), PointClass::Outside);
    }

    #[test]
    fn strict_atoms_exclude_their_boundary() {
        let r = Region::new(&["y > 0"], vec![], DEFAULT_BBOX).unwrap();
        assert_eq!(r.classify_point(0.0, 0.0), PointClass::Outside);
        assert_eq!(r.classify_point(0.0, 1.0), PointClass::Interior);
    }

    #[test]
    fn disjunction_of_atoms() {
        let upper = CurveSpec::new(Side::Lower, Expr::parse("x^2").unwrap(), 0.0, f64::INFINITY).unwrap();
        let lower = CurveSpec::new(Side::Upper, Expr::parse("-x^2").unwrap(), 0.0, f64::INFINITY).unwrap();
        let r = Region::new(&["x <= 0 || abs(y) - x^2 >= 0"], vec![upper, lower], DEFAULT_BBOX).unwrap();
        assert_eq!(r.classify_point(-1.0, 0.0), PointClass::Interior);
        assert_eq!(r.classify_point(0.0, 0.5), PointClass::Interior);
        assert_eq!(r.classify_point(1.0, 0.5), PointClass::Outside);
        assert!(matches!(r.classify_point(1.0, 1.0), PointClass::Boundary { curve: Some(0), .. }));
        assert!(matches!(r.classify_point(1.0, -1.0), PointClass::Boundary { curve: Some(1), .. }));
        assert!(matches!(r.classify_point(0.0, 0.0), PointClass::Boundary { .. }));
    }

    #[test]
    fn band_tolerance_is_relative() {
        let r = quadrant();
        assert!(matches!(r.classify_point(1.0, 5e-10), PointClass::Boundary { .. }));
        assert_eq!(r.classify_point(1.0, 5e-9), PointClass::Interior);
    }

    #[test]
    fn curve_derivative() {
        let b = Expr::parse("x^2").unwrap();
        assert!((curve_deriv(&b, 1.0, FD_STEP, 0.0, 2.0).unwrap() - 2.0).abs() < 1e-6);
        assert!(curve_deriv(&b, 0.0, FD_STEP, 0.0, 2.0).unwrap().abs() < 1e-9);
        assert!((curve_deriv(&b, 2.0, FD_STEP, 0.0, 2.0).unwrap() - 4.0).abs() < 1e-6);
        assert!(curve_deriv(&b, 0.0, FD_STEP, 0.0, 1e-7).is_err());
    }

    #[test]
    fn frame_round_trip() {
        let f = Frame {
            x0: 1.0,
            y0: 2.0,
            shear: -0.5,
            direction: Direction::Left,
        };
        let (x, y) = f.to_global(0.3, -0.7);
        let (u, v) = f.to_local(x, y);
        assert!((u - 0.3).abs() < 1e-15 && (v + 0.7).abs() < 1e-15);
    }

    #[test]
    fn extension_must_agree() {
        let r = quadrant();
        let ext = Extension {
            region: Region::new(&["x >= 0"], vec![], [0.0, 2.0, 0.0, 2.0]).unwrap(),
            field: Expr::parse("3*sqrt(x)*sqrt(abs(y))").unwrap(),
        };
        assert!(ProblemSpec::new("ok", r.clone(), Expr::parse("3*sqrt(x)*sqrt(y)").unwrap(), Some(ext)).is_ok());
        let bad = Extension {
            region: Region::new(&["x >= 0"], vec![], [0.0, 2.0, 0.0, 2.0]).unwrap(),
            field: Expr::parse("1 + 3*sqrt(x)*sqrt(abs(y))").unwrap(),
        };
        assert!(ProblemSpec::new("bad", r, Expr::parse("3*sqrt(x)*sqrt(y)").unwrap(), Some(bad)).is_err());
    }

    #[test]
    fn problem_file_round_trip() {
        let text = r#"{
            "name": "ex1",
            "interior": ["x >= 0", "y >= 0"],
            "curves": [{"side": "lower", "b": "0", "x_min": 0}],
            "field": "3*sqrt(x)*sqrt(y)",
            "initial_point": [0, 0],
            "bbox": [0, 2, 0, 2]
        }"#;
        let f = ProblemFile::from_json(text).unwrap();
        let p = f.build().unwrap();
        assert_eq!(p.region.curves().len(), 1);
        let again = ProblemFile::from_problem(&p, f.initial_point);
        let p2 = ProblemFile::from_json(&again.to_json()).unwrap().build().unwrap();
        assert_eq!(p2.eval(1.0, 4.0).unwrap(), 6.0);
        assert!(ProblemFile::from_json("{\"name\": 1}").is_err());
        let bad = ProblemFile {
            field: "3*".into(),
            ..f
        };
        assert!(matches!(bad.build(), Err(Error::Syntax { .. })));
    }
}
