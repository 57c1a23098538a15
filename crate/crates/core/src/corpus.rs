//! Worked problems with closed-form solutions, and the special functions
//! they need.

use serde::Serialize;

use crate::domain::{CurveFile, ExtensionFile, ProblemFile, ProblemSpec, Side};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::quad::adaptive_simpson;

pub const IDS: [&str; 5] = ["example1", "counterexample1", "counterexample2", "example2", "example3"];

/// Bands of the touch-sequence field kept before truncating to zero.
pub const PSI_BANDS: u32 = 12;

/// Field of the cusp domain `0 <= y <= x^2`.
pub const CUSP_FIELD: &str = "sqrt(y) - 2*sqrt(x^2 - y) + x";

/// Continuous extension of [`CUSP_FIELD`] to the half-plane `x >= 0`.
pub const CUSP_EXTENSION: &str = "piecewise(y > x^2: 2*x - sqrt(y - x^2), y >= 0: sqrt(y) - 2*sqrt(x^2 - y) + x, \
     y >= -x^2: sqrt(x^2 + y) - 2*x, else: -2*x + sqrt(-x^2 - y))";

pub const TWO_SHEET_FIELD: &str =
    "piecewise(x <= 0: 2*sqrt(abs(y))^3, else: 2*sqrt(abs(y) - x^2)^3 + 2*x*sign(y))";

/// One-parameter family of solutions. `C` in the template is replaced by
/// each member's parameter.
#[derive(Debug, Clone, Serialize)]
pub struct SolutionFamily {
    pub label: String,
    pub template: String,
    pub members: Vec<Member>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Member {
    pub c: f64,
    pub a: f64,
    pub b: f64,
    /// Check against the extended problem instead of the original one.
    pub extended: bool,
}

impl SolutionFamily {
    fn new(label: &str, template: &str, members: &[(f64, f64, f64)]) -> SolutionFamily {
        SolutionFamily {
            label: label.into(),
            template: template.into(),
            members: members
                .iter()
                .map(|&(c, a, b)| Member { c, a, b, extended: false })
                .collect(),
        }
    }

    fn extended(mut self) -> SolutionFamily {
        for m in &mut self.members {
            m.extended = true;
        }
        self
    }

    pub fn instantiate(&self, c: f64) -> Result<Expr> {
        Expr::parse(&self.template.replace('C', &format!("({c})")))
    }
}

/// Expected analysis result at a point.
#[derive(Debug, Clone, Serialize)]
pub struct Expectation {
    pub point: [f64; 2],
    /// Case tag to the right.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tag: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class: Option<String>,
}

fn expect(point: [f64; 2], tag: Option<&str>, class: Option<&str>) -> Expectation {
    Expectation {
        point,
        tag: tag.map(String::from),
        class: class.map(String::from),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CorpusEntry {
    pub id: String,
    pub description: String,
    pub file: ProblemFile,
    #[serde(skip)]
    pub problem: ProblemSpec,
    pub families: Vec<SolutionFamily>,
    pub expectations: Vec<Expectation>,
    pub constants: Vec<(String, f64)>,
    pub notes: Vec<String>,
}

impl CorpusEntry {
    /// Every family member as `(label, solution, interval, problem)`.
    pub fn solutions(&self) -> Result<Vec<(String, Expr, (f64, f64), bool)>> {
        let mut out = Vec::new();
        for f in &self.families {
            for m in &f.members {
                out.push((format!("{} C={}", f.label, m.c), f.instantiate(m.c)?, (m.a, m.b), m.extended));
            }
        }
        Ok(out)
    }
}

fn curve(side: Side, b: &str, x_min: Option<f64>) -> CurveFile {
    CurveFile {
        side,
        b: b.into(),
        x_min,
        x_max: None,
    }
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

fn entry(
    id: &str,
    description: &str,
    file: ProblemFile,
    families: Vec<SolutionFamily>,
    expectations: Vec<Expectation>,
    constants: Vec<(String, f64)>,
    notes: &[&str],
) -> Result<CorpusEntry> {
    let problem = file.build()?;
    Ok(CorpusEntry {
        id: id.into(),
        description: description.into(),
        file,
        problem,
        families,
        expectations,
        constants,
        notes: strings(notes),
    })
}

pub fn list() -> &'static [&'static str] {
    &IDS
}

pub fn get(id: &str) -> Result<CorpusEntry> {
    match id {
        "example1" => example1(),
        "counterexample1" => counterexample1(),
        "counterexample2" => counterexample2(),
        "example2" => example2(),
        "example3" => example3(),
        _ => Err(Error::UnknownCorpus(id.into())),
    }
}

fn example1() -> Result<CorpusEntry> {
    let file = ProblemFile {
        name: "example1".into(),
        interior: strings(&["x >= 0", "y >= 0"]),
        curves: vec![curve(Side::Lower, "0", Some(0.0))],
        field: "3*sqrt(x)*sqrt(y)".into(),
        extension: None,
        initial_point: Some([0.0, 0.0]),
        bbox: Some([0.0, 2.0, 0.0, 2.0]),
    };
    let families = vec![
        SolutionFamily::new("boundary", "0*C", &[(0.0, 0.0, 2.0)]),
        SolutionFamily::new("mixed", "(x^1.5 - C)^2", &[(-1.0, 0.0, 2.0), (0.0, 0.0, 2.0)]),
        SolutionFamily::new(
            "branch",
            "piecewise(x^1.5 <= C: 0, else: (x^1.5 - C)^2)",
            &[(0.5, 0.0, 2.0), (1.0, 0.5, 2.0)],
        ),
    ];
    entry(
        "example1",
        "y' = 3 sqrt(x) sqrt(y) on the closed first quadrant; every point of the x-axis branches",
        file,
        families,
        vec![
            expect([0.0, 0.0], Some("O1[=]"), Some("non-uniqueness")),
            expect([0.5, 0.0], Some("O1[=]"), Some("non-uniqueness")),
            expect([1.0, 1.0], Some("N"), Some("uniqueness")),
        ],
        vec![],
        &[],
    )
}

fn band_guard(n: u32) -> String {
    format!("x >= {}", a_n(n))
}

/// `psi` as an expression in `x`.
pub fn psi_expr() -> String {
    let mut arms = Vec::new();
    for n in 1..=PSI_BANDS {
        arms.push(format!(
            "{}: max(0, {} - (x - {})^2)^1.5",
            band_guard(n),
            b_n(n),
            d_n(n)
        ));
    }
    arms.push("else: 0".into());
    format!("piecewise({})", arms.join(", "))
}

fn touch_field() -> String {
    let cbrt = "sign(y)*abs(y)^(1/3)";
    let mut arms = Vec::new();
    for n in 1..=PSI_BANDS {
        let s = format!("sqrt(max(0, {} - (x - {})^2))", b_n(n), d_n(n));
        arms.push(format!(
            "{}: -3*(x - {})*max(-{s}, min({s}, {cbrt}))",
            band_guard(n),
            d_n(n)
        ));
    }
    arms.push("else: 0".into());
    format!("piecewise({})", arms.join(", "))
}

fn counterexample1() -> Result<CorpusEntry> {
    let file = ProblemFile {
        name: "counterexample1".into(),
        interior: strings(&["x >= 0", "x <= 1"]),
        curves: vec![],
        field: touch_field(),
        extension: None,
        initial_point: Some([0.0, 0.0]),
        bbox: Some([0.0, 1.0, -0.5, 0.5]),
    };
    let psi = psi_expr();
    // psi is only C^1 at the band ends, so members are checked band by band
    let bands: Vec<(f64, f64, f64)> = (1..=6).map(|n| (n as f64, a_n(n), a_n(n - 1))).collect();
    let families = vec![
        SolutionFamily::new("zero", "0*C", &[(0.0, 0.0, 1.0)]),
        SolutionFamily::new("psi", &psi, &bands),
        SolutionFamily::new("lifted-psi", &format!("{psi} + C"), &[(0.01, a_n(1), a_n(0)), (0.001, a_n(3), a_n(2))]),
        SolutionFamily::new("mirror-psi", &format!("-({psi})"), &bands),
    ];
    let mut constants = Vec::new();
    for n in 1..=6 {
        let pr = psi_props(n)?;
        constants.push((format!("a_{n}"), a_n(n)));
        constants.push((format!("b_{n}"), b_n(n)));
        constants.push((format!("d_{n}"), d_n(n)));
        constants.push((format!("max_psi_{n}"), pr.max));
        constants.push((format!("slope_min_{n}"), pr.slope_at_minus));
        constants.push((format!("slope_plus_{n}"), pr.slope_at_plus));
    }
    entry(
        "counterexample1",
        "y' = h(x, y) built from bumps psi_n on [2^-n, 2^-(n-1)]; y = 0 and y = psi touch at every 2^-n",
        file,
        families,
        vec![expect([0.0, 0.0], Some("N"), None)],
        constants,
        &[
            "field truncated to 0 for x < 2^-12; the dropped bumps are below 2^-39",
            "the field is odd in y, so only y >= 0 needs checking",
            "membership at the origin is inconclusive at default resolution; the touch sequence shows with the closed-form pair",
        ],
    )
}

fn cusp_file(name: &str, extension: Option<ExtensionFile>) -> ProblemFile {
    ProblemFile {
        name: name.into(),
        interior: strings(&["x >= 0", "y >= 0", "y <= x^2"]),
        curves: vec![curve(Side::Upper, "x^2", Some(0.0)), curve(Side::Lower, "0", Some(0.0))],
        field: CUSP_FIELD.into(),
        extension,
        initial_point: Some([0.0, 0.0]),
        bbox: Some([0.0, 2.0, 0.0, 4.0]),
    }
}

fn counterexample2() -> Result<CorpusEntry> {
    let th = theta();
    entry(
        "counterexample2",
        "y' = sqrt(y) - 2 sqrt(x^2 - y) + x on 0 <= y <= x^2; the origin passes the formal test only",
        cusp_file("counterexample2", None),
        vec![SolutionFamily::new("boundary", "x^2 + 0*C", &[(0.0, 0.0, 2.0)])],
        vec![
            expect([0.0, 0.0], Some("B1[=,=]"), Some("formal-only")),
            expect([1.0, 0.5], Some("N"), Some("uniqueness")),
        ],
        vec![("theta".into(), th), ("contact_factor".into(), (-th).exp())],
        &[
            "first integral U(x, y) = x exp(eta(sqrt(y)/x)) with eta(u) the integral of 2v/h(v) over [0, u]",
            "integral curves from (c, 0) run back to the parabola at x = c exp(-theta)",
            "the displayed formulas are followed where the prose cross-references of the equation labels disagree",
        ],
    )
}

fn example2() -> Result<CorpusEntry> {
    let ext = ExtensionFile {
        interior: strings(&["x >= 0"]),
        curves: vec![],
        field: CUSP_EXTENSION.into(),
    };
    let families = vec![
        SolutionFamily::new("boundary", "x^2 + 0*C", &[(0.0, 0.0, 2.0)]),
        SolutionFamily::new("lower-boundary", "-x^2 + 0*C", &[(0.0, 0.0, 2.0)]).extended(),
        SolutionFamily::new("v-level", "-(3*x^2 - 2*C*x - C^2)/4", &[(0.0, 0.0, 2.0), (0.5, 0.5, 2.0)]).extended(),
    ];
    entry(
        "example2",
        "the cusp problem continued to x >= 0; the continuation branches at the origin",
        cusp_file("example2", Some(ext)),
        families,
        vec![expect([0.0, 0.0], Some("B1[=,=]"), Some("hidden-non-uniqueness"))],
        vec![],
        &["first integral below the axis: V(x, y) = 2 sqrt(x^2 + y) - x"],
    )
}

fn example3() -> Result<CorpusEntry> {
    let file = ProblemFile {
        name: "example3".into(),
        interior: strings(&["x <= 0 || abs(y) - x^2 >= 0"]),
        curves: vec![curve(Side::Lower, "x^2", Some(0.0)), curve(Side::Upper, "-x^2", Some(0.0))],
        field: TWO_SHEET_FIELD.into(),
        extension: None,
        initial_point: Some([0.0, 0.0]),
        bbox: Some([-1.0, 2.0, -4.0, 4.0]),
    };
    let families = vec![
        SolutionFamily::new("upper-boundary", "x^2 + 0*C", &[(0.0, 0.0, 2.0)]),
        SolutionFamily::new("lower-boundary", "-x^2 + 0*C", &[(0.0, 0.0, 2.0)]),
        SolutionFamily::new("axis", "0*C", &[(0.0, -1.0, 0.0)]),
        SolutionFamily::new(
            "upper-crossing",
            "piecewise(x <= 0: (C - x)^-2, else: (C - x)^-2 + x^2)",
            &[(1.0, -1.0, 0.9), (2.0, -1.0, 1.8)],
        ),
        SolutionFamily::new("upper-left", "(C - x)^-2", &[(0.0, -1.0, -0.1), (-0.5, -1.5, -0.6)]),
        SolutionFamily::new("lower-right", "-(x - C)^-2 - x^2", &[(0.0, 0.1, 2.0), (1.0, 1.1, 2.0)]),
        SolutionFamily::new(
            "lower-crossing",
            "piecewise(x <= 0: -(x - C)^-2, else: -(x - C)^-2 - x^2)",
            &[(-1.0, -0.9, 2.0), (-0.5, -0.4, 1.0)],
        ),
    ];
    entry(
        "example3",
        "two sheets |y| >= x^2 joined through the half-plane x <= 0; the parabolas leave the origin tangent to each other",
        file,
        families,
        vec![
            expect([0.0, 0.0], Some("unclassified"), Some("non-uniqueness")),
            expect([1.0, 1.0], Some("unclassified"), Some("uniqueness")),
            expect([-0.5, 0.0], Some("N"), Some("uniqueness")),
        ],
        vec![],
        &[
            "the x sign(y) term carries a factor 2 so that y = x^2 and y = -x^2 are solutions",
            "to the right of the origin the domain lies outside the wedge between the curves, which fits no case",
            "at (1, 1) the sheared curve bends into the domain, so it is no boundary function; the Lipschitz route decides",
        ],
    )
}

pub fn a_n(n: u32) -> f64 {
    2f64.powi(-(n as i32))
}

pub fn b_n(n: u32) -> f64 {
    2f64.powi(-2 * (n as i32 + 1))
}

pub fn d_n(n: u32) -> f64 {
    3.0 * 2f64.powi(-(n as i32 + 1))
}

/// The bump `psi_n` on its band `[2^-n, 2^-(n-1)]`.
pub fn psi(n: u32, x: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Input("bands start at n = 1".into()));
    }
    let (lo, hi) = (a_n(n), a_n(n - 1));
    if !(lo..=hi).contains(&x) {
        return Err(Error::Input(format!("x = {x} is outside [{lo}, {hi}]")));
    }
    let r = (b_n(n) - (x - d_n(n)).powi(2)).max(0.0);
    Ok(r.powf(1.5))
}

pub fn psi_slope(n: u32, x: f64) -> f64 {
    let dx = x - d_n(n);
    -3.0 * dx * (b_n(n) - dx * dx).max(0.0).sqrt()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PsiProps {
    pub max: f64,
    pub argmax: f64,
    pub x_minus: f64,
    pub x_plus: f64,
    pub slope_at_minus: f64,
    pub slope_at_plus: f64,
}

pub fn psi_props(n: u32) -> Result<PsiProps> {
    let d = d_n(n);
    let off = (b_n(n) / 2.0).sqrt();
    let (x_minus, x_plus) = (d - off, d + off);
    Ok(PsiProps {
        max: psi(n, d)?,
        argmax: d,
        x_minus,
        x_plus,
        slope_at_minus: psi_slope(n, x_minus),
        slope_at_plus: psi_slope(n, x_plus),
    })
}

/// Denominator of `2v/h(v)`: `h(v) = 2 sqrt(1 - v^2) - 2(1 - v^2) + (1 - v)`.
pub fn h_of_v(v: f64) -> f64 {
    let w = 1.0 - v * v;
    2.0 * w.max(0.0).sqrt() - 2.0 * w + (1.0 - v)
}

/// `eta(u)`, the integral of `2v/h(v)` over `[0, u]` for `u` in `[0, 1]`.
///
/// With `t = sqrt(1 - v)` the integrand becomes
/// `4(1 - t^2) / (2 sqrt(2 - t^2) - t(3 - 2t^2))`, bounded on `[0, 1]`.
pub fn eta(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    let g = |t: f64| 4.0 * (1.0 - t * t) / (2.0 * (2.0 - t * t).sqrt() - t * (3.0 - 2.0 * t * t));
    adaptive_simpson(g, (1.0 - u).sqrt(), 1.0, 1e-13)
}

pub fn theta() -> f64 {
    eta(1.0)
}

/// First integral of the cusp field on `0 <= y <= x^2`, `x > 0`.
pub fn u_integral(x: f64, y: f64) -> f64 {
    let s = (y.max(0.0)).sqrt() / x;
    x * eta(s).exp()
}

/// First integral of the continuation on `-x^2 <= y <= 0`.
pub fn v_integral(x: f64, y: f64) -> f64 {
    2.0 * (x * x + y).max(0.0).sqrt() - x
}

/// Writes every entry as a problem file into `dir`; returns the paths.
pub fn export_all(dir: &std::path::Path) -> Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut out = Vec::new();
    for id in IDS {
        let e = get(id)?;
        let path = dir.join(format!("{id}.json"));
        std::fs::write(&path, e.file.to_json())?;
        out.push(path);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::verify_solution;

    #[test]
    fn all_entries_load() {
        for id in IDS {
            let e = get(id).unwrap();
            assert_eq!(e.id, id);
            let again = ProblemFile::from_json(&e.file.to_json()).unwrap();
            assert_eq!(again, e.file);
        }
        assert!(matches!(get("nope"), Err(Error::UnknownCorpus(_))));
    }

    #[test]
    fn theta_value() {
        let t = theta();
        assert!((1.65..=1.67).contains(&t), "{t}");
        // endpoint value of the original integrand
        assert_eq!(2.0 * 0.0 / h_of_v(0.0), 0.0);
        assert_eq!(h_of_v(0.0), 1.0);
    }

    #[test]
    fn partial_eta_matches_trapezoid() {
        let n = 200_000;
        let f = |v: f64| 2.0 * v / h_of_v(v);
        let step = 0.5 / n as f64;
        let mut s = 0.5 * (f(0.0) + f(0.5));
        for i in 1..n {
            s += f(i as f64 * step);
        }
        s *= step;
        assert!((eta(0.5) - s).abs() < 1e-5, "{} vs {s}", eta(0.5));
    }

    #[test]
    fn eta_is_monotone() {
        let mut prev = 0.0;
        for i in 1..=20 {
            let v = eta(i as f64 / 20.0);
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn psi_constants() {
        assert_eq!(a_n(3), 0.125);
        assert_eq!(b_n(1), 2f64.powi(-4));
        assert_eq!(d_n(1), 0.75);
        let p = psi_props(1).unwrap();
        assert!((p.max - 0.015625).abs() < 1e-15);
        assert_eq!(p.argmax, 0.75);
        for n in 1..=8 {
            assert!(psi(n, a_n(n)).unwrap().abs() < 1e-15);
            assert!(psi(n, a_n(n - 1)).unwrap().abs() < 1e-15);
        }
        let p3 = psi_props(3).unwrap();
        assert!((p3.slope_at_minus - 3.0 * 2f64.powi(-9)).abs() < 1e-15);
        assert!((p3.slope_at_plus + 3.0 * 2f64.powi(-9)).abs() < 1e-15);
        assert!(psi(2, 0.9).is_err());
    }

    #[test]
    fn psi_expression_matches_bands() {
        let e = Expr::parse(&psi_expr()).unwrap();
        for n in 1..=6 {
            for k in 0..=10 {
                let x = a_n(n) + (a_n(n - 1) - a_n(n)) * k as f64 / 10.0;
                assert!((e.eval_x(x).unwrap() - psi(n, x).unwrap()).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn psi_solves_the_touch_field_on_its_bands() {
        let e = get("counterexample1").unwrap();
        let psi = Expr::parse(&psi_expr()).unwrap();
        for n in 1..=6 {
            let r = verify_solution(&psi, &e.problem, a_n(n), a_n(n - 1), 200, 1e-6).unwrap();
            assert!(r.passes, "band {n}: {r:?}");
        }
    }

    #[test]
    fn every_family_member_verifies() {
        for id in IDS {
            let e = get(id).unwrap();
            let ext = e.problem.extended();
            for (label, phi, (a, b), extended) in e.solutions().unwrap() {
                let p = if extended { ext.as_ref().unwrap() } else { &e.problem };
                let r = verify_solution(&phi, p, a, b, 400, 1e-6).unwrap();
                assert!(r.passes, "{id} {label}: {r:?}");
            }
        }
    }

    #[test]
    fn lower_family_has_expected_zeros() {
        for c in [0.5, 1.0, 2.0] {
            let y = |x: f64| -(3.0 * x * x - 2.0 * c * x - c * c) / 4.0;
            assert!(y(-c / 3.0).abs() < 1e-14);
            assert!(y(c).abs() < 1e-14);
            // the level set of V through (c, 0)
            for x in [c, 1.5 * c, 3.0 * c] {
                assert!((v_integral(x, y(x)) - c).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn u_is_constant_on_the_parabola_contact() {
        // along the curve from (c, 0) to (c e^-theta, c^2 e^-2theta)
        let c = 1.0;
        let x = c * (-theta()).exp();
        assert!((u_integral(x, x * x) - c).abs() < 1e-12);
        assert!((u_integral(c, 0.0) - c).abs() < 1e-15);
    }
}
