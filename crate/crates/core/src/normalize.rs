//! Moving an initial point to the origin.
//!
//! The shear `s = f(x0, y0)` is subtracted so that `f0(0, 0) = 0`. Curves
//! through the anchor become functions `b(u)` with `b(0) = 0`; those meeting
//! the orientation and shape requirements are kept as boundary curves, the
//! rest are recorded as irregular.

use crate::domain::{band, diff, Direction, Frame, PointClass, ProblemSpec, Side, FD_STEP, SHAPE_SAMPLES};
use crate::error::{Error, EvalError, Result};
use crate::expr::Expr;

/// Slopes this small at the anchor are treated as zero.
pub const SLOPE_SNAP: f64 = 1e-7;

/// Smallest restriction tried before a curve is declared irregular.
const MIN_CURVE_WINDOW: f64 = 1e-4;

/// A listed curve expressed in a local frame.
#[derive(Debug, Clone)]
pub struct LocalCurve {
    pub id: usize,
    pub side: Side,
    frame: Frame,
    g: Expr,
    pub u_lo: f64,
    pub u_hi: f64,
}

impl LocalCurve {
    pub fn new(id: usize, side: Side, g: Expr, x_min: f64, x_max: f64, frame: Frame) -> LocalCurve {
        let (u_lo, u_hi) = match frame.direction {
            Direction::Right => (x_min - frame.x0, x_max - frame.x0),
            Direction::Left => (frame.x0 - x_max, frame.x0 - x_min),
        };
        LocalCurve {
            id,
            side,
            frame,
            g,
            u_lo,
            u_hi,
        }
    }

    pub fn contains_u(&self, u: f64) -> bool {
        u >= self.u_lo - 1e-12 && u <= self.u_hi + 1e-12
    }

    pub fn b(&self, u: f64) -> Result<f64, EvalError> {
        let (x, _) = self.frame.to_global(u, 0.0);
        let gy = self.g.eval_x(x)?;
        Ok(self.frame.to_local(x, gy).1)
    }

    pub fn deriv(&self, u: f64) -> Result<f64, EvalError> {
        diff(|t| self.b(t), u, FD_STEP, self.u_lo, self.u_hi)
    }
}

/// A curve through the anchor satisfying the boundary-function conditions on
/// `[0, a]`.
#[derive(Debug, Clone)]
pub struct BoundaryCurve {
    pub local: LocalCurve,
    pub a: f64,
    pub slope0: f64,
    /// Convex for an upper curve, concave for a lower one.
    pub convex_flag: bool,
}

#[derive(Debug, Clone, PartialEq)]
enum Defect {
    NotAnchored(f64),
    Orientation(f64),
    Shape(f64),
    SlopeBound(f64),
    Escape(f64),
    Eval(EvalError),
}

impl Defect {
    fn describe(&self) -> String {
        match self {
            Defect::NotAnchored(b0) => format!("does not pass through the anchor (b(0) = {b0:e})"),
            Defect::Orientation(s) => format!("slope {s} at the anchor points into the domain"),
            Defect::Shape(u) => format!("wrong convexity near u = {u}"),
            Defect::SlopeBound(u) => format!("slope falls below half its initial value at u = {u}"),
            Defect::Escape(a) => format!("leaves the diagonal band at u = {a}"),
            Defect::Eval(e) => format!("not evaluable: {e}"),
        }
    }

    /// Orientation and evaluation defects do not go away on a shorter window.
    fn fatal(&self) -> bool {
        matches!(self, Defect::NotAnchored(_) | Defect::Orientation(_) | Defect::Eval(_))
    }
}

impl From<EvalError> for Defect {
    fn from(e: EvalError) -> Self {
        Defect::Eval(e)
    }
}

fn initial_slope(c: &LocalCurve, a: f64) -> Result<f64, EvalError> {
    let h = FD_STEP.min(a / 4.0);
    let s = (-3.0 * c.b(0.0)? + 4.0 * c.b(h)? - c.b(2.0 * h)?) / (2.0 * h);
    Ok(if s.abs() <= SLOPE_SNAP { 0.0 } else { s })
}

fn convex_on(c: &LocalCurve, a: f64, sign: f64) -> Result<Option<f64>, EvalError> {
    let n = SHAPE_SAMPLES;
    let h = a / n as f64;
    let floor = 1e-14 * (1.0 + c.frame.y0.abs() + c.frame.shear.abs() * a);
    let mut prev = c.b(0.0)?;
    let mut cur = c.b(h)?;
    for i in 1..n {
        let next = c.b((i + 1) as f64 * h)?;
        let d2 = sign * (prev - 2.0 * cur + next);
        let tol = 1e-9 * (prev.abs() + 2.0 * cur.abs() + next.abs()) + floor;
        if d2 < -tol {
            return Ok(Some(i as f64 * h));
        }
        prev = cur;
        cur = next;
    }
    Ok(None)
}

fn check(c: &LocalCurve, a: f64) -> Result<(f64, bool), Defect> {
    let b0 = c.b(0.0)?;
    if b0.abs() > 10.0 * band(c.frame.y0) {
        return Err(Defect::NotAnchored(b0));
    }
    let out = c.side.outward();
    let slope0 = initial_slope(c, a)?;
    if out * slope0 < 0.0 {
        return Err(Defect::Orientation(slope0));
    }
    let convex = convex_on(c, a, out)?;
    if slope0 == 0.0 {
        if let Some(u) = convex {
            return Err(Defect::Shape(u));
        }
        if c.b(a)?.abs() > a {
            return Err(Defect::Escape(a));
        }
    } else {
        let tau = slope0.abs() / 2.0;
        let n = SHAPE_SAMPLES;
        for i in 1..=n {
            let u = a * i as f64 / n as f64;
            if out * c.deriv(u)? < tau {
                return Err(Defect::SlopeBound(u));
            }
        }
    }
    Ok((slope0, convex.is_none()))
}

impl BoundaryCurve {
    /// Validates `local` on `[0, a]`.
    pub fn new(local: LocalCurve, a: f64) -> Result<BoundaryCurve> {
        if !(a > 0.0) || a > local.u_hi + 1e-12 {
            return Err(Error::Input(format!("curve window {a} outside the curve's range")));
        }
        match check(&local, a) {
            Ok((slope0, convex_flag)) => Ok(BoundaryCurve {
                local,
                a,
                slope0,
                convex_flag,
            }),
            Err(d) => Err(Error::Input(format!("curve {} {}", local.id, d.describe()))),
        }
    }

    pub fn id(&self) -> usize {
        self.local.id
    }

    pub fn side(&self) -> Side {
        self.local.side
    }

    pub fn b(&self, u: f64) -> Result<f64, EvalError> {
        self.local.b(u)
    }

    pub fn deriv(&self, u: f64) -> Result<f64, EvalError> {
        self.local.deriv(u)
    }

    /// Subcase symbol: `>`/`<` for a sloped curve, `=` for a tangent one.
    pub fn slope_symbol(&self) -> &'static str {
        match (self.side(), self.slope0 == 0.0) {
            (_, true) => "=",
            (Side::Upper, false) => ">",
            (Side::Lower, false) => "<",
        }
    }
}

#[derive(Debug, Clone)]
pub struct IrregularCurve {
    pub local: LocalCurve,
    pub reason: String,
}

/// A problem seen from an anchor, in one direction.
#[derive(Debug, Clone)]
pub struct NormalizedProblem<'p> {
    pub problem: &'p ProblemSpec,
    pub frame: Frame,
    /// Every listed curve in local coordinates, indexed by curve id.
    pub locals: Vec<LocalCurve>,
    pub curves: Vec<BoundaryCurve>,
    pub irregular: Vec<IrregularCurve>,
    pub curve_window: f64,
}

/// Normalizes `p` at `anchor` for the direction to the right.
pub fn to_origin<'p>(p: &'p ProblemSpec, anchor: (f64, f64)) -> Result<NormalizedProblem<'p>> {
    to_origin_with(p, anchor, Direction::Right, 1.0)
}

pub fn to_origin_with<'p>(
    p: &'p ProblemSpec,
    anchor: (f64, f64),
    direction: Direction,
    curve_window: f64,
) -> Result<NormalizedProblem<'p>> {
    let (x0, y0) = anchor;
    if !p.classify_point(x0, y0).in_domain() {
        return Err(Error::OutsideDomain(x0, y0));
    }
    let shear = p.eval(x0, y0)?;
    let frame = Frame {
        x0,
        y0,
        shear,
        direction,
    };
    Ok(build(p, frame, curve_window))
}

/// The same anchor looking left; applying it twice returns the original.
pub fn reflect_left<'p>(np: &NormalizedProblem<'p>) -> NormalizedProblem<'p> {
    let frame = Frame {
        direction: np.frame.direction.flip(),
        ..np.frame
    };
    build(np.problem, frame, np.curve_window)
}

fn build<'p>(p: &'p ProblemSpec, frame: Frame, curve_window: f64) -> NormalizedProblem<'p> {
    let locals: Vec<LocalCurve> = p
        .region
        .curves()
        .iter()
        .enumerate()
        .map(|(i, c)| LocalCurve::new(i, c.side, c.b.clone(), c.x_min, c.x_max, frame))
        .collect();
    let mut curves = Vec::new();
    let mut irregular = Vec::new();
    for lc in &locals {
        if !lc.contains_u(0.0) || lc.u_hi <= 1e-12 {
            continue;
        }
        match lc.b(0.0) {
            Ok(b0) if b0.abs() <= band(frame.y0) => {}
            _ => continue,
        }
        let mut a = lc.u_hi.min(curve_window);
        loop {
            match check(lc, a) {
                Ok((slope0, convex_flag)) => {
                    curves.push(BoundaryCurve {
                        local: lc.clone(),
                        a,
                        slope0,
                        convex_flag,
                    });
                    break;
                }
                Err(d) if d.fatal() || a / 2.0 < MIN_CURVE_WINDOW => {
                    irregular.push(IrregularCurve {
                        local: lc.clone(),
                        reason: d.describe(),
                    });
                    break;
                }
                Err(_) => a /= 2.0,
            }
        }
    }
    NormalizedProblem {
        problem: p,
        frame,
        locals,
        curves,
        irregular,
        curve_window,
    }
}

impl<'p> NormalizedProblem<'p> {
    #[inline]
    pub fn f0(&self, u: f64, v: f64) -> Result<f64, EvalError> {
        let (x, y) = self.frame.to_global(u, v);
        Ok(self.frame.direction.sign() * (self.problem.eval(x, y)? - self.frame.shear))
    }

    pub fn classify(&self, u: f64, v: f64) -> PointClass {
        let (x, y) = self.frame.to_global(u, v);
        self.problem.classify_point(x, y)
    }

    pub fn direction(&self) -> Direction {
        self.frame.direction
    }

    pub fn upper(&self) -> Option<&BoundaryCurve> {
        self.curves.iter().find(|c| c.side() == Side::Upper)
    }

    pub fn lower(&self) -> Option<&BoundaryCurve> {
        self.curves.iter().find(|c| c.side() == Side::Lower)
    }

    /// Ids of all curves through the anchor heading in this direction.
    pub fn anchored_ids(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self
            .curves
            .iter()
            .map(|c| c.id())
            .chain(self.irregular.iter().map(|c| c.local.id))
            .collect();
        ids.sort_unstable();
        ids
    }

    fn sup_abs_f0(&self, delta: f64, n: usize) -> f64 {
        let mut sup = 0.0f64;
        for i in 0..n {
            let u = -delta + 2.0 * delta * i as f64 / (n - 1) as f64;
            for j in 0..n {
                let v = -delta + 2.0 * delta * j as f64 / (n - 1) as f64;
                if self.classify(u, v).in_domain() {
                    if let Ok(f) = self.f0(u, v) {
                        sup = sup.max(f.abs());
                    }
                }
            }
        }
        let anchored = self.anchored_ids();
        for id in anchored {
            let c = &self.locals[id];
            for i in 0..=n {
                let u = delta * i as f64 / n as f64;
                if !c.contains_u(u) {
                    break;
                }
                if let Ok(b) = c.b(u) {
                    if b.abs() <= delta {
                        if let Ok(f) = self.f0(u, b) {
                            sup = sup.max(f.abs());
                        }
                    }
                }
            }
        }
        sup
    }

    /// Largest `delta <= window` (up to bisection accuracy) with
    /// `sup |f0| <= tau` over the sampled box `[-delta, delta]^2` within the
    /// domain.
    pub fn continuity_modulus(&self, tau: f64, window: f64) -> Result<f64> {
        const FLOOR: f64 = 1e-6;
        const GRID: usize = 65;
        if !(tau > 0.0) || !(window > 0.0) {
            return Err(Error::Input(format!("modulus needs tau > 0 and window > 0, got {tau}, {window}")));
        }
        let mut delta = window;
        if self.sup_abs_f0(delta, GRID) <= tau {
            return Ok(delta);
        }
        loop {
            delta /= 2.0;
            if delta < FLOOR {
                return Err(Error::Numeric(format!("continuity modulus for tau = {tau} falls below {FLOOR}")));
            }
            if self.sup_abs_f0(delta, GRID) <= tau {
                break;
            }
        }
        let (mut lo, mut hi) = (delta, 2.0 * delta);
        for _ in 0..24 {
            let mid = 0.5 * (lo + hi);
            if self.sup_abs_f0(mid, GRID) <= tau {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }
}
