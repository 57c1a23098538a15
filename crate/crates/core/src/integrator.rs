//! Fixed-step Euler polygons that respect the good boundary.
//!
//! A step that would leave the domain across a listed curve is projected back
//! onto that curve, and a node on a curve slides along it while the field
//! points outward or along it. Traces are kept in the local frame of the
//! normalized problem they were computed for.

use std::fmt;
use std::fmt::Write as _;

use serde::Serialize;

use crate::domain::{band, diff, Frame, PointClass, ProblemSpec};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::normalize::NormalizedProblem;
use crate::peano::PeanoGeometry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    /// Leave a curve when the field is tangent to it.
    Interior,
    /// Stay on a curve when the field is tangent to it.
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObstructionMode {
    /// Terminate when the field points out of the domain along a curve.
    Stop,
    /// Keep sliding and record where that first happened.
    Slide,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EulerOptions {
    pub policy: Policy,
    pub mode: ObstructionMode,
    /// Constant added to the field.
    pub bias: f64,
}

impl EulerOptions {
    pub fn new(policy: Policy) -> EulerOptions {
        EulerOptions {
            policy,
            mode: ObstructionMode::Stop,
            bias: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "curve", rename_all = "kebab-case")]
pub enum NodeFlag {
    Interior,
    OnCurve(usize),
    /// On the good boundary but not on a listed curve.
    Boundary,
}

impl fmt::Display for NodeFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeFlag::Interior => f.write_str("interior"),
            NodeFlag::OnCurve(id) => write!(f, "curve:{id}"),
            NodeFlag::Boundary => f.write_str("boundary"),
        }
    }
}

impl NodeFlag {
    fn of(class: PointClass) -> Option<NodeFlag> {
        match class {
            PointClass::Interior => Some(NodeFlag::Interior),
            PointClass::Boundary { curve: Some(id), .. } => Some(NodeFlag::OnCurve(id)),
            PointClass::Boundary { curve: None, .. } => Some(NodeFlag::Boundary),
            PointClass::Outside => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerminalReason {
    ReachedSegmentEnd,
    LeftThroughBadBoundary,
    ObstructionCondition4,
    FieldDomainError,
}

impl TerminalReason {
    pub fn as_str(self) -> &'static str {
        match self {
            TerminalReason::ReachedSegmentEnd => "reached-segment-end",
            TerminalReason::LeftThroughBadBoundary => "left-through-bad-boundary",
            TerminalReason::ObstructionCondition4 => "obstruction-condition4",
            TerminalReason::FieldDomainError => "field-domain-error",
        }
    }
}

/// A polygon on the grid `u_n = n * step` of a local frame.
#[derive(Debug, Clone)]
pub struct Trace {
    pub frame: Frame,
    pub step: f64,
    pub v: Vec<f64>,
    pub flags: Vec<NodeFlag>,
    pub terminal: TerminalReason,
    /// First abscissa at which the unbiased field pointed outward along the
    /// curve the trace was sliding on.
    pub obstruction: Option<f64>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    #[inline]
    pub fn u(&self, i: usize) -> f64 {
        i as f64 * self.step
    }

    pub fn span(&self) -> f64 {
        self.u(self.len().saturating_sub(1))
    }

    pub fn global(&self, i: usize) -> (f64, f64) {
        self.frame.to_global(self.u(i), self.v[i])
    }

    pub fn completed(&self) -> bool {
        self.terminal == TerminalReason::ReachedSegmentEnd
    }

    /// Samples `v = g(u)` on the grid, classifying each node.
    pub fn sampled<G>(np: &NormalizedProblem, step: f64, nodes: usize, g: G) -> Trace
    where
        G: Fn(f64) -> Option<f64>,
    {
        let mut t = Trace {
            frame: np.frame,
            step,
            v: Vec::with_capacity(nodes),
            flags: Vec::with_capacity(nodes),
            terminal: TerminalReason::ReachedSegmentEnd,
            obstruction: None,
        };
        for i in 0..nodes {
            let u = i as f64 * step;
            let Some(v) = g(u) else {
                t.terminal = TerminalReason::FieldDomainError;
                break;
            };
            match NodeFlag::of(np.classify(u, v)) {
                Some(flag) => {
                    t.v.push(v);
                    t.flags.push(flag);
                }
                None => {
                    t.terminal = TerminalReason::LeftThroughBadBoundary;
                    break;
                }
            }
        }
        t
    }

    /// The curve `id` itself, as far as it stays in the domain.
    pub fn curve_follow(np: &NormalizedProblem, id: usize, span: f64, eps: f64) -> Trace {
        let (step, n) = grid(span, eps);
        let c = &np.locals[id];
        let last = ((c.u_hi / step).floor() as usize).min(n);
        let mut t = Trace::sampled(np, step, last + 1, |u| c.b(u).ok());
        for f in t.flags.iter_mut() {
            if *f != NodeFlag::Interior {
                *f = NodeFlag::OnCurve(id);
            }
        }
        t
    }

    /// Graph of a global closed form `y = phi(x)` on the grid.
    pub fn closed_form(np: &NormalizedProblem, phi: &Expr, span: f64, eps: f64) -> Trace {
        let (step, n) = grid(span, eps);
        let frame = np.frame;
        Trace::sampled(np, step, n + 1, |u| {
            let (x, _) = frame.to_global(u, 0.0);
            phi.eval_x(x).ok().map(|y| frame.to_local(x, y).1)
        })
    }

    pub fn truncate(&mut self, len: usize) {
        self.v.truncate(len);
        self.flags.truncate(len);
    }

    /// `x,y,flag` rows in global coordinates. The last row's flag carries the
    /// terminal reason.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,flag\n");
        for i in 0..self.len() {
            let (x, y) = self.global(i);
            let _ = write!(out, "{x},{y},{}", self.flags[i]);
            if i + 1 == self.len() {
                let _ = write!(out, "|end:{}", self.terminal.as_str());
            }
            out.push('\n');
        }
        out
    }
}

/// Step and step count for `span` with nominal step `eps`.
pub fn grid(span: f64, eps: f64) -> (f64, usize) {
    let n = ((span / eps).round() as usize).max(1);
    (span / n as f64, n)
}

/// Euler polygon on the Peano interval of `geom`, stopping at an obstruction.
pub fn euler(np: &NormalizedProblem, geom: &PeanoGeometry, eps: f64, policy: Policy) -> Result<Trace> {
    euler_with(np, geom.h, eps, &EulerOptions::new(policy))
}

pub fn euler_with(np: &NormalizedProblem, span: f64, eps: f64, opts: &EulerOptions) -> Result<Trace> {
    if !(span > 0.0) || !(eps > 0.0) || !span.is_finite() {
        return Err(Error::Input(format!("Euler needs span > 0 and eps > 0, got {span}, {eps}")));
    }
    let (step, n) = grid(span, eps);
    let anchored = np.anchored_ids();
    let start = np.classify(0.0, 0.0);
    let Some(flag0) = NodeFlag::of(start) else {
        return Err(Error::OutsideDomain(np.frame.x0, np.frame.y0));
    };
    let mut on = if anchored.len() == 1 { Some(anchored[0]) } else { None };
    let mut t = Trace {
        frame: np.frame,
        step,
        v: Vec::with_capacity(n + 1),
        flags: Vec::with_capacity(n + 1),
        terminal: TerminalReason::ReachedSegmentEnd,
        obstruction: None,
    };
    t.v.push(0.0);
    t.flags.push(if on.is_some() { NodeFlag::OnCurve(anchored[0]) } else { flag0 });

    for k in 0..n {
        let u = k as f64 * step;
        let un = (k + 1) as f64 * step;
        let v = t.v[k];
        let Ok(f) = np.f0(u, v) else {
            t.terminal = TerminalReason::FieldDomainError;
            break;
        };
        let fb = f + opts.bias;
        let mut next: Option<(f64, NodeFlag, Option<usize>)> = None;

        if let Some(id) = on {
            let c = &np.locals[id];
            if c.contains_u(un) {
                let Ok(bp) = c.deriv(u) else {
                    t.terminal = TerminalReason::FieldDomainError;
                    break;
                };
                let out = c.side.outward();
                let tol = 1e-6 * (1.0 + bp.abs());
                let biased = out * (fb - bp);
                if biased <= tol {
                    if biased >= -tol && opts.policy == Policy::Interior {
                        let vc = v + step * fb - out * step * step;
                        if np.classify(un, vc) == PointClass::Interior {
                            next = Some((vc, NodeFlag::Interior, None));
                        }
                    }
                } else {
                    // the step leaves through the curve: slide instead
                    if out * (f - bp) > tol {
                        if t.obstruction.is_none() {
                            t.obstruction = Some(u);
                        }
                        if opts.mode == ObstructionMode::Stop {
                            t.terminal = TerminalReason::ObstructionCondition4;
                            break;
                        }
                    }
                    let Ok(vb) = c.b(un) else {
                        t.terminal = TerminalReason::FieldDomainError;
                        break;
                    };
                    if !np.classify(un, vb).in_domain() {
                        t.terminal = TerminalReason::LeftThroughBadBoundary;
                        break;
                    }
                    next = Some((vb, NodeFlag::OnCurve(id), Some(id)));
                }
                if next.is_none() && biased >= -tol && opts.policy == Policy::Boundary {
                    let Ok(vb) = c.b(un) else {
                        t.terminal = TerminalReason::FieldDomainError;
                        break;
                    };
                    if np.classify(un, vb).in_domain() {
                        next = Some((vb, NodeFlag::OnCurve(id), Some(id)));
                    }
                }
                if next.is_none() && biased >= -tol && opts.policy == Policy::Interior {
                    // the nudge left the domain; stay on the curve
                    if let Ok(vb) = c.b(un) {
                        if np.classify(un, vb).in_domain() {
                            next = Some((vb, NodeFlag::OnCurve(id), Some(id)));
                        }
                    }
                }
            }
        }

        let (vn, flag, on_next) = match next {
            Some(s) => s,
            None => {
                let vc = v + step * fb;
                let class = np.classify(un, vc);
                match NodeFlag::of(class) {
                    Some(flag) => {
                        let curve = match flag {
                            NodeFlag::OnCurve(id) => Some(id),
                            _ => None,
                        };
                        (vc, flag, curve)
                    }
                    None => match crossing(np, u, v, un, vc) {
                        Some((id, vb)) => (vb, NodeFlag::OnCurve(id), Some(id)),
                        None => {
                            t.terminal = TerminalReason::LeftThroughBadBoundary;
                            break;
                        }
                    },
                }
            }
        };
        t.v.push(vn);
        t.flags.push(flag);
        on = on_next;
    }
    Ok(t)
}

/// Listed curve crossed by the step from `(u, v)` to `(un, vc)`, with the
/// projection of the new node onto it, when that projection is in the domain.
fn crossing(np: &NormalizedProblem, u: f64, v: f64, un: f64, vc: f64) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64, f64)> = None;
    for c in &np.locals {
        if !c.contains_u(u) || !c.contains_u(un) {
            continue;
        }
        let (Ok(b0), Ok(b1)) = (c.b(u), c.b(un)) else {
            continue;
        };
        let out = c.side.outward();
        let before = out * (v - b0);
        let after = out * (vc - b1);
        if before <= band(v) && after > 0.0 && best.is_none_or(|(_, _, d)| after > d) {
            if np.classify(un, b1).in_domain() {
                best = Some((c.id, b1, after));
            }
        }
    }
    best.map(|(id, b, _)| (id, b))
}

/// Largest trapezoid defect `|dv/du - (f0(n) + f0(n+1)) / 2|` over the
/// segments of `t`. Infinite if the field cannot be evaluated at a node.
pub fn residual(t: &Trace, np: &NormalizedProblem) -> f64 {
    let mut worst = 0.0f64;
    let mut prev = match np.f0(0.0, t.v.first().copied().unwrap_or(0.0)) {
        Ok(f) => f,
        Err(_) => return f64::INFINITY,
    };
    for i in 1..t.len() {
        let Ok(f) = np.f0(t.u(i), t.v[i]) else {
            return f64::INFINITY;
        };
        let slope = (t.v[i] - t.v[i - 1]) / t.step;
        worst = worst.max((slope - 0.5 * (prev + f)).abs());
        prev = f;
    }
    worst
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub graph_in_domain: bool,
    pub max_defect: f64,
    /// First sample where the graph left the domain or the defect exceeded
    /// the tolerance.
    pub first_bad: Option<f64>,
    pub passes: bool,
}

/// Checks that `y = phi(x)` solves the problem on `[a, b]`: the graph stays
/// in the domain and `|phi' - f(x, phi)| <= tol` at sampled midpoints.
pub fn verify_solution(phi: &Expr, p: &ProblemSpec, a: f64, b: f64, samples: usize, tol: f64) -> Result<VerifyReport> {
    if !(a < b) || samples == 0 {
        return Err(Error::Input(format!("bad verification interval [{a}, {b}]")));
    }
    let mut report = VerifyReport {
        graph_in_domain: true,
        max_defect: 0.0,
        first_bad: None,
        passes: true,
    };
    for i in 0..samples {
        let x = a + (i as f64 + 0.5) * (b - a) / samples as f64;
        let y = phi.eval_x(x)?;
        let dy = diff(|t| phi.eval_x(t), x, 1e-6, a, b)?;
        let bad = if !p.classify_point(x, y).in_domain() {
            report.graph_in_domain = false;
            true
        } else {
            let d = match p.eval(x, y) {
                Ok(f) => (dy - f).abs(),
                Err(_) => f64::INFINITY,
            };
            report.max_defect = report.max_defect.max(d);
            d > tol
        };
        if bad && report.first_bad.is_none() {
            report.first_bad = Some(x);
        }
    }
    report.passes = report.first_bad.is_none();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{CurveSpec, Region, Side};
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

    fn cusp() -> ProblemSpec {
        problem(
            "sqrt(y) - 2*sqrt(x^2 - y) + x",
            &["x >= 0", "y >= 0", "y <= x^2"],
            &[(Side::Upper, "x^2"), (Side::Lower, "0")],
        )
    }

    #[test]
    fn policies_split_at_the_quadrant_corner() {
        let p = quadrant();
        let np = to_origin(&p, (0.0, 0.0)).unwrap();
        let stay = euler_with(&np, 0.3, 1e-3, &EulerOptions::new(Policy::Boundary)).unwrap();
        assert!(stay.completed());
        assert!(stay.v.iter().all(|v| *v == 0.0));
        let leave = euler_with(&np, 0.3, 1e-3, &EulerOptions::new(Policy::Interior)).unwrap();
        assert!(leave.completed());
        let i = leave.len() - 1;
        let u = leave.u(i);
        assert!((leave.v[i] - u * u * u).abs() < 1e-2, "{} vs {}", leave.v[i], u * u * u);
    }

    #[test]
    fn obstruction_stops_or_is_recorded() {
        let p = cusp();
        let np = to_origin(&p, (0.0, 0.0)).unwrap();
        let stop = euler_with(&np, 0.5, 1e-3, &EulerOptions::new(Policy::Boundary)).unwrap();
        assert_eq!(stop.terminal, TerminalReason::ObstructionCondition4);
        let slide = euler_with(
            &np,
            0.5,
            1e-3,
            &EulerOptions {
                mode: ObstructionMode::Slide,
                ..EulerOptions::new(Policy::Boundary)
            },
        )
        .unwrap();
        assert!(slide.completed());
        assert!(slide.obstruction.is_some());
    }

    #[test]
    fn biased_step_slides_on_the_parabola() {
        let p = cusp();
        let np = to_origin(&p, (0.0, 0.0)).unwrap();
        let opts = EulerOptions {
            policy: Policy::Interior,
            mode: ObstructionMode::Slide,
            bias: 0.01,
        };
        let t = euler_with(&np, 0.5, 1e-3, &opts).unwrap();
        assert!(t.completed());
        assert!(t.obstruction.is_none());
        for i in 0..t.len() {
            let u = t.u(i);
            assert!((t.v[i] - u * u).abs() < 1e-12);
        }
    }

    #[test]
    fn interior_trace_from_parabola_ends_on_the_axis() {
        let p = cusp();
        let np = to_origin(&p, (1.0, 1.0)).unwrap();
        let t = euler_with(&np, 4.5, 1e-4, &EulerOptions::new(Policy::Interior)).unwrap();
        // the trace eventually reaches y = 0 and the field points out there
        assert_eq!(t.terminal, TerminalReason::ObstructionCondition4);
        assert!(t.flags.iter().all(|f| *f != NodeFlag::Boundary));
    }

    #[test]
    fn nodes_stay_in_domain() {
        let p = cusp();
        let np = to_origin(&p, (0.5, 0.1)).unwrap();
        let t = euler_with(&np, 1.0, 1e-3, &EulerOptions::new(Policy::Boundary)).unwrap();
        for i in 0..t.len() {
            let (x, y) = t.global(i);
            assert!(p.classify_point(x, y).in_domain());
        }
    }

    #[test]
    fn residual_of_exact_solution_is_small() {
        let p = quadrant();
        let np = to_origin(&p, (0.0, 0.0)).unwrap();
        let t = Trace::closed_form(&np, &Expr::parse("x^3").unwrap(), 0.3, 1e-3);
        assert!(residual(&t, &np) < 1e-5);
        let zero = Trace::curve_follow(&np, 0, 0.3, 1e-3);
        assert_eq!(residual(&zero, &np), 0.0);
    }

    #[test]
    fn csv_lists_global_nodes() {
        let p = quadrant();
        let np = to_origin(&p, (0.0, 0.0)).unwrap();
        let t = euler_with(&np, 0.01, 5e-3, &EulerOptions::new(Policy::Boundary)).unwrap();
        let csv = t.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "x,y,flag");
        assert_eq!(lines.len(), 4);
        assert!(lines[3].ends_with("|end:reached-segment-end"));
    }

    #[test]
    fn verify_closed_forms() {
        let p = quadrant();
        let ok = verify_solution(&Expr::parse("x^3").unwrap(), &p, 0.0, 2.0, 200, 1e-6).unwrap();
        assert!(ok.passes, "{ok:?}");
        let bad = verify_solution(&Expr::parse("x^2").unwrap(), &p, 0.0, 2.0, 200, 1e-6).unwrap();
        assert!(!bad.passes);
        let outside = verify_solution(&Expr::parse("-x").unwrap(), &p, 0.0, 1.0, 10, 1e-6).unwrap();
        assert!(!outside.graph_in_domain);
        assert!(verify_solution(&Expr::parse("ln(x - 5)").unwrap(), &p, 0.0, 1.0, 10, 1e-6).is_err());
    }

    #[test]
    fn bad_inputs() {
        let p = quadrant();
        let np = to_origin(&p, (0.0, 0.0)).unwrap();
        assert!(euler_with(&np, 0.0, 1e-3, &EulerOptions::new(Policy::Boundary)).is_err());
        assert!(euler_with(&np, 1.0, -1.0, &EulerOptions::new(Policy::Boundary)).is_err());
    }
}
