//! Outer approximations of the extremal solutions, branching detection and
//! the search for pairs of distinct solutions through a point.
//!
//! The upper family integrates `f0 + eta_k`, the lower one `f0 - eta_k`, with
//! `eta_k = eta_0 2^-k`. Running minima (maxima) of the upper (lower) family
//! shrink towards the maximal (minimal) solution and the last two are
//! combined by Richardson extrapolation.

use rayon::prelude::*;
use serde::Serialize;

use crate::classifier::classify;
use crate::config::{ClassifierConfig, EnvelopeConfig, PeanoConfig};
use crate::domain::ProblemSpec;
use crate::error::{Error, Result};
use crate::integrator::{euler_with, residual, EulerOptions, NodeFlag, ObstructionMode, Policy, Trace};
use crate::normalize::{to_origin_with, NormalizedProblem};
use crate::peano::{boundary_triangle, PeanoGeometry};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombineMode {
    Min,
    Max,
}

/// Pointwise minimum or maximum of traces on the same grid.
pub fn combine(traces: &[&Trace], mode: CombineMode) -> Result<Trace> {
    let Some(first) = traces.first() else {
        return Err(Error::Input("nothing to combine".into()));
    };
    for t in traces {
        if t.len() != first.len() || (t.step - first.step).abs() > 1e-15 * first.step || t.frame != first.frame {
            return Err(Error::Input("traces live on different grids".into()));
        }
    }
    let mut out = (*first).clone();
    out.obstruction = None;
    for t in &traces[1..] {
        for i in 0..out.len() {
            let better = match mode {
                CombineMode::Min => t.v[i] < out.v[i],
                CombineMode::Max => t.v[i] > out.v[i],
            };
            if better {
                out.v[i] = t.v[i];
                out.flags[i] = t.flags[i];
            } else if t.v[i] == out.v[i] && matches!(t.flags[i], NodeFlag::OnCurve(_)) {
                out.flags[i] = t.flags[i];
            }
        }
        if !t.completed() {
            out.terminal = t.terminal;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BranchKind {
    /// Separated by more than the tolerance on all of `(x0 + delta/10, x0 + delta)`.
    BranchRight,
    /// Every dyadic window `(x0, x0 + delta 2^-j]` shows both a separation and
    /// a return below the tolerance.
    TouchSequence,
    Coincide,
    /// Equal near `x0`, separated further out.
    DivergesLater,
}

/// Compares two traces on the same grid near `x0` (local abscissa).
pub fn detect_branching(t1: &Trace, t2: &Trace, x0: f64, delta: f64, tol: f64, depth: u32) -> Result<BranchKind> {
    if (t1.step - t2.step).abs() > 1e-15 * t1.step {
        return Err(Error::Input("traces live on different grids".into()));
    }
    let len = t1.len().min(t2.len());
    let step = t1.step;
    let window: Vec<(f64, f64)> = (0..len)
        .map(|i| (i as f64 * step, (t1.v[i] - t2.v[i]).abs()))
        .filter(|(u, _)| *u > x0 + 1e-15 && *u <= x0 + delta * (1.0 + 1e-12))
        .collect();
    if window.is_empty() {
        return Err(Error::Input(format!("no grid points in ({x0}, {}]", x0 + delta)));
    }
    if window.iter().all(|(_, g)| *g <= tol) {
        return Ok(BranchKind::Coincide);
    }
    let far: Vec<f64> = window
        .iter()
        .filter(|(u, _)| *u > x0 + delta / 10.0 && *u < x0 + delta)
        .map(|(_, g)| *g)
        .collect();
    if !far.is_empty() && far.iter().all(|g| *g > tol) {
        return Ok(BranchKind::BranchRight);
    }
    let touch = (0..=depth).all(|j| {
        let w = delta * 0.5f64.powi(j as i32);
        let pts: Vec<f64> = window
            .iter()
            .filter(|(u, _)| *u <= x0 + w * (1.0 + 1e-12))
            .map(|(_, g)| *g)
            .collect();
        pts.iter().any(|g| *g > tol) && pts.iter().any(|g| *g <= tol)
    });
    Ok(if touch {
        BranchKind::TouchSequence
    } else {
        BranchKind::DivergesLater
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvelopeVerdict {
    LocallyUnique,
    NonUniqueBranching,
    NonUniqueTouchSequence,
    LowerNotAttained,
    UpperNotAttained,
    Inconclusive,
}

#[derive(Debug, Clone)]
pub struct EnvelopeReport {
    pub lower: Trace,
    pub upper: Trace,
    pub lower_attained: bool,
    pub upper_attained: bool,
    pub lower_residual: f64,
    pub upper_residual: f64,
    pub lower_obstruction: Option<f64>,
    pub upper_obstruction: Option<f64>,
    pub span: f64,
    pub etas: Vec<f64>,
    pub max_gap: f64,
    pub branch: Option<BranchKind>,
    pub verdict: EnvelopeVerdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeSummary {
    pub verdict: EnvelopeVerdict,
    pub span: f64,
    pub nodes: usize,
    pub etas: Vec<f64>,
    pub lower_attained: bool,
    pub upper_attained: bool,
    pub lower_residual: f64,
    pub upper_residual: f64,
    pub lower_obstruction: Option<f64>,
    pub upper_obstruction: Option<f64>,
    pub max_gap: f64,
    pub branch: Option<BranchKind>,
}

impl EnvelopeReport {
    pub fn summary(&self) -> EnvelopeSummary {
        EnvelopeSummary {
            verdict: self.verdict,
            span: self.span,
            nodes: self.lower.len(),
            etas: self.etas.clone(),
            lower_attained: self.lower_attained,
            upper_attained: self.upper_attained,
            lower_residual: finite_or_max(self.lower_residual),
            upper_residual: finite_or_max(self.upper_residual),
            lower_obstruction: self.lower_obstruction,
            upper_obstruction: self.upper_obstruction,
            max_gap: self.max_gap,
            branch: self.branch,
        }
    }
}

fn finite_or_max(x: f64) -> f64 {
    if x.is_finite() {
        x
    } else {
        f64::MAX
    }
}

/// Bias schedule: halving from `eta0`, raised so the last bias is at least
/// four steps.
pub fn bias_schedule(cfg: &EnvelopeConfig) -> Vec<f64> {
    let k = cfg.k.max(2);
    let eta0 = cfg.eta0.max(4.0 * cfg.eps * 2f64.powi(k as i32));
    (1..=k).map(|j| eta0 * 0.5f64.powi(j as i32)).collect()
}

fn extrapolate(np: &NormalizedProblem, last: &Trace, prev: &Trace) -> Trace {
    let mut out = last.clone();
    for i in 0..out.len() {
        let e = 2.0 * last.v[i] - prev.v[i];
        let class = np.classify(last.u(i), e);
        if class.in_domain() {
            out.v[i] = e;
            out.flags[i] = match class {
                crate::domain::PointClass::Boundary { curve: Some(id), .. } => NodeFlag::OnCurve(id),
                crate::domain::PointClass::Boundary { curve: None, .. } => NodeFlag::Boundary,
                _ => NodeFlag::Interior,
            };
        }
    }
    out
}

/// Span used for exploratory integration from a geometry.
pub fn span_for(geom: &PeanoGeometry, cfg: &EnvelopeConfig) -> Result<f64> {
    let span = cfg.span.unwrap_or(geom.h);
    if span > 0.0 && span.is_finite() {
        Ok(span)
    } else {
        Err(Error::Numeric("no positive existence length to integrate on".into()))
    }
}

pub fn envelopes(np: &NormalizedProblem, geom: &PeanoGeometry, cfg: &EnvelopeConfig) -> Result<EnvelopeReport> {
    let span = span_for(geom, cfg)?;
    let etas = bias_schedule(cfg);
    let k = etas.len();
    let jobs: Vec<(bool, f64)> = etas
        .iter()
        .map(|e| (true, *e))
        .chain(etas.iter().map(|e| (false, *e)))
        .collect();
    let members: Vec<Trace> = jobs
        .par_iter()
        .map(|&(upper, eta)| {
            let opts = EulerOptions {
                policy: if upper { Policy::Interior } else { Policy::Boundary },
                mode: ObstructionMode::Slide,
                bias: if upper { eta } else { -eta },
            };
            euler_with(np, span, cfg.eps, &opts)
        })
        .collect::<Result<_>>()?;
    let (mut ups, mut lows) = (members[..k].to_vec(), members[k..].to_vec());
    let upper_complete = ups.iter().all(Trace::completed);
    let lower_complete = lows.iter().all(Trace::completed);
    let len = ups.iter().chain(lows.iter()).map(Trace::len).min().unwrap_or(0);
    if len < 2 {
        return Err(Error::Numeric("envelope members stopped at the initial point".into()));
    }
    for t in ups.iter_mut().chain(lows.iter_mut()) {
        t.truncate(len);
    }
    let up_refs: Vec<&Trace> = ups.iter().collect();
    let low_refs: Vec<&Trace> = lows.iter().collect();
    let u_last = combine(&up_refs, CombineMode::Min)?;
    let u_prev = combine(&up_refs[..k - 1], CombineMode::Min)?;
    let l_last = combine(&low_refs, CombineMode::Max)?;
    let l_prev = combine(&low_refs[..k - 1], CombineMode::Max)?;
    let mut upper = extrapolate(np, &u_last, &u_prev);
    let mut lower = extrapolate(np, &l_last, &l_prev);
    upper.terminal = u_last.terminal;
    lower.terminal = l_last.terminal;
    for i in 0..len {
        if lower.v[i] > upper.v[i] {
            let m = 0.5 * (lower.v[i] + upper.v[i]);
            lower.v[i] = m;
            upper.v[i] = m;
        }
    }

    let lower_residual = residual(&lower, np);
    let upper_residual = residual(&upper, np);
    let attain_tol = cfg.attain_rel * (1.0 + geom.m);
    let lower_obstruction = lows[k - 1].obstruction;
    let upper_obstruction = ups[k - 1].obstruction;
    let lower_attained = lower_complete && lower_obstruction.is_none() && lower_residual <= attain_tol;
    let upper_attained = upper_complete && upper_obstruction.is_none() && upper_residual <= attain_tol;

    let scale = upper.v.iter().chain(lower.v.iter()).fold(0.0f64, |m, v| m.max(v.abs()));
    let max_gap = (0..len).map(|i| upper.v[i] - lower.v[i]).fold(0.0f64, f64::max);
    let mut branch = None;
    let verdict = if !lower_attained {
        EnvelopeVerdict::LowerNotAttained
    } else if !upper_attained {
        EnvelopeVerdict::UpperNotAttained
    } else if max_gap <= cfg.gap_rel * (1.0 + scale) {
        EnvelopeVerdict::LocallyUnique
    } else {
        let kind = detect_branching(&lower, &upper, 0.0, upper.span(), cfg.branch_rel * (1.0 + scale), cfg.depth)?;
        branch = Some(kind);
        match kind {
            BranchKind::BranchRight => EnvelopeVerdict::NonUniqueBranching,
            BranchKind::TouchSequence => EnvelopeVerdict::NonUniqueTouchSequence,
            _ => EnvelopeVerdict::Inconclusive,
        }
    };
    Ok(EnvelopeReport {
        lower,
        upper,
        lower_attained,
        upper_attained,
        lower_residual,
        upper_residual,
        lower_obstruction,
        upper_obstruction,
        span,
        etas,
        max_gap,
        branch,
        verdict,
    })
}

#[derive(Debug, Clone)]
pub struct Candidate {
    pub label: String,
    pub trace: Trace,
    pub attained: bool,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct Witness {
    pub first: Candidate,
    pub second: Candidate,
    pub kind: BranchKind,
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessSummary {
    pub first: String,
    pub second: String,
    pub kind: BranchKind,
}

impl Witness {
    pub fn summary(&self) -> WitnessSummary {
        WitnessSummary {
            first: self.first.label.clone(),
            second: self.second.label.clone(),
            kind: self.kind,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SideAnalysis {
    pub geometry: PeanoGeometry,
    pub tag: String,
    pub envelope: Option<EnvelopeReport>,
    pub candidates: Vec<Candidate>,
    pub witness: Option<Witness>,
}

impl SideAnalysis {
    /// True when two distinct solutions were found through the point.
    pub fn non_unique(&self) -> bool {
        self.witness.is_some()
            || self.envelope.as_ref().is_some_and(|e| {
                matches!(
                    e.verdict,
                    EnvelopeVerdict::NonUniqueBranching | EnvelopeVerdict::NonUniqueTouchSequence
                )
            })
    }
}

fn candidate(np: &NormalizedProblem, label: String, trace: Trace, tol: f64) -> Candidate {
    let res = residual(&trace, np);
    let attained = trace.len() > 1 && trace.obstruction.is_none() && trace.terminal != crate::integrator::TerminalReason::ObstructionCondition4 && res <= tol;
    Candidate {
        label,
        trace,
        attained,
        residual: res,
    }
}

/// Builds solution candidates through the origin of `np` and looks for a
/// pair that separates.
pub fn witness_search(np: &NormalizedProblem, geom: &PeanoGeometry, cfg: &EnvelopeConfig) -> Result<(Vec<Candidate>, Option<Witness>, Option<EnvelopeReport>)> {
    let span = span_for(geom, cfg)?;
    let tol = cfg.attain_rel * (1.0 + geom.m);
    let mut cands = Vec::new();
    for id in np.anchored_ids() {
        let t = Trace::curve_follow(np, id, span, cfg.eps);
        cands.push(candidate(np, format!("curve:{id}"), t, tol));
    }
    for (label, policy) in [("euler-interior", Policy::Interior), ("euler-boundary", Policy::Boundary)] {
        let t = euler_with(np, span, cfg.eps, &EulerOptions::new(policy))?;
        cands.push(candidate(np, label.into(), t, tol));
    }
    let env = envelopes(np, geom, cfg).ok();
    if let Some(e) = &env {
        let mut lo = e.lower.clone();
        lo.obstruction = e.lower_obstruction;
        let mut up = e.upper.clone();
        up.obstruction = e.upper_obstruction;
        let mut c = candidate(np, "envelope-lower".into(), lo, tol);
        c.attained &= e.lower_attained;
        cands.push(c);
        let mut c = candidate(np, "envelope-upper".into(), up, tol);
        c.attained &= e.upper_attained;
        cands.push(c);
    }
    let witness = first_branching(&cands, cfg, None);
    Ok((cands, witness, env))
}

fn first_branching(cands: &[Candidate], cfg: &EnvelopeConfig, order: Option<&[(&str, &str)]>) -> Option<Witness> {
    let pairs: Vec<(usize, usize)> = match order {
        Some(names) => names
            .iter()
            .filter_map(|(a, b)| {
                let i = cands.iter().position(|c| c.label == *a)?;
                let j = cands.iter().position(|c| c.label == *b)?;
                Some((i, j))
            })
            .collect(),
        None => (0..cands.len()).flat_map(|i| (i + 1..cands.len()).map(move |j| (i, j))).collect(),
    };
    for (i, j) in pairs {
        let (a, b) = (&cands[i], &cands[j]);
        if !a.attained || !b.attained {
            continue;
        }
        let len = a.trace.len().min(b.trace.len());
        if len < 2 {
            continue;
        }
        let scale = a.trace.v[..len].iter().chain(b.trace.v[..len].iter()).fold(0.0f64, |m, v| m.max(v.abs()));
        let delta = (len - 1) as f64 * a.trace.step;
        if let Ok(kind) = detect_branching(&a.trace, &b.trace, 0.0, delta, cfg.branch_rel * (1.0 + scale), cfg.depth) {
            if matches!(kind, BranchKind::BranchRight | BranchKind::TouchSequence) {
                return Some(Witness {
                    first: a.clone(),
                    second: b.clone(),
                    kind,
                });
            }
        }
    }
    None
}

/// Classification, geometry, envelopes and witness search on one side.
pub fn analyze_side(
    np: &NormalizedProblem,
    classifier: &ClassifierConfig,
    peano: &PeanoConfig,
    cfg: &EnvelopeConfig,
) -> Result<SideAnalysis> {
    let tag = classify(np, classifier);
    let geometry = boundary_triangle(np, &tag, peano)?;
    let (candidates, witness, envelope) = witness_search(np, &geometry, cfg)?;
    Ok(SideAnalysis {
        geometry,
        tag: tag.tag(),
        envelope,
        candidates,
        witness,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeOutcome {
    /// The original problem already shows two solutions.
    NonUnique,
    /// Unique for the original problem, branching for the extension.
    HiddenNonUniqueness,
    /// Neither problem shows branching.
    NoBranching,
}

#[derive(Debug, Clone)]
pub struct ProbeReport {
    pub outcome: ProbeOutcome,
    pub original: SideAnalysis,
    pub extended: SideAnalysis,
    pub evidence: Option<Witness>,
}

/// Compares the problem with its continuous extension at `anchor`, looking
/// to the right.
pub fn probe_extension(p: &ProblemSpec, anchor: (f64, f64), classifier: &ClassifierConfig, peano: &PeanoConfig, cfg: &EnvelopeConfig) -> Result<ProbeReport> {
    let ext = p
        .extended()
        .ok_or_else(|| Error::Input(format!("problem `{}` has no extension", p.name)))?;
    let np = to_origin_with(p, anchor, crate::domain::Direction::Right, classifier.curve_window)?;
    let original = analyze_side(&np, classifier, peano, cfg)?;
    let npe = to_origin_with(&ext, anchor, crate::domain::Direction::Right, classifier.curve_window)?;
    let extended = analyze_side(&npe, classifier, peano, cfg)?;
    let order = [
        ("euler-interior", "envelope-lower"),
        ("euler-interior", "envelope-upper"),
        ("envelope-lower", "envelope-upper"),
    ];
    let evidence = first_branching(&extended.candidates, cfg, Some(&order)).or_else(|| extended.witness.clone());
    let outcome = if original.non_unique() {
        ProbeOutcome::NonUnique
    } else if evidence.is_some() || extended.non_unique() {
        ProbeOutcome::HiddenNonUniqueness
    } else {
        ProbeOutcome::NoBranching
    };
    Ok(ProbeReport {
        outcome,
        original,
        extended,
        evidence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{CurveSpec, Frame, Region, Side};
    use crate::expr::Expr;
    use crate::integrator::TerminalReason;
    use crate::normalize::to_origin;

    fn trace(step: f64, v: Vec<f64>) -> Trace {
        Trace {
            frame: Frame::identity(),
            step,
            flags: vec![NodeFlag::Interior; v.len()],
            v,
            terminal: TerminalReason::ReachedSegmentEnd,
            obstruction: None,
        }
    }

    fn problem(field: &str, interior: &[&str], curves: &[(Side, &str)]) -> ProblemSpec {
        let cs = curves
            .iter()
            .map(|(s, b)| CurveSpec::new(*s, Expr::parse(b).unwrap(), 0.0, f64::INFINITY).unwrap())
            .collect();
        let r = Region::new(interior, cs, [0.0, 2.0, -2.0, 4.0]).unwrap();
        ProblemSpec::new("t", r, Expr::parse(field).unwrap(), None).unwrap()
    }

    #[test]
    fn combine_takes_pointwise_extremes() {
        let a = trace(0.1, vec![0.0, 1.0, 3.0]);
        let b = trace(0.1, vec![0.0, 2.0, 2.0]);
        assert_eq!(combine(&[&a, &b], CombineMode::Min).unwrap().v, vec![0.0, 1.0, 2.0]);
        assert_eq!(combine(&[&a, &b], CombineMode::Max).unwrap().v, vec![0.0, 2.0, 3.0]);
        let c = trace(0.2, vec![0.0, 2.0, 2.0]);
        assert!(combine(&[&a, &c], CombineMode::Min).is_err());
        assert!(combine(&[], CombineMode::Min).is_err());
    }

    #[test]
    fn branching_kinds() {
        let n = 1024;
        let h = 1.0 / n as f64;
        let zero = trace(h, vec![0.0; n + 1]);
        let cube = trace(h, (0..=n).map(|i| (i as f64 * h).powi(3)).collect());
        assert_eq!(detect_branching(&zero, &cube, 0.0, 1.0, 1e-9, 6).unwrap(), BranchKind::BranchRight);
        assert_eq!(detect_branching(&zero, &zero, 0.0, 1.0, 1e-9, 6).unwrap(), BranchKind::Coincide);
        // u^3 |sin(pi 2^m u)| with 2^-m <= u: zero at every dyadic point
        let wiggle = trace(
            h,
            (0..=n)
                .map(|i| {
                    let u = i as f64 * h;
                    if u == 0.0 {
                        return 0.0;
                    }
                    let m = (-u.log2()).ceil() as i32;
                    (std::f64::consts::PI * u * 2f64.powi(m)).sin().abs() * u.powi(3)
                })
                .collect(),
        );
        assert_eq!(detect_branching(&zero, &wiggle, 0.0, 1.0, 1e-12, 5).unwrap(), BranchKind::TouchSequence);
        let late = trace(h, (0..=n).map(|i| ((i as f64 * h) - 0.5).max(0.0)).collect());
        assert_eq!(detect_branching(&zero, &late, 0.0, 1.0, 1e-9, 6).unwrap(), BranchKind::DivergesLater);
        assert!(detect_branching(&zero, &trace(2.0 * h, vec![0.0; 3]), 0.0, 1.0, 1e-9, 6).is_err());
    }

    #[test]
    fn quadrant_corner_envelopes() {
        let p = problem("3*sqrt(x)*sqrt(y)", &["x >= 0", "y >= 0"], &[(Side::Lower, "0")]);
        let np = to_origin(&p, (0.0, 0.0)).unwrap();
        let tag = classify(&np, &ClassifierConfig::default());
        let g = boundary_triangle(&np, &tag, &PeanoConfig::default()).unwrap();
        let r = envelopes(&np, &g, &EnvelopeConfig::default()).unwrap();
        assert!(r.lower_attained && r.upper_attained);
        assert!(r.lower.v.iter().all(|v| *v == 0.0));
        for i in 0..r.upper.len() {
            let u = r.upper.u(i);
            assert!((r.upper.v[i] - u.powi(3)).abs() < 1e-2);
        }
        assert_eq!(r.verdict, EnvelopeVerdict::NonUniqueBranching);
    }

    #[test]
    fn cusp_lower_envelope_not_attained() {
        let p = problem(
            "sqrt(y) - 2*sqrt(x^2 - y) + x",
            &["x >= 0", "y >= 0", "y <= x^2"],
            &[(Side::Upper, "x^2"), (Side::Lower, "0")],
        );
        let np = to_origin(&p, (0.0, 0.0)).unwrap();
        let tag = classify(&np, &ClassifierConfig::default());
        let g = boundary_triangle(&np, &tag, &PeanoConfig::default()).unwrap();
        let r = envelopes(&np, &g, &EnvelopeConfig::default()).unwrap();
        assert_eq!(r.verdict, EnvelopeVerdict::LowerNotAttained);
        assert!(r.upper_attained);
        for i in 0..r.upper.len() {
            let u = r.upper.u(i);
            assert!((r.upper.v[i] - u * u).abs() < 1e-9);
        }
    }

    #[test]
    fn interior_point_is_locally_unique() {
        let p = problem("3*sqrt(x)*sqrt(y)", &["x >= 0", "y >= 0"], &[(Side::Lower, "0")]);
        let np = to_origin(&p, (1.0, 1.0)).unwrap();
        let side = analyze_side(&np, &ClassifierConfig::default(), &PeanoConfig::default(), &EnvelopeConfig::default()).unwrap();
        assert!(!side.non_unique());
        assert_eq!(side.envelope.unwrap().verdict, EnvelopeVerdict::LocallyUnique);
    }

    #[test]
    fn schedule_respects_step_floor() {
        let cfg = EnvelopeConfig {
            eps: 1e-2,
            ..EnvelopeConfig::default()
        };
        let etas = bias_schedule(&cfg);
        assert_eq!(etas.len(), cfg.k);
        assert!(*etas.last().unwrap() >= 4.0 * cfg.eps - 1e-15);
        for w in etas.windows(2) {
            assert!((w[0] - 2.0 * w[1]).abs() < 1e-15);
        }
    }
}
