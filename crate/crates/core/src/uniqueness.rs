//! Deciding whether a point of the domain is a uniqueness point.
//!
//! Sufficient conditions are tried first: a bounded difference quotient in
//! `y` on a window, or a bounded partial derivative on a window whose
//! vertical slices are intervals. When neither holds, both sides are explored
//! with the integrator and envelopes, and the extension probe is consulted
//! for points that only pass the formal test.

use rayon::prelude::*;
use serde::Serialize;

use crate::config::Config;
use crate::domain::{Direction, ProblemSpec};
use crate::envelope::{analyze_side, probe_extension, EnvelopeSummary, EnvelopeVerdict, ProbeOutcome, SideAnalysis, WitnessSummary};
use crate::error::{Error, Result};
use crate::normalize::to_origin_with;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum UniquenessClass {
    Uniqueness,
    /// No second solution was found but the extremal solutions were not
    /// both attained.
    FormalOnly,
    /// Formally unique, while the continuous extension branches here.
    HiddenNonUniqueness,
    NonUniqueness,
    Unknown,
}

impl UniquenessClass {
    pub fn as_str(self) -> &'static str {
        match self {
            UniquenessClass::Uniqueness => "uniqueness",
            UniquenessClass::FormalOnly => "formal-only",
            UniquenessClass::HiddenNonUniqueness => "hidden-non-uniqueness",
            UniquenessClass::NonUniqueness => "non-uniqueness",
            UniquenessClass::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct QuotientReport {
    pub window: f64,
    pub coarse: f64,
    pub fine: f64,
    pub bounded: bool,
}

fn slice_samples(p: &ProblemSpec, x: f64, y0: f64, c: f64, ny: usize) -> Vec<(f64, f64)> {
    let mut ys: Vec<f64> = (0..ny).map(|j| y0 - c + 2.0 * c * j as f64 / (ny - 1) as f64).collect();
    ys.push(y0);
    for curve in p.region.curves() {
        if curve.contains_x(x) {
            if let Ok(b) = curve.b.eval_x(x) {
                if (b - y0).abs() <= c {
                    ys.push(b);
                }
            }
        }
    }
    ys.sort_by(f64::total_cmp);
    ys.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (1.0 + a.abs()));
    ys.into_iter()
        .filter(|y| p.classify_point(x, *y).in_domain())
        .filter_map(|y| p.eval(x, y).ok().map(|f| (y, f)))
        .collect()
}

fn max_quotient(p: &ProblemSpec, point: (f64, f64), c: f64, (nx, ny): (usize, usize)) -> f64 {
    let (x0, y0) = point;
    let mut worst = 0.0f64;
    for i in 0..nx {
        let x = x0 - c + 2.0 * c * i as f64 / (nx - 1) as f64;
        let s = slice_samples(p, x, y0, c, ny);
        for w in s.windows(2) {
            let dy = w[1].0 - w[0].0;
            if dy > 0.0 {
                worst = worst.max((w[1].1 - w[0].1).abs() / dy);
            }
        }
    }
    worst
}

fn bounded(coarse: f64, fine: f64, growth: f64) -> bool {
    if coarse == 0.0 {
        fine == 0.0
    } else {
        fine / coarse < growth
    }
}

/// Largest difference quotient in `y` between neighbouring admissible
/// samples, on a coarse and a fine grid.
pub fn lipschitz_scan(p: &ProblemSpec, point: (f64, f64), c: f64, coarse: (usize, usize), fine: (usize, usize), growth: f64) -> QuotientReport {
    let lc = max_quotient(p, point, c, coarse);
    let lf = max_quotient(p, point, c, fine);
    QuotientReport {
        window: c,
        coarse: lc,
        fine: lf,
        bounded: bounded(lc, lf, growth),
    }
}

fn max_partial(p: &ProblemSpec, point: (f64, f64), c: f64, (nx, ny): (usize, usize), h: f64) -> f64 {
    let (x0, y0) = point;
    let mut worst = 0.0f64;
    let admissible = |x: f64, y: f64| p.classify_point(x, y).in_domain().then(|| p.eval(x, y).ok()).flatten();
    for i in 0..nx {
        let x = x0 - c + 2.0 * c * i as f64 / (nx - 1) as f64;
        for (y, f) in slice_samples(p, x, y0, c, ny) {
            let d = match (admissible(x, y + h), admissible(x, y - h)) {
                (Some(a), Some(b)) => (a - b) / (2.0 * h),
                (Some(a), None) => (a - f) / h,
                (None, Some(b)) => (f - b) / h,
                (None, None) => continue,
            };
            worst = worst.max(d.abs());
        }
    }
    worst
}

/// Finite-difference bound on `|df/dy|` at two step sizes.
pub fn dfdy_report(p: &ProblemSpec, point: (f64, f64), c: f64, grid: (usize, usize), growth: f64) -> QuotientReport {
    let coarse = max_partial(p, point, c, grid, 1e-4);
    let fine = max_partial(p, point, c, grid, 1e-4 / 64.0);
    QuotientReport {
        window: c,
        coarse,
        fine,
        bounded: bounded(coarse, fine, growth),
    }
}

/// Every vertical slice of the window meets the domain in one interval.
pub fn y_convexity(p: &ProblemSpec, point: (f64, f64), c: f64, (nx, ny): (usize, usize)) -> bool {
    let (x0, y0) = point;
    (0..nx).all(|i| {
        let x = x0 - c + 2.0 * c * i as f64 / (nx - 1) as f64;
        let inside: Vec<bool> = (0..ny)
            .map(|j| p.classify_point(x, y0 - c + 2.0 * c * j as f64 / (ny - 1) as f64).in_domain())
            .collect();
        let runs = inside.windows(2).filter(|w| !w[0] && w[1]).count() + usize::from(inside[0]);
        runs <= 1
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SideSummary {
    pub direction: Direction,
    pub tag: String,
    pub h: f64,
    pub envelope: Option<EnvelopeSummary>,
    pub witness: Option<WitnessSummary>,
    pub status: SideStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SideStatus {
    NonUnique,
    Unique,
    /// No solution leaves the point on this side.
    Empty,
    Formal,
    Unknown,
}

fn side_status(side: &SideAnalysis) -> SideStatus {
    if side.non_unique() {
        return SideStatus::NonUnique;
    }
    if side.candidates.iter().all(|c| c.trace.len() <= 1) {
        return SideStatus::Empty;
    }
    match side.envelope.as_ref().map(|e| e.verdict) {
        Some(EnvelopeVerdict::LocallyUnique) => SideStatus::Unique,
        Some(EnvelopeVerdict::LowerNotAttained | EnvelopeVerdict::UpperNotAttained) => SideStatus::Formal,
        _ => SideStatus::Unknown,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct UniquenessVerdict {
    pub class: UniquenessClass,
    pub point: [f64; 2],
    /// Which test decided the class.
    pub route: String,
    pub evidence: Vec<String>,
    pub lipschitz: Vec<QuotientReport>,
    pub sides: Vec<SideSummary>,
    pub probe: Option<ProbeOutcome>,
}

pub fn summarize(dir: Direction, side: &SideAnalysis) -> SideSummary {
    SideSummary {
        direction: dir,
        tag: side.tag.clone(),
        h: side.geometry.h,
        envelope: side.envelope.as_ref().map(|e| e.summary()),
        witness: side.witness.as_ref().map(|w| w.summary()),
        status: side_status(side),
    }
}

/// Window half-widths tried around a point.
pub fn windows(p: &ProblemSpec, cfg: &Config) -> Vec<f64> {
    let scale = p.region.scale();
    cfg.uniqueness.windows.iter().map(|w| w * scale).collect()
}

pub fn uniqueness_membership(p: &ProblemSpec, point: (f64, f64), cfg: &Config) -> Result<UniquenessVerdict> {
    let (x0, y0) = point;
    if !p.classify_point(x0, y0).in_domain() {
        return Err(Error::OutsideDomain(x0, y0));
    }
    let u = &cfg.uniqueness;
    let mut verdict = UniquenessVerdict {
        class: UniquenessClass::Unknown,
        point: [x0, y0],
        route: String::new(),
        evidence: Vec::new(),
        lipschitz: Vec::new(),
        sides: Vec::new(),
        probe: None,
    };
    for c in windows(p, cfg) {
        let q = lipschitz_scan(p, point, c, u.coarse, u.fine, u.growth);
        let ok = q.bounded;
        verdict.lipschitz.push(q);
        if ok {
            verdict.class = UniquenessClass::Uniqueness;
            verdict.route = "lipschitz".into();
            verdict.evidence.push(format!("difference quotient bounded on window {c}"));
            return Ok(verdict);
        }
        let d = dfdy_report(p, point, c, u.coarse, u.growth);
        if d.bounded && y_convexity(p, point, c, u.fine) {
            verdict.class = UniquenessClass::Uniqueness;
            verdict.route = "weak-lipschitz".into();
            verdict.evidence.push(format!("df/dy bounded on y-convex window {c} (sup ~ {:.3e})", d.fine));
            return Ok(verdict);
        }
    }

    let mut statuses = Vec::new();
    for dir in [Direction::Right, Direction::Left] {
        let np = to_origin_with(p, point, dir, cfg.classifier.curve_window)?;
        let side = analyze_side(&np, &cfg.classifier, &cfg.peano, &cfg.envelope)?;
        let summary = summarize(dir, &side);
        if let Some(w) = &side.witness {
            verdict.evidence.push(format!(
                "{:?}: {} and {} separate ({:?})",
                dir, w.first.label, w.second.label, w.kind
            ));
        }
        statuses.push(summary.status);
        verdict.sides.push(summary);
    }

    if statuses.contains(&SideStatus::NonUnique) {
        verdict.class = UniquenessClass::NonUniqueness;
        verdict.route = "witness".into();
    } else if statuses.iter().all(|s| matches!(s, SideStatus::Unique | SideStatus::Empty)) {
        verdict.class = UniquenessClass::Uniqueness;
        verdict.route = "envelopes".into();
    } else if statuses.contains(&SideStatus::Formal) && !statuses.contains(&SideStatus::Unknown) {
        verdict.class = UniquenessClass::FormalOnly;
        verdict.route = "envelopes".into();
        if u.probe && p.extension.is_some() {
            let probe = probe_extension(p, point, &cfg.classifier, &cfg.peano, &cfg.envelope)?;
            verdict.probe = Some(probe.outcome);
            if probe.outcome == ProbeOutcome::HiddenNonUniqueness {
                verdict.class = UniquenessClass::HiddenNonUniqueness;
                verdict.route = "probe".into();
                if let Some(w) = &probe.evidence {
                    verdict
                        .evidence
                        .push(format!("extension: {} and {} separate ({:?})", w.first.label, w.second.label, w.kind));
                }
            }
        }
    } else {
        verdict.route = "exhausted".into();
    }
    Ok(verdict)
}

#[derive(Debug, Clone, Serialize)]
pub struct AtlasCell {
    pub x: f64,
    pub y: f64,
    /// `None` outside the domain.
    pub class: Option<UniquenessClass>,
}

/// Uniqueness classes over an `nx` by `ny` grid spanning the bounding box.
pub fn atlas(p: &ProblemSpec, nx: usize, ny: usize, cfg: &Config) -> Result<Vec<AtlasCell>> {
    if nx < 2 || ny < 2 {
        return Err(Error::Input(format!("atlas grid must be at least 2x2, got {nx}x{ny}")));
    }
    let [x0, x1, y0, y1] = p.region.bbox();
    let points: Vec<(f64, f64)> = (0..ny)
        .flat_map(|j| {
            (0..nx).map(move |i| {
                (
                    x0 + (x1 - x0) * i as f64 / (nx - 1) as f64,
                    y0 + (y1 - y0) * j as f64 / (ny - 1) as f64,
                )
            })
        })
        .collect();
    points
        .par_iter()
        .map(|&(x, y)| {
            if !p.classify_point(x, y).in_domain() {
                return Ok(AtlasCell { x, y, class: None });
            }
            let class = match uniqueness_membership(p, (x, y), cfg) {
                Ok(v) => v.class,
                Err(Error::Numeric(_)) | Err(Error::Eval(_)) => UniquenessClass::Unknown,
                Err(e) => return Err(e),
            };
            Ok(AtlasCell { x, y, class: Some(class) })
        })
        .collect()
}

pub fn atlas_csv(cells: &[AtlasCell]) -> String {
    let mut out = String::from("x,y,class\n");
    for c in cells {
        out.push_str(&format!("{},{},{}\n", c.x, c.y, c.class.map_or("outside", UniquenessClass::as_str)));
    }
    out
}
