//! Command-line driver.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::classifier::{check_condition4, classify, CaseTag, Condition4, Family};
use crate::config::Config;
use crate::corpus;
use crate::domain::{Direction, ProblemFile, ProblemSpec};
use crate::envelope::{envelopes, probe_extension, EnvelopeVerdict, ProbeOutcome, WitnessSummary};
use crate::error::{Error, Result};
use crate::integrator::{euler_with, EulerOptions, ObstructionMode, Policy};
use crate::normalize::{to_origin_with, NormalizedProblem};
use crate::peano::{boundary_triangle, PeanoGeometry};
use crate::uniqueness::{atlas, atlas_csv, summarize, uniqueness_membership, SideSummary, UniquenessClass};

pub const REPORT_SCHEMA: &str = "bivp-report/1";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "bivp", version, about = "Existence and uniqueness analysis for y' = f(x, y) at boundary points")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Identify the local boundary case and check the tangency condition.
    Classify(PointArgs),
    /// Integrate an Euler polygon from a point and write it as CSV.
    Solve(SolveArgs),
    /// Lower and upper envelopes on the existence interval.
    Envelope(EnvelopeArgs),
    /// Decide whether a point belongs to the uniqueness set.
    Uniq(PointArgs),
    /// Uniqueness classes on a grid over the bounding box.
    Atlas(AtlasArgs),
    /// Compare the problem with its continuous extension at a point.
    Probe(PointArgs),
    /// List the built-in problems.
    CorpusList,
    /// Write the built-in problems as JSON problem files.
    CorpusExport {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Debug, Clone)]
pub struct Source {
    /// Built-in problem id (see `corpus-list`).
    #[arg(long, conflicts_with = "problem", required_unless_present = "problem")]
    pub corpus: Option<String>,
    /// JSON problem file.
    #[arg(long)]
    pub problem: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Knobs {
    /// JSON file with configuration overrides.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Euler step.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Largest classification window.
    #[arg(long = "c-star")]
    pub c_star: Option<f64>,
    /// Biased members per envelope family.
    #[arg(long)]
    pub k: Option<usize>,
    /// Largest envelope bias.
    #[arg(long)]
    pub eta0: Option<f64>,
    /// Integration length; the existence interval when absent.
    #[arg(long)]
    pub span: Option<f64>,
    /// Grid points per axis when bounding |f|.
    #[arg(long = "peano-grid")]
    pub peano_grid: Option<usize>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum DirArg {
    Right,
    Left,
}

impl From<DirArg> for Direction {
    fn from(d: DirArg) -> Direction {
        match d {
            DirArg::Right => Direction::Right,
            DirArg::Left => Direction::Left,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Interior,
    Boundary,
}

#[derive(Args, Debug, Clone)]
pub struct PointArgs {
    #[command(flatten)]
    pub source: Source,
    /// Initial point `x,y`; the problem's own initial point when absent.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub at: Option<(f64, f64)>,
    #[arg(long, value_enum, default_value = "right")]
    pub direction: DirArg,
    #[command(flatten)]
    pub knobs: Knobs,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Print the JSON report on stdout instead of the summary line.
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug, Clone)]
pub struct SolveArgs {
    #[command(flatten)]
    pub point: PointArgs,
    #[arg(long, value_enum, default_value = "interior")]
    pub policy: PolicyArg,
    /// Keep sliding along a curve where the field points outward instead of
    /// stopping.
    #[arg(long)]
    pub slide: bool,
    /// CSV output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct EnvelopeArgs {
    #[command(flatten)]
    pub point: PointArgs,
    /// Directory receiving `lower.csv` and `upper.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct AtlasArgs {
    #[command(flatten)]
    pub source: Source,
    /// Grid size `NXxNY`.
    #[arg(long, value_parser = parse_grid, default_value = "20x20")]
    pub grid: (usize, usize),
    #[command(flatten)]
    pub knobs: Knobs,
    /// CSV output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_point(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected `x,y`, got `{s}`"))?;
    let x: f64 = a.trim().parse().map_err(|_| format!("bad abscissa `{a}`"))?;
    let y: f64 = b.trim().parse().map_err(|_| format!("bad ordinate `{b}`"))?;
    if !x.is_finite() || !y.is_finite() {
        return Err("point must be finite".into());
    }
    Ok((x, y))
}

fn parse_grid(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected `NXxNY`, got `{s}`"))?;
    let nx: usize = a.trim().parse().map_err(|_| format!("bad grid size `{a}`"))?;
    let ny: usize = b.trim().parse().map_err(|_| format!("bad grid size `{b}`"))?;
    if nx < 2 || ny < 2 {
        return Err("grid needs at least 2 points per axis".into());
    }
    Ok((nx, ny))
}

/// Problem with the label it was loaded under.
pub struct Loaded {
    pub source: String,
    pub file: ProblemFile,
    pub problem: ProblemSpec,
}

pub fn load(src: &Source) -> Result<Loaded> {
    match (&src.corpus, &src.problem) {
        (Some(id), _) => {
            let e = corpus::get(id)?;
            Ok(Loaded {
                source: format!("corpus:{id}"),
                file: e.file,
                problem: e.problem,
            })
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)?;
            let file = ProblemFile::from_json(&text)?;
            let problem = file.build()?;
            Ok(Loaded {
                source: path.display().to_string(),
                file,
                problem,
            })
        }
        (None, None) => Err(Error::Input("give --corpus or --problem".into())),
    }
}

fn positive(name: &str, v: Option<f64>) -> Result<()> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => Err(Error::Input(format!("--{name} must be positive, got {x}"))),
        _ => Ok(()),
    }
}

pub fn effective_config(k: &Knobs) -> Result<Config> {
    let mut cfg = match &k.config {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
        None => Config::default(),
    };
    positive("eps", k.eps)?;
    positive("c-star", k.c_star)?;
    positive("eta0", k.eta0)?;
    positive("span", k.span)?;
    if let Some(v) = k.eps {
        cfg.envelope.eps = v;
    }
    if let Some(v) = k.c_star {
        cfg.classifier.c_star = v;
    }
    if let Some(v) = k.k {
        if v < 2 {
            return Err(Error::Input("--k must be at least 2".into()));
        }
        cfg.envelope.k = v;
    }
    if let Some(v) = k.eta0 {
        cfg.envelope.eta0 = v;
    }
    if k.span.is_some() {
        cfg.envelope.span = k.span;
    }
    if let Some(v) = k.peano_grid {
        if v < 2 {
            return Err(Error::Input("--peano-grid must be at least 2".into()));
        }
        cfg.peano.grid = v;
    }
    if !(cfg.envelope.eps > 0.0 && cfg.classifier.c_star > 0.0) {
        return Err(Error::Input("step and window must be positive".into()));
    }
    Ok(cfg)
}

fn anchor(args: &PointArgs, loaded: &Loaded) -> Result<(f64, f64)> {
    match (args.at, loaded.file.initial_point) {
        (Some(p), _) => Ok(p),
        (None, Some([x, y])) => Ok((x, y)),
        (None, None) => Err(Error::Input("no --at given and the problem has no initial point".into())),
    }
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    schema: &'static str,
    command: &'a str,
    problem: &'a str,
    source: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    point: Option<[f64; 2]>,
    /// Every grid in the analysis is deterministic; no random sampling.
    rng_seed: Option<u64>,
    config: &'a Config,
    result: T,
}

struct Ctx<'a> {
    command: &'a str,
    loaded: &'a Loaded,
    point: Option<(f64, f64)>,
    config: &'a Config,
}

impl Ctx<'_> {
    fn report<T: Serialize>(&self, result: T) -> String {
        let r = Report {
            schema: REPORT_SCHEMA,
            command: self.command,
            problem: &self.loaded.problem.name,
            source: &self.loaded.source,
            point: self.point.map(|(x, y)| [x, y]),
            rng_seed: None,
            config: self.config,
            result,
        };
        serde_json::to_string_pretty(&r).expect("report serializes")
    }

    /// Writes the report file when requested and returns what goes to stdout.
    fn emit<T: Serialize>(&self, args: &PointArgs, result: T, line: String) -> Result<String> {
        let json = self.report(result);
        if let Some(path) = &args.report {
            write_file(path, &json)?;
        }
        Ok(if args.json { json } else { line })
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// Result of a command: stdout text and exit code.
pub struct Outcome {
    pub stdout: String,
    pub code: i32,
}

impl Outcome {
    fn ok(stdout: String) -> Outcome {
        Outcome { stdout, code: EXIT_OK }
    }
}

#[derive(Serialize)]
struct ClassifyResult {
    tag: String,
    case: CaseTag,
    condition4: Vec<CurveCondition>,
}

#[derive(Serialize)]
struct CurveCondition {
    curve: usize,
    side: &'static str,
    result: Condition4,
}

fn cond_word(c: &Condition4) -> &'static str {
    match c {
        Condition4::Holds { .. } => "holds",
        Condition4::Fails { .. } => "fails",
        Condition4::NotApplicable => "n/a",
    }
}

fn conditions(np: &NormalizedProblem, tag: &CaseTag) -> Result<Vec<CurveCondition>> {
    let mut out = Vec::new();
    let curves = [tag.upper_id.and(np.upper()), tag.lower_id.and(np.lower())];
    for c in curves.into_iter().flatten() {
        out.push(CurveCondition {
            curve: c.id(),
            side: c.side().as_str(),
            result: check_condition4(np, c)?,
        });
    }
    Ok(out)
}

fn classify_line(tag: &CaseTag, conds: &[CurveCondition]) -> String {
    let mut s = tag.tag();
    match conds {
        [] => {}
        [one] => {
            let _ = write!(s, "; cond4: {}", cond_word(&one.result));
        }
        many => {
            let parts: Vec<String> = many
                .iter()
                .map(|c| format!("{} {}", c.side, cond_word(&c.result)))
                .collect();
            let _ = write!(s, "; cond4: {}", parts.join(", "));
        }
    }
    s
}

fn cmd_classify(args: &PointArgs) -> Result<Outcome> {
    let loaded = load(&args.source)?;
    let cfg = effective_config(&args.knobs)?;
    let at = anchor(args, &loaded)?;
    let np = to_origin_with(&loaded.problem, at, args.direction.into(), cfg.classifier.curve_window)?;
    let tag = classify(&np, &cfg.classifier);
    let conds = conditions(&np, &tag)?;
    let line = classify_line(&tag, &conds);
    let code = if tag.family == Family::Unclassified {
        EXIT_INCONCLUSIVE
    } else {
        EXIT_OK
    };
    let ctx = Ctx {
        command: "classify",
        loaded: &loaded,
        point: Some(at),
        config: &cfg,
    };
    let result = ClassifyResult {
        tag: tag.tag(),
        case: tag,
        condition4: conds,
    };
    Ok(Outcome {
        stdout: ctx.emit(args, result, line)?,
        code,
    })
}

fn geometry(np: &NormalizedProblem, cfg: &Config) -> Result<(CaseTag, PeanoGeometry)> {
    let tag = classify(np, &cfg.classifier);
    let geom = boundary_triangle(np, &tag, &cfg.peano)?;
    Ok((tag, geom))
}

fn cmd_solve(args: &SolveArgs) -> Result<Outcome> {
    let p = &args.point;
    let loaded = load(&p.source)?;
    let cfg = effective_config(&p.knobs)?;
    let at = anchor(p, &loaded)?;
    let np = to_origin_with(&loaded.problem, at, p.direction.into(), cfg.classifier.curve_window)?;
    let (_, geom) = geometry(&np, &cfg)?;
    let span = crate::envelope::span_for(&geom, &cfg.envelope)?;
    let opts = EulerOptions {
        policy: match args.policy {
            PolicyArg::Interior => Policy::Interior,
            PolicyArg::Boundary => Policy::Boundary,
        },
        mode: if args.slide { ObstructionMode::Slide } else { ObstructionMode::Stop },
        bias: 0.0,
    };
    let t = euler_with(&np, span, cfg.envelope.eps, &opts)?;
    let csv = t.to_csv();
    if let Some(path) = &p.report {
        let ctx = Ctx {
            command: "solve",
            loaded: &loaded,
            point: Some(at),
            config: &cfg,
        };
        #[derive(Serialize)]
        struct SolveResult<'a> {
            span: f64,
            nodes: usize,
            terminal: &'a str,
            obstruction: Option<f64>,
            geometry: &'a PeanoGeometry,
            options: EulerOptions,
        }
        let json = ctx.report(SolveResult {
            span,
            nodes: t.len(),
            terminal: t.terminal.as_str(),
            obstruction: t.obstruction,
            geometry: &geom,
            options: opts,
        });
        write_file(path, &json)?;
    }
    match &args.out {
        Some(path) => {
            write_file(path, &csv)?;
            Ok(Outcome::ok(format!(
                "{} nodes on [0, {}], end: {}",
                t.len(),
                t.span(),
                t.terminal.as_str()
            )))
        }
        None => Ok(Outcome::ok(csv)),
    }
}

fn cmd_envelope(args: &EnvelopeArgs) -> Result<Outcome> {
    let p = &args.point;
    let loaded = load(&p.source)?;
    let cfg = effective_config(&p.knobs)?;
    let at = anchor(p, &loaded)?;
    let np = to_origin_with(&loaded.problem, at, p.direction.into(), cfg.classifier.curve_window)?;
    let (tag, geom) = geometry(&np, &cfg)?;
    let rep = envelopes(&np, &geom, &cfg.envelope)?;
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("lower.csv"), rep.lower.to_csv())?;
        std::fs::write(dir.join("upper.csv"), rep.upper.to_csv())?;
    }
    let code = if rep.verdict == EnvelopeVerdict::Inconclusive {
        EXIT_INCONCLUSIVE
    } else {
        EXIT_OK
    };
    #[derive(Serialize)]
    struct EnvelopeResult<'a> {
        tag: String,
        geometry: &'a PeanoGeometry,
        envelope: crate::envelope::EnvelopeSummary,
    }
    let summary = rep.summary();
    let line = format!(
        "{}: {} (span {}, max gap {:.3e})",
        tag.tag(),
        serde_json::to_value(summary.verdict)?.as_str().unwrap_or("?"),
        summary.span,
        summary.max_gap
    );
    let ctx = Ctx {
        command: "envelope",
        loaded: &loaded,
        point: Some(at),
        config: &cfg,
    };
    let out = ctx.emit(
        p,
        EnvelopeResult {
            tag: tag.tag(),
            geometry: &geom,
            envelope: summary,
        },
        line,
    )?;
    Ok(Outcome { stdout: out, code })
}

fn cmd_uniq(args: &PointArgs) -> Result<Outcome> {
    let loaded = load(&args.source)?;
    let cfg = effective_config(&args.knobs)?;
    let at = anchor(args, &loaded)?;
    let v = uniqueness_membership(&loaded.problem, at, &cfg)?;
    let code = if v.class == UniquenessClass::Unknown {
        EXIT_INCONCLUSIVE
    } else {
        EXIT_OK
    };
    let line = format!("{} (route: {})", v.class.as_str(), v.route);
    let ctx = Ctx {
        command: "uniq",
        loaded: &loaded,
        point: Some(at),
        config: &cfg,
    };
    Ok(Outcome {
        stdout: ctx.emit(args, &v, line)?,
        code,
    })
}

fn cmd_atlas(args: &AtlasArgs) -> Result<Outcome> {
    let loaded = load(&args.source)?;
    let cfg = effective_config(&args.knobs)?;
    let cells = atlas(&loaded.problem, args.grid.0, args.grid.1, &cfg)?;
    let csv = atlas_csv(&cells);
    match &args.out {
        Some(path) => {
            write_file(path, &csv)?;
            let mut counts = std::collections::BTreeMap::new();
            for c in &cells {
                *counts.entry(c.class.map_or("outside", |k| k.as_str())).or_insert(0usize) += 1;
            }
            let parts: Vec<String> = counts.iter().map(|(k, n)| format!("{k}: {n}")).collect();
            Ok(Outcome::ok(parts.join(", ")))
        }
        None => Ok(Outcome::ok(csv)),
    }
}

#[derive(Serialize)]
struct ProbeResult {
    outcome: ProbeOutcome,
    original: SideSummary,
    extended: SideSummary,
    evidence: Option<WitnessSummary>,
}

fn cmd_probe(args: &PointArgs) -> Result<Outcome> {
    let loaded = load(&args.source)?;
    let cfg = effective_config(&args.knobs)?;
    let at = anchor(args, &loaded)?;
    let rep = probe_extension(&loaded.problem, at, &cfg.classifier, &cfg.peano, &cfg.envelope)?;
    let outcome = match rep.outcome {
        ProbeOutcome::HiddenNonUniqueness => "hidden-non-uniqueness",
        ProbeOutcome::NonUnique => "non-uniqueness",
        ProbeOutcome::NoBranching => "no-branching",
    };
    let line = match &rep.evidence {
        Some(w) => format!("{outcome} ({} vs {}, {:?})", w.first.label, w.second.label, w.kind),
        None => outcome.to_string(),
    };
    let ctx = Ctx {
        command: "probe",
        loaded: &loaded,
        point: Some(at),
        config: &cfg,
    };
    let result = ProbeResult {
        outcome: rep.outcome,
        original: summarize(Direction::Right, &rep.original),
        extended: summarize(Direction::Right, &rep.extended),
        evidence: rep.evidence.as_ref().map(|w| w.summary()),
    };
    Ok(Outcome::ok(ctx.emit(args, result, line)?))
}

fn cmd_corpus_list() -> Result<Outcome> {
    let mut s = String::new();
    for id in corpus::list() {
        let e = corpus::get(id)?;
        let _ = writeln!(s, "{id}\t{}", e.description);
    }
    Ok(Outcome::ok(s.trim_end().to_string()))
}

fn cmd_corpus_export(out: &Path) -> Result<Outcome> {
    let paths = corpus::export_all(out)?;
    let lines: Vec<String> = paths.iter().map(|p| p.display().to_string()).collect();
    Ok(Outcome::ok(lines.join("\n")))
}

pub fn execute(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Classify(a) => cmd_classify(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Envelope(a) => cmd_envelope(a),
        Command::Uniq(a) => cmd_uniq(a),
        Command::Atlas(a) => cmd_atlas(a),
        Command::Probe(a) => cmd_probe(a),
        Command::CorpusList => cmd_corpus_list(),
        Command::CorpusExport { out } => cmd_corpus_export(out),
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Numeric(_) | Error::Eval(_) => EXIT_NUMERIC,
        _ => EXIT_INPUT,
    }
}

/// Parses `args`, runs the command, prints its output and returns the exit
/// code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(out) => {
            if !out.stdout.is_empty() {
                println!("{}", out.stdout.trim_end());
            }
            out.code
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_and_grids_parse() {
        assert_eq!(parse_point("1,-0.5").unwrap(), (1.0, -0.5));
        assert!(parse_point("1;2").is_err());
        assert!(parse_point("nan,0").is_err());
        assert_eq!(parse_grid("20x10").unwrap(), (20, 10));
        assert!(parse_grid("1x10").is_err());
    }

    #[test]
    fn knobs_override_defaults() {
        let k = Knobs {
            eps: Some(1e-4),
            k: Some(4),
            ..Knobs::default()
        };
        let cfg = effective_config(&k).unwrap();
        assert_eq!(cfg.envelope.eps, 1e-4);
        assert_eq!(cfg.envelope.k, 4);
        assert!(effective_config(&Knobs {
            eps: Some(-1.0),
            ..Knobs::default()
        })
        .is_err());
    }

    #[test]
    fn classify_lines() {
        let cli = Cli::try_parse_from(["bivp", "classify", "--corpus", "counterexample2", "--at", "0,0"]).unwrap();
        let out = execute(&cli).unwrap();
        assert_eq!(out.stdout, "B1[=,=]; cond4: upper holds, lower fails");
        assert_eq!(out.code, EXIT_OK);
        let cli = Cli::try_parse_from(["bivp", "classify", "--corpus", "example1", "--at", "0,0"]).unwrap();
        assert_eq!(execute(&cli).unwrap().stdout, "O1[=]; cond4: holds");
    }

    #[test]
    fn error_codes() {
        assert_eq!(exit_code(&Error::Input("x".into())), EXIT_INPUT);
        assert_eq!(exit_code(&Error::Numeric("x".into())), EXIT_NUMERIC);
    }
}
