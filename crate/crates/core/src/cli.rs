//! The `cc-index` command line: `find`, `analyze`, `topology` and `verify`.
//!
//! Every command returns a [`Outcome`] holding its exit code and the text
//! destined for stdout and stderr, so that the commands can be driven from
//! tests without spawning a process.

use std::path::PathBuf;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::census::{census, regroup, CensusEntry, CensusOptions};
use crate::error::CcError;
use crate::geometry::{center_and_normalize, rotation_orbit_dimension, Configuration, MassSystem};
use crate::index::verify_theorem;
use crate::io::{key_values_to_csv, records_to_csv, records_to_json, CensusRecord, ProblemSpecFile};
use crate::solver::{Group, NewtonOptions};
use crate::topology::{
    dim_maximal_orbit_manifold, lefschetz_and_degree, mccord_m_dimensions, morse_inequality_report,
    pacella_series, poincare_configuration, poincare_planar_quotient, DegreeCase, MorseInequalityReport,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_MISMATCH: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_COLLISION: i32 = 3;

/// Environment variable capping solver threads.
pub const THREADS_ENV: &str = "CC_INDEX_THREADS";

#[derive(Debug, Parser)]
#[command(name = "cc-index", version, about = "Central configurations, Morse indices and fixed point indices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Isometry group for class identification. `auto` is `O` in dimension one
/// (where `SO(1)` is trivial) and `SO` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GroupArg {
    Auto,
    #[value(name = "SO")]
    So,
    #[value(name = "O")]
    O,
}

impl GroupArg {
    pub fn resolve(self, d: usize) -> Group {
        match self {
            GroupArg::Auto if d == 1 => Group::Orthogonal,
            GroupArg::Auto | GroupArg::So => Group::Special,
            GroupArg::O => Group::Orthogonal,
        }
    }
}

#[derive(Debug, Clone, clap::Args)]
pub struct SolveArgs {
    /// Problem file (JSON with n, d, alpha, masses, optional coordinates).
    pub spec: PathBuf,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1000)]
    pub starts: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = GroupArg::Auto)]
    pub group: GroupArg,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Enumerate central configuration classes from random starts.
    Find(SolveArgs),
    /// Analyse the configuration given in the problem file.
    Analyze {
        spec: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Print Poincare polynomials and related closed-form invariants.
    Topology {
        #[arg(long)]
        n: i64,
        #[arg(long)]
        d: i64,
        #[arg(long, default_value_t = 8)]
        max_degree: usize,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Census, index identity at every class, and Lefschetz numbers.
    Verify(SolveArgs),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(stdout: String, stderr: String) -> Self {
        Self { code: EXIT_OK, stdout, stderr }
    }

    fn fail(code: i32, message: impl Into<String>) -> Self {
        Self { code, stdout: String::new(), stderr: message.into() + "\n" }
    }
}

pub fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Find(args) => cmd_find(&args),
        Command::Analyze { spec, format } => cmd_analyze(&spec, format),
        Command::Topology { n, d, max_degree, format } => cmd_topology(n, d, max_degree, format),
        Command::Verify(args) => cmd_verify(&args),
    }
}

fn load(path: &std::path::Path) -> Result<(crate::io::Problem, String), Outcome> {
    let problem = ProblemSpecFile::load(path)
        .and_then(|s| s.validate())
        .map_err(|e| Outcome::fail(EXIT_VALIDATION, format!("error: {e}")))?;
    let mut stderr = String::new();
    for w in &problem.warnings {
        log::warn!("{w}");
        stderr.push_str(&format!("warning: {w}\n"));
    }
    Ok((problem, stderr))
}

fn census_options(args: &SolveArgs, group: Group) -> Result<CensusOptions, Outcome> {
    if args.starts == 0 {
        return Err(Outcome::fail(EXIT_VALIDATION, "error: invalid `starts`: must be at least 1"));
    }
    if !(args.tol > 0.0) {
        return Err(Outcome::fail(EXIT_VALIDATION, "error: invalid `tol`: must be > 0"));
    }
    let newton = NewtonOptions { tol_residual: args.tol, max_iter: args.max_iter, ..NewtonOptions::default() };
    Ok(CensusOptions { group, n_starts: args.starts, seed: args.seed, newton })
}

fn emit_records(records: &[CensusRecord], format: Format) -> String {
    match format {
        Format::Json => records_to_json(records) + "\n",
        Format::Csv => records_to_csv(records),
    }
}

pub fn cmd_find(args: &SolveArgs) -> Outcome {
    let (problem, stderr) = match load(&args.spec) {
        Ok(p) => p,
        Err(o) => return o,
    };
    let group = args.group.resolve(problem.system.d());
    let opts = match census_options(args, group) {
        Ok(o) => o,
        Err(o) => return o,
    };
    match census(&problem.system, &opts) {
        Ok(entries) => {
            let records: Vec<CensusRecord> = entries.iter().map(CensusRecord::from).collect();
            Outcome::ok(emit_records(&records, args.format), stderr)
        }
        Err(e) => Outcome::fail(EXIT_MISMATCH, format!("error: {e}")),
    }
}

/// Full report at one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeReport {
    pub n: usize,
    pub d: usize,
    pub alpha: f64,
    /// Input centered and scaled onto the unit inertia ellipsoid.
    pub coordinates: Vec<Vec<f64>>,
    pub potential: f64,
    pub lambda: f64,
    pub residual_norm: f64,
    pub critical: bool,
    pub eigenvalues: Option<Vec<f64>>,
    pub morse_index: Option<usize>,
    pub kernel_dim: Option<usize>,
    pub orbit_dim: usize,
    pub nondegenerate: bool,
    pub index_by_determinant: Option<i32>,
    pub index_by_morse: Option<i32>,
    pub corollary_residual: Option<f64>,
    pub theorem_verified: bool,
    pub failure: Option<String>,
}

fn fmt_opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

fn fmt_floats(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

impl AnalyzeReport {
    fn rows(&self) -> Vec<(String, String)> {
        [
            ("n", self.n.to_string()),
            ("d", self.d.to_string()),
            ("alpha", self.alpha.to_string()),
            ("coordinates", self.coordinates.iter().map(|p| fmt_floats(p)).collect::<Vec<_>>().join("|")),
            ("potential", self.potential.to_string()),
            ("lambda", self.lambda.to_string()),
            ("residual_norm", self.residual_norm.to_string()),
            ("critical", self.critical.to_string()),
            ("eigenvalues", self.eigenvalues.as_deref().map(fmt_floats).unwrap_or_default()),
            ("morse_index", fmt_opt(&self.morse_index)),
            ("kernel_dim", fmt_opt(&self.kernel_dim)),
            ("orbit_dim", self.orbit_dim.to_string()),
            ("nondegenerate", self.nondegenerate.to_string()),
            ("index_by_determinant", fmt_opt(&self.index_by_determinant)),
            ("index_by_morse", fmt_opt(&self.index_by_morse)),
            ("corollary_residual", fmt_opt(&self.corollary_residual)),
            ("theorem_verified", self.theorem_verified.to_string()),
            ("failure", fmt_opt(&self.failure)),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }
}

pub fn analyze_configuration(system: &Arc<MassSystem>, points: &[Vec<f64>]) -> Result<AnalyzeReport, CcError> {
    let q = Configuration::from_points(system.clone(), points)?;
    let q = center_and_normalize(&q)?;
    let t = verify_theorem(&q)?;
    let spectrum = t.spectrum.as_ref();
    Ok(AnalyzeReport {
        n: system.n(),
        d: system.d(),
        alpha: system.alpha(),
        coordinates: q.points(),
        potential: t.potential,
        lambda: t.lambda,
        residual_norm: t.residual_norm,
        critical: t.critical,
        eigenvalues: spectrum.map(|s| s.eigenvalues.clone()),
        morse_index: spectrum.map(|s| s.morse_index),
        kernel_dim: spectrum.map(|s| s.kernel_dim),
        orbit_dim: spectrum.map_or_else(|| rotation_orbit_dimension(&q), |s| s.orbit_dim),
        nondegenerate: t.nondegenerate(),
        index_by_determinant: t.index_by_determinant,
        index_by_morse: t.index_by_morse,
        corollary_residual: t.corollary_residual,
        theorem_verified: t.verified(),
        failure: t.failure.clone(),
    })
}

pub fn cmd_analyze(spec: &std::path::Path, format: Format) -> Outcome {
    let (problem, stderr) = match load(spec) {
        Ok(p) => p,
        Err(o) => return o,
    };
    let Some(points) = problem.coordinates.as_ref() else {
        return Outcome::fail(EXIT_VALIDATION, "error: invalid `coordinates`: required by analyze");
    };
    match analyze_configuration(&problem.system, points) {
        Ok(report) => {
            let out = match format {
                Format::Json => serde_json::to_string_pretty(&report).expect("report serializes") + "\n",
                Format::Csv => key_values_to_csv(&report.rows()),
            };
            Outcome::ok(out, stderr)
        }
        Err(e @ CcError::Collision { .. }) => Outcome::fail(EXIT_COLLISION, format!("error: {e}")),
        Err(e @ CcError::DegenerateInput(_)) => Outcome::fail(EXIT_COLLISION, format!("error: {e}")),
        Err(e) => Outcome::fail(EXIT_VALIDATION, format!("error: {e}")),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyReport {
    pub n: usize,
    pub d: usize,
    /// `P(t)` of the configuration space; `None` for `d = 1`.
    pub poincare_configuration: Option<Vec<i64>>,
    /// `p(t)` of the planar quotient (`d = 2`, `n >= 3`).
    pub poincare_planar_quotient: Option<Vec<i64>>,
    /// `dim H^k` of the maximal orbit type manifold (`d = 2`, `n >= 3`).
    pub mccord_dimensions: Option<Vec<i64>>,
    /// Equivariant series truncated at `max_degree` (`d = 3`, `n >= 3`).
    pub pacella_series: Option<Vec<i64>>,
    pub dim_maximal_orbit_manifold: i64,
    pub notes: Vec<String>,
}

pub fn topology_report(n: usize, d: usize, max_degree: usize) -> TopologyReport {
    let mut notes = Vec::new();
    let mut keep = |name: &str, r: Result<Vec<i64>, CcError>| match r {
        Ok(v) => Some(v),
        Err(e) => {
            notes.push(format!("{name}: {e}"));
            None
        }
    };
    let poincare = keep("poincare_configuration", poincare_configuration(n, d).map(|p| p.coefficients().to_vec()));
    let (planar, mccord) = if d == 2 {
        (
            keep("poincare_planar_quotient", poincare_planar_quotient(n).map(|p| p.coefficients().to_vec())),
            keep("mccord_dimensions", mccord_m_dimensions(n)),
        )
    } else {
        (None, None)
    };
    let pacella =
        if d == 3 { keep("pacella_series", pacella_series(n, max_degree).map(|p| p.truncated(max_degree))) } else { None };
    TopologyReport {
        n,
        d,
        poincare_configuration: poincare,
        poincare_planar_quotient: planar,
        mccord_dimensions: mccord,
        pacella_series: pacella,
        dim_maximal_orbit_manifold: dim_maximal_orbit_manifold(n, d),
        notes,
    }
}

pub fn cmd_topology(n: i64, d: i64, max_degree: usize, format: Format) -> Outcome {
    if n < 2 {
        return Outcome::fail(EXIT_VALIDATION, format!("error: invalid `n`: need n >= 2, got {n}"));
    }
    if d < 1 {
        return Outcome::fail(EXIT_VALIDATION, format!("error: invalid `d`: need d >= 1, got {d}"));
    }
    let r = topology_report(n as usize, d as usize, max_degree);
    let out = match format {
        Format::Json => serde_json::to_string_pretty(&r).expect("report serializes") + "\n",
        Format::Csv => {
            let ints = |v: &Option<Vec<i64>>| {
                v.as_ref().map(|v| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")).unwrap_or_default()
            };
            key_values_to_csv(&[
                ("n".into(), r.n.to_string()),
                ("d".into(), r.d.to_string()),
                ("poincare_configuration".into(), ints(&r.poincare_configuration)),
                ("poincare_planar_quotient".into(), ints(&r.poincare_planar_quotient)),
                ("mccord_dimensions".into(), ints(&r.mccord_dimensions)),
                ("pacella_series".into(), ints(&r.pacella_series)),
                ("dim_maximal_orbit_manifold".into(), r.dim_maximal_orbit_manifold.to_string()),
                ("notes".into(), r.notes.join("; ")),
            ])
        }
    };
    Outcome::ok(out, String::new())
}

/// Lefschetz number and degree of the quotient map in a closed case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LefschetzCheck {
    pub case: DegreeCase,
    /// Group whose classes are summed.
    pub quotient_group: Group,
    pub indices: Vec<i32>,
    pub lefschetz_number: i64,
    pub degree: Option<i64>,
    pub expected_lefschetz_number: i64,
    pub expected_degree: i64,
    pub matches: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub n: usize,
    pub d: usize,
    pub alpha: f64,
    pub group: Group,
    pub classes: Vec<CensusRecord>,
    pub nondegenerate_classes: usize,
    pub failing_classes: Vec<usize>,
    pub lefschetz: Option<LefschetzCheck>,
    pub morse_inequalities: Option<MorseInequalityReport>,
    pub passed: bool,
}

/// The two systems whose regularized quotient map has a known Lefschetz
/// number and degree: `(case, quotient group, L, deg)`.
pub fn closed_case(n: usize, d: usize) -> Option<(DegreeCase, Group, i64, i64)> {
    match (n, d) {
        (3, 1) => Some((DegreeCase::Circle, Group::Orthogonal, 3, -2)),
        (3, 2) => Some((DegreeCase::ComplexProjectiveLine, Group::Special, -1, -2)),
        _ => None,
    }
}

/// Census at the `SO(d)` level followed by the checks of `cc-index verify`.
pub fn verify_system(system: &Arc<MassSystem>, opts: &CensusOptions) -> Result<VerifyReport, CcError> {
    let base = census(system, &CensusOptions { group: Group::Special, ..*opts })?;
    let grouped = |g: Group| -> Result<Vec<CensusEntry>, CcError> {
        match g {
            Group::Special => Ok(base.clone()),
            Group::Orthogonal => regroup(&base, Group::Orthogonal),
        }
    };
    let reported = grouped(opts.group)?;
    let failing_classes: Vec<usize> = reported
        .iter()
        .filter(|e| e.analysis.nondegenerate() && !e.analysis.passed)
        .map(|e| e.class_id)
        .collect();
    let nondegenerate_classes = reported.iter().filter(|e| e.analysis.nondegenerate()).count();

    let (n, d) = (system.n(), system.d());
    let lefschetz = match closed_case(n, d) {
        Some((case, quotient_group, expected_l, expected_deg)) => {
            let entries = grouped(quotient_group)?;
            let indices: Vec<i32> = entries.iter().filter_map(|e| e.fixed_point_index()).collect();
            let complete = indices.len() == entries.len();
            let (l, degree) = lefschetz_and_degree(&indices, case);
            Some(LefschetzCheck {
                case,
                quotient_group,
                matches: complete && l == expected_l && degree == Some(expected_deg),
                indices,
                lefschetz_number: l,
                degree,
                expected_lefschetz_number: expected_l,
                expected_degree: expected_deg,
            })
        }
        None => None,
    };
    let morse_inequalities = if d == 2 && n >= 3 {
        let betti = poincare_planar_quotient(n)?;
        let mu: Vec<usize> = base.iter().filter_map(|e| e.morse_index()).collect();
        Some(morse_inequality_report(&mu, &betti))
    } else {
        None
    };
    let passed = failing_classes.is_empty() && lefschetz.as_ref().is_none_or(|l| l.matches);
    Ok(VerifyReport {
        n,
        d,
        alpha: system.alpha(),
        group: opts.group,
        classes: reported.iter().map(CensusRecord::from).collect(),
        nondegenerate_classes,
        failing_classes,
        lefschetz,
        morse_inequalities,
        passed,
    })
}

fn summary(r: &VerifyReport) -> String {
    let mut s = format!(
        "n={} d={} alpha={} group={}: {} classes, {} nondegenerate\n",
        r.n,
        r.d,
        r.alpha,
        r.group,
        r.classes.len(),
        r.nondegenerate_classes
    );
    for c in &r.classes {
        s.push_str(&format!(
            "  class {:>3}  U={:.12}  mu={}  kernel={}  index={}  {}\n",
            c.class_id,
            c.potential,
            c.morse_index,
            c.kernel_dim,
            c.fixed_point_index.map_or("undefined".to_string(), |i| format!("{i:+}")),
            if !c.nondegenerate {
                "degenerate"
            } else if c.theorem_verified {
                "verified"
            } else {
                "FAILED"
            }
        ));
    }
    if let Some(l) = &r.lefschetz {
        s.push_str(&format!(
            "  Lefschetz number {} (expected {}), degree {} (expected {}): {}\n",
            l.lefschetz_number,
            l.expected_lefschetz_number,
            fmt_opt(&l.degree),
            l.expected_degree,
            if l.matches { "ok" } else { "MISMATCH" }
        ));
    }
    s.push_str(if r.passed { "verification passed\n" } else { "verification FAILED\n" });
    s
}

pub fn cmd_verify(args: &SolveArgs) -> Outcome {
    let (problem, mut stderr) = match load(&args.spec) {
        Ok(p) => p,
        Err(o) => return o,
    };
    let group = args.group.resolve(problem.system.d());
    let opts = match census_options(args, group) {
        Ok(o) => o,
        Err(o) => return o,
    };
    match verify_system(&problem.system, &opts) {
        Ok(report) => {
            stderr.push_str(&summary(&report));
            if !report.passed {
                for id in &report.failing_classes {
                    stderr.push_str(&format!("failing class: {id}\n"));
                }
            }
            let stdout = match args.format {
                Format::Json => serde_json::to_string_pretty(&report).expect("report serializes") + "\n",
                Format::Csv => records_to_csv(&report.classes),
            };
            Outcome { code: if report.passed { EXIT_OK } else { EXIT_MISMATCH }, stdout, stderr }
        }
        Err(e) => Outcome::fail(EXIT_MISMATCH, format!("error: {e}")),
    }
}
