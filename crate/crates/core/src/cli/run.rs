//! The `wforge` pipeline: generate → analyze → command stage → verdict →
//! artifacts.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;
use serde::Serialize;

use super::config::{Command, RunConfig, Tolerances};
use crate::calc::Field;
use crate::darboux::{darboux, DarbouxOptions, DarbouxReport};
use crate::error::WforgeError;
use crate::flat::{flatness, FlatnessOptions, FlatnessReport, SPANNING_MIN};
use crate::immersion::{best_chart, generate, project, write_obj, LineBundle, ObjProjection};
use crate::meancurv::{
    harmonicity_residual, willmore_density, Analysis, AnalysisReport, HopfFieldPair,
};
use crate::quat::Quaternion;
use crate::sequence::{willmore_sequence, SequenceReport, Shape};
use crate::tolerances::{INCIDENCE_MIN_DS, WILLMORE_ACCEPT};

/// Exit status of a completed run.
pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_VALIDATION: u8 = 2;

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "WFORGE_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "wforge",
    version,
    about = "Willmore surfaces in S^4 = HP^1: analysis, flat families, Darboux transforms, Willmore sequences"
)]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// Config file (`key = value` lines with `[section]` headers).
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    /// Override a config key, e.g. `--set grid.n=128` or `--set mu=1+i`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Further `KEY=VALUE` overrides, applied after `--set`.
    #[arg(value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

/// Which bound a check enforces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    Max,
    Min,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: Bound,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    pub fn max(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            value,
            bound: Bound::Max,
            threshold,
            passed: value <= threshold,
        }
    }

    pub fn min(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            value,
            bound: Bound::Min,
            threshold,
            passed: value >= threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct Validation {
    pub passed: bool,
    pub checks: Vec<Check>,
}

/// One written file; `clamped_vertices` is set for meshes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Artifact {
    pub file: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clamped_vertices: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// `report.json`. Field order is fixed; maps are sorted; the only
/// time-dependent field is the optional leading timestamp.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp_unix: Option<u64>,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: Command,
    pub config: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analysis: Option<AnalysisReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flatness: Option<FlatnessReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub darboux: Option<DarbouxReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sequence: Option<SequenceReport>,
    pub artifacts: Vec<Artifact>,
    /// A validation-class failure that stopped the pipeline.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub validation: Validation,
}

/// Result of [`run`]: where the report went and whether every check passed.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report_path: PathBuf,
    pub report: Report,
}

impl RunOutcome {
    pub fn exit_code(&self) -> u8 {
        if self.report.validation.passed {
            EXIT_OK
        } else {
            EXIT_VALIDATION
        }
    }
}

/// Errors that mean "the input failed a numerical precondition" rather than
/// "the run broke": they end in a report with exit code 2.
pub fn is_validation_error(e: &WforgeError) -> bool {
    matches!(
        e,
        WforgeError::ConformalityTooPoor { .. }
            | WforgeError::NotWillmore { .. }
            | WforgeError::NotComplexStructure { .. }
    )
}

/// Executes `cfg`, writing all artifacts into `cfg.output.dir`.
///
/// Returns `Err` only for errors that are not validation failures (exit 1).
pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    let dir = &cfg.output.dir;
    fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))?;
    let mut report = Report {
        timestamp_unix: cfg.output.timestamp.then(|| {
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        }),
        tool: "wforge",
        version: env!("CARGO_PKG_VERSION"),
        command: cfg.command,
        config: cfg.echo.clone(),
        analysis: None,
        flatness: None,
        darboux: None,
        sequence: None,
        artifacts: Vec::new(),
        error: None,
        validation: Validation::default(),
    };
    let mut checks = Vec::new();
    match execute(cfg, &mut report, &mut checks) {
        Ok(()) => {}
        Err(e) => match e.downcast_ref::<WforgeError>() {
            Some(w) if is_validation_error(w) => {
                checks.push(Check::max("precondition", f64::INFINITY, 0.0));
                report.error = Some(format!("{e:#}"));
            }
            _ => return Err(e),
        },
    }
    report.validation = Validation {
        passed: checks.iter().all(|c| c.passed),
        checks,
    };
    let report_path = dir.join("report.json");
    let mut text = serde_json::to_string_pretty(&report).context("serializing report")?;
    text.push('\n');
    fs::write(&report_path, text).with_context(|| format!("writing {}", report_path.display()))?;
    Ok(RunOutcome {
        report_path,
        report,
    })
}

fn execute(cfg: &RunConfig, report: &mut Report, checks: &mut Vec<Check>) -> Result<()> {
    let tol = &cfg.tolerances;
    let f = generate(&cfg.surface, cfg.nx, cfg.ny, cfg.stencil)
        .with_context(|| format!("generating {} on {}x{}", cfg.surface_name, cfg.nx, cfg.ny))?;
    let an = Analysis::new(f).with_context(|| format!("analyzing {}", cfg.surface_name))?;
    let ar = an.report(&cfg.surface_name).context("analysis report")?;
    checks.extend(analysis_checks(&ar, &an.hopf, tol));
    report.analysis = Some(ar);
    let willmore = harmonicity_residual(&an.hopf).a <= WILLMORE_ACCEPT;
    let dir = &cfg.output.dir;

    if cfg.output.obj {
        report.artifacts.extend(write_mesh(
            dir,
            "surface",
            &an.f.f,
            cfg.output.projection,
            None,
        )?);
    }
    if cfg.output.fields {
        write_fields(&dir.join("fields.csv"), &an).context("writing fields.csv")?;
        report.artifacts.push(Artifact {
            file: "fields.csv".into(),
            clamped_vertices: None,
            note: None,
        });
    }

    match cfg.command {
        Command::Analyze | Command::Export => {}
        Command::Flatness => {
            let opts = FlatnessOptions {
                lambdas: cfg.lambdas.clone(),
                mu: cfg.flatness_mu,
                basepoint: cfg.flatness_basepoint,
            };
            let fr = flatness(&an.s, &an.hopf, &opts).context("flatness")?;
            checks.extend(flatness_checks(&fr, willmore, tol));
            report.flatness = Some(fr);
        }
        Command::Darboux => {
            let mut opts = DarbouxOptions::new(cfg.darboux_mu);
            opts.conjugation = cfg.conjugation;
            opts.transport.basepoint = cfg.darboux_basepoint;
            let run = darboux(&an, &opts).context("darboux transform")?;
            checks.extend(darboux_checks(&run.report, tol));
            if cfg.output.obj {
                let (f_hat, note) = hat_immersion(&run.l_hat, run.report.line.masked_vertices)?;
                report.artifacts.extend(write_mesh(
                    dir,
                    "surface_hat",
                    &f_hat,
                    cfg.output.projection,
                    note,
                )?);
            }
            report.darboux = Some(run.report);
        }
        Command::Sequence => {
            let sr = willmore_sequence(&an, cfg.surface.genus(), cfg.n_max)
                .context("willmore sequence")?;
            checks.extend(sequence_checks(&sr, tol));
            report.sequence = Some(sr);
        }
    }
    Ok(())
}

/// Incidence residuals are reported relative to the Hopf field itself;
/// checks rescale them to `sup |dS|` (like the harmonicity residual) so that
/// a field that vanishes up to discretization error does not turn its own
/// noise into an O(1) defect. When `S` itself is constant up to
/// discretization error the check is skipped.
fn incidence_vs_ds(rel_residual: f64, sup_field: f64, sup_ds: f64) -> f64 {
    if sup_ds > 0.0 {
        rel_residual * sup_field / sup_ds
    } else {
        0.0
    }
}

pub fn analysis_checks(r: &AnalysisReport, hp: &HopfFieldPair, tol: &Tolerances) -> Vec<Check> {
    let mut c = vec![
        Check::max(
            "analysis.conformality_residual",
            r.conformality_residual,
            tol.conformality,
        ),
        Check::max(
            "analysis.type_relation_residual",
            r.type_relation_residual,
            tol.identity,
        ),
        Check::max(
            "analysis.ds_identity_residual",
            r.ds_identity_residual,
            tol.identity,
        ),
        Check::max(
            "analysis.stability_residual",
            r.stability_residual,
            tol.identity,
        ),
        Check::max(
            "analysis.envelope_residual",
            r.envelope_residual,
            tol.discretization,
        ),
    ];
    if hp.ds.grid.chart_scale() * r.sup_ds >= INCIDENCE_MIN_DS {
        let q = incidence_vs_ds(r.l_in_ker_q_residual, r.sup_q, r.sup_ds);
        let a = incidence_vs_ds(r.im_a_in_l_residual, r.sup_a, r.sup_ds);
        c.push(Check::max("analysis.l_in_ker_q", q, tol.discretization));
        c.push(Check::max("analysis.im_a_in_l", a, tol.discretization));
    }
    c
}

pub fn flatness_checks(r: &FlatnessReport, willmore: bool, tol: &Tolerances) -> Vec<Check> {
    let mut c: Vec<Check> = r
        .curvature
        .iter()
        .map(|k| {
            let name = format!(
                "flatness.curvature_identity[{}{:+}i]",
                k.lambda.0, k.lambda.1
            );
            Check::max(name, k.residual_scaled, tol.discretization)
        })
        .collect();
    if let Some(m) = r.spanning_margin {
        c.push(Check::min("flatness.spanning_margin", m, SPANNING_MIN));
    }
    // Path independence and commuting monodromies are consequences of
    // flatness, which only Willmore surfaces have.
    if willmore {
        if let Some(p) = r.path_independence_residual {
            c.push(Check::max(
                "flatness.path_independence_residual",
                p,
                tol.discretization,
            ));
        }
        if let Some(m) = r.monodromy_commutator {
            c.push(Check::max(
                "flatness.monodromy_commutator",
                m,
                tol.discretization,
            ));
        }
    }
    c
}

pub fn darboux_checks(r: &DarbouxReport, tol: &Tolerances) -> Vec<Check> {
    let t = &r.transform;
    vec![
        Check::max(
            "darboux.ab_square_residual",
            t.ab_square_residual,
            tol.identity,
        ),
        Check::max("darboux.ab_commutator", t.ab_commutator, tol.identity),
        Check::max("darboux.hat_s_square", t.hat_s_square, tol.identity),
        Check::max(
            "darboux.hat_a_residual",
            r.hat_a_residual,
            tol.discretization,
        ),
        Check::max(
            "darboux.hat_q_residual",
            r.hat_q_residual,
            tol.discretization,
        ),
        Check::max(
            "darboux.riccati_residual",
            r.riccati_residual,
            tol.discretization,
        ),
        Check::max(
            "darboux.hat_s_closed_form",
            r.hat_s_closed_form,
            tol.discretization,
        ),
        Check::max("darboux.hat_incidence", r.hat_incidence, tol.discretization),
        Check::max(
            "darboux.hat_s_harmonicity",
            r.hat_s_harmonicity,
            tol.discretization,
        ),
        Check::max(
            "darboux.path_independence_residual",
            r.path_independence_residual,
            tol.discretization,
        ),
        Check::max(
            "darboux.basis_independence",
            r.basis_independence,
            tol.basis_independence,
        ),
        Check::min("darboux.spanning_margin", r.spanning_margin, SPANNING_MIN),
    ]
}

pub fn sequence_checks(r: &SequenceReport, tol: &Tolerances) -> Vec<Check> {
    let consistent = if matches!(r.shape, Shape::Inconsistent) {
        0.0
    } else {
        1.0
    };
    let mut c = vec![Check::min("sequence.shape_consistent", consistent, 1.0)];
    if let Some(d) = &r.normal_degree {
        c.push(Check::max(
            "sequence.normal_degree_integrality",
            d.distance,
            tol.degree_integrality,
        ));
    }
    for b in &r.energy_bounds {
        c.push(Check::min(
            format!("sequence.energy_bound_slack[n={}]", b.n),
            b.slack,
            0.0,
        ));
    }
    c
}

/// `f̂` for mesh output. When `L̂` passes through `∞` of the standard chart
/// the line is first moved by the chart change that keeps it farthest from
/// `∞` (a Möbius transformation, noted in the report).
fn hat_immersion(l_hat: &LineBundle, masked: usize) -> Result<(Field<Quaternion>, Option<String>)> {
    if masked == 0 {
        if let Ok(f) = project(l_hat) {
            return Ok((f.f, None));
        }
    }
    let (g, margin) = best_chart(&l_hat.psi);
    let moved = LineBundle {
        psi: l_hat.psi.map(|v| g.apply(*v)),
    };
    let f = project(&moved).context("projecting the Darboux transform to a chart")?;
    Ok((
        f.f,
        Some(format!(
            "chart moved by a Möbius transformation to avoid infinity (margin {margin:.3e})"
        )),
    ))
}

fn write_mesh(
    dir: &Path,
    stem: &str,
    f: &Field<Quaternion>,
    proj: ObjProjection,
    note: Option<String>,
) -> Result<Vec<Artifact>> {
    let obj = format!("{stem}.obj");
    let path = dir.join(&obj);
    let mut w = BufWriter::new(
        File::create(&path).with_context(|| format!("creating {}", path.display()))?,
    );
    let clamped =
        write_obj(f, proj, &mut w).with_context(|| format!("writing {}", path.display()))?;
    w.flush()?;
    let side = format!("{stem}.clamped.txt");
    let side_path = dir.join(&side);
    let mut s = String::new();
    s.push_str(&format!(
        "# vertices of {obj} clamped at the projection pole (1-based OBJ indices)\n"
    ));
    for k in &clamped {
        s.push_str(&format!("{}\n", k + 1));
    }
    fs::write(&side_path, s).with_context(|| format!("writing {}", side_path.display()))?;
    Ok(vec![
        Artifact {
            file: obj,
            clamped_vertices: Some(clamped.len()),
            note,
        },
        Artifact {
            file: side,
            clamped_vertices: None,
            note: None,
        },
    ])
}

#[derive(Serialize)]
struct FieldRow {
    i: usize,
    j: usize,
    x: f64,
    y: f64,
    f_re: f64,
    f_i: f64,
    f_j: f64,
    f_k: f64,
    willmore_density: f64,
    abs_a: f64,
    abs_q: f64,
    abs_ds: f64,
}

/// One row per vertex: position, `f`, the Willmore density and the pointwise
/// sizes `(|ω(∂x)|² + |ω(∂y)|²)^½` of `A`, `Q` and `dS`.
fn write_fields(path: &Path, an: &Analysis) -> Result<()> {
    let g = an.f.grid;
    let density = willmore_density(&an.hopf);
    let size = |x: &[crate::quat::QuatMat2], y: &[crate::quat::QuatMat2], k: usize| {
        x[k].norm().hypot(y[k].norm())
    };
    let hp = &an.hopf;
    let mut w = csv::Writer::from_path(path)?;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let k = g.idx(i, j);
            let q = an.f.f.data[k];
            w.serialize(FieldRow {
                i,
                j,
                x: g.x(i),
                y: g.y(j),
                f_re: q.w,
                f_i: q.x,
                f_j: q.y,
                f_k: q.z,
                willmore_density: density.data[k],
                abs_a: size(&hp.a.x, &hp.a.y, k),
                abs_q: size(&hp.q.x, &hp.q.y, k),
                abs_ds: size(&hp.ds.x, &hp.ds.y, k),
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Caps rayon's global pool from [`THREADS_ENV`].
pub fn configure_threads() -> Result<Option<usize>> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(None);
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .with_context(|| format!("{THREADS_ENV}={v:?}: expected a positive integer"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .with_context(|| format!("configuring {n} worker threads"))?;
    Ok(Some(n))
}

/// Parses arguments, runs, reports to stderr and maps the outcome to an exit
/// code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR } else { EXIT_OK });
        }
    };
    match run_cli(&cli) {
        Ok(out) => {
            let v = &out.report.validation;
            let failed: Vec<&Check> = v.checks.iter().filter(|c| !c.passed).collect();
            if let Some(e) = &out.report.error {
                eprintln!("wforge: validation failure: {e}");
            }
            for c in &failed {
                let op = if c.bound == Bound::Max { "<=" } else { ">=" };
                eprintln!(
                    "wforge: check failed: {} = {:e} (need {op} {:e})",
                    c.name, c.value, c.threshold
                );
            }
            eprintln!(
                "wforge: {}/{} checks passed; report: {}",
                v.checks.len() - failed.len(),
                v.checks.len(),
                out.report_path.display()
            );
            ExitCode::from(out.exit_code())
        }
        Err(e) => {
            eprintln!("wforge: error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

pub fn run_cli(cli: &Cli) -> Result<RunOutcome> {
    configure_threads()?;
    let (text, label) = match &cli.config {
        Some(p) => (
            fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?,
            p.display().to_string(),
        ),
        None => (String::new(), "<none>".to_string()),
    };
    let sets: Vec<String> = cli.set.iter().chain(&cli.overrides).cloned().collect();
    let cfg = RunConfig::load(cli.command, &text, &label, &sets)?;
    run(&cfg)
}
