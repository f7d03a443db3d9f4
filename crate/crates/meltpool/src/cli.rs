//! Command-line interface.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use meltpool_core::bench::{self, CaseId, CaseRun, ConductivityModel, GridPreset, Layout, Machine, SourceVariant};
use meltpool_core::calibration::{self, CalibrationTarget, NelderMeadSettings, Parameter, ParameterHandle};
use meltpool_core::metrics::{self, MetricSettings, ScanGeometry};
use meltpool_core::solver;
use meltpool_core::verify::{self, HalfSpaceSetup, RosenthalSetup, VerificationReport};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::{AppError, Result};
use crate::fetch::{FetchCache, HttpTransport};
use crate::formats;
use crate::manifest::RunManifest;
use crate::report;
use crate::store::{self, MetricRow, OutputDir};

#[derive(Debug, Parser)]
#[command(name = "meltpool", version, about = "Laser melt-pool simulation and AMB2018-02 benchmark harness")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a config; writes snapshots, metrics and the solver log.
    Run(RunArgs),
    /// Vary one parameter and tabulate the melt-pool metrics.
    Sweep(SweepArgs),
    /// Fit parameters to target metrics with bounded Nelder-Mead.
    Calibrate(CalibrateArgs),
    /// Run benchmark cases and print deviations from the measurements.
    Bench(BenchArgs),
    /// Compare the solver with the half-space and Rosenthal solutions.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Config files, merged in order (later keys win).
    #[arg(short, long = "config", required = true, num_args = 1..)]
    pub configs: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Output directory, created if missing
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_parameter(s: &str) -> std::result::Result<Parameter, String> {
    Parameter::from_name(s).ok_or_else(|| {
        let names: Vec<&str> = Parameter::ALL.iter().map(|p| p.name()).collect();
        format!("unknown parameter `{s}` (expected one of {})", names.join(", "))
    })
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Parameter to vary.
    #[arg(long, value_parser = parse_parameter)]
    pub param: Parameter,
    /// Values, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub values: Vec<f64>,
    /// Output directory, created if missing
    #[arg(long)]
    pub out: PathBuf,
}

/// `name` or `name=lower:upper`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeParameter {
    pub parameter: Parameter,
    pub bounds: Option<(f64, f64)>,
}

fn parse_free(s: &str) -> std::result::Result<FreeParameter, String> {
    let (name, bounds) = match s.split_once('=') {
        None => (s, None),
        Some((name, range)) => {
            let (lo, hi) = range.split_once(':').ok_or("bounds must be written lower:upper")?;
            let num = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("`{v}` is not a number"));
            (name, Some((num(lo)?, num(hi)?)))
        }
    };
    Ok(FreeParameter {
        parameter: parse_parameter(name.trim())?,
        bounds,
    })
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Free parameter, optionally with bounds: `absorptivity=0.2:0.6`.
    #[arg(long = "free", required = true, value_parser = parse_free)]
    pub free: Vec<FreeParameter>,
    #[arg(long)]
    pub target_length_um: Option<f64>,
    #[arg(long)]
    pub target_width_um: Option<f64>,
    #[arg(long)]
    pub target_depth_um: Option<f64>,
    #[arg(long)]
    pub target_cooling_rate_c_s: Option<f64>,
    /// Weights for length, width, depth and cooling rate; each given
    /// target has weight 1 by default.
    #[arg(long, value_delimiter = ',', num_args = 4)]
    pub weights: Option<Vec<f64>>,
    /// Maximum number of simulations.
    #[arg(long, default_value_t = NelderMeadSettings::default().budget)]
    pub budget: usize,
    /// Output directory, created if missing
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MachineArg {
    Cbm,
    Ammt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CaseArg {
    A,
    B,
    C,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Iso,
    Aniso,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GridArg {
    Desk,
    Convergence,
}

impl GridArg {
    pub fn preset(self) -> GridPreset {
        match self {
            GridArg::Desk => bench::DESK,
            GridArg::Convergence => bench::CONVERGENCE,
        }
    }
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum)]
    pub machine: MachineArg,
    /// Cases to run; all three when omitted.
    #[arg(long = "case", value_enum)]
    pub cases: Vec<CaseArg>,
    #[arg(long, value_enum, default_value_t = ModelArg::Iso)]
    pub model: ModelArg,
    #[arg(long, value_enum, default_value_t = GridArg::Desk)]
    pub grid: GridArg,
    /// Measured laser profile, a file or an http(s) URL fetched through
    /// the cache in $MELTPOOL_CACHE_DIR.
    #[arg(long)]
    pub profile: Option<String>,
    /// Expected SHA-256 of a profile URL.
    #[arg(long)]
    pub profile_sha256: Option<String>,
    /// Output directory, created if missing
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = GridArg::Desk)]
    pub grid: GridArg,
    /// Output directory, created if missing
    #[arg(long)]
    pub out: PathBuf,
}

/// Runs a parsed command. `argv` is echoed into the manifest.
pub fn execute(cli: &Cli, argv: Vec<String>) -> Result<()> {
    let start = Instant::now();
    match &cli.command {
        Command::Run(a) => run(a, argv, start),
        Command::Sweep(a) => sweep(a, argv, start),
        Command::Calibrate(a) => calibrate(a, argv, start),
        Command::Bench(a) => bench_cases(a, argv, start),
        Command::Verify(a) => verify_all(a, argv, start),
    }
}

fn finish(mut manifest: RunManifest, out: &mut OutputDir, start: Instant) -> Result<()> {
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    let m = manifest.write(out)?;
    println!("wrote {} files to {}", m.files.len(), out.root().display());
    Ok(())
}

fn run(args: &RunArgs, argv: Vec<String>, start: Instant) -> Result<()> {
    let cfg = RunConfig::load(&args.config.configs)?;
    let resolved = cfg.resolve()?;
    let sim = &resolved.simulation;
    let plan = &resolved.metrics;
    let mut out = OutputDir::create(&args.out)?;
    let echo = cfg.to_toml();
    out.write_text("config.toml", &echo)?;

    let output = solver::simulate(sim)?;
    let residual = solver::energy_balance(&output.snapshots, &output.report, sim)?;
    let path = &sim.source.path;
    store::write_snapshots(&mut out, &output.snapshots, path, cfg.output.vtk, cfg.output.samples_csv)?;
    store::write_solve_report(&mut out, &output.report)?;
    store::write_energy_summary(&mut out, &output.report, residual)?;

    let rows: Vec<MetricRow> = output
        .snapshots
        .par_iter()
        .enumerate()
        .map(|(i, s)| MetricRow {
            snapshot: i,
            time: s.time(),
            travel: path.travel(s.time()),
            result: plan.measure(s, path),
        })
        .collect();
    store::write_metrics(&mut out, &rows)?;

    println!(
        "{} steps, {} Newton iterations, energy residual {:.2e}",
        output.report.steps.len(),
        output.report.total_newton_iterations(),
        residual
    );
    match plan.objective_snapshot(&output, path) {
        Ok(m) => {
            println!(
                "at {:.3} mm travel: length {:.1} μm, width {:.1} μm, depth {:.1} μm, cooling rate {}",
                path.travel(m.time),
                m.length,
                m.width,
                m.depth,
                m.cooling_rate.map_or("n/a".to_string(), |c| format!("{c:.3e} °C/s"))
            );
            if cfg.metrics.contours && !m.empty {
                let geom = ScanGeometry::from_path(path);
                let field = output.snapshot_near(m.time);
                let c = metrics::cross_section_contour(field, &geom, m.widest_station, plan.isotherm, &plan.settings)?;
                store::write_contours(&mut out, "contour.csv", &c)?;
            }
        }
        Err(e) => println!("objective snapshot not measured: {e}"),
    }

    let mut manifest = RunManifest::new("run", argv, cfg.grid.preset_name());
    manifest.config = Some(echo);
    finish(manifest, &mut out, start)
}

fn sweep(args: &SweepArgs, argv: Vec<String>, start: Instant) -> Result<()> {
    let cfg = RunConfig::load(&args.config.configs)?;
    let resolved = cfg.resolve()?;
    let sim = &resolved.simulation;
    let plan = &resolved.metrics;
    let handle = ParameterHandle::from_config(args.param, sim)?;
    if let Some(v) = args.values.iter().find(|v| !handle.contains(**v)) {
        return Err(AppError::config(
            "--values",
            format!("{v} lies outside [{}, {}] for {}", handle.lower, handle.upper, args.param.name()),
        ));
    }
    let mut out = OutputDir::create(&args.out)?;
    let echo = cfg.to_toml();
    out.write_text("config.toml", &echo)?;
    let rows = calibration::sensitivity_sweep(sim, &handle, &args.values, |c| plan.evaluate(c));
    out.write_text("sweep.csv", &report::sweep_csv(args.param, &rows))?;
    for r in &rows {
        match &r.result {
            Ok(m) => println!(
                "{} = {}: length {:.1} μm, width {:.1} μm, depth {:.1} μm",
                args.param.name(),
                r.value,
                m.length,
                m.width,
                m.depth
            ),
            Err(e) => println!("{} = {}: failed: {e}", args.param.name(), r.value),
        }
    }
    let mut manifest = RunManifest::new("sweep", argv, cfg.grid.preset_name());
    manifest.config = Some(echo);
    finish(manifest, &mut out, start)
}

fn calibrate(args: &CalibrateArgs, argv: Vec<String>, start: Instant) -> Result<()> {
    let cfg = RunConfig::load(&args.config.configs)?;
    let resolved = cfg.resolve()?;
    let sim = &resolved.simulation;
    let plan = &resolved.metrics;

    let given = [
        args.target_length_um,
        args.target_width_um,
        args.target_depth_um,
        args.target_cooling_rate_c_s,
    ];
    let weights = match &args.weights {
        Some(w) => [w[0], w[1], w[2], w[3]],
        None => given.map(|g| if g.is_some() { 1.0 } else { 0.0 }),
    };
    let target = CalibrationTarget {
        values: given.map(|g| g.unwrap_or(0.0)),
        weights,
    };
    target.validate().map_err(|e| AppError::config("--target-*", e.to_string()))?;

    let mut free = Vec::with_capacity(args.free.len());
    for f in &args.free {
        let value = f.parameter.read(sim).map_err(|e| AppError::config("--free", e.to_string()))?;
        let (lo, hi) = f.bounds.unwrap_or_else(|| f.parameter.default_bounds());
        let h = ParameterHandle::new(f.parameter, lo, hi, value).map_err(|_| {
            AppError::config(
                "--free",
                format!("{} = {value} must lie inside its bounds [{lo}, {hi}]", f.parameter.name()),
            )
        })?;
        free.push(h);
    }
    if args.budget == 0 {
        return Err(AppError::config("--budget", "must be at least 1"));
    }
    let settings = NelderMeadSettings {
        budget: args.budget,
        ..NelderMeadSettings::default()
    };

    let mut out = OutputDir::create(&args.out)?;
    let echo = cfg.to_toml();
    out.write_text("config.toml", &echo)?;
    let cal = calibration::calibrate(sim, &free, &target, &settings, |c| plan.evaluate(c))?;
    out.write_text("trace.csv", &report::trace_csv(&cal))?;
    out.write_text("best.toml", &report::calibration_fragment(&cfg, &cal))?;
    for h in &cal.parameters {
        println!("{} = {}", h.parameter.name(), h.value);
    }
    println!(
        "objective {:.3e} after {} evaluations{}",
        cal.objective,
        cal.trace.len(),
        if cal.converged { "" } else { " (budget exhausted)" }
    );
    let mut manifest = RunManifest::new("calibrate", argv, cfg.grid.preset_name());
    manifest.config = Some(echo);
    finish(manifest, &mut out, start)
}

fn is_url(s: &str) -> bool {
    s.starts_with("http://") || s.starts_with("https://")
}

fn case_file_name(run: &CaseRun) -> String {
    let d = &run.definition;
    let model = match d.model {
        ConductivityModel::Isotropic => "iso",
        ConductivityModel::Anisotropic => "aniso",
    };
    format!("cases/{}_{}_{model}.toml", d.machine.name().to_lowercase(), d.case.name())
}

fn bench_cases(args: &BenchArgs, argv: Vec<String>, start: Instant) -> Result<()> {
    let machine = match args.machine {
        MachineArg::Cbm => Machine::Cbm,
        MachineArg::Ammt => Machine::Ammt,
    };
    let model = match args.model {
        ModelArg::Iso => ConductivityModel::Isotropic,
        ModelArg::Aniso => ConductivityModel::Anisotropic,
    };
    let mut cases: Vec<CaseId> = args
        .cases
        .iter()
        .map(|c| match c {
            CaseArg::A => CaseId::A,
            CaseArg::B => CaseId::B,
            CaseArg::C => CaseId::C,
        })
        .collect();
    if cases.is_empty() {
        cases = CaseId::ALL.to_vec();
    }
    cases.sort();
    cases.dedup();
    let preset = args.grid.preset();
    let layout = Layout::default();

    let profile: Option<PathBuf> = match &args.profile {
        Some(p) if is_url(p) => Some(FetchCache::from_env().fetch(p, args.profile_sha256.as_deref(), &HttpTransport)?),
        Some(p) => Some(PathBuf::from(p)),
        None => None,
    };
    let profile = profile.map(|p| std::path::absolute(&p).unwrap_or(p));

    let results: Vec<Result<(CaseRun, RunConfig)>> = cases
        .par_iter()
        .map(|&case| {
            let mut def = bench::case_definition(machine, case, model);
            if profile.is_none() {
                def = bench::surrogate_case(&def);
            }
            let (path, shape) = match (def.source, &profile) {
                (SourceVariant::Goldak, _) | (_, None) => (None, None),
                (_, Some(p)) => (
                    Some(p.as_path()),
                    Some(formats::read_profile(p, def.power, def.params.absorptivity)?),
                ),
            };
            let cfg = RunConfig::from_case(&def, &preset, &layout, path);
            let run = bench::run_case(&def, &preset, &layout, shape.as_ref(), &MetricSettings::default())?;
            Ok((run, cfg))
        })
        .collect();
    let results = results.into_iter().collect::<Result<Vec<_>>>()?;

    let mut out = OutputDir::create(&args.out)?;
    let runs: Vec<CaseRun> = results.iter().map(|(r, _)| r.clone()).collect();
    let rows = report::deviation_rows(&runs);
    out.write_text("deviations.csv", &report::deviation_csv(&rows))?;
    let table = report::deviation_table(&rows);
    out.write_text("deviations.txt", &table)?;
    for (run, cfg) in &results {
        out.write_text(&case_file_name(run), &cfg.to_toml())?;
    }
    out.write_text("runs.csv", &runs_csv(&runs, &layout))?;

    let mut notes: Vec<&String> = runs.iter().flat_map(|r| &r.notes).collect();
    notes.dedup();
    for n in notes {
        println!("note: {n}");
    }
    print!("{table}");
    for r in &runs {
        println!(
            "{}: energy residual {:.2e}, length at {:?} mm travel: {}",
            report::case_label(r),
            r.energy_residual,
            layout.probe_travels,
            r.probes.iter().map(|m| format!("{:.1} μm", m.length)).collect::<Vec<_>>().join(", ")
        );
    }

    let mut manifest = RunManifest::new("bench", argv, preset.name);
    if let [(_, cfg)] = results.as_slice() {
        manifest.config = Some(cfg.to_toml());
    }
    finish(manifest, &mut out, start)
}

/// Per-case diagnostics: energy residual and the probe lengths.
fn runs_csv(runs: &[CaseRun], layout: &Layout) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["case".to_string(), "energy_residual".to_string(), "steps".to_string()];
    header.push(format!("length_um_at_{}mm", layout.metric_travel));
    header.extend(layout.probe_travels.iter().map(|t| format!("length_um_at_{t}mm")));
    header.push("wall_time_s".into());
    w.write_record(&header).expect("in-memory write");
    for r in runs {
        let mut rec = vec![
            report::case_label(r),
            r.energy_residual.to_string(),
            r.output.report.steps.len().to_string(),
            r.metrics.length.to_string(),
        ];
        rec.extend(r.probes.iter().map(|m| m.length.to_string()));
        rec.push(r.output.report.wall_time.map(|t| t.to_string()).unwrap_or_default());
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
}

fn verification_csv(r: &VerificationReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["probe", "x_mm", "y_mm", "z_mm", "time_s", "analytic_c", "computed_c", "relative_error"])
        .expect("in-memory write");
    for p in &r.rows {
        w.write_record([
            p.label.clone(),
            p.position[0].to_string(),
            p.position[1].to_string(),
            p.position[2].to_string(),
            p.time.to_string(),
            p.analytic.to_string(),
            p.computed.to_string(),
            p.relative_error.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
}

pub fn verification_table(r: &VerificationReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{}: {} (max error {:.3}%, tolerance {:.1}%)",
        r.name,
        if r.passed() { "PASS" } else { "FAIL" },
        100.0 * r.max_error(),
        100.0 * r.tolerance
    );
    let _ = writeln!(s, "  {:<14} {:>10} {:>12} {:>12} {:>9}", "probe", "time s", "analytic °C", "computed °C", "error %");
    for p in &r.rows {
        let _ = writeln!(
            s,
            "  {:<14} {:>10.3e} {:>12.4} {:>12.4} {:>9.3}",
            p.label,
            p.time,
            p.analytic,
            p.computed,
            100.0 * p.relative_error
        );
    }
    s
}

fn verify_all(args: &VerifyArgs, argv: Vec<String>, start: Instant) -> Result<()> {
    let (hs, ro) = match args.grid {
        GridArg::Desk => (HalfSpaceSetup::default(), RosenthalSetup::default()),
        GridArg::Convergence => (
            HalfSpaceSetup::default().refined(1),
            RosenthalSetup {
                fine_spacing: bench::CONVERGENCE.fine,
                ..RosenthalSetup::default()
            },
        ),
    };
    let (a, b) = rayon::join(|| verify::halfspace_comparison(&hs), || verify::rosenthal_comparison(&ro));
    let reports = [a?, b?];
    let mut out = OutputDir::create(&args.out)?;
    let mut text = String::new();
    for r in &reports {
        out.write_text(&format!("{}.csv", r.name), &verification_csv(r))?;
        text.push_str(&verification_table(r));
    }
    out.write_text("verify.txt", &text)?;
    print!("{text}");
    finish(RunManifest::new("verify", argv, args.grid.preset().name), &mut out, start)?;
    let failed: Vec<&str> = reports.iter().filter(|r| !r.passed()).map(|r| r.name).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(AppError::Failed(format!("verification failed: {}", failed.join(", "))))
    }
}
