//! `bbm-lab`: branching Brownian motion experiments from the command line.
//!
//! Exit codes: 0 success, 2 configuration error, 3 population-cap abort of
//! all replicas, 4 quadrature failure.

mod options;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bbm_core::experiments::{run, run_martingale_trace, AggregateReport, ExperimentKind};
use bbm_core::fmt::{compact_f64, csv_f64};
use bbm_core::functionals::{recentered_max, AlphaParams, Centering};
use bbm_core::process::simulate;
use bbm_core::{BarrierSpec, Error, SimConfig, VarianceProfile};
use options::{resolve_experiment, write_manifest, ExperimentArgs, OutputFormat, Resolver};

/// Rows spill to a CSV sidecar beyond this count.
const ROW_SIDECAR_THRESHOLD: usize = 10_000;

#[derive(Parser)]
#[command(
    name = "bbm-lab",
    version,
    about = "Branching Brownian motion simulator and martingale lab",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one replica and dump a snapshot CSV per checkpoint.
    Simulate(SimulateArgs),
    /// Per-replica martingale traces over a checkpoint grid.
    Trace(TraceArgs),
    /// Strong law of large numbers: Z_alpha(t)/(E Z_alpha(t) Y_alpha(t)).
    Slln(ExperimentArgs),
    /// Onset of McKean's martingale in E[Z_alpha(t)|F_r].
    Onset(ExperimentArgs),
    /// Decay of the conditional-expectation remainder over an r grid.
    Decorrelation(ExperimentArgs),
    /// Overshoot counts against the paths-localization bound.
    Localization(ExperimentArgs),
    /// Same-ancestor pair counts against the two-point quadrature bound.
    #[command(name = "pair-count")]
    PairCount(ExperimentArgs),
    /// Two-phase speed orderings and the REM centering.
    #[command(name = "rem-collapse")]
    RemCollapse(RemArgs),
    /// Analytic reference tables (no simulation).
    Analytic(AnalyticArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Horizon t >= 0.
    #[arg(long)]
    t: Option<f64>,
    /// Comma-separated checkpoint times; the horizon is always included.
    #[arg(long)]
    checkpoints: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replica_id: Option<u64>,
    /// Variance profile as start:rate,...,end (e.g. 0:0.36,7:1.64,14).
    #[arg(long)]
    profile: Option<String>,
    /// Barrier start time; requires --barrier-slope.
    #[arg(long)]
    barrier_start: Option<f64>,
    /// Barrier line slope.
    #[arg(long)]
    barrier_slope: Option<f64>,
    #[arg(long)]
    max_particles: Option<usize>,
    /// Centering for the printed recentered max: kpp, rem or none.
    #[arg(long)]
    centering: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TraceArgs {
    #[command(flatten)]
    common: ExperimentArgs,
    /// Comma-separated checkpoint times (at least 4).
    #[arg(long)]
    checkpoints: Option<String>,
}

#[derive(Args)]
struct RemArgs {
    #[command(flatten)]
    common: ExperimentArgs,
    /// First-phase speed sigma1 (sigma2 follows from sigma1^2/2+sigma2^2/2=1).
    #[arg(long)]
    sigma1: Option<f64>,
    /// Comma-separated horizon grid.
    #[arg(long)]
    t_grid: Option<String>,
}

#[derive(Args)]
struct AnalyticArgs {
    /// Comma-separated alpha grid.
    #[arg(long)]
    alpha: Option<String>,
    /// Comma-separated horizons, all > 1.
    #[arg(long)]
    t: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = match &e {
                Error::Config(_) | Error::Domain(_) | Error::CheckpointNotRecorded { .. } => {
                    "config"
                }
                Error::PopulationCap { .. } => "population-cap",
                Error::QuadratureNoConvergence { .. } => "quadrature",
                Error::MissingBarrierFlags => "config",
                Error::Merge(_) => "config",
                Error::Io(_) => "io",
            };
            eprintln!("error: {e}");
            eprintln!(
                "{}",
                serde_json::json!({"error": {"kind": kind, "message": e.to_string()}})
            );
            match kind {
                "config" => ExitCode::from(2),
                "population-cap" => ExitCode::from(3),
                "quadrature" => ExitCode::from(4),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Trace(args) => cmd_trace(args),
        Command::Slln(args) => cmd_experiment(ExperimentKind::Slln, args),
        Command::Onset(args) => cmd_experiment(ExperimentKind::Onset, args),
        Command::Decorrelation(args) => cmd_experiment(ExperimentKind::Decorrelation, args),
        Command::Localization(args) => cmd_experiment(ExperimentKind::Localization, args),
        Command::PairCount(args) => cmd_experiment(ExperimentKind::PairCount, args),
        Command::RemCollapse(args) => cmd_rem_collapse(args),
        Command::Analytic(args) => cmd_analytic(args),
    }
}

fn cmd_experiment(kind: ExperimentKind, args: ExperimentArgs) -> Result<(), Error> {
    let resolved = resolve_experiment(kind, &args, &mut |_, _| Ok(()))?;
    let report = run(&resolved.cfg)?;
    finish_experiment(&resolved.out, &resolved.manifest, resolved.format, &report, None)
}

fn cmd_trace(args: TraceArgs) -> Result<(), Error> {
    let checkpoints_flag = args.checkpoints.clone();
    let resolved = resolve_experiment(ExperimentKind::Trace, &args.common, &mut |r, cfg| {
        cfg.checkpoints = r.f64_list("checkpoints", checkpoints_flag.clone(), "")?;
        if let Some(&last) = cfg.checkpoints.last() {
            cfg.t = last;
            r.resolved.insert("t".into(), compact_f64(last));
        }
        Ok(())
    })?;
    let out = run_martingale_trace(&resolved.cfg)?;
    finish_experiment(
        &resolved.out,
        &resolved.manifest,
        resolved.format,
        &out.report,
        out.traces.first(),
    )
}

fn cmd_rem_collapse(args: RemArgs) -> Result<(), Error> {
    let sigma1_flag = args.sigma1;
    let t_grid_flag = args.t_grid.clone();
    let resolved = resolve_experiment(ExperimentKind::RemCollapse, &args.common, &mut |r, cfg| {
        cfg.sigma1 = Some(r.parsed("sigma1", sigma1_flag, 0.6)?);
        cfg.t_grid = r.f64_list("t_grid", t_grid_flag.clone(), "8,11,14")?;
        cfg.alphas = Vec::new();
        r.resolved.insert("alpha".into(), String::new());
        Ok(())
    })?;
    let report = run(&resolved.cfg)?;
    finish_experiment(&resolved.out, &resolved.manifest, resolved.format, &report, None)
}

fn finish_experiment(
    out: &Path,
    manifest: &BTreeMap<String, String>,
    format: OutputFormat,
    report: &AggregateReport,
    trace: Option<&bbm_core::MartingaleTrace>,
) -> Result<(), Error> {
    std::fs::create_dir_all(out)?;
    write_manifest(out, manifest)?;
    write_report(out, format, report)?;
    if let Some(trace) = trace {
        let mut buf = Vec::new();
        trace.write_csv(&mut buf)?;
        std::fs::write(out.join("trace.csv"), buf)?;
    }
    std::fs::write(
        out.join("timing.json"),
        serde_json::to_string(&serde_json::json!({"wallclock_ms": report.wallclock_ms}))
            .expect("timing serializes")
            + "\n",
    )?;

    // All replicas capped means the experiment produced nothing usable.
    if report.rows.is_empty() && !report.failures.is_empty() {
        let first = &report.failures[0];
        return Err(Error::PopulationCap {
            time_reached: f64::NAN,
            limit: report.config["max_particles"].parse().unwrap_or(0),
        })
        .map_err(|e| {
            eprintln!("all {} replicas hit the population cap ({})", report.failures.len(), first.message);
            e
        });
    }

    println!(
        "{}: {} replicas completed, {} failed",
        report.experiment,
        report.rows.len(),
        report.failures.len()
    );
    for (k, v) in &report.metrics {
        println!("  {k} = {v}");
    }
    eprintln!("wallclock_ms={}", report.wallclock_ms);
    Ok(())
}

fn write_report(dir: &Path, format: OutputFormat, report: &AggregateReport) -> Result<(), Error> {
    match format {
        OutputFormat::Json => {
            let json = if report.rows.len() > ROW_SIDECAR_THRESHOLD {
                let mut rows_csv = Vec::new();
                report.write_rows_csv(&mut rows_csv)?;
                std::fs::write(dir.join("report_rows.csv"), rows_csv)?;
                report.to_json(Some("report_rows.csv"))
            } else {
                report.to_json(None)
            };
            let text = serde_json::to_string_pretty(&json).expect("report serializes") + "\n";
            std::fs::write(dir.join("report.json"), text)?;
        }
        OutputFormat::Csv => {
            let mut rows_csv = Vec::new();
            report.write_rows_csv(&mut rows_csv)?;
            std::fs::write(dir.join("rows.csv"), rows_csv)?;

            let mut agg = String::from(
                "key,count,mean,variance,std_error,min,max,p5,p25,p50,p75,p95\n",
            );
            for (k, s) in &report.aggregates {
                agg.push_str(&format!(
                    "{k},{},{},{},{},{},{},{},{},{},{},{}\n",
                    s.count,
                    csv_f64(s.mean),
                    csv_f64(s.variance),
                    csv_f64(s.std_error),
                    csv_f64(s.min),
                    csv_f64(s.max),
                    csv_f64(s.p5),
                    csv_f64(s.p25),
                    csv_f64(s.p50),
                    csv_f64(s.p75),
                    csv_f64(s.p95)
                ));
            }
            std::fs::write(dir.join("aggregates.csv"), agg)?;

            let mut metrics = String::from("key,value\n");
            for (k, v) in &report.metrics {
                metrics.push_str(&format!("{k},{}\n", csv_f64(*v)));
            }
            std::fs::write(dir.join("metrics.csv"), metrics)?;
        }
    }
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), Error> {
    let mut r = Resolver::new(args.config.as_deref())?;
    let t = r.parsed("t", args.t, 3.0)?;
    let checkpoints = r.f64_list("checkpoints", args.checkpoints.clone(), "")?;
    let seed = r.seed(args.seed)?;
    let replica_id = r.parsed("replica_id", args.replica_id, 0)?;
    let default_profile = format!("0:1,{}", compact_f64(t.max(1.0)));
    let profile: VarianceProfile = r
        .string("profile", args.profile.clone(), &default_profile)
        .parse()?;
    let barrier_start = r.parsed("barrier_start", args.barrier_start, f64::NAN)?;
    let barrier_slope = r.parsed("barrier_slope", args.barrier_slope, f64::NAN)?;
    let max_particles =
        r.parsed("max_particles", args.max_particles, bbm_core::process::DEFAULT_MAX_PARTICLES)?;
    let centering_raw = r.string("centering", args.centering.clone(), "kpp");
    let centering = Centering::parse(&centering_raw)
        .ok_or_else(|| Error::Config(format!("unknown centering '{centering_raw}'")))?;
    let out = PathBuf::from(r.string(
        "out",
        args.out.as_ref().map(|p| p.display().to_string()),
        "bbm-lab-out",
    ));
    let mut manifest = r.finish()?;
    manifest.remove("out");
    manifest.insert("experiment".into(), "simulate".into());

    if t == 0.0 && centering != Centering::None {
        return Err(Error::Config(
            "t = 0 has no centering; pass --centering none to dump the root particle".into(),
        ));
    }

    let mut cfg = SimConfig::new(t, checkpoints, seed)?
        .with_replica(replica_id)
        .with_max_particles(max_particles)?;
    match (barrier_start.is_nan(), barrier_slope.is_nan()) {
        (true, true) => {}
        (false, false) => {
            cfg = cfg.with_barrier(BarrierSpec {
                start_time: barrier_start,
                slope: barrier_slope,
            })?;
        }
        _ => {
            return Err(Error::Config(
                "--barrier-start and --barrier-slope must be given together".into(),
            ))
        }
    }

    let snaps = simulate(&cfg, &profile)?;
    std::fs::create_dir_all(&out)?;
    write_manifest(&out, &manifest)?;
    for snap in &snaps {
        let mut buf = Vec::new();
        snap.write_csv(&cfg, &profile, &mut buf)?;
        let name = format!("snapshot_t{}.csv", compact_f64(snap.time));
        std::fs::write(out.join(name), buf)?;
        let recentered = if snap.time > 0.0 || centering == Centering::None {
            recentered_max(snap, centering)?
        } else {
            f64::NAN
        };
        println!(
            "t={} n={} max={} max_{}={}",
            compact_f64(snap.time),
            snap.len(),
            compact_f64(snap.max_position()),
            centering.as_str(),
            compact_f64(recentered)
        );
    }
    Ok(())
}

fn cmd_analytic(args: AnalyticArgs) -> Result<(), Error> {
    let mut r = Resolver::new(args.config.as_deref())?;
    let alphas = r.f64_list("alpha", args.alpha.clone(), "1")?;
    let ts = r.f64_list("t", args.t.clone(), "100,400,1600")?;
    let out = PathBuf::from(r.string(
        "out",
        args.out.as_ref().map(|p| p.display().to_string()),
        "bbm-lab-out",
    ));
    let mut manifest = r.finish()?;
    manifest.remove("out");
    manifest.insert("experiment".into(), "analytic".into());

    if ts.iter().any(|&t| !(t > 1.0)) {
        return Err(Error::Config(
            "analytic tables need every t > 1 (asymptotic count domain)".into(),
        ));
    }
    std::fs::create_dir_all(&out)?;
    write_manifest(&out, &manifest)?;

    use bbm_core::analytics::{expected_high_points_asymptotic, expected_high_points_exact};
    use bbm_core::functionals::{centering_kpp, centering_rem};
    for &alpha in &alphas {
        let p = AlphaParams::new(alpha)?;
        let mut table = String::from("t,m_kpp,m_rem,log_EZ_exact,log_EZ_asymp,ratio\n");
        for &t in &ts {
            let exact = expected_high_points_exact(&p, t)?;
            let asymp = expected_high_points_asymptotic(&p, t)?;
            table.push_str(&format!(
                "{},{},{},{},{},{}\n",
                csv_f64(t),
                csv_f64(centering_kpp(t)?),
                csv_f64(centering_rem(t)?),
                csv_f64(exact),
                csv_f64(asymp),
                csv_f64((asymp - exact).exp())
            ));
        }
        let name = format!("analytic_alpha_{}.csv", compact_f64(alpha));
        std::fs::write(out.join(&name), table)?;
        println!("wrote {name}");
    }
    Ok(())
}
