//! Command-line front end: scenario simulation, single-filter runs, the
//! full Monte-Carlo benchmark and the flops report.

use clap::{Parser, Subcommand};
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use uwnav::dynamics::{generate_truth, reference_initial_state, NavState};
use uwnav::filters::BasisMode;
use uwnav::harness::config::load_scenario;
use uwnav::harness::metrics::{reporting_error, STATE_NAMES};
use uwnav::harness::output::flops_csv;
use uwnav::harness::runner::{make_trial, resolve_inputs, run_filter};
use uwnav::harness::{
    bench, fit_reference_counts, write_artifacts, FilterKind, FilterSpec, RunConfig,
};
use uwnav::sensors::ModelKind;

#[derive(Parser)]
#[command(name = "uwnav", about = "Square-root correntropy filtering benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Benchmark configuration file (TOML); built-in reference setup if
    /// absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed for all derived noise streams.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte-Carlo trial count.
    #[arg(long, global = true)]
    runs: Option<usize>,
    /// Filter roster, comma separated (UKF,CKF,PCKF,MC-UKF,MC-CKF,MC-PCKF).
    #[arg(long, global = true, value_delimiter = ',')]
    filters: Option<Vec<String>>,
    /// Kernel bandwidths for the correntropy filters, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    sigma: Option<Vec<f64>>,
    /// Output directory for CSV artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Hermite basis normalization: paper or orthonormal.
    #[arg(long, global = true)]
    basis: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Write the truth trajectory and one trial's measurement stream as
    /// CSV.
    Simulate,
    /// Fold a single filter over a single trial and write its estimate
    /// series.
    Run,
    /// Run the full Monte-Carlo comparison and write the report CSVs.
    Bench,
    /// Print the closed-form flop counts and the benchmark-table fit.
    Flops,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("uwnav: {message}");
            ExitCode::FAILURE
        }
    }
}

fn execute(cli: &Cli) -> Result<(), String> {
    let cfg = build_config(cli)?;
    match cli.command {
        Command::Simulate => simulate(&cfg),
        Command::Run => run_one(&cfg),
        Command::Bench => run_bench(&cfg),
        Command::Flops => {
            print!("{}", flops_csv(&fit_reference_counts(9)));
            Ok(())
        }
    }
}

/// Config file (or the reference setup) with command-line overrides
/// applied on top.
fn build_config(cli: &Cli) -> Result<RunConfig, String> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path).map_err(|e| e.to_string())?,
        None => RunConfig::reference(0),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(runs) = cli.runs {
        cfg.mc_runs = runs;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    if let Some(basis) = &cli.basis {
        cfg.basis = match basis.as_str() {
            "paper" => BasisMode::PaperLiteral,
            "orthonormal" => BasisMode::Orthonormal,
            other => return Err(format!("unknown basis {other:?}")),
        };
    }
    if let Some(names) = &cli.filters {
        let sigmas = cli.sigma.clone().unwrap_or_else(|| vec![2.0]);
        let mut filters = Vec::new();
        for name in names {
            let kind = FilterKind::parse(name).map_err(|e| e.to_string())?;
            if kind.is_mc() {
                for &s in &sigmas {
                    filters.push(FilterSpec::with_sigma(kind, s));
                }
            } else {
                filters.push(FilterSpec::of(kind));
            }
        }
        cfg.filters = filters;
    } else if let Some(sigmas) = &cli.sigma {
        let kinds: Vec<FilterKind> = cfg
            .filters
            .iter()
            .filter(|f| f.kind.is_mc())
            .map(|f| f.kind)
            .collect();
        cfg.filters.retain(|f| !f.kind.is_mc());
        let mut seen = Vec::new();
        for kind in kinds {
            if seen.contains(&kind) {
                continue;
            }
            seen.push(kind);
            for &s in sigmas {
                cfg.filters.push(FilterSpec::with_sigma(kind, s));
            }
        }
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn truth_csv_row(out: &mut String, t: f64, s: &NavState) {
    writeln!(
        out,
        "{t},{},{},{},{},{},{},{},{},{}",
        s.pos.lat.to_degrees(),
        s.pos.lon.to_degrees(),
        s.pos.depth,
        s.vel_ned.x,
        s.vel_ned.y,
        s.vel_ned.z,
        s.att.roll.to_degrees(),
        s.att.pitch.to_degrees(),
        s.att.yaw.to_degrees()
    )
    .unwrap();
}

fn simulate(cfg: &RunConfig) -> Result<(), String> {
    let inputs = resolve_inputs(cfg).map_err(|e| e.to_string())?;
    let scenario = match &cfg.scenario {
        Some(path) => load_scenario(path).map_err(|e| e.to_string())?,
        None => inputs.scenario.clone(),
    };
    let truth = generate_truth(
        &scenario,
        &reference_initial_state(),
        cfg.dt_truth,
        &inputs.earth,
    )
    .map_err(|e| e.to_string())?;
    let trial = make_trial(&inputs, &truth, cfg, 0).map_err(|e| e.to_string())?;

    let mut truth_out = String::from("t,L_deg,l_deg,Z_m,vN,vE,vD,phi_deg,theta_deg,psi_deg\n");
    for (k, s) in trial.truth_1hz.iter().enumerate() {
        truth_csv_row(&mut truth_out, k as f64, s);
    }

    let mut meas_out =
        String::from("t,model,vN,vE,vD,Z_m,phi_deg,theta_deg,psi_deg,L_deg,l_deg\n");
    for m in &trial.measurements {
        let v = &m.values;
        write!(
            meas_out,
            "{},{},{},{},{},{},{},{},{}",
            m.t,
            match m.kind {
                ModelKind::ModelI => "I",
                ModelKind::ModelII => "II",
            },
            v[0],
            v[1],
            v[2],
            v[3],
            v[4].to_degrees(),
            v[5].to_degrees(),
            v[6].to_degrees()
        )
        .unwrap();
        if m.kind == ModelKind::ModelII {
            write!(meas_out, ",{},{}", v[7].to_degrees(), v[8].to_degrees()).unwrap();
        } else {
            meas_out.push_str(",,");
        }
        meas_out.push('\n');
    }

    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| e.to_string())?;
    let truth_path = cfg.out_dir.join("truth.csv");
    let meas_path = cfg.out_dir.join("measurements.csv");
    std::fs::write(&truth_path, truth_out).map_err(|e| e.to_string())?;
    std::fs::write(&meas_path, meas_out).map_err(|e| e.to_string())?;
    println!("wrote {} and {}", truth_path.display(), meas_path.display());
    Ok(())
}

fn run_one(cfg: &RunConfig) -> Result<(), String> {
    let spec = cfg.filters.first().ok_or("no filters configured")?;
    let inputs = resolve_inputs(cfg).map_err(|e| e.to_string())?;
    let truth = generate_truth(
        &inputs.scenario,
        &reference_initial_state(),
        cfg.dt_truth,
        &inputs.earth,
    )
    .map_err(|e| e.to_string())?;
    let trial = make_trial(&inputs, &truth, cfg, 0).map_err(|e| e.to_string())?;
    let fold = run_filter(
        spec,
        cfg.basis,
        &trial.imu,
        &trial.measurements,
        &inputs.noise,
        &inputs.earth,
    );

    let mut est_out = String::from("t,L_deg,l_deg,Z_m,vN,vE,vD,phi_deg,theta_deg,psi_deg\n");
    let mut final_err = [0.0; 9];
    for (est, meas) in fold.estimates.iter().zip(&trial.measurements) {
        truth_csv_row(&mut est_out, meas.t, est);
        final_err = reporting_error(est, &trial.truth_1hz[meas.t as usize], &inputs.earth);
    }
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| e.to_string())?;
    let path = cfg.out_dir.join(format!(
        "estimate_{}.csv",
        spec.label().replace(['(', ')', '=', '.'], "_")
    ));
    std::fs::write(&path, est_out).map_err(|e| e.to_string())?;

    println!("{} over {} steps, seed {}", spec.label(), fold.estimates.len(), cfg.seed);
    println!(
        "updates {}, factorization failures {}, fpi non-converged {}",
        fold.stats.updates, fold.stats.factorization_failures, fold.stats.fpi_nonconverged
    );
    print!("final error:");
    for (name, err) in STATE_NAMES.iter().zip(final_err) {
        print!(" {name}={err:.4}");
    }
    println!();
    println!("wrote {}", path.display());
    Ok(())
}

fn run_bench(cfg: &RunConfig) -> Result<(), String> {
    let result = bench(cfg).map_err(|e| e.to_string())?;
    write_artifacts(&result, &cfg.out_dir).map_err(|e| e.to_string())?;

    print!("{:16}", "filter");
    for name in STATE_NAMES {
        print!(" {name:>9}");
    }
    println!();
    for f in &result.filters {
        print!("{:16}", f.spec.label());
        for v in f.armse {
            print!(" {v:9.4}");
        }
        println!();
    }
    println!(
        "{} trials x {} steps, seed {}; artifacts in {}",
        result.mc_runs,
        result.steps,
        result.seed,
        cfg.out_dir.display()
    );
    Ok(())
}
