//! `wpfp`: batch driver for simulations, convergence studies and steady-state runs.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wpfp::config::load_config;
use wpfp::experiments::{
    convergence_study, convergence_study_config, default_reference, preset_reference, steady_state_run_config, Axis,
    ConvergenceReport,
};
use wpfp::io::{ensure_dir, write_heatmap_csv, write_series, write_snapshot, write_text};
use wpfp::observables::SteadyCriterion;
use wpfp::presets::{preset_by_name, ExperimentPreset, PresetId};
use wpfp::splitting::{run_simulation, NullSink, SimulationSink};
use wpfp::{RunConfig, WignerField};

#[derive(Parser)]
#[command(name = "wpfp", version, about = "Wigner(-Poisson)-Fokker-Planck TSSP solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configuration and write snapshots, the observable series and the final field.
    Simulate {
        config: PathBuf,
        /// Output directory (overrides `[output] dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write a snapshot every K steps (overrides `[output] snapshot_every`).
        #[arg(long, value_name = "K")]
        snapshots: Option<usize>,
        /// Also write the final field as (x, xi, W) CSV.
        #[arg(long)]
        heatmap: bool,
    },
    /// Error study along one discretization axis.
    Converge {
        /// Preset name (ex1, ex2, ex3, ex4a, ex4b, ex5) or config file.
        target: String,
        #[arg(long, value_parser = parse_axis)]
        axis: Axis,
        /// Grid counts for M/N, step sizes for dt.
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        samples: Vec<f64>,
        /// Exit nonzero unless the expected order (dt) or spectral decay (M, N) is met.
        #[arg(long)]
        check: bool,
        /// Write the report to this file as well.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Long-time run with steady-state detection.
    Steady {
        /// Preset name or config file.
        target: String,
        #[arg(long, value_name = "T")]
        tmax: f64,
        /// Exit nonzero unless a steady state is reached in time with bounded mass drift.
        #[arg(long)]
        check: bool,
        /// Write the observable series here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the reference field of a preset at its final time.
    Reference {
        preset: String,
        /// Snapshot file to write (default `<preset>_reference.bin`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_axis(s: &str) -> Result<Axis, String> {
    s.parse().map_err(|e: wpfp::WpfpError| e.to_string())
}

enum Target {
    Preset(Box<ExperimentPreset>),
    Config { name: String, config: RunConfig },
}

fn resolve(target: &str) -> wpfp::Result<Target> {
    if target.parse::<PresetId>().is_ok() {
        return Ok(Target::Preset(Box::new(preset_by_name(target)?)));
    }
    let path = Path::new(target);
    let name = path.file_stem().map_or(target.to_string(), |s| s.to_string_lossy().into_owned());
    Ok(Target::Config { name, config: load_config(path)?.run })
}

struct SnapshotWriter {
    dir: PathBuf,
    written: usize,
}

impl SimulationSink for SnapshotWriter {
    fn on_snapshot(&mut self, step: usize, w: &WignerField) -> wpfp::Result<()> {
        write_snapshot(&self.dir.join(format!("snapshot_{step:06}.bin")), w)?;
        self.written += 1;
        Ok(())
    }
}

fn simulate(config: &Path, out: Option<PathBuf>, snapshots: Option<usize>, heatmap: bool) -> wpfp::Result<bool> {
    let loaded = load_config(config)?;
    let mut run = loaded.run;
    if snapshots.is_some() {
        run.snapshot_every = snapshots;
    } else if loaded.output.snapshot_every.is_some() {
        run.snapshot_every = loaded.output.snapshot_every;
    }
    let dir = out.or(loaded.output.dir).unwrap_or_else(|| PathBuf::from("out"));
    ensure_dir(&dir)?;
    let mut sink = SnapshotWriter { dir: dir.clone(), written: 0 };
    let output = run_simulation(&run, &mut sink)?;
    write_snapshot(&dir.join("final.bin"), &output.field)?;
    write_series(&dir.join("series.csv"), &output.series)?;
    if heatmap || loaded.output.heatmap {
        write_heatmap_csv(&dir.join("heatmap.csv"), &output.field)?;
    }
    println!(
        "{} steps to t = {}: {} snapshots, mass drift {:.3e}, output in {}",
        output.steps,
        output.field.time,
        sink.written,
        output.series.mass_drift(),
        dir.display()
    );
    Ok(true)
}

fn converge(target: &str, axis: Axis, samples: &[f64], out: Option<PathBuf>) -> wpfp::Result<bool> {
    let (report, expected): (ConvergenceReport, (f64, f64)) = match resolve(target)? {
        Target::Preset(p) => (convergence_study(&p, axis, samples)?, p.expected_order),
        Target::Config { name, config } => {
            let reference = default_reference(&config);
            (convergence_study_config(&name, &config, reference, axis, samples)?, (1.8, 2.2))
        }
    };
    let pass = match axis {
        Axis::Dt => report.orders_within(expected),
        Axis::M | Axis::N => report.spectral_decay(),
    };
    let criterion = match axis {
        Axis::Dt => format!("pairwise orders in [{}, {}]", expected.0, expected.1),
        Axis::M | Axis::N => "spectral decay".to_string(),
    };
    let text = format!("{}{}: {}\n", report.text(), criterion, if pass { "PASS" } else { "FAIL" });
    print!("{text}");
    if let Some(path) = out {
        write_text(&path, &text)?;
    }
    Ok(pass)
}

fn steady(target: &str, tmax: f64, out: Option<PathBuf>) -> wpfp::Result<bool> {
    let (name, config, target) = match resolve(target)? {
        Target::Preset(p) => (p.id.to_string(), p.config, p.steady),
        Target::Config { name, config } => (name, config, None),
    };
    let report = steady_state_run_config(&name, &config, tmax, SteadyCriterion::default(), target, &mut NullSink)?;
    let pass = report.passes();
    print!("{}", report.text());
    println!("steady state: {}", if pass { "PASS" } else { "FAIL" });
    if let Some(path) = out {
        write_series(&path, &report.output.series)?;
    }
    Ok(pass)
}

fn reference(name: &str, out: Option<PathBuf>) -> wpfp::Result<bool> {
    let p = preset_by_name(name)?;
    let field = preset_reference(&p)?;
    let path = out.unwrap_or_else(|| PathBuf::from(format!("{}_reference.bin", p.id)));
    write_snapshot(&path, &field)?;
    println!("{} reference at t = {} written to {}", p.id, field.time, path.display());
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let threads = wpfp::spectral::init_threads_from_env();
    log::debug!("using {threads} threads");

    let (checked, result) = match cli.command {
        Command::Simulate { config, out, snapshots, heatmap } => (false, simulate(&config, out, snapshots, heatmap)),
        Command::Converge { target, axis, samples, check, out } => (check, converge(&target, axis, &samples, out)),
        Command::Steady { target, tmax, check, out } => (check, steady(&target, tmax, out)),
        Command::Reference { preset, out } => (false, reference(&preset, out)),
    };
    match result {
        Ok(pass) if checked && !pass => ExitCode::from(1),
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
