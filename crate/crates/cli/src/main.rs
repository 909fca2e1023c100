use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bldc_tune::harness::export::{torque_spectrum, write_spectrum, write_trace, PARETO_FILE};
use bldc_tune::harness::plot::{chart, Series, Style};
use bldc_tune::harness::{
    export_tune, read_pareto, rerank, run_simulation, tune, ControlScheme, ExperimentConfig, ParetoRecord,
    RunManifest, TuneOutcome,
};
use bldc_tune::metrics::{self, SimTrace};
use bldc_tune::Error;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bldc-tune", version, about = "Simulate and tune cascaded BLDC position control")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one position-PID candidate and write its trace.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Position PID gains as kp,ki,kd. Defaults to the configured gains.
        #[arg(long, value_parser = parse_gains)]
        gains: Option<[f64; 3]>,
    },
    /// Run the full tuning campaign.
    Tune {
        #[command(flatten)]
        common: Common,
    },
    /// Re-rank and print an exported Pareto archive.
    Pareto {
        /// pareto.csv, or a run directory containing one.
        #[arg(long)]
        input: PathBuf,
        /// Directory for the Pareto scatter when --emit-plots is given.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        emit_plots: bool,
    },
    /// Re-run a campaign from its manifest.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        emit_plots: bool,
    },
}

#[derive(Args)]
struct Common {
    /// TOML experiment file; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_scheme)]
    scheme: Option<ControlScheme>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    generations: Option<usize>,
    #[arg(long)]
    population: Option<usize>,
    /// Also write SVG charts next to the CSVs.
    #[arg(long)]
    emit_plots: bool,
}

fn parse_scheme(s: &str) -> Result<ControlScheme, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_gains(s: &str) -> Result<[f64; 3], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}")))
        .collect::<Result<_, _>>()?;
    v.try_into().map_err(|v: Vec<f64>| format!("expected kp,ki,kd, got {} values", v.len()))
}

impl Common {
    fn resolve(&self) -> bldc_tune::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.scheme {
            cfg.scheme = s;
        }
        if let Some(seed) = self.seed {
            cfg.tuning.nsga2.rng_seed = seed;
        }
        if let Some(g) = self.generations {
            cfg.tuning.nsga2.generations = g;
        }
        if let Some(n) = self.population {
            cfg.tuning.nsga2.population_size = n;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io { .. } | Error::Parse { .. } => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn run(cli: Cli) -> bldc_tune::Result<()> {
    match cli.command {
        Command::Simulate { common, gains } => {
            let cfg = common.resolve()?;
            print_warnings(&cfg);
            simulate(&cfg, gains, &common.out, common.emit_plots)
        }
        Command::Tune { common } => {
            let cfg = common.resolve()?;
            print_warnings(&cfg);
            campaign(&cfg, &common.out, common.emit_plots)
        }
        Command::Pareto { input, out, emit_plots } => inspect(&input, out.as_deref(), emit_plots),
        Command::Replay { manifest, out, emit_plots } => {
            let m = RunManifest::load(&manifest)?;
            if m.version != env!("CARGO_PKG_VERSION") {
                eprintln!(
                    "warning: manifest written by version {}, replaying with {}",
                    m.version,
                    env!("CARGO_PKG_VERSION")
                );
            }
            campaign(&m.config, &out, emit_plots)
        }
    }
}

fn print_warnings(cfg: &ExperimentConfig) {
    for w in cfg.warnings() {
        eprintln!("warning: {w}");
    }
}

fn ensure_dir(dir: &Path) -> bldc_tune::Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> bldc_tune::Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn simulate(cfg: &ExperimentConfig, gains: Option<[f64; 3]>, out: &Path, plots: bool) -> bldc_tune::Result<()> {
    let genes = gains.map(Vec::from).unwrap_or_else(|| cfg.fixture_genes());
    let trace = run_simulation(cfg, &genes)?;
    let fit = metrics::fitness(&trace, cfg.tuning.thd_window)?;
    ensure_dir(out)?;
    write_trace(&out.join("trace.csv"), &trace)?;
    write_spectrum(&out.join("spectrum.csv"), &torque_spectrum(&trace, cfg.tuning.thd_window))?;
    if plots {
        write_trace_plots(out, "", &trace, cfg.scheme)?;
    }
    println!(
        "scheme {} gains [{}, {}, {}]",
        cfg.scheme, genes[0], genes[1], genes[2]
    );
    if fit.diverged {
        println!("diverged at t = {:.6} s", trace.time.last().copied().unwrap_or(0.0));
    }
    println!("f1_iae {:.6e}  f2_thd {:.6e}", fit.f1_iae, fit.f2_thd);
    Ok(())
}

fn campaign(cfg: &ExperimentConfig, out: &Path, plots: bool) -> bldc_tune::Result<()> {
    let outcome = tune(cfg)?;
    export_tune(&outcome, cfg, out)?;
    if plots {
        write_campaign_plots(&outcome, out)?;
    }
    if let Some(inner) = &outcome.inner {
        println!(
            "stage one: speed PI kp {:.6e} ki {:.6e} (IAE {:.6e})",
            inner.speed.kp, inner.speed.ki, inner.speed_iae
        );
        if let Some((c, iae)) = inner.current {
            println!("stage one: current PI kp {:.6e} ki {:.6e} (IAE {:.6e})", c.kp, c.ki, iae);
        }
    }
    print_records(&outcome.pareto);
    println!("wrote {}", out.display());
    Ok(())
}

fn print_records(records: &[ParetoRecord]) {
    println!("{:>4} {:>12} {:>12} {:>12} {:>12} {:>12}", "#", "kp", "ki", "kd", "f1_iae", "f2_thd");
    for r in records {
        println!(
            "{:>4} {:>12.5e} {:>12.5e} {:>12.5e} {:>12.5e} {:>12.5e}",
            r.solution_index, r.kp, r.ki, r.kd, r.f1_iae, r.f2_thd
        );
    }
}

fn inspect(input: &Path, out: Option<&Path>, plots: bool) -> bldc_tune::Result<()> {
    let path = if input.is_dir() { input.join(PARETO_FILE) } else { input.to_path_buf() };
    let records = read_pareto(&path)?;
    let ranked = rerank(&records)?;
    println!(
        "{:>4} {:>12} {:>5} {:>12} {:>12} {:>12} {:>12} {:>12} {:>10}",
        "#", "scheme", "rank", "kp", "ki", "kd", "f1_iae", "f2_thd", "crowding"
    );
    for r in &ranked {
        let x = &r.record;
        println!(
            "{:>4} {:>12} {:>5} {:>12.5e} {:>12.5e} {:>12.5e} {:>12.5e} {:>12.5e} {:>10.4}",
            x.solution_index, x.scheme, r.rank, x.kp, x.ki, x.kd, x.f1_iae, x.f2_thd, r.crowding_distance
        );
    }
    if plots {
        let dir = out.map(Path::to_path_buf).unwrap_or_else(|| {
            path.parent().map(Path::to_path_buf).unwrap_or_default()
        });
        ensure_dir(&dir)?;
        write_text(&dir.join("pareto.svg"), &pareto_svg(&records))?;
    }
    Ok(())
}

fn pareto_svg(records: &[ParetoRecord]) -> String {
    let live: Vec<&ParetoRecord> = records.iter().filter(|r| !r.is_penalty()).collect();
    let mut groups = Vec::new();
    for scheme in [ControlScheme::Trapezoidal, ControlScheme::Foc] {
        let x: Vec<f64> = live.iter().filter(|r| r.scheme == scheme).map(|r| r.f1_iae).collect();
        let y: Vec<f64> = live.iter().filter(|r| r.scheme == scheme).map(|r| r.f2_thd).collect();
        if !x.is_empty() {
            groups.push((scheme.as_str(), x, y));
        }
    }
    let series: Vec<Series> = groups
        .iter()
        .map(|(label, x, y)| Series { label, x, y })
        .collect();
    chart("Pareto front", "position IAE (rad·s)", "torque THD", &series, Style::Points)
}

fn write_trace_plots(dir: &Path, suffix: &str, trace: &SimTrace, scheme: ControlScheme) -> bldc_tune::Result<()> {
    let position = chart(
        &format!("Position response ({scheme})"),
        "time (s)",
        "angle (rad)",
        &[
            Series { label: "reference", x: &trace.time, y: &trace.position_ref },
            Series { label: "position", x: &trace.time, y: &trace.position },
        ],
        Style::Line,
    );
    write_text(&dir.join(format!("position{suffix}.svg")), &position)?;
    let torque = chart(
        &format!("Electromagnetic torque ({scheme})"),
        "time (s)",
        "torque (N·m)",
        &[Series { label: "torque", x: &trace.time, y: &trace.torque }],
        Style::Line,
    );
    write_text(&dir.join(format!("torque{suffix}.svg")), &torque)
}

fn write_campaign_plots(outcome: &TuneOutcome, out: &Path) -> bldc_tune::Result<()> {
    write_text(&out.join("pareto.svg"), &pareto_svg(&outcome.pareto))?;
    for (r, trace) in outcome.pareto.iter().zip(&outcome.traces) {
        write_trace_plots(out, &format!("_{}", r.solution_index), trace, r.scheme)?;
    }
    Ok(())
}
