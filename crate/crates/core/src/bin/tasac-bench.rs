use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tasac::agent::{Algorithm, SelectionStrategy};
use tasac::bench::{
    compare_report, emit_plots, now_unix, parse_scenario, parse_seeds, run_experiment,
    write_run_info, Comparison, ExperimentSpec, Preset, RunReport, SpecOverrides,
};
use tasac::reactor::Scenario;
use tasac::{Error, Result};

/// Train and benchmark twin-actor soft actor-critic controllers on the batch
/// reactor.
#[derive(Parser)]
#[command(name = "tasac-bench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one configuration over several seeds and write its report.
    Train(RunArgs),
    /// Run a grid of configurations and tabulate them.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value_t = Grid::Strategies)]
        grid: Grid,
    },
    /// Percentage ITAE improvements between reports on one scenario.
    Compare {
        /// Report directories or report.json files.
        #[arg(required = true, num_args = 2..)]
        reports: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reward-curve and tracking CSVs plus a gnuplot script from a report.
    PlotData {
        /// Directory written by `train`.
        report: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed whose final batch is used for the tracking plot.
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Grid {
    /// All five selection strategies on one scenario.
    Strategies,
    /// TASAC min-min and SAC on the nominal, noise and btbv scenarios.
    Robustness,
}

#[derive(Args)]
struct RunArgs {
    /// nominal, noise[=fraction] or btbv[=fraction]
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    algorithm: Option<String>,
    /// min-min, min-max, max-min, max-max or min-avg
    #[arg(long)]
    strategy: Option<String>,
    /// A count (`3`), a range (`0..10`) or a list (`1,4,7`).
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    episodes: Option<usize>,
    /// Trailing episodes averaged per seed.
    #[arg(long)]
    window: Option<usize>,
    #[arg(long, value_enum)]
    preset: Option<PresetArg>,
    /// Experiment or reactor parameter file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Desk,
    Full,
}

impl RunArgs {
    /// Preset, then config file, then command-line flags.
    fn spec(&self) -> Result<ExperimentSpec> {
        let preset = match self.preset {
            Some(PresetArg::Full) => Preset::Full,
            _ => Preset::Desk,
        };
        let mut spec = ExperimentSpec::preset(
            preset,
            Scenario::Nominal,
            Algorithm::Tasac,
            SelectionStrategy::MinMin,
        );
        if let Some(path) = &self.config {
            let mut overrides = SpecOverrides::from_file(path)?;
            if self.preset.is_some() {
                overrides.preset = None;
            }
            overrides.apply(&mut spec);
        }
        if let Some(s) = &self.scenario {
            spec.env.scenario = parse_scenario(s)?;
        }
        if let Some(a) = &self.algorithm {
            spec.algorithm = a.parse()?;
        }
        if let Some(s) = &self.strategy {
            spec.strategy = s.parse()?;
        }
        if let Some(s) = &self.seeds {
            spec.seeds = parse_seeds(s)?;
        }
        if let Some(e) = self.episodes {
            spec.episodes = e;
            spec.hyper.episodes = e;
        }
        if self.window.is_some() {
            spec.window = self.window;
        }
        spec.validate()?;
        Ok(spec)
    }

    fn out_dir(&self, default: &str) -> PathBuf {
        self.out
            .clone()
            .unwrap_or_else(|| PathBuf::from("runs").join(default))
    }
}

fn run_one(spec: &ExperimentSpec, dir: &Path) -> Result<RunReport> {
    let started = now_unix();
    eprintln!(
        "training {} on {} with seeds {:?}, {} episodes",
        spec.label(),
        spec.scenario().name(),
        spec.seeds,
        spec.episodes
    );
    let report = run_experiment(spec)?;
    report.write(dir)?;
    write_run_info(dir, started)?;
    match report.aggregate_itae {
        Some(v) => println!(
            "{:<16} {:<8} average ITAE {:.2} over last {} episodes of {} seeds -> {}",
            report.label,
            spec.scenario().name(),
            v,
            report.window,
            report.included_seeds.len(),
            dir.display()
        ),
        None => {
            return Err(Error::Domain(format!(
                "every seed of {} failed; see {}",
                report.label,
                dir.display()
            )))
        }
    }
    Ok(report)
}

fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn print_comparison(c: &Comparison) {
    for i in &c.improvements {
        println!(
            "{:<8} {} improves on {} by {:.2}%",
            c.scenario, i.better, i.than, i.percent
        );
    }
}

fn sweep(run: &RunArgs, grid: Grid) -> Result<()> {
    let base = run.spec()?;
    match grid {
        Grid::Strategies => {
            let root = run.out_dir(&format!("sweep-{}", base.scenario().name()));
            let mut rows = Vec::new();
            for strategy in SelectionStrategy::ALL {
                let mut spec = base.clone();
                spec.algorithm = Algorithm::Tasac;
                spec.strategy = strategy;
                let report = run_one(&spec, &root.join(strategy.name()))?;
                rows.push(vec![
                    strategy.name().to_string(),
                    report
                        .aggregate_itae
                        .map_or_else(String::new, |v| v.to_string()),
                    report
                        .seed_std_itae
                        .map_or_else(String::new, |v| v.to_string()),
                ]);
            }
            write_table(
                &root.join("sweep.csv"),
                &["strategy", "average_itae", "seed_std_itae"],
                &rows,
            )?;
        }
        Grid::Robustness => {
            let root = run.out_dir("robustness");
            let mut rows = Vec::new();
            for scenario in ["nominal", "noise", "btbv"] {
                let mut reports = Vec::new();
                for algorithm in [Algorithm::Tasac, Algorithm::Sac] {
                    let mut spec = base.clone();
                    spec.env.scenario = parse_scenario(scenario)?;
                    spec.algorithm = algorithm;
                    spec.strategy = SelectionStrategy::MinMin;
                    spec.window = run.window;
                    reports.push(run_one(&spec, &root.join(scenario).join(spec.label()))?);
                }
                let c = compare_report(&reports)?;
                c.write(root.join(scenario))?;
                print_comparison(&c);
                rows.extend(
                    c.rows
                        .iter()
                        .map(|r| vec![scenario.to_string(), r.label.clone(), r.itae.to_string()]),
                );
            }
            write_table(
                &root.join("robustness.csv"),
                &["scenario", "label", "average_itae"],
                &rows,
            )?;
        }
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(run) => {
            let spec = run.spec()?;
            let dir = run.out_dir(&format!("{}-{}", spec.label(), spec.scenario().name()));
            run_one(&spec, &dir)?;
        }
        Command::Sweep { run, grid } => sweep(&run, grid)?,
        Command::Compare { reports, out } => {
            let loaded = reports
                .iter()
                .map(RunReport::load)
                .collect::<Result<Vec<_>>>()?;
            let c = compare_report(&loaded)?;
            print_comparison(&c);
            if let Some(out) = out {
                c.write(out)?;
            }
        }
        Command::PlotData { report, out, seed } => {
            let loaded = RunReport::load(&report)?;
            let dir = if report.is_dir() {
                report.clone()
            } else {
                report.parent().map(Path::to_path_buf).unwrap_or_default()
            };
            let out = out.unwrap_or_else(|| dir.join("plots"));
            for p in emit_plots(&loaded, &dir, &out, seed)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
