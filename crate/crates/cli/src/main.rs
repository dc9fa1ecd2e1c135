use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use claasic_cli::config::{parse_assignment, read_pairs, ExperimentConfig};
use claasic_cli::run::{run_experiment, EPOCHS_FILE, SUMMARY_FILE};
use claasic_cli::sweep::{run_sweep, Axis};
use claasic_cli::verify::run_verify;
use claasic_cli::CliError;

#[derive(Parser)]
#[command(name = "claasic", version, about = "Cortical learning accelerator simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Configuration file of `key = value` lines.
    #[arg(short, long)]
    config: Option<PathBuf>,

    /// Override one key; repeatable, applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Preset: desk or full.
    #[arg(long)]
    scale: Option<String>,

    /// Torus size, e.g. 4x4.
    #[arg(long)]
    grid: Option<String>,

    /// sequential or pipelined.
    #[arg(long)]
    schedule: Option<String>,

    #[arg(long)]
    zones: Option<u32>,

    /// Number of synthetic series.
    #[arg(long)]
    series: Option<u32>,
}

impl ConfigArgs {
    fn pairs(&self) -> Result<Vec<(String, String)>, CliError> {
        let mut pairs = match &self.config {
            Some(path) => read_pairs(path)?,
            None => Vec::new(),
        };
        let flags = [
            ("scale", self.scale.clone()),
            ("grid", self.grid.clone()),
            ("schedule", self.schedule.clone()),
            ("zones", self.zones.map(|z| z.to_string())),
            ("series", self.series.map(|s| s.to_string())),
        ];
        pairs.extend(flags.into_iter().filter_map(|(k, v)| v.map(|v| (k.to_string(), v))));
        for s in &self.set {
            pairs.push(parse_assignment(s)?);
        }
        Ok(pairs)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write epochs.csv and summary.json.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(short, long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Run the cartesian product of one or more parameter axes.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// `key=v1,v2,...`; repeatable.
        #[arg(long = "axis", value_name = "KEY=V1,V2", required = true)]
        axes: Vec<String>,
        #[arg(short, long, default_value = "sweep")]
        out_dir: PathBuf,
    },
    /// Compare the accelerator with the reference model under both schedules.
    Verify {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, default_value_t = 3)]
        seeds: u64,
        #[arg(long, default_value_t = 100)]
        epochs: usize,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { cfg, out_dir } => {
            let cfg = ExperimentConfig::from_pairs(&cfg.pairs()?)?;
            let s = run_experiment(&cfg, &out_dir)?;
            println!("epochs            {}", s.totals.epochs);
            println!("cycles per epoch  {:.1}", s.means.cycles);
            println!("energy per epoch  {:.1}", s.means.energy);
            println!("mean anomaly      {:.4}", s.means.anomaly);
            if let Some(l) = &s.learning {
                println!(
                    "learned           {}/{} series, {:.2} repetitions (98% CI {:.2}..{:.2})",
                    l.learned, l.series, l.mean_repetitions, l.ci98.0, l.ci98.1
                );
            }
            if let Some(v) = &s.verify {
                println!("verified          {} epochs, {} divergences", v.epochs_compared, v.divergences);
            }
            println!("wrote {} and {}", out_dir.join(EPOCHS_FILE).display(), out_dir.join(SUMMARY_FILE).display());
            Ok(())
        }
        Command::Sweep { cfg, axes, out_dir } => {
            let axes = axes.iter().map(|a| a.parse()).collect::<Result<Vec<Axis>, _>>()?;
            let results = run_sweep(&cfg.pairs()?, &axes, &out_dir)?;
            let mut failed = 0;
            for r in &results {
                let label: Vec<String> = r.assignments.iter().map(|(k, v)| format!("{k}={v}")).collect();
                match &r.outcome {
                    Ok(s) => println!("point {:3} {}  ok  {:.1} cycles/epoch", r.index, label.join(" "), s.means.cycles),
                    Err(e) => {
                        failed += 1;
                        println!("point {:3} {}  FAILED  {e}", r.index, label.join(" "));
                    }
                }
            }
            println!("wrote {}", out_dir.join(claasic_cli::sweep::SWEEP_FILE).display());
            if failed > 0 {
                return Err(CliError::SweepFailures { failed, total: results.len() });
            }
            Ok(())
        }
        Command::Verify { cfg, seeds, epochs } => {
            let cfg = ExperimentConfig::from_pairs(&cfg.pairs()?)?;
            let cases = run_verify(&cfg, seeds, epochs)?;
            let mut first = None;
            for c in &cases {
                match &c.divergence {
                    None => println!("seed {} {:?}: {} epochs match", c.seed, c.schedule, c.epochs),
                    Some(d) => {
                        println!("seed {} {:?}: DIVERGED at {d}", c.seed, c.schedule);
                        first.get_or_insert_with(|| d.clone());
                    }
                }
            }
            match first {
                Some(d) => Err(CliError::Divergence(d)),
                None => Ok(()),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
