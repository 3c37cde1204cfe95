use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rand::SeedableRng;
use wpccn_core::experiment::{
    run_experiment, three_node_sweep, write_csv, ExperimentConfig, ThreeNodeConfig,
};
use wpccn_core::net_model::{NetworkInstance, Scenario};
use wpccn_core::relay_select::{check_full_schedule, Algorithm};

#[derive(Parser)]
#[command(name = "wpccn", version, about = "Relay selection and scheduling for wireless-powered relay networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the seed in the input file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the trial count of an experiment.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Worker threads; all cores when absent.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo experiment; writes per-trial CSV and a summary CSV.
    Run {
        config: PathBuf,
        /// Summary CSV path; defaults to `<out>.summary.csv`, or stderr without --out.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Sweep a relay along a line between a fixed source and the AP.
    ThreeNode { config: PathBuf },
    /// Solve one network: a full instance, or a scenario realized with the seed.
    Solve {
        instance: PathBuf,
        #[arg(long)]
        algo: Algorithm,
    },
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn output(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn load_instance(path: &Path, seed: Option<u64>) -> Result<NetworkInstance<f64>> {
    let value: serde_json::Value = read_json(path)?;
    if value.get("channels").is_some() {
        let inst: NetworkInstance<f64> = serde_json::from_value(value).context("parsing network instance")?;
        inst.validate()?;
        return Ok(inst);
    }
    let scenario: Scenario = serde_json::from_value(value).context("parsing scenario")?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed.unwrap_or(scenario.seed));
    Ok(scenario.realize(&mut rng)?)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if t == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    match &cli.command {
        Command::Run { config, summary } => {
            let mut cfg: ExperimentConfig = read_json(config)?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            if let Some(t) = cli.trials {
                cfg.trials = t;
            }
            let result = run_experiment(&cfg)?;
            write_csv(output(&cli.out)?, &result.records)?;
            let summary_path = summary.clone().or_else(|| {
                cli.out.as_ref().map(|p| {
                    let mut s = p.clone().into_os_string();
                    s.push(".summary.csv");
                    PathBuf::from(s)
                })
            });
            match summary_path {
                Some(p) => write_csv(File::create(&p).with_context(|| format!("creating {}", p.display()))?, &result.summary)?,
                None => write_csv(io::stderr().lock(), &result.summary)?,
            }
        }
        Command::ThreeNode { config } => {
            let cfg: ThreeNodeConfig = read_json(config)?;
            let result = three_node_sweep(&cfg)?;
            write_csv(output(&cli.out)?, &result.rows)?;
            let mut err = io::stderr().lock();
            for (pmax, xs) in &result.crossovers {
                writeln!(err, "pmax {pmax} W: crossovers at x = {xs:?}")?;
            }
            writeln!(err, "gain-product test boundaries at x = {:?}", result.benefit_boundaries)?;
        }
        Command::Solve { instance, algo } => {
            let inst = load_instance(instance, cli.seed)?;
            let schedule = algo.run(&inst)?;
            if let Err(e) = check_full_schedule(&inst, &schedule, 1e-6) {
                bail!("{algo} returned an infeasible schedule: {e}");
            }
            let mut w = output(&cli.out)?;
            serde_json::to_writer_pretty(&mut w, &schedule)?;
            writeln!(w)?;
        }
    }
    Ok(())
}
