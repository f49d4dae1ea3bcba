use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use pairlab::config::{substream, ExperimentConfig};
use pairlab::{formats, harness};
use pairlab_core::degree;
use pairlab_core::pairing::{self, PointSpace};

#[derive(Parser)]
#[command(name = "pairlab", version, about = "Random pairings with a prescribed degree sequence")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment; exits nonzero unless every verdict passes.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print predicted quantities for a config without sampling.
    Describe {
        #[arg(long)]
        config: PathBuf,
    },
    /// Check a degree file, optionally against a tail bound.
    Validate {
        file: PathBuf,
        #[arg(long, requires = "c")]
        gamma: Option<f64>,
        #[arg(long, requires = "gamma")]
        c: Option<f64>,
    },
    /// Draw one pairing and write it as a pairing file or an edge list.
    Sample {
        file: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write `u v` vertex edges instead of `s t` point pairs.
        #[arg(long)]
        edges: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { config, seed, workers, out } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if workers.is_some() {
                cfg.workers = workers;
            }
            if out.is_some() {
                cfg.output_dir = out;
            }
            cfg.validate()?;
            let summary = harness::run(&cfg)?;
            for v in &summary.verdicts {
                println!(
                    "{} {} [{}] observed={} tolerance={} margin={}",
                    if v.pass { "PASS" } else { "FAIL" },
                    v.name,
                    v.cell,
                    v.observed,
                    v.tolerance,
                    v.margin
                );
            }
            for (cell, secs) in &summary.wall_clock {
                eprintln!("{cell}: {secs:.3}s");
            }
            println!("artifacts in {}", summary.output_dir.display());
            Ok(summary.all_pass)
        }
        Command::Describe { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let cells = harness::describe(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&cells)?);
            Ok(true)
        }
        Command::Validate { file, gamma, c } => {
            let text = fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
            let degrees = formats::parse_degree_list(&text)?;
            let seq = match degree::DegreeSequence::new(degrees.clone()) {
                Ok(seq) => seq,
                Err(e) => {
                    println!("invalid: {e}");
                    return Ok(false);
                }
            };
            let dist = seq.distribution();
            println!("n={} 2m={} max_degree={} nu={}", seq.n(), seq.two_m(), seq.max_degree(), dist.nu());
            if let (Some(gamma), Some(c)) = (gamma, c) {
                let report = degree::validate_subpower(&degrees, gamma, c);
                println!("{report:?}");
                if !report.is_valid() {
                    println!("invalid: tail bound violated");
                    return Ok(false);
                }
            }
            println!("valid");
            Ok(true)
        }
        Command::Sample { file, seed, edges, out } => {
            let seq = formats::read_degree_sequence(&file)?;
            let space = PointSpace::new(&seq);
            let p = pairing::sample_pairing(&space, &mut substream(seed, 0, 0));
            let sink: Box<dyn Write> = match out {
                Some(path) => Box::new(fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?),
                None => Box::new(io::stdout().lock()),
            };
            let mut w = BufWriter::new(sink);
            if edges {
                formats::write_edge_list(&mut w, &p)?;
            } else {
                formats::write_pairing(&mut w, &p)?;
            }
            w.flush()?;
            Ok(true)
        }
    }
}
