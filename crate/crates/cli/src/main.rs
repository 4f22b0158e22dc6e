use std::path::{Path, PathBuf};
use std::process::ExitCode;

use boolmodel_cli::config::{sha256_hex, LoadedConfig};
use boolmodel_cli::output::Sink;
use boolmodel_cli::verify::{self, Suite, VerifySpec};
use boolmodel_cli::{exit, run, Failure, Outcome};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "boolmodel", version, about = "Boolean model simulation, inversion and verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the seed of the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate (or compute) the densities of a model.
    Simulate(Common),
    /// Recover the intensity and mean shape data from a density table.
    Invert {
        #[command(flatten)]
        common: Common,
        /// Density CSV; defaults to densities.csv in the output directory.
        #[arg(long)]
        densities: Option<PathBuf>,
    },
    /// Run a verification suite.
    Verify {
        #[arg(value_parser = |s: &str| s.parse::<Suite>())]
        suite: Suite,
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo flag measure of the grain law.
    Flags(Common),
}

fn load(common: &Common) -> Outcome<LoadedConfig> {
    let path = common
        .config
        .as_deref()
        .ok_or_else(|| Failure::Input("--config is required".into()))?;
    let mut cfg = LoadedConfig::load(path)?;
    if let Some(s) = common.seed {
        cfg.config.seed = s;
    }
    Ok(cfg)
}

fn sink(cfg: &LoadedConfig, out: Option<&Path>) -> Outcome<Sink> {
    Sink::create(&cfg.output_dir(out), &cfg.hash, cfg.config.seed)
}

fn verify_command(suite: Suite, common: &Common) -> Outcome<()> {
    // without a config the defaults are used and --seed is mandatory
    let (spec, hash, seed, dir) = match &common.config {
        Some(_) => {
            let cfg = load(common)?;
            let dir = cfg.output_dir(common.out.as_deref());
            (cfg.config.verify.clone(), cfg.hash, cfg.config.seed, dir)
        }
        None => {
            let seed = common
                .seed
                .ok_or_else(|| Failure::Input("--seed is required without --config".into()))?;
            let dir = common.out.clone().unwrap_or_else(|| PathBuf::from("out"));
            (VerifySpec::default(), sha256_hex(b""), seed, dir)
        }
    };
    let sink = Sink::create(&dir, &hash, seed)?;
    let report = verify::run(suite, &spec, seed)?;
    sink.json(&format!("verify_{suite}.json"), "report", &report)?;
    for p in &report.plots {
        sink.raw(&format!("plot_{}.csv", p.name), format!("{}{}", sink.tag_line(), p.to_csv()).as_bytes())?;
    }
    sink.finish()?;
    for c in &report.checks {
        let mark = if c.passed { "pass" } else { "FAIL" };
        println!("{mark} {}: value {:.6e}, reference {:.6e}, tolerance {:.3e}", c.name, c.value, c.reference, c.tolerance);
    }
    let failed = report.failures();
    if failed.is_empty() {
        Ok(())
    } else {
        let names: Vec<&str> = failed.iter().map(|c| c.name.as_str()).collect();
        Err(Failure::Check(names.join(", ")))
    }
}

fn dispatch(cli: Cli) -> Outcome<()> {
    match cli.command {
        Command::Simulate(common) => {
            let cfg = load(&common)?;
            let sink = sink(&cfg, common.out.as_deref())?;
            let table = run::simulate(&cfg, &sink)?;
            sink.finish()?;
            println!("{} density rows written to {}", table.rows.len(), sink.path("densities.csv").display());
            Ok(())
        }
        Command::Invert { common, densities } => {
            let cfg = load(&common)?;
            let sink = sink(&cfg, common.out.as_deref())?;
            let densities = densities.unwrap_or_else(|| sink.path("densities.csv"));
            let result = run::invert(&cfg, &densities, &sink);
            sink.finish()?;
            let model = result?;
            println!("gamma_hat {}", model.gamma_hat);
            Ok(())
        }
        Command::Verify { suite, common } => verify_command(suite, &common),
        Command::Flags(common) => {
            let cfg = load(&common)?;
            let sink = sink(&cfg, common.out.as_deref())?;
            let f = run::flags(&cfg, &sink)?;
            sink.finish()?;
            println!("flag measure of order {}: mass {} ± {}", f.j, f.total_mass, f.stderr);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::from(exit::PASS as u8),
        Err(e) => {
            eprintln!("boolmodel: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
