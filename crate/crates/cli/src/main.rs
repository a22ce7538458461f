use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use bilab_cli::{export_plot_data, run, ExperimentConfig, Kind, RunError, RunReport};
use clap::{Args, Parser};

/// Runs one experiment and writes `<kind>_report.json` plus one CSV per sweep.
///
/// Precedence: command-line flags, then the config file, then built-in defaults.
#[derive(Debug, Parser)]
#[command(name = "bilab", version)]
struct Cli {
    #[arg(value_enum)]
    kind: Kind,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Debug, Args)]
struct Overrides {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    lattice_radius: Option<usize>,
    #[arg(long)]
    mesh: Option<usize>,
}

fn resolve(cli: &Cli) -> anyhow::Result<ExperimentConfig> {
    let o = &cli.overrides;
    let mut cfg = match &o.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::new(cli.kind),
    };
    if cfg.kind() != cli.kind {
        bail!("config describes '{}' but the subcommand is '{}'", cfg.kind().name(), cli.kind.name());
    }
    if let Some(out) = &o.out {
        cfg.output.dir = out.clone();
    }
    let p = &mut cfg.parameters;
    p.seed = o.seed.or(p.seed);
    p.lattice_radius = o.lattice_radius.or(p.lattice_radius);
    p.mesh = o.mesh.or(p.mesh);
    cfg.validate()?;
    Ok(cfg)
}

fn write_outputs(report: &RunReport, dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let kind = report.config.kind().name();
    let path = dir.join(format!("{kind}_report.json"));
    std::fs::write(&path, report.to_json()?).with_context(|| format!("writing {}", path.display()))?;
    for s in &report.series {
        let path = dir.join(format!("{kind}_{}.csv", s.quantity));
        let file = File::create(&path).with_context(|| format!("writing {}", path.display()))?;
        export_plot_data(report, &s.quantity, BufWriter::new(file))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match resolve(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    if let Some(n) = cli.overrides.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let report = match run(&cfg) {
        Ok(r) => r,
        Err(e @ RunError::Config(_)) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    };
    for r in &report.records {
        println!("{} {} = {:.6e}", if r.pass { "PASS" } else { "FAIL" }, r.name, r.value);
    }
    if let Err(e) = write_outputs(&report, &cfg.output.dir) {
        eprintln!("error: {e:#}");
        return ExitCode::from(3);
    }
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
