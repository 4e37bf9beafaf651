//! `confgeom`: run curvature, hypersurface, Yamabe, tractor and variational checks
//! described by a TOML manifest and emit a JSON/CSV report.

mod commands;
mod manifest;
mod report;

use std::fs::File;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use confgeom_core::checks::Invariant;

use commands::{execute, Command, Failure, Identity, Options};
use manifest::Manifest;

#[derive(Parser)]
#[command(name = "confgeom", version, about = "Conformal hypersurface invariants from a TOML manifest")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    global: Global,
}

#[derive(Args)]
struct Global {
    /// Tolerance applied to every check, overriding the manifest and the defaults.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Quadrature nodes per axis, overriding `domain.nodes`.
    #[arg(long, global = true)]
    nodes: Option<usize>,
    /// Expansion order for `yamabe` (default: the dimension).
    #[arg(long, global = true)]
    order: Option<usize>,
    /// Seed for randomized suites, overriding the manifest.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the JSON report here (`-` for stdout).
    #[arg(long, global = true)]
    json: Option<PathBuf>,
    /// Write a flattened CSV of all values here (`-` for stdout).
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Curvature stack and ambient identities at each point.
    Curvature { manifest: PathBuf },
    /// Extrinsic invariants and hypersurface identities at each point.
    Hypersurface { manifest: PathBuf },
    /// Singular Yamabe expansion, obstruction density and `E` jets.
    Yamabe { manifest: PathBuf },
    /// Tractor property suite.
    TractorCheck { manifest: PathBuf },
    /// Random-rescaling weight tests for one invariant.
    Invariance {
        #[arg(long, value_parser = parse_invariant)]
        invariant: Invariant,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        manifest: PathBuf,
    },
    /// Compare analytic identities against independent oracles.
    Verify {
        #[arg(long, value_parser = parse_identity)]
        identity: Vec<Identity>,
        manifest: PathBuf,
    },
    /// Boundary pairing integral under a conformal rescaling.
    Pairing { manifest: PathBuf },
}

fn parse_invariant(s: &str) -> Result<Invariant, String> {
    Invariant::from_name(s).ok_or_else(|| {
        let names: Vec<&str> = Invariant::ALL.iter().map(|i| i.name()).collect();
        format!("expected one of {}", names.join(", "))
    })
}

fn parse_identity(s: &str) -> Result<Identity, String> {
    Identity::from_name(s).ok_or_else(|| {
        let names: Vec<&str> = Identity::ALL.iter().map(|i| i.name()).collect();
        format!("expected one of {}", names.join(", "))
    })
}

fn open(path: &PathBuf) -> std::io::Result<Box<dyn Write>> {
    if path.as_os_str() == "-" {
        Ok(Box::new(std::io::stdout()))
    } else {
        Ok(Box::new(File::create(path)?))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, path) = match cli.command {
        Cmd::Curvature { manifest } => (Command::Curvature, manifest),
        Cmd::Hypersurface { manifest } => (Command::Hypersurface, manifest),
        Cmd::Yamabe { manifest } => (Command::Yamabe, manifest),
        Cmd::TractorCheck { manifest } => (Command::TractorCheck, manifest),
        Cmd::Invariance { invariant, trials, manifest } => (Command::Invariance { invariant, trials }, manifest),
        Cmd::Verify { identity, manifest } => (Command::Verify { identities: identity }, manifest),
        Cmd::Pairing { manifest } => (Command::Pairing, manifest),
    };
    let g = cli.global;
    if let Some(t) = g.tolerance {
        if !(t > 0.0 && t.is_finite()) {
            eprintln!("error[usage]: --tolerance must be positive");
            return ExitCode::from(2);
        }
    }

    let manifest = match Manifest::load(&path) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error[manifest]: {}: {e}", path.display());
            return ExitCode::from(2);
        }
    };
    let opts = Options { tolerance: g.tolerance, nodes: g.nodes, order: g.order, seed: g.seed };
    let report = match execute(&command, &manifest, &path.display().to_string(), &opts) {
        Ok(r) => r,
        Err(Failure::Manifest(e)) => {
            eprintln!("error[manifest]: {}: {e}", path.display());
            return ExitCode::from(2);
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("error[numerical]: {e}");
            return ExitCode::from(2);
        }
    };

    let written = (|| -> Result<(), Box<dyn std::error::Error>> {
        if let Some(p) = &g.json {
            report.write_json(&mut *open(p)?)?;
        }
        if let Some(p) = &g.csv {
            report.write_csv(&mut *open(p)?)?;
        }
        Ok(())
    })();
    if let Err(e) = written {
        eprintln!("error[io]: {e}");
        return ExitCode::from(2);
    }
    eprint!("{}", report.summary());
    if report.pass { ExitCode::SUCCESS } else { ExitCode::from(1) }
}
