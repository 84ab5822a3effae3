use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use dunkl_core::report::emit_report;
use dunkl_core::suites::{run_suites, SuiteConfig, SuiteRegistry};

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "dunkl-lab", version, about = "Numerical checks of sharp Hardy and Rellich inequalities for Dunkl operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification suite: identities, harmonics, hardy, hardy-rellich or all.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct VerifyArgs {
    suite: String,
    /// Root system family: A, B, Z2 or I2.
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    rank: Option<usize>,
    /// Dihedral order for I2.
    #[arg(long)]
    m: Option<usize>,
    /// Multiplicities per orbit; a single value applies to every orbit.
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<String>>,
    /// Exponent for the L^p Hardy checks, or `auto` for N+2γ+1.
    #[arg(long)]
    p: Option<String>,
    /// Decreasing ε schedule for the extremizer sweeps.
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    quad_order: Option<usize>,
    #[arg(long)]
    nmax: Option<u32>,
    /// JSON config file; flags take precedence over its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "dunkl-report")]
    out: PathBuf,
}

impl VerifyArgs {
    fn config(&self) -> Result<SuiteConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => SuiteConfig::default(),
        };
        if let Some(f) = &self.family {
            cfg.family = f.clone();
        }
        if let Some(r) = self.rank {
            cfg.rank = r;
        }
        if let Some(m) = self.m {
            cfg.m = m;
        }
        if let Some(k) = &self.k {
            cfg.k = k.iter().map(|s| s.trim().to_string()).collect();
        }
        if let Some(p) = &self.p {
            cfg.p = if p.eq_ignore_ascii_case("auto") {
                None
            } else {
                Some(p.parse().with_context(|| format!("--p expects a number or `auto`, got `{p}`"))?)
            };
        }
        if let Some(e) = &self.eps {
            cfg.epsilons = e.clone();
        }
        if let Some(t) = self.tol {
            cfg.tolerance = Some(t);
        }
        if let Some(q) = self.quad_order {
            cfg.quad_order = q;
        }
        if let Some(n) = self.nmax {
            cfg.nmax = n;
        }
        cfg.validate()?;
        cfg.root_system()?;
        Ok(cfg)
    }
}

fn verify(args: &VerifyArgs) -> ExitCode {
    let registry = SuiteRegistry::standard();
    let cfg = match args.config().and_then(|c| registry.select(&args.suite).map(|_| c).map_err(Into::into)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let run = || -> Result<bool> {
        let results = run_suites(&registry, &args.suite, &cfg)?;
        let (summary, files) = emit_report(&args.suite, &results, &args.out)?;
        for c in &summary.details {
            let status = if c.skipped {
                "skip"
            } else if c.pass {
                "pass"
            } else {
                "FAIL"
            };
            println!("{status:4} {:14} {:28} {}", c.suite, c.theorem, c.name);
        }
        for f in files {
            println!("wrote {}", f.display());
        }
        Ok(summary.pass)
    };
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAIL),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_FAIL)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match &cli.command {
        Command::Verify(args) => verify(args),
    }
}
