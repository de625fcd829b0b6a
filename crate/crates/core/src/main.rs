use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sprep::cli::{run, write_report, BetaSource, RunConfig, Suite, ThetaSelector};

#[derive(Parser)]
#[command(name = "sprep", version, about = "Regular-orbit representations of Sp_2n(Z/p^r), built and checked exactly")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Group, torus and dimension counts.
    Orders(Instance),
    /// Build every delta and check degrees, norms and orthogonality.
    Build(Instance),
    /// Whittaker criteria, depth scan and the double-coset cross-check.
    Generic(Instance),
    /// Conjugate beta into canonical form.
    Canonical(Instance),
    /// Run a JSON configuration file.
    Report {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Every suite supported for the instance.
    All(Instance),
}

#[derive(Args)]
struct Instance {
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long)]
    p: u64,
    #[arg(long)]
    r: u32,
    /// JSON file with fields n, p, r, entries.
    #[arg(long, conflicts_with = "seed")]
    beta_file: Option<PathBuf>,
    /// Draw a random regular beta with this seed instead of the canonical one.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    budget: Option<u128>,
    /// Report path; the report goes to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Restrict to these theta indices (comma separated).
    #[arg(long, value_delimiter = ',')]
    theta: Option<Vec<usize>>,
    /// Unit twist u of the additive character.
    #[arg(long, default_value_t = 1)]
    twist: u64,
    /// Directory for character CSV files.
    #[arg(long)]
    csv_dir: Option<PathBuf>,
}

impl Instance {
    fn config(&self, suites: Vec<Suite>) -> RunConfig {
        let mut c = RunConfig::new(self.n, self.p, self.r, suites);
        c.beta = match (&self.beta_file, self.seed) {
            (Some(path), _) => BetaSource::File { path: path.clone() },
            (None, Some(seed)) => BetaSource::Random { seed },
            (None, None) => BetaSource::Canonical,
        };
        if let Some(t) = &self.theta {
            c.thetas = ThetaSelector::Indices(t.clone());
        }
        if let Some(b) = self.budget {
            c.budget = b;
        }
        c.tau_twist = self.twist;
        c.csv_dir = self.csv_dir.clone();
        c
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cfg, out) = match cli.verb {
        Verb::Orders(i) => (i.config(vec![Suite::Orders]), i.out),
        Verb::Build(i) => {
            let mut s = vec![Suite::Clifford];
            if i.r % 2 == 1 {
                s.push(Suite::Heisenberg);
            }
            (i.config(s), i.out)
        }
        Verb::Generic(i) => (i.config(vec![Suite::Genericity]), i.out),
        Verb::Canonical(i) => (i.config(vec![Suite::CanonicalForm]), i.out),
        Verb::All(i) => (i.config(RunConfig::all_suites(i.n, i.r)), i.out),
        Verb::Report { config, out } => {
            let parsed = std::fs::read_to_string(&config)
                .map_err(sprep::Error::from)
                .and_then(|t| serde_json::from_str::<RunConfig>(&t).map_err(sprep::Error::from));
            match parsed {
                Ok(c) => (c, out),
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            }
        }
    };
    let report = match run(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let written = match &out {
        Some(path) => write_report(&report, path),
        None => serde_json::to_string_pretty(&report)
            .map(|s| println!("{s}"))
            .map_err(sprep::Error::from),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    for s in &report.suites {
        let status = match (&s.error, s.passed) {
            (Some(e), _) => format!("ERROR {e}"),
            (None, true) => "pass".to_string(),
            (None, false) => "FAIL".to_string(),
        };
        eprintln!("{:?}: {status}", s.suite);
    }
    ExitCode::from(report.exit_code() as u8)
}
