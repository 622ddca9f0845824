use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};

use labgauge::scenario::{digest, Loaded};
use labgauge::suite::identity_check_id;
use labgauge::{emit_report, load_scenario, run_checks, run_suite, tolerance_scale_from_env, Format, ScenarioFile, Suite, SuiteSpec};
use labgauge_core::forms::identities::IdentityTag;
use labgauge_core::liecore::LieAlgebra;
use labgauge_core::redef::canonical_nonclassical;

/// Exit status when every record passes.
const PASS: u8 = 0;
/// Exit status when at least one record fails.
const FAIL: u8 = 1;
/// Exit status for unreadable or invalid input.
const INVALID: u8 = 2;

#[derive(Parser)]
#[command(name = "labgauge", version, about = "Verify curved gauge theory scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunOptions {
    /// Sample points per check.
    #[arg(long, default_value_t = 50)]
    points: usize,
    /// Seed for sample points and random fields; defaults to the scenario's.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Record wall time per check. Reports stop being reproducible.
    #[arg(long)]
    timings: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification suite on a scenario file.
    Verify {
        scenario: PathBuf,
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        #[command(flatten)]
        run: RunOptions,
    },
    /// Check one calculus identity on a scenario file.
    Identity {
        /// Identity id, e.g. leibniz_bracket.
        id: String,
        scenario: PathBuf,
        #[command(flatten)]
        run: RunOptions,
    },
    /// Write the canonical non-classical scenario for an algebra with centre.
    Canonical {
        #[arg(long, default_value = "u1")]
        algebra: String,
        /// Target dimension, at least 3.
        #[arg(long, default_value_t = 3)]
        ndim: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Output path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn invalid(message: impl std::fmt::Display) -> ExitCode {
    eprintln!("labgauge: {message}");
    ExitCode::from(INVALID)
}

fn spec_for(suite: Suite, loaded: &Loaded, run: &RunOptions) -> Result<SuiteSpec, String> {
    let mut spec = SuiteSpec::new(suite, run.points, run.seed.unwrap_or(loaded.file.seed));
    spec.tolerances = loaded.file.tolerances.clone();
    spec.tolerance_scale = tolerance_scale_from_env()?;
    spec.timings = run.timings;
    spec.validate()?;
    Ok(spec)
}

fn verify(path: &Path, suite: Suite, ids: Option<Vec<String>>, run: &RunOptions) -> ExitCode {
    let loaded = match load_scenario(path) {
        Ok(l) => l,
        Err(e) => return invalid(e),
    };
    let spec = match spec_for(suite, &loaded, run) {
        Ok(s) => s,
        Err(e) => return invalid(e),
    };
    let report = match ids {
        Some(ids) => run_checks(&loaded.scenario, &loaded.digest, &spec, &ids),
        None => run_suite(&loaded.scenario, &loaded.digest, &spec),
    };
    print!("{}", emit_report(&report, run.format));
    ExitCode::from(if report.passed() { PASS } else { FAIL })
}

fn canonical(algebra: &str, ndim: usize, seed: u64, out: Option<&Path>) -> ExitCode {
    let alg = match LieAlgebra::named(algebra) {
        Ok(a) => Arc::new(a),
        Err(e) => return invalid(e),
    };
    let s = match canonical_nonclassical(ndim, alg, None) {
        Ok(s) => s,
        Err(e) => return invalid(e),
    };
    let json = ScenarioFile::from_scenario(&s, Some(algebra), seed).to_json();
    match out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &json) {
                return invalid(format!("cannot write {}: {e}", path.display()));
            }
            eprintln!("wrote {} (sha256 {})", path.display(), digest(json.as_bytes()));
        }
        None => print!("{json}"),
    }
    ExitCode::from(PASS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Verify { scenario, suite, run } => verify(scenario, *suite, None, run),
        Command::Identity { id, scenario, run } => match id.parse::<IdentityTag>() {
            Ok(tag) => verify(scenario, Suite::Calculus, Some(vec![identity_check_id(tag)]), run),
            Err(e) => invalid(e),
        },
        Command::Canonical { algebra, ndim, seed, out } => canonical(algebra, *ndim, *seed, out.as_deref()),
    }
}
