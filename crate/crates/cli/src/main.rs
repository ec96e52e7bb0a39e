//! `baseline-odx`: construct, evaluate and search two-color microarray designs for
//! factorial experiments under the baseline parametrization.
//!
//! Exit codes: 0 success, 2 not estimable, 3 invalid input, 4 optimizer non-convergence.

mod commands;
mod inputs;

use std::io::Write;
use std::process::ExitCode;

use baseline_odx::Error;
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "baseline-odx", version, about = "Optimal two-color microarray designs for factorial experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Emit a named design construction as JSON.
    Construct(ConstructArgs),
    /// Per-effect BLUE variances (CSV) and the weighted criterion of a design.
    Evaluate(EvaluateArgs),
    /// Exhaustive w-optimal or admissible designs.
    Search(SearchArgs),
    /// Best augmentation of the optimal saturated designs.
    Augment(SearchArgs),
    /// Optimal design measure, rounding, and efficiencies.
    Approx(ApproxArgs),
}

#[derive(Args, Debug)]
pub struct ConstructArgs {
    #[arg(long)]
    pub layout: String,
    /// d0, collection, dswap, dbar, reference, symmetric, egd2x3 or family
    #[arg(long)]
    pub kind: String,
    /// Number of slides (family)
    #[arg(long = "N", alias = "n")]
    pub slides: Option<usize>,
    /// Frequency of each of the two interaction slides (family)
    #[arg(long)]
    pub phi: Option<usize>,
    /// Factor order for the ρ-map, e.g. 2,0,1 (d0)
    #[arg(long)]
    pub permute: Option<String>,
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// plain, dye or dye-reduced
    #[arg(long, default_value = "plain")]
    pub model: String,
    /// Biological variance ratios, `label=value,…` or values in treatment order
    #[arg(long)]
    pub hetero: Option<String>,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Design JSON, or a search result containing one
    #[arg(long)]
    pub design: String,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Replication plan JSON: {"subjects":[[red,green],…]}
    #[arg(long, requires = "ratio")]
    pub replication: Option<String>,
    /// Variance ratio γ²/δ² for the replication plan
    #[arg(long, requires = "replication")]
    pub ratio: Option<String>,
    /// Interaction weight w, or `effect=weight,…`
    #[arg(long, default_value = "1")]
    pub weights: String,
    /// Emit JSON instead of CSV
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct SearchArgs {
    #[arg(long)]
    pub layout: String,
    #[arg(long)]
    pub slides: usize,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Interaction weight w
    #[arg(long, conflicts_with = "weights")]
    pub w: Option<String>,
    /// `effect=weight,…`
    #[arg(long)]
    pub weights: Option<String>,
    /// Candidate slides: `dbar` or a design JSON file
    #[arg(long)]
    pub restrict: Option<String>,
    /// Use each restricted candidate at most once
    #[arg(long, requires = "restrict")]
    pub distinct: bool,
    /// List admissible designs instead of a w-optimal one
    #[arg(long)]
    pub admissible: bool,
    /// Include every optimum in the output
    #[arg(long)]
    pub optima: bool,
    /// Worker threads (0: all cores)
    #[arg(long, env = "BASELINE_ODX_JOBS", default_value_t = 0)]
    pub jobs: usize,
}

#[derive(Args, Debug)]
pub struct ApproxArgs {
    #[arg(long)]
    pub layout: String,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, conflicts_with = "weights")]
    pub w: Option<String>,
    #[arg(long)]
    pub weights: Option<String>,
    /// baseline or orthogonal
    #[arg(long, default_value = "baseline")]
    pub parametrization: String,
    /// Round the optimal measure to a design with this many slides
    #[arg(long)]
    pub round: Option<usize>,
    /// Design or measure JSON whose efficiency is reported
    #[arg(long = "efficiency-of")]
    pub efficiency_of: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, env = "BASELINE_ODX_JOBS", default_value_t = 0)]
    pub jobs: usize,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NotEstimable(_) | Error::EmptySearchSpace => 2,
        Error::NonConvergence(_) => 4,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Construct(a) => commands::construct(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Search(a) => commands::search(a, false),
        Command::Augment(a) => commands::search(a, true),
        Command::Approx(a) => commands::approx(a),
    };
    match result {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(out.as_bytes());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_error_kind() {
        assert_eq!(exit_code(&Error::NotEstimable(vec!["11".into()])), 2);
        assert_eq!(exit_code(&Error::EmptySearchSpace), 2);
        assert_eq!(exit_code(&Error::NonConvergence("gap".into())), 4);
        assert_eq!(exit_code(&Error::Parse("x".into())), 3);
        assert_eq!(exit_code(&Error::InvalidLayout("x".into())), 3);
    }

    #[test]
    fn clap_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
