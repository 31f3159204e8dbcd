use clap::{Parser, Subcommand};
use hsvar_cli::{estimate, identification, irf, normalize, simulate, verify};

#[derive(Parser)]
#[command(
    name = "hsvar",
    version,
    about = "Heteroskedastic Bayesian structural VARs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a sample from a preset or a JSON process description.
    Simulate(simulate::SimulateArgs),
    /// Run the Gibbs sampler and write posterior artifacts.
    Estimate(estimate::EstimateArgs),
    /// Tabulate per-shock Savage-Dickey homoskedasticity tests.
    Verify(verify::VerifyArgs),
    /// Summarize structural impulse responses across posterior draws.
    Irf(irf::IrfArgs),
    /// Resolve row sign/order ambiguity of the stored draws.
    Normalize(normalize::NormalizeArgs),
    /// Report which shocks a covariance sequence identifies.
    CheckIdentification(identification::CheckArgs),
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => simulate::run(&args),
        Command::Estimate(args) => estimate::run(&args),
        Command::Verify(args) => verify::run(&args),
        Command::Irf(args) => irf::run(&args),
        Command::Normalize(args) => normalize::run(&args),
        Command::CheckIdentification(args) => identification::run(&args),
    };
    if let Err(err) = result {
        eprintln!("error: {err}");
        std::process::exit(1);
    }
}
