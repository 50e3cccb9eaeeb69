use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use polaron_lab::{main_with, Overrides, Verb};

#[derive(Parser)]
#[command(name = "polaron-lab", version, about = "Polaron decoherence laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the verification suite (identities, LF split, second and third order).
    Verify(CommonArgs),
    /// Run the experiment named in the configuration.
    Run(CommonArgs),
    /// Run the configured parameter sweep.
    Sweep(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON configuration (or a previous run manifest).
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding `output_dir`.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Worker threads, overriding `parallelism`.
    #[arg(long)]
    parallelism: Option<usize>,
}

fn main() {
    let cli = Cli::parse();
    let (verb, args) = match cli.command {
        Command::Verify(a) => (Verb::Verify, a),
        Command::Run(a) => (Verb::Run, a),
        Command::Sweep(a) => (Verb::Sweep, a),
    };
    let overrides = Overrides {
        output: args.output,
        parallelism: args.parallelism,
    };
    std::process::exit(main_with(verb, &args.config, &overrides));
}
