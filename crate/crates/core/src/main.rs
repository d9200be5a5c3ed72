use clap::Parser;

use lmm_barrier::cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
