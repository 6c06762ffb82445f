use clap::Parser;

use latvol_cli::args::Cli;
use latvol_cli::{error_json, run};

fn main() {
    let cli = Cli::parse();
    let (config, output) = match cli.into_config() {
        Ok(pair) => pair,
        Err(e) => {
            eprintln!("{}", error_json(&e));
            std::process::exit(1);
        }
    };
    if let Err(e) = run(&config, output.as_deref()) {
        eprintln!("{}", error_json(&e));
        std::process::exit(1);
    }
}
