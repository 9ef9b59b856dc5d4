use clap::Parser;
use spikebar_cli::{args::Cli, commands};

fn main() {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = commands::run(cli, &argv) {
        eprintln!("error kind={} msg={:?}", e.kind(), e.to_string());
        std::process::exit(match e.kind() {
            "config" => 1,
            "input" => 2,
            _ => 3,
        });
    }
}
