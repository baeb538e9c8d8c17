use clap::Parser;
use vlad::cli::{execute, Cli};
use vlad::runtime::with_big_stack;

fn main() {
    let cli = Cli::parse();
    std::process::exit(with_big_stack(move || execute(cli)));
}
