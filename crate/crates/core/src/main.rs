use clap::Parser;

use trapinv::cli::{render, run, RunConfig};

fn main() {
    let cfg = RunConfig::parse();
    let report = run(&cfg);
    print!("{}", render(&report, cfg.report));
    std::process::exit(report.exit_code());
}
