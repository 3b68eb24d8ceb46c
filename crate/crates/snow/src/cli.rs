//! Command line entry point. Subcommands are wired in as the corresponding
//! modules land.

pub fn run() {
    eprintln!("snow: no subcommands wired yet");
    std::process::exit(2);
}
