use clap::Parser;

use qfi_cli::args::Cli;

/// Overrides the worker-thread count.
const THREADS_VAR: &str = "LOSSQFI_THREADS";

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Ok(v) = std::env::var(THREADS_VAR) {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                {
                    log::warn!("could not set thread count: {e}");
                }
            }
            _ => {
                eprintln!("{THREADS_VAR} must be a positive integer, got {v:?}");
                std::process::exit(qfi_cli::EXIT_USAGE);
            }
        }
    }
    let cli = Cli::parse();
    let code = match qfi_cli::run(cli) {
        Ok(outcome) => {
            println!(
                "{}",
                outcome
                    .out_dir
                    .join(qfi_cli::manifest::MANIFEST_FILE)
                    .display()
            );
            outcome.exit_code()
        }
        Err(e) => {
            eprintln!("lossqfi: {e:#}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
