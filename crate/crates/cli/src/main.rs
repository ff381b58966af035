use clap::Parser;
use spinlangevin::Cli;

fn main() {
    let cli = Cli::parse();
    // cap the worker pool before any parallel region spins it up
    if let Ok(v) = std::env::var("SPINLANGEVIN_THREADS") {
        match v.trim().parse::<usize>() {
            Ok(k) if k >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(k)
                    .build_global();
            }
            _ => {
                eprintln!("SPINLANGEVIN_THREADS must be a positive integer, got `{v}`");
                std::process::exit(2);
            }
        }
    }
    if let Err(e) = spinlangevin::run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
