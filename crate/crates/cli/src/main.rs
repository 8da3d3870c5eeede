use clap::Parser;

use drapestack_cli::{exit, init_logging, init_threads, run, Cli};

fn main() {
    let cli = Cli::parse();
    init_logging();
    let result = init_threads(cli.threads).and_then(|()| run(&cli, &mut std::io::stdout().lock()));
    match result {
        Ok(()) => std::process::exit(exit::SUCCESS),
        Err(e) => {
            log::error!("error={e}");
            eprintln!("drapestack: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
