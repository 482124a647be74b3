use clap::Parser;
use uwbcap_cli::{execute, Cli, Exit};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            std::process::exit(if e.use_stderr() { Exit::Validation.code() } else { Exit::Ok.code() });
        }
    };
    std::process::exit(execute(cli));
}
