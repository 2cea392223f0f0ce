use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match soav::cli::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors share the input-error code; help and version succeed
            std::process::exit(if e.use_stderr() { soav::cli::EXIT_INPUT } else { soav::cli::EXIT_OK });
        }
    };
    std::process::exit(soav::cli::run(cli));
}
