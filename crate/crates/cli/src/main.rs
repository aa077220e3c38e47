use env_logger::Env;

fn main() {
    env_logger::Builder::from_env(Env::new().filter_or("BSF_LOG", "warn")).init();
    std::process::exit(bezier_simplex_cli::run(std::env::args_os()));
}
