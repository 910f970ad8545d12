use std::io::{self, Write};
use std::process::ExitCode;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let stdin = io::stdin();
    let stdout = io::stdout();
    let mut out = io::BufWriter::new(stdout.lock());
    let code = procrustes_bdi::cli::run(std::env::args_os(), &mut stdin.lock(), &mut out);
    let _ = out.flush();
    ExitCode::from(code)
}
