use std::process::ExitCode;

fn main() -> ExitCode {
    if let Ok(raw) = std::env::var("DMRG_NUM_THREADS") {
        match raw.trim().parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    eprintln!("error: thread pool: {e}");
                    return ExitCode::from(mpskit_cli::EXIT_RUNTIME as u8);
                }
            }
            _ => {
                eprintln!("error: DMRG_NUM_THREADS must be a positive integer, got \"{raw}\"");
                return ExitCode::from(mpskit_cli::EXIT_CONFIG as u8);
            }
        }
    }
    ExitCode::from(mpskit_cli::main_with(std::env::args_os()) as u8)
}
