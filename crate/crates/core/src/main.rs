use std::process::ExitCode;

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let status = nibs_kg::cli::run(&args, &mut std::io::stdout(), &mut std::io::stderr());
    ExitCode::from(status.code())
}
