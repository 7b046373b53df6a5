use std::process::ExitCode;

fn main() -> ExitCode {
    let status = monotrack::cli::run(
        std::env::args_os(),
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    );
    ExitCode::from(status.code() as u8)
}
