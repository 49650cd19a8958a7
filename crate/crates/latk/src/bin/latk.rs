use std::process::ExitCode;

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (output, code) = latk::cli::run(&args);
    println!("{output}");
    ExitCode::from(code.clamp(0, 255) as u8)
}
