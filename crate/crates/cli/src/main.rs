use std::io::Write;
use std::process::ExitCode;

use fricke_cli::exit::Code;

fn main() -> ExitCode {
    match fricke_cli::execute(std::env::args_os()) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(out.body.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::from(Code::Resource.as_i32() as u8);
            }
            ExitCode::from(out.code.as_i32() as u8)
        }
        Err(e) => {
            if e.code == Code::Definite {
                print!("{e}");
            } else {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.code.as_i32() as u8)
        }
    }
}
