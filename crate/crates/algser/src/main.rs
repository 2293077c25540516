use std::io::Write;

fn main() {
    let (code, out) = algser::cli::run_args(std::env::args_os());
    let mut stream: Box<dyn Write> = if code == algser::EXIT_ERROR { Box::new(std::io::stderr()) } else { Box::new(std::io::stdout()) };
    let _ = stream.write_all(out.as_bytes());
    std::process::exit(code);
}
