use clap::Parser;

fn main() {
    let cli = bitension_cli::Cli::parse();
    let mut out = std::io::stdout().lock();
    let code = match bitension_cli::run(cli, &mut out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
