use std::io::{self, Write};

fn main() {
    let seed = std::env::var(nonmono_cli::SEED_VAR).ok();
    let (mut out, mut err) = (io::stdout().lock(), io::stderr().lock());
    let code = nonmono_cli::main_with(std::env::args_os(), seed.as_deref(), &mut out, &mut err);
    let _ = out.flush();
    std::process::exit(code);
}
