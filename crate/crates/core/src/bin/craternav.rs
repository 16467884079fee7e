use std::io::{stderr, stdout};

fn main() {
    let code = craternav::cli::main_with_args(std::env::args_os(), &mut stdout().lock(), &mut stderr().lock());
    std::process::exit(code);
}
