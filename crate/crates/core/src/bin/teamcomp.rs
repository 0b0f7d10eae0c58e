use std::panic;

fn main() {
    let code = panic::catch_unwind(|| teamcomp::cli::run(std::env::args_os()))
        .unwrap_or(teamcomp::cli::EXIT_INTERNAL);
    std::process::exit(code);
}
