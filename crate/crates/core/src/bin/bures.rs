use std::io::Write;

fn main() {
    let outcome = bures_wasserstein::cli::run(std::env::args_os(), &mut std::io::stdin().lock());
    print!("{}", outcome.stdout);
    eprint!("{}", outcome.stderr);
    std::io::stdout().flush().ok();
    std::process::exit(outcome.code);
}
