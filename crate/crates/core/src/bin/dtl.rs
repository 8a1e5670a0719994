use std::io::Write;

fn main() {
    let outcome = dtl::cli::run_args(std::env::args_os());
    let mut stdout = std::io::stdout().lock();
    let mut text = outcome.stdout;
    if !text.is_empty() && !text.ends_with('\n') {
        text.push('\n');
    }
    // A closed pipe on stdout is not an error for a report writer.
    let _ = stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush());
    eprint!("{}", outcome.stderr);
    std::process::exit(outcome.code);
}
