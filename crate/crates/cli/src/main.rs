use clap::Parser;

/// Rust ignores SIGPIPE by default, turning `wdfs ... | head` into a panic
/// on the first print after the reader exits; restore the Unix default.
#[cfg(unix)]
fn reset_sigpipe() {
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
}

#[cfg(not(unix))]
fn reset_sigpipe() {}

fn main() {
    reset_sigpipe();
    let cli = wdfs_cli::Cli::parse();
    if let Err(f) = wdfs_cli::run(cli) {
        eprintln!("error: {}", f.message);
        std::process::exit(f.code);
    }
}
