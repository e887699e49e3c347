//! Acceptance suite: one line per criterion, non-zero exit on any failure.

fn main() {
    eprintln!("acceptance suite not implemented yet");
    std::process::exit(1);
}
