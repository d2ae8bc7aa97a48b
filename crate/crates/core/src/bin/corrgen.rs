use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

fn main() {
    corrgen::cli::init_logging();
    let interrupt = Arc::new(AtomicBool::new(false));
    let flag = Arc::clone(&interrupt);
    if let Err(e) = ctrlc::set_handler(move || flag.store(true, Ordering::SeqCst)) {
        log::warn!("Ctrl-C handler not installed: {e}");
    }
    std::process::exit(corrgen::cli::run(std::env::args_os(), &interrupt));
}
