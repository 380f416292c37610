//! Binary entry point; all logic lives in the library's cli module.

fn main() {
    std::process::exit(gfm_lab::cli::main_entry());
}
