fn main() {
    std::process::exit(fbrewire::cli::run(std::env::args_os()));
}
