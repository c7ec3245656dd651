fn main() {
    std::process::exit(muskat_cli::run_command(std::env::args_os()));
}
