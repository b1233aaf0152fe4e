fn main() {
    std::process::exit(texsem_cli::run_command(std::env::args_os()));
}
