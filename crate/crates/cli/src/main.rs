fn main() {
    std::process::exit(dislox::io::run_command(std::env::args_os()));
}
