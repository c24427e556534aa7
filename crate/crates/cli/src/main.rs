fn main() {
    std::process::exit(afvol_cli::run(std::env::args_os()));
}
