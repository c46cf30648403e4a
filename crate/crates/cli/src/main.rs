fn main() {
    std::process::exit(hyperdolphin_cli::cli_main(std::env::args_os()));
}
