fn main() {
    std::process::exit(statelearn_cli::dispatch(std::env::args_os()));
}
