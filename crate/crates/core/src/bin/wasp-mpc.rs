fn main() {
    std::process::exit(wasp_mpc::cli::run(std::env::args_os()));
}
