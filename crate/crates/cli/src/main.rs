fn main() {
    if let Err(e) = qdeim_pinn_cli::run(std::env::args_os()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
