fn main() {
    std::process::exit(ctmc_localtime::cli::main_entry());
}
