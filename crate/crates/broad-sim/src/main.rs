fn main() {
    std::process::exit(broad_sim::cli::main_entry());
}
