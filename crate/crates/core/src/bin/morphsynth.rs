fn main() {
    std::process::exit(morphsynth::cli::main());
}
