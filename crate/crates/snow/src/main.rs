fn main() {
    snow::cli::run();
}
