fn main() {
    std::process::exit(sudoku_ryser::cli::run(std::env::args_os()));
}
