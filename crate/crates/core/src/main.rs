fn main() -> std::process::ExitCode {
    bbmlab::cli::main()
}
