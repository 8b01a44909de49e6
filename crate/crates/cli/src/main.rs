fn main() -> std::process::ExitCode {
    viscowave_cli::cli::main()
}
