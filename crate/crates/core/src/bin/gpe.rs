fn main() -> std::process::ExitCode {
    relaxed_gpe::cli::main()
}
