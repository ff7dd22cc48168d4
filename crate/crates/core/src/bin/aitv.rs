fn main() -> std::process::ExitCode {
    aitv_denoise::cli::main()
}
