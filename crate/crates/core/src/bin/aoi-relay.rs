fn main() -> std::process::ExitCode {
    aoi_relay::cli::main()
}
