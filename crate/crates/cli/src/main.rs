fn main() {
    std::process::exit(survey_clv_cli::main_with_args(std::env::args_os()));
}
