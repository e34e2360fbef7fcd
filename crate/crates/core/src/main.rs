fn main() {
    std::process::exit(pose_vit::cli::dispatch(std::env::args_os()));
}
