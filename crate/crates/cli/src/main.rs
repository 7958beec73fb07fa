fn main() { std::process::exit(csi2dig_cli::dispatch(std::env::args().collect())); }
