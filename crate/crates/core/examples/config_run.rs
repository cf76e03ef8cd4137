//! Run an experiment from a TOML config, as the `billiard` binary does.

use billiard_lab::cli::{parse_config, run, Command};

fn main() {
    let text = include_str!("configs/stadium_corr.toml");
    let mut config = match parse_config(text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(2);
        }
    };
    config.output.dir = std::env::temp_dir().join("billiard-example");
    let manifest = run(Command::Corr, &config, 0).expect("run failed");
    for f in &manifest.files {
        println!("{} ({} bytes, sha256 {})", config.output.dir.join(&f.name).display(), f.bytes, f.sha256);
    }
}
