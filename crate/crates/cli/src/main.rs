use clap::Parser;
use pairclust_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(manifest) => {
            for a in &manifest.artifacts {
                println!("{}/{}  {}", manifest.out_dir, a.path, &a.sha256[..16]);
            }
        }
        Err(e) => {
            eprintln!("pairclust: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
