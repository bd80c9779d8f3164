//! Prints the default configuration as TOML and parses an override file.
//!
//! cargo run --example config -- [CONFIG.toml]

use edge_alloc::config::CliConfig;

fn main() -> edge_alloc::Result<()> {
    match std::env::args().nth(1) {
        Some(path) => {
            let cfg = CliConfig::load(path.as_ref())?;
            println!("{path} is valid; effective configuration:\n");
            print!("{}", cfg.to_toml()?);
        }
        None => {
            let cfg = CliConfig::parse("schema_version = 1\nscheme = \"mvs\"\n[scenario]\nnodes = 50\n")?;
            println!("# nodes = {}, scheme = {}, training rows = {}\n", cfg.scenario.nodes, cfg.scheme, cfg.pipeline.training_size);
            print!("{}", CliConfig::default().to_toml()?);
        }
    }
    Ok(())
}
