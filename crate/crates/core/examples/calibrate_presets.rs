//! Regenerates the shipped synthetic presets under `presets/`.
//!
//! ```text
//! cargo run --release -p fairbench-core --example calibrate_presets
//! ```

use std::path::Path;

use fairbench::synthgen::{calibrate, Preset};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("presets");
    for preset in Preset::ALL {
        let (prevalence, spd) = preset.targets();
        let spec = calibrate(&preset.base_spec(), prevalence, spd, 0.005)?;
        let file = dir.join(format!("{}.toml", preset.name().to_lowercase()));
        let header = format!(
            "# {} preset: calibrated to prevalence {prevalence} and target SPD {spd}.\n\
             # Regenerate with `cargo run --release -p fairbench-core --example calibrate_presets`.\n",
            preset.name()
        );
        std::fs::write(&file, header + &spec.to_toml()?)?;
        println!("{} -> {}", preset.name(), file.display());
    }
    Ok(())
}
