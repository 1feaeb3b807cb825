//! Regenerates the JSON fixtures under `crates/core/fixtures/`.

use std::path::Path;

use h2h::fixtures::{chain3, fig2_model, mmmt_models, synthetic_system, toy_pair, toy_system};

fn main() -> std::io::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    std::fs::create_dir_all(dir.join("models"))?;
    let mut models = vec![toy_pair(), chain3(), fig2_model()];
    models.extend(mmmt_models());
    for g in models {
        std::fs::write(dir.join("models").join(format!("{}.json", g.name())), g.to_json())?;
    }
    std::fs::write(dir.join("synthetic12.json"), synthetic_system().to_json())?;
    std::fs::write(dir.join("toy.json"), toy_system().to_json())?;
    println!("fixtures written to {}", dir.display());
    Ok(())
}
