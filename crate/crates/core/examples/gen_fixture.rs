//! Writes the bundled scenes in the dataset layout:
//! `<out>/<id>/src_color/<id>.png` and `<out>/<id>/human_seg/<id>_<n>.png`.
//!
//! cargo run -p hedseg-core --example gen_fixture -- crates/core/tests/fixtures/scenes

use std::path::PathBuf;

fn main() -> hedseg::Result<()> {
    let out: PathBuf = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "crates/core/tests/fixtures/scenes".into())
        .into();
    for scene in hedseg::synthetic::fixture_scenes() {
        let dir = out.join(&scene.id);
        for sub in ["src_color", "human_seg"] {
            let d = dir.join(sub);
            std::fs::create_dir_all(&d).map_err(|e| hedseg::Error::io(&d, e))?;
        }
        scene
            .image
            .save_png(&dir.join("src_color").join(format!("{}.png", scene.id)))?;
        for (i, gt) in scene.gts.iter().enumerate() {
            gt.save_png(&dir.join("human_seg").join(format!("{}_{}.png", scene.id, i + 1)))?;
        }
        println!("{}", dir.display());
    }
    Ok(())
}
