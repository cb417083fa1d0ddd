//! Render patterns for a few fields, with and without noise, as PGM files.
//!
//! Writes into the directory given as the first argument (default `out/`).

use std::path::PathBuf;

use oam_magnetometry::nmor_model::{rotation_angle, MediumParams};
use oam_magnetometry::oam_state::ScalarPattern;
use oam_magnetometry::pattern_image::{
    add_noise, render_with, write_image, BitDepth, ImageGeometry, NoiseSpec, Sampling,
};

fn main() -> oam_magnetometry::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "out".into()));
    std::fs::create_dir_all(&dir).map_err(|e| oam_magnetometry::Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    let p = MediumParams::default();
    let g = ImageGeometry::default();

    for b in [0.0, 0.2, 0.5, 1.4] {
        let theta = rotation_angle(b, &p);
        let img = render_with(&ScalarPattern::new(p.l, theta)?, &g, Sampling::Supersample2x2)?
            .with_bit_depth(BitDepth::Sixteen);
        let clean = dir.join(format!("pattern_{b:.1}G.pgm"));
        write_image(&img, &clean)?;
        let noisy = add_noise(&img, &NoiseSpec::poisson(500.0, 7))?;
        write_image(&noisy, dir.join(format!("pattern_{b:.1}G_poisson.pgm")))?;
        println!(
            "B = {b:.1} G, theta = {:8.4} deg -> {}",
            theta.to_degrees(),
            clean.display()
        );
    }
    Ok(())
}
