//! From the hybrid spin-OAM state to the fan pattern seen behind a polarizer.

use oam_magnetometry::oam_state::{
    apply_birefringence, initial_state, phase_shift, project_horizontal, BirefringenceSetting,
};

fn main() -> oam_magnetometry::Result<()> {
    let l = 2;
    let state = initial_state(l)?;
    println!("prepared |L,{l}> + |R,{}>, norm {:.3}", -l, state.norm_sqr());

    // A 5 cm medium with a tiny index difference between the circular components.
    let setting = BirefringenceSetting::at_795nm(1.0 + 1e-8, 1.0, 5.0)?;
    let dphi = phase_shift(&setting);
    let pattern = project_horizontal(&apply_birefringence(&state, dphi));
    println!(
        "delta phi = {dphi:.6e} rad -> pattern rotation {:.6e} deg",
        pattern.theta.to_degrees()
    );

    let lines: Vec<String> = pattern
        .dark_lines()
        .iter()
        .map(|a| format!("{:.4}", a.to_degrees()))
        .collect();
    println!("{} dark lines at [{}] deg", lines.len(), lines.join(", "));
    Ok(())
}
