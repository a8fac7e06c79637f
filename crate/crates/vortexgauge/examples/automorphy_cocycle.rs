//! Evaluates the automorphy factor of a degree-1 bundle on genus 2 and checks
//! the cocycle relation on generator pairs.

use vortexgauge::automorphy::{AutomorphyFactor, Character};
use vortexgauge::hyperbolic::{build_fuchsian_group, DeckElement, Letter};
use vortexgauge::{Complex64, Result};

fn main() -> Result<()> {
    let group = build_fuchsian_group(2)?;
    let f = AutomorphyFactor::hyperbolic(1, 2, Character::from_turns(&[0.1, 0.25, -0.3, 0.05]))?;
    let z = Complex64::new(0.1, 0.9);
    let mut worst: f64 = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            let g1 = DeckElement::Fuchsian(group.letter_element(Letter { generator: a, inverse: false }));
            let g2 = DeckElement::Fuchsian(group.letter_element(Letter { generator: b, inverse: true }));
            worst = worst.max(f.check_cocycle(&g1, &g2, z));
        }
    }
    let g = DeckElement::Fuchsian(group.generator_element(0));
    println!("rho(a1, z) = {:.6}", f.evaluate(&g, z));
    println!("worst cocycle residual {worst:.2e}");
    Ok(())
}
