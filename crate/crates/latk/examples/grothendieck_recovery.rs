//! Recover the graded module at the top ideal, its positive cone, and the
//! scale image, and cross-check the universal group against the brute-force
//! table oracle where the model is finite.

use latk::abelian::FgAbGroup;
use latk::catalog::{build_block, unitize, BlockKind, BlockSpec};
use latk::lambda::{CoefficientSet, Slot};
use latk::monoid;
use num_bigint::BigInt;

fn main() {
    let coeffs = CoefficientSet::default_set();
    let o4 = build_block(&BlockSpec {
        kind: BlockKind::Kirchberg {
            k0: FgAbGroup::cyclic(3),
            unit: vec![BigInt::from(1)],
            k1: FgAbGroup::zero(),
        },
        coeffs: coeffs.clone(),
    })
    .unwrap();
    let rec = o4.grothendieck_recover();
    println!("purely infinite model with K0 = Z/3:");
    println!("  recovered top fiber: {:?}", rec.top_fiber);
    println!("  scale image: {}", rec.scale_image);
    let (mono, _) = o4.finitize_v(None).unwrap();
    let (gr, _) = monoid::grothendieck_finite(&mono);
    println!(
        "  oracle universal group: {}   (matches: {})",
        gr.describe(),
        &gr == rec.top_fiber.group(Slot::G(0))
    );

    let compacts = build_block(&BlockSpec {
        kind: BlockKind::CompactsLike,
        coeffs: coeffs.clone(),
    })
    .unwrap();
    let rec = compacts.grothendieck_recover();
    println!("\ncompacts model:");
    println!(
        "  recovered K0: {}",
        rec.top_fiber.group(Slot::G(0)).describe()
    );
    for part in &rec.cone {
        println!("  cone part over {}: {:?}", part.ideal, part.layer_image);
    }
    println!("  scale image: {}", rec.scale_image);

    let kt = unitize(&compacts).unwrap();
    let rec = kt.grothendieck_recover();
    println!("\nunitized compacts:");
    println!(
        "  recovered K0: {}",
        rec.top_fiber.group(Slot::G(0)).describe()
    );
    println!("  scale image: {}", rec.scale_image);
}
