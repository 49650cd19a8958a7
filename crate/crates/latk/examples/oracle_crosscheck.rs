//! Finitize a latticed value into a plain table monoid and let the generic
//! oracle re-derive its structure: ideal count, universal group, pre-order,
//! cancellation and infiniteness.

use latk::abelian::FgAbGroup;
use latk::catalog::{build_block, unitize, BlockKind, BlockSpec};
use latk::lambda::CoefficientSet;
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
    let (mono, elems) = o4.finitize_v(None).unwrap();
    println!("finitized purely infinite model: {} elements", mono.size());
    for (k, (ideal, v)) in elems.iter().enumerate() {
        println!("  {k}: ideal {} class {:?}", o4.lattice.name(*ideal), v);
    }
    let p = monoid::algebraic_preorder(&mono);
    let ideals = monoid::ideals_of(&mono, &p).unwrap();
    println!("  oracle ideals: {} (lattice has {})", ideals.len(), o4.lattice.size());
    println!("  oracle cancellation: {}", monoid::has_cancellation(&mono));
    println!(
        "  oracle infinite element: {:?}",
        monoid::has_infinite_element(&mono)
    );
    let (gr, _) = monoid::grothendieck_finite(&mono);
    println!("  oracle universal group: {}", gr.describe());

    // a model with a free direction needs a cap; the reduction embeds every
    // class with coordinates below the cap
    let compacts = build_block(&BlockSpec {
        kind: BlockKind::CompactsLike,
        coeffs,
    })
    .unwrap();
    let kt = unitize(&compacts).unwrap();
    let (mono, _) = kt.finitize_v(Some(3)).unwrap();
    let p = monoid::algebraic_preorder(&mono);
    let ideals = monoid::ideals_of(&mono, &p).unwrap();
    println!("\nunitized compacts, capped at 3: {} elements", mono.size());
    println!("  oracle ideals: {} (lattice has {})", ideals.len(), kt.lattice.size());
}
