//! Build the catalog models and run the structural validator on each.

use latk::abelian::FgAbGroup;
use latk::catalog::{build_block, direct_sum, unitize, BlockKind, BlockSpec, LatticeShape};
use latk::lambda::CoefficientSet;
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

    let compacts = build_block(&BlockSpec {
        kind: BlockKind::CompactsLike,
        coeffs: coeffs.clone(),
    })
    .unwrap();

    let o2k = build_block(&BlockSpec {
        kind: BlockKind::O2Stable {
            shape: LatticeShape::Point,
        },
        coeffs: coeffs.clone(),
    })
    .unwrap();

    let ktilde = unitize(&compacts).unwrap();
    let five = unitize(&direct_sum(&compacts, &o2k).unwrap()).unwrap();

    for (name, model) in [
        ("O4", &o4),
        ("compacts", &compacts),
        ("O2 x K", &o2k),
        ("unitized compacts", &ktilde),
        ("unitized compacts + O2 x K", &five),
    ] {
        let rep = model.validate();
        println!(
            "{name:<28} {} ideals   valid: {}",
            model.lattice.size(),
            rep.passed()
        );
        for item in rep.items.iter().take(3) {
            println!("    {} -> {}", item.name, if item.passed { "ok" } else { "FAIL" });
        }
        println!("    ... {} checks total", rep.items.len());
    }
}
