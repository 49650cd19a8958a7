//! Assemble unital extensions with trivial boundary shape over stable ideals
//! and verify that the canonical inclusion/quotient pair is exact.

use latk::abelian::FgAbGroup;
use latk::catalog::{
    build_block, build_extension, canonical_morphisms, direct_sum, unitize, BlockKind, BlockSpec,
    ExtensionClass, ExtensionSpec, LatticeShape,
};
use latk::lambda::CoefficientSet;
use latk::latticed::check_v_exactness;
use num_bigint::BigInt;

fn main() {
    let coeffs = CoefficientSet::default_set();
    let compacts = build_block(&BlockSpec {
        kind: BlockKind::CompactsLike,
        coeffs: coeffs.clone(),
    })
    .unwrap();
    let o4 = build_block(&BlockSpec {
        kind: BlockKind::Kirchberg {
            k0: FgAbGroup::cyclic(3),
            unit: vec![BigInt::from(1)],
            k1: FgAbGroup::zero(),
        },
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
    let zero = build_block(&BlockSpec {
        kind: BlockKind::Zero,
        coeffs: coeffs.clone(),
    })
    .unwrap();
    let cmodel = unitize(&zero).unwrap();

    let cases = vec![
        ("compacts by the scalars", compacts.clone(), cmodel.clone()),
        ("compacts by the Z/3 block", compacts.clone(), o4),
        (
            "compacts + O2 x K by the scalars",
            direct_sum(&compacts, &o2k).unwrap(),
            cmodel,
        ),
    ];
    for (name, b, a) in cases {
        let e = build_extension(&ExtensionSpec {
            b,
            a,
            class: ExtensionClass::Split,
            top_layer_override: None,
        })
        .unwrap();
        let rep = e.validate();
        let (iota, pi) = canonical_morphisms(&e).unwrap();
        let exact = check_v_exactness(&iota, &pi).unwrap();
        println!(
            "{name:<36} {} ideals  valid: {}  exact: {exact}",
            e.lattice.size(),
            rep.passed()
        );
        println!("  presets fired: {}", e.presets.join(", "));
    }
}
