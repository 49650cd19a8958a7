//! The distinguishing comparisons: models whose graded groups or even whole
//! six-term data agree can still differ as latticed values.

use latk::abelian::FgAbGroup;
use latk::catalog::{build_block, direct_sum, stabilize, unitize, BlockKind, BlockSpec, LatticeShape};
use latk::lambda::CoefficientSet;
use latk::latticed::{iso_search_latticed, IsoMode};
use latk::Budget;
use num_bigint::BigInt;

fn main() {
    let coeffs = CoefficientSet::default_set();
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

    // the two unitizations that total six-term data cannot tell apart
    let ktilde = unitize(&compacts).unwrap();
    let five = unitize(&direct_sum(&compacts, &o2k).unwrap()).unwrap();
    let r = iso_search_latticed(&ktilde, &five, IsoMode::Latticed, &Budget::default(), 3);
    println!("unitized compacts  vs  unitized (compacts + O2 x K):");
    println!("  verdict: {}", verdict(&r.outcome));
    for n in &r.notes {
        println!("  note: {n}");
    }

    // two purely infinite stable models with the same two-point lattice
    let oinfk = stabilize(
        &build_block(&BlockSpec {
            kind: BlockKind::Kirchberg {
                k0: FgAbGroup::free(1),
                unit: vec![BigInt::from(1)],
                k1: FgAbGroup::zero(),
            },
            coeffs: coeffs.clone(),
        })
        .unwrap(),
    );
    let r = iso_search_latticed(&o2k, &oinfk, IsoMode::Latticed, &Budget::default(), 3);
    println!("\nO2 x K  vs  Oinf x K:");
    println!("  verdict: {}", verdict(&r.outcome));

    // sanity: a model always matches itself
    let r = iso_search_latticed(&ktilde, &ktilde, IsoMode::Latticed, &Budget::default(), 3);
    println!("\nunitized compacts vs itself: {}", verdict(&r.outcome));
}

fn verdict<T>(o: &latk::SearchOutcome<T>) -> &'static str {
    match o {
        latk::SearchOutcome::Found(_) => "equal (isomorphism found)",
        latk::SearchOutcome::Absent => "distinguishable",
        latk::SearchOutcome::BudgetExceeded(_) => "budget exceeded",
    }
}
