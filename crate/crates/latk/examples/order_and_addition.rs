//! Element arithmetic in the invariant: tagged classes add through the join
//! of their supports, and the pre-order can identify distinct classes in both
//! directions without them being equal.

use latk::abelian::FgAbGroup;
use latk::catalog::{build_block, unitize, BlockKind, BlockSpec};
use latk::lambda::CoefficientSet;
use latk::latticed::{Aux, VElem};
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

    let top = o4.lattice.top();
    let class = |v: i64| VElem {
        ideal: top,
        v: vec![BigInt::from(v)],
        aux: Aux::zero(o4.fiber(top)),
    };
    let one = class(1);
    let two = class(2);
    let sum = o4.add_v(&one, &two).unwrap();
    println!("purely infinite model with K0 = Z/3:");
    println!("  [1] + [2] = class {:?} over the top ideal (not the neutral element)", sum.v);
    println!("  [1] <= [2]: {}", o4.leq_v(&one, &two));
    println!("  [2] <= [1]: {}", o4.leq_v(&two, &one));
    println!("  [1] == [2]: {}", o4.elem_eq(&one, &two));
    println!("  -> a pre-ordered monoid that is not an ordered monoid");

    let compacts = build_block(&BlockSpec {
        kind: BlockKind::CompactsLike,
        coeffs: coeffs.clone(),
    })
    .unwrap();
    let kt = unitize(&compacts).unwrap();
    let t = kt.lattice.top();
    let a = VElem {
        ideal: 1,
        v: vec![BigInt::from(1)],
        aux: Aux::zero(kt.fiber(1)),
    };
    let b = VElem {
        ideal: t,
        v: vec![BigInt::from(0), BigInt::from(1)],
        aux: Aux::zero(kt.fiber(t)),
    };
    println!("\nunitized compacts:");
    let s = kt.add_v(&a, &b).unwrap();
    println!("  rank-1 compact class + unit class = {:?} over the top", s.v);
    println!("  compact class <= unit class: {}", kt.leq_v(&a, &b));
    println!("  unit class <= compact class: {}", kt.leq_v(&b, &a));
}
