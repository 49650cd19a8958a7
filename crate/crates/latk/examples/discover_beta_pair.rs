//! Search for a pair of coefficient modules on the same graded carrier that
//! are isomorphic as graded groups but not through any map commuting with
//! every rho/kappa/beta, then print both as `.lkt` blocks. The shipped
//! `corpus/betapair.lkt` is the output of this run.

use latk::abelian::{direct_sum, FgAbGroup};
use latk::lambda::{
    beta_variant_search, graded_iso_search, lambda_iso_search, BetaVariantOptions, CoefficientSet,
};
use latk::Budget;

fn main() {
    // escalation ladder: carriers of growing order, default starting point first
    let z = |d: u64| FgAbGroup::cyclic(d);
    let pair = |a: u64, b: u64| direct_sum(&z(a), &z(b)).group;
    let ladder: Vec<(FgAbGroup, FgAbGroup, Vec<u64>)> = vec![
        (pair(2, 4), z(2), vec![2, 4]),
        (z(4), z(2), vec![2, 4]),
        (pair(2, 4), z(4), vec![2, 4]),
        (pair(4, 4), z(2), vec![2, 4]),
        (pair(2, 8), z(2), vec![2, 4, 8]),
    ];
    for (g0, g1, moduli) in ladder {
        let coeffs = CoefficientSet::new(moduli.clone()).unwrap();
        eprintln!(
            "trying carrier K0 = {}, K1 = {}, moduli {:?}",
            g0.describe(),
            g1.describe(),
            moduli
        );
        let found = beta_variant_search(
            &g0,
            &g1,
            &coeffs,
            &BetaVariantOptions {
                budget: Budget { max_nodes: 500_000 },
                stop_at: Some(2),
                thorough: false,
            },
        );
        match found {
            Err(e) => eprintln!("  search stopped: {e}"),
            Ok(res) => {
                eprintln!(
                    "  {} classes after {} candidates",
                    res.representatives.len(),
                    res.candidates_seen
                );
                if res.representatives.len() >= 2 {
                    let a = &res.representatives[0];
                    let b = &res.representatives[1];
                    assert!(graded_iso_search(a, b).is_found());
                    assert!(lambda_iso_search(a, b, &Budget::default(), 2).is_absent());
                    println!("# A graded-isomorphic pair of coefficient modules that no");
                    println!("# isomorphism commuting with all rho/kappa/beta can identify.");
                    println!("# Found by examples/discover_beta_pair.rs.");
                    println!();
                    print!("{}", latk::cli::lambda_module_to_lkt("BetaPairA", a));
                    println!();
                    print!("{}", latk::cli::lambda_module_to_lkt("BetaPairB", b));
                    println!();
                    println!("check BetaPairA;");
                    println!("check BetaPairB;");
                    println!("compare BetaPairA BetaPairB mode graded;");
                    println!("compare BetaPairA BetaPairB mode lambda;");
                    return;
                }
            }
        }
    }
    eprintln!("no pair found on the ladder");
    std::process::exit(1);
}
