//! Acceptance suite: one test per criterion, each printing a single
//! PASS/FAIL line. Every tolerance is exact; the variant-search criterion
//! carries its stated 60-second wall-clock bound.

use latk::abelian::{direct_sum, smith_normal_form, FgAbGroup, Int, IntMat};
use latk::catalog::{
    build_block, build_extension, canonical_morphisms, direct_sum as sum_latticed, unitize,
    BlockKind, BlockSpec, ExtensionClass, ExtensionSpec, LatticeShape,
};
use latk::cli::{self, BuiltValue, CliOptions};
use latk::lambda::{
    beta_variant_search, graded_iso_search, lambda_iso_search, BetaVariantOptions, CoefficientSet,
    LambdaModule, Slot,
};
use latk::latticed::{check_v_exactness, iso_search_latticed, Aux, IsoMode, LatticedKModule, Scale, VElem};
use latk::monoid;
use latk::{Budget, Rng};
use num_traits::{One, Zero};
use std::time::Instant;

fn int(v: i64) -> Int {
    Int::from(v)
}

fn coeffs() -> CoefficientSet {
    CoefficientSet::default_set()
}

fn pass(n: usize, what: &str) {
    println!("ACCEPTANCE {n}: PASS - {what}");
}

// ───────────────────────── corpus model constructors ─────────────────────────

fn o4() -> LatticedKModule {
    build_block(&BlockSpec {
        kind: BlockKind::Kirchberg {
            k0: FgAbGroup::cyclic(3),
            unit: vec![int(1)],
            k1: FgAbGroup::zero(),
        },
        coeffs: coeffs(),
    })
    .unwrap()
}

fn compacts() -> LatticedKModule {
    build_block(&BlockSpec {
        kind: BlockKind::CompactsLike,
        coeffs: coeffs(),
    })
    .unwrap()
}

fn o2k() -> LatticedKModule {
    build_block(&BlockSpec {
        kind: BlockKind::O2Stable {
            shape: LatticeShape::Point,
        },
        coeffs: coeffs(),
    })
    .unwrap()
}

fn cmodel() -> LatticedKModule {
    let z = build_block(&BlockSpec {
        kind: BlockKind::Zero,
        coeffs: coeffs(),
    })
    .unwrap();
    unitize(&z).unwrap()
}

fn ktilde() -> LatticedKModule {
    unitize(&compacts()).unwrap()
}

fn kplus_o2_tilde() -> LatticedKModule {
    unitize(&sum_latticed(&compacts(), &o2k()).unwrap()).unwrap()
}

fn e1() -> LatticedKModule {
    build_extension(&ExtensionSpec {
        b: compacts(),
        a: o4(),
        class: ExtensionClass::Split,
        top_layer_override: None,
    })
    .unwrap()
}

fn e2() -> LatticedKModule {
    build_extension(&ExtensionSpec {
        b: sum_latticed(&compacts(), &o2k()).unwrap(),
        a: cmodel(),
        class: ExtensionClass::Split,
        top_layer_override: None,
    })
    .unwrap()
}

// ───────────────────────── oracle helpers (independent routes) ─────────────────────────

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Invariant factors straight from the gcd-of-all-k×k-minors characterization.
fn minors_invariant_factors(m: &IntMat) -> Vec<Int> {
    let n = m.rows().min(m.cols());
    let mut prev = Int::one();
    let mut out = Vec::new();
    for k in 1..=n {
        let mut g = Int::zero();
        for rs in combinations(m.rows(), k) {
            for cs in combinations(m.cols(), k) {
                let mut sub = IntMat::zeros(k, k);
                for (a, &i) in rs.iter().enumerate() {
                    for (b, &j) in cs.iter().enumerate() {
                        sub.set(a, b, m.at(i, j).clone());
                    }
                }
                g = num_integer::gcd(g, sub.det());
            }
        }
        if g.is_zero() {
            break;
        }
        out.push(&g / &prev);
        prev = g;
    }
    out
}

#[test]
fn acceptance_01_snf_soundness() {
    let mut rng = Rng::new(0x5eed_0001);
    for trial in 0..500 {
        let rows = 1 + (rng.below(6) as usize);
        let cols = 1 + (rng.below(6) as usize);
        let mut m = IntMat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, int(rng.int_in(-9, 9)));
            }
        }
        let s = smith_normal_form(&m);
        assert_eq!(s.u.mul(&m).mul(&s.v), s.s, "UMV = S failed at trial {trial}");
        assert!(s.u.is_unimodular() && s.v.is_unimodular(), "trial {trial}");
        let fac = s.invariant_factors();
        for w in fac.windows(2) {
            assert!((&w[1] % &w[0]).is_zero(), "divisibility chain, trial {trial}");
        }
        assert!(fac.iter().all(|d| *d > Int::zero()));
        assert_eq!(fac, minors_invariant_factors(&m), "minors oracle, trial {trial}");
    }
    pass(1, "500 random matrices: U*M*V = S, transforms unimodular, factors match the minors oracle");
}

fn random_group(rng: &mut Rng) -> FgAbGroup {
    let rank = rng.below(3) as usize; // 0..=2
    // divisibility chain with product <= 64
    let mut torsion: Vec<Int> = Vec::new();
    let mut product = 1u64;
    let mut d = *[2u64, 2, 2, 3, 4, 5, 6].get(rng.below(7) as usize).unwrap();
    while rng.below(2) == 0 && product * d <= 64 {
        product *= d;
        torsion.push(int(d as i64));
        let mult = [1u64, 2, 3].into_iter().nth(rng.below(3) as usize).unwrap();
        d *= mult.max(1);
        if d < 2 {
            break;
        }
    }
    FgAbGroup::new(rank, torsion)
}

#[test]
fn acceptance_02_lambda_validation() {
    let mut rng = Rng::new(0x5eed_0002);
    let n = coeffs();
    for trial in 0..100 {
        let g0 = random_group(&mut rng);
        let g1 = random_group(&mut rng);
        let m = LambdaModule::standard(&g0, &g1, &n);
        let rep = m.validate();
        assert!(
            rep.passed(),
            "trial {trial} on ({}, {}): {:?}",
            g0.describe(),
            g1.describe(),
            rep.failures()
        );
    }
    pass(2, "100 random carriers: both six-term families exact on the standard module");
}

#[test]
fn acceptance_03_grothendieck_recovery() {
    let models: Vec<(&str, LatticedKModule, FgAbGroup)> = vec![
        ("O4", o4(), FgAbGroup::cyclic(3)),
        ("compacts", compacts(), FgAbGroup::free(1)),
        ("Ktilde", ktilde(), FgAbGroup::free(2)),
        ("KplusO2tilde", kplus_o2_tilde(), FgAbGroup::free(2)),
        (
            "E1",
            e1(),
            direct_sum(&FgAbGroup::free(1), &FgAbGroup::cyclic(3)).group,
        ),
        ("E2", e2(), FgAbGroup::free(2)),
    ];
    for (name, m, declared_k0) in &models {
        let rec = m.grothendieck_recover();
        assert_eq!(
            rec.top_fiber.group(Slot::G(0)),
            declared_k0,
            "{name}: recovered K0 differs from the declared top fiber"
        );
        assert_eq!(&m.fiber(m.lattice.top()).clone(), &rec.top_fiber, "{name}");
        // brute-force universal-group oracle where the model is finite
        if m.lattice.elements().all(|i| m.g0(i).is_finite()) {
            let (mono, _) = m.finitize_v(None).unwrap();
            let (gr, _) = monoid::grothendieck_finite(&mono);
            assert_eq!(&gr, rec.top_fiber.group(Slot::G(0)), "{name} oracle");
        }
    }
    pass(3, "recovery returns the declared top fiber on all six corpus models; O4 agrees with task brute-force oracle");
}

#[test]
fn acceptance_04_ideal_lattice_bijection() {
    let models: Vec<(&str, LatticedKModule)> = vec![
        ("O4", o4()),
        ("compacts", compacts()),
        ("Ktilde", ktilde()),
        ("KplusO2tilde", kplus_o2_tilde()),
        ("O2K", o2k()),
        ("E1", e1()),
        ("E2", e2()),
    ];
    for (name, m) in &models {
        assert_eq!(
            m.ideals_of_latticed().len(),
            m.lattice.size(),
            "{name}: restriction family must be in bijection with the lattice"
        );
    }
    // brute-force oracle on the finite models
    for (name, m, expected) in [("O4", o4(), 2usize), ("O2K", o2k(), 2)] {
        let (mono, _) = m.finitize_v(None).unwrap();
        let p = monoid::algebraic_preorder(&mono);
        let ids = monoid::ideals_of(&mono, &p).unwrap();
        assert_eq!(ids.len(), expected, "{name} oracle ideal count");
        assert_eq!(ids.len(), m.lattice.size(), "{name}");
    }
    pass(4, "ideal count equals lattice size on all corpus models; oracle agrees on O4 and the idempotent model");
}

#[test]
fn acceptance_05_preorder_pathology() {
    let x = o4();
    let top = x.lattice.top();
    let mk = |v: i64| VElem {
        ideal: top,
        v: vec![int(v)],
        aux: Aux::zero(x.fiber(top)),
    };
    let one = mk(1);
    let two = mk(2);
    assert!(x.leq_v(&one, &two));
    assert!(x.leq_v(&two, &one));
    assert!(!x.elem_eq(&one, &two));
    assert!(!x.detect_cancellation().cancellative);
    assert!(x.detect_infinite().infinite);
    let c = compacts();
    assert!(c.detect_cancellation().cancellative);
    pass(5, "mutually comparable distinct classes on the purely infinite model; compacts cancellative");
}

#[test]
fn acceptance_06_distinguishing_pairs() {
    // (a) three-ideal vs five-ideal unitizations
    let r = iso_search_latticed(&ktilde(), &kplus_o2_tilde(), IsoMode::Latticed, &Budget::default(), 3);
    assert!(r.outcome.is_absent(), "(a) must be distinguishable");
    assert!(r.notes.iter().any(|n| n.contains("lattice sizes 3 vs 5")));
    // (b) trivial-fiber vs integer-fiber purely infinite models
    let oinfk = latk::catalog::stabilize(
        &build_block(&BlockSpec {
            kind: BlockKind::Kirchberg {
                k0: FgAbGroup::free(1),
                unit: vec![int(1)],
                k1: FgAbGroup::zero(),
            },
            coeffs: coeffs(),
        })
        .unwrap(),
    );
    let r = iso_search_latticed(&o2k(), &oinfk, IsoMode::Latticed, &Budget::default(), 3);
    assert!(r.outcome.is_absent(), "(b) must be distinguishable");
    // (c) escalating variant search until a graded-iso / lambda-non-iso pair exists
    let started = Instant::now();
    let z = |d: u64| FgAbGroup::cyclic(d);
    let pair_g = |a: u64, b: u64| direct_sum(&z(a), &z(b)).group;
    let ladder: Vec<(FgAbGroup, FgAbGroup, Vec<u64>)> = vec![
        (pair_g(2, 4), z(2), vec![2, 4]),
        (z(4), z(2), vec![2, 4]),
        (pair_g(2, 4), z(4), vec![2, 4]),
        (pair_g(4, 4), z(2), vec![2, 4]),
        (pair_g(2, 8), z(2), vec![2, 4, 8]),
    ];
    let mut found = None;
    for (g0, g1, moduli) in ladder {
        assert!(g0.order().unwrap() <= int(32));
        let cs = CoefficientSet::new(moduli).unwrap();
        if let Ok(res) = beta_variant_search(
            &g0,
            &g1,
            &cs,
            &BetaVariantOptions {
                budget: Budget { max_nodes: 500_000 },
                stop_at: Some(2),
                thorough: false,
            },
        ) {
            if res.representatives.len() >= 2 {
                found = Some((res.representatives[0].clone(), res.representatives[1].clone()));
                break;
            }
        }
    }
    let (a, b) = found.expect("(c) escalation must find a pair");
    assert!(graded_iso_search(&a, &b).is_found());
    assert!(lambda_iso_search(&a, &b, &Budget::default(), 2).is_absent());
    assert!(a.validate().passed() && b.validate().passed());
    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs() < 60,
        "(c) took {elapsed:?}, over the 60s bound"
    );
    // the discovered pair ships as a corpus fixture with the same property
    let ctx = cli::evaluate(
        &cli::corpus_programs()
            .unwrap()
            .into_iter()
            .map(|(_, p)| p)
            .collect::<Vec<_>>(),
        &coeffs(),
    )
    .unwrap();
    match (&ctx.values["BetaPairA"], &ctx.values["BetaPairB"]) {
        (BuiltValue::Lambda(fa), BuiltValue::Lambda(fb)) => {
            assert!(fa.validate().passed() && fb.validate().passed());
            assert!(graded_iso_search(fa, fb).is_found());
            assert!(lambda_iso_search(fa, fb, &Budget::default(), 2).is_absent());
        }
        _ => panic!("corpus fixture missing"),
    }
    pass(
        6,
        &format!(
            "unitization pair and purely infinite pair distinguished; variant pair found and certified in {elapsed:?}"
        ),
    );
}

#[test]
fn acceptance_07_extension_exactness() {
    let kt_ext = build_extension(&ExtensionSpec {
        b: compacts(),
        a: cmodel(),
        class: ExtensionClass::Split,
        top_layer_override: None,
    })
    .unwrap();
    for (name, e) in [("E1", e1()), ("E2", e2()), ("KtildeViaExtension", kt_ext)] {
        let (iota, pi) = canonical_morphisms(&e).unwrap();
        assert!(
            check_v_exactness(&iota, &pi).unwrap(),
            "{name}: canonical pair must be exact"
        );
    }
    pass(7, "canonical inclusion/quotient pairs exact on every built corpus extension");
}

#[test]
fn acceptance_08_invariance_transport() {
    let models: Vec<LatticedKModule> = vec![o4(), compacts(), ktilde(), o2k(), kplus_o2_tilde()];
    let mut rng = Rng::new(0x5eed_0008);
    for copy in 0..20 {
        let m = &models[copy % models.len()];
        let relabeled = m.relabel(&mut rng);
        assert!(relabeled.validate().passed(), "copy {copy} must validate");
        let r = iso_search_latticed(m, &relabeled, IsoMode::Latticed, &Budget::default(), 3);
        assert!(
            r.outcome.is_found(),
            "copy {copy}: witness must be found ({:?})",
            r.notes
        );
        assert_eq!(
            m.detect_infinite().infinite,
            relabeled.detect_infinite().infinite,
            "copy {copy}: infiniteness transported"
        );
        assert_eq!(
            m.detect_cancellation().cancellative,
            relabeled.detect_cancellation().cancellative,
            "copy {copy}: cancellation transported"
        );
    }
    pass(8, "20 relabeled copies: witness found and infiniteness/cancellation verdicts transported");
}

#[test]
fn acceptance_09_scale_absorption() {
    for (name, m) in [
        ("O4", o4()),
        ("Ktilde", ktilde()),
        ("KplusO2tilde", kplus_o2_tilde()),
        ("E1", e1()),
        ("E2", e2()),
    ] {
        let unit = match &m.scale {
            Scale::Unit(e) => e.clone(),
            _ => panic!("{name} must be unital"),
        };
        for x in m.enumerate_positive(5) {
            let mut absorbed = false;
            for k in 1..=20u64 {
                if m.leq_v(&x, &m.scale_v(k, &unit)) {
                    absorbed = true;
                    break;
                }
            }
            assert!(absorbed, "{name}: element {:?} not absorbed by 20 units", x.v);
        }
    }
    pass(9, "every enumerated positive class within bound 5 sits below at most 20 units");
}

#[test]
fn acceptance_10_cli_determinism_roundtrip() {
    // round-trips over the whole corpus
    for (name, text) in cli::CORPUS {
        let prog = cli::parse(text).unwrap_or_else(|e| panic!("{name}: {e}"));
        let printed = prog.to_string();
        let reparsed = cli::parse(&printed).unwrap_or_else(|e| panic!("{name} reparse: {e}"));
        assert_eq!(prog, reparsed, "{name} round-trip");
    }
    // repeated compare runs byte-identical modulo the timestamp header field
    let strip = |s: &str| -> String {
        s.lines()
            .filter(|l| !l.contains("generated_unix"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    let args: Vec<String> = ["compare", "Ktilde", "KplusO2tilde", "mode", "latticed", "--json"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let (out1, code1) = cli::run(&args);
    let (out2, code2) = cli::run(&args);
    assert_eq!(code1, 1, "distinguishable pairs exit with code 1");
    assert_eq!(code2, 1);
    assert_eq!(strip(&out1), strip(&out2), "reports must be byte-identical");
    let _ = CliOptions::default();
    pass(10, "corpus round-trips and repeated compare reports are byte-identical modulo the timestamp");
}
