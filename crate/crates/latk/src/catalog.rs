//! Builders for the block classes and constructions: simple blocks of the
//! three kinds, direct sums, unitization, and unital extensions with trivial
//! boundary maps over a stable ideal.

use crate::abelian::{AbHom, FgAbGroup, Int};
use crate::lambda::{CoefficientSet, LambdaModule, LambdaMorphism, Slot, SumOfModules};
use crate::lattice::FiniteLattice;
use crate::latticed::{Aux, ExtensionProvenance, LatticedKModule, Scale, VElem, VMorphism};
use crate::semilinear::{Component, SemilinearSet};

use std::collections::BTreeMap;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LatticeShape {
    Point,
    Chain(usize),
}

#[derive(Clone, Debug)]
pub enum BlockKind {
    /// purely infinite simple: the layer is the entire K0 (the zero class
    /// included), the unit class is the designated element
    Kirchberg {
        k0: FgAbGroup,
        unit: Vec<Int>,
        k1: FgAbGroup,
    },
    /// stably finite simple: the layer is the cone generated by the given
    /// classes, with the neutral class removed
    StablyFiniteSimple {
        k0: FgAbGroup,
        cone: Vec<Vec<Int>>,
        k1: FgAbGroup,
    },
    /// trivial fibers; one idempotent class per nonzero ideal
    O2Stable { shape: LatticeShape },
    /// the compact-operator block: K0 = Z with the rank cone
    CompactsLike,
    /// the zero algebra
    Zero,
}

#[derive(Clone, Debug)]
pub struct BlockSpec {
    pub kind: BlockKind,
    pub coeffs: CoefficientSet,
}

#[derive(Clone)]
pub enum ExtensionClass {
    Split,
    /// explicit middle K-groups with the inclusion/projection pairs
    Explicit {
        k0e: FgAbGroup,
        incl0: AbHom,
        proj0: AbHom,
        k1e: FgAbGroup,
        incl1: AbHom,
        proj1: AbHom,
    },
}

pub struct ExtensionSpec {
    pub b: LatticedKModule,
    pub a: LatticedKModule,
    pub class: ExtensionClass,
    /// replaces the preset top layer when the preset judgment call is not wanted
    pub top_layer_override: Option<SemilinearSet>,
}

impl ExtensionSpec {
    pub fn split(b: LatticedKModule, a: LatticedKModule) -> Self {
        ExtensionSpec {
            b,
            a,
            class: ExtensionClass::Split,
            top_layer_override: None,
        }
    }
}

fn zero_fiber(coeffs: &CoefficientSet) -> LambdaModule {
    LambdaModule::zero(coeffs)
}

fn two_element_lattice() -> FiniteLattice {
    FiniteLattice::chain(vec!["0".into(), "T".into()])
}

pub fn build_block(spec: &BlockSpec) -> Result<LatticedKModule, String> {
    let coeffs = &spec.coeffs;
    match &spec.kind {
        BlockKind::Zero => {
            let lattice = FiniteLattice::point("0");
            let fiber = zero_fiber(coeffs);
            let layer = SemilinearSet::zero_point(fiber.group(Slot::G(0)).clone());
            Ok(LatticedKModule {
                lattice,
                coeffs: coeffs.clone(),
                fibers: vec![fiber],
                delta: BTreeMap::new(),
                layers: vec![layer],
                scale: Scale::FullPositive,
                provenance: None,
                presets: vec![],
            })
        }
        BlockKind::CompactsLike => {
            let lattice = two_element_lattice();
            let z = FgAbGroup::free(1);
            let top = LambdaModule::standard(&z, &FgAbGroup::zero(), coeffs);
            let bot = zero_fiber(coeffs);
            let layer_top = SemilinearSet::new(
                z.clone(),
                vec![Component {
                    offset: vec![Int::from(1)],
                    z_periods: vec![],
                    n_periods: vec![vec![Int::from(1)]],
                }],
            )
            .map_err(|e| e.to_string())?;
            let layer_bot = SemilinearSet::zero_point(bot.group(Slot::G(0)).clone());
            let mut delta = BTreeMap::new();
            delta.insert((0, 1), LambdaMorphism::zero(&bot, &top));
            Ok(LatticedKModule {
                lattice,
                coeffs: coeffs.clone(),
                fibers: vec![bot, top],
                delta,
                layers: vec![layer_bot, layer_top],
                scale: Scale::FullPositive,
                provenance: None,
                presets: vec![],
            })
        }
        BlockKind::Kirchberg { k0, unit, k1 } => {
            let lattice = two_element_lattice();
            let top = LambdaModule::standard(k0, k1, coeffs);
            let bot = zero_fiber(coeffs);
            if unit.len() != k0.dim() {
                return Err("unit class has the wrong dimension".into());
            }
            let layer_top = SemilinearSet::whole_group(k0.clone());
            let layer_bot = SemilinearSet::zero_point(bot.group(Slot::G(0)).clone());
            let mut delta = BTreeMap::new();
            delta.insert((0, 1), LambdaMorphism::zero(&bot, &top));
            let unit_elem = VElem {
                ideal: 1,
                v: k0.normalize(unit),
                aux: Aux::zero(&top),
            };
            Ok(LatticedKModule {
                lattice,
                coeffs: coeffs.clone(),
                fibers: vec![bot, top],
                delta,
                layers: vec![layer_bot, layer_top],
                scale: Scale::Unit(unit_elem),
                provenance: None,
                presets: vec!["kirchberg-full-layer".into()],
            })
        }
        BlockKind::StablyFiniteSimple { k0, cone, k1 } => {
            if cone.is_empty() {
                return Err("a stably finite simple block needs cone generators".into());
            }
            for g in cone {
                if g.len() != k0.dim() || k0.is_zero_elem(g) {
                    return Err("cone generators must be nonzero classes in K0".into());
                }
            }
            let lattice = two_element_lattice();
            let top = LambdaModule::standard(k0, k1, coeffs);
            let bot = zero_fiber(coeffs);
            let comps = cone
                .iter()
                .map(|g| Component {
                    offset: k0.normalize(g),
                    z_periods: vec![],
                    n_periods: cone.iter().map(|h| k0.normalize(h)).collect(),
                })
                .collect();
            let layer_top = SemilinearSet::new(k0.clone(), comps).map_err(|e| e.to_string())?;
            let layer_bot = SemilinearSet::zero_point(bot.group(Slot::G(0)).clone());
            let mut delta = BTreeMap::new();
            delta.insert((0, 1), LambdaMorphism::zero(&bot, &top));
            Ok(LatticedKModule {
                lattice,
                coeffs: coeffs.clone(),
                fibers: vec![bot, top],
                delta,
                layers: vec![layer_bot, layer_top],
                scale: Scale::FullPositive,
                provenance: None,
                presets: vec!["cone-minus-neutral-layer".into()],
            })
        }
        BlockKind::O2Stable { shape } => {
            let lattice = match shape {
                LatticeShape::Point => two_element_lattice(),
                LatticeShape::Chain(k) => {
                    if *k == 0 {
                        return Err("chain length must be positive".into());
                    }
                    let mut names = vec!["0".to_string()];
                    for i in 1..=*k {
                        names.push(format!("I{i}"));
                    }
                    FiniteLattice::chain(names)
                }
            };
            let n = lattice.size();
            let fibers: Vec<LambdaModule> = (0..n).map(|_| zero_fiber(coeffs)).collect();
            let mut delta = BTreeMap::new();
            for (i, j) in lattice.strict_pairs() {
                delta.insert((i, j), LambdaMorphism::zero(&fibers[i], &fibers[j]));
            }
            let layers: Vec<SemilinearSet> = (0..n)
                .map(|i| SemilinearSet::zero_point(fibers[i].group(Slot::G(0)).clone()))
                .collect();
            Ok(LatticedKModule {
                lattice,
                coeffs: coeffs.clone(),
                fibers,
                delta,
                layers,
                scale: Scale::FullPositive,
                provenance: None,
                presets: vec!["trivial-fiber-idempotent-layer".into()],
            })
        }
    }
}

/// Block-diagonal morphism between componentwise sums.
fn block_morphism(
    dx: &LambdaMorphism,
    dy: &LambdaMorphism,
    src_sum: &SumOfModules,
    tgt_sum: &SumOfModules,
) -> LambdaMorphism {
    let mut comps = BTreeMap::new();
    for s in src_sum.module.slots() {
        let a = tgt_sum.incl[0]
            .component(s)
            .compose(dx.component(s))
            .and_then(|h| h.compose(src_sum.proj[0].component(s)))
            .expect("block morphism a-part");
        let b = tgt_sum.incl[1]
            .component(s)
            .compose(dy.component(s))
            .and_then(|h| h.compose(src_sum.proj[1].component(s)))
            .expect("block morphism b-part");
        comps.insert(s, a.add(&b).expect("block morphism add"));
    }
    LambdaMorphism::from_components(src_sum.module.clone(), tgt_sum.module.clone(), comps)
        .expect("block morphism shape")
}

/// Componentwise direct sum: product lattice, summed fibers, product layers.
pub fn direct_sum(x: &LatticedKModule, y: &LatticedKModule) -> Result<LatticedKModule, String> {
    if x.coeffs != y.coeffs {
        return Err("coefficient sets differ".into());
    }
    let lattice = FiniteLattice::product(&x.lattice, &y.lattice);
    let idx = |i: usize, j: usize| i * y.lattice.size() + j;
    let mut sums: Vec<SumOfModules> = Vec::new();
    for i in x.lattice.elements() {
        for j in y.lattice.elements() {
            sums.push(LambdaModule::sum(&x.fibers[i], &y.fibers[j])?);
        }
    }
    let fibers: Vec<LambdaModule> = sums.iter().map(|s| s.module.clone()).collect();
    let mut delta = BTreeMap::new();
    for i1 in x.lattice.elements() {
        for j1 in y.lattice.elements() {
            for i2 in x.lattice.elements() {
                for j2 in y.lattice.elements() {
                    let a = idx(i1, j1);
                    let b = idx(i2, j2);
                    if a != b && lattice.le(a, b) {
                        let dx = x.delta(i1, i2);
                        let dy = y.delta(j1, j2);
                        delta.insert((a, b), block_morphism(&dx, &dy, &sums[a], &sums[b]));
                    }
                }
            }
        }
    }
    let mut layers = Vec::new();
    for i in x.lattice.elements() {
        for j in y.lattice.elements() {
            let s = &sums[idx(i, j)];
            layers.push(
                SemilinearSet::product(
                    &x.layers[i],
                    &y.layers[j],
                    s.incl[0].component(Slot::G(0)),
                    s.incl[1].component(Slot::G(0)),
                )
                .map_err(|e| e.to_string())?,
            );
        }
    }
    let scale = match (&x.scale, &y.scale) {
        (Scale::FullPositive, Scale::FullPositive) => Scale::FullPositive,
        (Scale::Unit(ex), Scale::Unit(ey)) => {
            let t = idx(x.lattice.top(), y.lattice.top());
            let s = &sums[t];
            let v = s.module.group(Slot::G(0)).add_elems(
                &s.incl[0].component(Slot::G(0)).apply(&ex.v),
                &s.incl[1].component(Slot::G(0)).apply(&ey.v),
            );
            Scale::Unit(VElem {
                ideal: t,
                v,
                aux: Aux::zero(&s.module),
            })
        }
        _ => return Err("direct sum of mixed unital/stable scales is not supported".into()),
    };
    let mut presets: Vec<String> = x.presets.clone();
    for p in &y.presets {
        if !presets.contains(p) {
            presets.push(p.clone());
        }
    }
    Ok(LatticedKModule {
        lattice,
        coeffs: x.coeffs.clone(),
        fibers,
        delta,
        layers,
        scale,
        provenance: None,
        presets,
    })
}

/// Adjoin a unit: a new top ideal whose fiber gains a free rank-one summand,
/// with the scalar-rank layer and the unit scale.
pub fn unitize(x: &LatticedKModule) -> Result<LatticedKModule, String> {
    if x.scale.is_unit() {
        return Err("value is already unital".into());
    }
    let lattice = x.lattice.adjoin_top("T'");
    let new_top = x.lattice.size();
    let old_top = x.lattice.top();
    let scalar = LambdaModule::standard(&FgAbGroup::free(1), &FgAbGroup::zero(), &x.coeffs);
    let sum = LambdaModule::sum(&x.fibers[old_top], &scalar)?;
    let mut fibers = x.fibers.clone();
    fibers.push(sum.module.clone());
    let mut delta = x.delta.clone();
    for i in x.lattice.elements() {
        let into_old_top = x.delta(i, old_top);
        let d = sum.incl[0].compose(&into_old_top)?;
        delta.insert((i, new_top), d);
    }
    // top layer: scalar rank >= 1, old coordinates unrestricted
    let g0_new = sum.module.group(Slot::G(0)).clone();
    let incl_old0 = sum.incl[0].component(Slot::G(0));
    let incl_new0 = sum.incl[1].component(Slot::G(0));
    let old_g0 = x.fibers[old_top].group(Slot::G(0));
    let one = incl_new0.apply(&FgAbGroup::free(1).gen_elem(0));
    let z_periods: Vec<Vec<Int>> = (0..old_g0.dim())
        .map(|k| incl_old0.apply(&old_g0.gen_elem(k)))
        .collect();
    let top_layer = SemilinearSet::new(
        g0_new.clone(),
        vec![Component {
            offset: one.clone(),
            z_periods,
            n_periods: vec![one.clone()],
        }],
    )
    .map_err(|e| e.to_string())?;
    let mut layers = x.layers.clone();
    layers.push(top_layer);
    let unit = VElem {
        ideal: new_top,
        v: one,
        aux: Aux::zero(&sum.module),
    };
    let mut presets = x.presets.clone();
    presets.push("unitize-scalar-rank-layer".into());
    Ok(LatticedKModule {
        lattice,
        coeffs: x.coeffs.clone(),
        fibers,
        delta,
        layers,
        scale: Scale::Unit(unit),
        provenance: None,
        presets,
    })
}

/// Forget the unit: the scale becomes the whole positive part.
pub fn stabilize(x: &LatticedKModule) -> LatticedKModule {
    let mut out = x.clone();
    out.scale = Scale::FullPositive;
    out.provenance = None;
    out
}

/// Unital extension of a simple unital value by a stable value, with trivial
/// boundary shape. The top layer allows every class of the ideal's K0 next to
/// a full class of the quotient.
pub fn build_extension(spec: &ExtensionSpec) -> Result<LatticedKModule, String> {
    let b = &spec.b;
    let a = &spec.a;
    if b.coeffs != a.coeffs {
        return Err("coefficient sets differ".into());
    }
    if b.scale.is_unit() {
        return Err("the ideal part must be stable (non-unit scale)".into());
    }
    if a.lattice.size() != 2 || !a.scale.is_unit() {
        return Err("the quotient must be simple and unital (two ideals, unit scale)".into());
    }
    let a_top = a.lattice.top();
    let b_top = b.lattice.top();
    let lattice = b.lattice.adjoin_top("TE");
    let new_top = b.lattice.size();

    // top fiber, its inclusion of K(B_top), and its projection onto K(A_top)
    let (top_fiber, incl_b_mor, top_proj): (LambdaModule, LambdaMorphism, LambdaMorphism) =
        match &spec.class {
            ExtensionClass::Split => {
                let sum = LambdaModule::sum(&b.fibers[b_top], &a.fibers[a_top])?;
                (sum.module.clone(), sum.incl[0].clone(), sum.proj[1].clone())
            }
            ExtensionClass::Explicit {
                k0e,
                incl0,
                proj0,
                k1e,
                incl1,
                proj1,
            } => {
                // the supplied data must fit short exact sequences in each degree
                for (inc, prj, mid) in [(incl0, proj0, k0e), (incl1, proj1, k1e)] {
                    if inc.src() != b.fibers[b_top].group(Slot::G(0))
                        && inc.src() != b.fibers[b_top].group(Slot::G(1))
                    {
                        // source group sanity is fully checked below via shapes
                    }
                    if inc.tgt() != mid || prj.src() != mid {
                        return Err("explicit class maps do not match the middle group".into());
                    }
                    if !inc.is_injective() || !prj.is_surjective() {
                        return Err("explicit class is not a short exact sequence".into());
                    }
                    if !crate::abelian::is_exact_at(inc, prj).map_err(|e| e.to_string())? {
                        return Err("explicit class is not exact in the middle".into());
                    }
                }
                let fiber = LambdaModule::standard(k0e, k1e, &b.coeffs);
                let incl = LambdaModule::standard_functor(incl0, incl1, &b.fibers[b_top], &fiber)?;
                let proj = LambdaModule::standard_functor(proj0, proj1, &fiber, &a.fibers[a_top])?;
                (fiber, incl, proj)
            }
        };

    let mut fibers = b.fibers.clone();
    fibers.push(top_fiber.clone());
    let mut delta = b.delta.clone();
    for i in b.lattice.elements() {
        let into_b_top = b.delta(i, b_top);
        delta.insert((i, new_top), incl_b_mor.compose(&into_b_top)?);
    }
    // top layer: all of K0(B_top) next to a full class of A
    let g0_top = top_fiber.group(Slot::G(0)).clone();
    let incl_b0 = incl_b_mor.component(Slot::G(0));
    let b_g0 = b.fibers[b_top].group(Slot::G(0));
    let b_dirs: Vec<Vec<Int>> = (0..b_g0.dim())
        .map(|k| incl_b0.apply(&b_g0.gen_elem(k)))
        .collect();
    // a section of the projection onto A's K0 on layer data: in the split case
    // the A-part inclusion; in the explicit case any preimage of each vector
    let lift_a = |v: &[Int]| -> Result<Vec<Int>, String> {
        top_proj
            .component(Slot::G(0))
            .preimage(v)
            .ok_or_else(|| "quotient layer class has no preimage in the middle".into())
    };
    let mut comps = Vec::new();
    for c in a.layers[a_top].components() {
        let offset = g0_top.normalize(&lift_a(&c.offset)?);
        let mut z = b_dirs.clone();
        for p in c.z_periods.iter() {
            z.push(g0_top.normalize(&lift_a(p)?));
        }
        let mut np = Vec::new();
        for p in c.n_periods.iter() {
            np.push(g0_top.normalize(&lift_a(p)?));
        }
        comps.push(Component {
            offset,
            z_periods: z,
            n_periods: np,
        });
    }
    let mut presets_extra: Vec<String> = Vec::new();
    let top_layer = match &spec.top_layer_override {
        None => SemilinearSet::new(g0_top.clone(), comps).map_err(|e| e.to_string())?,
        Some(s) => {
            if s.ambient() != &g0_top {
                return Err("top layer override lives in the wrong group".into());
            }
            presets_extra.push("extension-top-layer-override".into());
            s.clone()
        }
    };
    let mut layers = b.layers.clone();
    layers.push(top_layer);
    // unit: the lift of A's unit class
    let a_unit = match &a.scale {
        Scale::Unit(e) => e.clone(),
        _ => unreachable!("checked above"),
    };
    let unit = VElem {
        ideal: new_top,
        v: g0_top.normalize(&lift_a(&a_unit.v)?),
        aux: Aux::zero(&top_fiber),
    };
    let mut presets = b.presets.clone();
    for p in &a.presets {
        if !presets.contains(p) {
            presets.push(p.clone());
        }
    }
    if presets_extra.is_empty() {
        presets.push("extension-top-layer-preset".into());
    } else {
        presets.extend(presets_extra);
    }
    Ok(LatticedKModule {
        lattice,
        coeffs: b.coeffs.clone(),
        fibers,
        delta,
        layers,
        scale: Scale::Unit(unit),
        provenance: Some(ExtensionProvenance {
            b: Box::new(b.clone()),
            a: Box::new(a.clone()),
            split: matches!(spec.class, ExtensionClass::Split),
            top_proj,
        }),
        presets,
    })
}

/// The canonical inclusion/quotient morphisms of a built extension.
pub fn canonical_morphisms(e: &LatticedKModule) -> Result<(VMorphism, VMorphism), String> {
    let prov = e
        .provenance
        .as_ref()
        .ok_or("value was not built as an extension (no provenance)")?;
    let b = prov.b.as_ref();
    let a = prov.a.as_ref();
    let new_top = b.lattice.size();
    // iota: indices agree with the first block of e's lattice
    let iota = VMorphism {
        src: Box::new(b.clone()),
        tgt: Box::new(e.clone()),
        lattice_map: b.lattice.elements().collect(),
        fiber_maps: b
            .lattice
            .elements()
            .map(|i| {
                LambdaMorphism::from_components(
                    b.fibers[i].clone(),
                    e.fibers[i].clone(),
                    b.fibers[i]
                        .slots()
                        .into_iter()
                        .map(|s| (s, AbHom::identity(b.fibers[i].group(s))))
                        .collect(),
                )
                .expect("iota fiber identity")
            })
            .collect(),
    };
    let a_bot = a.lattice.bottom();
    let a_top = a.lattice.top();
    let mut pi_lattice = vec![a_bot; e.lattice.size()];
    pi_lattice[new_top] = a_top;
    let mut pi_fibers = Vec::new();
    for i in e.lattice.elements() {
        if i == new_top {
            pi_fibers.push(prov.top_proj.clone());
        } else {
            pi_fibers.push(LambdaMorphism::zero(&e.fibers[i], &a.fibers[a_bot]));
        }
    }
    let pi = VMorphism {
        src: Box::new(e.clone()),
        tgt: Box::new(a.clone()),
        lattice_map: pi_lattice,
        fiber_maps: pi_fibers,
    };
    Ok((iota, pi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abelian::int;
    use crate::latticed::{check_v_exactness, iso_search_latticed, IsoMode};
    use crate::Budget;

    fn coeffs() -> CoefficientSet {
        CoefficientSet::default_set()
    }

    pub fn o4_model() -> LatticedKModule {
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

    pub fn compacts_model() -> LatticedKModule {
        build_block(&BlockSpec {
            kind: BlockKind::CompactsLike,
            coeffs: coeffs(),
        })
        .unwrap()
    }

    #[test]
    fn blocks_validate() {
        assert!(o4_model().validate().passed());
        assert!(compacts_model().validate().passed());
        let o2 = build_block(&BlockSpec {
            kind: BlockKind::O2Stable {
                shape: LatticeShape::Point,
            },
            coeffs: coeffs(),
        })
        .unwrap();
        assert!(o2.validate().passed());
        let z = build_block(&BlockSpec {
            kind: BlockKind::Zero,
            coeffs: coeffs(),
        })
        .unwrap();
        assert!(z.validate().passed());
    }

    #[test]
    fn unitize_compacts_is_three_chain() {
        let kt = unitize(&compacts_model()).unwrap();
        assert_eq!(kt.lattice.size(), 3);
        assert!(kt.validate().passed());
        // top layer is the scalar-rank cone
        let top = kt.lattice.top();
        assert!(kt.layer(top).contains(&[int(-4), int(1)]));
        assert!(!kt.layer(top).contains(&[int(3), int(0)]));
    }

    #[test]
    fn sum_and_unitize_count_ideals() {
        let o2 = build_block(&BlockSpec {
            kind: BlockKind::O2Stable {
                shape: LatticeShape::Point,
            },
            coeffs: coeffs(),
        })
        .unwrap();
        let s = direct_sum(&compacts_model(), &o2).unwrap();
        assert_eq!(s.lattice.size(), 4);
        assert!(s.validate().passed());
        let u = unitize(&s).unwrap();
        assert_eq!(u.lattice.size(), 5);
        assert!(u.validate().passed());
    }

    #[test]
    fn unitize_zero_is_scalar_model() {
        let z = build_block(&BlockSpec {
            kind: BlockKind::Zero,
            coeffs: coeffs(),
        })
        .unwrap();
        let c = unitize(&z).unwrap();
        assert_eq!(c.lattice.size(), 2);
        assert!(c.validate().passed());
        // V = naturals: (T', s) with s >= 1
        let top = c.lattice.top();
        assert!(c.layer(top).contains(&[int(3)]));
        assert!(!c.layer(top).contains(&[int(0)]));
    }

    #[test]
    fn split_extension_matches_unitize() {
        let z = build_block(&BlockSpec {
            kind: BlockKind::Zero,
            coeffs: coeffs(),
        })
        .unwrap();
        let cmodel = unitize(&z).unwrap();
        let e = build_extension(&ExtensionSpec {
            b: compacts_model(),
            a: cmodel,
            class: ExtensionClass::Split,
            top_layer_override: None,
        })
        .unwrap();
        assert!(e.validate().passed());
        let kt = unitize(&compacts_model()).unwrap();
        let r = iso_search_latticed(&e, &kt, IsoMode::Latticed, &Budget::default(), 3);
        assert!(r.outcome.is_found(), "notes: {:?}", r.notes);
    }

    #[test]
    fn canonical_morphisms_exact() {
        let z = build_block(&BlockSpec {
            kind: BlockKind::Zero,
            coeffs: coeffs(),
        })
        .unwrap();
        let cmodel = unitize(&z).unwrap();
        let e = build_extension(&ExtensionSpec {
            b: compacts_model(),
            a: cmodel,
            class: ExtensionClass::Split,
            top_layer_override: None,
        })
        .unwrap();
        let (iota, pi) = canonical_morphisms(&e).unwrap();
        assert!(check_v_exactness(&iota, &pi).unwrap());
        // a zero map in place of iota is detected
        let mut broken = iota.clone();
        broken.fiber_maps = broken
            .fiber_maps
            .iter()
            .enumerate()
            .map(|(i, _)| {
                LambdaMorphism::zero(
                    &broken.src.fibers[i],
                    &broken.tgt.fibers[broken.lattice_map[i]],
                )
            })
            .collect();
        assert!(!check_v_exactness(&broken, &pi).unwrap());
    }

    #[test]
    fn canonical_inclusion_is_injective_morphism() {
        let z = build_block(&BlockSpec {
            kind: BlockKind::Zero,
            coeffs: coeffs(),
        })
        .unwrap();
        let e = build_extension(&ExtensionSpec::split(compacts_model(), unitize(&z).unwrap())).unwrap();
        let (iota, _) = canonical_morphisms(&e).unwrap();
        let rep = crate::latticed::check_v_morphism(&iota, false);
        assert!(rep.passed(), "failures: {:?}", rep.failures());
        for f in &iota.fiber_maps {
            for (_, h) in f.components() {
                assert!(h.is_injective());
            }
        }
    }

    #[test]
    fn extension_infiniteness_flavors() {
        // purely infinite quotient marks the top infinite
        let e1 = build_extension(&ExtensionSpec::split(compacts_model(), o4_model())).unwrap();
        let rep = e1.detect_infinite();
        assert!(rep.infinite);
        assert!(rep.top_layer_kind.contains("infinite-type"));
        // stably finite quotient over a finite ideal stays finite
        let z = build_block(&BlockSpec {
            kind: BlockKind::Zero,
            coeffs: coeffs(),
        })
        .unwrap();
        let e = build_extension(&ExtensionSpec::split(compacts_model(), unitize(&z).unwrap())).unwrap();
        let rep = e.detect_infinite();
        assert!(!rep.infinite);
        assert!(rep.top_layer_kind.contains("finite-type"));
    }

    #[test]
    fn o2_extension_three_chain() {
        let o2k = build_block(&BlockSpec {
            kind: BlockKind::O2Stable {
                shape: LatticeShape::Point,
            },
            coeffs: coeffs(),
        })
        .unwrap();
        let o2_unital = build_block(&BlockSpec {
            kind: BlockKind::Kirchberg {
                k0: FgAbGroup::zero(),
                unit: vec![],
                k1: FgAbGroup::zero(),
            },
            coeffs: coeffs(),
        })
        .unwrap();
        let e = build_extension(&ExtensionSpec {
            b: o2k,
            a: o2_unital,
            class: ExtensionClass::Split,
            top_layer_override: None,
        })
        .unwrap();
        assert_eq!(e.lattice.size(), 3);
        assert!(e.validate().passed());
        // V(E) = {0, u_B, u_E}
        let (m, elems) = e.finitize_v(None).unwrap();
        assert_eq!(m.size(), 3);
        assert_eq!(elems.len(), 3);
    }
}
