use std::collections::BTreeMap;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::functors::{support_space, DeltaKind, Element, FunctorExpr, MeasureElem, Universe};
use crate::measures::{MassReading, PossReading, ProbabilityMeasure, UncertaintyMeasure};
use crate::models::Coalgebra;
use crate::rational::Rat;
use crate::spaces::{Bits, Space, SpaceRef};

/// Size bounds for generated models and measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomSizes {
    pub points: usize,
    pub atoms: usize,
    /// Probabilities in an envelope family.
    pub family: usize,
    /// Focal sets of a mass function.
    pub focal: usize,
    /// Elements in the support of a measure over a measure sort.
    pub support: usize,
}

impl Default for RandomSizes {
    fn default() -> Self {
        RandomSizes {
            points: 6,
            atoms: 4,
            family: 3,
            focal: 4,
            support: 3,
        }
    }
}

fn partitioned<R: Rng>(rng: &mut R, name: &str, labels: Vec<String>, max_atoms: usize) -> SpaceRef {
    let n = labels.len();
    let k = rng.gen_range(1..=max_atoms.min(n).max(1));
    let mut classes: Vec<Vec<String>> = vec![Vec::new(); k];
    for (i, l) in labels.iter().enumerate() {
        // the first k points seed distinct classes
        let c = if i < k { i } else { rng.gen_range(0..k) };
        classes[c].push(l.clone());
    }
    classes.retain(|c| !c.is_empty());
    let gens: Vec<Vec<String>> = if classes.len() > 1 { classes } else { Vec::new() };
    Arc::new(Space::generate(name, labels, &gens).expect("fresh labels"))
}

/// `units` units spread over `n` bins at random.
fn spread<R: Rng>(rng: &mut R, n: usize, units: i64) -> Vec<i64> {
    let mut v = vec![0; n];
    for _ in 0..units {
        v[rng.gen_range(0..n)] += 1;
    }
    v
}

fn denominator<R: Rng>(rng: &mut R) -> i64 {
    *[2, 3, 4].choose(rng).expect("nonempty")
}

fn random_probability<R: Rng>(rng: &mut R, sp: &SpaceRef) -> ProbabilityMeasure {
    let d = denominator(rng);
    let w = spread(rng, sp.atom_count(), d).into_iter().map(|u| Rat::new(u, d)).collect();
    ProbabilityMeasure::new(sp.clone(), w).expect("normalized")
}

/// A random measure of the given kind on `sp`, valid by construction.
pub(super) fn random_measure<R: Rng>(rng: &mut R, kind: DeltaKind, sp: &SpaceRef, sizes: &RandomSizes) -> UncertaintyMeasure {
    let n = sp.atom_count();
    match kind {
        DeltaKind::Prob => UncertaintyMeasure::probability(random_probability(rng, sp)),
        DeltaKind::Upper => {
            let k = rng.gen_range(1..=sizes.family.max(1));
            let fam = (0..k).map(|_| random_probability(rng, sp)).collect();
            UncertaintyMeasure::upper_envelope(fam).expect("nonempty family")
        }
        DeltaKind::Plaus => {
            let d = denominator(rng);
            let subsets = (1u64 << n.min(20)) - 1;
            let f = rng.gen_range(1..=(sizes.focal.max(1) as u64).min(d as u64).min(subsets)) as usize;
            let mut sets: Vec<Bits> = Vec::new();
            while sets.len() < f {
                let s = Bits::from_indices(n, (0..n).filter(|_| rng.gen_bool(0.5)));
                if !s.is_empty() && !sets.contains(&s) {
                    sets.push(s);
                }
            }
            let extra = spread(rng, f, d - f as i64);
            let focal = sets
                .into_iter()
                .zip(extra)
                .map(|(s, e)| (s, Rat::new(1 + e, d)))
                .collect();
            UncertaintyMeasure::from_mass(sp.clone(), focal, MassReading::Plausibility).expect("masses sum to 1")
        }
        DeltaKind::Poss => {
            let d = denominator(rng);
            let top = rng.gen_range(0..n);
            let per_atom: Vec<Rat> = (0..n)
                .map(|a| if a == top { Rat::one() } else { Rat::new(rng.gen_range(0..=d), d) })
                .collect();
            let dist = (0..sp.point_count()).map(|p| per_atom[sp.atom_of(p)].clone()).collect();
            UncertaintyMeasure::from_poss_dist(sp.clone(), dist, PossReading::Possibility).expect("maximum 1")
        }
    }
}

/// A random element of `S(X)`. Measures over measure sorts get a support
/// of up to `sizes.support` distinct random elements.
pub fn random_element<R: Rng>(rng: &mut R, u: &Universe, s: &FunctorExpr, sizes: &RandomSizes) -> Element {
    match s {
        FunctorExpr::Id => Element::Base(rng.gen_range(0..u.state().point_count())),
        FunctorExpr::Const(m) => {
            let n = u.constant(m).expect("declared constant").point_count();
            Element::Const(rng.gen_range(0..n))
        }
        FunctorExpr::Prod(a, b) => Element::pair(random_element(rng, u, a, sizes), random_element(rng, u, b, sizes)),
        FunctorExpr::Coprod(a, b) => {
            let left_ok = inhabited(u, a);
            let right_ok = inhabited(u, b);
            if left_ok && (!right_ok || rng.gen_bool(0.5)) {
                Element::inl(random_element(rng, u, a, sizes))
            } else {
                Element::inr(random_element(rng, u, b, sizes))
            }
        }
        FunctorExpr::Delta(kind, inner) => match u.space(inner) {
            Some(sp) => Element::measure(MeasureElem::realized(random_measure(rng, *kind, &sp, sizes))),
            None => {
                let k = rng.gen_range(1..=sizes.support.max(1));
                let mut support: Vec<Element> = Vec::new();
                for _ in 0..k {
                    let e = random_element(rng, u, inner, sizes);
                    if !support.iter().any(|x| x.ext_eq(&e)) {
                        support.push(e);
                    }
                }
                let sp = support_space(support.len());
                let g = random_measure(rng, *kind, &sp, sizes);
                Element::measure(MeasureElem::on_support(g, support))
            }
        },
    }
}

/// Whether `S(X)` has elements.
fn inhabited(u: &Universe, s: &FunctorExpr) -> bool {
    match s {
        FunctorExpr::Id => u.state().point_count() > 0,
        FunctorExpr::Const(m) => u.constant(m).is_some_and(|sp| sp.point_count() > 0),
        FunctorExpr::Prod(a, b) => inhabited(u, a) && inhabited(u, b),
        FunctorExpr::Coprod(a, b) => inhabited(u, a) || inhabited(u, b),
        FunctorExpr::Delta(_, a) => inhabited(u, a),
    }
}

/// Random probes at every measure sort of the model's signature.
pub fn random_probes<R: Rng>(rng: &mut R, model: &Coalgebra, per_sort: usize, sizes: &RandomSizes) -> Vec<(FunctorExpr, Element)> {
    let u = model.universe();
    let mut out = Vec::new();
    for s in model.signature().sorts() {
        if let FunctorExpr::Delta(_, inner) = s {
            if !inhabited(u, inner) {
                continue;
            }
            for _ in 0..per_sort {
                out.push((s.clone(), random_element(rng, u, s, sizes)));
            }
        }
    }
    out
}

pub(super) fn random_model<R: Rng>(rng: &mut R, t: &FunctorExpr, size: usize, sizes: &RandomSizes) -> Coalgebra {
    let size = size.clamp(1, sizes.points.max(1));
    let mut consts = BTreeMap::new();
    for m in t.constants() {
        let k = rng.gen_range(2..=3);
        let labels = ["a", "b", "c"][..k].iter().map(|s| s.to_string()).collect();
        consts.insert(m.clone(), partitioned(rng, &m, labels, sizes.atoms));
    }
    let labels: Vec<String> = (0..size).map(|i| format!("x{i}")).collect();
    let state = partitioned(rng, "X", labels, sizes.atoms);
    let u = Universe::new(state.clone(), consts.clone());
    // one image per atom keeps the structure map measurable
    let images: Vec<Element> = (0..state.atom_count()).map(|_| random_element(rng, &u, t, sizes)).collect();
    let alpha = (0..size).map(|x| images[state.atom_of(x)].clone()).collect();
    Coalgebra::new(state, consts, t.clone(), alpha).expect("generated models are valid")
}

/// A random `t`-coalgebra with `size` states (at most 6), deterministic in
/// `seed`. Constant spaces get two or three points.
pub fn random_coalgebra(t: &FunctorExpr, size: usize, seed: u64) -> Coalgebra {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_model(&mut rng, t, size, &RandomSizes::default())
}
