use std::sync::Arc;

use super::*;
use crate::spaces::{product_space, Bits, MeasurableSet, Space, SpaceRef};

fn r(n: i64, d: i64) -> Rat {
    Rat::new(n, d)
}

fn labels(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn discrete(n: usize) -> SpaceRef {
    Arc::new(Space::discrete("S", (1..=n).map(|i| i.to_string()).collect()).unwrap())
}

/// X * M from the worked example; atoms in order
/// {x,y}x{a}, {x,y}x{b,c}, {z,t}x{a}, {z,t}x{b,c}.
fn xm() -> SpaceRef {
    let x = Space::generate("X", labels(&["x", "y", "z", "t"]), &[labels(&["x", "y"])]).unwrap();
    let m = Space::generate("M", labels(&["a", "b", "c"]), &[labels(&["a"])]).unwrap();
    Arc::new(product_space(&x, &m))
}

/// Table columns, given in row order (xy*a, zt*a, xy*bc, zt*bc).
fn table_mu(s: &SpaceRef, col: [Rat; 4]) -> ProbabilityMeasure {
    let [xya, zta, xybc, ztbc] = col;
    ProbabilityMeasure::new(s.clone(), vec![xya, xybc, zta, ztbc]).unwrap()
}

fn mus(s: &SpaceRef) -> [ProbabilityMeasure; 4] {
    [
        table_mu(s, [r(1, 5), r(1, 10), r(0, 1), r(7, 10)]),
        table_mu(s, [r(2, 5), r(1, 5), r(1, 5), r(1, 5)]),
        table_mu(s, [r(1, 4), r(0, 1), r(1, 4), r(1, 2)]),
        table_mu(s, [r(0, 1), r(3, 10), r(2, 5), r(3, 10)]),
    ]
}

fn atoms(s: &SpaceRef, idx: &[usize]) -> Bits {
    Bits::from_indices(s.atom_count(), idx.iter().copied())
}

fn table(s: &SpaceRef, kind: MeasureKind, vals: &[Rat]) -> UncertaintyMeasure {
    UncertaintyMeasure::tabulated(s.clone(), kind, vals.to_vec()).unwrap()
}

#[test]
fn envelope_values_from_the_worked_example() {
    let s = xm();
    let [m1, m2, m3, m4] = mus(&s);
    let p1 = UncertaintyMeasure::upper_envelope(vec![m1, m2]).unwrap();
    let p2 = UncertaintyMeasure::upper_envelope(vec![m3, m4]).unwrap();
    // {x,y} x {a}
    assert_eq!(p1.value(&atoms(&s, &[0])), r(2, 5));
    // X x {a}
    assert_eq!(p1.value(&atoms(&s, &[0, 2])), r(3, 5));
    assert_eq!(p1.value(&atoms(&s, &[1, 3])), r(7, 10));
    assert_eq!(p1.value(&atoms(&s, &[3])), r(7, 10));
    assert_eq!(p2.value(&atoms(&s, &[0, 2])), r(3, 10));
    assert_eq!(p1.value(&atoms(&s, &[])), Rat::zero());
}

#[test]
fn eval_rejects_foreign_sets() {
    let s = xm();
    let [m1, ..] = mus(&s);
    let m = UncertaintyMeasure::probability(m1);
    let other = discrete(2);
    assert!(m.eval(&MeasurableSet::carrier(other)).is_err());
    assert_eq!(m.eval(&MeasurableSet::carrier(s)).unwrap(), Rat::one());
}

#[test]
fn mass_readings() {
    let s = discrete(2);
    let focal = vec![(atoms(&s, &[0]), r(1, 2)), (atoms(&s, &[0, 1]), r(1, 2))];
    let pl = UncertaintyMeasure::from_mass(s.clone(), focal.clone(), MassReading::Plausibility).unwrap();
    let bel = UncertaintyMeasure::from_mass(s.clone(), focal, MassReading::Belief).unwrap();
    assert_eq!(pl.value(&atoms(&s, &[1])), r(1, 2));
    assert_eq!(bel.value(&atoms(&s, &[1])), Rat::zero());
    assert_eq!(pl.value(&atoms(&s, &[0])), Rat::one());
    assert_eq!(bel.value(&atoms(&s, &[0])), r(1, 2));
    assert!(pl.dual().pointwise_eq(&bel).unwrap());
}

#[test]
fn vacuous_mass_and_flat_distribution() {
    let s = discrete(3);
    let pl = UncertaintyMeasure::from_mass(s.clone(), vec![(Bits::full(3), Rat::one())], MassReading::Plausibility)
        .unwrap();
    let bel = pl.dual();
    let poss = UncertaintyMeasure::from_poss_dist(s.clone(), vec![Rat::one(); 3], PossReading::Possibility).unwrap();
    for m in 0..8u64 {
        let u = Bits::from_mask(3, m);
        let want_pl = if m == 0 { Rat::zero() } else { Rat::one() };
        let want_bel = if m == 7 { Rat::one() } else { Rat::zero() };
        assert_eq!(pl.value(&u), want_pl);
        assert_eq!(poss.value(&u), want_pl);
        assert_eq!(bel.value(&u), want_bel);
    }
}

#[test]
fn malformed_representations_are_rejected() {
    let s = discrete(2);
    assert_eq!(UncertaintyMeasure::upper_envelope(vec![]), Err(MeasureError::EmptyFamily));
    assert!(UncertaintyMeasure::from_mass(s.clone(), vec![(Bits::empty(2), Rat::one())], MassReading::Belief).is_err());
    assert!(UncertaintyMeasure::from_mass(s.clone(), vec![(Bits::full(2), r(1, 2))], MassReading::Belief).is_err());
    assert!(UncertaintyMeasure::from_poss_dist(s.clone(), vec![r(1, 2), r(1, 2)], PossReading::Possibility).is_err());
    assert!(ProbabilityMeasure::new(s.clone(), vec![r(1, 2), r(1, 3)]).is_err());
    assert!(ProbabilityMeasure::new(s.clone(), vec![r(3, 2), r(-1, 2)]).is_err());
    let mixed = vec![ProbabilityMeasure::dirac(s, 0), ProbabilityMeasure::dirac(discrete(3), 0)];
    assert!(UncertaintyMeasure::upper_envelope(mixed).is_err());
}

#[test]
fn dual_flips_kind_and_is_an_involution() {
    let s = xm();
    let [m1, m2, ..] = mus(&s);
    let up = UncertaintyMeasure::upper_envelope(vec![m1.clone(), m2]).unwrap();
    let low = up.dual();
    assert_eq!(low.kind(), MeasureKind::Lower);
    for m in 0..16u64 {
        let u = Bits::from_mask(4, m);
        assert_eq!(up.value(&u), low.value(&u.complement()).complement());
    }
    assert!(low.dual().pointwise_eq(&up).unwrap());
    let p = UncertaintyMeasure::probability(m1);
    assert!(p.dual().pointwise_eq(&p).unwrap());
    let t = up.tabulate().unwrap();
    assert_eq!(t.dual().kind(), MeasureKind::Lower);
    assert!(t.dual().pointwise_eq(&low).unwrap());
}

#[test]
fn probability_checks() {
    let s = xm();
    let [m1, ..] = mus(&s);
    assert!(is_probability(&UncertaintyMeasure::probability(m1)).unwrap().holds());
    let two = discrete(2);
    let g = table(&two, MeasureKind::Upper, &[r(0, 1), r(3, 4), r(3, 4), r(1, 1)]);
    assert!(!is_probability(&g).unwrap().holds());
    let d = UncertaintyMeasure::probability(ProbabilityMeasure::dirac(two, 1));
    assert!(is_probability(&d).unwrap().holds());
}

#[test]
fn lp_accepts_segment_credal_set() {
    let s = discrete(2);
    let g = table(&s, MeasureKind::Upper, &[r(0, 1), r(3, 4), r(3, 4), r(1, 1)]);
    match is_upper_probability_lp(&g).unwrap() {
        UpperVerdict::Upper { witness } => {
            let mut w: Vec<Vec<Rat>> = witness.iter().map(|p| p.weights().to_vec()).collect();
            w.sort();
            assert_eq!(w, vec![vec![r(1, 4), r(3, 4)], vec![r(3, 4), r(1, 4)]]);
            let env = UncertaintyMeasure::upper_envelope(witness).unwrap();
            assert!(env.pointwise_eq(&g).unwrap());
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn lp_rejects_empty_credal_set_and_slack() {
    let s = discrete(2);
    let g = table(&s, MeasureKind::Upper, &[r(0, 1), r(1, 4), r(1, 4), r(1, 1)]);
    assert_eq!(is_upper_probability_lp(&g).unwrap(), UpperVerdict::EmptyCredalSet);
    // nonempty credal set, but g({1}) = 1 cannot be reached under g({1,2}) = 1/2
    let s3 = discrete(3);
    let mut vals = vec![Rat::one(); 8];
    vals[0] = Rat::zero();
    vals[0b011] = r(1, 2);
    let g = table(&s3, MeasureKind::Upper, &vals);
    assert!(matches!(is_upper_probability_lp(&g).unwrap(), UpperVerdict::NotTight { .. }));
}

#[test]
fn envelopes_pass_the_lp() {
    let s = xm();
    let [m1, m2, m3, m4] = mus(&s);
    for fam in [vec![m1.clone(), m2], vec![m3, m4], vec![m1]] {
        let g = UncertaintyMeasure::upper_envelope(fam).unwrap();
        match is_upper_probability_lp(&g).unwrap() {
            UpperVerdict::Upper { witness } => {
                assert!(UncertaintyMeasure::upper_envelope(witness).unwrap().pointwise_eq(&g).unwrap())
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(find_cover_violation(&g, 3).unwrap(), None);
    }
}

#[test]
fn cover_violation_for_small_g() {
    let s = discrete(2);
    let g = table(&s, MeasureKind::Upper, &[r(0, 1), r(1, 4), r(1, 4), r(1, 1)]);
    let w = find_cover_violation(&g, 2).unwrap().expect("violation");
    assert_eq!(w.seq, vec![atoms(&s, &[0]), atoms(&s, &[1])]);
    assert_eq!(w.target, Bits::full(2));
    assert!(covers(2, &w.target, &w.seq, w.n, w.k));
    assert_eq!(w.lhs, Rat::one());
    assert_eq!(w.rhs, r(1, 2));
}

#[test]
fn nk_cover_examples() {
    let s = discrete(3);
    let set = |idx: &[usize]| MeasurableSet::from_atoms(s.clone(), atoms(&s, idx));
    let (u, v) = (set(&[0]), set(&[1, 2]));
    let uv = set(&[0, 1, 2]);
    assert!(is_nk_cover(&uv, &[u.clone(), v.clone()], 1, 0).unwrap());
    assert!(is_nk_cover(&uv, &[uv.clone()], 0, 1).unwrap());
    assert!(!is_nk_cover(&u, &[u.clone()], 0, 1).unwrap());
    assert!(!is_nk_cover(&uv, &[u.clone()], 1, 0).unwrap());
}

#[test]
fn plausibility_checks() {
    let s = discrete(2);
    let g = table(&s, MeasureKind::Plausibility, &[r(0, 1), r(1, 4), r(1, 4), r(1, 1)]);
    match is_plausibility(&g, None).unwrap() {
        Verdict::Fails { sets, .. } => assert_eq!(sets.len(), 2),
        Verdict::Holds => panic!("should fail"),
    }
    let p = UncertaintyMeasure::probability(ProbabilityMeasure::new(s.clone(), vec![r(1, 2), r(1, 2)]).unwrap());
    assert!(is_plausibility(&p, None).unwrap().holds());
    let focal = vec![(atoms(&s, &[0]), r(1, 2)), (atoms(&s, &[0, 1]), r(1, 2))];
    let pl = UncertaintyMeasure::from_mass(s, focal, MassReading::Plausibility).unwrap();
    assert!(is_plausibility(&pl, None).unwrap().holds());
}

#[test]
fn possibility_checks() {
    let s = discrete(2);
    let poss = UncertaintyMeasure::from_poss_dist(s.clone(), vec![r(1, 1), r(1, 3)], PossReading::Possibility).unwrap();
    assert!(is_possibility(&poss).unwrap().holds());
    assert_eq!(poss.value(&atoms(&s, &[1])), r(1, 3));
    let p = UncertaintyMeasure::probability(ProbabilityMeasure::new(s.clone(), vec![r(1, 2), r(1, 2)]).unwrap());
    assert!(!is_possibility(&p).unwrap().holds());
    let d = UncertaintyMeasure::probability(ProbabilityMeasure::dirac(s, 0));
    assert!(is_possibility(&d).unwrap().holds());
}

#[test]
fn pushforward_examples() {
    let x = discrete(2);
    let y = Arc::new(Space::discrete("Y", labels(&["u"])).unwrap());
    let mu = UncertaintyMeasure::probability(ProbabilityMeasure::new(x.clone(), vec![r(1, 3), r(2, 3)]).unwrap());
    let pushed = mu.pushforward(y.clone(), &[0, 0]).unwrap();
    assert_eq!(pushed.value(&Bits::full(1)), Rat::one());
    let same = mu.pushforward(x.clone(), &[0, 1]).unwrap();
    assert!(same.pointwise_eq(&mu).unwrap());

    let s = xm();
    let [m1, m2, ..] = mus(&s);
    let env = UncertaintyMeasure::upper_envelope(vec![m1.clone(), m2.clone()]).unwrap();
    // collapse M onto a two-point space {a}, {bc}
    let x4 = Space::generate("X", labels(&["x", "y", "z", "t"]), &[labels(&["x", "y"])]).unwrap();
    let m2s = Space::discrete("N", labels(&["a", "bc"])).unwrap();
    let target = Arc::new(product_space(&x4, &m2s));
    let map: Vec<usize> = (0..12).map(|p| (p / 3) * 2 + usize::from(p % 3 != 0)).collect();
    let via_env = env.pushforward(target.clone(), &map).unwrap();
    let fam: Vec<ProbabilityMeasure> = [m1, m2]
        .into_iter()
        .map(|m| match UncertaintyMeasure::probability(m).pushforward(target.clone(), &map).unwrap().repr() {
            MeasureRepr::Probability(p) => p.clone(),
            _ => unreachable!(),
        })
        .collect();
    let env_of_pushed = UncertaintyMeasure::upper_envelope(fam).unwrap();
    assert!(via_env.pointwise_eq(&env_of_pushed).unwrap());
}

#[test]
fn pushforward_detects_non_measurable_maps() {
    let x = discrete(2);
    let y = Arc::new(Space::generate("Y", labels(&["u", "v"]), &[]).unwrap());
    // source is discrete, target trivial: always measurable
    let mu = UncertaintyMeasure::probability(ProbabilityMeasure::dirac(x.clone(), 0));
    assert!(mu.pushforward(y.clone(), &[0, 1]).is_ok());
    // trivial source, discrete target: splitting the only atom fails
    let nu = UncertaintyMeasure::probability(ProbabilityMeasure::dirac(y, 0));
    assert!(matches!(nu.pushforward(x, &[0, 1]), Err(MeasureError::NotMeasurable { .. })));
}

#[test]
fn pushforward_preserves_every_representation() {
    let x = discrete(3);
    let y = discrete(2);
    let map = [0, 1, 1];
    let focal = vec![(atoms(&x, &[0, 1]), r(1, 3)), (atoms(&x, &[2]), r(1, 3)), (atoms(&x, &[1]), r(1, 3))];
    let ms = [
        UncertaintyMeasure::from_mass(x.clone(), focal, MassReading::Plausibility).unwrap(),
        UncertaintyMeasure::from_poss_dist(x.clone(), vec![r(1, 2), r(1, 1), r(1, 4)], PossReading::Necessity).unwrap(),
    ];
    for m in ms {
        let direct = m.pushforward(y.clone(), &map).unwrap();
        let via_table = m.tabulate().unwrap().pushforward(y.clone(), &map).unwrap();
        assert!(direct.pointwise_eq(&via_table).unwrap());
        for mask in 0..4u64 {
            let u = Bits::from_mask(2, mask);
            let pre = Bits::from_indices(3, (0..3).filter(|&a| u.contains(map[a])));
            assert_eq!(direct.value(&u), m.value(&pre));
        }
    }
}

/// Brute-force check of the inclusion-exclusion inequality on ordered
/// tuples with repetition, used to confirm the distinct-set search.
fn plausible_by_brute_force(vals: &[Rat], n: usize) -> bool {
    let size = vals.len();
    let full = size - 1;
    let mut idx = vec![0usize; n];
    loop {
        let inter = idx.iter().fold(full, |a, &u| a & u);
        if vals[inter] > verify::inclusion_exclusion(vals, &idx) {
            return false;
        }
        let mut i = 0;
        loop {
            if i == n {
                return true;
            }
            idx[i] += 1;
            if idx[i] < size {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

#[test]
fn distinct_sets_agree_with_repeated_tuples() {
    // every normalized monotone-ish table on 2 atoms over a quarter grid,
    // and a sample on 3 atoms
    let grid: Vec<Rat> = (0..=4).map(|i| r(i, 4)).collect();
    let s = discrete(2);
    for a in &grid {
        for b in &grid {
            let vals = vec![Rat::zero(), a.clone(), b.clone(), Rat::one()];
            let g = table(&s, MeasureKind::Plausibility, &vals);
            let fast = is_plausibility(&g, None).unwrap().holds();
            assert_eq!(fast, plausible_by_brute_force(&vals, 3), "{vals:?}");
        }
    }
    let s3 = discrete(3);
    let half: Vec<Rat> = (0..=2).map(|i| r(i, 2)).collect();
    let mut count = 0;
    for code in 0..3usize.pow(6) {
        let mut vals = vec![Rat::zero(); 8];
        vals[7] = Rat::one();
        let mut c = code;
        for v in vals.iter_mut().take(7).skip(1) {
            *v = half[c % 3].clone();
            c /= 3;
        }
        let g = table(&s3, MeasureKind::Plausibility, &vals);
        let fast = is_plausibility(&g, None).unwrap().holds();
        assert_eq!(fast, plausible_by_brute_force(&vals, 3), "{vals:?}");
        count += usize::from(fast);
    }
    assert!(count > 0);
}
