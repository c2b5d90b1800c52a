//! One PASS/FAIL line per acceptance criterion; the test fails if any does.
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use uncml_core::deduction::{run_harness, HarnessConfig};
use uncml_core::functors::FunctorExpr;
use uncml_core::logic::{Formula, FormulaGen};
use uncml_core::measures::{
    find_cover_violation, is_plausibility, is_possibility, is_probability, is_upper_probability_lp, MassReading,
    MeasureKind, PossReading, ProbabilityMeasure, UncertaintyMeasure, UpperVerdict,
};
use uncml_core::models::{check_morphism, load_map, load_model, save_model, Coalgebra, MorphismVerdict};
use uncml_core::rational::Rat;
use uncml_core::semantics::{attained_grid, Checker, Interpretation};
use uncml_core::spaces::{Bits, Space, SpaceRef};

type Outcome = Result<String, String>;

fn models_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

fn corpus_model(name: &str) -> Coalgebra {
    load_model(&std::fs::read_to_string(models_dir().join(name)).unwrap()).unwrap()
}

fn r(n: i64, d: i64) -> Rat {
    Rat::new(n, d)
}

fn space(n: usize) -> SpaceRef {
    Arc::new(Space::discrete("S", (0..n).map(|i| format!("s{i}")).collect()).unwrap())
}

fn set(n: usize, mask: usize) -> Bits {
    Bits::from_mask(n, mask as u64)
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---- 1: worked example

/// The two probabilities behind each transition, as weights on the cells
/// ({x,y}×{a}, {z,t}×{a}, {x,y}×{b,c}, {z,t}×{b,c}).
fn example_table() -> [[[Rat; 4]; 2]; 2] {
    [
        [[r(1, 5), r(1, 10), r(0, 1), r(7, 10)], [r(2, 5), r(1, 5), r(1, 5), r(1, 5)]],
        [[r(1, 4), r(0, 1), r(1, 4), r(1, 2)], [r(0, 1), r(3, 10), r(2, 5), r(3, 10)]],
    ]
}

/// Max over the family of the summed cells.
fn max_of_sums(family: &[[Rat; 4]; 2], cells: &[usize]) -> Rat {
    family.iter().map(|p| cells.iter().map(|&c| p[c].clone()).sum::<Rat>()).max().unwrap()
}

fn criterion_1() -> Outcome {
    let m = corpus_model("paper_example.model");
    let sig = m.signature();
    let c = Checker::new(&m);
    let cm: FunctorExpr = "Const(M)".parse().unwrap();
    let prod: FunctorExpr = "Id * Const(M)".parse().unwrap();

    let not_bc = c.points(&sig.parse("!{b,c}", Some(&cm)).unwrap().formula, &cm);
    let msp = m.universe().space(&cm).unwrap();
    check(msp.describe_points(&not_bc) == "{a}", || format!("!{{b,c}} gives {}", msp.describe_points(&not_bc)))?;

    let pr2 = sig.parse("[pr2]!{b,c}", Some(&prod)).unwrap();
    let psp = m.universe().space(&prod).unwrap();
    let Interpretation::Set { points, .. } = c.interpret(&pr2) else { return Err("[pr2]!{b,c} not a set".into()) };
    // X×{a}: the first point of M is a, and product points are row-major
    let want = Bits::from_indices(psp.point_count(), (0..4).map(|i| i * 3));
    check(points == want, || format!("[pr2]!{{b,c}} gives {}", psp.describe_points(&points)))?;

    let table = example_table();
    let (xa, xbc) = (&[0usize, 1][..], &[2usize, 3][..]);
    let p1 = &m.measure("P1").unwrap().elem;
    let a = sig.parse("[pr2]!{b,c}", Some(&prod)).unwrap().formula;
    let bc = sig.parse("[pr2]{b,c}", Some(&prod)).unwrap().formula;
    let (va, _) = c.measure_value(p1, &a, &prod).unwrap();
    let (vbc, _) = c.measure_value(p1, &bc, &prod).unwrap();
    check(va == r(3, 5) && va == max_of_sums(&table[0], xa), || format!("P1*(X×{{a}}) = {va}"))?;
    check(vbc == r(7, 10) && vbc == max_of_sums(&table[0], xbc), || format!("P1*(X×{{b,c}}) = {vbc}"))?;

    // [(p,q)]φ at a transition: upper value of φ at least p, lower value
    // (one minus the upper value of the complement) at least q
    let (p, q) = (r(1, 2), r(2, 5));
    let transition = [0usize, 0, 1, 1];
    let oracle: Vec<usize> = (0..4)
        .filter(|&x| {
            let fam = &table[transition[x]];
            max_of_sums(fam, xa) >= p && Rat::one() - max_of_sums(fam, xbc) >= q
        })
        .collect();
    let f = sig.parse("[next][(1/2,2/5)][pr2]!{b,c}", Some(&FunctorExpr::Id)).unwrap();
    let got = c.points(&f.formula, &FunctorExpr::Id);
    let xs = m.state();
    check(got == Bits::from_indices(4, oracle.iter().copied()), || {
        format!("final formula gives {}", xs.describe_points(&got))
    })?;
    Ok(format!(
        "final formula = {} (oracle agrees; a hand reading of this example gives {{x,y}}, \
         which would need P1*(X×{{b,c}}) <= 3/5 but it is 7/10)",
        xs.describe_points(&got)
    ))
}

// ---- 2, 4: seeded credal sets

fn random_credal(rng: &mut ChaCha8Rng) -> (usize, Vec<Vec<Rat>>) {
    let n = rng.gen_range(1..=4);
    let members = rng.gen_range(1..=3);
    let fam = (0..members)
        .map(|_| loop {
            let w: Vec<i64> = (0..n).map(|_| rng.gen_range(0..=6)).collect();
            let total: i64 = w.iter().sum();
            if total > 0 {
                break w.iter().map(|&x| r(x, total)).collect();
            }
        })
        .collect();
    (n, fam)
}

fn credal_sets() -> Vec<(usize, Vec<Vec<Rat>>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..50).map(|_| random_credal(&mut rng)).collect()
}

fn envelope(n: usize, fam: &[Vec<Rat>]) -> UncertaintyMeasure {
    let sp = space(n);
    UncertaintyMeasure::upper_envelope(fam.iter().map(|w| ProbabilityMeasure::new(sp.clone(), w.clone()).unwrap()).collect())
        .unwrap()
}

fn criterion_2() -> Outcome {
    for (i, (n, fam)) in credal_sets().iter().enumerate() {
        let g = envelope(*n, fam);
        match is_upper_probability_lp(&g).map_err(|e| e.to_string())? {
            UpperVerdict::Upper { witness } => {
                let back = UncertaintyMeasure::upper_envelope(witness).unwrap();
                check(back.pointwise_eq(&g).unwrap(), || format!("set {i}: witness envelope differs"))?;
            }
            other => return Err(format!("set {i}: {other:?}")),
        }
    }
    Ok("50 credal sets, witnesses reproduce the envelopes".into())
}

fn criterion_4() -> Outcome {
    let mut checked = 0;
    for (i, (n, fam)) in credal_sets().iter().enumerate() {
        let n = *n;
        let g = envelope(n, fam);
        let low = g.dual();
        let full = (1usize << n) - 1;
        let up = |m: usize| g.value(&set(n, m));
        let lo = |m: usize| low.value(&set(n, m));
        check(up(0) == Rat::zero() && up(full) == Rat::one(), || format!("set {i}: (1) upper"))?;
        check(lo(0) == Rat::zero() && lo(full) == Rat::one(), || format!("set {i}: (1) lower"))?;
        for u in 0..=full {
            check(up(u) == Rat::one() - lo(full ^ u), || format!("set {i}: (5) at {u:b}"))?;
            for v in 0..=full {
                if u & v == 0 {
                    check(up(u | v) <= up(u) + up(v), || format!("set {i}: (2) at {u:b},{v:b}"))?;
                    check(lo(u | v) >= lo(u) + lo(v), || format!("set {i}: (3) at {u:b},{v:b}"))?;
                }
                if u & v == u {
                    check(up(u) <= up(v) && lo(u) <= lo(v), || format!("set {i}: (4) at {u:b},{v:b}"))?;
                }
                checked += 1;
            }
        }
    }
    Ok(format!("50 envelopes, {checked} set pairs"))
}

// ---- 3

fn criterion_3() -> Outcome {
    let grid: Vec<Rat> = (0..=4).map(|i| r(i, 4)).collect();
    let (mut upper, mut total) = (0, 0);
    for a in &grid {
        for b in &grid {
            let g = UncertaintyMeasure::tabulated(space(2), MeasureKind::Upper, vec![Rat::zero(), a.clone(), b.clone(), Rat::one()])
                .unwrap();
            let lp = is_upper_probability_lp(&g).unwrap().holds();
            let cover = find_cover_violation(&g, 4).unwrap().is_some();
            check(lp != cover, || format!("g({{s0}})={a}, g({{s1}})={b}: lp {lp}, cover violation {cover}"))?;
            upper += lp as usize;
            total += 1;
        }
    }
    Ok(format!("{total} set functions agree, {upper} upper probabilities"))
}

// ---- 5

/// Every vector of `len` numerators in 0..=den summing to `den`.
fn compositions(len: usize, den: i64) -> Vec<Vec<i64>> {
    if len == 0 {
        return if den == 0 { vec![Vec::new()] } else { Vec::new() };
    }
    let mut out = Vec::new();
    for first in 0..=den {
        for mut rest in compositions(len - 1, den - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn criterion_5() -> Outcome {
    let (mut poss, mut plaus, mut prob) = (0, 0, 0);
    for (n, den) in [(2usize, 4i64), (3, 2)] {
        let sigma = 1usize << n;
        // possibility distributions with values on the grid and maximum 1
        for code in 0..(den as usize + 1).pow(n as u32) {
            let dist: Vec<Rat> = (0..n).map(|i| r((code / (den as usize + 1).pow(i as u32) % (den as usize + 1)) as i64, den)).collect();
            if !dist.iter().any(Rat::is_one) {
                continue;
            }
            let g = UncertaintyMeasure::from_poss_dist(space(n), dist.clone(), PossReading::Possibility).unwrap();
            check(is_possibility(&g).unwrap().holds(), || format!("{dist:?} not a possibility"))?;
            check(is_plausibility(&g, Some(sigma)).unwrap().holds(), || format!("possibility {dist:?} not a plausibility"))?;
            poss += 1;
        }
        // mass functions over the nonempty sets
        for masses in compositions(sigma - 1, den) {
            let focal: Vec<(Bits, Rat)> =
                masses.iter().enumerate().filter(|(_, &w)| w > 0).map(|(i, &w)| (set(n, i + 1), r(w, den))).collect();
            let g = UncertaintyMeasure::from_mass(space(n), focal, MassReading::Plausibility).unwrap();
            check(is_upper_probability_lp(&g).unwrap().holds(), || format!("mass {masses:?} not an upper probability"))?;
            plaus += 1;
        }
        for weights in compositions(n, den) {
            let p = ProbabilityMeasure::new(space(n), weights.iter().map(|&w| r(w, den)).collect()).unwrap();
            let g = UncertaintyMeasure::probability(p);
            let dirac = weights.iter().filter(|&&w| w > 0).count() == 1;
            let all = is_probability(&g).unwrap().holds()
                && is_possibility(&g).unwrap().holds() == dirac
                && is_plausibility(&g, Some(sigma)).unwrap().holds()
                && is_upper_probability_lp(&g).unwrap().holds();
            check(all, || format!("probability {weights:?} misplaced"))?;
            check(g.dual().pointwise_eq(&g).unwrap(), || format!("probability {weights:?} differs from its dual"))?;
            prob += 1;
        }
    }
    Ok(format!("{poss} possibilities, {plaus} mass functions, {prob} probabilities"))
}

// ---- 6

fn criterion_6() -> Outcome {
    let mut lines = Vec::new();
    for t in ["Upper(Id * Const(M))", "Prob(Id)", "Plaus(Id + Const(M))", "Poss(Id * Id)"] {
        let rep = run_harness(&t.parse().unwrap(), &HarnessConfig::new(100, 7));
        check(rep.is_sound(), || format!("{t}: {rep}"))?;
        lines.push(format!("{t}: {} instances", rep.total()));
    }
    let mut cfg = HarnessConfig::new(100, 7);
    cfg.only = Some(Vec::new());
    cfg.mutant = true;
    let rep = run_harness(&"Upper(Id * Const(M))".parse().unwrap(), &cfg);
    let caught = rep.violations.iter().filter(|v| v.source == "6a!").count();
    check(caught >= 1, || "corrupted 6a not caught".into())?;
    lines.push(format!("corrupted 6a caught {caught} times"));
    Ok(lines.join("; "))
}

// ---- 7

fn criterion_7() -> Outcome {
    let src = corpus_model("paper_example.model");
    let dst = corpus_model("paper_quotient.model");
    let map = load_map("map { x: u; y: u; z: v; t: v; }", &src, &dst).map_err(|e| e.to_string())?;

    let grid = attained_grid(&src);
    let gen = FormulaGen::new(src.signature(), grid.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    let mut battery = Vec::new();
    for s in src.signature().sorts() {
        for _ in 0..40 {
            let f = gen.formula(&mut rng, s, 3);
            battery.push(src.signature().sort_check(&f, Some(s)).map_err(|e| e.to_string())?);
        }
    }
    let rep = check_morphism(&map, &src, &dst, &battery).map_err(|e| e.to_string())?;
    check(matches!(rep.verdict, MorphismVerdict::Morphism), || rep.verdict.to_string())?;

    let (cs, cd) = (Checker::new(&src), Checker::new(&dst));
    let id = FunctorExpr::Id;
    let des = |c: &Checker, m: &Coalgebra, p: usize| c.description_set(&m.universe().element_at(&id, p), &id, 3, &grid).formulas;
    let d: Vec<Vec<Formula>> = (0..4).map(|p| des(&cs, &src, p)).collect();
    let q: Vec<Vec<Formula>> = (0..2).map(|p| des(&cd, &dst, p)).collect();
    check(d[0] == d[1] && d[2] == d[3], || "identified states have different description sets".into())?;
    check(d[0] == q[0] && d[2] == q[1], || "description sets change along the quotient".into())?;
    check(d[0] != d[2], || "the quotient classes are not separated".into())?;
    Ok(format!(
        "{} formulas preserved; description sets of {} and {} formulas over a {}-value grid",
        rep.formulas_checked,
        d[0].len(),
        d[2].len(),
        grid.len()
    ))
}

// ---- 8

fn criterion_8() -> Outcome {
    let mut names: Vec<PathBuf> = std::fs::read_dir(models_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "model"))
        .collect();
    names.sort();
    check(names.len() >= 10, || format!("only {} models", names.len()))?;
    let mut formulas = 0;
    for path in &names {
        let text = std::fs::read_to_string(path).unwrap();
        let name = path.file_name().unwrap().to_string_lossy();
        let m = load_model(&text).map_err(|e| format!("{name}: {e}"))?;
        let saved = save_model(&m).map_err(|e| format!("{name}: {e}"))?;
        check(saved == text, || format!("{name}: save differs from the file"))?;
        let again = load_model(&saved).map_err(|e| format!("{name}: {e}"))?;
        check(save_model(&again).unwrap() == saved, || format!("{name}: second save differs"))?;

        let gen = FormulaGen::new(m.signature(), attained_grid(&m));
        let mut rng = ChaCha8Rng::seed_from_u64(formulas as u64);
        for s in m.signature().sorts() {
            for depth in 0..=3 {
                let f = gen.formula(&mut rng, s, depth);
                let printed = f.to_string();
                let back = m.signature().parse(&printed, Some(s)).map_err(|e| format!("{name}: `{printed}`: {e}"))?;
                check(back.formula == f && back.formula.to_string() == printed, || format!("{name}: `{printed}` changes"))?;
                formulas += 1;
            }
        }
    }
    Ok(format!("{} models, {formulas} formulas", names.len()))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("worked example", criterion_1),
        ("envelope characterization", criterion_2),
        ("cover search agrees with the LP", criterion_3),
        ("envelope properties", criterion_4),
        ("hierarchy", criterion_5),
        ("soundness harness", criterion_6),
        ("quotient morphism", criterion_7),
        ("round-trips", criterion_8),
    ];
    let start = Instant::now();
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let secs = || t.elapsed().as_secs_f64();
        match run() {
            Ok(detail) => println!("PASS {} {name} ({:.1}s): {detail}", i + 1, secs()),
            Err(why) => {
                println!("FAIL {} {name} ({:.1}s): {why}", i + 1, secs());
                failed.push(i + 1);
            }
        }
    }
    println!("total {:.1}s", start.elapsed().as_secs_f64());
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
