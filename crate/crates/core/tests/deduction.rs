use std::path::PathBuf;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use uncml_core::deduction::{
    gen_cover_rule_instance, random_coalgebra, random_probes, run_harness, soundness_harness, Derived, Domain,
    HarnessConfig, InstanceGen, RandomSizes, Schema,
};
use uncml_core::functors::{DeltaKind, FunctorExpr};
use uncml_core::logic::Formula;
use uncml_core::models::{load_model, save_model};
use uncml_core::rational::Rat;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Compares against a stored file; `UNCML_BLESS=1` rewrites it.
fn golden(name: &str, got: &str) {
    let path = fixture(name);
    if std::env::var_os("UNCML_BLESS").is_some() {
        std::fs::write(&path, got).unwrap();
    }
    let want = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(got, want, "{name}");
}

fn grid() -> Vec<Rat> {
    (0..=12).map(|i| Rat::new(i, 12)).collect()
}

#[test]
fn fixed_seed_models_match_their_golden_files() {
    let up = random_coalgebra(&"Upper(Id)".parse().unwrap(), 2, 4);
    assert_eq!(up.state().point_count(), 2);
    let text = save_model(&up).unwrap();
    assert!(text.contains("env("));
    golden("upper_id_seed4.model", &text);
    assert_eq!(load_model(&text).unwrap(), up);

    let ps = random_coalgebra(&"Poss(Const(M))".parse().unwrap(), 3, 2);
    let text = save_model(&ps).unwrap();
    assert!(text.contains("poss "));
    golden("poss_const_seed2.model", &text);
    assert_eq!(load_model(&text).unwrap(), ps);
}

#[test]
fn single_state_models() {
    for seed in 0..5 {
        let m = random_coalgebra(&"Plaus(Id * Const(M))".parse().unwrap(), 1, seed);
        assert_eq!(m.state().point_count(), 1);
        assert_eq!(m.state().atom_count(), 1);
    }
}

#[test]
fn harness_reports_are_reproducible() {
    let t: FunctorExpr = "Plaus(Id + Const(M))".parse().unwrap();
    let a = soundness_harness(&t, 12, 99);
    let b = soundness_harness(&t, 12, 99);
    assert_eq!(a, b);
    assert_eq!(a.to_string(), b.to_string());
    let c = soundness_harness(&t, 12, 100);
    assert_ne!(a.counts, c.counts);
}

#[test]
fn derived_principles_hold_for_every_kind() {
    let names: Vec<String> = Derived::ALL.iter().map(|d| d.name().to_string()).collect();
    for t in ["Upper(Id)", "Prob(Id * Const(M))", "Plaus(Id)", "Poss(Id + Id)"] {
        let t: FunctorExpr = t.parse().unwrap();
        let mut cfg = HarnessConfig::new(15, 5);
        cfg.only = Some(names.clone());
        let rep = run_harness(&t, &cfg);
        assert!(rep.is_sound(), "{rep}");
        let FunctorExpr::Delta(kind, _) = &t else { unreachable!() };
        for d in Derived::ALL.iter().filter(|d| d.applies(*kind)) {
            assert!(rep.counts.get(d.name()).is_some_and(|&n| n > 0), "{} at {t}", d.name());
        }
    }
}

#[test]
fn mutant_is_caught_for_every_kind() {
    for (t, id) in [("Upper(Id)", "6a!"), ("Prob(Id)", "8a!"), ("Plaus(Id)", "9a!"), ("Poss(Id)", "10a!")] {
        let mut cfg = HarnessConfig::new(100, 8);
        cfg.only = Some(Vec::new());
        cfg.mutant = true;
        let rep = run_harness(&t.parse().unwrap(), &cfg);
        assert!(rep.violations.iter().any(|v| v.source == id), "{t}: {rep}");
        assert!(rep.violations.iter().all(|v| v.source == id));
    }
}

fn functor_strategy() -> impl Strategy<Value = FunctorExpr> {
    prop::sample::select(vec![
        "Upper(Id * Const(M))",
        "Prob(Id)",
        "Plaus(Id + Const(M))",
        "Poss(Id * Id)",
        "Upper(Prob(Id))",
    ])
    .prop_map(|s| s.parse().unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generated_axiom_instances_are_valid(t in functor_strategy(), size in 1usize..=4, seed in any::<u64>()) {
        let m = random_coalgebra(&t, size, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let probes = random_probes(&mut rng, &m, 2, &RandomSizes::default());
        let dom = Domain::new(&m, &probes);
        let ig = InstanceGen::new(m.signature(), grid(), 2);
        for s in m.signature().sorts() {
            for schema in Schema::ALL.into_iter().filter(|x| x.applies(s)) {
                let Some((b, f)) = ig.instance(&mut rng, schema, s) else { continue };
                prop_assert_eq!(&f.sort, s);
                if let Schema::LeLt(_) = schema {
                    prop_assert!(b.rats[0] < b.rats[1]);
                }
                prop_assert!(dom.counterexample(&f.formula, s).is_none(), "{} at {}: {}", schema.id(), s, f.formula);
            }
        }
    }

    #[test]
    fn subadditivity_covers_are_sound(size in 1usize..=5, seed in any::<u64>(), p1 in 0i64..=6, p2 in 0i64..=6) {
        let t: FunctorExpr = "Upper(Id)".parse().unwrap();
        let m = random_coalgebra(&t, size, seed);
        let dom = Domain::new(&m, &[]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ig = InstanceGen::new(m.signature(), grid(), 1);
        let a = ig.gen.formula(&mut rng, &FunctorExpr::Id, 1);
        let b = Formula::and(ig.gen.formula(&mut rng, &FunctorExpr::Id, 1), Formula::not(a.clone()));
        let whole = Formula::or(a.clone(), b.clone());
        let (p1, p2) = (Rat::new(p1, 6), Rat::new(p2, 6));
        let ri = gen_cover_rule_instance(&dom, DeltaKind::Upper, &FunctorExpr::Id, Some(&whole), &[a, b], 1, 0, &[p1.clone(), p2.clone()]).unwrap();
        prop_assert_eq!(ri.cover.as_ref().unwrap().p.clone(), Some((p1 + p2).clamp_unit()));
        if ri.premises.iter().all(|p| dom.holds(p)) {
            prop_assert!(dom.holds(&ri.conclusion), "{ri}");
        }
    }
}
