use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::axioms::{Derived, InstanceGen, Schema};
use super::random::{random_model, random_probes, RandomSizes};
use super::rules::families_at;
use super::{witness, Domain};
use crate::functors::{DeltaKind, EdgeLabel, Element, FunctorExpr};
use crate::logic::Formula;
use crate::models::save_model;
use crate::rational::Rat;

#[derive(Debug, Clone)]
pub struct HarnessConfig {
    pub trials: usize,
    pub seed: u64,
    /// Restrict to these schema ids, rule families and derived principle
    /// names; everything when `None`.
    pub only: Option<Vec<String>>,
    /// Also run the corrupted schema `B<=p f -> B<p f`, reported as `6a!`
    /// (or `8a!`, `9a!`, `10a!`).
    pub mutant: bool,
    pub instances: usize,
    pub probes: usize,
    pub depth: usize,
    pub sizes: RandomSizes,
}

impl HarnessConfig {
    pub fn new(trials: usize, seed: u64) -> Self {
        HarnessConfig {
            trials,
            seed,
            only: None,
            mutant: false,
            instances: 3,
            probes: 3,
            depth: 2,
            sizes: RandomSizes::default(),
        }
    }

    fn wants(&self, name: &str) -> bool {
        self.only.as_ref().is_none_or(|v| v.iter().any(|s| s == name))
    }
}

/// A failed axiom instance or an unsound rule instance, with its witness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub trial: usize,
    /// Schema id, rule name or derived principle name.
    pub source: String,
    pub sort: String,
    pub instance: String,
    /// The element where it fails, in full.
    pub witness: String,
    /// The generated model.
    pub model: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "violation in trial {}: {} at {}", self.trial, self.source, self.sort)?;
        writeln!(f, "  instance: {}", self.instance)?;
        writeln!(f, "  fails at: {}", self.witness)?;
        for line in self.model.lines() {
            writeln!(f, "  | {line}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct TrialReport {
    counts: BTreeMap<String, usize>,
    vacuous: BTreeMap<String, usize>,
    violations: Vec<Violation>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SoundnessReport {
    pub functor: FunctorExpr,
    pub trials: usize,
    pub seed: u64,
    /// Instances checked per schema, rule family or principle.
    pub counts: BTreeMap<String, usize>,
    /// Rule instances whose premises failed in the model.
    pub vacuous: BTreeMap<String, usize>,
    pub violations: Vec<Violation>,
}

impl SoundnessReport {
    pub fn is_sound(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }
}

impl fmt::Display for SoundnessReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "functor {}", self.functor)?;
        writeln!(f, "trials {} seed {}", self.trials, self.seed)?;
        for (name, n) in &self.counts {
            match self.vacuous.get(name) {
                Some(v) => writeln!(f, "  {name:<20} {n:>6} checked ({v} vacuous)")?,
                None => writeln!(f, "  {name:<20} {n:>6} checked")?,
            }
        }
        writeln!(f, "instances {} violations {}", self.total(), self.violations.len())?;
        for v in &self.violations {
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Axiom validity and rule soundness over `trials` random `t`-coalgebras,
/// with the default configuration.
pub fn soundness_harness(t: &FunctorExpr, trials: usize, seed: u64) -> SoundnessReport {
    run_harness(t, &HarnessConfig::new(trials, seed))
}

pub fn run_harness(t: &FunctorExpr, cfg: &HarnessConfig) -> SoundnessReport {
    let trials: Vec<TrialReport> = (0..cfg.trials).into_par_iter().map(|i| trial(t, cfg, i)).collect();
    let mut report = SoundnessReport {
        functor: t.clone(),
        trials: cfg.trials,
        seed: cfg.seed,
        counts: BTreeMap::new(),
        vacuous: BTreeMap::new(),
        violations: Vec::new(),
    };
    for tr in trials {
        for (k, v) in tr.counts {
            *report.counts.entry(k).or_default() += v;
        }
        for (k, v) in tr.vacuous {
            *report.vacuous.entry(k).or_default() += v;
        }
        report.violations.extend(tr.violations);
    }
    report
}

fn grid() -> Vec<Rat> {
    (0..=12).map(|i| Rat::new(i, 12)).collect()
}

fn trial(t: &FunctorExpr, cfg: &HarnessConfig, index: usize) -> TrialReport {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    let size = rng.gen_range(1..=cfg.sizes.points.max(1));
    let model = random_model(&mut rng, t, size, &cfg.sizes);
    let probes = random_probes(&mut rng, &model, cfg.probes, &cfg.sizes);
    let dom = Domain::new(&model, &probes);
    let sig = model.signature();
    let attained = |f: &Formula, inner: &FunctorExpr| -> Vec<Rat> {
        let mut out = Vec::new();
        for kind in DeltaKind::ALL {
            let s = FunctorExpr::delta(kind, inner.clone());
            if !sig.sorts().contains(&s) {
                continue;
            }
            for e in dom.elements(&s) {
                if let Element::Measure(m) = &e {
                    if let Some((v, d)) = dom.checker().measure_value(m, f, inner) {
                        out.push(v);
                        out.push(d);
                    }
                }
            }
        }
        out.sort();
        out.dedup();
        out
    };
    let mut ig = InstanceGen::new(sig, grid(), cfg.depth);
    ig.attained = Some(&attained);
    let mut out = TrialReport::default();
    let model_text = || save_model(&model).unwrap_or_else(|e| format!("(unprintable: {e})"));
    let fail = |out: &mut TrialReport, source: String, s: &FunctorExpr, instance: String, e: &Element| {
        out.violations.push(Violation {
            trial: index,
            source,
            sort: s.to_string(),
            instance,
            witness: witness(&model, e, s),
            model: model_text(),
        });
    };

    for s in sig.sorts() {
        let check = |out: &mut TrialReport, name: String, f: Formula| {
            *out.counts.entry(name.clone()).or_default() += 1;
            if let Some(e) = dom.counterexample(&f, s) {
                fail(out, name, s, f.to_string(), &e);
            }
        };
        for schema in Schema::ALL {
            if !schema.applies(s) || !cfg.wants(&schema.id()) {
                continue;
            }
            for _ in 0..cfg.instances {
                if let Some((_, f)) = ig.instance(&mut rng, schema, s) {
                    check(&mut out, schema.id(), f.formula);
                }
            }
        }
        for d in Derived::ALL {
            if !cfg.wants(d.name()) {
                continue;
            }
            for _ in 0..cfg.instances {
                if let Some(f) = ig.derived(&mut rng, d, s) {
                    check(&mut out, d.name().to_string(), f.formula);
                }
            }
        }
        if let (true, FunctorExpr::Delta(kind, _)) = (cfg.mutant, s) {
            let name = format!("{}!", Schema::LeLt(*kind).id());
            for _ in 0..cfg.instances {
                if let Some(f) = ig.strict_mutant(&mut rng, s) {
                    check(&mut out, name.clone(), f.formula);
                }
            }
        }
        let has_box = sig.graph.edges_from(s).any(|e| !matches!(e.label, EdgeLabel::Index(_)));
        for family in families_at(s, has_box) {
            if !cfg.wants(family) {
                continue;
            }
            for _ in 0..cfg.instances {
                let Some(r) = ig.rule_instance(&mut rng, &dom, family, s) else {
                    continue;
                };
                *out.counts.entry(family.to_string()).or_default() += 1;
                if !r.premises.iter().all(|p| dom.holds(p)) {
                    *out.vacuous.entry(family.to_string()).or_default() += 1;
                    continue;
                }
                if let Some(e) = dom.violates(&r.conclusion) {
                    fail(&mut out, r.rule.name(), &r.conclusion.sort, r.to_string(), &e);
                }
            }
        }
    }
    out
}
