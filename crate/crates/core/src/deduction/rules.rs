use std::fmt;

use itertools::Itertools;
use num_integer::Integer;
use num_bigint::BigInt;
use rand::seq::SliceRandom;
use rand::Rng;

use super::axioms::{ab, InstanceGen};
use super::{bounds, Domain, Sequent};
use crate::functors::{DeltaKind, EdgeLabel, FunctorExpr};
use crate::logic::{Bound, Cmp, Formula, Label};
use crate::measures::is_nk_cover;
use crate::rational::Rat;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rule {
    ModusPonens,
    Cut,
    Deduction,
    /// From `|- f` infer `D>=1 f` at the measure sort.
    Necessitation(DeltaKind),
    Constant,
    DefiniteBox(Label),
    /// A finite slice of the Archimedean rule for one comparator family.
    Archimedean(Bound),
    Cover1(DeltaKind),
    Cover2(DeltaKind),
}

impl Rule {
    pub fn name(&self) -> String {
        match self {
            Rule::ModusPonens => "modus-ponens".into(),
            Rule::Cut => "cut".into(),
            Rule::Deduction => "deduction".into(),
            Rule::Necessitation(k) => format!("necessitation-{}", k.keyword()),
            Rule::Constant => "constant".into(),
            Rule::DefiniteBox(_) => "definite-box".into(),
            Rule::Archimedean(b) => format!("archimedean-{}", b.keyword()),
            Rule::Cover1(k) => format!("cover-1-{}", k.keyword()),
            Rule::Cover2(k) => format!("cover-2-{}", k.keyword()),
        }
    }

    /// The family name, without the measure kind.
    pub fn family(&self) -> &'static str {
        match self {
            Rule::ModusPonens => "modus-ponens",
            Rule::Cut => "cut",
            Rule::Deduction => "deduction",
            Rule::Necessitation(_) => "necessitation",
            Rule::Constant => "constant",
            Rule::DefiniteBox(_) => "definite-box",
            Rule::Archimedean(_) => "archimedean",
            Rule::Cover1(_) => "cover-1",
            Rule::Cover2(_) => "cover-2",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// The side conditions of a cover rule instance, as verified.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverSide {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub ps: Vec<Rat>,
    /// The conclusion's bound; `None` for the second cover rule.
    pub p: Option<Rat>,
    /// `f -> OR_{|I|=n+k} AND_{i in I} f_i`; `None` for the second rule.
    pub target_disjunction: Option<Formula>,
    /// `OR_{|I|=k} AND_{i in I} f_i`.
    pub whole_disjunction: Formula,
}

/// A rule instance: sequent premises and a sequent conclusion. Sound in a
/// model when the conclusion holds whenever all premises do.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleInstance {
    pub rule: Rule,
    pub premises: Vec<Sequent>,
    pub conclusion: Sequent,
    pub cover: Option<CoverSide>,
}

impl fmt::Display for RuleInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ps: Vec<String> = self.premises.iter().map(|p| p.to_string()).collect();
        write!(f, "{}: [{}] => {}", self.rule, ps.join("; "), self.conclusion)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverRejection {
    pub reason: String,
    /// A point of the operand sort where the cover fails.
    pub point: Option<String>,
}

impl fmt::Display for CoverRejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.reason)?;
        if let Some(p) = &self.point {
            write!(f, " (at {p})")?;
        }
        Ok(())
    }
}

fn reject<T>(reason: impl Into<String>, point: Option<String>) -> Result<T, CoverRejection> {
    Err(CoverRejection {
        reason: reason.into(),
        point,
    })
}

/// `OR` over the `size`-subsets of `phis` of the conjunction of the subset.
fn k_fold(phis: &[Formula], size: usize) -> Formula {
    Formula::or_all(
        (0..phis.len())
            .combinations(size)
            .map(|idx| Formula::and_all(idx.into_iter().map(|i| phis[i].clone()))),
    )
}

/// `0 max (1 min ((sum p_i - k) / n))`.
fn cover_bound(ps: &[Rat], n: usize, k: usize) -> Rat {
    let sum: Rat = ps.iter().sum();
    let v = (sum - Rat::from_int(k as i64)) / Rat::from_int(n as i64);
    v.clamp_unit()
}

/// Builds a cover rule instance for `kind` (upper or probability) with
/// operands at `sort`. With `phi` present this is the first cover rule
/// (`n >= 1`); without it, the second (`sum p_i < k`). The side conditions
/// are checked in the domain's model: every element lies in at least `k` of
/// the `phis`, and every element satisfying `phi` in at least `n + k`.
#[allow(clippy::too_many_arguments)]
pub fn gen_cover_rule_instance(
    dom: &Domain<'_>,
    kind: DeltaKind,
    sort: &FunctorExpr,
    phi: Option<&Formula>,
    phis: &[Formula],
    n: usize,
    k: usize,
    ps: &[Rat],
) -> Result<RuleInstance, CoverRejection> {
    if !matches!(kind, DeltaKind::Upper | DeltaKind::Prob) {
        return reject(format!("no cover rules for {}", kind.keyword()), None);
    }
    let outer = FunctorExpr::delta(kind, sort.clone());
    let sig = dom.model().signature();
    if !sig.sorts().contains(&outer) {
        return reject(format!("{outer} is not an ingredient of {}", sig.functor()), None);
    }
    if phis.is_empty() || ps.len() != phis.len() {
        return reject("need one threshold per formula, and at least one formula", None);
    }
    if let Some(p) = ps.iter().find(|p| !p.in_unit_interval()) {
        return reject(format!("threshold {p} is outside [0,1]"), None);
    }
    for f in phis.iter().chain(phi) {
        if let Err(e) = sig.sort_check(f, Some(sort)) {
            return reject(e.to_string(), None);
        }
    }
    let sum: Rat = ps.iter().sum();
    match phi {
        Some(_) if n == 0 => return reject("the first cover rule needs n >= 1", None),
        None if sum >= Rat::from_int(k as i64) => {
            return reject(format!("the second cover rule needs sum p_i < k, got {sum} >= {k}"), None)
        }
        _ => {}
    }
    let c = dom.checker();
    let u = dom.model().universe();
    let elements = dom.elements(sort);
    let counts: Vec<usize> = elements
        .iter()
        .map(|e| phis.iter().filter(|f| c.sat(e, f, sort)).count())
        .collect();
    let in_target: Vec<bool> = elements
        .iter()
        .map(|e| phi.is_some_and(|f| c.sat(e, f, sort)))
        .collect();
    let bad = (0..elements.len()).find(|&i| counts[i] < k || (in_target[i] && counts[i] < n + k));
    // on finite sorts with measurable operands the cover test runs on atoms
    if let Some(space) = u.space(sort) {
        let sets: Option<Vec<_>> = phis
            .iter()
            .chain(phi)
            .map(|f| c.interpret_at(f, sort).measurable_set())
            .collect();
        if let Some(mut sets) = sets {
            let target = match phi {
                Some(_) => sets.pop().expect("phi last"),
                None => crate::spaces::MeasurableSet::empty(space),
            };
            let ok = is_nk_cover(&target, &sets, n, k).unwrap_or(false);
            debug_assert_eq!(ok, bad.is_none());
        }
    }
    if let Some(i) = bad {
        let what = if counts[i] < k {
            format!("not covered {k} times")
        } else {
            format!("satisfies the target but is covered only {} times", counts[i])
        };
        let point = dom.model().describe(&elements[i], sort);
        return reject(format!("side condition fails: {point} is {what}"), Some(point));
    }
    let (bd, _) = bounds(kind);
    let whole = k_fold(phis, k);
    let lhs = Formula::and_all(phis.iter().zip(ps).map(|(f, p)| ab(bd, Cmp::Le, p, f.clone())));
    let mut premises = vec![Sequent::theorem(sort.clone(), whole.clone())];
    let (rule, conclusion, p, target) = match phi {
        Some(f) => {
            let target = Formula::implies(f.clone(), k_fold(phis, n + k));
            premises.insert(0, Sequent::theorem(sort.clone(), target.clone()));
            let p = cover_bound(ps, n, k);
            let concl = Formula::implies(lhs, ab(bd, Cmp::Le, &p, f.clone()));
            (Rule::Cover1(kind), concl, Some(p), Some(target))
        }
        None => (Rule::Cover2(kind), Formula::not(lhs), None, None),
    };
    Ok(RuleInstance {
        rule,
        premises,
        conclusion: Sequent::theorem(outer, conclusion),
        cover: Some(CoverSide {
            m: phis.len(),
            n: if phi.is_some() { n } else { 0 },
            k,
            ps: ps.to_vec(),
            p,
            target_disjunction: target,
            whole_disjunction: whole,
        }),
    })
}

fn lcm_of_denominators<'a>(vals: impl IntoIterator<Item = &'a Rat>) -> BigInt {
    vals.into_iter().fold(BigInt::from(1), |acc, v| acc.lcm(v.denom()))
}

/// The premises `{B>=q f : q in slice}` of a finite Archimedean slice
/// below `p`. The slice `p - 1/2^i` reaches within `1/(2 d)` of `p`,
/// where `d` bounds the denominators of the values in `attained`, so no
/// value strictly below `p` clears every premise.
pub fn archimedean_slice(p: &Rat, attained: &[Rat]) -> Vec<Rat> {
    let d = lcm_of_denominators(attained.iter().chain([p])) * p.denom();
    let mut out = Vec::new();
    let mut step = Rat::new(1, 2);
    let mut i = 0;
    loop {
        let q = p.clone() - step.clone();
        if !q.is_negative() {
            out.push(q);
        }
        i += 1;
        let covered = BigInt::from(1) << i > &d * 2;
        if covered || i > 4096 {
            break;
        }
        step = step * Rat::new(1, 2);
    }
    if out.is_empty() {
        out.push(Rat::zero());
    }
    out
}

impl InstanceGen<'_> {
    /// A random instance of `rule`'s family at sort `s`, built so that the
    /// premises often hold in `dom`'s model.
    pub fn rule_instance<R: Rng>(&self, rng: &mut R, dom: &Domain<'_>, family: &str, s: &FunctorExpr) -> Option<RuleInstance> {
        let f = |rng: &mut R| self.formula(rng, s);
        match family {
            "modus-ponens" => {
                let a = f(rng);
                let b = if rng.gen_bool(0.5) { Formula::or(f(rng), a.clone()) } else { f(rng) };
                Some(RuleInstance {
                    rule: Rule::ModusPonens,
                    premises: Vec::new(),
                    conclusion: Sequent {
                        sort: s.clone(),
                        assumptions: vec![a.clone(), Formula::implies(a, b.clone())],
                        conclusion: b,
                    },
                    cover: None,
                })
            }
            "cut" => {
                let gamma = vec![f(rng), f(rng)];
                let lambda: Vec<Formula> = (0..rng.gen_range(1..=2))
                    .map(|_| Formula::or(gamma.choose(rng).expect("two").clone(), f(rng)))
                    .collect();
                let phi = Formula::or(lambda[0].clone(), f(rng));
                let mut premises: Vec<Sequent> = lambda
                    .iter()
                    .map(|l| Sequent {
                        sort: s.clone(),
                        assumptions: gamma.clone(),
                        conclusion: l.clone(),
                    })
                    .collect();
                premises.push(Sequent {
                    sort: s.clone(),
                    assumptions: lambda,
                    conclusion: phi.clone(),
                });
                Some(RuleInstance {
                    rule: Rule::Cut,
                    premises,
                    conclusion: Sequent {
                        sort: s.clone(),
                        assumptions: gamma,
                        conclusion: phi,
                    },
                    cover: None,
                })
            }
            "deduction" => {
                let gamma = vec![f(rng)];
                let phi = f(rng);
                let psi = match rng.gen_range(0..3) {
                    0 => Formula::or(phi.clone(), f(rng)),
                    1 => Formula::or(gamma[0].clone(), f(rng)),
                    _ => f(rng),
                };
                let mut with = gamma.clone();
                with.push(phi.clone());
                Some(RuleInstance {
                    rule: Rule::Deduction,
                    premises: vec![Sequent {
                        sort: s.clone(),
                        assumptions: with,
                        conclusion: psi.clone(),
                    }],
                    conclusion: Sequent {
                        sort: s.clone(),
                        assumptions: gamma,
                        conclusion: Formula::implies(phi, psi),
                    },
                    cover: None,
                })
            }
            "constant" => {
                let FunctorExpr::Const(m) = s else { return None };
                let sp = &self.sig.consts[m];
                Some(RuleInstance {
                    rule: Rule::Constant,
                    premises: Vec::new(),
                    conclusion: Sequent {
                        sort: s.clone(),
                        assumptions: sp.points().iter().map(|c| Formula::not(Formula::atom(&[c]))).collect(),
                        conclusion: Formula::Bot,
                    },
                    cover: None,
                })
            }
            "definite-box" => {
                let edges: Vec<_> = self
                    .sig
                    .graph
                    .edges_from(s)
                    .filter(|e| !matches!(e.label, EdgeLabel::Index(_)))
                    .collect();
                let e = *edges.choose(rng)?;
                let label = match e.label {
                    EdgeLabel::Pr1 => Label::Pr1,
                    EdgeLabel::Pr2 => Label::Pr2,
                    EdgeLabel::In1 => Label::In1,
                    EdgeLabel::In2 => Label::In2,
                    _ => Label::Next,
                };
                let to = e.to.clone();
                let gamma: Vec<Formula> = (0..rng.gen_range(0..=2)).map(|_| self.formula(rng, &to)).collect();
                let psi = match (rng.gen_range(0..3), gamma.first()) {
                    (0, Some(g)) => Formula::or(g.clone(), self.formula(rng, &to)),
                    (1, _) => Formula::and_all(gamma.clone()),
                    _ => self.formula(rng, &to),
                };
                let boxed = |g: &Formula| Formula::modal(label.clone(), g.clone());
                Some(RuleInstance {
                    rule: Rule::DefiniteBox(label.clone()),
                    premises: vec![Sequent {
                        sort: to,
                        assumptions: gamma.clone(),
                        conclusion: psi.clone(),
                    }],
                    conclusion: Sequent {
                        sort: s.clone(),
                        assumptions: gamma.iter().map(boxed).collect(),
                        conclusion: boxed(&psi),
                    },
                    cover: None,
                })
            }
            "necessitation" => {
                let FunctorExpr::Delta(kind, inner) = s else { return None };
                let (_, dual) = bounds(*kind);
                let mut phi = None;
                for _ in 0..8 {
                    let g = self.formula(rng, inner);
                    if dom.counterexample(&g, inner).is_none() {
                        phi = Some(g);
                        break;
                    }
                }
                let phi = phi.unwrap_or_else(|| self.tautology(rng, inner));
                Some(RuleInstance {
                    rule: Rule::Necessitation(*kind),
                    premises: vec![Sequent::theorem((**inner).clone(), phi.clone())],
                    conclusion: Sequent::theorem(s.clone(), ab(dual, Cmp::Ge, &Rat::one(), phi)),
                    cover: None,
                })
            }
            "archimedean" => {
                let FunctorExpr::Delta(kind, inner) = s else { return None };
                let (bd, dual) = bounds(*kind);
                let bound = if rng.gen_bool(0.5) { bd } else { dual };
                let psi = self.formula(rng, inner);
                let mut p = self.threshold(rng, &psi, inner);
                if p.is_zero() {
                    p = Rat::one();
                }
                let attained: Vec<Rat> = dom
                    .elements(s)
                    .iter()
                    .filter_map(|e| match e {
                        crate::functors::Element::Measure(m) => dom.checker().measure_value(m, &psi, inner),
                        _ => None,
                    })
                    .flat_map(|(v, d)| [v, d])
                    .collect();
                let slice = archimedean_slice(&p, &attained);
                Some(RuleInstance {
                    rule: Rule::Archimedean(bound),
                    premises: Vec::new(),
                    conclusion: Sequent {
                        sort: s.clone(),
                        assumptions: slice.iter().map(|q| ab(bound, Cmp::Ge, q, psi.clone())).collect(),
                        conclusion: ab(bound, Cmp::Ge, &p, psi),
                    },
                    cover: None,
                })
            }
            "cover-1" | "cover-2" => {
                let FunctorExpr::Delta(kind, inner) = s else { return None };
                if !matches!(kind, DeltaKind::Upper | DeltaKind::Prob) {
                    return None;
                }
                self.cover_instance(rng, dom, *kind, inner, family == "cover-1")
            }
            _ => None,
        }
    }

    fn cover_instance<R: Rng>(
        &self,
        rng: &mut R,
        dom: &Domain<'_>,
        kind: DeltaKind,
        inner: &FunctorExpr,
        first: bool,
    ) -> Option<RuleInstance> {
        let phis: Vec<Formula> = match rng.gen_range(0..4) {
            // a formula and its negation cover everything once
            0 => {
                let g = self.formula(rng, inner);
                vec![g.clone(), Formula::not(g)]
            }
            // two disjoint pieces of a formula
            1 => {
                let g = self.formula(rng, inner);
                let h = self.formula(rng, inner);
                vec![Formula::and(g.clone(), h.clone()), Formula::and(g, Formula::not(h))]
            }
            _ => (0..rng.gen_range(1..=3)).map(|_| self.formula(rng, inner)).collect(),
        };
        let m = phis.len();
        let c = dom.checker();
        let kmax = dom
            .elements(inner)
            .iter()
            .map(|e| phis.iter().filter(|f| c.sat(e, f, inner)).count())
            .min()
            .unwrap_or(m);
        let pick_ps = |rng: &mut R| -> Vec<Rat> { phis.iter().map(|f| self.threshold(rng, f, inner)).collect() };
        if first {
            let k = rng.gen_range(0..=kmax.min(m - 1));
            let n = rng.gen_range(1..=m - k);
            let mut phi = k_fold(&phis, n + k);
            if rng.gen_bool(0.3) {
                phi = Formula::and(phi, self.formula(rng, inner));
            }
            let ps = pick_ps(rng);
            gen_cover_rule_instance(dom, kind, inner, Some(&phi), &phis, n, k, &ps).ok()
        } else {
            if kmax == 0 {
                return None;
            }
            let k = rng.gen_range(1..=kmax);
            for _ in 0..10 {
                let ps = pick_ps(rng);
                if ps.iter().sum::<Rat>() < Rat::from_int(k as i64) {
                    return gen_cover_rule_instance(dom, kind, inner, None, &phis, 0, k, &ps).ok();
                }
            }
            None
        }
    }
}

/// The rule families that apply at sort `s`.
pub(super) fn families_at(s: &FunctorExpr, has_box_edge: bool) -> Vec<&'static str> {
    let mut out = vec!["modus-ponens", "cut", "deduction"];
    if matches!(s, FunctorExpr::Const(_)) {
        out.push("constant");
    }
    if has_box_edge {
        out.push("definite-box");
    }
    if let FunctorExpr::Delta(kind, _) = s {
        out.extend(["necessitation", "archimedean"]);
        if matches!(kind, DeltaKind::Upper | DeltaKind::Prob) {
            out.extend(["cover-1", "cover-2"]);
        }
    }
    out
}
