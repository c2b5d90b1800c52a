use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use super::bounds;
use crate::functors::{DeltaKind, FunctorExpr};
use crate::logic::{expand_abbreviation, Bound, Cmp, Formula, FormulaGen, Label, Signature, SortedFormula};
use crate::rational::Rat;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct AxiomError(pub String);

fn fail<T>(msg: impl Into<String>) -> Result<T, AxiomError> {
    Err(AxiomError(msg.into()))
}

/// The axiom schemas, one per sort shape. Identifiers follow the usual
/// numbering: `1` tautologies, `2a`-`5b` for constants, products,
/// coproducts and `next`, then one family per measure functor (`6` upper,
/// `8` probability, `9` plausibility, `10` possibility).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Schema {
    Tautology,
    ConstMember,
    ConstNonMember,
    ProjFunctional,
    ProjTotal,
    InjFunctional,
    InjExclusive,
    NextFunctional,
    NextTotal,
    /// `B<=p f -> B<q f` for `p < q`.
    LeLt(DeltaKind),
    /// `B<p f -> B<=p f`.
    LtLe(DeltaKind),
    /// `D>=1 (f -> g) -> (B>=p f -> B>=p g)`.
    Mono(DeltaKind),
    /// `[(p,q)] f <-> B>=p f & D>=q f`; not for probabilities.
    Split(DeltaKind),
    /// `Pl<=p f -> Bl<=p f`.
    PlausBelief,
    /// The inclusion-exclusion bound on a conjunction.
    InclusionExclusion,
    /// The same with a negative bound: the premises are inconsistent.
    InclusionExclusionEmpty,
    /// `Ps<=0 bot`.
    PossBot,
    /// `Ps<=p f -> Nc<=p f`.
    PossNec,
    /// `Ps<=p f & Ps<=q g -> Ps<=(p max q) (f | g)`.
    PossMax,
}

fn family(kind: DeltaKind) -> &'static str {
    match kind {
        DeltaKind::Upper => "6",
        DeltaKind::Prob => "8",
        DeltaKind::Plaus => "9",
        DeltaKind::Poss => "10",
    }
}

impl Schema {
    pub const ALL: [Schema; 30] = [
        Schema::Tautology,
        Schema::ConstMember,
        Schema::ConstNonMember,
        Schema::ProjFunctional,
        Schema::ProjTotal,
        Schema::InjFunctional,
        Schema::InjExclusive,
        Schema::NextFunctional,
        Schema::NextTotal,
        Schema::LeLt(DeltaKind::Upper),
        Schema::LtLe(DeltaKind::Upper),
        Schema::Mono(DeltaKind::Upper),
        Schema::Split(DeltaKind::Upper),
        Schema::LeLt(DeltaKind::Prob),
        Schema::LtLe(DeltaKind::Prob),
        Schema::Mono(DeltaKind::Prob),
        Schema::LeLt(DeltaKind::Plaus),
        Schema::LtLe(DeltaKind::Plaus),
        Schema::PlausBelief,
        Schema::Mono(DeltaKind::Plaus),
        Schema::Split(DeltaKind::Plaus),
        Schema::InclusionExclusion,
        Schema::InclusionExclusionEmpty,
        Schema::LeLt(DeltaKind::Poss),
        Schema::LtLe(DeltaKind::Poss),
        Schema::PossBot,
        Schema::PossNec,
        Schema::PossMax,
        Schema::Mono(DeltaKind::Poss),
        Schema::Split(DeltaKind::Poss),
    ];

    pub fn id(self) -> String {
        let fixed = match self {
            Schema::Tautology => "1",
            Schema::ConstMember => "2a",
            Schema::ConstNonMember => "2b",
            Schema::ProjFunctional => "3a",
            Schema::ProjTotal => "3b",
            Schema::InjFunctional => "4a",
            Schema::InjExclusive => "4b",
            Schema::NextFunctional => "5a",
            Schema::NextTotal => "5b",
            Schema::PlausBelief => "9c",
            Schema::InclusionExclusion => "9f",
            Schema::InclusionExclusionEmpty => "9g",
            Schema::PossBot => "10c",
            Schema::PossNec => "10d",
            Schema::PossMax => "10e",
            Schema::LeLt(k) => return format!("{}a", family(k)),
            Schema::LtLe(k) => return format!("{}b", family(k)),
            Schema::Mono(DeltaKind::Upper) => "6c",
            Schema::Mono(DeltaKind::Prob) => "8c",
            Schema::Mono(DeltaKind::Plaus) => "9d",
            Schema::Mono(DeltaKind::Poss) => "10f",
            Schema::Split(DeltaKind::Upper) => "6d",
            Schema::Split(DeltaKind::Plaus) => "9e",
            Schema::Split(DeltaKind::Poss) => "10g",
            Schema::Split(DeltaKind::Prob) => "8?",
        };
        fixed.to_string()
    }

    pub fn from_id(id: &str) -> Option<Schema> {
        Schema::ALL.into_iter().find(|s| s.id() == id)
    }

    /// The measure functor whose sorts carry this schema, if any.
    pub fn kind(self) -> Option<DeltaKind> {
        match self {
            Schema::LeLt(k) | Schema::LtLe(k) | Schema::Mono(k) | Schema::Split(k) => Some(k),
            Schema::PlausBelief | Schema::InclusionExclusion | Schema::InclusionExclusionEmpty => {
                Some(DeltaKind::Plaus)
            }
            Schema::PossBot | Schema::PossNec | Schema::PossMax => Some(DeltaKind::Poss),
            _ => None,
        }
    }

    pub fn applies(self, s: &FunctorExpr) -> bool {
        match (self, s) {
            (Schema::Tautology, _) => true,
            (Schema::ConstMember | Schema::ConstNonMember, FunctorExpr::Const(_)) => true,
            (Schema::ProjFunctional | Schema::ProjTotal, FunctorExpr::Prod(..)) => true,
            (Schema::InjFunctional | Schema::InjExclusive, FunctorExpr::Coprod(..)) => true,
            (Schema::NextFunctional | Schema::NextTotal, FunctorExpr::Id) => true,
            (_, FunctorExpr::Delta(k, _)) => self.kind() == Some(*k),
            _ => false,
        }
    }
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

/// Values for a schema's slots. Which slots are read depends on the schema:
/// formulas in order of appearance, thresholds `p` then `q` (or the `p_I`
/// in subset order for inclusion-exclusion), the constant point `c`, and
/// the component index `j`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Bindings {
    pub formulas: Vec<Formula>,
    pub rats: Vec<Rat>,
    pub point: Option<String>,
    pub j: Option<u8>,
}

fn component(j: Option<u8>) -> Result<u8, AxiomError> {
    match j {
        Some(j @ (1 | 2)) => Ok(j),
        Some(j) => fail(format!("component index {j} is not 1 or 2")),
        None => fail("missing component index"),
    }
}

fn formula(b: &Bindings, i: usize) -> Result<Formula, AxiomError> {
    b.formulas
        .get(i)
        .cloned()
        .ok_or_else(|| AxiomError(format!("missing formula slot {}", i + 1)))
}

fn rat(b: &Bindings, i: usize) -> Result<Rat, AxiomError> {
    let r = b
        .rats
        .get(i)
        .cloned()
        .ok_or_else(|| AxiomError(format!("missing threshold slot {}", i + 1)))?;
    if !r.in_unit_interval() {
        return fail(format!("threshold {r} is outside [0,1]"));
    }
    Ok(r)
}

/// Whether `f` is a propositional tautology, its maximal non-boolean
/// subformulas read as variables.
pub fn is_tautology(f: &Formula) -> bool {
    let mut vars: Vec<&Formula> = Vec::new();
    fn gather<'a>(f: &'a Formula, vars: &mut Vec<&'a Formula>) {
        match f {
            Formula::Bot => {}
            Formula::Implies(a, b) => {
                gather(a, vars);
                gather(b, vars);
            }
            other => {
                if !vars.contains(&other) {
                    vars.push(other);
                }
            }
        }
    }
    gather(f, &mut vars);
    if vars.len() > 20 {
        return false;
    }
    fn eval(f: &Formula, vars: &[&Formula], v: u32) -> bool {
        match f {
            Formula::Bot => false,
            Formula::Implies(a, b) => !eval(a, vars, v) || eval(b, vars, v),
            other => {
                let i = vars.iter().position(|x| *x == other).expect("gathered");
                v >> i & 1 == 1
            }
        }
    }
    (0..1u32 << vars.len()).all(|v| eval(f, &vars, v))
}

/// The abbreviation `bound cmp p f` in core form.
pub(super) fn ab(bound: Bound, cmp: Cmp, p: &Rat, f: Formula) -> Formula {
    expand_abbreviation(bound, cmp, p, f)
}

/// The subset-indexed disjunctions `psi_I` and the signed sum of the `p_I`.
fn inclusion_exclusion(phis: &[Formula], ps: &[Rat]) -> Result<(Vec<Formula>, Rat), AxiomError> {
    let n = phis.len();
    if n == 0 || n > 6 {
        return fail("inclusion-exclusion takes between 1 and 6 formulas");
    }
    if ps.len() != (1 << n) - 1 {
        return fail(format!("{} formulas need {} thresholds", n, (1 << n) - 1));
    }
    let mut premises = Vec::new();
    let mut q = Rat::zero();
    for mask in 1..(1usize << n) {
        let members: Vec<Formula> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| phis[i].clone()).collect();
        let size = members.len();
        let psi = Formula::or_all(members);
        let p = &ps[mask - 1];
        if !p.in_unit_interval() {
            return fail(format!("threshold {p} is outside [0,1]"));
        }
        if size % 2 == 1 {
            q = q + p.clone();
            premises.push(ab(Bound::Plaus, Cmp::Le, p, psi));
        } else {
            q = q - p.clone();
            premises.push(ab(Bound::Plaus, Cmp::Ge, p, psi));
        }
    }
    Ok((premises, q))
}

/// Instantiates `schema` at `sort` and sort-checks the result.
pub fn instantiate_axiom(
    sig: &Signature,
    schema: Schema,
    sort: &FunctorExpr,
    b: &Bindings,
) -> Result<SortedFormula, AxiomError> {
    if !sig.sorts().contains(sort) {
        return fail(format!("{sort} is not an ingredient of {}", sig.functor()));
    }
    if !schema.applies(sort) || schema == Schema::Split(DeltaKind::Prob) {
        return fail(format!("schema {schema} does not apply at sort {sort}"));
    }
    let not = Formula::not;
    let f = match schema {
        Schema::Tautology => {
            let f = formula(b, 0)?;
            if !is_tautology(&f) {
                return fail(format!("{f} is not a tautology"));
            }
            f
        }
        Schema::ConstMember | Schema::ConstNonMember => {
            let FunctorExpr::Const(m) = sort else { unreachable!() };
            let c = b.point.clone().ok_or_else(|| AxiomError("missing constant point".into()))?;
            let sp = &sig.consts[m];
            if sp.point_index(&c).is_none() {
                return fail(format!("`{c}` is not a point of {m}"));
            }
            let a = formula(b, 0)?;
            let Formula::Atom(labels) = &a else {
                return fail("the set slot must be a set literal");
            };
            let member = labels.contains(&c);
            let single = Formula::atom(&[&c]);
            match (schema, member) {
                (Schema::ConstMember, true) => Formula::implies(single, a),
                (Schema::ConstNonMember, false) => Formula::implies(single, not(a)),
                (Schema::ConstMember, false) => return fail(format!("`{c}` is not in {a}")),
                _ => return fail(format!("`{c}` is in {a}")),
            }
        }
        Schema::ProjFunctional | Schema::InjFunctional | Schema::ProjTotal => {
            let j = component(b.j)?;
            let label = match (schema, j) {
                (Schema::InjFunctional, 1) => Label::In1,
                (Schema::InjFunctional, _) => Label::In2,
                (_, 1) => Label::Pr1,
                _ => Label::Pr2,
            };
            if schema == Schema::ProjTotal {
                not(Formula::modal(label, Formula::Bot))
            } else {
                let phi = formula(b, 0)?;
                Formula::implies(
                    not(Formula::modal(label.clone(), phi.clone())),
                    Formula::modal(label, not(phi)),
                )
            }
        }
        Schema::InjExclusive => Formula::iff(
            not(Formula::modal(Label::In1, Formula::Bot)),
            Formula::modal(Label::In2, Formula::Bot),
        ),
        Schema::NextFunctional => {
            let phi = formula(b, 0)?;
            Formula::implies(
                not(Formula::modal(Label::Next, phi.clone())),
                Formula::modal(Label::Next, not(phi)),
            )
        }
        Schema::NextTotal => not(Formula::modal(Label::Next, Formula::Bot)),
        Schema::LeLt(k) => {
            let (bd, _) = bounds(k);
            let (phi, p, q) = (formula(b, 0)?, rat(b, 0)?, rat(b, 1)?);
            if p >= q {
                return fail(format!("needs p < q, got p = {p}, q = {q}"));
            }
            Formula::implies(ab(bd, Cmp::Le, &p, phi.clone()), ab(bd, Cmp::Lt, &q, phi))
        }
        Schema::LtLe(k) => {
            let (bd, _) = bounds(k);
            let (phi, p) = (formula(b, 0)?, rat(b, 0)?);
            Formula::implies(ab(bd, Cmp::Lt, &p, phi.clone()), ab(bd, Cmp::Le, &p, phi))
        }
        Schema::Mono(k) => {
            let (bd, dual) = bounds(k);
            let (phi, psi, p) = (formula(b, 0)?, formula(b, 1)?, rat(b, 0)?);
            Formula::implies(
                ab(dual, Cmp::Ge, &Rat::one(), Formula::implies(phi.clone(), psi.clone())),
                Formula::implies(ab(bd, Cmp::Ge, &p, phi), ab(bd, Cmp::Ge, &p, psi)),
            )
        }
        Schema::Split(k) => {
            let (bd, dual) = bounds(k);
            let (phi, p, q) = (formula(b, 0)?, rat(b, 0)?, rat(b, 1)?);
            Formula::iff(
                Formula::idx(k, p.clone(), q.clone(), phi.clone()),
                Formula::and(ab(bd, Cmp::Ge, &p, phi.clone()), ab(dual, Cmp::Ge, &q, phi)),
            )
        }
        Schema::PlausBelief => {
            let (phi, p) = (formula(b, 0)?, rat(b, 0)?);
            Formula::implies(ab(Bound::Plaus, Cmp::Le, &p, phi.clone()), ab(Bound::Belief, Cmp::Le, &p, phi))
        }
        Schema::InclusionExclusion | Schema::InclusionExclusionEmpty => {
            let (premises, q) = inclusion_exclusion(&b.formulas, &b.rats)?;
            let all = Formula::and_all(premises);
            if schema == Schema::InclusionExclusion {
                if q.is_negative() {
                    return fail(format!("the signed sum {q} is negative"));
                }
                let p = Rat::min_of(&q, &Rat::one());
                Formula::implies(all, ab(Bound::Plaus, Cmp::Le, &p, Formula::and_all(b.formulas.clone())))
            } else {
                if !q.is_negative() {
                    return fail(format!("the signed sum {q} is not negative"));
                }
                not(all)
            }
        }
        Schema::PossBot => ab(Bound::Poss, Cmp::Le, &Rat::zero(), Formula::Bot),
        Schema::PossNec => {
            let (phi, p) = (formula(b, 0)?, rat(b, 0)?);
            Formula::implies(ab(Bound::Poss, Cmp::Le, &p, phi.clone()), ab(Bound::Nec, Cmp::Le, &p, phi))
        }
        Schema::PossMax => {
            let (phi, psi, p, q) = (formula(b, 0)?, formula(b, 1)?, rat(b, 0)?, rat(b, 1)?);
            let top = Rat::max_of(&p, &q);
            Formula::implies(
                Formula::and(ab(Bound::Poss, Cmp::Le, &p, phi.clone()), ab(Bound::Poss, Cmp::Le, &q, psi.clone())),
                ab(Bound::Poss, Cmp::Le, &top, Formula::or(phi, psi)),
            )
        }
    };
    sig.sort_check(&f, Some(sort)).map_err(|e| AxiomError(e.to_string()))
}

/// Consequences of the axioms and rules, checked as validities alongside
/// them at every measure sort where they apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Derived {
    /// `B>=0 f`.
    NonNegative,
    /// `D>=0 f`.
    DualNonNegative,
    /// `B<p bot` for `p > 0`.
    PositiveBot,
    /// `D<p bot` for `p > 0`; upper and plausibility.
    DualPositiveBot,
    /// `B>=q f -> B>=p f` for `q > p`.
    Antitone,
    /// `D>=p f -> B>=p f`; upper, plausibility and possibility.
    DualBelow,
    /// `U<=p f -> L<=p f`.
    UpperLowerLe,
}

impl Derived {
    pub const ALL: [Derived; 7] = [
        Derived::NonNegative,
        Derived::DualNonNegative,
        Derived::PositiveBot,
        Derived::DualPositiveBot,
        Derived::Antitone,
        Derived::DualBelow,
        Derived::UpperLowerLe,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Derived::NonNegative => "ge-zero",
            Derived::DualNonNegative => "dual-ge-zero",
            Derived::PositiveBot => "lt-bot",
            Derived::DualPositiveBot => "dual-lt-bot",
            Derived::Antitone => "antitone",
            Derived::DualBelow => "dual-below",
            Derived::UpperLowerLe => "upper-lower-le",
        }
    }

    pub fn applies(self, kind: DeltaKind) -> bool {
        match self {
            Derived::NonNegative | Derived::PositiveBot | Derived::Antitone => true,
            Derived::DualNonNegative => kind != DeltaKind::Prob,
            Derived::DualPositiveBot => matches!(kind, DeltaKind::Upper | DeltaKind::Plaus),
            Derived::DualBelow => kind != DeltaKind::Prob,
            Derived::UpperLowerLe => kind == DeltaKind::Upper,
        }
    }

    /// The instance for operand `phi` and thresholds `p`, `q`.
    pub fn formula(self, kind: DeltaKind, phi: Formula, p: &Rat, q: &Rat) -> Formula {
        let (bd, dual) = bounds(kind);
        match self {
            Derived::NonNegative => ab(bd, Cmp::Ge, &Rat::zero(), phi),
            Derived::DualNonNegative => ab(dual, Cmp::Ge, &Rat::zero(), phi),
            Derived::PositiveBot => ab(bd, Cmp::Lt, p, Formula::Bot),
            Derived::DualPositiveBot => ab(dual, Cmp::Lt, p, Formula::Bot),
            Derived::Antitone => Formula::implies(ab(bd, Cmp::Ge, q, phi.clone()), ab(bd, Cmp::Ge, p, phi)),
            Derived::DualBelow => Formula::implies(ab(dual, Cmp::Ge, p, phi.clone()), ab(bd, Cmp::Ge, p, phi)),
            Derived::UpperLowerLe => Formula::implies(ab(bd, Cmp::Le, p, phi.clone()), ab(dual, Cmp::Le, p, phi)),
        }
    }
}

/// Values a measure attains on a formula: given an operand and its sort,
/// the values and dual values of the measures in play.
pub type Attained<'a> = dyn Fn(&Formula, &FunctorExpr) -> Vec<Rat> + Sync + 'a;

/// Random schema instances over a signature. Thresholds are drawn from the
/// grid or, half the time, from the values actually attained on the
/// operand, so that boundary cases come up.
pub struct InstanceGen<'a> {
    pub sig: &'a Signature,
    pub gen: FormulaGen<'a>,
    pub grid: Vec<Rat>,
    pub depth: usize,
    pub attained: Option<&'a Attained<'a>>,
}

const TEMPLATES: usize = 9;

impl<'a> InstanceGen<'a> {
    pub fn new(sig: &'a Signature, grid: Vec<Rat>, depth: usize) -> Self {
        InstanceGen {
            sig,
            gen: FormulaGen::new(sig, grid.clone()),
            grid,
            depth,
            attained: None,
        }
    }

    pub fn formula<R: Rng>(&self, rng: &mut R, s: &FunctorExpr) -> Formula {
        let d = rng.gen_range(0..=self.depth);
        self.gen.formula(rng, s, d)
    }

    pub fn threshold<R: Rng>(&self, rng: &mut R, operand: &Formula, s: &FunctorExpr) -> Rat {
        if let Some(f) = self.attained {
            if rng.gen_bool(0.5) {
                let vals = f(operand, s);
                if let Some(v) = vals.choose(rng) {
                    return v.clone();
                }
            }
        }
        self.grid.choose(rng).expect("nonempty grid").clone()
    }

    /// A propositional tautology over random formulas of sort `s`.
    pub fn tautology<R: Rng>(&self, rng: &mut R, s: &FunctorExpr) -> Formula {
        let a = self.formula(rng, s);
        let b = self.formula(rng, s);
        let c = self.formula(rng, s);
        let imp = Formula::implies;
        match rng.gen_range(0..TEMPLATES) {
            0 => imp(a.clone(), a),
            1 => imp(a.clone(), imp(b, a)),
            2 => imp(
                imp(a.clone(), imp(b.clone(), c.clone())),
                imp(imp(a.clone(), b), imp(a, c)),
            ),
            3 => imp(Formula::not(Formula::not(a.clone())), a),
            4 => Formula::or(a.clone(), Formula::not(a)),
            5 => imp(imp(imp(a.clone(), b), a.clone()), a),
            6 => imp(Formula::and(a.clone(), b.clone()), Formula::and(b, a)),
            7 => imp(imp(a.clone(), b.clone()), imp(Formula::not(b), Formula::not(a))),
            _ => imp(Formula::Bot, a),
        }
    }

    fn operand(&self, s: &FunctorExpr) -> FunctorExpr {
        match s {
            FunctorExpr::Delta(_, inner) => (**inner).clone(),
            _ => s.clone(),
        }
    }

    /// Random bindings for `schema` at `s`; `None` when the sort offers
    /// nothing to bind (an empty constant space, say).
    pub fn bindings<R: Rng>(&self, rng: &mut R, schema: Schema, s: &FunctorExpr) -> Option<Bindings> {
        let mut b = Bindings::default();
        let inner = self.operand(s);
        match schema {
            Schema::Tautology => b.formulas.push(self.tautology(rng, s)),
            Schema::ConstMember | Schema::ConstNonMember => {
                let FunctorExpr::Const(m) = s else { return None };
                let sp = &self.sig.consts[m];
                let pts = sp.points();
                let c = pts.choose(rng)?.clone();
                let mut labels: Vec<&String> = pts.iter().filter(|p| **p != c && rng.gen_bool(0.5)).collect();
                if schema == Schema::ConstMember {
                    labels.push(&c);
                }
                b.formulas.push(Formula::atom(&labels));
                b.point = Some(c);
            }
            Schema::ProjFunctional | Schema::InjFunctional => {
                let j = rng.gen_range(1..=2u8);
                let part = match s {
                    FunctorExpr::Prod(l, r) | FunctorExpr::Coprod(l, r) => {
                        if j == 1 {
                            l
                        } else {
                            r
                        }
                    }
                    _ => return None,
                };
                b.j = Some(j);
                b.formulas.push(self.formula(rng, part));
            }
            Schema::ProjTotal => b.j = Some(rng.gen_range(1..=2)),
            Schema::InjExclusive | Schema::NextTotal | Schema::PossBot => {}
            Schema::NextFunctional => b.formulas.push(self.formula(rng, self.sig.functor())),
            Schema::LeLt(_) => {
                let phi = self.formula(rng, &inner);
                let p = self.threshold(rng, &phi, &inner);
                let above: Vec<&Rat> = self.grid.iter().filter(|q| **q > p).collect();
                let q = (*above.choose(rng)?).clone();
                b.formulas.push(phi);
                b.rats = vec![p, q];
            }
            Schema::LtLe(_) | Schema::PlausBelief | Schema::PossNec => {
                let phi = self.formula(rng, &inner);
                b.rats.push(self.threshold(rng, &phi, &inner));
                b.formulas.push(phi);
            }
            Schema::Mono(_) => {
                let phi = self.formula(rng, &inner);
                let psi = if rng.gen_bool(0.5) {
                    Formula::or(phi.clone(), self.formula(rng, &inner))
                } else {
                    self.formula(rng, &inner)
                };
                b.rats.push(self.threshold(rng, &phi, &inner));
                b.formulas = vec![phi, psi];
            }
            Schema::Split(_) => {
                let phi = self.formula(rng, &inner);
                b.rats = vec![self.threshold(rng, &phi, &inner), self.threshold(rng, &phi, &inner)];
                b.formulas.push(phi);
            }
            Schema::PossMax => {
                let phi = self.formula(rng, &inner);
                let psi = self.formula(rng, &inner);
                b.rats = vec![self.threshold(rng, &phi, &inner), self.threshold(rng, &psi, &inner)];
                b.formulas = vec![phi, psi];
            }
            Schema::InclusionExclusion | Schema::InclusionExclusionEmpty => {
                let want_negative = schema == Schema::InclusionExclusionEmpty;
                let n = if want_negative { rng.gen_range(2..=3) } else { rng.gen_range(1..=3) };
                let phis: Vec<Formula> = (0..n).map(|_| self.formula(rng, &inner)).collect();
                for _ in 0..20 {
                    let mut ps = Vec::new();
                    for mask in 1..(1usize << n) {
                        let psi = Formula::or_all((0..n).filter(|i| mask >> i & 1 == 1).map(|i| phis[i].clone()));
                        ps.push(self.threshold(rng, &psi, &inner));
                    }
                    let (_, q) = inclusion_exclusion(&phis, &ps).ok()?;
                    if q.is_negative() == want_negative {
                        b.formulas = phis;
                        b.rats = ps;
                        return Some(b);
                    }
                }
                if want_negative {
                    return None;
                }
                // dropping the subtracted terms makes the sum nonnegative
                let ps = (1..(1usize << n))
                    .map(|mask: usize| {
                        if mask.count_ones() % 2 == 0 {
                            Rat::zero()
                        } else {
                            self.grid.choose(rng).expect("nonempty").clone()
                        }
                    })
                    .collect();
                b.formulas = phis;
                b.rats = ps;
            }
        }
        Some(b)
    }

    /// A random instance of `schema` at `s`.
    pub fn instance<R: Rng>(&self, rng: &mut R, schema: Schema, s: &FunctorExpr) -> Option<(Bindings, SortedFormula)> {
        let b = self.bindings(rng, schema, s)?;
        let f = instantiate_axiom(self.sig, schema, s, &b).ok()?;
        Some((b, f))
    }

    /// A random instance of a derived principle at the measure sort `s`.
    pub fn derived<R: Rng>(&self, rng: &mut R, d: Derived, s: &FunctorExpr) -> Option<SortedFormula> {
        let FunctorExpr::Delta(kind, inner) = s else { return None };
        if !d.applies(*kind) {
            return None;
        }
        let phi = self.formula(rng, inner);
        let mut p = self.threshold(rng, &phi, inner);
        let mut q = self.threshold(rng, &phi, inner);
        if p > q {
            std::mem::swap(&mut p, &mut q);
        }
        match d {
            Derived::PositiveBot | Derived::DualPositiveBot if p.is_zero() => {
                p = self.grid.iter().find(|g| g.is_positive())?.clone();
            }
            Derived::Antitone if p == q => return None,
            _ => {}
        }
        let f = d.formula(*kind, phi, &p, &q);
        self.sig.sort_check(&f, Some(s)).ok()
    }

    /// The corrupted schema `B<=p f -> B<p f`, which fails wherever the
    /// measure of `f` is exactly `p`.
    pub fn strict_mutant<R: Rng>(&self, rng: &mut R, s: &FunctorExpr) -> Option<SortedFormula> {
        let FunctorExpr::Delta(kind, inner) = s else { return None };
        let (bd, _) = bounds(*kind);
        let phi = self.formula(rng, inner);
        let p = self.threshold(rng, &phi, inner);
        let f = Formula::implies(ab(bd, Cmp::Le, &p, phi.clone()), ab(bd, Cmp::Lt, &p, phi));
        self.sig.sort_check(&f, Some(s)).ok()
    }
}
