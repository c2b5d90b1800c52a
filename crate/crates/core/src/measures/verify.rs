//! Verifiers for the characterization theorems.
//!
//! Every check works on the full value table of a measure, so it applies to
//! any representation. The LP envelope test is the decision procedure for
//! upper probabilities; the cover search is a bounded falsifier.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;

use super::{MeasureError, ProbabilityMeasure, UncertaintyMeasure};
use crate::lp::{Constraint, FeasibleRegion, LpOutcome, Relation};
use crate::rational::Rat;
use crate::spaces::{Bits, MeasurableSet, SpaceError};

/// Outcome of a yes/no check. A failure carries the measurable sets that
/// exhibit it, as atom selections.
#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Holds,
    Fails { sets: Vec<Bits>, reason: String },
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds)
    }

    fn fail(sets: Vec<Bits>, reason: impl Into<String>) -> Verdict {
        Verdict::Fails {
            sets,
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum UpperVerdict {
    /// `g` is the upper envelope of `witness`.
    Upper { witness: Vec<ProbabilityMeasure> },
    /// No probability is dominated by `g`.
    EmptyCredalSet,
    /// The credal set does not reach `g` at `set`.
    NotTight { set: Bits, value: Rat, max: Rat },
}

impl UpperVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, UpperVerdict::Upper { .. })
    }
}

/// A violation of the cover inequality `k + n g(U) <= sum g(U_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverWitness {
    pub target: Bits,
    pub seq: Vec<Bits>,
    pub n: usize,
    pub k: usize,
    pub lhs: Rat,
    pub rhs: Rat,
}

fn mask_bits(n: usize, m: usize) -> Bits {
    Bits::from_mask(n, m as u64)
}

/// Finitely additive: every set's value is the sum of its atoms' values.
pub fn is_probability(m: &UncertaintyMeasure) -> Result<Verdict, MeasureError> {
    let n = m.space().atom_count();
    let table = m.values_table()?;
    let full = table.len() - 1;
    if !table[0].is_zero() {
        return Ok(Verdict::fail(vec![mask_bits(n, 0)], format!("value of the empty set is {}", table[0])));
    }
    if !table[full].is_one() {
        return Ok(Verdict::fail(vec![mask_bits(n, full)], format!("value of the carrier is {}", table[full])));
    }
    for u in 1..table.len() {
        let low = u & u.wrapping_neg();
        let rest = u ^ low;
        if rest == 0 {
            continue;
        }
        let sum = &table[low] + &table[rest];
        if table[u] != sum {
            return Ok(Verdict::fail(
                vec![mask_bits(n, low), mask_bits(n, rest)],
                format!("not additive: {} on the union, {} + {} on the parts", table[u], table[low], table[rest]),
            ));
        }
    }
    Ok(Verdict::Holds)
}

/// Decides whether `g` is an upper probability. Let `C(g)` be the set of
/// probabilities dominated by `g` on every measurable set; `g` is an upper
/// probability iff `C(g)` attains `g(U)` for every `U`. One LP per set.
pub fn is_upper_probability_lp(g: &UncertaintyMeasure) -> Result<UpperVerdict, MeasureError> {
    let space = g.space().clone();
    let n = space.atom_count();
    let table = g.values_table()?;
    let row = |u: usize| -> Vec<Rat> {
        (0..n)
            .map(|a| if u >> a & 1 == 1 { Rat::one() } else { Rat::zero() })
            .collect()
    };
    let mut constraints = vec![Constraint::new(vec![Rat::one(); n], Relation::Eq, Rat::one())];
    if table[0].is_negative() {
        return Ok(UpperVerdict::EmptyCredalSet);
    }
    for (u, v) in table.iter().enumerate().skip(1) {
        constraints.push(Constraint::new(row(u), Relation::Le, v.clone()));
    }
    let Some(region) = FeasibleRegion::new(n, &constraints) else {
        return Ok(UpperVerdict::EmptyCredalSet);
    };
    let maxima: Vec<(Rat, Vec<Rat>)> = (0..table.len())
        .into_par_iter()
        .map(|u| match region.maximize(&row(u)) {
            LpOutcome::Optimal { value, point } => (value, point),
            other => unreachable!("probability polytope is bounded: {other:?}"),
        })
        .collect();
    let mut witness: Vec<ProbabilityMeasure> = Vec::new();
    for (u, (max, point)) in maxima.into_iter().enumerate() {
        if max != table[u] {
            return Ok(UpperVerdict::NotTight {
                set: mask_bits(n, u),
                value: table[u].clone(),
                max,
            });
        }
        if u == 0 && n > 0 {
            continue;
        }
        if !witness.iter().any(|p| p.weights() == point.as_slice()) {
            witness.push(ProbabilityMeasure::new(space.clone(), point)?);
        }
    }
    Ok(UpperVerdict::Upper { witness })
}

/// Atom-level cover test: every atom lies in at least `k` sets of `seq`,
/// and every atom of `target` in at least `n + k`.
pub fn covers(atom_count: usize, target: &Bits, seq: &[Bits], n: usize, k: usize) -> bool {
    (0..atom_count).all(|a| {
        let c = seq.iter().filter(|s| s.contains(a)).count();
        c >= k && (!target.contains(a) || c >= n + k)
    })
}

/// Whether `seq` is an `(n,k)`-cover of `(target, carrier)`.
pub fn is_nk_cover(target: &MeasurableSet, seq: &[MeasurableSet], n: usize, k: usize) -> Result<bool, MeasureError> {
    let space = target.space();
    let mut atoms = Vec::with_capacity(seq.len());
    for s in seq {
        if s.space() != space && **s.space() != **space {
            return Err(SpaceError::ForeignSet {
                expected: space.name().to_string(),
                found: s.space().name().to_string(),
            }
            .into());
        }
        atoms.push(s.atoms().clone());
    }
    Ok(covers(space.atom_count(), target.atoms(), &atoms, n, k))
}

/// Searches every multiset of at most `m_max` nonempty measurable sets and
/// every target for a violation of the cover inequality, using the tightest
/// `n` and `k` for each sequence. Targets are tried carrier first, then in
/// mask order, then the empty set. Any witness is a genuine violation.
pub fn find_cover_violation(g: &UncertaintyMeasure, m_max: usize) -> Result<Option<CoverWitness>, MeasureError> {
    let n = g.space().atom_count();
    let table = g.values_table()?;
    let full = table.len() - 1;
    if n == 0 {
        return Ok(None);
    }
    let mut targets: Vec<usize> = vec![full];
    targets.extend(1..full);
    targets.push(0);

    let mut seq: Vec<usize> = Vec::new();
    let mut counts = vec![0usize; n];
    let mut sum = Rat::zero();
    Ok(search(&table, n, &targets, m_max, 1, &mut seq, &mut counts, &mut sum))
}

#[allow(clippy::too_many_arguments)]
fn search(
    table: &[Rat],
    n: usize,
    targets: &[usize],
    m_max: usize,
    start: usize,
    seq: &mut Vec<usize>,
    counts: &mut Vec<usize>,
    sum: &mut Rat,
) -> Option<CoverWitness> {
    // shorter sequences first
    for len in 1..=m_max {
        if let Some(w) = search_len(table, n, targets, len, start, seq, counts, sum) {
            return Some(w);
        }
    }
    None
}

#[allow(clippy::too_many_arguments)]
fn search_len(
    table: &[Rat],
    n: usize,
    targets: &[usize],
    len: usize,
    start: usize,
    seq: &mut Vec<usize>,
    counts: &mut Vec<usize>,
    sum: &mut Rat,
) -> Option<CoverWitness> {
    if seq.len() == len {
        return check_sequence(table, n, targets, seq, counts, sum);
    }
    for u in start..table.len() {
        seq.push(u);
        for (a, c) in counts.iter_mut().enumerate() {
            *c += u >> a & 1;
        }
        *sum += &table[u];
        let found = search_len(table, n, targets, len, u, seq, counts, sum);
        *sum -= &table[u];
        for (a, c) in counts.iter_mut().enumerate() {
            *c -= u >> a & 1;
        }
        seq.pop();
        if found.is_some() {
            return found;
        }
    }
    None
}

fn check_sequence(
    table: &[Rat],
    n: usize,
    targets: &[usize],
    seq: &[usize],
    counts: &[usize],
    sum: &Rat,
) -> Option<CoverWitness> {
    let k = *counts.iter().min().expect("nonempty carrier");
    for &t in targets {
        let nn = if t == 0 {
            0
        } else {
            (0..n).filter(|a| t >> a & 1 == 1).map(|a| counts[a]).min().unwrap() - k
        };
        let lhs = Rat::from_int(k as i64) + Rat::from_int(nn as i64) * &table[t];
        if lhs > *sum {
            return Some(CoverWitness {
                target: mask_bits(n, t),
                seq: seq.iter().map(|&u| mask_bits(n, u)).collect(),
                n: nn,
                k,
                lhs,
                rhs: sum.clone(),
            });
        }
    }
    None
}

/// Arithmetic used by the plausibility search; exact in both instances.
trait Scalar: Clone + PartialOrd {
    fn zero() -> Self;
    fn add_scaled(&mut self, v: &Self, c: i64);
}

impl Scalar for i128 {
    fn zero() -> Self {
        0
    }
    fn add_scaled(&mut self, v: &Self, c: i64) {
        *self += v * c as i128;
    }
}

impl Scalar for Rat {
    fn zero() -> Self {
        Rat::zero()
    }
    fn add_scaled(&mut self, v: &Self, c: i64) {
        *self += &(v * &Rat::from_int(c));
    }
}

/// The table scaled to a common denominator, if the result fits in `i128`
/// with room for the alternating sums.
fn scaled_table(table: &[Rat]) -> Option<Vec<i128>> {
    let lcm = table
        .iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
    if lcm.bits() > 64 {
        return None;
    }
    table
        .iter()
        .map(|v| (v.numer() * (&lcm / v.denom())).to_i128())
        .collect()
}

/// Checks the inclusion-exclusion inequality
/// `g(U_1 & .. & U_n) <= sum over nonempty I of (-1)^(|I|+1) g(union of U_i, i in I)`
/// on every set of at most `n_max` distinct measurable sets, plus
/// normalization. Repeating a set never changes either side, so distinct
/// sets suffice.
pub fn is_plausibility(g: &UncertaintyMeasure, n_max: Option<usize>) -> Result<Verdict, MeasureError> {
    let n = g.space().atom_count();
    let table = g.values_table()?;
    let full = table.len() - 1;
    if !table[0].is_zero() {
        return Ok(Verdict::fail(vec![mask_bits(n, 0)], format!("value of the empty set is {}", table[0])));
    }
    if !table[full].is_one() {
        return Ok(Verdict::fail(vec![mask_bits(n, full)], format!("value of the carrier is {}", table[full])));
    }
    if let Some((u, v)) = table.iter().enumerate().find(|(_, v)| !v.in_unit_interval()) {
        return Ok(Verdict::fail(vec![mask_bits(n, u)], format!("value {v} outside [0,1]")));
    }
    let n_max = n_max.unwrap_or(table.len());
    let found = match scaled_table(&table) {
        Some(scaled) => plausibility_search(&scaled, n_max),
        None => plausibility_search(&table, n_max),
    };
    Ok(match found {
        None => Verdict::Holds,
        Some(tuple) => {
            let inter = tuple.iter().fold(full, |acc, &u| acc & u);
            let rhs = inclusion_exclusion(&table, &tuple);
            Verdict::fail(
                tuple.iter().map(|&u| mask_bits(n, u)).collect(),
                format!(
                    "value {} of the intersection exceeds the inclusion-exclusion bound {}",
                    table[inter], rhs
                ),
            )
        }
    })
}

/// Right-hand side of the inequality for one tuple, computed directly.
pub(crate) fn inclusion_exclusion(table: &[Rat], tuple: &[usize]) -> Rat {
    let mut total = Rat::zero();
    for i in 1usize..1 << tuple.len() {
        let union = (0..tuple.len())
            .filter(|j| i >> j & 1 == 1)
            .fold(0, |acc, j| acc | tuple[j]);
        if i.count_ones() % 2 == 1 {
            total += &table[union];
        } else {
            total -= &table[union];
        }
    }
    total
}

/// Depth-first search over sets of distinct members. Each level keeps the
/// signed multiplicity of every union mask, so extending a tuple costs one
/// pass over the algebra instead of one per subset of the tuple.
fn plausibility_search<V: Scalar>(table: &[V], n_max: usize) -> Option<Vec<usize>> {
    let size = table.len();
    let full = size - 1;
    let mut tuple = Vec::new();
    let coef = vec![0i64; size];
    fn go<V: Scalar>(
        table: &[V],
        n_max: usize,
        start: usize,
        inter: usize,
        coef: &[i64],
        tuple: &mut Vec<usize>,
    ) -> Option<Vec<usize>> {
        if tuple.len() == n_max {
            return None;
        }
        let size = table.len();
        let mut next = vec![0i64; size];
        for u in start..size {
            next.iter_mut().for_each(|c| *c = 0);
            next[u] += 1;
            for (w, &c) in coef.iter().enumerate() {
                if c != 0 {
                    next[w] += c;
                    next[w | u] -= c;
                }
            }
            let mut rhs = V::zero();
            for (w, &c) in next.iter().enumerate() {
                if c != 0 {
                    rhs.add_scaled(&table[w], c);
                }
            }
            tuple.push(u);
            let meet = inter & u;
            if table[meet] > rhs {
                return Some(tuple.clone());
            }
            if let Some(t) = go(table, n_max, u + 1, meet, &next, tuple) {
                return Some(t);
            }
            tuple.pop();
        }
        None
    }
    go(table, n_max, 0, full, &coef, &mut tuple)
}

/// Maxitive: `g(U | V) = max(g(U), g(V))`, with normalization.
pub fn is_possibility(g: &UncertaintyMeasure) -> Result<Verdict, MeasureError> {
    let n = g.space().atom_count();
    let table = g.values_table()?;
    let full = table.len() - 1;
    if !table[0].is_zero() {
        return Ok(Verdict::fail(vec![mask_bits(n, 0)], format!("value of the empty set is {}", table[0])));
    }
    if !table[full].is_one() {
        return Ok(Verdict::fail(vec![mask_bits(n, full)], format!("value of the carrier is {}", table[full])));
    }
    for u in 1..table.len() {
        let low = u & u.wrapping_neg();
        let rest = u ^ low;
        if rest == 0 {
            continue;
        }
        let max = Rat::max_of(&table[low], &table[rest]);
        if table[u] != max {
            return Ok(Verdict::fail(
                vec![mask_bits(n, low), mask_bits(n, rest)],
                format!("not maxitive: {} on the union, {} and {} on the parts", table[u], table[low], table[rest]),
            ));
        }
    }
    Ok(Verdict::Holds)
}
