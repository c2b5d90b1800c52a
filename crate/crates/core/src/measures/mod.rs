//! Uncertainty measures over finite spaces.
//!
//! One value type, [`UncertaintyMeasure`], covers every representation the
//! checker understands: finitely additive probabilities, upper/lower
//! envelopes of finite credal sets, tabulated set functions, mass functions
//! and possibility distributions. Values are always exact.

mod verify;

pub use verify::{
    covers, find_cover_violation, is_nk_cover, is_plausibility, is_possibility, is_probability,
    is_upper_probability_lp, CoverWitness, UpperVerdict, Verdict,
};

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::rational::Rat;
use crate::spaces::{check_measurable_map, Bits, MeasurableSet, Space, SpaceError, SpaceRef};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MeasureError {
    #[error("envelope over an empty family")]
    EmptyFamily,
    #[error("family members live on different spaces (`{0}` and `{1}`)")]
    MixedSpaces(String, String),
    #[error("malformed measure: {0}")]
    Malformed(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("map is not measurable: preimage of {target} is not a measurable set")]
    NotMeasurable { target: String },
}

/// Which set function a measure denotes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MeasureKind {
    Probability,
    Upper,
    Lower,
    Plausibility,
    Belief,
    Possibility,
    Necessity,
}

impl MeasureKind {
    pub fn dual(self) -> MeasureKind {
        use MeasureKind::*;
        match self {
            Probability => Probability,
            Upper => Lower,
            Lower => Upper,
            Plausibility => Belief,
            Belief => Plausibility,
            Possibility => Necessity,
            Necessity => Possibility,
        }
    }

    pub fn keyword(self) -> &'static str {
        use MeasureKind::*;
        match self {
            Probability => "probability",
            Upper => "upper",
            Lower => "lower",
            Plausibility => "plausibility",
            Belief => "belief",
            Possibility => "possibility",
            Necessity => "necessity",
        }
    }

    pub fn from_keyword(s: &str) -> Option<MeasureKind> {
        use MeasureKind::*;
        Some(match s {
            "probability" => Probability,
            "upper" => Upper,
            "lower" => Lower,
            "plausibility" => Plausibility,
            "belief" => Belief,
            "possibility" => Possibility,
            "necessity" => Necessity,
            _ => return None,
        })
    }
}

impl fmt::Display for MeasureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EnvelopeKind {
    Upper,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MassReading {
    Plausibility,
    Belief,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PossReading {
    Possibility,
    Necessity,
}

/// A finitely additive probability given by its atom weights.
#[derive(Clone, PartialEq)]
pub struct ProbabilityMeasure {
    space: SpaceRef,
    weights: Vec<Rat>,
}

impl fmt::Debug for ProbabilityMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Prob{:?}", self.weights)
    }
}

impl ProbabilityMeasure {
    pub fn new(space: SpaceRef, weights: Vec<Rat>) -> Result<Self, MeasureError> {
        if weights.len() != space.atom_count() {
            return Err(MeasureError::Malformed(format!(
                "{} weights for {} atoms of `{}`",
                weights.len(),
                space.atom_count(),
                space.name()
            )));
        }
        if let Some(w) = weights.iter().find(|w| w.is_negative()) {
            return Err(MeasureError::Malformed(format!("negative weight {w}")));
        }
        let total: Rat = weights.iter().sum();
        if !total.is_one() {
            return Err(MeasureError::Malformed(format!(
                "weights sum to {total}, not 1"
            )));
        }
        Ok(ProbabilityMeasure { space, weights })
    }

    /// The zero-one measure concentrated on one atom.
    pub fn dirac(space: SpaceRef, atom: usize) -> Self {
        let mut weights = vec![Rat::zero(); space.atom_count()];
        weights[atom] = Rat::one();
        ProbabilityMeasure { space, weights }
    }

    pub fn space(&self) -> &SpaceRef {
        &self.space
    }

    pub fn weights(&self) -> &[Rat] {
        &self.weights
    }

    pub fn value(&self, atoms: &Bits) -> Rat {
        atoms.iter().map(|a| &self.weights[a]).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeasureRepr {
    Probability(ProbabilityMeasure),
    Envelope {
        kind: EnvelopeKind,
        family: Vec<ProbabilityMeasure>,
    },
    /// One value per measurable set, indexed by atom mask.
    Tabulated { kind: MeasureKind, values: Vec<Rat> },
    Mass {
        focal: Vec<(Bits, Rat)>,
        reading: MassReading,
    },
    /// One value per point of the carrier.
    PossDist { dist: Vec<Rat>, reading: PossReading },
}

/// A set function on the measurable sets of one space.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyMeasure {
    space: SpaceRef,
    repr: MeasureRepr,
}

fn same_space(a: &SpaceRef, b: &SpaceRef) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

fn check_unit(v: &Rat, what: &str) -> Result<(), MeasureError> {
    if v.in_unit_interval() {
        Ok(())
    } else {
        Err(MeasureError::Malformed(format!("{what} {v} outside [0,1]")))
    }
}

impl UncertaintyMeasure {
    pub fn probability(p: ProbabilityMeasure) -> Self {
        UncertaintyMeasure {
            space: p.space.clone(),
            repr: MeasureRepr::Probability(p),
        }
    }

    fn envelope(kind: EnvelopeKind, family: Vec<ProbabilityMeasure>) -> Result<Self, MeasureError> {
        let first = family.first().ok_or(MeasureError::EmptyFamily)?;
        let space = first.space.clone();
        if let Some(other) = family.iter().find(|p| !same_space(&p.space, &space)) {
            return Err(MeasureError::MixedSpaces(
                space.name().to_string(),
                other.space.name().to_string(),
            ));
        }
        Ok(UncertaintyMeasure {
            space,
            repr: MeasureRepr::Envelope { kind, family },
        })
    }

    /// Pointwise maximum of a finite credal set.
    pub fn upper_envelope(family: Vec<ProbabilityMeasure>) -> Result<Self, MeasureError> {
        Self::envelope(EnvelopeKind::Upper, family)
    }

    /// Pointwise minimum of a finite credal set.
    pub fn lower_envelope(family: Vec<ProbabilityMeasure>) -> Result<Self, MeasureError> {
        Self::envelope(EnvelopeKind::Lower, family)
    }

    /// A set function given by its value on every measurable set (indexed by
    /// atom mask). Only normalization is checked here; whether the values
    /// really form a measure of `kind` is the verifiers' job.
    pub fn tabulated(space: SpaceRef, kind: MeasureKind, values: Vec<Rat>) -> Result<Self, MeasureError> {
        let count = space.member_count()?;
        if values.len() != count {
            return Err(MeasureError::Malformed(format!(
                "table has {} entries, algebra has {count} members",
                values.len()
            )));
        }
        for v in &values {
            check_unit(v, "table value")?;
        }
        if !values[0].is_zero() {
            return Err(MeasureError::Malformed("value of the empty set is not 0".into()));
        }
        if !values[count - 1].is_one() {
            return Err(MeasureError::Malformed("value of the carrier is not 1".into()));
        }
        Ok(UncertaintyMeasure {
            space,
            repr: MeasureRepr::Tabulated { kind, values },
        })
    }

    /// A mass function on focal sets (atom selections).
    pub fn from_mass(space: SpaceRef, focal: Vec<(Bits, Rat)>, reading: MassReading) -> Result<Self, MeasureError> {
        let mut total = Rat::zero();
        for (i, (set, m)) in focal.iter().enumerate() {
            if set.len() != space.atom_count() {
                return Err(MeasureError::Malformed("focal set over a foreign algebra".into()));
            }
            if set.is_empty() {
                return Err(MeasureError::Malformed("mass on the empty set".into()));
            }
            if m.is_negative() {
                return Err(MeasureError::Malformed(format!("negative mass {m}")));
            }
            if focal[..i].iter().any(|(s, _)| s == set) {
                return Err(MeasureError::Malformed(format!(
                    "focal set {} listed twice",
                    space.describe_points(&space.atoms_to_points(set))
                )));
            }
            total += m;
        }
        if !total.is_one() {
            return Err(MeasureError::Malformed(format!("masses sum to {total}, not 1")));
        }
        Ok(UncertaintyMeasure {
            space,
            repr: MeasureRepr::Mass { focal, reading },
        })
    }

    /// A possibility distribution, one value per point.
    pub fn from_poss_dist(space: SpaceRef, dist: Vec<Rat>, reading: PossReading) -> Result<Self, MeasureError> {
        if dist.len() != space.point_count() {
            return Err(MeasureError::Malformed(format!(
                "{} distribution values for {} points",
                dist.len(),
                space.point_count()
            )));
        }
        for v in &dist {
            check_unit(v, "possibility value")?;
        }
        if !dist.iter().any(Rat::is_one) {
            return Err(MeasureError::Malformed(
                "possibility distribution does not attain 1".into(),
            ));
        }
        Ok(UncertaintyMeasure {
            space,
            repr: MeasureRepr::PossDist { dist, reading },
        })
    }

    pub fn space(&self) -> &SpaceRef {
        &self.space
    }

    pub fn repr(&self) -> &MeasureRepr {
        &self.repr
    }

    pub fn kind(&self) -> MeasureKind {
        match &self.repr {
            MeasureRepr::Probability(_) => MeasureKind::Probability,
            MeasureRepr::Envelope { kind: EnvelopeKind::Upper, .. } => MeasureKind::Upper,
            MeasureRepr::Envelope { kind: EnvelopeKind::Lower, .. } => MeasureKind::Lower,
            MeasureRepr::Tabulated { kind, .. } => *kind,
            MeasureRepr::Mass { reading: MassReading::Plausibility, .. } => MeasureKind::Plausibility,
            MeasureRepr::Mass { reading: MassReading::Belief, .. } => MeasureKind::Belief,
            MeasureRepr::PossDist { reading: PossReading::Possibility, .. } => MeasureKind::Possibility,
            MeasureRepr::PossDist { reading: PossReading::Necessity, .. } => MeasureKind::Necessity,
        }
    }

    /// Value on an atom selection of this measure's space.
    pub fn value(&self, atoms: &Bits) -> Rat {
        debug_assert_eq!(atoms.len(), self.space.atom_count());
        match &self.repr {
            MeasureRepr::Probability(p) => p.value(atoms),
            MeasureRepr::Envelope { kind, family } => {
                let vals = family.iter().map(|p| p.value(atoms));
                match kind {
                    EnvelopeKind::Upper => vals.max(),
                    EnvelopeKind::Lower => vals.min(),
                }
                .expect("nonempty family")
            }
            MeasureRepr::Tabulated { values, .. } => {
                values[atoms.mask().expect("tabulated spaces are small") as usize].clone()
            }
            MeasureRepr::Mass { focal, reading } => focal
                .iter()
                .filter(|(set, _)| match reading {
                    MassReading::Plausibility => set.intersects(atoms),
                    MassReading::Belief => set.is_subset(atoms),
                })
                .map(|(_, m)| m)
                .sum(),
            MeasureRepr::PossDist { dist, reading } => {
                let poss = |sel: &Bits| {
                    self.space
                        .atoms_to_points(sel)
                        .iter()
                        .map(|p| &dist[p])
                        .max()
                        .cloned()
                        .unwrap_or_else(Rat::zero)
                };
                match reading {
                    PossReading::Possibility => poss(atoms),
                    PossReading::Necessity => poss(&atoms.complement()).complement(),
                }
            }
        }
    }

    /// `1 - value(complement)`.
    pub fn dual_value(&self, atoms: &Bits) -> Rat {
        self.value(&atoms.complement()).complement()
    }

    /// Value on a measurable set; the set must belong to this space.
    pub fn eval(&self, set: &MeasurableSet) -> Result<Rat, MeasureError> {
        if !same_space(set.space(), &self.space) {
            return Err(SpaceError::ForeignSet {
                expected: self.space.name().to_string(),
                found: set.space().name().to_string(),
            }
            .into());
        }
        Ok(self.value(set.atoms()))
    }

    /// The dual set function `U -> 1 - m(U^c)`, keeping the representation
    /// where the dual has one.
    pub fn dual(&self) -> UncertaintyMeasure {
        let repr = match &self.repr {
            MeasureRepr::Probability(p) => MeasureRepr::Probability(p.clone()),
            MeasureRepr::Envelope { kind, family } => MeasureRepr::Envelope {
                kind: match kind {
                    EnvelopeKind::Upper => EnvelopeKind::Lower,
                    EnvelopeKind::Lower => EnvelopeKind::Upper,
                },
                family: family.clone(),
            },
            MeasureRepr::Mass { focal, reading } => MeasureRepr::Mass {
                focal: focal.clone(),
                reading: match reading {
                    MassReading::Plausibility => MassReading::Belief,
                    MassReading::Belief => MassReading::Plausibility,
                },
            },
            MeasureRepr::PossDist { dist, reading } => MeasureRepr::PossDist {
                dist: dist.clone(),
                reading: match reading {
                    PossReading::Possibility => PossReading::Necessity,
                    PossReading::Necessity => PossReading::Possibility,
                },
            },
            MeasureRepr::Tabulated { kind, values } => {
                let full = values.len() - 1;
                MeasureRepr::Tabulated {
                    kind: kind.dual(),
                    values: (0..values.len()).map(|m| values[full ^ m].complement()).collect(),
                }
            }
        };
        UncertaintyMeasure {
            space: self.space.clone(),
            repr,
        }
    }

    /// Values on every measurable set, in atom-mask order.
    pub fn values_table(&self) -> Result<Vec<Rat>, MeasureError> {
        if let MeasureRepr::Tabulated { values, .. } = &self.repr {
            return Ok(values.clone());
        }
        let n = self.space.atom_count();
        let count = self.space.member_count()?;
        Ok((0..count as u64)
            .map(|m| self.value(&Bits::from_mask(n, m)))
            .collect())
    }

    /// The same set function as an explicit table.
    pub fn tabulate(&self) -> Result<UncertaintyMeasure, MeasureError> {
        Ok(UncertaintyMeasure {
            space: self.space.clone(),
            repr: MeasureRepr::Tabulated {
                kind: self.kind(),
                values: self.values_table()?,
            },
        })
    }

    /// Extensional equality: same space and equal values on every measurable
    /// set. The kind is not compared.
    pub fn pointwise_eq(&self, other: &UncertaintyMeasure) -> Result<bool, MeasureError> {
        if !same_space(&self.space, &other.space) {
            return Ok(false);
        }
        if self.repr == other.repr {
            return Ok(true);
        }
        match (&self.repr, &other.repr) {
            (MeasureRepr::Probability(a), MeasureRepr::Probability(b)) => Ok(a.weights == b.weights),
            _ => Ok(self.values_table()? == other.values_table()?),
        }
    }

    /// Image measure along a point map `source point -> target point`:
    /// `value(U) = m(map^-1(U))`. The map must be measurable.
    pub fn pushforward(&self, target: SpaceRef, map: &[usize]) -> Result<UncertaintyMeasure, MeasureError> {
        let source: &Space = &self.space;
        assert_eq!(map.len(), source.point_count(), "map must be total");
        check_measurable_map(source, &target, map).map_err(|atom| MeasureError::NotMeasurable {
            target: target.atom_label(atom),
        })?;
        let atom_image: Vec<usize> = source
            .atoms()
            .iter()
            .map(|a| target.atom_of(map[a[0]]))
            .collect();
        let push_prob = |p: &ProbabilityMeasure| {
            let mut w = vec![Rat::zero(); target.atom_count()];
            for (a, weight) in p.weights.iter().enumerate() {
                w[atom_image[a]] += weight;
            }
            ProbabilityMeasure {
                space: target.clone(),
                weights: w,
            }
        };
        let repr = match &self.repr {
            MeasureRepr::Probability(p) => MeasureRepr::Probability(push_prob(p)),
            MeasureRepr::Envelope { kind, family } => MeasureRepr::Envelope {
                kind: *kind,
                family: family.iter().map(push_prob).collect(),
            },
            MeasureRepr::Mass { focal, reading } => {
                let mut out: Vec<(Bits, Rat)> = Vec::new();
                for (set, m) in focal {
                    let image = Bits::from_indices(target.atom_count(), set.iter().map(|a| atom_image[a]));
                    match out.iter_mut().find(|(s, _)| *s == image) {
                        Some((_, acc)) => *acc += m,
                        None => out.push((image, m.clone())),
                    }
                }
                MeasureRepr::Mass {
                    focal: out,
                    reading: *reading,
                }
            }
            MeasureRepr::PossDist { dist, reading } => {
                let mut out = vec![Rat::zero(); target.point_count()];
                for (x, v) in dist.iter().enumerate() {
                    if *v > out[map[x]] {
                        out[map[x]] = v.clone();
                    }
                }
                MeasureRepr::PossDist {
                    dist: out,
                    reading: *reading,
                }
            }
            MeasureRepr::Tabulated { kind, .. } => {
                let n = target.atom_count();
                let values = (0..target.member_count()? as u64)
                    .map(|m| {
                        let sel = Bits::from_mask(n, m);
                        let pre = Bits::from_indices(
                            source.atom_count(),
                            (0..source.atom_count()).filter(|&a| sel.contains(atom_image[a])),
                        );
                        self.value(&pre)
                    })
                    .collect();
                MeasureRepr::Tabulated { kind: *kind, values }
            }
        };
        Ok(UncertaintyMeasure { space: target, repr })
    }
}

#[cfg(test)]
mod tests;
