//! Finite uncertainty spaces.
//!
//! A space is a finite carrier together with an algebra of measurable
//! subsets. Every algebra on a finite carrier is atomic, so the algebra is
//! stored as its atoms and every measurable set is a selection of atoms.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use thiserror::Error;

/// Largest atom count for which we enumerate every measurable set.
pub const MAX_ENUM_ATOMS: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpaceError {
    #[error("malformed space `{space}`: duplicate point `{point}`")]
    DuplicatePoint { space: String, point: String },
    #[error("space `{space}` has no point `{point}`")]
    UnknownPoint { space: String, point: String },
    #[error("malformed space `{space}`: atoms do not partition the carrier")]
    NotAPartition { space: String },
    #[error("sort error: set belongs to space `{found}`, expected `{expected}`")]
    ForeignSet { expected: String, found: String },
    #[error("space `{space}` has {atoms} atoms; at most {max} can be enumerated")]
    TooManyAtoms {
        space: String,
        atoms: usize,
        max: usize,
    },
}

/// A set of small indices (points or atoms).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bits(FixedBitSet);

impl Bits {
    pub fn empty(len: usize) -> Self {
        Bits(FixedBitSet::with_capacity(len))
    }

    pub fn full(len: usize) -> Self {
        let mut b = FixedBitSet::with_capacity(len);
        b.insert_range(..);
        Bits(b)
    }

    pub fn from_indices(len: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut b = Bits::empty(len);
        for i in indices {
            b.insert(i);
        }
        b
    }

    /// Bits of `mask`, lowest bit = index 0.
    pub fn from_mask(len: usize, mask: u64) -> Self {
        Bits::from_indices(len, (0..len).filter(|i| mask >> i & 1 == 1))
    }

    /// The subset as an integer mask, when it fits.
    pub fn mask(&self) -> Option<u64> {
        if self.len() > 63 {
            return None;
        }
        Some(self.iter().fold(0u64, |m, i| m | 1 << i))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_clear()
    }

    pub fn is_full(&self) -> bool {
        self.0.is_full()
    }

    pub fn count(&self) -> usize {
        self.0.count_ones(..)
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.contains(i)
    }

    pub fn insert(&mut self, i: usize) {
        self.0.insert(i);
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.ones()
    }

    pub fn first(&self) -> Option<usize> {
        self.0.minimum()
    }

    pub fn union(&self, other: &Bits) -> Bits {
        let mut b = self.0.clone();
        b.union_with(&other.0);
        Bits(b)
    }

    pub fn intersection(&self, other: &Bits) -> Bits {
        let mut b = self.0.clone();
        b.intersect_with(&other.0);
        Bits(b)
    }

    pub fn difference(&self, other: &Bits) -> Bits {
        let mut b = self.0.clone();
        b.difference_with(&other.0);
        Bits(b)
    }

    pub fn complement(&self) -> Bits {
        let mut b = self.0.clone();
        b.toggle_range(..);
        Bits(b)
    }

    pub fn is_subset(&self, other: &Bits) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn is_disjoint(&self, other: &Bits) -> bool {
        self.0.is_disjoint(&other.0)
    }

    pub fn intersects(&self, other: &Bits) -> bool {
        !self.is_disjoint(other)
    }
}

impl fmt::Debug for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// A finite carrier with an algebra of measurable sets, stored as atoms.
#[derive(Debug, Clone)]
pub struct Space {
    name: String,
    points: Vec<String>,
    index: HashMap<String, usize>,
    atoms: Vec<Vec<usize>>,
    atom_of: Vec<usize>,
    generators: Option<Vec<Vec<usize>>>,
}

pub type SpaceRef = Arc<Space>;

impl PartialEq for Space {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.points == other.points && self.atoms == other.atoms
    }
}

impl Eq for Space {}

fn index_points(name: &str, points: &[String]) -> Result<HashMap<String, usize>, SpaceError> {
    let mut index = HashMap::with_capacity(points.len());
    for (i, p) in points.iter().enumerate() {
        if index.insert(p.clone(), i).is_some() {
            return Err(SpaceError::DuplicatePoint {
                space: name.to_string(),
                point: p.clone(),
            });
        }
    }
    Ok(index)
}

impl Space {
    /// The least algebra on `points` containing every generator. Atoms are the
    /// nonempty classes of points sharing a generator-membership signature,
    /// ordered by their first point.
    pub fn generate(
        name: impl Into<String>,
        points: Vec<String>,
        generators: &[Vec<String>],
    ) -> Result<Space, SpaceError> {
        let name = name.into();
        let index = index_points(&name, &points)?;
        let mut gens = Vec::with_capacity(generators.len());
        for g in generators {
            let mut ids = Vec::with_capacity(g.len());
            for p in g {
                let i = *index.get(p).ok_or_else(|| SpaceError::UnknownPoint {
                    space: name.clone(),
                    point: p.clone(),
                })?;
                ids.push(i);
            }
            ids.sort_unstable();
            ids.dedup();
            gens.push(ids);
        }
        let sig_len = gens.len();
        let mut signature: Vec<FixedBitSet> = vec![FixedBitSet::with_capacity(sig_len); points.len()];
        for (gi, g) in gens.iter().enumerate() {
            for &p in g {
                signature[p].insert(gi);
            }
        }
        let mut by_sig: HashMap<&FixedBitSet, usize> = HashMap::new();
        let mut atoms: Vec<Vec<usize>> = Vec::new();
        let mut atom_of = vec![0; points.len()];
        for (p, sig) in signature.iter().enumerate() {
            let a = *by_sig.entry(sig).or_insert_with(|| {
                atoms.push(Vec::new());
                atoms.len() - 1
            });
            atoms[a].push(p);
            atom_of[p] = a;
        }
        Ok(Space {
            name,
            points,
            index,
            atoms,
            atom_of,
            generators: Some(gens),
        })
    }

    /// A space from an explicit partition.
    pub fn from_atoms(
        name: impl Into<String>,
        points: Vec<String>,
        atoms: Vec<Vec<usize>>,
    ) -> Result<Space, SpaceError> {
        let name = name.into();
        let index = index_points(&name, &points)?;
        let mut atoms: Vec<Vec<usize>> = atoms
            .into_iter()
            .map(|mut a| {
                a.sort_unstable();
                a
            })
            .collect();
        if atoms.iter().any(|a| a.is_empty()) {
            return Err(SpaceError::NotAPartition { space: name });
        }
        atoms.sort_by_key(|a| a[0]);
        let mut atom_of = vec![usize::MAX; points.len()];
        for (ai, a) in atoms.iter().enumerate() {
            for &p in a {
                if p >= points.len() || atom_of[p] != usize::MAX {
                    return Err(SpaceError::NotAPartition { space: name });
                }
                atom_of[p] = ai;
            }
        }
        if atom_of.contains(&usize::MAX) {
            return Err(SpaceError::NotAPartition { space: name });
        }
        Ok(Space {
            name,
            points,
            index,
            atoms,
            atom_of,
            generators: None,
        })
    }

    /// Every subset measurable: one atom per point.
    pub fn discrete(name: impl Into<String>, points: Vec<String>) -> Result<Space, SpaceError> {
        let atoms = (0..points.len()).map(|i| vec![i]).collect();
        Space::from_atoms(name, points, atoms)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn points(&self) -> &[String] {
        &self.points
    }

    pub fn point_count(&self) -> usize {
        self.points.len()
    }

    pub fn point_index(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn atoms(&self) -> &[Vec<usize>] {
        &self.atoms
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn atom_of(&self, point: usize) -> usize {
        self.atom_of[point]
    }

    /// Generators as declared, if the space was generated from a family.
    pub fn generators(&self) -> Option<&[Vec<usize>]> {
        self.generators.as_deref()
    }

    /// Number of measurable sets, `2^atoms`.
    pub fn member_count(&self) -> Result<usize, SpaceError> {
        self.check_enumerable()?;
        Ok(1usize << self.atoms.len())
    }

    pub fn check_enumerable(&self) -> Result<(), SpaceError> {
        if self.atoms.len() > MAX_ENUM_ATOMS {
            return Err(SpaceError::TooManyAtoms {
                space: self.name.clone(),
                atoms: self.atoms.len(),
                max: MAX_ENUM_ATOMS,
            });
        }
        Ok(())
    }

    /// Points covered by a selection of atoms.
    pub fn atoms_to_points(&self, atoms: &Bits) -> Bits {
        Bits::from_indices(
            self.points.len(),
            atoms.iter().flat_map(|a| self.atoms[a].iter().copied()),
        )
    }

    /// The atom selection whose union is exactly `points`, if one exists.
    pub fn points_to_atoms(&self, points: &Bits) -> Option<Bits> {
        let mut sel = Bits::empty(self.atoms.len());
        for (ai, atom) in self.atoms.iter().enumerate() {
            let hits = atom.iter().filter(|&&p| points.contains(p)).count();
            if hits == atom.len() {
                sel.insert(ai);
            } else if hits != 0 {
                return None;
            }
        }
        Some(sel)
    }

    /// Atoms touched by a point set.
    pub fn atoms_touching(&self, points: &Bits) -> Bits {
        Bits::from_indices(self.atoms.len(), points.iter().map(|p| self.atom_of[p]))
    }

    pub fn atom_label(&self, atom: usize) -> String {
        let names: Vec<&str> = self.atoms[atom]
            .iter()
            .map(|&p| self.points[p].as_str())
            .collect();
        format!("{{{}}}", names.join(" "))
    }

    pub fn describe_points(&self, points: &Bits) -> String {
        let names: Vec<&str> = points.iter().map(|p| self.points[p].as_str()).collect();
        format!("{{{}}}", names.join(", "))
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

/// Carrier = pairs in row-major order, labelled `(a, b)`; atoms are the
/// products of atom pairs.
pub fn product_space(a: &Space, b: &Space) -> Space {
    let nb = b.point_count();
    let mut points = Vec::with_capacity(a.point_count() * nb);
    for pa in &a.points {
        for pb in &b.points {
            points.push(format!("({pa}, {pb})"));
        }
    }
    let mut atoms = Vec::with_capacity(a.atom_count() * b.atom_count());
    for aa in &a.atoms {
        for ab in &b.atoms {
            let mut cell = Vec::with_capacity(aa.len() * ab.len());
            for &i in aa {
                for &j in ab {
                    cell.push(i * nb + j);
                }
            }
            atoms.push(cell);
        }
    }
    Space::from_atoms(format!("{} * {}", a.name, b.name), points, atoms)
        .expect("product of partitions is a partition")
}

/// Carrier = `inl(a)` for points of `a` followed by `inr(b)` for points of `b`.
pub fn coproduct_space(a: &Space, b: &Space) -> Space {
    let na = a.point_count();
    let points = a
        .points
        .iter()
        .map(|p| format!("inl({p})"))
        .chain(b.points.iter().map(|p| format!("inr({p})")))
        .collect();
    let atoms = a
        .atoms
        .iter()
        .cloned()
        .chain(b.atoms.iter().map(|atom| atom.iter().map(|&p| p + na).collect()))
        .collect();
    Space::from_atoms(format!("{} + {}", a.name, b.name), points, atoms)
        .expect("coproduct of partitions is a partition")
}

/// Checks that `map` (source point -> target point) is measurable: every
/// source atom lands inside a single target atom. On failure returns the
/// target atom whose preimage is not measurable.
pub fn check_measurable_map(source: &Space, target: &Space, map: &[usize]) -> Result<(), usize> {
    for atom in &source.atoms {
        let first = target.atom_of(map[atom[0]]);
        if atom.iter().any(|&p| target.atom_of(map[p]) != first) {
            return Err(first);
        }
    }
    Ok(())
}

/// For a measurable map, the source atoms inside the preimage of each target
/// atom selection.
pub fn preimage_atoms(source: &Space, target: &Space, map: &[usize], target_atoms: &Bits) -> Bits {
    Bits::from_indices(
        source.atom_count(),
        (0..source.atom_count())
            .filter(|&a| target_atoms.contains(target.atom_of(map[source.atoms[a][0]]))),
    )
}

/// A measurable subset of a specific space.
#[derive(Clone, PartialEq, Eq)]
pub struct MeasurableSet {
    space: SpaceRef,
    atoms: Bits,
}

impl MeasurableSet {
    pub fn from_atoms(space: SpaceRef, atoms: Bits) -> Self {
        debug_assert_eq!(atoms.len(), space.atom_count());
        MeasurableSet { space, atoms }
    }

    pub fn empty(space: SpaceRef) -> Self {
        let n = space.atom_count();
        MeasurableSet::from_atoms(space, Bits::empty(n))
    }

    pub fn carrier(space: SpaceRef) -> Self {
        let n = space.atom_count();
        MeasurableSet::from_atoms(space, Bits::full(n))
    }

    /// The measurable set with exactly these point labels, if it is one.
    pub fn from_labels<S: AsRef<str>>(space: SpaceRef, labels: &[S]) -> Result<Option<Self>, SpaceError> {
        let mut pts = Bits::empty(space.point_count());
        for l in labels {
            let l = l.as_ref();
            let i = space.point_index(l).ok_or_else(|| SpaceError::UnknownPoint {
                space: space.name().to_string(),
                point: l.to_string(),
            })?;
            pts.insert(i);
        }
        Ok(space
            .points_to_atoms(&pts)
            .map(|atoms| MeasurableSet::from_atoms(space, atoms)))
    }

    pub fn space(&self) -> &SpaceRef {
        &self.space
    }

    pub fn atoms(&self) -> &Bits {
        &self.atoms
    }

    pub fn points(&self) -> Bits {
        self.space.atoms_to_points(&self.atoms)
    }

    pub fn point_labels(&self) -> Vec<String> {
        self.points()
            .iter()
            .map(|p| self.space.points()[p].clone())
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn is_carrier(&self) -> bool {
        self.atoms.is_full()
    }

    fn same_space(&self, other: &MeasurableSet) -> Result<(), SpaceError> {
        if Arc::ptr_eq(&self.space, &other.space) || *self.space == *other.space {
            Ok(())
        } else {
            Err(SpaceError::ForeignSet {
                expected: self.space.name().to_string(),
                found: other.space.name().to_string(),
            })
        }
    }

    pub fn complement(&self) -> MeasurableSet {
        MeasurableSet::from_atoms(self.space.clone(), self.atoms.complement())
    }

    pub fn union(&self, other: &MeasurableSet) -> Result<MeasurableSet, SpaceError> {
        self.same_space(other)?;
        Ok(MeasurableSet::from_atoms(
            self.space.clone(),
            self.atoms.union(&other.atoms),
        ))
    }

    pub fn intersection(&self, other: &MeasurableSet) -> Result<MeasurableSet, SpaceError> {
        self.same_space(other)?;
        Ok(MeasurableSet::from_atoms(
            self.space.clone(),
            self.atoms.intersection(&other.atoms),
        ))
    }

    pub fn is_subset(&self, other: &MeasurableSet) -> Result<bool, SpaceError> {
        self.same_space(other)?;
        Ok(self.atoms.is_subset(&other.atoms))
    }

    pub fn contains_point(&self, point: usize) -> bool {
        self.atoms.contains(self.space.atom_of(point))
    }

    pub fn contains_label(&self, label: &str) -> Result<bool, SpaceError> {
        let p = self
            .space
            .point_index(label)
            .ok_or_else(|| SpaceError::UnknownPoint {
                space: self.space.name().to_string(),
                point: label.to_string(),
            })?;
        Ok(self.contains_point(p))
    }
}

impl fmt::Debug for MeasurableSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.space.describe_points(&self.points()))
    }
}

/// Iterates every measurable set of a space as an atom selection, in mask
/// order (bit `i` = atom `i`).
pub fn all_members(space: &Space) -> Result<impl Iterator<Item = Bits> + '_, SpaceError> {
    let n = space.atom_count();
    let count = space.member_count()?;
    Ok((0..count as u64).map(move |m| Bits::from_mask(n, m)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn atom_labels(s: &Space) -> Vec<Vec<String>> {
        s.atoms()
            .iter()
            .map(|a| a.iter().map(|&p| s.points()[p].clone()).collect())
            .collect()
    }

    #[test]
    fn generated_algebra_of_m() {
        let m = Space::generate("M", labels(&["a", "b", "c"]), &[labels(&["a"])]).unwrap();
        assert_eq!(atom_labels(&m), vec![labels(&["a"]), labels(&["b", "c"])]);
        assert_eq!(m.member_count().unwrap(), 4);
    }

    #[test]
    fn generated_algebra_of_x() {
        let x = Space::generate("X", labels(&["x", "y", "z", "t"]), &[labels(&["x", "y"])]).unwrap();
        assert_eq!(atom_labels(&x), vec![labels(&["x", "y"]), labels(&["z", "t"])]);
    }

    #[test]
    fn singleton_without_generators() {
        let s = Space::generate("S", labels(&["a"]), &[]).unwrap();
        assert_eq!(atom_labels(&s), vec![labels(&["a"])]);
        assert_eq!(s.member_count().unwrap(), 2);
    }

    #[test]
    fn duplicate_points_are_rejected() {
        let err = Space::generate("S", labels(&["a", "a"]), &[]).unwrap_err();
        assert!(matches!(err, SpaceError::DuplicatePoint { .. }));
    }

    #[test]
    fn unknown_generator_point_is_rejected() {
        let err = Space::generate("S", labels(&["a"]), &[labels(&["q"])]).unwrap_err();
        assert!(matches!(err, SpaceError::UnknownPoint { .. }));
    }

    #[test]
    fn overlapping_generators_split_cells() {
        let s = Space::generate(
            "S",
            labels(&["1", "2", "3", "4"]),
            &[labels(&["1", "2"]), labels(&["2", "3"])],
        )
        .unwrap();
        assert_eq!(
            atom_labels(&s),
            vec![labels(&["1"]), labels(&["2"]), labels(&["3"]), labels(&["4"])]
        );
    }

    #[test]
    fn set_operations_in_m() {
        let m = Arc::new(Space::generate("M", labels(&["a", "b", "c"]), &[labels(&["a"])]).unwrap());
        let a = MeasurableSet::from_labels(m.clone(), &["a"]).unwrap().unwrap();
        let bc = MeasurableSet::from_labels(m.clone(), &["b", "c"]).unwrap().unwrap();
        assert_eq!(a.complement(), bc);
        assert!(a.union(&a.complement()).unwrap().is_carrier());
        assert!(a.intersection(&MeasurableSet::empty(m.clone())).unwrap().is_empty());
        assert!(MeasurableSet::from_labels(m.clone(), &["b"]).unwrap().is_none());
        assert!(bc.contains_label("c").unwrap());
        assert!(!bc.contains_label("a").unwrap());
    }

    #[test]
    fn mixed_algebra_operands_are_a_sort_error() {
        let m = Arc::new(Space::generate("M", labels(&["a", "b"]), &[]).unwrap());
        let n = Arc::new(Space::generate("N", labels(&["u"]), &[]).unwrap());
        let err = MeasurableSet::carrier(m)
            .union(&MeasurableSet::carrier(n))
            .unwrap_err();
        assert!(matches!(err, SpaceError::ForeignSet { .. }));
    }

    #[test]
    fn empty_carrier_is_allowed() {
        let e = Space::generate("E", vec![], &[]).unwrap();
        assert_eq!(e.atom_count(), 0);
        assert_eq!(e.member_count().unwrap(), 1);
    }

    #[test]
    fn discrete_and_bad_partitions() {
        let d = Space::discrete("D", labels(&["p", "q"])).unwrap();
        assert_eq!(d.atom_count(), 2);
        let bad = Space::from_atoms("B", labels(&["p", "q"]), vec![vec![0]]);
        assert!(matches!(bad, Err(SpaceError::NotAPartition { .. })));
        let overlap = Space::from_atoms("B", labels(&["p", "q"]), vec![vec![0, 1], vec![1]]);
        assert!(matches!(overlap, Err(SpaceError::NotAPartition { .. })));
    }
}
