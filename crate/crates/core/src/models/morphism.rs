use std::fmt;

use super::{parse_map_file, Coalgebra, ModelError};
use crate::functors::FunctorExpr;
use crate::logic::SortedFormula;
use crate::semantics::Checker;
use crate::spaces::check_measurable_map;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MorphismVerdict {
    Morphism,
    /// The preimage of this target atom is not measurable.
    NotMeasurable { target_atom: String },
    /// `alpha'(f x)` differs from `T f (alpha x)`.
    SquareFails { point: String, expected: String, found: String },
    /// A formula separates a point from its image.
    PreservationFails { formula: String, point: String },
}

impl fmt::Display for MorphismVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MorphismVerdict::Morphism => f.write_str("morphism"),
            MorphismVerdict::NotMeasurable { target_atom } => {
                write!(f, "not measurable: preimage of {target_atom} is not measurable")
            }
            MorphismVerdict::SquareFails { point, expected, found } => write!(
                f,
                "square fails at {point}: T f (alpha {point}) = {expected}, but the target has {found}"
            ),
            MorphismVerdict::PreservationFails { formula, point } => {
                write!(f, "preservation fails: {formula} separates {point} from its image")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MorphismReport {
    pub verdict: MorphismVerdict,
    /// Formulas whose preservation was confirmed.
    pub formulas_checked: usize,
}

/// Resolves a map file against the two state spaces.
pub fn load_map(src: &str, source: &Coalgebra, target: &Coalgebra) -> Result<Vec<usize>, ModelError> {
    let pairs = parse_map_file(src)?;
    let mut f = vec![None; source.state().point_count()];
    for (a, b) in pairs {
        let i = source
            .point(&a)
            .ok_or_else(|| ModelError::general(format!("`{a}` is not a source state")))?;
        let j = target
            .point(&b)
            .ok_or_else(|| ModelError::general(format!("`{b}` is not a target state")))?;
        if f[i].replace(j).is_some() {
            return Err(ModelError::general(format!("`{a}` mapped twice")));
        }
    }
    f.iter()
        .enumerate()
        .map(|(i, j)| j.ok_or_else(|| ModelError::general(format!("`{}` is not mapped", source.state().points()[i]))))
        .collect()
}

/// Checks that `f` is a coalgebra morphism from `source` to `target`, then
/// that the given formulas are preserved and reflected along it. Formulas
/// at finite sorts are compared on every point; at measure sorts, on the
/// structure map's images.
pub fn check_morphism(
    f: &[usize],
    source: &Coalgebra,
    target: &Coalgebra,
    formulas: &[SortedFormula],
) -> Result<MorphismReport, ModelError> {
    let t = source.functor();
    if t != target.functor() {
        return Err(ModelError::general(format!(
            "the models have different functors ({t} and {})",
            target.functor()
        )));
    }
    for m in t.constants() {
        if source.universe().constant(&m) != target.universe().constant(&m) {
            return Err(ModelError::general(format!("constant space `{m}` differs between the models")));
        }
    }
    let (xs, ys) = (source.state(), target.state());
    if f.len() != xs.point_count() || f.iter().any(|&j| j >= ys.point_count()) {
        return Err(ModelError::general("the map is not a total function between the state spaces"));
    }
    let report = |verdict, n| Ok(MorphismReport { verdict, formulas_checked: n });
    if let Err(atom) = check_measurable_map(xs, ys, f) {
        return report(
            MorphismVerdict::NotMeasurable {
                target_atom: ys.atom_label(atom),
            },
            0,
        );
    }
    let (su, tu) = (source.universe(), target.universe());
    for x in 0..xs.point_count() {
        let image = su
            .map_element(source.alpha(x), t, f, tu)
            .map_err(|e| ModelError::general(e.0))?;
        let there = target.alpha(f[x]);
        if !image.ext_eq(there) {
            return report(
                MorphismVerdict::SquareFails {
                    point: xs.points()[x].clone(),
                    expected: target.describe(&image, t),
                    found: target.describe(there, t),
                },
                0,
            );
        }
    }
    let (cs, ct) = (Checker::new(source), Checker::new(target));
    for (n, phi) in formulas.iter().enumerate() {
        let s: &FunctorExpr = &phi.sort;
        let elements: Vec<_> = match su.space(s) {
            Some(sp) => (0..sp.point_count()).map(|p| su.element_at(s, p)).collect(),
            None if s == t => source.structure_map().to_vec(),
            None => Vec::new(),
        };
        for e in elements {
            let img = su.map_element(&e, s, f, tu).map_err(|e| ModelError::general(e.0))?;
            if cs.sat(&e, &phi.formula, s) != ct.sat(&img, &phi.formula, s) {
                return report(
                    MorphismVerdict::PreservationFails {
                        formula: phi.formula.to_string(),
                        point: source.describe(&e, s),
                    },
                    n,
                );
            }
        }
    }
    report(MorphismVerdict::Morphism, formulas.len())
}
