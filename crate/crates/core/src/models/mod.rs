//! Coalgebras, the model file format and morphisms.

mod morphism;
mod syntax;

pub use morphism::{check_morphism, load_map, MorphismReport, MorphismVerdict};
pub use syntax::{parse_map_file, parse_model_file, parse_term, Decl, DeclKind, ModelFile, SortExpr, Term};

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use crate::functors::{support_space, Element, FunctorExpr, MeasureElem, Realized, Universe};
use crate::logic::Signature;
use crate::measures::{EnvelopeKind, MeasureRepr, ProbabilityMeasure, UncertaintyMeasure};
use crate::rational::Rat;
use crate::spaces::{Bits, Space, SpaceRef};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelError {
    pub line: Option<usize>,
    pub message: String,
}

impl ModelError {
    pub fn at(line: usize, msg: impl Into<String>) -> Self {
        ModelError {
            line: Some(line),
            message: msg.into(),
        }
    }

    pub fn general(msg: impl Into<String>) -> Self {
        ModelError {
            line: None,
            message: msg.into(),
        }
    }
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ModelError {}

/// Everything wrong with a model, in file order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelErrors(pub Vec<ModelError>);

impl fmt::Display for ModelErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ModelErrors {}

impl From<ModelError> for ModelErrors {
    fn from(e: ModelError) -> Self {
        ModelErrors(vec![e])
    }
}

/// A measure declared by name in a model file.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedMeasure {
    pub name: String,
    /// The sort the measure is defined on.
    pub sort: FunctorExpr,
    pub elem: MeasureElem,
}

/// A coalgebra `alpha : X -> T X` over finite spaces.
#[derive(Debug, Clone)]
pub struct Coalgebra {
    universe: Universe,
    signature: Signature,
    alpha: Vec<Element>,
    measures: Vec<NamedMeasure>,
    source: Option<ModelFile>,
}

/// Structural equality of the coalgebras over the constants the functor
/// uses; other declared spaces, named measures and the source
/// text are not compared.
impl PartialEq for Coalgebra {
    fn eq(&self, other: &Self) -> bool {
        **self.state() == **other.state()
            && self.functor() == other.functor()
            && self.functor().constants().iter().all(|m| {
                match (self.universe.constant(m), other.universe.constant(m)) {
                    (Some(x), Some(y)) => **x == **y,
                    _ => false,
                }
            })
            && self.alpha == other.alpha
    }
}

impl Coalgebra {
    /// Builds and validates a coalgebra. `consts` must declare every constant
    /// space of `functor`.
    pub fn new(
        state: SpaceRef,
        consts: BTreeMap<String, SpaceRef>,
        functor: FunctorExpr,
        alpha: Vec<Element>,
    ) -> Result<Coalgebra, ModelErrors> {
        Self::with_measures(state, consts, functor, alpha, Vec::new())
    }

    pub fn with_measures(
        state: SpaceRef,
        consts: BTreeMap<String, SpaceRef>,
        functor: FunctorExpr,
        alpha: Vec<Element>,
        measures: Vec<NamedMeasure>,
    ) -> Result<Coalgebra, ModelErrors> {
        let signature =
            Signature::new(&functor, consts.clone()).map_err(|e| ModelError::general(e.msg.clone()))?;
        let c = Coalgebra {
            universe: Universe::new(state, consts),
            signature,
            alpha,
            measures,
            source: None,
        };
        let errs = c.validate(None);
        if errs.is_empty() {
            Ok(c)
        } else {
            Err(ModelErrors(errs))
        }
    }

    pub fn universe(&self) -> &Universe {
        &self.universe
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn functor(&self) -> &FunctorExpr {
        self.signature.functor()
    }

    pub fn state(&self) -> &SpaceRef {
        self.universe.state()
    }

    pub fn alpha(&self, x: usize) -> &Element {
        &self.alpha[x]
    }

    pub fn structure_map(&self) -> &[Element] {
        &self.alpha
    }

    pub fn measures(&self) -> &[NamedMeasure] {
        &self.measures
    }

    pub fn measure(&self, name: &str) -> Option<&NamedMeasure> {
        self.measures.iter().find(|m| m.name == name)
    }

    pub fn source(&self) -> Option<&ModelFile> {
        self.source.as_ref()
    }

    pub fn point(&self, label: &str) -> Option<usize> {
        self.state().point_index(label)
    }

    /// Like [`Universe::describe`], but measures are shown by declared name
    /// when one matches.
    pub fn describe(&self, e: &Element, s: &FunctorExpr) -> String {
        match (s, e) {
            (FunctorExpr::Prod(a, b), Element::Pair(x, y)) => {
                format!("({}, {})", self.describe(x, a), self.describe(y, b))
            }
            (FunctorExpr::Coprod(a, _), Element::Inl(x)) => format!("inl({})", self.describe(x, a)),
            (FunctorExpr::Coprod(_, b), Element::Inr(y)) => format!("inr({})", self.describe(y, b)),
            (_, Element::Measure(m)) => self
                .measures
                .iter()
                .find(|n| n.elem == **m)
                .or_else(|| self.measures.iter().find(|n| e.ext_eq(&Element::measure(n.elem.clone()))))
                .map(|n| n.name.clone())
                .unwrap_or_else(|| self.universe.describe(e, s)),
            _ => self.universe.describe(e, s),
        }
    }

    fn validate(&self, alpha_line: Option<usize>) -> Vec<ModelError> {
        let err = |m: String| match alpha_line {
            Some(l) => ModelError::at(l, m),
            None => ModelError::general(m),
        };
        let t = self.functor();
        let x = self.state();
        let mut errs = Vec::new();
        if self.alpha.len() != x.point_count() {
            errs.push(err(format!(
                "structure map has {} entries for {} states",
                self.alpha.len(),
                x.point_count()
            )));
            return errs;
        }
        if let Err(e) = self.universe.check_functor(t) {
            errs.push(err(e.0));
            return errs;
        }
        let mut ok = true;
        for (i, e) in self.alpha.iter().enumerate() {
            if let Err(e) = self.universe.check_element(e, t) {
                errs.push(err(format!("alpha({}): {e}", x.points()[i])));
                ok = false;
            }
        }
        if !ok {
            return errs;
        }
        for atom in x.atoms() {
            let first = atom[0];
            if let Some(&other) = atom[1..]
                .iter()
                .find(|&&p| !self.universe.indistinguishable(&self.alpha[first], &self.alpha[p], t))
            {
                let labels: Vec<&str> = atom.iter().map(|&p| x.points()[p].as_str()).collect();
                errs.push(err(format!(
                    "alpha is not measurable: atom {{{}}} is split ({} -> {}, {} -> {})",
                    labels.join(","),
                    x.points()[first],
                    self.describe(&self.alpha[first], t),
                    x.points()[other],
                    self.describe(&self.alpha[other], t),
                )));
            }
        }
        errs
    }

    /// Serializes to the model file format. A loaded model prints its
    /// declarations as read; a built one gets generated names.
    pub fn to_file(&self) -> Result<ModelFile, ModelError> {
        if let Some(f) = &self.source {
            return Ok(f.clone());
        }
        Synth::new(self).run()
    }
}

/// Loads and validates a model.
pub fn load_model(src: &str) -> Result<Coalgebra, ModelErrors> {
    let file = parse_model_file(src)?;
    Loader::default().load(file)
}

pub fn save_model(c: &Coalgebra) -> Result<String, ModelError> {
    Ok(c.to_file()?.to_string())
}

#[derive(Default)]
struct Loader {
    spaces: Vec<(String, SpaceRef)>,
    measures: Vec<NamedMeasure>,
    errs: Vec<ModelError>,
}

type Res<T> = Result<T, String>;

impl Loader {
    fn space(&self, name: &str) -> Option<&SpaceRef> {
        self.spaces.iter().find(|(n, _)| n == name).map(|(_, s)| s)
    }

    fn load(mut self, mut file: ModelFile) -> Result<Coalgebra, ModelErrors> {
        for d in &file.decls {
            if let DeclKind::Space { name, points, gens } = &d.kind {
                if self.space(name).is_some() {
                    self.errs.push(ModelError::at(d.line, format!("space `{name}` declared twice")));
                    continue;
                }
                match Space::generate(name.clone(), points.clone(), gens) {
                    Ok(s) => self.spaces.push((name.clone(), Arc::new(s))),
                    Err(e) => self.errs.push(ModelError::at(d.line, e.to_string())),
                }
            }
        }
        let state = match self.state_name(&file) {
            Ok(s) => s,
            Err(e) => {
                self.errs.push(e);
                return Err(ModelErrors(self.errs));
            }
        };
        if !file.decls.iter().any(|d| matches!(d.kind, DeclKind::State(_))) {
            let at = file
                .decls
                .iter()
                .position(|d| !matches!(d.kind, DeclKind::Space { .. }))
                .unwrap_or(file.decls.len());
            let line = file.decls.get(at).map_or(1, |d| d.line);
            file.decls.insert(
                at,
                Decl {
                    line,
                    kind: DeclKind::State(state.clone()),
                },
            );
        }
        let Some(state_space) = self.space(&state).cloned() else {
            self.errs.push(ModelError::general(format!("state space `{state}` is not declared")));
            return Err(ModelErrors(self.errs));
        };
        let consts: BTreeMap<String, SpaceRef> = self.spaces.iter().cloned().collect();
        let universe = Universe::new(state_space.clone(), consts.clone());

        let functors: Vec<&Decl> = file
            .decls
            .iter()
            .filter(|d| matches!(d.kind, DeclKind::Functor { .. }))
            .collect();
        let t = match functors.as_slice() {
            [d] => {
                let DeclKind::Functor { expr, .. } = &d.kind else { unreachable!() };
                match self.resolve_sort(expr, &state) {
                    Ok(t) => t,
                    Err(e) => {
                        self.errs.push(ModelError::at(d.line, e));
                        return Err(ModelErrors(self.errs));
                    }
                }
            }
            [] => {
                self.errs.push(ModelError::general("no functor declared"));
                return Err(ModelErrors(self.errs));
            }
            [_, d, ..] => {
                self.errs.push(ModelError::at(d.line, "more than one functor declared"));
                return Err(ModelErrors(self.errs));
            }
        };
        if let Err(e) = universe.check_functor(&t) {
            self.errs.push(ModelError::general(e.0));
            return Err(ModelErrors(self.errs));
        }

        let mut alpha: Option<(usize, Vec<Option<Element>>)> = None;
        for d in &file.decls {
            let r = match &d.kind {
                DeclKind::Space { .. } | DeclKind::State(_) | DeclKind::Functor { .. } => Ok(()),
                DeclKind::Alpha(entries) => {
                    if alpha.is_some() {
                        Err("structure map declared twice".to_string())
                    } else {
                        let mut slots = vec![None; state_space.point_count()];
                        let mut bad = Ok(());
                        for (x, term) in entries {
                            let r = (|| -> Res<()> {
                                let i = state_space
                                    .point_index(x)
                                    .ok_or_else(|| format!("`{x}` is not a state"))?;
                                if slots[i].is_some() {
                                    return Err(format!("alpha({x}) given twice"));
                                }
                                slots[i] = Some(self.element(term, &t, &universe)?);
                                Ok(())
                            })();
                            if let Err(e) = r {
                                bad = Err(e);
                                break;
                            }
                        }
                        alpha = Some((d.line, slots));
                        bad
                    }
                }
                _ => self.measure_decl(&d.kind, &state, &t, &universe),
            };
            if let Err(e) = r {
                self.errs.push(ModelError::at(d.line, e));
            }
        }
        if !self.errs.is_empty() {
            return Err(ModelErrors(self.errs));
        }
        let (alpha_line, slots) = alpha.unwrap_or((file.decls.last().map_or(1, |d| d.line), vec![]));
        if state_space.point_count() > 0 && slots.is_empty() {
            return Err(ModelError::general("no structure map (`alpha { ... }`) declared").into());
        }
        let missing: Vec<&str> = slots
            .iter()
            .enumerate()
            .filter(|(_, e)| e.is_none())
            .map(|(i, _)| state_space.points()[i].as_str())
            .collect();
        if !missing.is_empty() {
            return Err(ModelError::at(alpha_line, format!("alpha is not defined on {}", missing.join(", "))).into());
        }
        let signature = Signature::new(&t, consts).map_err(|e| ModelError::general(e.msg.clone()))?;
        let c = Coalgebra {
            universe,
            signature,
            alpha: slots.into_iter().map(|e| e.expect("checked")).collect(),
            measures: self.measures,
            source: Some(file),
        };
        let errs = c.validate(Some(alpha_line));
        if errs.is_empty() {
            Ok(c)
        } else {
            Err(ModelErrors(errs))
        }
    }

    /// An explicit `state` line, else the space holding the structure map's
    /// states, else a space named `X`, else the only space.
    fn state_name(&self, file: &ModelFile) -> Result<String, ModelError> {
        let states: Vec<&Decl> = file
            .decls
            .iter()
            .filter(|d| matches!(d.kind, DeclKind::State(_)))
            .collect();
        match states.as_slice() {
            [d] => {
                let DeclKind::State(n) = &d.kind else { unreachable!() };
                return Ok(n.clone());
            }
            [_, d, ..] => return Err(ModelError::at(d.line, "more than one state declaration")),
            [] => {}
        }
        let keys: Vec<&String> = file
            .decls
            .iter()
            .filter_map(|d| match &d.kind {
                DeclKind::Alpha(es) => Some(es.iter().map(|(x, _)| x)),
                _ => None,
            })
            .flatten()
            .collect();
        if !keys.is_empty() {
            let fits: Vec<&String> = self
                .spaces
                .iter()
                .filter(|(_, s)| keys.iter().all(|k| s.point_index(k).is_some()))
                .map(|(n, _)| n)
                .collect();
            if let [one] = fits.as_slice() {
                return Ok((*one).clone());
            }
        }
        if self.space("X").is_some() {
            return Ok("X".into());
        }
        if let [(n, _)] = self.spaces.as_slice() {
            return Ok(n.clone());
        }
        Err(ModelError::general("cannot tell which space is the state space; add `state NAME;`"))
    }

    fn resolve_sort(&self, s: &SortExpr, state: &str) -> Res<FunctorExpr> {
        s.resolve(state, &|n| self.space(n).is_some())
    }

    /// The sort a measure declaration is on: as written, or the argument of
    /// the functor's only measure functor.
    fn measure_sort(&self, s: &Option<SortExpr>, state: &str, t: &FunctorExpr) -> Res<FunctorExpr> {
        if let Some(s) = s {
            return self.resolve_sort(s, state);
        }
        let mut args = Vec::new();
        collect_delta_args(t, &mut args);
        args.dedup();
        match args.as_slice() {
            [one] => Ok((*one).clone()),
            _ => Err("give the sort of the measure with `on SORT`".into()),
        }
    }

    fn add_measure(&mut self, name: &str, sort: FunctorExpr, elem: MeasureElem) -> Res<()> {
        if self.measures.iter().any(|m| m.name == name) {
            return Err(format!("measure `{name}` declared twice"));
        }
        self.measures.push(NamedMeasure {
            name: name.to_string(),
            sort,
            elem,
        });
        Ok(())
    }

    fn measure_decl(&mut self, d: &DeclKind, state: &str, t: &FunctorExpr, u: &Universe) -> Res<()> {
        let merr = |e: crate::measures::MeasureError| e.to_string();
        match d {
            DeclKind::Prob { name, sort, entries } => {
                let s = self.measure_sort(sort, state, t)?;
                let elem = match u.realize(&s) {
                    Realized::Finite(sp) => {
                        let mut w: Vec<Option<Rat>> = vec![None; sp.atom_count()];
                        for (k, r) in entries {
                            let atoms = self.atoms(k, &s, u)?;
                            if atoms.count() != 1 {
                                return Err(format!("`{k}` is not a single atom of {s}"));
                            }
                            let a = atoms.first().expect("one atom");
                            if w[a].is_some() {
                                return Err(format!("atom `{k}` given twice"));
                            }
                            w[a] = Some(r.clone());
                        }
                        let w = w.into_iter().map(|r| r.unwrap_or_else(Rat::zero)).collect();
                        MeasureElem::realized(UncertaintyMeasure::probability(
                            ProbabilityMeasure::new(sp, w).map_err(merr)?,
                        ))
                    }
                    Realized::Symbolic => {
                        let (support, w) = self.support_entries(entries, &s, u)?;
                        let p = ProbabilityMeasure::new(support_space(support.len()), w).map_err(merr)?;
                        MeasureElem::on_support(UncertaintyMeasure::probability(p), support)
                    }
                };
                self.add_measure(name, s, elem)
            }
            DeclKind::Env { name, kind, members } => {
                let mut family = Vec::new();
                let mut sort: Option<FunctorExpr> = None;
                for m in members {
                    let nm = self
                        .measures
                        .iter()
                        .find(|x| &x.name == m)
                        .ok_or_else(|| format!("undeclared measure `{m}`"))?;
                    if !matches!(nm.elem.measure.repr(), MeasureRepr::Probability(_)) {
                        return Err(format!("`{m}` is not a probability"));
                    }
                    match &sort {
                        None => sort = Some(nm.sort.clone()),
                        Some(s) if *s != nm.sort => {
                            return Err(format!("`{m}` is on {}, not {s}", nm.sort));
                        }
                        _ => {}
                    }
                    family.push(nm.elem.clone());
                }
                let s = sort.expect("nonempty member list");
                let (probs, support) = merge_supports(family)?;
                let env = match kind {
                    EnvelopeKind::Upper => UncertaintyMeasure::upper_envelope(probs),
                    EnvelopeKind::Lower => UncertaintyMeasure::lower_envelope(probs),
                }
                .map_err(merr)?;
                let elem = MeasureElem { measure: env, support };
                self.add_measure(name, s, elem)
            }
            DeclKind::Mass {
                name,
                sort,
                reading,
                entries,
            } => {
                let s = self.measure_sort(sort, state, t)?;
                let Realized::Finite(sp) = u.realize(&s) else {
                    return Err(format!("mass functions need a finite sort, {s} is not"));
                };
                let mut focal = Vec::new();
                for (k, r) in entries {
                    focal.push((self.atoms(k, &s, u)?, r.clone()));
                }
                let m = UncertaintyMeasure::from_mass(sp, focal, *reading).map_err(merr)?;
                self.add_measure(name, s, MeasureElem::realized(m))
            }
            DeclKind::Poss {
                name,
                sort,
                reading,
                entries,
            } => {
                let s = self.measure_sort(sort, state, t)?;
                let elem = match u.realize(&s) {
                    Realized::Finite(sp) => {
                        let mut dist: Vec<Option<Rat>> = vec![None; sp.point_count()];
                        for (k, r) in entries {
                            for p in self.points(k, &s, u)?.iter() {
                                if dist[p].is_some() {
                                    return Err(format!("point {} given twice", sp.points()[p]));
                                }
                                dist[p] = Some(r.clone());
                            }
                        }
                        let dist = dist.into_iter().map(|r| r.unwrap_or_else(Rat::zero)).collect();
                        MeasureElem::realized(UncertaintyMeasure::from_poss_dist(sp, dist, *reading).map_err(merr)?)
                    }
                    Realized::Symbolic => {
                        let (support, dist) = self.support_entries(entries, &s, u)?;
                        let m = UncertaintyMeasure::from_poss_dist(support_space(support.len()), dist, *reading)
                            .map_err(merr)?;
                        MeasureElem::on_support(m, support)
                    }
                };
                self.add_measure(name, s, elem)
            }
            DeclKind::Table {
                name,
                sort,
                kind,
                entries,
            } => {
                let s = self.measure_sort(sort, state, t)?;
                let Realized::Finite(sp) = u.realize(&s) else {
                    return Err(format!("tables need a finite sort, {s} is not"));
                };
                let count = sp.member_count().map_err(|e| e.to_string())?;
                let mut vals: Vec<Option<Rat>> = vec![None; count];
                for (k, r) in entries {
                    let m = self.atoms(k, &s, u)?.mask().expect("enumerable") as usize;
                    if vals[m].is_some() {
                        return Err(format!("set `{k}` given twice"));
                    }
                    vals[m] = Some(r.clone());
                }
                let full = count - 1;
                vals[0].get_or_insert_with(Rat::zero);
                vals[full].get_or_insert_with(Rat::one);
                if let Some(m) = vals.iter().position(Option::is_none) {
                    let set = sp.atoms_to_points(&Bits::from_mask(sp.atom_count(), m as u64));
                    return Err(format!("no value for {}", sp.describe_points(&set)));
                }
                let vals = vals.into_iter().map(|v| v.expect("filled")).collect();
                let m = UncertaintyMeasure::tabulated(sp, *kind, vals).map_err(merr)?;
                self.add_measure(name, s, MeasureElem::realized(m))
            }
            _ => Ok(()),
        }
    }

    fn support_entries(&self, entries: &[(Term, Rat)], s: &FunctorExpr, u: &Universe) -> Res<(Vec<Element>, Vec<Rat>)> {
        let mut support: Vec<Element> = Vec::new();
        let mut w = Vec::new();
        for (k, r) in entries {
            let e = self.element(k, s, u)?;
            if support.iter().any(|x| x.ext_eq(&e)) {
                return Err(format!("support element `{k}` given twice"));
            }
            support.push(e);
            w.push(r.clone());
        }
        Ok((support, w))
    }

    /// Points of a finite sort denoted by a set term.
    fn points(&self, t: &Term, s: &FunctorExpr, u: &Universe) -> Res<Bits> {
        let sp = u.space(s).ok_or_else(|| format!("sort {s} is not finite"))?;
        let n = sp.point_count();
        let named = |space: &Space, l: &str| {
            space
                .point_index(l)
                .ok_or_else(|| format!("`{l}` is not a point of {s}"))
        };
        Ok(match (t, s) {
            (Term::Empty, _) => Bits::empty(n),
            (Term::Union(ts), _) => {
                let mut acc = Bits::empty(n);
                for t in ts {
                    acc = acc.union(&self.points(t, s, u)?);
                }
                acc
            }
            (Term::Points(ls), FunctorExpr::Id | FunctorExpr::Const(_)) => {
                let mut b = Bits::empty(n);
                for l in ls {
                    b.insert(named(&sp, l)?);
                }
                b
            }
            (Term::Name(l), FunctorExpr::Id | FunctorExpr::Const(_)) => Bits::from_indices(n, [named(&sp, l)?]),
            (Term::Prod(a, b) | Term::Pair(a, b), FunctorExpr::Prod(sa, sb)) => {
                let pa = self.points(a, sa, u)?;
                let pb = self.points(b, sb, u)?;
                let nb = pb.len();
                Bits::from_indices(n, pa.iter().flat_map(|i| pb.iter().map(move |j| i * nb + j)))
            }
            (Term::Inl(a), FunctorExpr::Coprod(sa, _)) => Bits::from_indices(n, self.points(a, sa, u)?.iter()),
            (Term::Inr(b), FunctorExpr::Coprod(sa, sb)) => {
                let off = u.space(sa).expect("finite").point_count();
                Bits::from_indices(n, self.points(b, sb, u)?.iter().map(|j| j + off))
            }
            _ => return Err(format!("`{t}` does not denote a set of {s}")),
        })
    }

    fn atoms(&self, t: &Term, s: &FunctorExpr, u: &Universe) -> Res<Bits> {
        let pts = self.points(t, s, u)?;
        let sp = u.space(s).expect("finite");
        sp.points_to_atoms(&pts)
            .ok_or_else(|| format!("`{t}` is not a measurable set of {s}"))
    }

    fn element(&self, t: &Term, s: &FunctorExpr, u: &Universe) -> Res<Element> {
        let single = |l: &str, space: &Space| {
            space
                .point_index(l)
                .ok_or_else(|| format!("`{l}` is not a point of {s}"))
        };
        Ok(match (t, s) {
            (Term::Name(l), FunctorExpr::Id) => Element::Base(single(l, u.state())?),
            (Term::Points(ls), FunctorExpr::Id) if ls.len() == 1 => Element::Base(single(&ls[0], u.state())?),
            (Term::Name(l), FunctorExpr::Const(m)) => Element::Const(single(l, u.constant(m).expect("declared"))?),
            (Term::Points(ls), FunctorExpr::Const(m)) if ls.len() == 1 => {
                Element::Const(single(&ls[0], u.constant(m).expect("declared"))?)
            }
            (Term::Pair(a, b), FunctorExpr::Prod(sa, sb)) => {
                Element::pair(self.element(a, sa, u)?, self.element(b, sb, u)?)
            }
            (Term::Inl(a), FunctorExpr::Coprod(sa, _)) => Element::inl(self.element(a, sa, u)?),
            (Term::Inr(b), FunctorExpr::Coprod(_, sb)) => Element::inr(self.element(b, sb, u)?),
            (Term::Name(n), FunctorExpr::Delta(_, inner)) => {
                let m = self
                    .measures
                    .iter()
                    .find(|m| &m.name == n)
                    .ok_or_else(|| format!("undeclared measure `{n}`"))?;
                if m.sort != **inner {
                    return Err(format!("measure `{n}` is on {}, expected {inner}", m.sort));
                }
                Element::measure(m.elem.clone())
            }
            _ => return Err(format!("`{t}` is not an element of {s}")),
        })
    }
}

fn collect_delta_args<'a>(t: &'a FunctorExpr, out: &mut Vec<&'a FunctorExpr>) {
    match t {
        FunctorExpr::Id | FunctorExpr::Const(_) => {}
        FunctorExpr::Prod(a, b) | FunctorExpr::Coprod(a, b) => {
            collect_delta_args(a, out);
            collect_delta_args(b, out);
        }
        FunctorExpr::Delta(_, a) => {
            out.push(a);
            collect_delta_args(a, out);
        }
    }
}

/// Brings probabilities onto a common space. Measures on a support list are
/// pushed onto the union of their supports.
fn merge_supports(family: Vec<MeasureElem>) -> Res<(Vec<ProbabilityMeasure>, Option<Vec<Element>>)> {
    let prob = |m: &UncertaintyMeasure| match m.repr() {
        MeasureRepr::Probability(p) => p.clone(),
        _ => unreachable!("pushforward keeps probabilities"),
    };
    if family.iter().all(|m| m.support.is_none()) {
        return Ok((family.iter().map(|m| prob(&m.measure)).collect(), None));
    }
    let mut merged: Vec<Element> = Vec::new();
    let mut maps = Vec::new();
    for m in &family {
        let Some(s) = &m.support else {
            return Err("cannot mix measures with and without support lists".into());
        };
        let map: Vec<usize> = s
            .iter()
            .map(|e| match merged.iter().position(|x| x.ext_eq(e)) {
                Some(i) => i,
                None => {
                    merged.push(e.clone());
                    merged.len() - 1
                }
            })
            .collect();
        maps.push(map);
    }
    let target = support_space(merged.len());
    let probs = family
        .iter()
        .zip(&maps)
        .map(|(m, map)| {
            m.measure
                .pushforward(target.clone(), map)
                .map(|p| prob(&p))
                .map_err(|e| e.to_string())
        })
        .collect::<Res<Vec<_>>>()?;
    Ok((probs, Some(merged)))
}

/// Generates declarations for a coalgebra built in code.
struct Synth<'a> {
    c: &'a Coalgebra,
    decls: Vec<DeclKind>,
    names: Vec<(MeasureElem, String)>,
    used: HashMap<String, ()>,
}

impl<'a> Synth<'a> {
    fn new(c: &'a Coalgebra) -> Self {
        Synth {
            c,
            decls: Vec::new(),
            names: Vec::new(),
            used: HashMap::new(),
        }
    }

    fn fresh(&mut self, stem: &str) -> String {
        let mut i = self.used.len();
        loop {
            let n = format!("{stem}{i}");
            if !self.used.contains_key(&n) {
                self.used.insert(n.clone(), ());
                return n;
            }
            i += 1;
        }
    }

    fn run(mut self) -> Result<ModelFile, ModelError> {
        let c = self.c;
        let state = c.state();
        let space_decl = |s: &Space| DeclKind::Space {
            name: s.name().to_string(),
            points: s.points().to_vec(),
            gens: s
                .atoms()
                .iter()
                .take(s.atom_count().saturating_sub(1))
                .map(|a| a.iter().map(|&p| s.points()[p].clone()).collect())
                .collect(),
        };
        for (n, sp) in c.universe.consts() {
            if n != state.name() {
                self.decls.push(space_decl(sp));
            }
        }
        self.decls.push(space_decl(state));
        self.decls.push(DeclKind::State(state.name().to_string()));
        self.decls.push(DeclKind::Functor {
            name: "T".into(),
            expr: SortExpr::from_functor(c.functor()),
        });
        for m in &c.measures {
            self.used.insert(m.name.clone(), ());
        }
        for m in &c.measures {
            self.measure(&m.elem, &m.sort, Some(m.name.clone()))?;
        }
        let t = c.functor().clone();
        let mut entries = Vec::new();
        for (i, e) in c.alpha.iter().enumerate() {
            entries.push((state.points()[i].clone(), self.element(e, &t)?));
        }
        self.decls.push(DeclKind::Alpha(entries));
        Ok(ModelFile {
            header: Vec::new(),
            decls: self
                .decls
                .into_iter()
                .map(|kind| Decl { line: 0, kind })
                .collect(),
        })
    }

    fn element(&mut self, e: &Element, s: &FunctorExpr) -> Result<Term, ModelError> {
        let u = &self.c.universe;
        Ok(match (s, e) {
            (FunctorExpr::Id | FunctorExpr::Const(_), Element::Base(_) | Element::Const(_)) => {
                Term::Name(u.describe(e, s))
            }
            (FunctorExpr::Prod(a, b), Element::Pair(x, y)) => {
                Term::Pair(Box::new(self.element(x, a)?), Box::new(self.element(y, b)?))
            }
            (FunctorExpr::Coprod(a, _), Element::Inl(x)) => Term::Inl(Box::new(self.element(x, a)?)),
            (FunctorExpr::Coprod(_, b), Element::Inr(y)) => Term::Inr(Box::new(self.element(y, b)?)),
            (FunctorExpr::Delta(_, inner), Element::Measure(m)) => {
                if let Some((_, n)) = self.names.iter().find(|(x, _)| x == &**m) {
                    return Ok(Term::Name(n.clone()));
                }
                Term::Name(self.measure(m, inner, None)?)
            }
            _ => return Err(ModelError::general(format!("element does not match sort {s}"))),
        })
    }

    fn atom_term(&self, s: &FunctorExpr, k: usize) -> Term {
        let u = &self.c.universe;
        match s {
            FunctorExpr::Prod(a, b) => {
                let nb = u.space(b).expect("finite").atom_count();
                Term::Prod(Box::new(self.atom_term(a, k / nb)), Box::new(self.atom_term(b, k % nb)))
            }
            FunctorExpr::Coprod(a, b) => {
                let na = u.space(a).expect("finite").atom_count();
                if k < na {
                    Term::Inl(Box::new(self.atom_term(a, k)))
                } else {
                    Term::Inr(Box::new(self.atom_term(b, k - na)))
                }
            }
            _ => {
                let sp = u.space(s).expect("finite");
                Term::Points(sp.atoms()[k].iter().map(|&p| sp.points()[p].clone()).collect())
            }
        }
    }

    fn set_term(&self, s: &FunctorExpr, atoms: &Bits) -> Term {
        let sp = self.c.universe.space(s).expect("finite");
        match atoms.count() {
            0 => Term::Empty,
            1 => self.atom_term(s, atoms.first().expect("one")),
            _ if matches!(s, FunctorExpr::Id | FunctorExpr::Const(_)) => Term::Points(
                sp.atoms_to_points(atoms)
                    .iter()
                    .map(|p| sp.points()[p].clone())
                    .collect(),
            ),
            _ => Term::Union(atoms.iter().map(|a| self.atom_term(s, a)).collect()),
        }
    }

    /// Emits declarations for a measure on sort `s` and returns its name.
    fn measure(&mut self, m: &MeasureElem, s: &FunctorExpr, name: Option<String>) -> Result<String, ModelError> {
        let name = match name {
            Some(n) => n,
            None => self.fresh("m"),
        };
        let sort = Some(SortExpr::from_functor(s));
        let support_terms = match &m.support {
            Some(sup) => Some(
                sup.iter()
                    .map(|e| self.element(e, s))
                    .collect::<Result<Vec<_>, _>>()?,
            ),
            None => None,
        };
        let prob_entries = |this: &Self, p: &ProbabilityMeasure| -> Vec<(Term, Rat)> {
            match &support_terms {
                Some(ts) => ts.iter().cloned().zip(p.weights().iter().cloned()).collect(),
                None => (0..p.weights().len())
                    .map(|k| (this.atom_term(s, k), p.weights()[k].clone()))
                    .collect(),
            }
        };
        let kind = match m.measure.repr() {
            MeasureRepr::Probability(p) => DeclKind::Prob {
                name: name.clone(),
                sort,
                entries: prob_entries(self, p),
            },
            MeasureRepr::Envelope { kind, family } => {
                let mut members = Vec::new();
                for p in family {
                    let n = self.fresh(&format!("{name}_"));
                    self.decls.push(DeclKind::Prob {
                        name: n.clone(),
                        sort: sort.clone(),
                        entries: prob_entries(self, p),
                    });
                    members.push(n);
                }
                DeclKind::Env {
                    name: name.clone(),
                    kind: *kind,
                    members,
                }
            }
            MeasureRepr::PossDist { dist, reading } => {
                let entries = match &support_terms {
                    Some(ts) => ts.iter().cloned().zip(dist.iter().cloned()).collect(),
                    None => {
                        let u = &self.c.universe;
                        let mut es = Vec::new();
                        for (p, v) in dist.iter().enumerate() {
                            if !v.is_zero() {
                                let e = u.element_at(s, p);
                                es.push((self.element(&e, s)?, v.clone()));
                            }
                        }
                        es
                    }
                };
                DeclKind::Poss {
                    name: name.clone(),
                    sort,
                    reading: *reading,
                    entries,
                }
            }
            MeasureRepr::Mass { focal, reading } if m.support.is_none() => DeclKind::Mass {
                name: name.clone(),
                sort,
                reading: *reading,
                entries: focal.iter().map(|(b, r)| (self.set_term(s, b), r.clone())).collect(),
            },
            MeasureRepr::Tabulated { kind, values } if m.support.is_none() => {
                let n = self.c.universe.space(s).expect("finite").atom_count();
                DeclKind::Table {
                    name: name.clone(),
                    sort,
                    kind: *kind,
                    entries: values
                        .iter()
                        .enumerate()
                        .skip(1)
                        .map(|(mask, v)| (self.set_term(s, &Bits::from_mask(n, mask as u64)), v.clone()))
                        .collect(),
                }
            }
            _ => {
                return Err(ModelError::general(format!(
                    "a {} measure on a support list has no file form",
                    m.measure.kind()
                )))
            }
        };
        self.decls.push(kind);
        self.names.push((m.clone(), name.clone()));
        Ok(name)
    }
}

/// Parses an element of sort `s` written as in a model file, resolving
/// measure names against the model's declarations.
pub fn parse_element(c: &Coalgebra, text: &str, s: &FunctorExpr) -> Result<Element, ModelError> {
    let t = parse_term(text)?;
    let l = Loader {
        spaces: Vec::new(),
        measures: c.measures.clone(),
        errs: Vec::new(),
    };
    l.element(&t, s, &c.universe).map_err(ModelError::general)
}
