use std::fs;
use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use uncml_core::deduction::{run_harness, HarnessConfig};
use uncml_core::functors::{Element, FunctorExpr};
use uncml_core::logic::SortedFormula;
use uncml_core::measures::{find_cover_violation, is_plausibility, is_possibility, is_probability, is_upper_probability_lp, UpperVerdict, Verdict};
use uncml_core::models::{check_morphism, load_map, load_model, parse_element, Coalgebra, MorphismVerdict};
use uncml_core::rational::Rat;
use uncml_core::semantics::{attained_grid, Checker, Interpretation, Regime};
use uncml_core::spaces::Bits;

#[derive(Parser)]
#[command(name = "uncml", version, about = "Model checker for coalgebraic modal logics of uncertainty")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Lp,
    Cover,
}

#[derive(Subcommand)]
enum Command {
    /// Load and validate a model file.
    Validate {
        #[arg(long)]
        model: String,
    },
    /// Interpretation of a formula.
    Eval {
        #[arg(long)]
        model: String,
        #[arg(long)]
        formula: String,
        #[arg(long)]
        sort: Option<String>,
    },
    /// Whether an element satisfies a formula.
    Sat {
        #[arg(long)]
        model: String,
        #[arg(long)]
        element: String,
        #[arg(long)]
        formula: String,
        #[arg(long)]
        sort: Option<String>,
    },
    /// Validity of a formula in the model.
    Valid {
        #[arg(long)]
        model: String,
        #[arg(long)]
        formula: String,
        #[arg(long)]
        sort: Option<String>,
        /// Extra measure declarations, in model-file syntax, used as probes.
        #[arg(long)]
        probes: Option<String>,
    },
    /// Bounded description set of an element.
    Des {
        #[arg(long)]
        model: String,
        #[arg(long)]
        element: String,
        #[arg(long)]
        depth: usize,
        /// Thresholds; defaults to the values attained in the model.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<String>>,
        /// Sort of the element; `Id` by default.
        #[arg(long)]
        sort: Option<String>,
    },
    /// Which representation theorems a named measure satisfies.
    Classify {
        #[arg(long)]
        model: String,
        #[arg(long)]
        measure: String,
        #[arg(long, value_enum, default_value_t = Method::Lp)]
        method: Method,
        /// Longest cover sequence searched by `--method cover`.
        #[arg(long, default_value_t = 3)]
        mmax: usize,
    },
    /// Randomized soundness check of the axioms and rules.
    Soundness {
        #[arg(long)]
        functor: String,
        #[arg(long)]
        trials: usize,
        #[arg(long)]
        seed: u64,
        /// Schema ids, rule families or principle names to run.
        #[arg(long, value_delimiter = ',')]
        schemas: Option<Vec<String>>,
        /// Also run the corrupted `B<=p f -> B<p f`.
        #[arg(long)]
        mutant: bool,
    },
    /// Check a point map between two models.
    Morphism {
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long)]
        map: String,
        /// Formulas at sort `Id` to check for preservation.
        #[arg(long)]
        formula: Vec<String>,
    },
}

/// A failure that maps to exit code 2.
struct Usage(String);

impl<E: std::fmt::Display> From<E> for Usage {
    fn from(e: E) -> Self {
        Usage(e.to_string())
    }
}

type Res = Result<bool, Usage>;

fn read(path: &str) -> Result<String, Usage> {
    fs::read_to_string(path).map_err(|e| Usage(format!("{path}: {e}")))
}

fn model(path: &str) -> Result<Coalgebra, Usage> {
    load_model(&read(path)?).map_err(|e| Usage(format!("{path}: {e}")))
}

fn sort(text: &Option<String>) -> Result<Option<FunctorExpr>, Usage> {
    Ok(match text {
        Some(s) => Some(s.parse::<FunctorExpr>()?),
        None => None,
    })
}

fn formula(m: &Coalgebra, text: &str, s: Option<&FunctorExpr>) -> Result<SortedFormula, Usage> {
    Ok(m.signature().parse(text, s)?)
}

fn rat(r: &Rat) -> Value {
    Value::String(r.to_string())
}

/// Points as strings, pairs as arrays, injections tagged.
fn element_json(m: &Coalgebra, e: &Element, s: &FunctorExpr) -> Value {
    match (s, e) {
        (FunctorExpr::Prod(a, b), Element::Pair(x, y)) => json!([element_json(m, x, a), element_json(m, y, b)]),
        (FunctorExpr::Coprod(a, _), Element::Inl(x)) => json!({ "inl": element_json(m, x, a) }),
        (FunctorExpr::Coprod(_, b), Element::Inr(y)) => json!({ "inr": element_json(m, y, b) }),
        _ => Value::String(m.describe(e, s)),
    }
}

fn point_set(m: &Coalgebra, s: &FunctorExpr, pts: &Bits) -> (Vec<String>, Vec<Value>) {
    let u = m.universe();
    pts.iter()
        .map(|p| {
            let e = u.element_at(s, p);
            (m.describe(&e, s), element_json(m, &e, s))
        })
        .unzip()
}

fn emit(fmt: Format, text: String, value: Value) {
    let mut out = std::io::stdout().lock();
    // a closed pipe is not an error worth reporting
    let _ = match fmt {
        Format::Text => writeln!(out, "{text}"),
        Format::Json => writeln!(out, "{value}"),
    };
}

fn validate(fmt: Format, path: &str) -> Res {
    let src = read(path)?;
    match load_model(&src) {
        Ok(m) => {
            let text = format!(
                "valid: {} states, functor {}",
                m.state().point_count(),
                m.functor()
            );
            let value = json!({
                "command": "validate",
                "valid": true,
                "states": m.state().point_count(),
                "functor": m.functor().to_string(),
            });
            emit(fmt, text, value);
            Ok(true)
        }
        Err(errs) => {
            let msgs: Vec<String> = errs.0.iter().map(|e| e.to_string()).collect();
            let text = format!("invalid:\n{}", msgs.iter().map(|l| format!("  {l}")).collect::<Vec<_>>().join("\n"));
            emit(fmt, text, json!({ "command": "validate", "valid": false, "errors": msgs }));
            Ok(false)
        }
    }
}

fn eval(fmt: Format, path: &str, text: &str, s: &Option<String>) -> Res {
    let m = model(path)?;
    let s = sort(s)?;
    let f = formula(&m, text, s.as_ref())?;
    let c = Checker::new(&m);
    match c.interpret(&f) {
        Interpretation::Set { points, .. } => {
            let (names, values) = point_set(&m, &f.sort, &points);
            let out = format!("{} : {}\n{{{}}}", f.formula, f.sort, names.join(", "));
            let value = json!({
                "command": "eval",
                "formula": f.formula.to_string(),
                "sort": f.sort.to_string(),
                "measurable": f.measurable,
                "set": values,
            });
            emit(fmt, out, value);
        }
        Interpretation::Predicate { .. } => {
            let reach = c.reachable(&f.sort);
            let (names, values): (Vec<String>, Vec<Value>) = reach
                .iter()
                .filter(|e| c.sat(e, &f.formula, &f.sort))
                .map(|e| (m.describe(e, &f.sort), element_json(&m, e, &f.sort)))
                .unzip();
            let out = format!(
                "{} : {}\nmeasure sort; satisfied by {} of {} reachable elements: {{{}}}",
                f.formula,
                f.sort,
                names.len(),
                reach.len(),
                names.join(", ")
            );
            let value = json!({
                "command": "eval",
                "formula": f.formula.to_string(),
                "sort": f.sort.to_string(),
                "measurable": f.measurable,
                "regime": "reachable",
                "reachable": reach.len(),
                "satisfied_by": values,
            });
            emit(fmt, out, value);
        }
    }
    Ok(true)
}

fn sat(fmt: Format, path: &str, element: &str, text: &str, s: &Option<String>) -> Res {
    let m = model(path)?;
    let s = sort(s)?;
    let f = formula(&m, text, s.as_ref())?;
    let e = parse_element(&m, element, &f.sort)?;
    let ok = Checker::new(&m).sat(&e, &f.formula, &f.sort);
    let out = format!("{} {} {}", m.describe(&e, &f.sort), if ok { "satisfies" } else { "does not satisfy" }, f.formula);
    let value = json!({
        "command": "sat",
        "element": element_json(&m, &e, &f.sort),
        "formula": f.formula.to_string(),
        "sort": f.sort.to_string(),
        "satisfied": ok,
    });
    emit(fmt, out, value);
    Ok(ok)
}

fn regime_json(r: &Regime) -> Value {
    match r {
        Regime::Exhaustive { points } => json!({ "kind": "exhaustive", "points": points }),
        Regime::ReachablePlusProbes { reachable, probes } => {
            json!({ "kind": "reachable-plus-probes", "reachable": reachable, "probes": probes })
        }
    }
}

fn valid(fmt: Format, path: &str, text: &str, s: &Option<String>, probes: &Option<String>) -> Res {
    let src = read(path)?;
    let base = load_model(&src).map_err(|e| Usage(format!("{path}: {e}")))?;
    // probe declarations are loaded together with the model
    let (m, probe_names) = match probes {
        Some(p) => {
            let extra = read(p)?;
            let joined = load_model(&format!("{src}\n{extra}")).map_err(|e| Usage(format!("{p}: {e}")))?;
            let names: Vec<String> = joined
                .measures()
                .iter()
                .filter(|n| base.measure(&n.name).is_none())
                .map(|n| n.name.clone())
                .collect();
            (joined, names)
        }
        None => (base, Vec::new()),
    };
    let s = sort(s)?;
    let f = formula(&m, text, s.as_ref())?;
    let probe_elems: Vec<Element> = match &f.sort {
        FunctorExpr::Delta(_, inner) => probe_names
            .iter()
            .filter_map(|n| m.measure(n))
            .filter(|n| &n.sort == &**inner)
            .map(|n| Element::measure(n.elem.clone()))
            .collect(),
        _ => Vec::new(),
    };
    let v = Checker::new(&m).valid(&f, &probe_elems);
    let mut out = format!(
        "{} is {} at {} ({})",
        f.formula,
        if v.valid { "valid" } else { "not valid" },
        f.sort,
        v.regime
    );
    if let Some(e) = &v.counterexample {
        out.push_str(&format!("\ncounterexample: {}", m.describe(e, &f.sort)));
    }
    let value = json!({
        "command": "valid",
        "formula": f.formula.to_string(),
        "sort": f.sort.to_string(),
        "valid": v.valid,
        "regime": regime_json(&v.regime),
        "counterexample": v.counterexample.as_ref().map(|e| element_json(&m, e, &f.sort)),
    });
    emit(fmt, out, value);
    Ok(v.valid)
}

fn des(fmt: Format, path: &str, element: &str, depth: usize, grid: &Option<Vec<String>>, s: &Option<String>) -> Res {
    let m = model(path)?;
    let s = sort(s)?.unwrap_or(FunctorExpr::Id);
    let e = parse_element(&m, element, &s)?;
    let grid: Vec<Rat> = match grid {
        Some(g) => {
            let mut out = Vec::new();
            for r in g {
                let q: Rat = r.trim().parse().map_err(|_| Usage(format!("bad threshold `{r}`")))?;
                if !q.in_unit_interval() {
                    return Err(Usage(format!("threshold {q} is outside [0,1]")));
                }
                out.push(q);
            }
            out
        }
        None => attained_grid(&m),
    };
    let d = Checker::new(&m).description_set(&e, &s, depth, &grid);
    let mut out = format!(
        "des of {} at {} (depth {}, grid {{{}}}): {} of {} candidates",
        m.describe(&e, &s),
        s,
        depth,
        d.grid.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(", "),
        d.formulas.len(),
        d.candidates
    );
    for f in &d.formulas {
        out.push_str(&format!("\n  {f}"));
    }
    let value = json!({
        "command": "des",
        "element": element_json(&m, &e, &s),
        "sort": s.to_string(),
        "depth": depth,
        "grid": d.grid.iter().map(rat).collect::<Vec<_>>(),
        "candidates": d.candidates,
        "formulas": d.formulas.iter().map(|f| f.to_string()).collect::<Vec<_>>(),
    });
    emit(fmt, out, value);
    Ok(true)
}

fn verdict_line(v: &Verdict) -> (bool, Option<String>) {
    match v {
        Verdict::Holds => (true, None),
        Verdict::Fails { reason, .. } => (false, Some(reason.clone())),
    }
}

fn classify(fmt: Format, path: &str, name: &str, method: Method, mmax: usize) -> Res {
    let m = model(path)?;
    let nm = m.measure(name).ok_or_else(|| Usage(format!("no measure named `{name}`")))?;
    let g = &nm.elem.measure;
    let (prob, prob_why) = verdict_line(&is_probability(g)?);
    let (upper, upper_why, witness) = match method {
        Method::Lp => match is_upper_probability_lp(g)? {
            UpperVerdict::Upper { witness } => (true, None, Some(witness.len())),
            UpperVerdict::EmptyCredalSet => (false, Some("no probability lies below it".to_string()), None),
            UpperVerdict::NotTight { set, value, max } => (
                false,
                Some(format!(
                    "at {} the value is {value} but dominated probabilities reach only {max}",
                    g.space().describe_points(&g.space().atoms_to_points(&set))
                )),
                None,
            ),
        },
        Method::Cover => match find_cover_violation(g, mmax.max(1))? {
            None => (true, None, None),
            Some(w) => {
                let sp = g.space();
                let d = |b: &Bits| sp.describe_points(&sp.atoms_to_points(b));
                (
                    false,
                    Some(format!(
                        "cover of {} by [{}] with n={}, k={}: {} > {}",
                        d(&w.target),
                        w.seq.iter().map(d).collect::<Vec<_>>().join(", "),
                        w.n,
                        w.k,
                        w.lhs,
                        w.rhs
                    )),
                    None,
                )
            }
        },
    };
    let (plaus, plaus_why) = verdict_line(&is_plausibility(g, None)?);
    let (poss, poss_why) = verdict_line(&is_possibility(g)?);
    let upper_label = match method {
        Method::Lp => "upper probability (lp)".to_string(),
        Method::Cover => format!("upper probability (no cover violation up to m={})", mmax.max(1)),
    };
    let mut out = format!("{name}: declared {}", g.kind());
    for (label, ok, why) in [
        ("probability".to_string(), prob, &prob_why),
        (upper_label, upper, &upper_why),
        ("plausibility".to_string(), plaus, &plaus_why),
        ("possibility".to_string(), poss, &poss_why),
    ] {
        out.push_str(&format!("\n  {label}: {}", if ok { "yes" } else { "no" }));
        if let Some(w) = why {
            out.push_str(&format!(" ({w})"));
        }
    }
    let value = json!({
        "command": "classify",
        "measure": name,
        "kind": g.kind().to_string(),
        "method": if method == Method::Lp { "lp" } else { "cover" },
        "probability": prob,
        "upper": upper,
        "upper_witness_size": witness,
        "upper_reason": upper_why,
        "plausibility": plaus,
        "possibility": poss,
    });
    emit(fmt, out, value);
    Ok(true)
}

fn soundness(fmt: Format, functor: &str, trials: usize, seed: u64, only: &Option<Vec<String>>, mutant: bool) -> Res {
    let t: FunctorExpr = functor.parse()?;
    if trials == 0 {
        return Err(Usage("--trials must be at least 1".into()));
    }
    let mut cfg = HarnessConfig::new(trials, seed);
    cfg.only = only.clone();
    cfg.mutant = mutant;
    let rep = run_harness(&t, &cfg);
    let value = json!({
        "command": "soundness",
        "functor": rep.functor.to_string(),
        "trials": rep.trials,
        "seed": rep.seed,
        "instances": rep.total(),
        "counts": rep.counts,
        "vacuous": rep.vacuous,
        "violations": rep.violations.iter().map(|v| json!({
            "trial": v.trial,
            "source": v.source,
            "sort": v.sort,
            "instance": v.instance,
            "witness": v.witness,
            "model": v.model,
        })).collect::<Vec<_>>(),
    });
    emit(fmt, rep.to_string().trim_end().to_string(), value);
    Ok(rep.is_sound())
}

fn morphism(fmt: Format, from: &str, to: &str, map: &str, formulas: &[String]) -> Res {
    let a = model(from)?;
    let b = model(to)?;
    let f = load_map(&read(map)?, &a, &b)?;
    let fs = formulas
        .iter()
        .map(|t| formula(&a, t, Some(&FunctorExpr::Id)))
        .collect::<Result<Vec<_>, _>>()?;
    let rep = check_morphism(&f, &a, &b, &fs)?;
    let ok = rep.verdict == MorphismVerdict::Morphism;
    let out = format!("{} ({} formulas preserved)", rep.verdict, rep.formulas_checked);
    let value = json!({
        "command": "morphism",
        "morphism": ok,
        "verdict": rep.verdict.to_string(),
        "formulas_checked": rep.formulas_checked,
    });
    emit(fmt, out, value);
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let fmt = cli.format;
    let res = match &cli.command {
        Command::Validate { model } => validate(fmt, model),
        Command::Eval { model, formula, sort } => eval(fmt, model, formula, sort),
        Command::Sat {
            model,
            element,
            formula,
            sort,
        } => sat(fmt, model, element, formula, sort),
        Command::Valid {
            model,
            formula,
            sort,
            probes,
        } => valid(fmt, model, formula, sort, probes),
        Command::Des {
            model,
            element,
            depth,
            grid,
            sort,
        } => des(fmt, model, element, *depth, grid, sort),
        Command::Classify {
            model,
            measure,
            method,
            mmax,
        } => classify(fmt, model, measure, *method, *mmax),
        Command::Soundness {
            functor,
            trials,
            seed,
            schemas,
            mutant,
        } => soundness(fmt, functor, *trials, *seed, schemas, *mutant),
        Command::Morphism { from, to, map, formula } => morphism(fmt, from, to, map, formula),
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Usage(msg)) => {
            match fmt {
                Format::Text => eprintln!("error: {msg}"),
                Format::Json => println!("{}", json!({ "error": msg })),
            }
            ExitCode::from(2)
        }
    }
}
