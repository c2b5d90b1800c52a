use std::fmt;

use super::Formula;

/// A core formula read back through the abbreviations.
enum View<'a> {
    Top,
    Iff(&'a Formula, &'a Formula),
    And(&'a Formula, &'a Formula),
    Not(&'a Formula),
    Or(&'a Formula, &'a Formula),
    Implies(&'a Formula, &'a Formula),
    Leaf,
}

fn as_or(f: &Formula) -> Option<(&Formula, &Formula)> {
    match f {
        Formula::Implies(a, b) => a.as_not().map(|x| (x, &**b)),
        _ => None,
    }
}

fn as_and(f: &Formula) -> Option<(&Formula, &Formula)> {
    let (na, nb) = as_or(f.as_not()?)?;
    Some((na.as_not()?, nb.as_not()?))
}

fn view(f: &Formula) -> View<'_> {
    if let Formula::Implies(a, b) = f {
        if **a == Formula::Bot && **b == Formula::Bot {
            return View::Top;
        }
    }
    if let Some((x, y)) = as_and(f) {
        if let (Formula::Implies(a, b), Formula::Implies(b2, a2)) = (x, y) {
            if a == a2 && b == b2 {
                return View::Iff(a, b);
            }
        }
        return View::And(x, y);
    }
    if let Some(x) = f.as_not() {
        return View::Not(x);
    }
    if let Some((x, y)) = as_or(f) {
        return View::Or(x, y);
    }
    match f {
        Formula::Implies(a, b) => View::Implies(a, b),
        _ => View::Leaf,
    }
}

// binding levels, loosest first
const IFF: u8 = 0;
const IMP: u8 = 1;
const OR: u8 = 2;
const AND: u8 = 3;
const UNARY: u8 = 4;

fn level(v: &View<'_>) -> u8 {
    match v {
        View::Iff(..) => IFF,
        View::Implies(..) => IMP,
        View::Or(..) => OR,
        View::And(..) => AND,
        View::Not(_) | View::Top | View::Leaf => UNARY,
    }
}

fn write_at(out: &mut fmt::Formatter<'_>, f: &Formula, min: u8) -> fmt::Result {
    let v = view(f);
    if level(&v) < min {
        out.write_str("(")?;
        write_view(out, f, v)?;
        out.write_str(")")
    } else {
        write_view(out, f, v)
    }
}

fn write_view(out: &mut fmt::Formatter<'_>, f: &Formula, v: View<'_>) -> fmt::Result {
    let bin = |out: &mut fmt::Formatter<'_>, a, op: &str, b, la, lb| -> fmt::Result {
        write_at(out, a, la)?;
        write!(out, " {op} ")?;
        write_at(out, b, lb)
    };
    match v {
        View::Top => out.write_str("top"),
        View::Iff(a, b) => bin(out, a, "<->", b, IMP, IMP),
        View::Implies(a, b) => bin(out, a, "->", b, OR, IMP),
        View::Or(a, b) => bin(out, a, "|", b, OR, AND),
        View::And(a, b) => bin(out, a, "&", b, AND, UNARY),
        View::Not(a) => {
            out.write_str("!")?;
            write_at(out, a, UNARY)
        }
        View::Leaf => match f {
            Formula::Bot => out.write_str("bot"),
            Formula::Atom(labels) => write!(out, "{{{}}}", labels.join(",")),
            Formula::Modal(l, a) => {
                write!(out, "[{l}]")?;
                write_at(out, a, UNARY)
            }
            Formula::Implies(..) => unreachable!(),
        },
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_at(f, self, IFF)
    }
}
