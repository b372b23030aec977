//! Printing in the usual notation: `⟦…⟧` for type-level lists, `⊖` for
//! marked constraints, `<=>` / `==>` for CHRs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::types::{
    base_name, tuple_arity, Atom, Constraint, ConstraintKind, Pred, Type, TypeScheme, ARROW, LIST_CON, PAIR_L,
};

const TOP: u8 = 0;
const ARG: u8 = 1;
const ATOM: u8 = 2;

fn write_type(f: &mut fmt::Formatter<'_>, t: &Type, prec: u8) -> fmt::Result {
    match t {
        Type::Var(v) => write!(f, "{v}"),
        Type::Con(c) => write!(f, "{c}"),
        Type::List(items, tail) => {
            write!(f, "⟦")?;
            for (i, x) in items.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write_type(f, x, TOP)?;
            }
            if let Some(r) = tail {
                write!(f, " | ")?;
                write_type(f, r, TOP)?;
            }
            write!(f, "⟧")
        }
        Type::App(..) => {
            let (head, args) = t.spine();
            if let Type::Con(c) = head {
                // An applied arrow, tuple or list prints as `(a -> b) c`.
                let arity = match c.as_str() {
                    ARROW | PAIR_L => Some(2),
                    LIST_CON => Some(1),
                    _ => tuple_arity(c),
                };
                if let Some(n) = arity.filter(|n| *n < args.len()) {
                    let saturated = args[..n].iter().fold(head.clone(), |h, a| Type::app(h, (*a).clone()));
                    if prec >= ATOM {
                        write!(f, "(")?;
                    }
                    write_type(f, &saturated, ATOM)?;
                    for a in &args[n..] {
                        write!(f, " ")?;
                        write_type(f, a, ATOM)?;
                    }
                    if prec >= ATOM {
                        write!(f, ")")?;
                    }
                    return Ok(());
                }
                if c == ARROW && args.len() == 2 {
                    if prec > TOP {
                        write!(f, "(")?;
                    }
                    write_type(f, args[0], ARG)?;
                    write!(f, " -> ")?;
                    write_type(f, args[1], TOP)?;
                    if prec > TOP {
                        write!(f, ")")?;
                    }
                    return Ok(());
                }
                let tuple = tuple_arity(c).filter(|n| *n == args.len());
                if tuple.is_some() || (c == PAIR_L && args.len() == 2) {
                    write!(f, "(")?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            write!(f, ", ")?;
                        }
                        write_type(f, a, TOP)?;
                    }
                    return write!(f, ")");
                }
                if c == LIST_CON && args.len() == 1 {
                    write!(f, "[")?;
                    write_type(f, args[0], TOP)?;
                    return write!(f, "]");
                }
            }
            if prec >= ATOM {
                write!(f, "(")?;
            }
            write_type(f, head, ATOM)?;
            for a in args {
                write!(f, " ")?;
                write_type(f, a, ATOM)?;
            }
            if prec >= ATOM {
                write!(f, ")")?;
            }
            Ok(())
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_type(f, self, TOP)
    }
}

fn is_operator(name: &str) -> bool {
    name.chars().next().is_some_and(|c| !c.is_alphanumeric() && c != '_' && c != '(')
}

impl fmt::Display for Pred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pred::Class(c) => write!(f, "{c}"),
            Pred::Def(g) => write!(f, "{g}"),
            Pred::Ann(g) => write!(f, "{g}_a"),
            Pred::Prim(p) if is_operator(p) => write!(f, "({p})"),
            Pred::Prim(p) => write!(f, "{p}"),
            Pred::Top => write!(f, "top"),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.pred.is_class() {
            write!(f, "{}", self.pred)?;
            for a in &self.args {
                write!(f, " ")?;
                write_type(f, a, ATOM)?;
            }
            Ok(())
        } else {
            write!(f, "{}(", self.pred)?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write_type(f, a, TOP)?;
            }
            write!(f, ")")
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ConstraintKind::Eq(a, b) => write!(f, "{a} = {b}"),
            ConstraintKind::User(at) if at.pred.is_class() && self.marker.is_marked() => {
                write!(f, "({at})⊖")
            }
            ConstraintKind::User(at) => write!(f, "{at}{}", self.marker),
        }
    }
}

pub(crate) fn write_context(f: &mut fmt::Formatter<'_>, ctx: &[Atom]) -> fmt::Result {
    if ctx.len() == 1 {
        write!(f, "{}", ctx[0])
    } else {
        write!(f, "(")?;
        for (i, a) in ctx.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for TypeScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.quantified.is_empty() {
            write!(f, "forall")?;
            for v in &self.quantified {
                write!(f, " {v}")?;
            }
            write!(f, ". ")?;
        }
        if !self.context.is_empty() {
            write_context(f, &self.context)?;
            write!(f, " => ")?;
        }
        write!(f, "{}", self.body)
    }
}

/// Comma-separated constraint conjunction, `True` when empty.
pub fn conjunction(cs: &[Constraint]) -> String {
    if cs.is_empty() {
        "True".to_string()
    } else {
        cs.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", ")
    }
}

/// Names made up during rule generation, as opposed to binder type
/// variables and variables written in annotations.
pub(crate) fn is_generated(base: &str) -> bool {
    let digits_after =
        |p: &str| base.strip_prefix(p).is_some_and(|r| !r.is_empty() && r.bytes().all(|b| b.is_ascii_digit()));
    matches!(base, "t" | "l" | "lr" | "tp" | "ll" | "lg")
        || ["t", "tc", "lc", "lgc", "l", "lg"].iter().any(|p| digits_after(p))
}

/// Map fresh names such as `t_y#12` back to readable names (`t_y`,
/// `t_y'`, ...) without introducing collisions.
pub fn tidy_names(vars: &BTreeSet<String>) -> BTreeMap<String, String> {
    let mut taken: BTreeSet<String> = vars.iter().filter(|v| !v.contains('#')).cloned().collect();
    let mut out = BTreeMap::new();
    let mut fresh: Vec<&String> = vars.iter().filter(|v| v.contains('#')).collect();
    fresh.sort_by_key(|v| {
        let n: u64 = v.rsplit('#').next().and_then(|n| n.parse().ok()).unwrap_or(0);
        (base_name(v).to_string(), n)
    });
    let mut letters = (0..).map(|i: u32| {
        let c = char::from(b'a' + (i % 26) as u8);
        if i < 26 {
            c.to_string()
        } else {
            format!("{c}{}", i / 26)
        }
    });
    for v in fresh {
        let base = base_name(v);
        let mut candidate = if is_generated(base) {
            letters.by_ref().find(|c| !taken.contains(c)).expect("unbounded")
        } else {
            base.to_string()
        };
        while taken.contains(&candidate) {
            candidate.push('\'');
        }
        taken.insert(candidate.clone());
        out.insert(v.clone(), candidate);
    }
    out
}
