//! Substitutions, syntactic unification and one-way matching.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::types::{Atom, Constraint, ConstraintKind, Type};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UnifyError {
    #[error("cannot match `{0}` with `{1}`")]
    Clash(Type, Type),
    #[error("infinite type: `{0}` occurs in `{1}`")]
    OccursCheck(String, Type),
    #[error("type-level lists of different length: `{0}` and `{1}`")]
    ListLengthMismatch(Type, Type),
}

impl UnifyError {
    pub fn rename(&self, f: &impl Fn(&str) -> Option<String>) -> UnifyError {
        match self {
            UnifyError::Clash(a, b) => UnifyError::Clash(a.rename(f), b.rename(f)),
            UnifyError::OccursCheck(v, t) => UnifyError::OccursCheck(f(v).unwrap_or_else(|| v.clone()), t.rename(f)),
            UnifyError::ListLengthMismatch(a, b) => UnifyError::ListLengthMismatch(a.rename(f), b.rename(f)),
        }
    }

    pub fn collect_vars(&self, out: &mut std::collections::BTreeSet<String>) {
        match self {
            UnifyError::Clash(a, b) | UnifyError::ListLengthMismatch(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            UnifyError::OccursCheck(v, t) => {
                out.insert(v.clone());
                t.collect_vars(out);
            }
        }
    }
}

/// An idempotent substitution in solved form: no variable in the domain
/// occurs in any right-hand side.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Subst {
    map: BTreeMap<String, Type>,
}

impl Subst {
    pub fn new() -> Subst {
        Subst::default()
    }

    /// Build an idempotent substitution from arbitrary bindings, resolving
    /// chains such as `{a ↦ b, b ↦ Int}`.
    pub fn from_bindings(bindings: impl IntoIterator<Item = (String, Type)>) -> Result<Subst, UnifyError> {
        let mut s = Subst::new();
        for (v, t) in bindings {
            s.unify(&Type::Var(v), &t)?;
        }
        Ok(s)
    }

    /// Wrap a map whose right-hand sides never mention its domain.
    pub(crate) fn from_map_unchecked(map: BTreeMap<String, Type>) -> Subst {
        Subst { map }
    }

    pub fn get(&self, v: &str) -> Option<&Type> {
        self.map.get(v)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Type)> {
        self.map.iter()
    }

    pub fn apply(&self, t: &Type) -> Type {
        if self.map.is_empty() {
            return t.clone();
        }
        match t {
            Type::Var(v) => self.map.get(v).cloned().unwrap_or_else(|| t.clone()),
            Type::Con(_) => t.clone(),
            Type::App(f, a) => Type::app(self.apply(f), self.apply(a)),
            Type::List(items, tail) => {
                Type::list(items.iter().map(|i| self.apply(i)).collect(), tail.as_ref().map(|x| self.apply(x)))
            }
        }
    }

    pub fn apply_atom(&self, a: &Atom) -> Atom {
        Atom::new(a.pred.clone(), a.args.iter().map(|t| self.apply(t)).collect())
    }

    pub fn apply_constraint(&self, c: &Constraint) -> Constraint {
        let kind = match &c.kind {
            ConstraintKind::Eq(a, b) => ConstraintKind::Eq(self.apply(a), self.apply(b)),
            ConstraintKind::User(at) => ConstraintKind::User(self.apply_atom(at)),
        };
        Constraint { kind, marker: c.marker, locs: c.locs.clone() }
    }

    /// `apply(compose(s2, s1), x) == apply(s2, apply(s1, x))`.
    pub fn compose(s2: &Subst, s1: &Subst) -> Subst {
        let mut map: BTreeMap<String, Type> = s1.map.iter().map(|(v, t)| (v.clone(), s2.apply(t))).collect();
        for (v, t) in &s2.map {
            map.entry(v.clone()).or_insert_with(|| t.clone());
        }
        map.retain(|v, t| *t != Type::Var(v.clone()));
        Subst { map }
    }

    /// Restrict the domain to the given variables.
    pub fn restrict<'a>(&self, vars: impl IntoIterator<Item = &'a String>) -> BTreeMap<String, Type> {
        vars.into_iter().map(|v| (v.clone(), self.apply(&Type::Var(v.clone())))).collect()
    }

    fn bind(&mut self, v: &str, t: Type) -> Result<(), UnifyError> {
        if let Type::Var(w) = &t {
            if w == v {
                return Ok(());
            }
        }
        if t.occurs(v) {
            return Err(UnifyError::OccursCheck(v.to_string(), t));
        }
        let single = Subst { map: BTreeMap::from([(v.to_string(), t.clone())]) };
        for rhs in self.map.values_mut() {
            if rhs.occurs(v) {
                *rhs = single.apply(rhs);
            }
        }
        self.map.insert(v.to_string(), t);
        Ok(())
    }

    /// Extend this substitution with the most general unifier of `a` and `b`.
    /// On failure the substitution may be partially extended.
    pub fn unify(&mut self, a: &Type, b: &Type) -> Result<(), UnifyError> {
        let a = self.apply(a);
        let b = self.apply(b);
        match (&a, &b) {
            (Type::Var(x), Type::Var(y)) if x == y => Ok(()),
            (Type::Var(x), Type::Var(y)) if readability(x) < readability(y) => self.bind(y, a.clone()),
            (Type::Var(x), _) => self.bind(x, b.clone()),
            (_, Type::Var(y)) => self.bind(y, a.clone()),
            (Type::Con(c), Type::Con(d)) if c == d => Ok(()),
            (Type::App(f1, a1), Type::App(f2, a2)) => {
                self.unify(f1, f2)?;
                self.unify(a1, a2)
            }
            (Type::List(xs, xt), Type::List(ys, yt)) => {
                let n = xs.len().min(ys.len());
                for i in 0..n {
                    self.unify(&xs[i], &ys[i])?;
                }
                let rest_x = Type::list(xs[n..].to_vec(), xt.as_deref().cloned());
                let rest_y = Type::list(ys[n..].to_vec(), yt.as_deref().cloned());
                match (&rest_x, &rest_y) {
                    (Type::List(x, None), Type::List(y, None)) if x.is_empty() && y.is_empty() => Ok(()),
                    (Type::List(..), Type::List(..)) => Err(UnifyError::ListLengthMismatch(a.clone(), b.clone())),
                    _ => self.unify(&rest_x, &rest_y),
                }
            }
            _ => Err(UnifyError::Clash(a.clone(), b.clone())),
        }
    }
}

/// Lower is more readable. Variable-variable equations keep the more
/// readable name as the representative.
/// Among equally readable names, older fresh names (smaller `#n`) win.
fn readability(v: &str) -> (u8, u64) {
    let base = crate::types::base_name(v);
    let rank = if base.starts_with("t_") {
        0
    } else if crate::pretty::is_generated(base) {
        2
    } else {
        1
    };
    let age = v.rsplit_once('#').and_then(|(_, n)| n.parse().ok()).unwrap_or(0);
    (rank, age)
}

/// Most general unifier of a list of equations.
pub fn mgu<'a>(eqs: impl IntoIterator<Item = (&'a Type, &'a Type)>) -> Result<Subst, UnifyError> {
    let mut s = Subst::new();
    for (a, b) in eqs {
        s.unify(a, b)?;
    }
    Ok(s)
}

/// One-way matching: extend `theta` so that `theta(pattern) == term`.
/// Only pattern variables are bound; the term is left untouched.
pub fn match_type(pattern: &Type, term: &Type, theta: &mut BTreeMap<String, Type>) -> bool {
    match (pattern, term) {
        (Type::Var(v), _) => match theta.get(v) {
            Some(bound) => bound == term,
            None => {
                theta.insert(v.clone(), term.clone());
                true
            }
        },
        (Type::Con(c), Type::Con(d)) => c == d,
        (Type::App(f1, a1), Type::App(f2, a2)) => match_type(f1, f2, theta) && match_type(a1, a2, theta),
        (Type::List(ps, ptail), Type::List(ts, ttail)) => {
            if ts.len() < ps.len() {
                return false;
            }
            for (p, t) in ps.iter().zip(ts) {
                if !match_type(p, t, theta) {
                    return false;
                }
            }
            let rest = Type::list(ts[ps.len()..].to_vec(), ttail.as_deref().cloned());
            match ptail {
                Some(pt) => match_type(pt, &rest, theta),
                None => rest == Type::List(Vec::new(), None),
            }
        }
        _ => false,
    }
}

pub fn match_atom(pattern: &Atom, term: &Atom, theta: &mut BTreeMap<String, Type>) -> bool {
    pattern.pred == term.pred
        && pattern.args.len() == term.args.len()
        && pattern.args.iter().zip(&term.args).all(|(p, t)| match_type(p, t, theta))
}
