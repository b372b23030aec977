//! Algorithm W with monomorphic recursion: an independent reference for
//! programs without classes or annotations. It has its own type
//! representation and unifier.

use std::collections::{BTreeSet, HashMap};

use chm_core::surface::{Binding, Expr, ExprKind, Literal, Program};
use chm_core::types::{Type, TypeScheme};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum T {
    V(u32),
    C(String, Vec<T>),
}

fn con(name: &str) -> T {
    T::C(name.into(), vec![])
}

fn arr(a: T, b: T) -> T {
    T::C("->".into(), vec![a, b])
}

#[derive(Debug, Default, Clone)]
pub struct Unifier {
    pub subst: HashMap<u32, T>,
    pub next: u32,
}

impl Unifier {
    pub fn fresh(&mut self) -> T {
        self.next += 1;
        T::V(self.next)
    }

    pub fn resolve(&self, t: &T) -> T {
        match t {
            T::V(v) => match self.subst.get(v) {
                Some(u) => self.resolve(u),
                None => t.clone(),
            },
            T::C(c, args) => T::C(c.clone(), args.iter().map(|a| self.resolve(a)).collect()),
        }
    }

    fn occurs(&self, v: u32, t: &T) -> bool {
        match self.resolve(t) {
            T::V(w) => v == w,
            T::C(_, args) => args.iter().any(|a| self.occurs(v, a)),
        }
    }

    pub fn unify(&mut self, a: &T, b: &T) -> Result<(), String> {
        let (a, b) = (self.resolve(a), self.resolve(b));
        match (&a, &b) {
            (T::V(x), T::V(y)) if x == y => Ok(()),
            (T::V(x), _) => {
                if self.occurs(*x, &b) {
                    return Err("occurs check".into());
                }
                self.subst.insert(*x, b);
                Ok(())
            }
            (_, T::V(_)) => self.unify(&b, &a),
            (T::C(c, xs), T::C(d, ys)) => {
                if c != d || xs.len() != ys.len() {
                    return Err(format!("clash {c} {d}"));
                }
                for (x, y) in xs.iter().zip(ys) {
                    self.unify(x, y)?;
                }
                Ok(())
            }
        }
    }
}

fn free(t: &T, out: &mut BTreeSet<u32>) {
    match t {
        T::V(v) => {
            out.insert(*v);
        }
        T::C(_, args) => args.iter().for_each(|a| free(a, out)),
    }
}

#[derive(Debug, Clone)]
struct Scheme {
    vars: BTreeSet<u32>,
    ty: T,
}

/// Convert a library type. Type-level lists become cons cells.
pub fn from_type(t: &Type, names: &mut HashMap<String, u32>, u: &mut Unifier) -> T {
    match t {
        Type::Var(v) => {
            if let Some(n) = names.get(v) {
                return T::V(*n);
            }
            let T::V(n) = u.fresh() else { unreachable!() };
            names.insert(v.clone(), n);
            T::V(n)
        }
        Type::Con(c) => con(c),
        Type::App(..) => {
            let (head, args) = t.spine();
            let args: Vec<T> = args.into_iter().map(|a| from_type(a, names, u)).collect();
            match from_type(head, names, u) {
                T::C(c, mut pre) => {
                    pre.extend(args);
                    T::C(c, pre)
                }
                v => args.into_iter().fold(v, |f, a| T::C("@".into(), vec![f, a])),
            }
        }
        Type::List(items, tail) => {
            let end = match tail {
                Some(t) => from_type(t, names, u),
                None => con("⟦⟧"),
            };
            items.iter().rev().fold(end, |acc, i| T::C("⟦:⟧".into(), vec![from_type(i, names, u), acc]))
        }
    }
}

pub fn to_type(t: &T) -> Type {
    match t {
        T::V(v) => Type::var(format!("v{v}")),
        T::C(c, args) if c == "->" => Type::arrow(to_type(&args[0]), to_type(&args[1])),
        T::C(c, args) if c.starts_with("(,") => Type::tuple(args.iter().map(to_type).collect()),
        T::C(c, args) => Type::apps(Type::con(c.clone()), args.iter().map(to_type)),
    }
}

fn primitive(name: &str, u: &mut Unifier) -> Option<T> {
    let s = chm_core::surface::primitive_scheme(name)?;
    Some(from_type(&s.body, &mut HashMap::new(), u))
}

struct W {
    u: Unifier,
    env: Vec<(String, Scheme)>,
}

impl W {
    fn instantiate(&mut self, s: &Scheme) -> T {
        let map: HashMap<u32, T> = s.vars.iter().map(|v| (*v, self.u.fresh())).collect();
        fn go(t: &T, m: &HashMap<u32, T>) -> T {
            match t {
                T::V(v) => m.get(v).cloned().unwrap_or(T::V(*v)),
                T::C(c, a) => T::C(c.clone(), a.iter().map(|x| go(x, m)).collect()),
            }
        }
        go(&s.ty, &map)
    }

    fn generalize(&self, t: &T) -> Scheme {
        let t = self.u.resolve(t);
        let mut fv = BTreeSet::new();
        free(&t, &mut fv);
        let mut env = BTreeSet::new();
        for (_, s) in &self.env {
            let mut f = BTreeSet::new();
            free(&self.u.resolve(&s.ty), &mut f);
            env.extend(f.difference(&s.vars).copied());
        }
        Scheme { vars: fv.difference(&env).copied().collect(), ty: t }
    }

    fn binding(&mut self, b: &Binding) -> Result<Scheme, String> {
        if b.annotation.is_some() {
            return Err("annotations are not supported".into());
        }
        let beta = self.u.fresh();
        self.env.push((b.name.clone(), Scheme { vars: BTreeSet::new(), ty: beta.clone() }));
        let t = self.infer(&b.rhs);
        self.env.pop();
        let t = t?;
        self.u.unify(&beta, &t)?;
        Ok(self.generalize(&t))
    }

    fn infer(&mut self, e: &Expr) -> Result<T, String> {
        match &e.kind {
            ExprKind::Var(v) => {
                if let Some((_, s)) = self.env.iter().rev().find(|(n, _)| n == v) {
                    let s = s.clone();
                    return Ok(self.instantiate(&s));
                }
                primitive(v, &mut self.u).ok_or_else(|| format!("unbound {v}"))
            }
            ExprKind::Lit(l) => Ok(con(match l {
                Literal::Int(_) => "Int",
                Literal::Bool(_) => "Bool",
                Literal::Char(_) => "Char",
                Literal::Str(_) => "String",
            })),
            ExprKind::Abs { binder, body, .. } => {
                let a = self.u.fresh();
                self.env.push((binder.clone(), Scheme { vars: BTreeSet::new(), ty: a.clone() }));
                let r = self.infer(body);
                self.env.pop();
                Ok(arr(a, r?))
            }
            ExprKind::App(f, a) => {
                let tf = self.infer(f)?;
                let ta = self.infer(a)?;
                let r = self.u.fresh();
                self.u.unify(&tf, &arr(ta, r.clone()))?;
                Ok(r)
            }
            ExprKind::Let(b, body) => {
                let s = self.binding(b)?;
                self.env.push((b.name.clone(), s));
                let r = self.infer(body);
                self.env.pop();
                r
            }
            ExprKind::Ascribe(e, t) => {
                let te = self.infer(e)?;
                let ta = from_type(t, &mut HashMap::new(), &mut self.u);
                self.u.unify(&te, &ta)?;
                Ok(te)
            }
        }
    }
}

/// Principal type schemes of the top-level definitions, or the first error.
pub fn infer(p: &Program) -> Result<Vec<(String, TypeScheme)>, String> {
    if !p.classes.is_empty() {
        return Err("classes are not supported".into());
    }
    let mut w = W { u: Unifier::default(), env: Vec::new() };
    let mut out = Vec::new();
    for b in &p.values {
        let s = w.binding(b)?;
        let ty = to_type(&s.ty);
        let quantified = s.vars.iter().map(|v| format!("v{v}")).collect();
        out.push((b.name.clone(), TypeScheme { quantified, context: vec![], body: ty }));
        w.env.push((b.name.clone(), s));
    }
    Ok(out)
}
