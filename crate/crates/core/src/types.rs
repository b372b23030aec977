//! Types, constraints and type schemes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Name of the arrow constructor. `a -> b` is `App(App(Con("->"), a), b)`.
pub const ARROW: &str = "->";
/// Name of the constructor pairing the local and global binder lists.
pub const PAIR_L: &str = "PairL";
/// Name of the list type constructor, `[a]`.
pub const LIST_CON: &str = "[]";

/// Tuple constructor name for the given arity, e.g. `(,)` for pairs.
pub fn tuple_con(arity: usize) -> String {
    format!("({})", ",".repeat(arity.saturating_sub(1)))
}

pub(crate) fn tuple_arity(con: &str) -> Option<usize> {
    let inner = con.strip_prefix('(')?.strip_suffix(')')?;
    if !inner.is_empty() && inner.chars().all(|c| c == ',') {
        Some(inner.len() + 1)
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Type {
    Var(String),
    Con(String),
    App(Box<Type>, Box<Type>),
    /// Type-level list `⟦t1,...,tn | tail⟧`. The tail is `None` for a closed
    /// list and otherwise always a variable (see [`Type::list`]).
    List(Vec<Type>, Option<Box<Type>>),
}

impl Type {
    pub fn var(name: impl Into<String>) -> Type {
        Type::Var(name.into())
    }

    pub fn con(name: impl Into<String>) -> Type {
        Type::Con(name.into())
    }

    pub fn app(f: Type, a: Type) -> Type {
        Type::App(Box::new(f), Box::new(a))
    }

    pub fn apps(head: Type, args: impl IntoIterator<Item = Type>) -> Type {
        args.into_iter().fold(head, Type::app)
    }

    pub fn arrow(a: Type, b: Type) -> Type {
        Type::apps(Type::con(ARROW), [a, b])
    }

    /// Right-nested arrow `a1 -> ... -> an -> r`.
    pub fn arrows(args: impl IntoIterator<Item = Type>, ret: Type) -> Type {
        let args: Vec<_> = args.into_iter().collect();
        args.into_iter().rev().fold(ret, |acc, a| Type::arrow(a, acc))
    }

    pub fn tuple(items: Vec<Type>) -> Type {
        let n = items.len();
        Type::apps(Type::Con(tuple_con(n)), items)
    }

    pub fn pair_l(local: Type, global: Type) -> Type {
        Type::apps(Type::con(PAIR_L), [local, global])
    }

    /// Build a type-level list, flattening nested list tails so that the
    /// stored tail is always a variable or absent.
    pub fn list(mut items: Vec<Type>, tail: Option<Type>) -> Type {
        match tail {
            None => Type::List(items, None),
            Some(Type::List(more, t)) => {
                items.extend(more);
                Type::list(items, t.map(|b| *b))
            }
            Some(t) if items.is_empty() => t,
            Some(t) => Type::List(items, Some(Box::new(t))),
        }
    }

    pub fn closed_list(items: Vec<Type>) -> Type {
        Type::List(items, None)
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Type::Var(_))
    }

    /// Split an application spine into head and arguments.
    pub fn spine(&self) -> (&Type, Vec<&Type>) {
        let mut args = Vec::new();
        let mut cur = self;
        while let Type::App(f, a) = cur {
            args.push(&**a);
            cur = f;
        }
        args.reverse();
        (cur, args)
    }

    pub fn as_arrow(&self) -> Option<(&Type, &Type)> {
        match self.spine() {
            (Type::Con(c), args) if c == ARROW && args.len() == 2 => Some((args[0], args[1])),
            _ => None,
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Type::Var(v) => {
                out.insert(v.clone());
            }
            Type::Con(_) => {}
            Type::App(f, a) => {
                f.collect_vars(out);
                a.collect_vars(out);
            }
            Type::List(items, tail) => {
                for t in items {
                    t.collect_vars(out);
                }
                if let Some(t) = tail {
                    t.collect_vars(out);
                }
            }
        }
    }

    pub fn occurs(&self, var: &str) -> bool {
        match self {
            Type::Var(v) => v == var,
            Type::Con(_) => false,
            Type::App(f, a) => f.occurs(var) || a.occurs(var),
            Type::List(items, tail) => {
                items.iter().any(|t| t.occurs(var)) || tail.as_ref().is_some_and(|t| t.occurs(var))
            }
        }
    }

    pub fn is_ground(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Rename variables through `f`; unmapped variables are kept.
    pub fn rename(&self, f: &impl Fn(&str) -> Option<String>) -> Type {
        match self {
            Type::Var(v) => Type::Var(f(v).unwrap_or_else(|| v.clone())),
            Type::Con(_) => self.clone(),
            Type::App(a, b) => Type::app(a.rename(f), b.rename(f)),
            Type::List(items, tail) => {
                Type::list(items.iter().map(|t| t.rename(f)).collect(), tail.as_ref().map(|t| t.rename(f)))
            }
        }
    }
}

/// The ⊖ / ε marker carried by every store constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub enum Marker {
    #[default]
    Plain,
    Marked,
}

impl Marker {
    pub fn is_marked(self) -> bool {
        self == Marker::Marked
    }

    pub fn join(self, other: Marker) -> Marker {
        if self.is_marked() || other.is_marked() {
            Marker::Marked
        } else {
            Marker::Plain
        }
    }
}

/// Predicate symbol of a user constraint.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pred {
    /// A type class, `Foo a b`.
    Class(String),
    /// Definition rule of a let-bound function `g`.
    Def(String),
    /// Annotation rule `g_a` of an annotated function `g`.
    Ann(String),
    /// A primitive or class method from the initial environment.
    Prim(String),
    /// The trivial enclosing context of top-level definitions.
    Top,
}

impl Pred {
    /// Name of the let-bound function this predicate stands for, if any.
    pub fn function(&self) -> Option<&str> {
        match self {
            Pred::Def(g) | Pred::Ann(g) => Some(g),
            _ => None,
        }
    }

    pub fn is_class(&self) -> bool {
        matches!(self, Pred::Class(_))
    }
}

/// A user constraint `U t1 ... tn` or `f(t, l)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub pred: Pred,
    pub args: Vec<Type>,
}

impl Atom {
    pub fn new(pred: Pred, args: Vec<Type>) -> Atom {
        Atom { pred, args }
    }

    pub fn class(name: impl Into<String>, args: Vec<Type>) -> Atom {
        Atom::new(Pred::Class(name.into()), args)
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<String>) {
        for a in &self.args {
            a.collect_vars(out);
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn rename(&self, f: &impl Fn(&str) -> Option<String>) -> Atom {
        Atom::new(self.pred.clone(), self.args.iter().map(|t| t.rename(f)).collect())
    }
}

/// Identifier of a program location (an expression node or a rule origin).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub struct Loc(pub u32);

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ConstraintKind {
    Eq(Type, Type),
    User(Atom),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Constraint {
    pub kind: ConstraintKind,
    pub marker: Marker,
    /// Location history, oldest first.
    pub locs: Vec<Loc>,
}

impl Constraint {
    pub fn eq(a: Type, b: Type) -> Constraint {
        Constraint { kind: ConstraintKind::Eq(a, b), marker: Marker::Plain, locs: Vec::new() }
    }

    pub fn user(atom: Atom) -> Constraint {
        Constraint { kind: ConstraintKind::User(atom), marker: Marker::Plain, locs: Vec::new() }
    }

    pub fn at(mut self, loc: Loc) -> Constraint {
        self.locs = vec![loc];
        self
    }

    pub fn marked(mut self) -> Constraint {
        self.marker = Marker::Marked;
        self
    }

    pub fn with_marker(mut self, m: Marker) -> Constraint {
        self.marker = m;
        self
    }

    pub fn atom(&self) -> Option<&Atom> {
        match &self.kind {
            ConstraintKind::User(a) => Some(a),
            ConstraintKind::Eq(..) => None,
        }
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match &self.kind {
            ConstraintKind::Eq(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            ConstraintKind::User(at) => at.collect_vars(out),
        }
    }

    pub fn rename(&self, f: &impl Fn(&str) -> Option<String>) -> Constraint {
        let kind = match &self.kind {
            ConstraintKind::Eq(a, b) => ConstraintKind::Eq(a.rename(f), b.rename(f)),
            ConstraintKind::User(at) => ConstraintKind::User(at.rename(f)),
        };
        Constraint { kind, marker: self.marker, locs: self.locs.clone() }
    }
}

/// `∀ā. C ⇒ t`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TypeScheme {
    pub quantified: BTreeSet<String>,
    pub context: Vec<Atom>,
    pub body: Type,
}

impl TypeScheme {
    pub fn mono(t: Type) -> TypeScheme {
        TypeScheme { quantified: BTreeSet::new(), context: Vec::new(), body: t }
    }

    /// Closed scheme quantifying every free variable of context and body.
    pub fn closed(context: Vec<Atom>, body: Type) -> TypeScheme {
        let mut quantified = body.free_vars();
        for a in &context {
            a.collect_vars(&mut quantified);
        }
        TypeScheme { quantified, context, body }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = self.body.free_vars();
        for a in &self.context {
            a.collect_vars(&mut out);
        }
        out.retain(|v| !self.quantified.contains(v));
        out
    }

    /// Alpha-equivalence: equal up to a bijective renaming of quantified
    /// variables, with the context compared as a set.
    pub fn alpha_eq(&self, other: &TypeScheme) -> bool {
        if self.quantified.len() != other.quantified.len() {
            return false;
        }
        let a = self.canonical();
        let b = other.canonical();
        a == b
    }

    /// Rename quantified variables to `a0, a1, ...` in order of first
    /// occurrence in the body, then the sorted context.
    fn canonical(&self) -> (Type, BTreeSet<Atom>) {
        let mut order: Vec<String> = Vec::new();
        let visit = |t: &Type, order: &mut Vec<String>| {
            let mut seen = Vec::new();
            first_occurrences(t, &mut seen);
            for v in seen {
                if self.quantified.contains(&v) && !order.contains(&v) {
                    order.push(v);
                }
            }
        };
        visit(&self.body, &mut order);
        // Context variables not in the body: order by the remaining atoms'
        // shape, which is renaming-invariant for small contexts.
        let mut ctx: Vec<&Atom> = self.context.iter().collect();
        ctx.sort_by_key(|a| shape_key(a, &self.quantified));
        for a in ctx {
            for t in &a.args {
                visit(t, &mut order);
            }
        }
        let map: BTreeMap<String, String> =
            order.iter().enumerate().map(|(i, v)| (v.clone(), format!("%{i}"))).collect();
        let ren = |v: &str| map.get(v).cloned();
        (self.body.rename(&ren), self.context.iter().map(|a| a.rename(&ren)).collect())
    }
}

fn first_occurrences(t: &Type, out: &mut Vec<String>) {
    match t {
        Type::Var(v) => {
            if !out.contains(v) {
                out.push(v.clone());
            }
        }
        Type::Con(_) => {}
        Type::App(f, a) => {
            first_occurrences(f, out);
            first_occurrences(a, out);
        }
        Type::List(items, tail) => {
            for i in items {
                first_occurrences(i, out);
            }
            if let Some(t) = tail {
                first_occurrences(t, out);
            }
        }
    }
}

fn shape_key(a: &Atom, bound: &BTreeSet<String>) -> Atom {
    a.rename(&|v| bound.contains(v).then(|| "_".to_string()))
}

/// Supply of fresh variable names. Fresh names carry a `#n` suffix, which
/// never appears in names written by users or produced by rule generation.
#[derive(Debug, Clone, Default)]
pub struct Fresh {
    next: u32,
}

impl Fresh {
    pub fn new() -> Fresh {
        Fresh::default()
    }

    pub fn starting_at(next: u32) -> Fresh {
        Fresh { next }
    }

    pub fn var(&mut self, base: &str) -> String {
        let base = base.split('#').next().unwrap_or(base);
        self.next += 1;
        format!("{base}#{}", self.next)
    }
}

/// Strip the `#n` suffix introduced by [`Fresh`].
pub fn base_name(v: &str) -> &str {
    v.split('#').next().unwrap_or(v)
}

pub fn atom_vars<'a>(atoms: impl IntoIterator<Item = &'a Atom>) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for a in atoms {
        a.collect_vars(&mut out);
    }
    out
}

impl fmt::Display for Marker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Marker::Plain => Ok(()),
            Marker::Marked => write!(f, "⊖"),
        }
    }
}
