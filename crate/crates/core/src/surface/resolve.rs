//! Scope resolution: α-renaming of binders and nested definitions, node
//! numbering, and well-formedness checks on declarations and types.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;
use super::{is_primitive, ParseError};
use crate::types::{tuple_arity, Atom, Type, TypeScheme, ARROW, LIST_CON};

fn con_arity(c: &str) -> Option<usize> {
    match c {
        "Int" | "Bool" | "Char" | "String" | "()" => Some(0),
        LIST_CON => Some(1),
        ARROW => Some(2),
        _ => tuple_arity(c),
    }
}

fn check_type(t: &Type, at: Span) -> Result<(), ParseError> {
    let (head, args) = t.spine();
    match head {
        Type::Con(c) => match con_arity(c) {
            None => return Err(ParseError::at(at, format!("unknown type constructor `{c}`"))),
            Some(n) if n != args.len() => {
                return Err(ParseError::at(
                    at,
                    format!("type constructor `{c}` expects {n} argument(s), found {}", args.len()),
                ))
            }
            _ => {}
        },
        Type::Var(v) if !args.is_empty() => {
            return Err(ParseError::at(at, format!("type variable `{v}` cannot be applied to arguments")))
        }
        _ => {}
    }
    for a in args {
        check_type(a, at)?;
    }
    Ok(())
}

struct Resolver<'a> {
    classes: &'a [ClassDecl],
    globals: BTreeSet<String>,
    methods: BTreeSet<String>,
    taken: BTreeSet<String>,
    env: Vec<(String, String)>,
    display: BTreeMap<String, String>,
    spans: Vec<Span>,
    lt_order: Vec<String>,
    unbound: Vec<(String, Span)>,
}

impl Resolver<'_> {
    fn check_atom(&self, a: &Atom, at: Span) -> Result<(), ParseError> {
        let name = a.pred.to_string();
        let Some(c) = self.classes.iter().find(|c| c.name == name) else {
            return Err(ParseError::at(at, format!("unknown class `{name}`")));
        };
        if c.params.len() != a.args.len() {
            return Err(ParseError::at(
                at,
                format!("class `{name}` expects {} argument(s), found {}", c.params.len(), a.args.len()),
            ));
        }
        a.args.iter().try_for_each(|t| check_type(t, at))
    }

    fn check_qual(&self, qt: &QualType, at: Span) -> Result<(), ParseError> {
        for a in &qt.context {
            self.check_atom(a, at)?;
        }
        check_type(&qt.body, at)
    }

    fn unique(&mut self, name: &str) -> String {
        let mut candidate = name.to_string();
        let mut i = 1;
        while self.taken.contains(&candidate) {
            candidate = format!("{name}_{i}");
            i += 1;
        }
        self.taken.insert(candidate.clone());
        if candidate != name {
            self.display.insert(candidate.clone(), name.to_string());
        }
        candidate
    }

    fn node(&mut self, span: Span) -> NodeId {
        self.spans.push(span);
        NodeId(self.spans.len() as u32 - 1)
    }

    fn lookup(&self, name: &str) -> Option<String> {
        if let Some((_, u)) = self.env.iter().rev().find(|(o, _)| o == name) {
            return Some(u.clone());
        }
        if self.globals.contains(name) || self.methods.contains(name) || is_primitive(name) {
            return Some(name.to_string());
        }
        None
    }

    fn binding(&mut self, b: &mut Binding, top: bool) -> Result<(), ParseError> {
        b.id = self.node(b.span);
        if let Some(qt) = &b.annotation {
            self.check_qual(qt, b.sig_span.unwrap_or(b.span))?;
        }
        if !top {
            let u = self.unique(&b.name);
            self.env.push((b.name.clone(), u.clone()));
            b.name = u;
        }
        self.expr(&mut b.rhs)
    }

    fn expr(&mut self, e: &mut Expr) -> Result<(), ParseError> {
        e.id = self.node(e.span);
        match &mut e.kind {
            ExprKind::Var(v) => match self.lookup(v) {
                Some(u) => *v = u,
                None => self.unbound.push((v.clone(), e.span)),
            },
            ExprKind::Lit(_) => {}
            ExprKind::Abs { binder, tyvar, body } => {
                let u = self.unique(binder);
                *tyvar = format!("t_{u}");
                self.lt_order.push(tyvar.clone());
                self.env.push((binder.clone(), u.clone()));
                *binder = u;
                self.expr(body)?;
                self.env.pop();
            }
            ExprKind::App(f, a) => {
                self.expr(f)?;
                self.expr(a)?;
            }
            ExprKind::Let(b, body) => {
                self.binding(b, false)?;
                self.expr(body)?;
                self.env.pop();
            }
            ExprKind::Ascribe(inner, t) => {
                check_type(t, e.span)?;
                if let Some(v) = t.free_vars().into_iter().next() {
                    return Err(ParseError::at(
                        e.span,
                        format!("ascribed type must be a monotype, found variable `{v}`"),
                    ));
                }
                self.expr(inner)?;
            }
        }
        Ok(())
    }
}

fn check_classes(classes: &[ClassDecl]) -> Result<BTreeSet<String>, ParseError> {
    let mut names = BTreeSet::new();
    let mut methods = BTreeSet::new();
    for c in classes {
        if !names.insert(c.name.clone()) {
            return Err(ParseError::at(c.span, format!("duplicate class `{}`", c.name)));
        }
        let params: BTreeSet<&String> = c.params.iter().collect();
        if params.len() != c.params.len() {
            return Err(ParseError::at(c.span, format!("repeated parameter in class `{}`", c.name)));
        }
        if params.is_empty() {
            return Err(ParseError::at(c.span, format!("class `{}` has no parameters", c.name)));
        }
        for (from, to) in &c.fundeps {
            if let Some(v) = from.iter().chain(to).find(|v| !params.contains(v)) {
                return Err(ParseError::at(
                    c.span,
                    format!("functional dependency mentions `{v}`, not a parameter of `{}`", c.name),
                ));
            }
        }
        for s in &c.superclasses {
            if let Some(v) = s.free_vars().into_iter().find(|v| !params.contains(v)) {
                return Err(ParseError::at(
                    c.span,
                    format!("superclass constraint mentions `{v}`, not a parameter of `{}`", c.name),
                ));
            }
        }
        for (m, _) in &c.methods {
            if !methods.insert(m.clone()) {
                return Err(ParseError::at(c.span, format!("method `{m}` declared twice")));
            }
            if is_primitive(m) {
                return Err(ParseError::at(c.span, format!("method `{m}` clashes with a built-in")));
            }
        }
    }
    Ok(methods)
}

pub(crate) fn resolve(
    classes: Vec<ClassDecl>,
    instances: Vec<InstanceDecl>,
    mut values: Vec<Binding>,
) -> Result<Program, ParseError> {
    let methods = check_classes(&classes)?;
    let globals: BTreeSet<String> = values.iter().map(|b| b.name.clone()).collect();
    for b in &values {
        if methods.contains(&b.name) {
            return Err(ParseError::at(b.span, format!("`{}` is already a class method", b.name)));
        }
    }
    let mut r = Resolver {
        classes: &classes,
        taken: globals.iter().chain(&methods).cloned().collect(),
        globals,
        methods,
        env: Vec::new(),
        display: BTreeMap::new(),
        spans: Vec::new(),
        lt_order: Vec::new(),
        unbound: Vec::new(),
    };
    for p in super::PRIMITIVES {
        r.taken.insert(p.0.to_string());
    }
    for c in &classes {
        for s in &c.superclasses {
            r.check_atom(s, c.span)?;
        }
        for (_, qt) in &c.methods {
            r.check_qual(qt, c.span)?;
        }
    }
    let mut heads: Vec<(String, TypeScheme)> = Vec::new();
    for i in &instances {
        r.check_atom(&Atom::class(i.class.clone(), i.types.clone()), i.span)?;
        for a in &i.context {
            r.check_atom(a, i.span)?;
        }
        let head = TypeScheme::closed(Vec::new(), Type::apps(Type::con(&i.class), i.types.clone()));
        if heads.iter().any(|(c, h)| *c == i.class && h.alpha_eq(&head)) {
            return Err(ParseError::at(
                i.span,
                format!("duplicate instance `{}`", Atom::class(i.class.clone(), i.types.clone())),
            ));
        }
        heads.push((i.class.clone(), head));
    }
    for b in &mut values {
        r.binding(b, true)?;
    }
    Ok(Program {
        lt_order: r.lt_order,
        display: r.display,
        spans: r.spans,
        unbound: r.unbound,
        classes,
        instances,
        values,
    })
}
