use std::collections::BTreeMap;
use std::fmt;

use crate::types::{Atom, Type};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, serde::Serialize)]
pub struct Span {
    pub line: u32,
    pub col: u32,
    pub end_line: u32,
    pub end_col: u32,
}

impl Span {
    pub fn to(self, other: Span) -> Span {
        Span { line: self.line, col: self.col, end_line: other.end_line, end_col: other.end_col }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct NodeId(pub u32);

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Int(i64),
    Bool(bool),
    Char(char),
    Str(String),
}

impl Literal {
    pub fn type_name(&self) -> &'static str {
        match self {
            Literal::Int(_) => "Int",
            Literal::Bool(_) => "Bool",
            Literal::Char(_) => "Char",
            Literal::Str(_) => "String",
        }
    }
}

/// `C => t`, closed: every variable is implicitly universally quantified.
#[derive(Debug, Clone, PartialEq)]
pub struct QualType {
    pub context: Vec<Atom>,
    pub body: Type,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
    pub id: NodeId,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Var(String),
    /// `\x :: t_x -> body`; `tyvar` is the binder's type variable.
    Abs {
        binder: String,
        tyvar: String,
        body: Box<Expr>,
    },
    App(Box<Expr>, Box<Expr>),
    /// `let g = e1 in e2`, or the annotated form when the binding carries a
    /// signature.
    Let(Box<Binding>, Box<Expr>),
    Lit(Literal),
    /// Monotype ascription `(e :: T)`.
    Ascribe(Box<Expr>, Type),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Binding {
    pub name: String,
    pub annotation: Option<QualType>,
    pub rhs: Expr,
    pub id: NodeId,
    pub span: Span,
    /// Location of the signature, when annotated.
    pub sig_span: Option<Span>,
}

impl Binding {
    pub fn is_annotated(&self) -> bool {
        self.annotation.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassDecl {
    pub name: String,
    pub params: Vec<String>,
    /// Each dependency `a b -> c`.
    pub fundeps: Vec<(Vec<String>, Vec<String>)>,
    pub superclasses: Vec<Atom>,
    pub methods: Vec<(String, QualType)>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceDecl {
    pub context: Vec<Atom>,
    pub class: String,
    pub types: Vec<Type>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Program {
    pub classes: Vec<ClassDecl>,
    pub instances: Vec<InstanceDecl>,
    /// Top-level bindings in source order.
    pub values: Vec<Binding>,
    /// Type variables of every lambda binder, in pre-order.
    pub lt_order: Vec<String>,
    /// Source name of each binder or definition after renaming.
    pub display: BTreeMap<String, String>,
    /// Span of every node, indexed by node id.
    pub spans: Vec<Span>,
    /// Variable occurrences with no binding in scope.
    pub unbound: Vec<(String, Span)>,
}

impl Program {
    pub fn span_of(&self, id: NodeId) -> Span {
        self.spans.get(id.0 as usize).copied().unwrap_or_default()
    }

    pub fn class(&self, name: &str) -> Option<&ClassDecl> {
        self.classes.iter().find(|c| c.name == name)
    }

    /// Source-level name for a (possibly renamed) identifier.
    pub fn display_name<'a>(&'a self, name: &'a str) -> &'a str {
        self.display.get(name).map(String::as_str).unwrap_or(name)
    }

    /// Every let binding in the program, outermost first, in source order.
    pub fn all_bindings(&self) -> Vec<&Binding> {
        let mut out = Vec::new();
        for b in &self.values {
            collect_bindings(b, &mut out);
        }
        out
    }
}

fn collect_bindings<'a>(b: &'a Binding, out: &mut Vec<&'a Binding>) {
    out.push(b);
    walk_lets(&b.rhs, out);
}

fn walk_lets<'a>(e: &'a Expr, out: &mut Vec<&'a Binding>) {
    match &e.kind {
        ExprKind::Var(_) | ExprKind::Lit(_) => {}
        ExprKind::Abs { body, .. } => walk_lets(body, out),
        ExprKind::App(f, a) => {
            walk_lets(f, out);
            walk_lets(a, out);
        }
        ExprKind::Let(b, body) => {
            collect_bindings(b, out);
            walk_lets(body, out);
        }
        ExprKind::Ascribe(e, _) => walk_lets(e, out),
    }
}

impl Expr {
    /// Number of lambda abstractions in this expression.
    pub fn abs_count(&self) -> usize {
        match &self.kind {
            ExprKind::Var(_) | ExprKind::Lit(_) => 0,
            ExprKind::Abs { body, .. } => 1 + body.abs_count(),
            ExprKind::App(f, a) => f.abs_count() + a.abs_count(),
            ExprKind::Let(b, body) => b.rhs.abs_count() + body.abs_count(),
            ExprKind::Ascribe(e, _) => e.abs_count(),
        }
    }

    /// Visit every variable occurrence.
    pub fn for_each_var(&self, f: &mut impl FnMut(&str, &Expr)) {
        match &self.kind {
            ExprKind::Var(v) => f(v, self),
            ExprKind::Lit(_) => {}
            ExprKind::Abs { body, .. } => body.for_each_var(f),
            ExprKind::App(a, b) => {
                a.for_each_var(f);
                b.for_each_var(f);
            }
            ExprKind::Let(b, body) => {
                b.rhs.for_each_var(f);
                body.for_each_var(f);
            }
            ExprKind::Ascribe(e, _) => e.for_each_var(f),
        }
    }
}
