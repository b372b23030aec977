//! Compilation of a program to CHRs: the class theory, rules for built-ins
//! and methods, and one or two rules per let-bound definition.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::surface::{
    primitive_scheme, Binding, DefClass, Expr, ExprKind, NodeId, Program, QualType, Span, PRIMITIVES,
};
use crate::types::{Atom, Constraint, ConstraintKind, Loc, Pred, Type, TypeScheme};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum RuleKind {
    Simp,
    Prop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, serde::Serialize)]
pub enum Partition {
    Theory,
    Init,
    Generated,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Superclass(String),
    Instance(String),
    FunDep(String),
    Primitive(String),
    Method(String),
    Top,
    Definition(String),
    Annotation(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChrRule {
    /// Unique within a program.
    pub name: String,
    pub heads: Vec<Atom>,
    pub kind: RuleKind,
    pub body: Vec<Constraint>,
    pub origin: Origin,
    pub partition: Partition,
}

impl ChrRule {
    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for h in &self.heads {
            h.collect_vars(&mut out);
        }
        for c in &self.body {
            c.collect_vars(&mut out);
        }
        out
    }

    /// Copy of the rule with every variable replaced by a fresh one.
    pub fn rename_apart(&self, fresh: &mut crate::types::Fresh) -> ChrRule {
        let map: BTreeMap<String, String> = self
            .vars()
            .into_iter()
            .map(|v| {
                let f = fresh.var(&v);
                (v, f)
            })
            .collect();
        let f = |v: &str| map.get(v).cloned();
        ChrRule {
            name: self.name.clone(),
            heads: self.heads.iter().map(|h| h.rename(&f)).collect(),
            kind: self.kind,
            body: self.body.iter().map(|c| c.rename(&f)).collect(),
            origin: self.origin.clone(),
            partition: self.partition,
        }
    }
}

impl fmt::Display for ChrRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let heads: Vec<String> = self.heads.iter().map(|h| h.to_string()).collect();
        let arrow = match self.kind {
            RuleKind::Simp => "<=>",
            RuleKind::Prop => "==>",
        };
        write!(f, "{} {arrow} {}", heads.join(", "), crate::pretty::conjunction(&self.body))
    }
}

/// What the checker needs to know about one let-bound definition.
#[derive(Debug, Clone)]
pub struct DefInfo {
    pub name: String,
    pub display: String,
    pub annotation: Option<QualType>,
    /// Enclosing definition, `None` at top level.
    pub parent: Option<String>,
    /// Binder type variables in scope at the definition, outermost first.
    pub env: Vec<String>,
    pub id: NodeId,
    pub span: Span,
    pub sig_span: Option<Span>,
}

/// Functional dependencies by class, as `(from, to)` parameter positions.
pub type FunDeps = BTreeMap<String, Vec<(Vec<usize>, Vec<usize>)>>;

#[derive(Debug, Clone, Default)]
pub struct ChrProgram {
    pub rules: Vec<ChrRule>,
    /// The closed list of all binder type variables.
    pub lt: Vec<String>,
    /// Definitions in source pre-order.
    pub defs: Vec<DefInfo>,
    pub classes: DefClass,
    /// Functional dependencies by class, as parameter positions.
    pub fundeps: FunDeps,
}

impl ChrProgram {
    pub fn def(&self, name: &str) -> Option<&DefInfo> {
        self.defs.iter().find(|d| d.name == name)
    }

    pub fn partition(&self, p: Partition) -> impl Iterator<Item = &ChrRule> {
        self.rules.iter().filter(move |r| r.partition == p)
    }

    /// Definition rule of `name`.
    pub fn definition_rule(&self, name: &str) -> Option<&ChrRule> {
        self.rules.iter().find(|r| r.origin == Origin::Definition(name.to_string()))
    }

    pub fn annotation_rule(&self, name: &str) -> Option<&ChrRule> {
        self.rules.iter().find(|r| r.origin == Origin::Annotation(name.to_string()))
    }

    /// One rule per line, in program order. Built-in rules are listed only
    /// when some other rule calls them.
    pub fn dump(&self) -> String {
        let called: BTreeSet<&Pred> =
            self.rules.iter().flat_map(|r| r.body.iter().filter_map(|c| c.atom().map(|a| &a.pred))).collect();
        let mut out = String::new();
        for r in &self.rules {
            if r.partition == Partition::Init && !r.heads.iter().any(|h| called.contains(&h.pred)) {
                continue;
            }
            out.push_str(&format!("[{}] {r}\n", r.name));
        }
        out
    }
}

fn user(pred: Pred, args: Vec<Type>) -> Constraint {
    Constraint::user(Atom::new(pred, args))
}

fn head_vars() -> (Type, Type) {
    (Type::var("t"), Type::var("l"))
}

/// Names the generator uses for its own variables.
fn is_reserved(v: &str) -> bool {
    if matches!(v, "t" | "l" | "lr" | "tp") || v.starts_with("t_") {
        return true;
    }
    ["t", "l", "lg", "tc", "lc", "lgc"]
        .iter()
        .any(|p| v.strip_prefix(p).is_some_and(|rest| !rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit())))
}

/// Rename annotation variables away from generator-owned names.
pub fn annotation_renaming(qt: &QualType) -> BTreeMap<String, String> {
    let mut vars = qt.body.free_vars();
    for a in &qt.context {
        a.collect_vars(&mut vars);
    }
    let mut map = BTreeMap::new();
    for v in &vars {
        if is_reserved(v) {
            // Primes alone never leave the `t_` namespace.
            let mut n = match v.strip_prefix("t_") {
                Some(rest) => format!("u_{rest}'"),
                None => format!("{v}'"),
            };
            while is_reserved(&n) || vars.contains(&n) || map.values().any(|m| *m == n) {
                n.push('\'');
            }
            map.insert(v.clone(), n);
        }
    }
    map
}

fn scheme_rule(pred: Pred, scheme: &TypeScheme, extra: Vec<Atom>, origin: Origin) -> ChrRule {
    let (t, l) = head_vars();
    let context: Vec<Atom> = extra.iter().chain(&scheme.context).cloned().collect();
    let qt = QualType { context, body: scheme.body.clone() };
    let ren = annotation_renaming(&qt);
    let f = |v: &str| ren.get(v).cloned();
    let mut body: Vec<Constraint> = qt.context.iter().map(|a| Constraint::user(a.rename(&f))).collect();
    body.push(Constraint::eq(t.clone(), scheme.body.rename(&f)));
    ChrRule {
        name: pred.to_string(),
        heads: vec![Atom::new(pred, vec![t, l])],
        kind: RuleKind::Simp,
        body,
        origin,
        partition: Partition::Init,
    }
}

/// Rules for the class theory: superclasses, instances and functional
/// dependencies, plus a rule per method and built-in.
pub fn translate_theory(p: &Program) -> (Vec<ChrRule>, FunDeps) {
    let mut rules = Vec::new();
    let mut fundeps = BTreeMap::new();
    for c in &p.classes {
        let params: Vec<Type> = c.params.iter().map(Type::var).collect();
        let head = Atom::class(c.name.clone(), params.clone());
        if !c.superclasses.is_empty() {
            rules.push(ChrRule {
                name: format!("super {}", c.name),
                heads: vec![head.clone()],
                kind: RuleKind::Prop,
                body: c.superclasses.iter().cloned().map(Constraint::user).collect(),
                origin: Origin::Superclass(c.name.clone()),
                partition: Partition::Theory,
            });
        }
        let pos = |v: &String| c.params.iter().position(|p| p == v).unwrap();
        let fds: Vec<(Vec<usize>, Vec<usize>)> =
            c.fundeps.iter().map(|(a, b)| (a.iter().map(pos).collect(), b.iter().map(pos).collect())).collect();
        for (k, (from, to)) in fds.iter().enumerate() {
            let other: Vec<Type> = params
                .iter()
                .enumerate()
                .map(|(i, t)| if from.contains(&i) { t.clone() } else { Type::var(format!("{}'", c.params[i])) })
                .collect();
            rules.push(ChrRule {
                name: format!("fd{k} {}", c.name),
                heads: vec![head.clone(), Atom::class(c.name.clone(), other.clone())],
                kind: RuleKind::Prop,
                body: to.iter().map(|&j| Constraint::eq(params[j].clone(), other[j].clone())).collect(),
                origin: Origin::FunDep(c.name.clone()),
                partition: Partition::Theory,
            });
        }
        fundeps.insert(c.name.clone(), fds);
    }
    for (n, i) in p.instances.iter().enumerate() {
        let head = Atom::class(i.class.clone(), i.types.clone());
        let label = head.to_string();
        for (k, (from, to)) in fundeps.get(&i.class).cloned().unwrap_or_default().iter().enumerate() {
            if to.iter().all(|j| from.contains(j)) {
                continue;
            }
            let mut bound = BTreeSet::new();
            for &j in from {
                i.types[j].collect_vars(&mut bound);
            }
            if !to.iter().all(|&j| i.types[j].free_vars().is_subset(&bound)) {
                continue;
            }
            let pattern: Vec<Type> = i
                .types
                .iter()
                .enumerate()
                .map(|(j, t)| if from.contains(&j) { t.clone() } else { Type::var(format!("i{j}'")) })
                .collect();
            rules.push(ChrRule {
                name: format!("fd{k} {label}"),
                heads: vec![Atom::class(i.class.clone(), pattern.clone())],
                kind: RuleKind::Prop,
                body: to
                    .iter()
                    .filter(|j| !from.contains(j))
                    .map(|&j| Constraint::eq(pattern[j].clone(), i.types[j].clone()))
                    .collect(),
                origin: Origin::FunDep(i.class.clone()),
                partition: Partition::Theory,
            });
        }
        rules.push(ChrRule {
            name: format!("inst{n} {label}"),
            heads: vec![head],
            kind: RuleKind::Simp,
            body: i.context.iter().cloned().map(Constraint::user).collect(),
            origin: Origin::Instance(label),
            partition: Partition::Theory,
        });
    }
    let (t, l) = head_vars();
    rules.push(ChrRule {
        name: "top".into(),
        heads: vec![Atom::new(Pred::Top, vec![t, l])],
        kind: RuleKind::Simp,
        body: Vec::new(),
        origin: Origin::Top,
        partition: Partition::Init,
    });
    let defined: BTreeSet<&str> = p.all_bindings().into_iter().map(|b| b.name.as_str()).collect();
    for (name, _) in PRIMITIVES {
        if !defined.contains(name) {
            let s = primitive_scheme(name).unwrap();
            rules.push(scheme_rule(Pred::Prim(name.to_string()), &s, Vec::new(), Origin::Primitive(name.to_string())));
        }
    }
    for c in &p.classes {
        let class_atom = Atom::class(c.name.clone(), c.params.iter().map(Type::var).collect());
        for (m, qt) in &c.methods {
            let s = TypeScheme::closed(qt.context.clone(), qt.body.clone());
            rules.push(scheme_rule(Pred::Prim(m.clone()), &s, vec![class_atom.clone()], Origin::Method(m.clone())));
        }
    }
    (rules, fundeps)
}

/// Constraint generation for one expression.
pub struct Gen<'a> {
    pub classes: &'a DefClass,
    pub defs: &'a BTreeSet<String>,
    /// Tuple constructors used so far; they get rules on demand.
    pub tuples: BTreeSet<usize>,
}

fn node_var(id: NodeId) -> Type {
    Type::var(format!("t{}", id.0))
}

impl Gen<'_> {
    fn use_site(&mut self, f: &str, env: &[String], id: NodeId) -> Vec<Constraint> {
        let t = node_var(id);
        let l = Type::var(format!("l{}", id.0));
        let pred = if self.defs.contains(f) {
            if self.classes.is_arf(f) {
                Pred::Ann(f.to_string())
            } else {
                Pred::Def(f.to_string())
            }
        } else {
            if let Some(n) = crate::types::tuple_arity(f) {
                self.tuples.insert(n);
            }
            Pred::Prim(f.to_string())
        };
        let local = Type::closed_list(env.iter().map(Type::var).collect());
        vec![user(pred, vec![t, l.clone()]), Constraint::eq(l, Type::pair_l(local, Type::var(format!("lg{}", id.0))))]
    }

    /// `(C ⊳ t)` for `e` under the binder environment `env`.
    pub fn constraints(&mut self, env: &mut Vec<String>, e: &Expr) -> (Vec<Constraint>, Type) {
        let loc = Loc(e.id.0);
        let t = node_var(e.id);
        let mut out = Vec::new();
        match &e.kind {
            ExprKind::Var(x) => {
                let binder = format!("t_{x}");
                if env.contains(&binder) {
                    out.push(Constraint::eq(t.clone(), Type::var(binder)));
                } else {
                    out.extend(self.use_site(x, env, e.id));
                }
            }
            ExprKind::Lit(lit) => out.push(Constraint::eq(t.clone(), Type::con(lit.type_name()))),
            ExprKind::Abs { tyvar, body, .. } => {
                env.push(tyvar.clone());
                let (c, tb) = self.constraints(env, body);
                env.pop();
                out.extend(c);
                out.push(Constraint::eq(t.clone(), Type::arrow(Type::var(tyvar), tb)));
            }
            ExprKind::App(f, a) => {
                let (c1, t1) = self.constraints(env, f);
                let (c2, t2) = self.constraints(env, a);
                out.extend(c1);
                out.extend(c2);
                out.push(Constraint::eq(t1, Type::arrow(t2, t.clone())));
            }
            ExprKind::Let(_, body) => {
                let (c, tb) = self.constraints(env, body);
                out.extend(c);
                out.push(Constraint::eq(t.clone(), tb));
            }
            ExprKind::Ascribe(inner, ty) => {
                let (c, ti) = self.constraints(env, inner);
                out.extend(c);
                out.push(Constraint::eq(ti, ty.clone()));
                out.push(Constraint::eq(t.clone(), ty.clone()));
            }
        }
        let out = out.into_iter().map(|c| if c.locs.is_empty() { c.at(loc) } else { c }).collect();
        (out, t)
    }
}

struct RuleGen<'a> {
    gen: Gen<'a>,
    lt: Type,
    rules: Vec<ChrRule>,
    defs: Vec<DefInfo>,
    display: &'a Program,
}

impl RuleGen<'_> {
    fn binding(&mut self, b: &Binding, env: &mut Vec<String>, parent: Option<&str>) {
        let loc = Loc(b.id.0);
        let (t, l) = head_vars();
        let (c1, t1) = self.gen.constraints(env, &b.rhs);
        let local = Type::list(env.iter().map(Type::var).collect(), Some(Type::var("lr")));
        let l_eq = Constraint::eq(l.clone(), Type::pair_l(local, self.lt.clone())).at(loc);
        let parent_pred = parent.map(|p| Pred::Def(p.to_string())).unwrap_or(Pred::Top);
        let parent_call = user(parent_pred, vec![Type::var("tp"), l.clone()]).marked().at(loc);
        let t_eq = Constraint::eq(t.clone(), t1).at(loc);
        let head = |p: Pred| vec![Atom::new(p, vec![t.clone(), l.clone()])];
        self.defs.push(DefInfo {
            name: b.name.clone(),
            display: self.display.display_name(&b.name).to_string(),
            annotation: b.annotation.clone(),
            parent: parent.map(str::to_string),
            env: env.clone(),
            id: b.id,
            span: b.span,
            sig_span: b.sig_span,
        });
        match &b.annotation {
            None => {
                let mut body = c1;
                body.push(t_eq);
                body.push(l_eq);
                body.push(parent_call);
                self.rules.push(ChrRule {
                    name: b.name.clone(),
                    heads: head(Pred::Def(b.name.clone())),
                    kind: RuleKind::Simp,
                    body,
                    origin: Origin::Definition(b.name.clone()),
                    partition: Partition::Generated,
                });
            }
            Some(qt) => {
                let ren = annotation_renaming(qt);
                let f = |v: &str| ren.get(v).cloned();
                let mut abody = vec![Constraint::eq(t.clone(), qt.body.rename(&f)).at(loc)];
                abody.extend(qt.context.iter().map(|a| Constraint::user(a.rename(&f)).at(loc)));
                abody.push(l_eq.clone());
                abody.push(parent_call);
                self.rules.push(ChrRule {
                    name: format!("{}_a", b.name),
                    heads: head(Pred::Ann(b.name.clone())),
                    kind: RuleKind::Simp,
                    body: abody,
                    origin: Origin::Annotation(b.name.clone()),
                    partition: Partition::Generated,
                });
                let mut body = vec![l_eq, user(Pred::Ann(b.name.clone()), vec![t.clone(), l.clone()]).at(loc)];
                body.extend(c1);
                body.push(t_eq);
                self.rules.push(ChrRule {
                    name: b.name.clone(),
                    heads: head(Pred::Def(b.name.clone())),
                    kind: RuleKind::Simp,
                    body,
                    origin: Origin::Definition(b.name.clone()),
                    partition: Partition::Generated,
                });
            }
        }
        self.nested(&b.rhs, env, &b.name);
    }

    fn nested(&mut self, e: &Expr, env: &mut Vec<String>, parent: &str) {
        match &e.kind {
            ExprKind::Var(_) | ExprKind::Lit(_) => {}
            ExprKind::Abs { tyvar, body, .. } => {
                env.push(tyvar.clone());
                self.nested(body, env, parent);
                env.pop();
            }
            ExprKind::App(f, a) => {
                self.nested(f, env, parent);
                self.nested(a, env, parent);
            }
            ExprKind::Let(b, body) => {
                self.binding(b, env, Some(parent));
                self.nested(body, env, parent);
            }
            ExprKind::Ascribe(inner, _) => self.nested(inner, env, parent),
        }
    }
}

fn tuple_rule(n: usize) -> ChrRule {
    let name = crate::types::tuple_con(n);
    let s = primitive_scheme(&name).unwrap();
    scheme_rule(Pred::Prim(name.clone()), &s, Vec::new(), Origin::Primitive(name))
}

/// Rules for every let-bound definition, in source pre-order.
pub fn gen_rules(p: &Program, classes: &DefClass) -> (Vec<ChrRule>, Vec<DefInfo>, BTreeSet<usize>) {
    let defs: BTreeSet<String> = p.all_bindings().into_iter().map(|b| b.name.clone()).collect();
    let lt = Type::closed_list(p.lt_order.iter().map(Type::var).collect());
    let mut rg = RuleGen {
        gen: Gen { classes, defs: &defs, tuples: BTreeSet::new() },
        lt,
        rules: Vec::new(),
        defs: Vec::new(),
        display: p,
    };
    for b in &p.values {
        rg.binding(b, &mut Vec::new(), None);
    }
    (rg.rules, rg.defs, rg.gen.tuples)
}

/// Give every nested definition that its parent never mentions a marked
/// call from the parent's definition rule, so that its constraints on
/// shared binders are always in effect.
pub fn insert_forced_calls(prog: &mut ChrProgram) {
    let nested: Vec<DefInfo> = prog.defs.iter().filter(|d| d.parent.is_some()).cloned().collect();
    for d in nested {
        let parent = d.parent.clone().unwrap();
        let Some(rule) = prog.rules.iter_mut().find(|r| r.origin == Origin::Definition(parent.clone())) else {
            continue;
        };
        let mentions = rule.body.iter().any(|c| match &c.kind {
            ConstraintKind::User(a) => a.pred == Pred::Def(d.name.clone()) || a.pred == Pred::Ann(d.name.clone()),
            _ => false,
        });
        if mentions {
            continue;
        }
        let n = d.id.0;
        let l = Type::var(format!("lc{n}"));
        let local = Type::closed_list(d.env.iter().map(Type::var).collect());
        let loc = Loc(d.id.0);
        rule.body.push(user(Pred::Def(d.name.clone()), vec![Type::var(format!("tc{n}")), l.clone()]).marked().at(loc));
        rule.body.push(Constraint::eq(l, Type::pair_l(local, Type::var(format!("lgc{n}")))).at(loc));
    }
}

/// The complete rule set for a classified program.
pub fn translate_program(p: &Program, classes: &DefClass, forced_calls: bool) -> ChrProgram {
    let (mut rules, fundeps) = translate_theory(p);
    let (generated, defs, tuples) = gen_rules(p, classes);
    rules.extend(tuples.into_iter().map(tuple_rule));
    rules.extend(generated);
    let mut prog = ChrProgram { rules, lt: p.lt_order.clone(), defs, classes: classes.clone(), fundeps };
    if forced_calls {
        insert_forced_calls(&mut prog);
    }
    prog
}
