//! Verdicts: satisfiability of each top-level definition, subsumption
//! checks for annotations, and type-scheme reconstruction.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::lint::{check_ambiguous, lint_theory, Warning};
use crate::solver::{derive_with, DeriveError, Failure, Outcome, SolveOptions, Store};
use crate::surface::{classify_definitions, ClassifyError, DefKind, Program, Span};
use crate::translate::{translate_program, ChrProgram, DefInfo};
use crate::types::{Atom, Constraint, ConstraintKind, Fresh, Loc, Pred, Type, TypeScheme};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Options {
    pub fuel: usize,
    pub forced_calls: bool,
    pub paranoid: bool,
    /// Keep derivation traces in the verdict.
    pub trace: bool,
}

impl Default for Options {
    fn default() -> Self {
        Options { fuel: 10_000, forced_calls: true, paranoid: false, trace: false }
    }
}

impl Options {
    fn solve(&self) -> SolveOptions {
        SolveOptions { fuel: self.fuel, paranoid: self.paranoid, ..SolveOptions::default() }
    }
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum CheckError {
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error("{0}")]
    Paranoid(String),
}

/// Interface variables of a goal `p(t, l), l = (ll, lg)`.
#[derive(Debug, Clone)]
pub struct Goal {
    pub t: String,
    pub ll: String,
    pub lg: String,
}

impl Goal {
    pub fn new(fresh: &mut Fresh) -> Goal {
        Goal { t: fresh.var("t"), ll: fresh.var("ll"), lg: fresh.var("lg") }
    }

    pub fn constraints(&self, pred: Pred, loc: Loc) -> Vec<Constraint> {
        let l = Type::pair_l(Type::var(&self.ll), Type::var(&self.lg));
        vec![Constraint::user(Atom::new(pred, vec![Type::var(&self.t), l])).at(loc)]
    }
}

#[derive(Debug, Clone)]
pub enum SatResult {
    Satisfiable(Box<Outcome>),
    Unsatisfiable(Box<Outcome>, Failure),
    Unknown(Box<Outcome>),
}

fn run(initial: Vec<Constraint>, rules: &ChrProgram, opts: &Options, fresh: Fresh) -> Result<SatResult, CheckError> {
    match derive_with(initial, rules, opts.solve(), fresh) {
        Ok(out) => Ok(match out.store.failure.clone() {
            Some(f) => SatResult::Unsatisfiable(Box::new(out), f),
            None => SatResult::Satisfiable(Box::new(out)),
        }),
        Err(DeriveError::FuelExhausted(out)) => Ok(SatResult::Unknown(out)),
        Err(DeriveError::ParanoidMismatch(m)) => Err(CheckError::Paranoid(m)),
    }
}

/// Derive `c` to a final store and test whether its equations unify.
pub fn check_sat(c: Vec<Constraint>, rules: &ChrProgram, opts: &Options) -> Result<SatResult, CheckError> {
    let mut vars = BTreeSet::new();
    for x in &c {
        x.collect_vars(&mut vars);
    }
    let max = vars.iter().filter_map(|v| v.rsplit_once('#').and_then(|(_, n)| n.parse().ok())).max().unwrap_or(0);
    run(c, rules, opts, Fresh::starting_at(max))
}

/// Why an annotation does not match its definition.
#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    /// The annotated and inferred types differ.
    Type { annotated: Type, inferred: Type },
    /// The annotation fixes the enclosing binders differently.
    Environment { annotated: Type, inferred: Type },
    /// A constraint without a counterpart on the other side.
    Unmatched { constraint: Atom, inferred_side: bool },
    /// One side is unsatisfiable.
    Unsatisfiable { failure: Failure, inferred_side: bool },
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::Type { annotated, inferred } => {
                write!(f, "annotated type `{annotated}` differs from inferred `{inferred}`")
            }
            Witness::Environment { annotated, inferred } => write!(
                f,
                "the annotation constrains enclosing variables as `{annotated}` but the definition as `{inferred}`"
            ),
            Witness::Unmatched { constraint, inferred_side: true } => {
                write!(f, "inferred constraint `{constraint}` is not implied by the annotation")
            }
            Witness::Unmatched { constraint, inferred_side: false } => {
                write!(f, "annotation constraint `{constraint}` is not implied by the definition")
            }
            Witness::Unsatisfiable { failure, inferred_side } => {
                let side = if *inferred_side { "definition" } else { "annotation" };
                write!(f, "the {side} is unsatisfiable: {}", failure.error)
            }
        }
    }
}

impl Witness {
    /// The same witness with fresh variable names made readable.
    pub fn tidied(&self) -> Witness {
        let mut vars = BTreeSet::new();
        match self {
            Witness::Type { annotated, inferred } | Witness::Environment { annotated, inferred } => {
                annotated.collect_vars(&mut vars);
                inferred.collect_vars(&mut vars);
            }
            Witness::Unmatched { constraint, .. } => constraint.collect_vars(&mut vars),
            Witness::Unsatisfiable { failure, .. } => failure.error.collect_vars(&mut vars),
        }
        let names = crate::pretty::tidy_names(&vars);
        let f = |v: &str| names.get(v).cloned();
        match self {
            Witness::Type { annotated, inferred } => {
                Witness::Type { annotated: annotated.rename(&f), inferred: inferred.rename(&f) }
            }
            Witness::Environment { annotated, inferred } => {
                Witness::Environment { annotated: annotated.rename(&f), inferred: inferred.rename(&f) }
            }
            Witness::Unmatched { constraint, inferred_side } => {
                Witness::Unmatched { constraint: constraint.rename(&f), inferred_side: *inferred_side }
            }
            Witness::Unsatisfiable { failure, inferred_side } => Witness::Unsatisfiable {
                failure: Failure { equation: failure.equation.clone(), error: failure.error.rename(&f) },
                inferred_side: *inferred_side,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AnnotationVerdict {
    Correct,
    Incorrect(Witness),
    Unknown,
}

/// Final stores of both sides of a subsumption check.
#[derive(Debug, Clone)]
pub struct Subsumption {
    pub verdict: AnnotationVerdict,
    pub goal: Goal,
    pub annotated: SatResult,
    pub inferred: SatResult,
}

/// A store reduced to what is visible through the interface `{t, ll}`.
#[derive(Debug, Clone)]
pub struct Canonical {
    pub t: Type,
    pub ll: Type,
    /// Distinct user constraints, markers erased.
    pub users: Vec<Atom>,
}

pub fn canonical(store: &Store, goal: &Goal) -> Canonical {
    let t = store.phi.apply(&Type::var(&goal.t));
    let ll = store.phi.apply(&Type::var(&goal.ll));
    let atoms: Vec<(Atom, bool)> =
        store.live().map(|e| (store.phi.apply_atom(e.atom()), e.constraint.marker.is_marked())).collect();
    // Variables connected to the interface through shared constraints.
    let mut reach = t.free_vars();
    ll.collect_vars(&mut reach);
    loop {
        let before = reach.len();
        for (a, _) in &atoms {
            let vs = a.free_vars();
            if !vs.is_disjoint(&reach) {
                reach.extend(vs);
            }
        }
        if reach.len() == before {
            break;
        }
    }
    // Marked constraints over none of those variables are copies of the
    // enclosing context and say nothing about this definition.
    let mut users: Vec<Atom> = Vec::new();
    for (a, marked) in atoms {
        let vs = a.free_vars();
        if marked && !vs.is_empty() && vs.is_disjoint(&reach) {
            continue;
        }
        if !users.contains(&a) {
            users.push(a);
        }
    }
    Canonical { t, ll, users }
}

#[derive(Clone, Default)]
struct Bij {
    fwd: BTreeMap<String, String>,
    bwd: BTreeMap<String, String>,
}

impl Bij {
    fn pair(&mut self, a: &str, b: &str, fixed: &BTreeSet<String>) -> bool {
        if fixed.contains(a) || fixed.contains(b) {
            return a == b;
        }
        match (self.fwd.get(a), self.bwd.get(b)) {
            (Some(x), _) if x != b => false,
            (_, Some(y)) if y != a => false,
            _ => {
                self.fwd.insert(a.to_string(), b.to_string());
                self.bwd.insert(b.to_string(), a.to_string());
                true
            }
        }
    }

    fn types(&mut self, a: &Type, b: &Type, fixed: &BTreeSet<String>) -> bool {
        match (a, b) {
            (Type::Var(x), Type::Var(y)) => self.pair(x, y, fixed),
            (Type::Con(c), Type::Con(d)) => c == d,
            (Type::App(f1, a1), Type::App(f2, a2)) => self.types(f1, f2, fixed) && self.types(a1, a2, fixed),
            (Type::List(xs, xt), Type::List(ys, yt)) => {
                xs.len() == ys.len()
                    && xs.iter().zip(ys).all(|(x, y)| self.types(x, y, fixed))
                    && match (xt, yt) {
                        (None, None) => true,
                        (Some(x), Some(y)) => self.types(x, y, fixed),
                        _ => false,
                    }
            }
            _ => false,
        }
    }

    fn atoms(&mut self, a: &Atom, b: &Atom, fixed: &BTreeSet<String>) -> bool {
        a.pred == b.pred
            && a.args.len() == b.args.len()
            && a.args.iter().zip(&b.args).all(|(x, y)| self.types(x, y, fixed))
    }
}

/// Search for a bijective renaming between the two stores' non-interface
/// variables. On failure, the witness names the first constraint left
/// unmatched by the largest partial matching found.
pub fn equivalent(ann: &Canonical, inf: &Canonical, fixed: &BTreeSet<String>) -> Result<(), Box<Witness>> {
    let mut bij = Bij::default();
    if !bij.types(&ann.t, &inf.t, fixed) {
        return Err(Box::new(Witness::Type { annotated: ann.t.clone(), inferred: inf.t.clone() }));
    }
    if !bij.types(&ann.ll, &inf.ll, fixed) {
        return Err(Box::new(Witness::Environment { annotated: ann.ll.clone(), inferred: inf.ll.clone() }));
    }
    struct Search<'a> {
        ann: &'a [Atom],
        inf: &'a [Atom],
        fixed: &'a BTreeSet<String>,
        best: Vec<Option<usize>>,
        budget: usize,
    }
    fn go(s: &mut Search<'_>, i: usize, bij: &Bij, used: &mut Vec<Option<usize>>) -> bool {
        if used.iter().filter(|x| x.is_some()).count() > s.best.iter().filter(|x| x.is_some()).count() {
            s.best = used.clone();
        }
        if i == s.ann.len() {
            return s.ann.len() == s.inf.len();
        }
        if s.budget == 0 {
            return false;
        }
        s.budget -= 1;
        for j in 0..s.inf.len() {
            if used.contains(&Some(j)) {
                continue;
            }
            let mut b = bij.clone();
            if b.atoms(&s.ann[i], &s.inf[j], s.fixed) {
                used.push(Some(j));
                if go(s, i + 1, &b, used) {
                    return true;
                }
                used.pop();
            }
        }
        used.push(None);
        let r = go(s, i + 1, bij, used) && false;
        used.pop();
        r
    }
    let mut s = Search { ann: &ann.users, inf: &inf.users, fixed, best: Vec::new(), budget: 200_000 };
    if go(&mut s, 0, &bij, &mut Vec::new()) {
        return Ok(());
    }
    let used: BTreeSet<usize> = s.best.iter().flatten().copied().collect();
    if let Some(j) = (0..inf.users.len()).find(|j| !used.contains(j)) {
        return Err(Box::new(Witness::Unmatched { constraint: inf.users[j].clone(), inferred_side: true }));
    }
    let i = (0..ann.users.len()).find(|i| s.best.get(*i).copied().flatten().is_none()).unwrap_or(0);
    Err(Box::new(Witness::Unmatched { constraint: ann.users[i].clone(), inferred_side: false }))
}

/// Compare the final stores of `g_a(t, l)` and `g(t, l)` for the same fresh
/// `t` and `l`.
pub fn check_subsumption(def: &DefInfo, rules: &ChrProgram, opts: &Options) -> Result<Subsumption, CheckError> {
    let mut fresh = Fresh::new();
    let goal = Goal::new(&mut fresh);
    let loc = Loc(def.id.0);
    let annotated = run(goal.constraints(Pred::Ann(def.name.clone()), loc), rules, opts, fresh.clone())?;
    let inferred = run(goal.constraints(Pred::Def(def.name.clone()), loc), rules, opts, fresh)?;
    let verdict = match (&annotated, &inferred) {
        (SatResult::Unknown(_), _) | (_, SatResult::Unknown(_)) => AnnotationVerdict::Unknown,
        (SatResult::Unsatisfiable(..), SatResult::Unsatisfiable(..)) => AnnotationVerdict::Correct,
        (SatResult::Unsatisfiable(_, f), _) => {
            AnnotationVerdict::Incorrect(Witness::Unsatisfiable { failure: f.clone(), inferred_side: false }.tidied())
        }
        (_, SatResult::Unsatisfiable(_, f)) => {
            AnnotationVerdict::Incorrect(Witness::Unsatisfiable { failure: f.clone(), inferred_side: true }.tidied())
        }
        (SatResult::Satisfiable(a), SatResult::Satisfiable(i)) => {
            let fixed: BTreeSet<String> = [goal.t.clone(), goal.ll.clone()].into();
            match equivalent(&canonical(&a.store, &goal), &canonical(&i.store, &goal), &fixed) {
                Ok(()) => AnnotationVerdict::Correct,
                Err(w) => AnnotationVerdict::Incorrect(w.tidied()),
            }
        }
    };
    Ok(Subsumption { verdict, goal, annotated, inferred })
}

/// A reconstructed type together with the environment constraints it
/// depends on.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeReport {
    pub scheme: TypeScheme,
    /// Marked constraints: they belong to enclosing definitions.
    pub from_context: Vec<Atom>,
    /// Ambiguous quantified variables.
    pub ambiguous: Vec<String>,
    /// Types of the enclosing binders, as seen by this definition.
    pub environment: Type,
}

impl fmt::Display for SchemeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.scheme)?;
        if !self.from_context.is_empty() {
            let ctx: Vec<String> = self.from_context.iter().map(|a| a.to_string()).collect();
            write!(f, "  from context: {}", ctx.join(", "))?;
        }
        Ok(())
    }
}

/// `∀ā. D ⇒ φ(t)` from a final store of `g(t, l)`. A top-level definition
/// has no enclosing context: its marked constraints are renamed copies of
/// its own and are dropped.
pub fn scheme_from_store(store: &Store, goal: &Goal, top_level: bool) -> SchemeReport {
    let phi = &store.phi;
    let mut unmarked: Vec<Atom> = Vec::new();
    let mut marked: Vec<Atom> = Vec::new();
    for e in store.live() {
        let a = phi.apply_atom(e.atom());
        let bucket = if e.constraint.marker.is_marked() { &mut marked } else { &mut unmarked };
        if !bucket.contains(&a) {
            bucket.push(a);
        }
    }
    marked.retain(|a| !top_level && !unmarked.contains(a));
    let body = phi.apply(&Type::var(&goal.t));
    let mut quantified = body.free_vars();
    for a in &unmarked {
        a.collect_vars(&mut quantified);
    }
    let environment = phi.apply(&Type::var(&goal.ll));
    let mut fixed = environment.free_vars();
    for a in &marked {
        a.collect_vars(&mut fixed);
    }
    quantified.retain(|v| !fixed.contains(v));
    tidy(SchemeReport {
        scheme: TypeScheme { quantified, context: unmarked, body },
        from_context: marked,
        ambiguous: Vec::new(),
        environment,
    })
}

fn tidy(r: SchemeReport) -> SchemeReport {
    let mut vars = r.scheme.free_vars();
    vars.extend(r.scheme.quantified.iter().cloned());
    for a in &r.from_context {
        a.collect_vars(&mut vars);
    }
    r.environment.collect_vars(&mut vars);
    let names = crate::pretty::tidy_names(&vars);
    let f = |v: &str| names.get(v).cloned();
    SchemeReport {
        scheme: TypeScheme {
            quantified: r.scheme.quantified.iter().map(|v| f(v).unwrap_or_else(|| v.clone())).collect(),
            context: r.scheme.context.iter().map(|a| a.rename(&f)).collect(),
            body: r.scheme.body.rename(&f),
        },
        from_context: r.from_context.iter().map(|a| a.rename(&f)).collect(),
        ambiguous: r.ambiguous.iter().map(|v| f(v).unwrap_or_else(|| v.clone())).collect(),
        environment: r.environment.rename(&f),
    }
}

#[derive(Debug, Clone)]
pub enum SchemeResult {
    Ok(SchemeReport),
    Unsatisfiable(Failure),
    Unknown,
}

/// Derive `g(t, l)` and build its type scheme.
pub fn build_scheme(
    def: &DefInfo,
    rules: &ChrProgram,
    opts: &Options,
) -> Result<(SchemeResult, SatResult, Goal), CheckError> {
    let mut fresh = Fresh::new();
    let goal = Goal::new(&mut fresh);
    let sat = run(goal.constraints(Pred::Def(def.name.clone()), Loc(def.id.0)), rules, opts, fresh)?;
    let result = match &sat {
        SatResult::Satisfiable(out) => {
            let mut r = scheme_from_store(&out.store, &goal, def.parent.is_none());
            r.ambiguous = check_ambiguous(&r.scheme, &rules.fundeps);
            SchemeResult::Ok(r)
        }
        SatResult::Unsatisfiable(_, f) => SchemeResult::Unsatisfiable(f.clone()),
        SatResult::Unknown(_) => SchemeResult::Unknown,
    };
    Ok((result, sat, goal))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ProgramVerdict {
    WellTyped,
    Unknown,
    IllTyped,
}

impl ProgramVerdict {
    pub fn exit_code(self) -> i32 {
        match self {
            ProgramVerdict::WellTyped => 0,
            ProgramVerdict::IllTyped => 1,
            ProgramVerdict::Unknown => 2,
        }
    }
}

impl fmt::Display for ProgramVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProgramVerdict::WellTyped => "well-typed",
            ProgramVerdict::IllTyped => "ill-typed",
            ProgramVerdict::Unknown => "unknown",
        })
    }
}

#[derive(Debug, Clone)]
pub struct DefVerdict {
    pub name: String,
    pub display: String,
    pub kind: DefKind,
    pub top_level: bool,
    pub span: Span,
    pub scheme: SchemeResult,
    pub annotation: Option<AnnotationVerdict>,
    /// Source locations recorded on the failing equation, if any.
    pub failure_spans: Vec<Span>,
}

#[derive(Debug, Clone)]
pub struct Verdict {
    pub program: ProgramVerdict,
    pub definitions: Vec<DefVerdict>,
    pub warnings: Vec<Warning>,
    /// Human-readable reasons for an ill-typed or unknown verdict.
    pub reasons: Vec<String>,
    pub rules: ChrProgram,
    /// Derivation traces of top-level definitions, when requested.
    pub traces: Vec<(String, crate::solver::Trace)>,
}

impl Verdict {
    pub fn definition(&self, display: &str) -> Option<&DefVerdict> {
        self.definitions.iter().find(|d| d.display == display || d.name == display)
    }

    pub fn scheme(&self, display: &str) -> Option<&SchemeReport> {
        match &self.definition(display)?.scheme {
            SchemeResult::Ok(r) => Some(r),
            _ => None,
        }
    }
}

fn spans_of(c: &Constraint, p: &Program) -> Vec<Span> {
    let mut out: Vec<Span> = Vec::new();
    for l in &c.locs {
        let s = p.span_of(crate::surface::NodeId(l.0));
        if !out.contains(&s) {
            out.push(s);
        }
    }
    out
}

/// Describe a failed equation with the source locations it came from.
pub fn describe_failure(f: &Failure, p: &Program) -> String {
    let mut vars = BTreeSet::new();
    f.error.collect_vars(&mut vars);
    let names = crate::pretty::tidy_names(&vars);
    let error = f.error.rename(&|v| names.get(v).cloned());
    let spans: Vec<String> = spans_of(&f.equation, p).iter().map(|s| s.to_string()).collect();
    if spans.is_empty() {
        error.to_string()
    } else {
        format!("{error} (arising at {})", spans.join(" via "))
    }
}

/// Check every definition and annotation of a parsed program.
pub fn infer_program(p: &Program, opts: &Options) -> Result<Verdict, CheckError> {
    let classes = classify_definitions(p)?;
    let rules = translate_program(p, &classes, opts.forced_calls);
    let mut warnings = lint_theory(&rules, p);
    let mut definitions = Vec::new();
    let mut reasons = Vec::new();
    let mut traces = Vec::new();
    let mut verdict = ProgramVerdict::WellTyped;
    let worsen = |v: &mut ProgramVerdict, w: ProgramVerdict| *v = (*v).max(w);
    for def in &rules.defs {
        let top_level = def.parent.is_none();
        let (scheme, sat, _) = build_scheme(def, &rules, opts)?;
        let mut failure_spans = Vec::new();
        match &sat {
            SatResult::Unsatisfiable(_, f) => {
                failure_spans = spans_of(&f.equation, p);
                if top_level {
                    worsen(&mut verdict, ProgramVerdict::IllTyped);
                    reasons.push(format!("`{}` is ill-typed: {}", def.display, describe_failure(f, p)));
                }
            }
            SatResult::Unknown(out) if top_level => {
                worsen(&mut verdict, ProgramVerdict::Unknown);
                reasons.push(format!("`{}`: derivation did not terminate within {} steps", def.display, out.steps));
            }
            _ => {}
        }
        if opts.trace && top_level {
            let out = match &sat {
                SatResult::Satisfiable(o) | SatResult::Unsatisfiable(o, _) | SatResult::Unknown(o) => o,
            };
            traces.push((def.display.clone(), out.trace.clone()));
        }
        let annotation = if def.annotation.is_some() {
            let s = check_subsumption(def, &rules, opts)?;
            match &s.verdict {
                AnnotationVerdict::Correct => {}
                AnnotationVerdict::Incorrect(w) => {
                    worsen(&mut verdict, ProgramVerdict::IllTyped);
                    reasons.push(format!("annotation of `{}` is incorrect: {w}", def.display));
                }
                AnnotationVerdict::Unknown => {
                    worsen(&mut verdict, ProgramVerdict::Unknown);
                    reasons.push(format!("annotation of `{}` could not be checked within the fuel limit", def.display));
                }
            }
            Some(s.verdict)
        } else {
            None
        };
        if let SchemeResult::Ok(r) = &scheme {
            if !r.ambiguous.is_empty() {
                warnings.push(Warning::Ambiguous {
                    name: def.display.clone(),
                    vars: r.ambiguous.clone(),
                    span: def.span,
                });
            }
        }
        definitions.push(DefVerdict {
            name: def.name.clone(),
            display: def.display.clone(),
            kind: classes.kind(&def.name).unwrap_or(DefKind::Nrf),
            top_level,
            span: def.span,
            scheme,
            annotation,
            failure_spans,
        });
    }
    Ok(Verdict { program: verdict, definitions, warnings, reasons, rules, traces })
}

/// Constraint list with the store's unifier applied and readable names,
/// for display.
pub fn display_store(store: &Store) -> Vec<Constraint> {
    let mut cs: Vec<Constraint> = store
        .eqs
        .iter()
        .filter_map(|c| match &c.kind {
            ConstraintKind::Eq(Type::Var(v), _) => {
                let t = store.phi.apply(&Type::var(v));
                (t != Type::var(v)).then(|| Constraint::eq(Type::var(v), t))
            }
            _ => None,
        })
        .collect();
    cs.extend(store.solved_users());
    cs
}
