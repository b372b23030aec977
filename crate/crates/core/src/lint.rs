//! Side conditions under which inference is complete: range-restricted,
//! single-headed theory rules, fully functional multi-parameter classes
//! under annotations, non-overlapping instances and unambiguous schemes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::surface::{Program, Span};
use crate::translate::{ChrProgram, FunDeps, Partition, RuleKind};
use crate::types::{Atom, ConstraintKind, Type, TypeScheme};
use crate::unify::Subst;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Warning {
    NotRangeRestricted { rule: String },
    MultiHeadedSimplification { rule: String },
    NotFullyFunctional { class: String, span: Span },
    OverlappingInstances { first: String, second: String, span: Span },
    Ambiguous { name: String, vars: Vec<String>, span: Span },
}

impl Warning {
    pub fn span(&self) -> Option<Span> {
        match self {
            Warning::NotRangeRestricted { .. } | Warning::MultiHeadedSimplification { .. } => None,
            Warning::NotFullyFunctional { span, .. }
            | Warning::OverlappingInstances { span, .. }
            | Warning::Ambiguous { span, .. } => Some(*span),
        }
    }

    /// Short machine-readable tag.
    pub fn code(&self) -> &'static str {
        match self {
            Warning::NotRangeRestricted { .. } => "not-range-restricted",
            Warning::MultiHeadedSimplification { .. } => "multi-headed-simplification",
            Warning::NotFullyFunctional { .. } => "not-fully-functional",
            Warning::OverlappingInstances { .. } => "overlapping-instances",
            Warning::Ambiguous { .. } => "ambiguous",
        }
    }
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::NotRangeRestricted { rule } => {
                write!(f, "rule `{rule}` is not range-restricted: grounding its head leaves body variables free")
            }
            Warning::MultiHeadedSimplification { rule } => write!(f, "simplification rule `{rule}` has several heads"),
            Warning::NotFullyFunctional { class, .. } => write!(
                f,
                "class `{class}` is used under an annotation but is not fully functional; annotations may be rejected although correct"
            ),
            Warning::OverlappingInstances { first, second, .. } => {
                write!(f, "instances `{first}` and `{second}` overlap; the theory may not be confluent")
            }
            Warning::Ambiguous { name, vars, .. } => {
                write!(f, "type of `{name}` is ambiguous in {}", vars.join(", "))
            }
        }
    }
}

fn ground_head(vars: &BTreeSet<String>) -> Subst {
    Subst::from_map_unchecked(vars.iter().enumerate().map(|(i, v)| (v.clone(), Type::con(format!("#K{i}")))).collect())
}

fn range_restricted(rule: &crate::translate::ChrRule) -> bool {
    let mut head_vars = BTreeSet::new();
    for h in &rule.heads {
        h.collect_vars(&mut head_vars);
    }
    let g = ground_head(&head_vars);
    let mut phi = Subst::new();
    for c in &rule.body {
        if let ConstraintKind::Eq(a, b) = &c.kind {
            if phi.unify(&g.apply(a), &g.apply(b)).is_err() {
                // an unsatisfiable body binds nothing, and grounds vacuously
                return true;
            }
        }
    }
    rule.body.iter().all(|c| {
        let mut vs = BTreeSet::new();
        phi.apply_constraint(&g.apply_constraint(c)).collect_vars(&mut vs);
        vs.is_empty()
    })
}

/// Whether every parameter determines all others through the fundeps.
pub fn fully_functional(arity: usize, fundeps: &[(Vec<usize>, Vec<usize>)]) -> bool {
    (0..arity).all(|i| {
        let mut closure: BTreeSet<usize> = [i].into();
        loop {
            let before = closure.len();
            for (from, to) in fundeps {
                if from.iter().all(|x| closure.contains(x)) {
                    closure.extend(to.iter().copied());
                }
            }
            if closure.len() == before {
                break;
            }
        }
        closure.len() == arity
    })
}

/// Classes that occur under an annotation: in an annotation's context, or
/// through a method used inside an annotated definition.
fn classes_under_annotations(p: &Program) -> BTreeMap<String, Span> {
    let method_class: BTreeMap<&str, &str> =
        p.classes.iter().flat_map(|c| c.methods.iter().map(move |(m, _)| (m.as_str(), c.name.as_str()))).collect();
    let mut out = BTreeMap::new();
    for b in p.all_bindings() {
        let Some(qt) = &b.annotation else { continue };
        let span = b.sig_span.unwrap_or(b.span);
        for a in &qt.context {
            out.entry(a.pred.to_string()).or_insert(span);
        }
        b.rhs.for_each_var(&mut |v, _| {
            if let Some(c) = method_class.get(v) {
                out.entry(c.to_string()).or_insert(span);
            }
        });
    }
    out
}

fn rename_apart(a: &Atom, suffix: &str) -> Atom {
    a.rename(&|v| Some(format!("{v}{suffix}")))
}

/// Warnings about the class theory of `p`.
pub fn lint_theory(theory: &ChrProgram, p: &Program) -> Vec<Warning> {
    let mut out = Vec::new();
    for r in theory.rules.iter().filter(|r| r.partition != Partition::Generated) {
        if r.kind == RuleKind::Simp && r.heads.len() > 1 {
            out.push(Warning::MultiHeadedSimplification { rule: r.name.clone() });
        }
        if !range_restricted(r) {
            out.push(Warning::NotRangeRestricted { rule: r.name.clone() });
        }
    }
    for (class, span) in classes_under_annotations(p) {
        let Some(c) = p.class(&class) else { continue };
        let fds = theory.fundeps.get(&class).cloned().unwrap_or_default();
        if c.params.len() > 1 && !fully_functional(c.params.len(), &fds) {
            out.push(Warning::NotFullyFunctional { class, span });
        }
    }
    for (i, a) in p.instances.iter().enumerate() {
        for b in &p.instances[i + 1..] {
            if a.class != b.class {
                continue;
            }
            let ha = rename_apart(&Atom::class(a.class.clone(), a.types.clone()), "'1");
            let hb = rename_apart(&Atom::class(b.class.clone(), b.types.clone()), "'2");
            let mut s = Subst::new();
            if ha.args.iter().zip(&hb.args).all(|(x, y)| s.unify(x, y).is_ok()) {
                out.push(Warning::OverlappingInstances {
                    first: Atom::class(a.class.clone(), a.types.clone()).to_string(),
                    second: Atom::class(b.class.clone(), b.types.clone()).to_string(),
                    span: b.span,
                });
            }
        }
    }
    out
}

/// Quantified context variables not determined by the body type, directly
/// or through functional dependencies. Empty when unambiguous.
pub fn check_ambiguous(s: &TypeScheme, fundeps: &FunDeps) -> Vec<String> {
    let mut closure = s.body.free_vars();
    loop {
        let before = closure.len();
        for a in &s.context {
            let fds = fundeps.get(&a.pred.to_string()).map(Vec::as_slice).unwrap_or(&[]);
            for (from, to) in fds {
                let determined = from.iter().all(|&i| a.args[i].free_vars().is_subset(&closure));
                if determined {
                    for &j in to {
                        closure.extend(a.args[j].free_vars());
                    }
                }
            }
        }
        if closure.len() == before {
            break;
        }
    }
    let mut ctx = BTreeSet::new();
    for a in &s.context {
        a.collect_vars(&mut ctx);
    }
    ctx.into_iter().filter(|v| s.quantified.contains(v) && !closure.contains(v)).collect()
}
