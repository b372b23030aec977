//! Dependency analysis over let-bound definitions.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum DefKind {
    /// Non-recursive.
    Nrf,
    /// Unannotated and recursive.
    Mrf,
    /// Annotated and recursive.
    Arf,
}

#[derive(Debug, Clone, Default)]
pub struct DefClass {
    pub kinds: BTreeMap<String, DefKind>,
    /// Strongly connected components of the call graph in dependency order
    /// (callees first).
    pub sccs: Vec<Vec<String>>,
    /// Direct call edges: definition to the definitions its body mentions.
    pub calls: BTreeMap<String, BTreeSet<String>>,
}

impl DefClass {
    pub fn kind(&self, name: &str) -> Option<DefKind> {
        self.kinds.get(name).copied()
    }

    pub fn is_mrf(&self, name: &str) -> bool {
        self.kind(name) == Some(DefKind::Mrf)
    }

    pub fn is_arf(&self, name: &str) -> bool {
        self.kind(name) == Some(DefKind::Arf)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClassifyError {
    #[error("{1}: unbound variable `{0}`")]
    UnboundVariable(String, Span),
    #[error("{1}: mutually recursive definitions {0} need a type annotation on at least one member")]
    MutualRecursion(String, Span),
}

/// Occurrences in `e` that belong to the enclosing definition (nested
/// definitions' right-hand sides are attributed to the nested definition).
fn direct_uses(e: &Expr, defs: &BTreeSet<String>, out: &mut BTreeSet<String>) {
    match &e.kind {
        ExprKind::Var(v) => {
            if defs.contains(v) {
                out.insert(v.clone());
            }
        }
        ExprKind::Lit(_) => {}
        ExprKind::Abs { body, .. } => direct_uses(body, defs, out),
        ExprKind::App(f, a) => {
            direct_uses(f, defs, out);
            direct_uses(a, defs, out);
        }
        ExprKind::Let(_, body) => direct_uses(body, defs, out),
        ExprKind::Ascribe(inner, _) => direct_uses(inner, defs, out),
    }
}

/// Tarjan's algorithm; components come out callees-first.
fn sccs(nodes: &[String], edges: &BTreeMap<String, BTreeSet<String>>) -> Vec<Vec<String>> {
    struct St<'a> {
        edges: &'a BTreeMap<String, BTreeSet<String>>,
        index: BTreeMap<&'a str, usize>,
        low: BTreeMap<&'a str, usize>,
        stack: Vec<&'a str>,
        on: BTreeSet<&'a str>,
        out: Vec<Vec<String>>,
    }
    fn visit<'a>(s: &mut St<'a>, v: &'a str) {
        let i = s.index.len();
        s.index.insert(v, i);
        s.low.insert(v, i);
        s.stack.push(v);
        s.on.insert(v);
        if let Some(ws) = s.edges.get(v) {
            for w in ws {
                if !s.index.contains_key(w.as_str()) {
                    visit(s, w);
                    let lw = s.low[w.as_str()];
                    let lv = s.low.get_mut(v).unwrap();
                    *lv = (*lv).min(lw);
                } else if s.on.contains(w.as_str()) {
                    let iw = s.index[w.as_str()];
                    let lv = s.low.get_mut(v).unwrap();
                    *lv = (*lv).min(iw);
                }
            }
        }
        if s.low[v] == s.index[v] {
            let mut comp = Vec::new();
            loop {
                let w = s.stack.pop().unwrap();
                s.on.remove(w);
                comp.push(w.to_string());
                if w == v {
                    break;
                }
            }
            comp.reverse();
            s.out.push(comp);
        }
    }
    let mut st = St {
        edges,
        index: BTreeMap::new(),
        low: BTreeMap::new(),
        stack: Vec::new(),
        on: BTreeSet::new(),
        out: Vec::new(),
    };
    for n in nodes {
        if !st.index.contains_key(n.as_str()) {
            visit(&mut st, n);
        }
    }
    st.out
}

fn on_cycle(name: &str, comp: &[String], edges: &BTreeMap<String, BTreeSet<String>>) -> bool {
    comp.len() > 1 || edges.get(name).is_some_and(|e| e.contains(name))
}

pub fn classify_definitions(p: &Program) -> Result<DefClass, ClassifyError> {
    if let Some((name, span)) = p.unbound.first() {
        return Err(ClassifyError::UnboundVariable(name.clone(), *span));
    }
    let bindings = p.all_bindings();
    let names: Vec<String> = bindings.iter().map(|b| b.name.clone()).collect();
    let defs: BTreeSet<String> = names.iter().cloned().collect();
    let annotated: BTreeSet<&str> = bindings.iter().filter(|b| b.is_annotated()).map(|b| b.name.as_str()).collect();

    let mut calls = BTreeMap::new();
    for b in &bindings {
        let mut uses = BTreeSet::new();
        direct_uses(&b.rhs, &defs, &mut uses);
        calls.insert(b.name.clone(), uses);
    }
    let full = sccs(&names, &calls);

    // Calls to annotated definitions go through their annotation, so they
    // do not make the caller recursive.
    let effective: BTreeMap<String, BTreeSet<String>> = calls
        .iter()
        .map(|(k, vs)| (k.clone(), vs.iter().filter(|v| !annotated.contains(v.as_str())).cloned().collect()))
        .collect();
    let reduced = sccs(&names, &effective);

    let mut kinds = BTreeMap::new();
    for comp in &full {
        for n in comp {
            if annotated.contains(n.as_str()) && on_cycle(n, comp, &calls) {
                kinds.insert(n.clone(), DefKind::Arf);
            }
        }
    }
    for comp in &reduced {
        if comp.len() > 1 {
            let b = bindings.iter().find(|b| b.name == comp[0]).unwrap();
            let shown: Vec<String> = comp.iter().map(|n| format!("`{}`", p.display_name(n))).collect();
            return Err(ClassifyError::MutualRecursion(shown.join(", "), b.span));
        }
        for n in comp {
            if !annotated.contains(n.as_str()) && on_cycle(n, comp, &effective) {
                kinds.insert(n.clone(), DefKind::Mrf);
            }
        }
    }
    for n in &names {
        kinds.entry(n.clone()).or_insert(DefKind::Nrf);
    }
    Ok(DefClass { kinds, sccs: full, calls })
}
