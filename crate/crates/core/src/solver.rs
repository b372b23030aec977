//! Marked CHR derivations with cycle removal.
//!
//! Rules are tried in program order, simplification before propagation,
//! matching the oldest store constraints first. Before every rule
//! application, cycle removal (CCR) and the monomorphic-recursion step
//! (Mono) run to a fixpoint.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{Hash, Hasher};

use crate::surface::DefKind;
use crate::translate::{ChrProgram, ChrRule, RuleKind};
use crate::types::{Atom, Constraint, ConstraintKind, Fresh, Marker, Pred, Type};
use crate::unify::{match_atom, Subst, UnifyError};

pub type StoreId = u32;

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub id: StoreId,
    pub constraint: Constraint,
    /// False once consumed by a simplification, CCR or Mono step.
    pub live: bool,
}

impl Entry {
    pub fn atom(&self) -> &Atom {
        self.constraint.atom().expect("store entries are user constraints")
    }
}

/// The equation that made the store inconsistent.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub equation: Constraint,
    pub error: UnifyError,
}

#[derive(Debug, Clone, Default)]
pub struct Store {
    /// Every user constraint ever added, live or not, by id.
    pub entries: Vec<Entry>,
    pub eqs: Vec<Constraint>,
    pub phi: Subst,
    pub failure: Option<Failure>,
}

impl Store {
    pub fn is_consistent(&self) -> bool {
        self.failure.is_none()
    }

    pub fn live(&self) -> impl Iterator<Item = &Entry> {
        self.entries.iter().filter(|e| e.live)
    }

    pub fn entry(&self, id: StoreId) -> &Entry {
        &self.entries[id as usize]
    }

    /// Add a constraint; returns the store id of a user constraint.
    pub fn add(&mut self, c: Constraint) -> Option<StoreId> {
        match &c.kind {
            ConstraintKind::Eq(a, b) => {
                if self.failure.is_none() {
                    if let Err(error) = self.phi.unify(a, b) {
                        self.failure = Some(Failure { equation: c.clone(), error });
                    }
                }
                self.eqs.push(c);
                None
            }
            ConstraintKind::User(_) => {
                let id = self.entries.len() as StoreId;
                self.entries.push(Entry { id, constraint: c, live: true });
                Some(id)
            }
        }
    }

    /// Live user constraints and all equations.
    pub fn constraints(&self) -> Vec<Constraint> {
        self.eqs.iter().cloned().chain(self.live().map(|e| e.constraint.clone())).collect()
    }

    /// Live user constraints with the store's unifier applied.
    pub fn solved_users(&self) -> Vec<Constraint> {
        self.live().map(|e| self.phi.apply_constraint(&e.constraint)).collect()
    }

    fn snapshot_hash(&self) -> u64 {
        let mut h = DefaultHasher::new();
        for e in self.live() {
            e.id.hash(&mut h);
            e.constraint.to_string().hash(&mut h);
        }
        self.eqs.len().hash(&mut h);
        self.failure.is_some().hash(&mut h);
        h.finish()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepKind {
    /// Application of the rule with this index.
    Rule(usize),
    Ccr,
    Mono,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub kind: StepKind,
    pub label: String,
    /// Store constraints the step matched, in head order.
    pub matched: Vec<StoreId>,
    /// Store constraints the step removed.
    pub consumed: Vec<StoreId>,
    /// Constraints the step added, with the store id of user constraints.
    pub produced: Vec<(Option<StoreId>, Constraint)>,
    pub snapshot: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub initial: Vec<(Option<StoreId>, Constraint)>,
    pub steps: Vec<TraceStep>,
}

impl Trace {
    /// Rebuild the final store from the initial constraints and the steps.
    pub fn replay(&self) -> Store {
        let mut s = Store::default();
        let add = |s: &mut Store, c: &Constraint, id: Option<StoreId>| {
            let got = s.add(c.clone());
            debug_assert_eq!(got, id);
        };
        for (id, c) in &self.initial {
            add(&mut s, c, *id);
        }
        for st in &self.steps {
            for id in &st.consumed {
                s.entries[*id as usize].live = false;
            }
            for (id, c) in &st.produced {
                add(&mut s, c, *id);
            }
        }
        s
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let init: Vec<Constraint> = self.initial.iter().map(|(_, c)| c.clone()).collect();
        writeln!(f, "   {}", crate::pretty::conjunction(&init))?;
        for st in &self.steps {
            let minus: Vec<String> = st.consumed.iter().map(|i| format!("#{i}")).collect();
            let plus: Vec<Constraint> = st.produced.iter().map(|(_, c)| c.clone()).collect();
            write!(f, "⤳[{}]", st.label)?;
            if !minus.is_empty() {
                write!(f, " -{}", minus.join(" -"))?;
            }
            if !plus.is_empty() {
                write!(f, " +{}", crate::pretty::conjunction(&plus))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveOptions {
    /// Maximum number of rule applications.
    pub fuel: usize,
    pub ccr: bool,
    pub mono: bool,
    /// Recompute the unifier from scratch after every step and compare.
    pub paranoid: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { fuel: 10_000, ccr: true, mono: true, paranoid: false }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub store: Store,
    pub trace: Trace,
    pub steps: usize,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum DeriveError {
    #[error("derivation did not terminate within {} steps", .0.steps)]
    FuelExhausted(Box<Outcome>),
    #[error("incremental unifier diverged from full recomputation: {0}")]
    ParanoidMismatch(String),
}

pub struct Derivation<'a> {
    prog: &'a ChrProgram,
    opts: SolveOptions,
    store: Store,
    history: BTreeSet<(usize, Vec<StoreId>)>,
    trace: Trace,
    fresh: Fresh,
    steps: usize,
}

fn last_loc(c: &Constraint) -> Option<crate::types::Loc> {
    c.locs.last().copied()
}

fn is_proper_prefix<T: PartialEq>(a: &[T], b: &[T]) -> bool {
    a.len() < b.len() && b[..a.len()] == *a
}

impl<'a> Derivation<'a> {
    pub fn new(prog: &'a ChrProgram, opts: SolveOptions) -> Self {
        Derivation {
            prog,
            opts,
            store: Store::default(),
            history: BTreeSet::new(),
            trace: Trace::default(),
            fresh: Fresh::new(),
            steps: 0,
        }
    }

    pub fn fresh(&mut self, base: &str) -> String {
        self.fresh.var(base)
    }

    pub fn fresh_var(&mut self, base: &str) -> Type {
        Type::var(self.fresh.var(base))
    }

    /// Add constraints before the run starts.
    pub fn add_initial(&mut self, cs: impl IntoIterator<Item = Constraint>) {
        for c in cs {
            let id = self.store.add(c.clone());
            self.trace.initial.push((id, c));
        }
    }

    fn def_kind(&self, pred: &Pred) -> Option<DefKind> {
        match pred {
            Pred::Def(g) | Pred::Ann(g) => self.prog.classes.kind(g),
            _ => None,
        }
    }

    /// One CCR or Mono removal, if any applies.
    fn cycle_step(&self) -> Option<(StepKind, StoreId, Option<Constraint>)> {
        let entries = &self.store.entries;
        for c in entries.iter().filter(|e| e.live) {
            let pred = &c.atom().pred;
            let Some(kind) = self.def_kind(pred) else { continue };
            let earlier = || entries[..c.id as usize].iter().filter(move |e| e.atom().pred == *pred);
            let marked = c.constraint.marker.is_marked();
            let equate = |e: &Entry| {
                let mut eq =
                    Constraint::eq(c.atom().args[0].clone(), e.atom().args[0].clone()).with_marker(c.constraint.marker);
                eq.locs = c.constraint.locs.clone();
                eq
            };
            match kind {
                DefKind::Nrf | DefKind::Arf => {
                    // Only a copy below an earlier marked call closes a cycle.
                    let cycle = |e: &Entry| {
                        e.constraint.marker.is_marked() && is_proper_prefix(&e.constraint.locs, &c.constraint.locs)
                    };
                    if self.opts.ccr && marked && earlier().any(cycle) {
                        return Some((StepKind::Ccr, c.id, None));
                    }
                }
                DefKind::Mrf if marked => {
                    if !self.opts.ccr {
                        continue;
                    }
                    let same_loc = |e: &&Entry| last_loc(&e.constraint) == last_loc(&c.constraint);
                    let target = earlier()
                        .filter(same_loc)
                        .find(|e| !e.constraint.marker.is_marked())
                        .or_else(|| earlier().find(same_loc));
                    if let Some(e) = target {
                        return Some((StepKind::Ccr, c.id, Some(equate(e))));
                    }
                    // Recursive call below a marked call, as for Mono.
                    let ancestor = earlier()
                        .filter(|e| {
                            e.constraint.marker.is_marked()
                                && !e.constraint.locs.is_empty()
                                && is_proper_prefix(&e.constraint.locs, &c.constraint.locs)
                        })
                        .max_by_key(|e| (e.constraint.locs.len(), e.id));
                    if let Some(e) = ancestor {
                        return Some((StepKind::Ccr, c.id, Some(equate(e))));
                    }
                }
                DefKind::Mrf => {
                    if !self.opts.mono {
                        continue;
                    }
                    let ancestor = earlier()
                        .filter(|e| {
                            !e.constraint.marker.is_marked()
                                && !e.constraint.locs.is_empty()
                                && is_proper_prefix(&e.constraint.locs, &c.constraint.locs)
                        })
                        .max_by_key(|e| (e.constraint.locs.len(), e.id));
                    if let Some(e) = ancestor {
                        return Some((StepKind::Mono, c.id, Some(equate(e))));
                    }
                }
            }
        }
        None
    }

    fn run_cycle_removal(&mut self) {
        while self.store.is_consistent() {
            let Some((kind, id, eq)) = self.cycle_step() else { return };
            self.store.entries[id as usize].live = false;
            let mut produced = Vec::new();
            if let Some(eq) = eq {
                produced.push((None, eq.clone()));
                self.store.add(eq);
            }
            let label = match kind {
                StepKind::Mono => "Mono",
                _ => "CCR",
            };
            let snapshot = self.store.snapshot_hash();
            self.trace.steps.push(TraceStep {
                kind,
                label: label.into(),
                matched: vec![id],
                consumed: vec![id],
                produced,
                snapshot,
            });
        }
    }

    fn match_heads(&self, rule: &ChrRule, ids: &[StoreId]) -> Option<BTreeMap<String, Type>> {
        let mut theta = BTreeMap::new();
        for (h, id) in rule.heads.iter().zip(ids) {
            let atom = self.store.phi.apply_atom(self.store.entry(*id).atom());
            if !match_atom(h, &atom, &mut theta) {
                return None;
            }
        }
        Some(theta)
    }

    fn candidates(&self, pred: &Pred) -> Vec<StoreId> {
        self.store.live().filter(|e| e.atom().pred == *pred).map(|e| e.id).collect()
    }

    /// First applicable (rule, matched ids, matcher).
    fn select(&self) -> Option<(usize, Vec<StoreId>, BTreeMap<String, Type>)> {
        for pass in [RuleKind::Simp, RuleKind::Prop] {
            for (ri, rule) in self.prog.rules.iter().enumerate().filter(|(_, r)| r.kind == pass) {
                let lists: Vec<Vec<StoreId>> = rule.heads.iter().map(|h| self.candidates(&h.pred)).collect();
                if lists.iter().any(Vec::is_empty) {
                    continue;
                }
                let mut chosen = Vec::new();
                if let Some(found) = self.search(ri, rule, &lists, &mut chosen) {
                    return Some(found);
                }
            }
        }
        None
    }

    fn search(
        &self,
        ri: usize,
        rule: &ChrRule,
        lists: &[Vec<StoreId>],
        chosen: &mut Vec<StoreId>,
    ) -> Option<(usize, Vec<StoreId>, BTreeMap<String, Type>)> {
        if chosen.len() == lists.len() {
            if rule.kind == RuleKind::Prop {
                let mut key = chosen.clone();
                key.sort_unstable();
                if self.history.contains(&(ri, key)) {
                    return None;
                }
            }
            return self.match_heads(rule, chosen).map(|th| (ri, chosen.clone(), th));
        }
        for &id in &lists[chosen.len()] {
            if chosen.contains(&id) {
                continue;
            }
            chosen.push(id);
            // prune on the prefix matched so far
            let ok = {
                let mut theta = BTreeMap::new();
                rule.heads.iter().zip(chosen.iter()).all(|(h, id)| {
                    let atom = self.store.phi.apply_atom(self.store.entry(*id).atom());
                    match_atom(h, &atom, &mut theta)
                })
            };
            if ok {
                if let Some(found) = self.search(ri, rule, lists, chosen) {
                    return Some(found);
                }
            }
            chosen.pop();
        }
        None
    }

    fn fire(&mut self, ri: usize, ids: Vec<StoreId>, theta: BTreeMap<String, Type>) {
        let rule = &self.prog.rules[ri];
        let mut map = theta;
        for v in rule.vars() {
            if let std::collections::btree_map::Entry::Vacant(slot) = map.entry(v) {
                let f = self.fresh.var(slot.key());
                slot.insert(Type::var(f));
            }
        }
        let inst = Subst::from_map_unchecked(map);
        let mut head_marker = Marker::Plain;
        let mut head_locs = Vec::new();
        for id in &ids {
            let c = &self.store.entry(*id).constraint;
            head_marker = head_marker.join(c.marker);
            head_locs.extend(c.locs.iter().copied());
        }
        let body: Vec<Constraint> = rule
            .body
            .iter()
            .map(|b| {
                let mut c = inst.apply_constraint(b);
                c.marker = c.marker.join(head_marker);
                c.locs = head_locs.iter().copied().chain(b.locs.iter().copied()).collect();
                c
            })
            .collect();
        let mut consumed = Vec::new();
        if rule.kind == RuleKind::Simp {
            for id in &ids {
                self.store.entries[*id as usize].live = false;
            }
            consumed = ids.clone();
        } else {
            let mut key = ids.clone();
            key.sort_unstable();
            self.history.insert((ri, key));
        }
        let label = rule.name.clone();
        let mut produced = Vec::new();
        for c in body {
            let id = self.store.add(c.clone());
            produced.push((id, c));
        }
        let snapshot = self.store.snapshot_hash();
        self.trace.steps.push(TraceStep {
            kind: StepKind::Rule(ri),
            label,
            matched: ids,
            consumed,
            produced,
            snapshot,
        });
    }

    fn check_paranoid(&self) -> Result<(), DeriveError> {
        let mut full = Subst::new();
        for c in &self.store.eqs {
            if let ConstraintKind::Eq(a, b) = &c.kind {
                if full.unify(a, b).is_err() {
                    return if self.store.failure.is_some() {
                        Ok(())
                    } else {
                        Err(DeriveError::ParanoidMismatch(format!("`{c}` fails only on recomputation")))
                    };
                }
            }
        }
        if self.store.failure.is_some() {
            return Err(DeriveError::ParanoidMismatch("store flagged inconsistent but equations unify".into()));
        }
        let mut vars = BTreeSet::new();
        for c in &self.store.eqs {
            c.collect_vars(&mut vars);
        }
        for v in vars {
            let t = Type::var(v.clone());
            if full.apply(&t) != self.store.phi.apply(&t) {
                return Err(DeriveError::ParanoidMismatch(format!("binding of `{v}` differs")));
            }
        }
        Ok(())
    }

    /// Run to completion: no rule applies, the store is inconsistent, or
    /// fuel runs out.
    pub fn run(mut self) -> Result<Outcome, DeriveError> {
        loop {
            if self.store.is_consistent() {
                self.run_cycle_removal();
            }
            if self.opts.paranoid {
                self.check_paranoid()?;
            }
            if !self.store.is_consistent() {
                break;
            }
            let Some((ri, ids, theta)) = self.select() else { break };
            if self.steps >= self.opts.fuel {
                return Err(DeriveError::FuelExhausted(Box::new(Outcome {
                    store: self.store,
                    trace: self.trace,
                    steps: self.steps,
                })));
            }
            self.fire(ri, ids, theta);
            self.steps += 1;
        }
        Ok(Outcome { store: self.store, trace: self.trace, steps: self.steps })
    }
}

/// Derive from `initial`, whose fresh variables must come from `fresh`.
pub fn derive_with(
    initial: Vec<Constraint>,
    prog: &ChrProgram,
    opts: SolveOptions,
    fresh: Fresh,
) -> Result<Outcome, DeriveError> {
    let mut d = Derivation::new(prog, opts);
    d.fresh = fresh;
    d.add_initial(initial);
    d.run()
}

/// Derive from `initial`. Fresh names are chosen past any `#n` suffix
/// already present in the initial constraints.
pub fn derive(initial: Vec<Constraint>, prog: &ChrProgram, opts: SolveOptions) -> Result<Outcome, DeriveError> {
    let mut vars = BTreeSet::new();
    for c in &initial {
        c.collect_vars(&mut vars);
    }
    let max =
        vars.iter().filter_map(|v| v.rsplit_once('#').and_then(|(_, n)| n.parse::<u32>().ok())).max().unwrap_or(0);
    derive_with(initial, prog, opts, Fresh::starting_at(max))
}
