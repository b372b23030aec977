#![allow(dead_code)]

pub mod checks;
pub mod gen;
pub mod ground;
pub mod w;

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use chm_core::check::Goal;
use chm_core::solver::{derive_with, DeriveError, Outcome, SolveOptions, StepKind, StoreId, Trace};
use chm_core::surface::{classify_definitions, parse, Program};
use chm_core::translate::{translate_program, ChrProgram, DefInfo};
use chm_core::types::{Constraint, Fresh, Loc, Marker, Pred, Type};

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

/// Every `.ch` file in the corpus, sorted by name.
pub fn corpus() -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = std::fs::read_dir(corpus_dir())
        .expect("corpus directory")
        .filter_map(|e| {
            let p = e.ok()?.path();
            (p.extension()? == "ch").then(|| {
                let name = p.file_stem().unwrap().to_string_lossy().into_owned();
                (name, std::fs::read_to_string(&p).expect("readable corpus file"))
            })
        })
        .collect();
    out.sort();
    out
}

pub fn corpus_file(name: &str) -> String {
    std::fs::read_to_string(corpus_dir().join(format!("{name}.ch"))).expect("corpus file")
}

pub fn theory(p: &Program, forced_calls: bool) -> ChrProgram {
    let classes = classify_definitions(p).expect("no mutual recursion");
    translate_program(p, &classes, forced_calls)
}

/// The derivation problem `g(t, l)` of one definition.
pub struct Problem {
    pub goal: Goal,
    pub initial: Vec<Constraint>,
    fresh: Fresh,
}

impl Problem {
    pub fn new(def: &DefInfo) -> Problem {
        let mut fresh = Fresh::new();
        let goal = Goal::new(&mut fresh);
        let initial = goal.constraints(Pred::Def(def.name.clone()), Loc(def.id.0));
        Problem { goal, initial, fresh }
    }

    pub fn derive(&self, rules: &ChrProgram, opts: SolveOptions) -> Result<Outcome, DeriveError> {
        derive_with(self.initial.clone(), rules, opts, self.fresh.clone())
    }

    /// `(t, ll)`: the variables a definition's type depends on, without the
    /// program-wide binder list.
    pub fn projection(&self) -> Type {
        Type::tuple(vec![Type::var(&self.goal.t), Type::var(&self.goal.ll)])
    }
}

/// Final store, or the store reached when fuel ran out.
pub fn outcome(r: Result<Outcome, DeriveError>) -> (Outcome, bool) {
    match r {
        Ok(o) => (o, true),
        Err(DeriveError::FuelExhausted(o)) => (*o, false),
        Err(e) => panic!("{e}"),
    }
}

fn marker_of(c: &Constraint) -> bool {
    c.marker == Marker::Marked
}

/// Each produced constraint is marked exactly when a matched constraint is
/// marked or the rule body constraint it instantiates is marked.
pub fn check_markers(trace: &Trace, rules: &ChrProgram) -> Result<(), String> {
    let mut known: BTreeMap<StoreId, Constraint> = BTreeMap::new();
    for (id, c) in &trace.initial {
        if let Some(id) = id {
            known.insert(*id, c.clone());
        }
    }
    for (n, step) in trace.steps.iter().enumerate() {
        let head = step
            .matched
            .iter()
            .map(|id| known.get(id).map(marker_of).ok_or(format!("step {n} matches unknown id {id}")))
            .collect::<Result<Vec<bool>, String>>()?
            .into_iter()
            .any(|m| m);
        match step.kind {
            StepKind::Rule(ri) => {
                let body = &rules.rules[ri].body;
                if body.len() != step.produced.len() {
                    return Err(format!(
                        "step {n} ({}) produced {} constraints for a body of {}",
                        step.label,
                        step.produced.len(),
                        body.len()
                    ));
                }
                for ((_, c), b) in step.produced.iter().zip(body) {
                    if marker_of(c) != (head || marker_of(b)) {
                        return Err(format!("step {n} ({}): `{c}` has the wrong marker", step.label));
                    }
                }
            }
            StepKind::Ccr | StepKind::Mono => {
                for (_, c) in &step.produced {
                    if marker_of(c) != head {
                        return Err(format!("step {n} ({}): `{c}` has the wrong marker", step.label));
                    }
                }
            }
        }
        for (id, c) in &step.produced {
            if let Some(id) = id {
                known.insert(*id, c.clone());
            }
        }
    }
    Ok(())
}

/// No propagation rule fires twice on the same constraints.
pub fn check_history(trace: &Trace, rules: &ChrProgram) -> Result<(), String> {
    let mut seen = BTreeSet::new();
    for step in &trace.steps {
        if let StepKind::Rule(ri) = step.kind {
            if rules.rules[ri].kind != chm_core::translate::RuleKind::Prop {
                continue;
            }
            let mut key = step.matched.clone();
            key.sort_unstable();
            if !seen.insert((ri, key.clone())) {
                return Err(format!("{} fired twice on {key:?}", step.label));
            }
        }
    }
    Ok(())
}

/// File name, theory, and the problem of each definition by display name.
pub type CorpusProblems = (String, ChrProgram, Vec<(String, Problem)>);

/// Derivation problems of every definition in every corpus program, with
/// the program's theory.
pub fn corpus_problems(forced_calls: bool) -> Vec<CorpusProblems> {
    corpus()
        .into_iter()
        .filter_map(|(name, src)| {
            let p = parse(&src).ok()?;
            let classes = classify_definitions(&p).ok()?;
            let rules = translate_program(&p, &classes, forced_calls);
            let problems = rules.defs.iter().map(|d| (d.display.clone(), Problem::new(d))).collect();
            Some((name, rules, problems))
        })
        .collect()
}
