//! Checks shared by the property tests and the acceptance run.

use std::collections::BTreeMap;

use chm_core::lint::{lint_theory, Warning};
use chm_core::parse;
use chm_core::solver::{derive, SolveOptions, StepKind};
use chm_core::types::Type;
use chm_core::unify::Subst;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::gen::{program, GenConfig};
use super::ground::{implies, solve, Pending, Solved, Theory};
use super::{check_history, check_markers, corpus_problems, outcome, theory, Problem};

// Unification

pub const VARS: [&str; 3] = ["a", "b", "c"];
pub const TAIL: &str = "r";

pub fn ty() -> impl Strategy<Value = Type> {
    let leaf =
        prop_oneof![Just(Type::con("Int")), Just(Type::con("Bool")), (0..VARS.len()).prop_map(|i| Type::var(VARS[i])),];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Type::arrow(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Type::tuple(vec![a, b])),
            inner.clone().prop_map(|a| Type::app(Type::con("[]"), a)),
            (proptest::collection::vec(inner, 0..3), any::<bool>())
                .prop_map(|(xs, open)| Type::list(xs, open.then(|| Type::var(TAIL)))),
        ]
    })
}

fn ground_types() -> Vec<Type> {
    let int = Type::con("Int");
    let boolean = Type::con("Bool");
    vec![int.clone(), boolean.clone(), Type::app(Type::con("[]"), int.clone()), Type::arrow(boolean, int)]
}

fn ground_tails() -> Vec<Type> {
    vec![Type::closed_list(vec![]), Type::closed_list(vec![Type::con("Int"), Type::con("Bool")])]
}

/// Substitution applied by hand, with list tails flattened.
fn apply(t: &Type, m: &BTreeMap<&str, Type>) -> Type {
    match t {
        Type::Var(v) => m.get(v.as_str()).cloned().unwrap_or_else(|| t.clone()),
        Type::Con(_) => t.clone(),
        Type::App(f, a) => Type::app(apply(f, m), apply(a, m)),
        Type::List(xs, tail) => {
            let items: Vec<Type> = xs.iter().map(|x| apply(x, m)).collect();
            match tail.as_deref().map(|x| apply(x, m)) {
                None => Type::List(items, None),
                Some(Type::List(more, rest)) => {
                    let mut all = items;
                    all.extend(more);
                    Type::List(all, rest)
                }
                Some(other) if items.is_empty() => other,
                Some(other) => Type::List(items, Some(Box::new(other))),
            }
        }
    }
}

fn assignments() -> Vec<BTreeMap<&'static str, Type>> {
    let mut out = Vec::new();
    for a in ground_types() {
        for b in ground_types() {
            for c in ground_types() {
                for r in ground_tails() {
                    out.push(BTreeMap::from([("a", a.clone()), ("b", b.clone()), ("c", c.clone()), (TAIL, r)]));
                }
            }
        }
    }
    out
}

/// Soundness and generality of `mgu(s, t)` against every ground assignment.
pub fn mgu_case(s: &Type, t: &Type) -> Result<(), String> {
    let mut sigma = Subst::new();
    let unified = sigma.unify(s, t);
    if unified.is_ok() && sigma.apply(s) != sigma.apply(t) {
        return Err(format!("{s} and {t} differ after unification"));
    }
    let images: Vec<(&str, Type)> = VARS.iter().chain([&TAIL]).map(|v| (*v, sigma.apply(&Type::var(*v)))).collect();
    for theta in assignments() {
        let solves = apply(s, &theta) == apply(t, &theta);
        match &unified {
            Err(e) if solves => return Err(format!("{s} and {t} have a ground unifier but mgu failed: {e}")),
            Err(_) => {}
            Ok(()) => {
                // theta unifies exactly when it factors through sigma.
                let factors = images.iter().all(|(v, image)| apply(image, &theta) == theta[v]);
                if solves != factors {
                    return Err(format!("{s} = {t} under {theta:?}: solves {solves}, factors {factors}"));
                }
            }
        }
    }
    Ok(())
}

// Derivation invariants

/// Markers, rule history and replay on every corpus derivation. Returns the
/// number of traces checked.
pub fn corpus_traces() -> Result<usize, String> {
    let mut checked = 0;
    for forced in [true, false] {
        for (file, rules, problems) in corpus_problems(forced) {
            for (name, problem) in problems {
                let (out, _) = outcome(problem.derive(&rules, SolveOptions::default()));
                check_markers(&out.trace, &rules).map_err(|e| format!("{file} {name}: {e}"))?;
                check_history(&out.trace, &rules).map_err(|e| format!("{file} {name}: {e}"))?;
                if out.trace.replay().constraints() != out.store.constraints() {
                    return Err(format!("{file} {name}: replay differs"));
                }
                checked += 1;
            }
        }
    }
    Ok(checked)
}

pub fn class_programs(seed: u64, n: usize, recursion: bool) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = GenConfig { classes: true, annotations: true, recursion, max_defs: 3, max_depth: 4 };
    (0..n).map(|_| program(&mut rng, cfg)).collect()
}

/// Reruns every terminating derivation of `src` with more and less fuel.
/// Returns the number of derivations checked.
pub fn fuel_monotonicity(src: &str) -> Result<usize, String> {
    let p = parse(src).map_err(|e| e.to_string())?;
    let rules = theory(&p, true);
    let mut runs = 0;
    for def in &rules.defs {
        let problem = Problem::new(def);
        let Ok(base) = problem.derive(&rules, SolveOptions::default()) else { continue };
        let n = base.steps;
        for fuel in [n, n + 1, 2 * n + 3, 50_000] {
            let opts = SolveOptions { fuel, ..SolveOptions::default() };
            let out = problem.derive(&rules, opts).map_err(|e| format!("{}: fuel {fuel}: {e}", def.display))?;
            if out.store.constraints() != base.store.constraints()
                || out.store.failure != base.store.failure
                || out.trace != base.trace
            {
                return Err(format!("{}: fuel {fuel} changes the result", def.display));
            }
        }
        if n > 0 {
            let opts = SolveOptions { fuel: n - 1, ..SolveOptions::default() };
            if problem.derive(&rules, opts).is_ok() {
                return Err(format!("{}: fuel {} suffices", def.display, n - 1));
            }
        }
        runs += 1;
    }
    Ok(runs)
}

// Cycle removal, checked on ground solutions

#[derive(Debug, Default)]
pub struct Tally {
    pub reexpanded: usize,
    pub implication: usize,
    pub skipped: usize,
    pub unknown: usize,
    pub pending: usize,
    pub satisfiable: usize,
}

const BOUNDED: usize = 80;

pub fn cycle_removal(src: &str, tally: &mut Tally) -> Result<(), String> {
    let p = parse(src).map_err(|e| e.to_string())?;
    let rules = theory(&p, true);
    let warnings = lint_theory(&rules, &p);
    if let Some(w) = warnings.iter().find(|w| matches!(w, Warning::NotRangeRestricted { .. })) {
        return Err(format!("theory is not range-restricted: {w}"));
    }
    let classes = Theory::from_program(&p);
    let holds = |a: &Solved, b: &Solved, what: &str| -> Result<bool, String> {
        match implies(a, b, &classes) {
            None => Ok(false),
            Some(Ok(_)) => Ok(true),
            Some(Err(g)) => Err(format!("{what}: counterexample {g:?}")),
        }
    };
    for def in &rules.defs {
        let problem = Problem::new(def);
        let proj = problem.projection();
        let name = &def.display;
        let Ok(on) = problem.derive(&rules, SolveOptions::default()) else {
            tally.unknown += 1;
            continue;
        };
        let Some(sol_on) = solve(&on.store, &proj, Pending::Reject) else {
            tally.pending += 1;
            continue;
        };
        if sol_on.is_satisfiable() {
            tally.satisfiable += 1;
        }
        // Mono and the MRF clause of CCR add equations, and are only
        // claimed to strengthen the initial constraint.
        let exact = on.trace.steps.iter().all(|s| match s.kind {
            StepKind::Rule(_) => true,
            StepKind::Ccr => s.produced.is_empty(),
            StepKind::Mono => false,
        });

        let plain = SolveOptions { ccr: false, mono: false, fuel: BOUNDED, ..SolveOptions::default() };
        let (off, finished) = outcome(problem.derive(&rules, plain));
        let sol_off = solve(&off.store, &proj, Pending::Drop).expect("dropping never refuses");
        if holds(&sol_on, &sol_off, &format!("{name}: final store does not imply the initial one"))? {
            tally.implication += 1;
        } else {
            tally.skipped += 1;
        }
        if finished && exact {
            if let Some(exact_off) = solve(&off.store, &proj, Pending::Reject) {
                holds(&exact_off, &sol_on, &format!("{name}: derivation without cycle removal has more solutions"))?;
            }
        }

        let removed: Vec<_> = on
            .trace
            .steps
            .iter()
            .filter(|s| s.kind == StepKind::Ccr)
            .flat_map(|s| s.consumed.iter().map(|id| on.store.entry(*id).constraint.clone()))
            .collect();
        if exact && !removed.is_empty() {
            let mut again = on.store.constraints();
            again.extend(removed);
            let opts = SolveOptions { ccr: false, fuel: BOUNDED, ..SolveOptions::default() };
            let (more, _) = outcome(derive(again, &rules, opts));
            let sol_more = solve(&more.store, &proj, Pending::Drop).expect("dropping never refuses");
            let forward = holds(&sol_on, &sol_more, &format!("{name}: expanding the removed calls loses solutions"))?;
            holds(&sol_more, &sol_on, &format!("{name}: expanding the removed calls adds solutions"))?;
            if forward {
                tally.reexpanded += 1;
            } else {
                tally.skipped += 1;
            }
        }
    }
    Ok(())
}

/// Cycle removal on 200 generated class theories, half of them recursive.
pub fn cycle_removal_suite() -> Result<Tally, String> {
    let mut tally = Tally::default();
    for (i, src) in class_programs(23, 100, false).into_iter().chain(class_programs(29, 100, true)).enumerate() {
        cycle_removal(&src, &mut tally).map_err(|e| format!("theory {i}: {e}\n{src}"))?;
    }
    if tally.implication < 200 || tally.satisfiable < 100 || tally.reexpanded < 50 {
        return Err(format!("too few conclusive checks: {tally:?}"));
    }
    Ok(tally)
}

/// Fuel monotonicity on 100 generated class theories.
pub fn fuel_suite() -> Result<usize, String> {
    let mut runs = 0;
    for src in class_programs(11, 100, true) {
        runs += fuel_monotonicity(&src).map_err(|e| format!("{e}\n{src}"))?;
    }
    if runs < 100 {
        return Err(format!("only {runs} terminating derivations"));
    }
    Ok(runs)
}
