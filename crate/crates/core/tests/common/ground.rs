//! Ground solution sets of a store over a three-type universe, computed with
//! the oracle's own unifier and a direct reading of the instance
//! declarations.

use std::collections::{BTreeSet, HashMap};

use chm_core::solver::Store;
use chm_core::surface::Program;
use chm_core::types::{ConstraintKind, Pred, Type};

use super::w::{from_type, Unifier, T};

pub const UNIVERSE: [&str; 3] = ["Int", "Bool", "Char"];

/// Assignments beyond this many variables are not enumerated.
pub const MAX_VARS: usize = 6;

#[derive(Debug, Clone)]
struct Instance {
    context: Vec<(String, Vec<T>)>,
    class: String,
    head: Vec<T>,
}

/// Instance declarations read as Horn clauses over ground types.
#[derive(Debug, Clone, Default)]
pub struct Theory {
    instances: Vec<Instance>,
}

impl Theory {
    pub fn from_program(p: &Program) -> Theory {
        let instances = p
            .instances
            .iter()
            .map(|i| {
                let mut names = HashMap::new();
                let mut u = Unifier::default();
                let head = i.types.iter().map(|t| from_type(t, &mut names, &mut u)).collect();
                let context = i
                    .context
                    .iter()
                    .map(|a| {
                        let Pred::Class(c) = &a.pred else { panic!("instance context must be a class") };
                        (c.clone(), a.args.iter().map(|t| from_type(t, &mut names, &mut u)).collect())
                    })
                    .collect();
                Instance { context, class: i.class.clone(), head }
            })
            .collect();
        Theory { instances }
    }

    pub fn holds(&self, class: &str, args: &[T]) -> bool {
        self.instances.iter().filter(|i| i.class == class).any(|i| {
            let mut sigma = HashMap::new();
            i.head.iter().zip(args).all(|(p, t)| matches(p, t, &mut sigma))
                && i.context.iter().all(|(c, xs)| {
                    let xs: Vec<T> = xs.iter().map(|x| subst(x, &sigma)).collect();
                    self.holds(c, &xs)
                })
        })
    }
}

fn matches(p: &T, t: &T, sigma: &mut HashMap<u32, T>) -> bool {
    match (p, t) {
        (T::V(v), _) => match sigma.get(v) {
            Some(s) => s == t,
            None => {
                sigma.insert(*v, t.clone());
                true
            }
        },
        (T::C(c, xs), T::C(d, ys)) => {
            c == d && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| matches(x, y, sigma))
        }
        _ => false,
    }
}

fn subst(t: &T, sigma: &HashMap<u32, T>) -> T {
    match t {
        T::V(v) => sigma.get(v).cloned().unwrap_or(T::V(*v)),
        T::C(c, xs) => T::C(c.clone(), xs.iter().map(|x| subst(x, sigma)).collect()),
    }
}

fn vars(t: &T, out: &mut BTreeSet<u32>) {
    match t {
        T::V(v) => {
            out.insert(*v);
        }
        T::C(_, xs) => xs.iter().for_each(|x| vars(x, out)),
    }
}

/// What to do with function-symbol constraints left in a store.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pending {
    /// Treat them as true. The result over-approximates the store.
    Drop,
    /// Refuse to judge the store.
    Reject,
}

/// A store solved by the oracle's unifier: the projection under the most
/// general unifier, and the remaining class constraints.
/// Variables of a set of class constraints, and the constraints.
type Group<'a> = (BTreeSet<u32>, Vec<(&'a str, Vec<T>)>);

#[derive(Debug, Clone)]
pub struct Solved {
    /// `None` when the equations have no unifier.
    proj: Option<T>,
    classes: Vec<(String, Vec<T>)>,
}

const NIL: &str = "⟦⟧";
const CONS: &str = "⟦:⟧";

fn tails(t: &T, out: &mut BTreeSet<u32>) {
    if let T::C(c, xs) = t {
        if c == CONS {
            if let T::V(v) = &xs[1] {
                out.insert(*v);
            }
        }
        xs.iter().for_each(|x| tails(x, out));
    }
}

pub fn solve(store: &Store, projection: &Type, pending: Pending) -> Option<Solved> {
    let mut names = HashMap::new();
    let mut u = Unifier::default();
    let proj = from_type(projection, &mut names, &mut u);
    let mut eqs = Vec::new();
    let mut classes = Vec::new();
    let mut refuse = false;
    for c in store.constraints() {
        match &c.kind {
            ConstraintKind::Eq(a, b) => eqs.push((from_type(a, &mut names, &mut u), from_type(b, &mut names, &mut u))),
            ConstraintKind::User(a) => match &a.pred {
                Pred::Class(name) => classes
                    .push((name.clone(), a.args.iter().map(|t| from_type(t, &mut names, &mut u)).collect::<Vec<_>>())),
                _ => refuse |= pending == Pending::Reject,
            },
        }
    }
    for (a, b) in &eqs {
        if u.unify(a, b).is_err() {
            return Some(Solved { proj: None, classes: Vec::new() });
        }
    }
    if refuse {
        return None;
    }
    let classes = classes.into_iter().map(|(c, xs)| (c, xs.iter().map(|x| u.resolve(x)).collect())).collect();
    Some(Solved { proj: Some(u.resolve(&proj)), classes })
}

impl Solved {
    pub fn is_satisfiable(&self) -> bool {
        self.proj.is_some()
    }

    fn tail_vars(&self) -> BTreeSet<u32> {
        let mut out = BTreeSet::new();
        if let Some(p) = &self.proj {
            tails(p, &mut out);
        }
        for (_, xs) in &self.classes {
            xs.iter().for_each(|x| tails(x, &mut out));
        }
        out
    }

    /// Whether some assignment of the remaining variables, extending
    /// `sigma`, satisfies every class constraint. Constraints sharing no
    /// variable are solved separately. `None` when a group has too many
    /// variables to enumerate.
    fn classes_hold(&self, sigma: &HashMap<u32, T>, theory: &Theory) -> Option<bool> {
        let tail = self.tail_vars();
        let mut groups: Vec<Group> = Vec::new();
        for (c, xs) in &self.classes {
            let xs: Vec<T> = xs.iter().map(|x| subst(x, sigma)).collect();
            let mut vs = BTreeSet::new();
            xs.iter().for_each(|x| vars(x, &mut vs));
            let mut group = (vs, vec![(c.as_str(), xs)]);
            groups.retain(|(gv, members)| {
                if gv.is_disjoint(&group.0) {
                    return true;
                }
                group.0.extend(gv.iter().copied());
                group.1.extend(members.iter().cloned());
                false
            });
            groups.push(group);
        }
        for (vs, members) in groups {
            if vs.len() > MAX_VARS {
                return None;
            }
            let vs: Vec<u32> = vs.into_iter().collect();
            let found = assignments(&vs, &tail).any(|rest| {
                members.iter().all(|(c, xs)| {
                    let xs: Vec<T> = xs.iter().map(|x| subst(x, &rest)).collect();
                    theory.holds(c, &xs)
                })
            });
            if !found {
                return Some(false);
            }
        }
        Some(true)
    }

    /// Ground instances of the projection with variables drawn from the
    /// universe. `None` when there are too many variables.
    pub fn instances(&self, theory: &Theory) -> Option<BTreeSet<T>> {
        let Some(proj) = &self.proj else { return Some(BTreeSet::new()) };
        let mut shown = BTreeSet::new();
        vars(proj, &mut shown);
        let shown: Vec<u32> = shown.into_iter().collect();
        if shown.len() > MAX_VARS {
            return None;
        }
        let tail = self.tail_vars();
        let mut out = BTreeSet::new();
        for sigma in assignments(&shown, &tail) {
            if self.classes_hold(&sigma, theory)? {
                out.insert(subst(proj, &sigma));
            }
        }
        Some(out)
    }

    /// Whether the ground term `g` is a solution.
    pub fn admits(&self, g: &T, theory: &Theory) -> Option<bool> {
        let Some(proj) = &self.proj else { return Some(false) };
        let mut sigma = HashMap::new();
        if !matches(proj, g, &mut sigma) {
            return Some(false);
        }
        self.classes_hold(&sigma, theory)
    }
}

/// Every universe instance of `a` is a solution of `b`. Returns the first
/// counterexample, or `None` when the sets are too large to enumerate.
pub fn implies(a: &Solved, b: &Solved, theory: &Theory) -> Option<Result<usize, T>> {
    let inst = a.instances(theory)?;
    for g in &inst {
        if !b.admits(g, theory)? {
            return Some(Err(g.clone()));
        }
    }
    Some(Ok(inst.len()))
}

/// Every map from `vars` into the universe. Variables in `tail` stand for
/// list tails and range over short closed lists instead.
fn assignments<'a>(vars: &'a [u32], tail: &'a BTreeSet<u32>) -> impl Iterator<Item = HashMap<u32, T>> + 'a {
    let ground = |name: &str| T::C(name.into(), vec![]);
    let base: Vec<T> = UNIVERSE.iter().map(|n| ground(n)).collect();
    let lists = vec![ground(NIL), T::C(CONS.into(), vec![ground("Int"), ground(NIL)])];
    let choices: Vec<Vec<T>> =
        vars.iter().map(|v| if tail.contains(v) { lists.clone() } else { base.clone() }).collect();
    let total: usize = choices.iter().map(Vec::len).product();
    (0..total).map(move |mut n| {
        vars.iter()
            .zip(&choices)
            .map(|(v, cs)| {
                let t = cs[n % cs.len()].clone();
                n /= cs.len();
                (*v, t)
            })
            .collect()
    })
}
