//! Random source programs.

use rand::seq::SliceRandom;
use rand::Rng;

#[derive(Debug, Clone, Copy)]
pub struct GenConfig {
    pub classes: bool,
    pub annotations: bool,
    pub recursion: bool,
    pub max_defs: usize,
    pub max_depth: u32,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig { classes: false, annotations: false, recursion: true, max_defs: 3, max_depth: 4 }
    }
}

pub const CLASSES: &str = "class C a where { m :: a -> Int }
class C a => D a where { n :: a -> a }
instance C Int
instance C Bool
instance C a => C [a]
instance D Int
";

const PRIMS: &[&str] = &["not", "id", "const", "fst", "snd", "ite", "(+)", "(&&)"];
const ANNOTATIONS: &[&str] =
    &["Int", "Bool", "a -> a", "Int -> Int", "a -> Bool", "(a, b) -> a", "a", "Bool -> Int", "a -> b -> a"];
const CLASS_ANNOTATIONS: &[&str] = &["C a => a -> Int", "D a => a -> a", "C a => [a] -> Int"];

struct Gen<'r, R: Rng> {
    rng: &'r mut R,
    cfg: GenConfig,
    counter: usize,
    /// Definitions whose right-hand side is being generated.
    defining: Vec<String>,
}

impl<R: Rng> Gen<'_, R> {
    fn fresh(&mut self, base: &str) -> String {
        self.counter += 1;
        format!("{base}{}", self.counter)
    }

    fn annotation(&mut self) -> &'static str {
        if self.cfg.classes && self.rng.gen_bool(0.3) {
            CLASS_ANNOTATIONS.choose(self.rng).unwrap()
        } else {
            ANNOTATIONS.choose(self.rng).unwrap()
        }
    }

    fn atom(&mut self, scope: &[String]) -> String {
        match self.rng.gen_range(0..10) {
            0 => "1".into(),
            1 => "True".into(),
            2 => "'c'".into(),
            3 if self.cfg.classes => ["m", "n"].choose(self.rng).unwrap().to_string(),
            4 | 5 => PRIMS.choose(self.rng).unwrap().to_string(),
            _ => scope.choose(self.rng).cloned().unwrap_or_else(|| "id".into()),
        }
    }

    fn expr(&mut self, depth: u32, scope: &[String]) -> String {
        if depth == 0 || self.rng.gen_bool(0.25) {
            return self.atom(scope);
        }
        match self.rng.gen_range(0..9) {
            0..=2 => {
                let f = self.expr(depth - 1, scope);
                let a = self.expr(depth - 1, scope);
                format!("({f} {a})")
            }
            3 => {
                let a = self.expr(depth - 1, scope);
                let b = self.expr(depth - 1, scope);
                format!("({a}, {b})")
            }
            4 => {
                let a = self.expr(depth - 1, scope);
                format!("[{a}]")
            }
            5 => {
                let x = self.fresh("y");
                let mut inner = scope.to_vec();
                inner.push(x.clone());
                let body = self.expr(depth - 1, &inner);
                format!("(\\{x} -> {body})")
            }
            _ => self.let_expr(depth, scope),
        }
    }

    fn binding(&mut self, name: &str, depth: u32, scope: &[String], sep: &str) -> String {
        let nparams = self.rng.gen_range(0..=2);
        let params: Vec<String> = (0..nparams).map(|_| self.fresh("x")).collect();
        let mut inner = scope.to_vec();
        inner.extend(params.iter().cloned());
        if self.cfg.recursion && self.rng.gen_bool(0.3) {
            inner.push(name.to_string());
        }
        self.defining.push(name.to_string());
        let rhs = self.expr(depth, &inner);
        self.defining.pop();
        let lhs = if params.is_empty() { name.to_string() } else { format!("{name} {}", params.join(" ")) };
        if self.cfg.annotations && self.rng.gen_bool(0.35) {
            format!("{name} :: {}{sep}{lhs} = {rhs}", self.annotation())
        } else {
            format!("{lhs} = {rhs}")
        }
    }

    fn let_expr(&mut self, depth: u32, scope: &[String]) -> String {
        let g = self.fresh("g");
        // A nested definition that calls an enclosing one would form a
        // mutually recursive group.
        let visible: Vec<String> = scope.iter().filter(|v| !self.defining.contains(v)).cloned().collect();
        let b = self.binding(&g, depth - 1, &visible, "; ");
        let mut inner = scope.to_vec();
        inner.push(g);
        let body = self.expr(depth - 1, &inner);
        format!("(let {{ {b} }} in {body})")
    }
}

/// A program of a few top-level definitions. Definitions only call earlier
/// ones (and possibly themselves), so there is never mutual recursion.
pub fn program<R: Rng>(rng: &mut R, cfg: GenConfig) -> String {
    let mut g = Gen { rng, cfg, counter: 0, defining: Vec::new() };
    let mut out = String::new();
    if cfg.classes {
        out.push_str(CLASSES);
    }
    let n = g.rng.gen_range(1..=cfg.max_defs);
    let mut tops: Vec<String> = Vec::new();
    for i in 0..n {
        let name = format!("f{i}");
        let depth = g.rng.gen_range(1..=cfg.max_depth);
        let b = g.binding(&name, depth, &tops, "\n");
        out.push_str(&b);
        out.push('\n');
        tops.push(name);
    }
    out
}
