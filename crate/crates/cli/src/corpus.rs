//! Expectation corpora: every `NAME.ch` has a `NAME.expect` sidecar.
//!
//! Sidecar lines (blank lines and `#` comments are ignored):
//!
//! ```text
//! flags: --no-forced-calls
//! verdict: well-typed
//! scheme g: forall t. t -> (Bool, t)
//! annotation f: incorrect
//! witness f: Foo
//! warnings: not-fully-functional, overlapping-instances
//! error: unbound
//! ```
//!
//! `scheme` compares up to renaming, with constraints from the context
//! listed in the context of the scheme. `warnings: none` asserts that no
//! warnings are reported.

use std::io::Write;
use std::path::{Path, PathBuf};

use chm_core::check::{AnnotationVerdict, SchemeResult};
use chm_core::surface::parse_scheme;
use chm_core::types::TypeScheme;
use chm_core::Options;

use crate::report::{check_source, FileReport};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}: missing .expect sidecar")]
    MissingSidecar(PathBuf),
    #[error("{path}:{line}: {message}")]
    BadSidecar { path: PathBuf, line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Expectation {
    pub no_forced_calls: bool,
    pub verdict: Option<String>,
    pub schemes: Vec<(String, TypeScheme)>,
    pub annotations: Vec<(String, String)>,
    pub witnesses: Vec<(String, String)>,
    pub warnings: Option<Vec<String>>,
    pub errors: Vec<String>,
}

const VERDICTS: &[&str] = &["well-typed", "ill-typed", "unknown", "error"];
const ANNOTATIONS: &[&str] = &["correct", "incorrect", "unknown"];

/// Parse a sidecar. `path` is only used in error messages.
pub fn parse_expect(path: &Path, src: &str) -> Result<Expectation, CorpusError> {
    let mut e = Expectation::default();
    for (i, raw) in src.lines().enumerate() {
        let bad = |message: String| CorpusError::BadSidecar { path: path.to_owned(), line: i + 1, message };
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once(':') else {
            return Err(bad(format!("expected `key: value`, found `{line}`")));
        };
        let value = value.trim();
        let mut words = key.split_whitespace();
        let (k, name) = (words.next().unwrap_or(""), words.next());
        if words.next().is_some() {
            return Err(bad(format!("malformed key `{key}`")));
        }
        let named = |name: Option<&str>| name.map(str::to_string).ok_or_else(|| bad(format!("`{k}` needs a name")));
        match k {
            "flags" => {
                for f in value.split_whitespace() {
                    match f {
                        "--no-forced-calls" => e.no_forced_calls = true,
                        _ => return Err(bad(format!("unknown flag `{f}`"))),
                    }
                }
            }
            "verdict" => {
                if !VERDICTS.contains(&value) {
                    return Err(bad(format!("unknown verdict `{value}`")));
                }
                e.verdict = Some(value.to_string());
            }
            "scheme" => {
                let s = parse_scheme(value).map_err(|err| bad(format!("bad scheme: {err}")))?;
                e.schemes.push((named(name)?, s));
            }
            "annotation" => {
                if !ANNOTATIONS.contains(&value) {
                    return Err(bad(format!("unknown annotation verdict `{value}`")));
                }
                e.annotations.push((named(name)?, value.to_string()));
            }
            "witness" => e.witnesses.push((named(name)?, value.to_string())),
            "warnings" => {
                let codes = if value == "none" {
                    Vec::new()
                } else {
                    value.split(',').map(|w| w.trim().to_string()).filter(|w| !w.is_empty()).collect()
                };
                e.warnings = Some(codes);
            }
            "error" => e.errors.push(value.to_string()),
            _ => return Err(bad(format!("unknown key `{k}`"))),
        }
    }
    Ok(e)
}

fn same_scheme(expected: &TypeScheme, actual: &TypeScheme) -> bool {
    expected.quantified.len() == actual.quantified.len()
        && expected.context.len() == actual.context.len()
        && TypeScheme::closed(expected.context.clone(), expected.body.clone())
            .alpha_eq(&TypeScheme::closed(actual.context.clone(), actual.body.clone()))
}

/// Mismatches between a report and its expectation.
pub fn compare(e: &Expectation, r: &FileReport) -> Vec<String> {
    let mut out = Vec::new();
    if let Some(v) = &e.verdict {
        if v != r.verdict_str() {
            out.push(format!("verdict: expected {v}, got {}", r.verdict_str()));
        }
    }
    let verdict = match r {
        FileReport::Checked { verdict, .. } => Some(verdict),
        _ => None,
    };
    for needle in &e.errors {
        let found = match r {
            FileReport::Error { message, .. } => message.contains(needle.as_str()),
            FileReport::Checked { verdict, .. } => verdict.reasons.iter().any(|m| m.contains(needle.as_str())),
            FileReport::Io { .. } => false,
        };
        if !found {
            out.push(format!("no error mentions `{needle}`"));
        }
    }
    let Some(v) = verdict else {
        if !(e.schemes.is_empty() && e.annotations.is_empty() && e.witnesses.is_empty()) {
            out.push("expected definitions, but the file was not checked".to_string());
        }
        return out;
    };
    for (name, want) in &e.schemes {
        match v.definition(name).map(|d| &d.scheme) {
            None => out.push(format!("no definition `{name}`")),
            Some(SchemeResult::Ok(rep)) => {
                let mut got = rep.scheme.clone();
                got.context = rep.from_context.iter().chain(&rep.scheme.context).cloned().collect();
                if !same_scheme(want, &got) {
                    out.push(format!("scheme {name}: expected `{want}`, got `{got}`"));
                }
            }
            Some(_) => out.push(format!("scheme {name}: expected `{want}`, but it has none")),
        }
    }
    for (name, want) in &e.annotations {
        let got = v.definition(name).and_then(|d| d.annotation.as_ref()).map(|a| match a {
            AnnotationVerdict::Correct => "correct",
            AnnotationVerdict::Incorrect(_) => "incorrect",
            AnnotationVerdict::Unknown => "unknown",
        });
        if got != Some(want.as_str()) {
            out.push(format!("annotation {name}: expected {want}, got {}", got.unwrap_or("none")));
        }
    }
    for (name, needle) in &e.witnesses {
        match v.definition(name).and_then(|d| d.annotation.as_ref()) {
            Some(AnnotationVerdict::Incorrect(w)) if w.to_string().contains(needle.as_str()) => {}
            Some(AnnotationVerdict::Incorrect(w)) => out.push(format!("witness {name}: `{w}` lacks `{needle}`")),
            _ => out.push(format!("witness {name}: annotation is not incorrect")),
        }
    }
    if let Some(want) = &e.warnings {
        let mut got: Vec<&str> = v.warnings.iter().map(|w| w.code()).collect();
        got.sort_unstable();
        got.dedup();
        let mut want: Vec<&str> = want.iter().map(String::as_str).collect();
        want.sort_unstable();
        want.dedup();
        if got != want {
            out.push(format!("warnings: expected [{}], got [{}]", want.join(", "), got.join(", ")));
        }
    }
    out
}

#[derive(Debug)]
pub struct CaseResult {
    pub name: String,
    pub failures: Vec<String>,
}

/// Check every `.ch` file in `dir`, in file-name order.
pub fn run_corpus(dir: &Path, fuel: usize) -> Result<Vec<CaseResult>, CorpusError> {
    fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
        move |source| CorpusError::Io { path: path.to_owned(), source }
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "ch"))
        .collect();
    files.sort();
    let mut cases = Vec::new();
    for f in files {
        let sidecar = f.with_extension("expect");
        if !sidecar.exists() {
            return Err(CorpusError::MissingSidecar(f));
        }
        let e = parse_expect(&sidecar, &std::fs::read_to_string(&sidecar).map_err(io(&sidecar))?)?;
        let src = std::fs::read_to_string(&f).map_err(io(&f))?;
        let opts = Options { fuel, forced_calls: !e.no_forced_calls, ..Options::default() };
        let report = check_source(&f, &src, &opts);
        let name = f.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        cases.push(CaseResult { name, failures: compare(&e, &report) });
    }
    Ok(cases)
}

pub fn run_corpus_cmd(dir: &Path, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let fuel = std::env::var("CHM_FUEL").ok().and_then(|v| v.parse().ok()).filter(|n| *n > 0).unwrap_or(10_000);
    let cases = match run_corpus(dir, fuel) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "corpus error: {e}");
            return if matches!(e, CorpusError::Io { .. }) { crate::EXIT_IO } else { 1 };
        }
    };
    let mut failed = 0;
    for c in &cases {
        if c.failures.is_empty() {
            let _ = writeln!(out, "PASS {}", c.name);
        } else {
            failed += 1;
            let _ = writeln!(out, "FAIL {}", c.name);
            for f in &c.failures {
                let _ = writeln!(out, "     {f}");
            }
        }
    }
    let _ = writeln!(out, "{} passed, {failed} failed", cases.len() - failed);
    i32::from(failed > 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(src: &str) -> Result<Expectation, CorpusError> {
        parse_expect(Path::new("x.expect"), src)
    }

    #[test]
    fn full_sidecar() {
        let e = parse(
            "# comment\n\nflags: --no-forced-calls\nverdict: ill-typed\nscheme g: forall a. a -> a\n\
             annotation f: incorrect\nwitness f: Foo t_y\nwarnings: ambiguous, not-fully-functional\nerror: infinite type\n",
        )
        .unwrap();
        assert!(e.no_forced_calls);
        assert_eq!(e.verdict.as_deref(), Some("ill-typed"));
        assert_eq!(e.schemes[0].0, "g");
        assert_eq!(e.annotations, vec![("f".to_string(), "incorrect".to_string())]);
        assert_eq!(e.witnesses, vec![("f".to_string(), "Foo t_y".to_string())]);
        assert_eq!(e.warnings, Some(vec!["ambiguous".to_string(), "not-fully-functional".to_string()]));
        assert_eq!(e.errors, vec!["infinite type".to_string()]);
    }

    #[test]
    fn warnings_none_is_empty() {
        assert_eq!(parse("warnings: none").unwrap().warnings, Some(Vec::new()));
        assert_eq!(parse("verdict: unknown").unwrap().warnings, None);
    }

    #[test]
    fn errors_name_the_line() {
        for (src, line, needle) in [
            ("verdict: fine", 1, "unknown verdict"),
            ("verdict: well-typed\nno colon here", 2, "key: value"),
            ("\nscheme: Int", 2, "needs a name"),
            ("scheme g: Int ->", 1, "bad scheme"),
            ("flags: --fast", 1, "unknown flag"),
            ("annotation f: maybe", 1, "unknown annotation"),
            ("colour: red", 1, "unknown key"),
            ("scheme f g: Int", 1, "malformed key"),
        ] {
            match parse(src) {
                Err(CorpusError::BadSidecar { line: l, message, .. }) => {
                    assert_eq!(l, line, "{src}");
                    assert!(message.contains(needle), "{src}: {message}");
                }
                other => panic!("{src}: {other:?}"),
            }
        }
    }
}
