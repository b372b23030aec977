//! Per-file reports in human and JSON form.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chm_core::check::{AnnotationVerdict, CheckError, DefVerdict, SchemeResult};
use chm_core::lint::Warning;
use chm_core::surface::{ClassifyError, Span};
use chm_core::{Options, Verdict};
use serde_json::{json, Value};

#[derive(Debug)]
pub enum FileReport {
    Io { path: PathBuf, message: String },
    Error { path: PathBuf, message: String, span: Option<Span>, code: i32 },
    Checked { path: PathBuf, verdict: Box<Verdict> },
}

pub fn check_file(path: &Path, opts: &Options) -> FileReport {
    match std::fs::read_to_string(path) {
        Ok(src) => check_source(path, &src, opts),
        Err(e) => FileReport::Io { path: path.to_owned(), message: format!("{}: {e}", path.display()) },
    }
}

pub fn check_source(path: &Path, src: &str, opts: &Options) -> FileReport {
    let path = path.to_owned();
    let program = match chm_core::parse(src) {
        Ok(p) => p,
        Err(e) => return FileReport::Error { path, message: e.message, span: Some(e.span), code: 1 },
    };
    match chm_core::infer_program(&program, opts) {
        Ok(v) => FileReport::Checked { path, verdict: Box::new(v) },
        Err(CheckError::Classify(e)) => {
            let (message, span) = match &e {
                ClassifyError::UnboundVariable(v, s) => (format!("unbound variable `{v}`"), *s),
                ClassifyError::MutualRecursion(names, s) => (
                    format!("mutually recursive definitions {names} need a type annotation on at least one member"),
                    *s,
                ),
            };
            FileReport::Error { path, message, span: Some(span), code: 1 }
        }
        Err(e @ CheckError::Paranoid(_)) => FileReport::Error { path, message: e.to_string(), span: None, code: 2 },
    }
}

fn span_json(s: &Span) -> Value {
    json!({ "line": s.line, "col": s.col, "end_line": s.end_line, "end_col": s.end_col })
}

pub fn scheme_string(d: &DefVerdict) -> Option<String> {
    match &d.scheme {
        SchemeResult::Ok(r) => Some(r.scheme.to_string()),
        _ => None,
    }
}

fn annotation_str(a: &AnnotationVerdict) -> &'static str {
    match a {
        AnnotationVerdict::Correct => "correct",
        AnnotationVerdict::Incorrect(_) => "incorrect",
        AnnotationVerdict::Unknown => "unknown",
    }
}

fn warning_json(w: &Warning) -> Value {
    json!({ "code": w.code(), "message": w.to_string(), "span": w.span().as_ref().map(span_json) })
}

/// Depth of nesting of a definition, for indentation.
fn depth(v: &Verdict, name: &str) -> usize {
    let mut d = 0;
    let mut cur = v.rules.def(name).and_then(|i| i.parent.clone());
    while let Some(p) = cur {
        d += 1;
        cur = v.rules.def(&p).and_then(|i| i.parent.clone());
    }
    d
}

impl FileReport {
    pub fn path(&self) -> &Path {
        match self {
            FileReport::Io { path, .. } | FileReport::Error { path, .. } | FileReport::Checked { path, .. } => path,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            FileReport::Io { .. } => crate::EXIT_IO,
            FileReport::Error { code, .. } => *code,
            FileReport::Checked { verdict, .. } => verdict.program.exit_code(),
        }
    }

    pub fn verdict_str(&self) -> &'static str {
        match self {
            FileReport::Io { .. } => "io-error",
            FileReport::Error { code: 2, .. } => "unknown",
            FileReport::Error { .. } => "error",
            FileReport::Checked { verdict, .. } => match verdict.program {
                chm_core::check::ProgramVerdict::WellTyped => "well-typed",
                chm_core::check::ProgramVerdict::IllTyped => "ill-typed",
                chm_core::check::ProgramVerdict::Unknown => "unknown",
            },
        }
    }

    pub fn render(&self, dump_chrs: bool, trace: bool) -> String {
        let mut s = String::new();
        let path = self.path().display();
        match self {
            FileReport::Io { message, .. } => {
                let _ = writeln!(s, "{message}");
            }
            FileReport::Error { message, span, .. } => match span {
                Some(sp) => {
                    let _ = writeln!(s, "{path}:{sp}: error: {message}");
                }
                None => {
                    let _ = writeln!(s, "{path}: error: {message}");
                }
            },
            FileReport::Checked { verdict: v, .. } => {
                let _ = writeln!(s, "{path}: {}", v.program);
                if dump_chrs {
                    for line in v.rules.dump().lines() {
                        let _ = writeln!(s, "  {line}");
                    }
                }
                for d in &v.definitions {
                    let indent = "  ".repeat(depth(v, &d.name) + 1);
                    let ty = match &d.scheme {
                        SchemeResult::Ok(r) => r.scheme.to_string(),
                        SchemeResult::Unsatisfiable(_) => "<ill-typed>".to_string(),
                        SchemeResult::Unknown => "<unknown>".to_string(),
                    };
                    let _ = write!(s, "{indent}{} :: {ty}", d.display);
                    if let Some(a) = &d.annotation {
                        let _ = write!(s, "  [annotation {}]", annotation_str(a));
                    }
                    let _ = writeln!(s);
                    if let SchemeResult::Ok(r) = &d.scheme {
                        if !r.from_context.is_empty() {
                            let ctx: Vec<String> = r.from_context.iter().map(|a| a.to_string()).collect();
                            let _ = writeln!(s, "{indent}  from context: {}", ctx.join(", "));
                        }
                    }
                }
                for w in &v.warnings {
                    match w.span() {
                        Some(sp) => {
                            let _ = writeln!(s, "{path}:{sp}: warning[{}]: {w}", w.code());
                        }
                        None => {
                            let _ = writeln!(s, "{path}: warning[{}]: {w}", w.code());
                        }
                    }
                }
                for r in &v.reasons {
                    let _ = writeln!(s, "{path}: error: {r}");
                }
                if trace {
                    for (name, t) in &v.traces {
                        let _ = writeln!(s, "derivation of {name}:");
                        for line in t.to_string().lines() {
                            let _ = writeln!(s, "  {line}");
                        }
                    }
                }
            }
        }
        s
    }

    pub fn to_json(&self) -> Value {
        let path = self.path().display().to_string();
        match self {
            FileReport::Io { message, .. } => {
                json!({ "file": path, "verdict": "io-error", "exit_code": self.exit_code(), "error": message })
            }
            FileReport::Error { message, span, .. } => json!({
                "file": path,
                "verdict": self.verdict_str(),
                "exit_code": self.exit_code(),
                "error": message,
                "span": span.as_ref().map(span_json),
            }),
            FileReport::Checked { verdict: v, .. } => {
                let defs: Vec<Value> = v
                    .definitions
                    .iter()
                    .map(|d| {
                        let (scheme, context) = match &d.scheme {
                            SchemeResult::Ok(r) => (
                                Value::String(r.scheme.to_string()),
                                r.from_context.iter().map(|a| Value::String(a.to_string())).collect(),
                            ),
                            _ => (Value::Null, Vec::new()),
                        };
                        let annotation = d.annotation.as_ref().map(|a| {
                            let witness = match a {
                                AnnotationVerdict::Incorrect(w) => Value::String(w.to_string()),
                                _ => Value::Null,
                            };
                            json!({ "verdict": annotation_str(a), "witness": witness })
                        });
                        let warnings: Vec<Value> = v
                            .warnings
                            .iter()
                            .filter(|w| matches!(w, Warning::Ambiguous { name, .. } if *name == d.display))
                            .map(warning_json)
                            .collect();
                        json!({
                            "name": d.display,
                            "kind": format!("{:?}", d.kind).to_lowercase(),
                            "top_level": d.top_level,
                            "scheme": scheme,
                            "from_context": context,
                            "annotation": annotation,
                            "warnings": warnings,
                            "locs": [span_json(&d.span)],
                            "failure_locs": d.failure_spans.iter().map(span_json).collect::<Vec<_>>(),
                        })
                    })
                    .collect();
                json!({
                    "file": path,
                    "verdict": self.verdict_str(),
                    "exit_code": self.exit_code(),
                    "definitions": defs,
                    "warnings": v.warnings.iter().map(warning_json).collect::<Vec<_>>(),
                    "errors": v.reasons,
                })
            }
        }
    }
}
