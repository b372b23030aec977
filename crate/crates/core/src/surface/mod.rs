//! Source language: lexing, parsing, scope resolution and definition
//! classification.

pub mod ast;
mod classify;
mod lexer;
mod parser;
mod print;
mod resolve;

pub use ast::*;
pub use classify::{classify_definitions, ClassifyError, DefClass, DefKind};
pub use print::print_program;

use crate::types::{Type, TypeScheme};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{span}: {message}")]
pub struct ParseError {
    pub span: Span,
    pub message: String,
}

impl ParseError {
    pub fn at(span: Span, message: impl Into<String>) -> ParseError {
        ParseError { span, message: message.into() }
    }
}

/// Built-in values with their type signatures.
pub const PRIMITIVES: &[(&str, &str)] = &[
    ("+", "Int -> Int -> Int"),
    ("-", "Int -> Int -> Int"),
    ("*", "Int -> Int -> Int"),
    ("&&", "Bool -> Bool -> Bool"),
    ("||", "Bool -> Bool -> Bool"),
    ("not", "Bool -> Bool"),
    ("ord", "Char -> Int"),
    ("chr", "Int -> Char"),
    ("ite", "Bool -> a -> a -> a"),
    ("const", "a -> b -> a"),
    ("id", "a -> a"),
    ("fst", "(a, b) -> a"),
    ("snd", "(a, b) -> b"),
    (":", "a -> [a] -> [a]"),
    ("[]", "[a]"),
];

/// Whether `name` is a built-in value (including tuple constructors).
pub fn is_primitive(name: &str) -> bool {
    PRIMITIVES.iter().any(|(p, _)| *p == name) || crate::types::tuple_arity(name).is_some()
}

/// Signature of a built-in value.
pub fn primitive_scheme(name: &str) -> Option<TypeScheme> {
    if let Some(n) = crate::types::tuple_arity(name) {
        let vars: Vec<Type> = (0..n).map(|i| Type::var(format!("a{i}"))).collect();
        let body = Type::arrows(vars.clone(), Type::tuple(vars));
        return Some(TypeScheme::closed(Vec::new(), body));
    }
    let (_, sig) = PRIMITIVES.iter().find(|(p, _)| *p == name)?;
    let qt = parse_qual_type(sig).expect("built-in signature parses");
    Some(TypeScheme::closed(qt.context, qt.body))
}

/// Parse a program and resolve its scopes.
pub fn parse(src: &str) -> Result<Program, ParseError> {
    let mut p = parser::Parser::new(src)?;
    let decls = p.program()?;
    let (classes, instances, values) = parser::split_program(decls)?;
    resolve::resolve(classes, instances, values)
}

/// Parse a qualified type such as `Eq a => a -> a -> Bool`.
pub fn parse_qual_type(src: &str) -> Result<QualType, ParseError> {
    let mut p = parser::Parser::new(src)?;
    let qt = p.qual_type()?;
    p.finish()?;
    Ok(qt)
}

/// Parse a monotype.
pub fn parse_type(src: &str) -> Result<Type, ParseError> {
    let mut p = parser::Parser::new(src)?;
    let t = p.ty()?;
    p.finish()?;
    Ok(t)
}

/// Parse a type scheme: `forall a b. C => t`, or a qualified type whose
/// variables are all quantified.
pub fn parse_scheme(src: &str) -> Result<TypeScheme, ParseError> {
    let mut p = parser::Parser::new(src)?;
    let s = p.scheme()?;
    p.finish()?;
    Ok(s)
}
