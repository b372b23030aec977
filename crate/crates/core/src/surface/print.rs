//! Source printer. Output re-parses to an α-equivalent program.

use std::fmt::Write;

use super::ast::*;
use crate::types::tuple_arity;

fn is_op(name: &str) -> bool {
    name.chars().next().is_some_and(|c| !c.is_alphanumeric() && c != '_' && c != '(' && c != '[')
}

fn var_name(name: &str) -> String {
    if is_op(name) {
        format!("({name})")
    } else {
        name.to_string()
    }
}

fn escape(c: char, quote: char) -> String {
    match c {
        '\n' => "\\n".into(),
        '\t' => "\\t".into(),
        '\\' => "\\\\".into(),
        '\0' => "\\0".into(),
        c if c == quote => format!("\\{c}"),
        c => c.to_string(),
    }
}

fn qual(qt: &QualType) -> String {
    if qt.context.is_empty() {
        qt.body.to_string()
    } else {
        let ctx: Vec<String> = qt.context.iter().map(|a| a.to_string()).collect();
        format!("({}) => {}", ctx.join(", "), qt.body)
    }
}

pub fn print_expr(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Var(v) => var_name(v),
        ExprKind::Lit(Literal::Int(n)) => n.to_string(),
        ExprKind::Lit(Literal::Bool(b)) => if *b { "True" } else { "False" }.to_string(),
        ExprKind::Lit(Literal::Char(c)) => format!("'{}'", escape(*c, '\'')),
        ExprKind::Lit(Literal::Str(s)) => format!("\"{}\"", s.chars().map(|c| escape(c, '"')).collect::<String>()),
        ExprKind::Abs { binder, body, .. } => format!("(\\{binder} -> {})", print_expr(body)),
        ExprKind::App(..) => {
            let mut args = Vec::new();
            let mut head = e;
            while let ExprKind::App(f, a) = &head.kind {
                args.push(a.as_ref());
                head = f;
            }
            args.reverse();
            let mut s = format!("({}", print_expr(head));
            if let ExprKind::Var(v) = &head.kind {
                if let Some(n) = tuple_arity(v).filter(|n| *n <= args.len()) {
                    let items: Vec<String> = args.drain(..n).map(print_expr).collect();
                    if args.is_empty() {
                        return format!("({})", items.join(", "));
                    }
                    s = format!("(({})", items.join(", "));
                }
            }
            for a in args {
                write!(s, " {}", print_expr(a)).unwrap();
            }
            s.push(')');
            s
        }
        ExprKind::Let(b, body) => format!("(let {{ {} }} in {})", print_binding(b), print_expr(body)),
        ExprKind::Ascribe(inner, t) => format!("({} :: {t})", print_expr(inner)),
    }
}

fn print_binding(b: &Binding) -> String {
    let mut s = String::new();
    if let Some(qt) = &b.annotation {
        write!(s, "{} :: {}; ", var_name(&b.name), qual(qt)).unwrap();
    }
    write!(s, "{} = {}", var_name(&b.name), print_expr(&b.rhs)).unwrap();
    s
}

pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    for c in &p.classes {
        out.push_str("class ");
        if !c.superclasses.is_empty() {
            let ctx: Vec<String> = c.superclasses.iter().map(|a| a.to_string()).collect();
            write!(out, "({}) => ", ctx.join(", ")).unwrap();
        }
        write!(out, "{}", c.name).unwrap();
        for v in &c.params {
            write!(out, " {v}").unwrap();
        }
        if !c.fundeps.is_empty() {
            let fds: Vec<String> =
                c.fundeps.iter().map(|(a, b)| format!("{} -> {}", a.join(" "), b.join(" "))).collect();
            write!(out, " | {}", fds.join(", ")).unwrap();
        }
        if !c.methods.is_empty() {
            let ms: Vec<String> = c.methods.iter().map(|(m, qt)| format!("{} :: {}", var_name(m), qual(qt))).collect();
            write!(out, " where {{ {} }}", ms.join("; ")).unwrap();
        }
        out.push_str(";\n");
    }
    for i in &p.instances {
        out.push_str("instance ");
        if !i.context.is_empty() {
            let ctx: Vec<String> = i.context.iter().map(|a| a.to_string()).collect();
            write!(out, "({}) => ", ctx.join(", ")).unwrap();
        }
        write!(out, "{}", crate::types::Atom::class(i.class.clone(), i.types.clone())).unwrap();
        out.push_str(";\n");
    }
    for b in &p.values {
        out.push_str(&print_binding(b));
        out.push_str(";\n");
    }
    out
}
