//! Recursive-descent parser producing an unresolved AST. Names are renamed
//! and node ids assigned afterwards by [`super::resolve`].

use super::ast::*;
use super::lexer::{layout, lex, Tok, Token};
use super::ParseError;
use std::collections::BTreeSet;

use crate::types::{tuple_con, Atom, Type, TypeScheme, LIST_CON};

pub(crate) enum Decl {
    Class(ClassDecl),
    Instance(InstanceDecl),
    Sig(String, QualType, Span),
    Bind(String, Expr, Span),
}

pub(crate) struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

fn fixity(op: &str) -> (u8, Assoc) {
    match op {
        "||" => (2, Assoc::Right),
        "&&" => (3, Assoc::Right),
        "==" | "/=" | "<" | "<=" | ">" | ">=" => (4, Assoc::Non),
        "++" | ":" => (5, Assoc::Right),
        "+" | "-" => (6, Assoc::Left),
        "*" => (7, Assoc::Left),
        "." => (9, Assoc::Right),
        _ => (9, Assoc::Left),
    }
}

#[derive(PartialEq, Clone, Copy)]
enum Assoc {
    Left,
    Right,
    Non,
}

fn mk(kind: ExprKind, span: Span) -> Expr {
    Expr { kind, span, id: NodeId(0) }
}

impl Parser {
    pub fn new(src: &str) -> Result<Parser, ParseError> {
        Ok(Parser { toks: layout(lex(src)?), pos: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn prev_span(&self) -> Span {
        self.toks[self.pos.saturating_sub(1)].span
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn unexpected(&self, what: &str) -> ParseError {
        ParseError::at(self.span(), format!("expected {what}, found {}", self.peek().describe()))
    }

    fn expect(&mut self, t: Tok) -> Result<Span, ParseError> {
        if self.peek() == &t {
            Ok(self.bump().span)
        } else {
            Err(self.unexpected(&t.describe()))
        }
    }

    fn close(&mut self, t: Tok, open: Span, opener: &str) -> Result<Span, ParseError> {
        if self.peek() == &t {
            Ok(self.bump().span)
        } else {
            Err(ParseError::at(
                open,
                format!(
                    "unclosed `{opener}`: expected {}, found {} at {}",
                    t.describe(),
                    self.peek().describe(),
                    self.span()
                ),
            ))
        }
    }

    /// Errors caused by running out of input are reported at the opener.
    fn at_eof_blame(&self, e: ParseError, open: Span, opener: &str) -> ParseError {
        if self.peek() == &Tok::Eof {
            ParseError::at(open, format!("unclosed `{opener}`: {}", e.message))
        } else {
            e
        }
    }

    pub fn program(&mut self) -> Result<Vec<Decl>, ParseError> {
        let mut decls = Vec::new();
        loop {
            while self.eat(&Tok::Semi) {}
            if self.peek() == &Tok::Eof {
                return Ok(decls);
            }
            decls.push(self.top_decl()?);
            if self.peek() != &Tok::Eof {
                self.expect(Tok::Semi)?;
            }
        }
    }

    fn top_decl(&mut self) -> Result<Decl, ParseError> {
        match self.peek() {
            Tok::Class => self.class_decl().map(Decl::Class),
            Tok::Instance => self.instance_decl().map(Decl::Instance),
            _ => self.value_decl(),
        }
    }

    fn var_name(&mut self) -> Result<(String, Span), ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => Ok((s, self.bump().span)),
            Tok::LParen => {
                if let Tok::Op(op) = self.peek_at(1).clone() {
                    if self.peek_at(2) == &Tok::RParen {
                        let start = self.bump().span;
                        self.bump();
                        let end = self.bump().span;
                        return Ok((op, start.to(end)));
                    }
                }
                Err(self.unexpected("a variable name"))
            }
            _ => Err(self.unexpected("a variable name")),
        }
    }

    fn value_decl(&mut self) -> Result<Decl, ParseError> {
        let (name, start) = self.var_name()?;
        if self.eat(&Tok::DColon) {
            let qt = self.qual_type()?;
            return Ok(Decl::Sig(name, qt, start.to(self.prev_span())));
        }
        let mut params = Vec::new();
        while let Tok::Ident(p) = self.peek().clone() {
            params.push((p, self.bump().span));
        }
        self.expect(Tok::Equals)?;
        let body = self.expr()?;
        let span = start.to(body.span);
        let rhs = params.into_iter().rev().fold(body, |acc, (p, ps)| {
            let sp = ps.to(acc.span);
            mk(ExprKind::Abs { binder: p, tyvar: String::new(), body: Box::new(acc) }, sp)
        });
        Ok(Decl::Bind(name, rhs, span))
    }

    fn class_decl(&mut self) -> Result<ClassDecl, ParseError> {
        let start = self.expect(Tok::Class)?;
        let mut head = self.btype()?;
        let mut superclasses = Vec::new();
        if self.eat(&Tok::FatArrow) {
            superclasses = self.type_to_context(&head, start)?;
            head = self.btype()?;
        }
        let (name, args) = self.class_head(&head, start)?;
        let mut params = Vec::new();
        for a in args {
            match a {
                Type::Var(v) => params.push(v),
                other => {
                    return Err(ParseError::at(
                        start,
                        format!("class parameter must be a type variable, found `{other}`"),
                    ))
                }
            }
        }
        let mut fundeps = Vec::new();
        if self.eat(&Tok::Bar) {
            loop {
                let mut from = Vec::new();
                while let Tok::Ident(v) = self.peek().clone() {
                    self.bump();
                    from.push(v);
                }
                self.expect(Tok::Arrow)?;
                let mut to = Vec::new();
                while let Tok::Ident(v) = self.peek().clone() {
                    self.bump();
                    to.push(v);
                }
                fundeps.push((from, to));
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        let mut methods = Vec::new();
        if self.eat(&Tok::Where) {
            if self.peek() == &Tok::LBrace {
                let open = self.bump().span;
                loop {
                    while self.eat(&Tok::Semi) {}
                    if self.peek() == &Tok::RBrace {
                        break;
                    }
                    methods.push(self.method_sig()?);
                    if self.peek() != &Tok::RBrace {
                        self.expect(Tok::Semi)?;
                    }
                }
                self.close(Tok::RBrace, open, "{")?;
            } else {
                methods.push(self.method_sig()?);
            }
        }
        Ok(ClassDecl { name, params, fundeps, superclasses, methods, span: start.to(self.prev_span()) })
    }

    fn method_sig(&mut self) -> Result<(String, QualType), ParseError> {
        let (name, _) = self.var_name()?;
        self.expect(Tok::DColon)?;
        Ok((name, self.qual_type()?))
    }

    fn instance_decl(&mut self) -> Result<InstanceDecl, ParseError> {
        let start = self.expect(Tok::Instance)?;
        let mut head = self.btype()?;
        let mut context = Vec::new();
        if self.eat(&Tok::FatArrow) {
            context = self.type_to_context(&head, start)?;
            head = self.btype()?;
        }
        let (class, types) = self.class_head(&head, start)?;
        Ok(InstanceDecl { context, class, types, span: start.to(self.prev_span()) })
    }

    fn class_head(&self, t: &Type, at: Span) -> Result<(String, Vec<Type>), ParseError> {
        match t.spine() {
            (Type::Con(c), args) if c.starts_with(|ch: char| ch.is_ascii_uppercase()) => {
                Ok((c.clone(), args.into_iter().cloned().collect()))
            }
            _ => Err(ParseError::at(at, format!("expected a class constraint, found `{t}`"))),
        }
    }

    fn type_to_context(&self, t: &Type, at: Span) -> Result<Vec<Atom>, ParseError> {
        let (head, args) = t.spine();
        if let Type::Con(c) = head {
            if c == "()" && args.is_empty() {
                return Ok(Vec::new());
            }
            if crate::types::tuple_arity(c) == Some(args.len()) {
                return args.into_iter().map(|a| self.class_head(a, at).map(|(c, ts)| Atom::class(c, ts))).collect();
            }
        }
        let (c, ts) = self.class_head(t, at)?;
        Ok(vec![Atom::class(c, ts)])
    }

    pub fn finish(&mut self) -> Result<(), ParseError> {
        if self.peek() == &Tok::Eof {
            Ok(())
        } else {
            Err(self.unexpected("end of input"))
        }
    }

    pub fn scheme(&mut self) -> Result<TypeScheme, ParseError> {
        if self.peek() == &Tok::Ident("forall".into()) {
            self.bump();
            let mut quantified = BTreeSet::new();
            while let Tok::Ident(v) = self.peek().clone() {
                self.bump();
                quantified.insert(v);
            }
            if !self.eat(&Tok::Op(".".into())) {
                return Err(self.unexpected("`.`"));
            }
            let qt = self.qual_type()?;
            Ok(TypeScheme { quantified, context: qt.context, body: qt.body })
        } else {
            let qt = self.qual_type()?;
            Ok(TypeScheme::closed(qt.context, qt.body))
        }
    }

    pub fn qual_type(&mut self) -> Result<QualType, ParseError> {
        let start = self.span();
        let t = self.ty()?;
        if self.eat(&Tok::FatArrow) {
            let context = self.type_to_context(&t, start)?;
            let body = self.ty()?;
            Ok(QualType { context, body })
        } else {
            Ok(QualType { context: Vec::new(), body: t })
        }
    }

    pub fn ty(&mut self) -> Result<Type, ParseError> {
        let t = self.btype()?;
        if self.eat(&Tok::Arrow) {
            Ok(Type::arrow(t, self.ty()?))
        } else {
            Ok(t)
        }
    }

    fn starts_atype(&self) -> bool {
        matches!(self.peek(), Tok::Ident(_) | Tok::ConId(_) | Tok::LParen | Tok::LBracket)
    }

    fn btype(&mut self) -> Result<Type, ParseError> {
        let mut t = self.atype()?;
        while self.starts_atype() {
            t = Type::app(t, self.atype()?);
        }
        Ok(t)
    }

    fn atype(&mut self) -> Result<Type, ParseError> {
        match self.peek().clone() {
            Tok::Ident(v) => {
                self.bump();
                Ok(Type::Var(v))
            }
            Tok::ConId(c) => {
                self.bump();
                Ok(Type::Con(c))
            }
            Tok::LParen => {
                let open = self.bump().span;
                if self.eat(&Tok::RParen) {
                    return Ok(Type::con("()"));
                }
                let mut items = vec![self.ty()?];
                while self.eat(&Tok::Comma) {
                    items.push(self.ty()?);
                }
                self.close(Tok::RParen, open, "(")?;
                Ok(if items.len() == 1 { items.pop().unwrap() } else { Type::tuple(items) })
            }
            Tok::LBracket => {
                let open = self.bump().span;
                let t = self.ty()?;
                self.close(Tok::RBracket, open, "[")?;
                Ok(Type::app(Type::con(LIST_CON), t))
            }
            _ => Err(self.unexpected("a type")),
        }
    }

    pub fn expr(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Tok::Backslash => self.lambda(),
            Tok::Let => self.let_expr(),
            _ => self.op_expr(0),
        }
    }

    fn lambda(&mut self) -> Result<Expr, ParseError> {
        let start = self.expect(Tok::Backslash)?;
        let mut params = Vec::new();
        while let Tok::Ident(p) = self.peek().clone() {
            params.push((p, self.bump().span));
        }
        if params.is_empty() {
            return Err(self.unexpected("a lambda parameter"));
        }
        self.expect(Tok::Arrow)?;
        let body = self.expr()?;
        Ok(params.into_iter().enumerate().rev().fold(body, |acc, (i, (p, ps))| {
            let sp = if i == 0 { start.to(acc.span) } else { ps.to(acc.span) };
            mk(ExprKind::Abs { binder: p, tyvar: String::new(), body: Box::new(acc) }, sp)
        }))
    }

    fn let_expr(&mut self) -> Result<Expr, ParseError> {
        let start = self.expect(Tok::Let)?;
        let braced = self.peek() == &Tok::LBrace;
        let open = self.span();
        if braced {
            self.bump();
        }
        let mut decls = Vec::new();
        loop {
            while self.eat(&Tok::Semi) {}
            if (braced && self.peek() == &Tok::RBrace) || (!braced && self.peek() == &Tok::In) {
                break;
            }
            decls.push(self.value_decl()?);
            let end = if braced { Tok::RBrace } else { Tok::In };
            if self.peek() != &end {
                self.expect(Tok::Semi)?;
            }
        }
        if braced {
            self.close(Tok::RBrace, open, "{")?;
        }
        self.expect(Tok::In)?;
        let body = self.expr()?;
        let bindings = group_bindings(decls, start)?;
        if bindings.is_empty() {
            return Err(ParseError::at(start, "empty `let`"));
        }
        let span = start.to(body.span);
        Ok(bindings.into_iter().rev().fold(body, |acc, b| mk(ExprKind::Let(Box::new(b), Box::new(acc)), span)))
    }

    fn op_expr(&mut self, min_prec: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.app_expr()?;
        while let Tok::Op(op) = self.peek().clone() {
            let (prec, assoc) = fixity(&op);
            if prec < min_prec {
                break;
            }
            let op_span = self.bump().span;
            let next_min = if assoc == Assoc::Right { prec } else { prec + 1 };
            let rhs =
                if matches!(self.peek(), Tok::Backslash | Tok::Let) { self.expr()? } else { self.op_expr(next_min)? };
            let span = lhs.span.to(rhs.span);
            let f = mk(ExprKind::Var(op), op_span);
            let partial = mk(ExprKind::App(Box::new(f), Box::new(lhs)), span);
            lhs = mk(ExprKind::App(Box::new(partial), Box::new(rhs)), span);
            if assoc == Assoc::Non {
                if let Tok::Op(next) = self.peek() {
                    if fixity(next).0 == prec {
                        return Err(ParseError::at(self.span(), format!("non-associative operator `{next}` chained")));
                    }
                }
            }
        }
        Ok(lhs)
    }

    fn starts_aexpr(&self) -> bool {
        matches!(
            self.peek(),
            Tok::Ident(_)
                | Tok::ConId(_)
                | Tok::Int(_)
                | Tok::Char(_)
                | Tok::Str(_)
                | Tok::LParen
                | Tok::LBracket
                | Tok::Backslash
                | Tok::Let
        )
    }

    fn app_expr(&mut self) -> Result<Expr, ParseError> {
        let mut f = self.aexpr()?;
        while self.starts_aexpr() {
            let arg = match self.peek() {
                Tok::Backslash | Tok::Let => self.expr()?,
                _ => self.aexpr()?,
            };
            let span = f.span.to(arg.span);
            f = mk(ExprKind::App(Box::new(f), Box::new(arg)), span);
        }
        Ok(f)
    }

    fn aexpr(&mut self) -> Result<Expr, ParseError> {
        let sp = self.span();
        match self.peek().clone() {
            Tok::Ident(v) => {
                self.bump();
                Ok(mk(ExprKind::Var(v), sp))
            }
            Tok::ConId(c) => {
                self.bump();
                match c.as_str() {
                    "True" => Ok(mk(ExprKind::Lit(Literal::Bool(true)), sp)),
                    "False" => Ok(mk(ExprKind::Lit(Literal::Bool(false)), sp)),
                    _ => Err(ParseError::at(sp, format!("unknown data constructor `{c}`"))),
                }
            }
            Tok::Int(n) => {
                self.bump();
                Ok(mk(ExprKind::Lit(Literal::Int(n)), sp))
            }
            Tok::Char(c) => {
                self.bump();
                Ok(mk(ExprKind::Lit(Literal::Char(c)), sp))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(mk(ExprKind::Lit(Literal::Str(s)), sp))
            }
            Tok::Backslash => self.lambda(),
            Tok::Let => self.let_expr(),
            Tok::LParen => {
                let open = self.bump().span;
                if let (Tok::Op(op), Tok::RParen) = (self.peek().clone(), self.peek_at(1).clone()) {
                    self.bump();
                    let end = self.bump().span;
                    return Ok(mk(ExprKind::Var(op), open.to(end)));
                }
                if self.peek() == &Tok::Comma {
                    let mut arity = 1;
                    while self.eat(&Tok::Comma) {
                        arity += 1;
                    }
                    let end = self.close(Tok::RParen, open, "(")?;
                    return Ok(mk(ExprKind::Var(tuple_con(arity)), open.to(end)));
                }
                if self.peek() == &Tok::RParen {
                    return Err(ParseError::at(open, "the unit value `()` is not supported"));
                }
                let mut items = Vec::new();
                loop {
                    match self.paren_item() {
                        Ok(e) => items.push(e),
                        Err(e) => return Err(self.at_eof_blame(e, open, "(")),
                    }
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                let end = self.close(Tok::RParen, open, "(")?;
                let span = open.to(end);
                if items.len() == 1 {
                    let mut e = items.pop().unwrap();
                    e.span = span;
                    return Ok(e);
                }
                let con = mk(ExprKind::Var(tuple_con(items.len())), open);
                Ok(items.into_iter().fold(con, |acc, it| mk(ExprKind::App(Box::new(acc), Box::new(it)), span)))
            }
            Tok::LBracket => {
                let open = self.bump().span;
                let mut items = Vec::new();
                if self.peek() != &Tok::RBracket {
                    loop {
                        match self.paren_item() {
                            Ok(e) => items.push(e),
                            Err(e) => return Err(self.at_eof_blame(e, open, "[")),
                        }
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                }
                let end = self.close(Tok::RBracket, open, "[")?;
                let span = open.to(end);
                let nil = mk(ExprKind::Var("[]".into()), end);
                Ok(items.into_iter().rev().fold(nil, |acc, it| {
                    let cons = mk(ExprKind::Var(":".into()), it.span);
                    let head = mk(ExprKind::App(Box::new(cons), Box::new(it)), span);
                    mk(ExprKind::App(Box::new(head), Box::new(acc)), span)
                }))
            }
            _ => Err(self.unexpected("an expression")),
        }
    }

    fn paren_item(&mut self) -> Result<Expr, ParseError> {
        let e = self.expr()?;
        if self.eat(&Tok::DColon) {
            let t = self.ty()?;
            let span = e.span.to(self.prev_span());
            Ok(mk(ExprKind::Ascribe(Box::new(e), t), span))
        } else {
            Ok(e)
        }
    }
}

/// Pair signatures with bindings inside one `let` group.
fn group_bindings(decls: Vec<Decl>, at: Span) -> Result<Vec<Binding>, ParseError> {
    let mut sigs: Vec<(String, QualType, Span)> = Vec::new();
    let mut binds: Vec<Binding> = Vec::new();
    for d in decls {
        match d {
            Decl::Sig(n, qt, sp) => {
                if sigs.iter().any(|(m, ..)| *m == n) {
                    return Err(ParseError::at(sp, format!("duplicate signature for `{n}`")));
                }
                sigs.push((n, qt, sp));
            }
            Decl::Bind(n, rhs, sp) => {
                if binds.iter().any(|b| b.name == n) {
                    return Err(ParseError::at(sp, format!("duplicate binding for `{n}`")));
                }
                binds.push(Binding { name: n, annotation: None, rhs, id: NodeId(0), span: sp, sig_span: None });
            }
            Decl::Class(c) => return Err(ParseError::at(c.span, "class declaration inside `let`")),
            Decl::Instance(i) => return Err(ParseError::at(i.span, "instance declaration inside `let`")),
        }
    }
    for (n, qt, sp) in sigs {
        let Some(b) = binds.iter_mut().find(|b| b.name == n) else {
            return Err(ParseError::at(sp, format!("signature for `{n}` lacks an accompanying binding")));
        };
        b.annotation = Some(qt);
        b.sig_span = Some(sp);
    }
    let _ = at;
    Ok(binds)
}

type Split = (Vec<ClassDecl>, Vec<InstanceDecl>, Vec<Binding>);

pub(crate) fn split_program(decls: Vec<Decl>) -> Result<Split, ParseError> {
    let mut classes = Vec::new();
    let mut instances = Vec::new();
    let mut values = Vec::new();
    for d in decls {
        match d {
            Decl::Class(c) => classes.push(c),
            Decl::Instance(i) => instances.push(i),
            other => values.push(other),
        }
    }
    let binds = group_bindings(values, Span::default())?;
    Ok((classes, instances, binds))
}
