use super::ast::Span;
use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    ConId(String),
    Op(String),
    Int(i64),
    Char(char),
    Str(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Semi,
    Backslash,
    Arrow,
    FatArrow,
    DColon,
    Equals,
    Bar,
    Let,
    In,
    Class,
    Instance,
    Where,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) | Tok::ConId(s) | Tok::Op(s) => format!("`{s}`"),
            Tok::Int(n) => format!("`{n}`"),
            Tok::Char(c) => format!("{c:?}"),
            Tok::Str(s) => format!("{s:?}"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Backslash => "`\\`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::FatArrow => "`=>`".into(),
            Tok::DColon => "`::`".into(),
            Tok::Equals => "`=`".into(),
            Tok::Bar => "`|`".into(),
            Tok::Let => "`let`".into(),
            Tok::In => "`in`".into(),
            Tok::Class => "`class`".into(),
            Tok::Instance => "`instance`".into(),
            Tok::Where => "`where`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

const SYMBOL_CHARS: &str = "!#$%&*+./<=>?@\\^|-~:";

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    col: u32,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn here(&self) -> (u32, u32) {
        (self.line, self.col)
    }
}

pub fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut cur = Cursor { chars: src.chars().peekable(), line: 1, col: 1 };
    let mut out = Vec::new();
    loop {
        skip_trivia(&mut cur)?;
        let (line, col) = cur.here();
        let Some(c) = cur.peek() else {
            out.push(Token { tok: Tok::Eof, span: Span { line, col, end_line: line, end_col: col } });
            return Ok(out);
        };
        let err = |msg: String| ParseError::at(Span { line, col, end_line: line, end_col: col + 1 }, msg);
        let tok = if c.is_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(c) = cur.peek() {
                if c.is_alphanumeric() || c == '_' || c == '\'' {
                    s.push(c);
                    cur.bump();
                } else {
                    break;
                }
            }
            match s.as_str() {
                "let" => Tok::Let,
                "in" => Tok::In,
                "class" => Tok::Class,
                "instance" => Tok::Instance,
                "where" => Tok::Where,
                _ if s.starts_with(|c: char| c.is_uppercase()) => Tok::ConId(s),
                _ => Tok::Ident(s),
            }
        } else if c.is_ascii_digit() {
            let mut s = String::new();
            while let Some(c) = cur.peek().filter(char::is_ascii_digit) {
                s.push(c);
                cur.bump();
            }
            Tok::Int(s.parse().map_err(|_| err(format!("integer literal `{s}` out of range")))?)
        } else if c == '\'' {
            cur.bump();
            let ch = read_char(&mut cur, '\'').ok_or_else(|| err("malformed character literal".into()))?;
            if cur.bump() != Some('\'') {
                return Err(err("unterminated character literal".into()));
            }
            Tok::Char(ch)
        } else if c == '"' {
            cur.bump();
            let mut s = String::new();
            loop {
                match cur.peek() {
                    Some('"') => {
                        cur.bump();
                        break;
                    }
                    None | Some('\n') => return Err(err("unterminated string literal".into())),
                    _ => s.push(read_char(&mut cur, '"').ok_or_else(|| err("bad escape".into()))?),
                }
            }
            Tok::Str(s)
        } else {
            cur.bump();
            match c {
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '[' => Tok::LBracket,
                ']' => Tok::RBracket,
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                ',' => Tok::Comma,
                ';' => Tok::Semi,
                '`' => return Err(err("backquoted operators are not supported".into())),
                _ if SYMBOL_CHARS.contains(c) => {
                    let mut s = c.to_string();
                    while let Some(c) = cur.peek().filter(|c| SYMBOL_CHARS.contains(*c)) {
                        s.push(c);
                        cur.bump();
                    }
                    match s.as_str() {
                        "\\" => Tok::Backslash,
                        "->" => Tok::Arrow,
                        "=>" => Tok::FatArrow,
                        "::" => Tok::DColon,
                        "=" => Tok::Equals,
                        "|" => Tok::Bar,
                        _ => Tok::Op(s),
                    }
                }
                _ => return Err(err(format!("unexpected character {c:?}"))),
            }
        };
        let (end_line, end_col) = cur.here();
        out.push(Token { tok, span: Span { line, col, end_line, end_col } });
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Block {
    Explicit,
    Let(u32),
    Where(u32),
}

impl Block {
    fn col(self) -> Option<u32> {
        match self {
            Block::Explicit => None,
            Block::Let(c) | Block::Where(c) => Some(c),
        }
    }
}

/// A `;` written just before the end of an implicit block separates the
/// enclosing declarations.
fn close_implicit(out: &mut Vec<Token>, brace: Token) {
    let at = out.len() - out.iter().rev().take_while(|t| t.tok == Tok::Semi).count();
    out.insert(at, brace);
}

/// Insert the braces and semicolons implied by indentation. A token at
/// column 1 starts a new top-level declaration; `let` and `where` not
/// followed by `{` open a block at the column of the next token.
pub fn layout(toks: Vec<Token>) -> Vec<Token> {
    let synth = |tok: Tok, span: Span| Token { tok, span: Span { end_line: span.line, end_col: span.col, ..span } };
    let mut out: Vec<Token> = Vec::with_capacity(toks.len());
    let mut blocks: Vec<Block> = Vec::new();
    let mut opener: Option<Tok> = None;
    let mut prev_line = 0;
    for t in toks {
        if t.tok == Tok::Eof {
            while let Some(b) = blocks.pop() {
                if b != Block::Explicit {
                    close_implicit(&mut out, synth(Tok::RBrace, t.span));
                }
            }
            out.push(t);
            break;
        }
        let first_on_line = prev_line != 0 && t.span.line != prev_line;
        prev_line = t.span.end_line;
        if let Some(kw) = opener.take() {
            if t.tok == Tok::LBrace {
                blocks.push(Block::Explicit);
                out.push(t);
                continue;
            }
            let col = t.span.col;
            blocks.push(if kw == Tok::Let { Block::Let(col) } else { Block::Where(col) });
            out.push(synth(Tok::LBrace, t.span));
        } else if t.tok == Tok::In {
            if matches!(blocks.last(), Some(Block::Let(_))) {
                blocks.pop();
                out.push(synth(Tok::RBrace, t.span));
            }
        } else if first_on_line {
            while let Some(c) = blocks.last().and_then(|b| b.col()) {
                if t.span.col >= c {
                    break;
                }
                blocks.pop();
                close_implicit(&mut out, synth(Tok::RBrace, t.span));
            }
            match blocks.last().copied() {
                Some(b) if b.col() == Some(t.span.col) => out.push(synth(Tok::Semi, t.span)),
                None if t.span.col == 1 => out.push(synth(Tok::Semi, t.span)),
                _ => {}
            }
        }
        match t.tok {
            Tok::Let | Tok::Where => opener = Some(t.tok.clone()),
            Tok::LBrace => blocks.push(Block::Explicit),
            Tok::RBrace if blocks.last() == Some(&Block::Explicit) => {
                blocks.pop();
            }
            _ => {}
        }
        out.push(t);
    }
    out
}

fn read_char(cur: &mut Cursor<'_>, quote: char) -> Option<char> {
    let c = cur.bump()?;
    if c == quote || c == '\n' {
        return None;
    }
    if c != '\\' {
        return Some(c);
    }
    Some(match cur.bump()? {
        'n' => '\n',
        't' => '\t',
        '\\' => '\\',
        '\'' => '\'',
        '"' => '"',
        '0' => '\0',
        _ => return None,
    })
}

fn skip_trivia(cur: &mut Cursor<'_>) -> Result<(), ParseError> {
    loop {
        match cur.peek() {
            Some(c) if c.is_whitespace() => {
                cur.bump();
            }
            Some('-') => {
                // a symbol run made only of two or more dashes starts a comment
                let run: String = cur.chars.clone().take_while(|c| SYMBOL_CHARS.contains(*c)).collect();
                if run.len() < 2 || run.chars().any(|c| c != '-') {
                    return Ok(());
                }
                while let Some(c) = cur.peek() {
                    if c == '\n' {
                        break;
                    }
                    cur.bump();
                }
            }
            Some('{') => {
                let mut look = cur.chars.clone();
                look.next();
                if look.next() != Some('-') {
                    return Ok(());
                }
                let (line, col) = cur.here();
                cur.bump();
                cur.bump();
                let mut depth = 1;
                while depth > 0 {
                    match cur.bump() {
                        None => {
                            return Err(ParseError::at(
                                Span { line, col, end_line: line, end_col: col + 2 },
                                "unterminated block comment",
                            ))
                        }
                        Some('-') if cur.peek() == Some('}') => {
                            cur.bump();
                            depth -= 1;
                        }
                        Some('{') if cur.peek() == Some('-') => {
                            cur.bump();
                            depth += 1;
                        }
                        _ => {}
                    }
                }
            }
            _ => return Ok(()),
        }
    }
}
