//! Reader for parenthesized surface text.
//!
//! Round and square brackets are interchangeable but must match by kind.
//! Comments run from `;` to the end of the line. Atoms are maximal runs of
//! characters that are not whitespace, brackets, `;` or `"`; string literals
//! are double-quoted. Every node carries the [`Span`] of the text it came from.

use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

/// Location of a node in its source file. Lines and columns are 1-based and
/// measured in characters; `offset` is a byte offset.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Span {
    pub file: Arc<str>,
    pub offset: usize,
    pub line: u32,
    pub col: u32,
    pub len: u32,
}

impl Span {
    pub fn synthetic() -> Span {
        Span { file: Arc::from("<generated>"), offset: 0, line: 0, col: 0, len: 0 }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Bracket {
    Round,
    Square,
}

impl Bracket {
    fn open(self) -> char {
        match self {
            Bracket::Round => '(',
            Bracket::Square => '[',
        }
    }
    fn close(self) -> char {
        match self {
            Bracket::Round => ')',
            Bracket::Square => ']',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AtomKind {
    Symbol,
    /// Starts with a digit, or a sign followed by a digit.
    Number,
    /// `#:`-prefixed.
    Keyword,
    Str,
}

#[derive(Clone, Debug)]
pub struct Atom {
    pub kind: AtomKind,
    pub text: Arc<str>,
    /// Set on identifiers minted by desugaring; such binders are never
    /// visible to user code.
    pub generated: bool,
}

impl PartialEq for Atom {
    fn eq(&self, other: &Atom) -> bool {
        self.kind == other.kind && self.text == other.text && self.generated == other.generated
    }
}

#[derive(Clone, Debug)]
pub enum SurfaceKind {
    Atom(Atom),
    List(Bracket, Vec<SurfaceTerm>),
}

/// A parsed surface node. Equality ignores spans and bracket shape.
#[derive(Clone, Debug)]
pub struct SurfaceTerm {
    pub kind: SurfaceKind,
    pub span: Span,
}

impl PartialEq for SurfaceTerm {
    fn eq(&self, other: &SurfaceTerm) -> bool {
        match (&self.kind, &other.kind) {
            (SurfaceKind::Atom(a), SurfaceKind::Atom(b)) => a == b,
            (SurfaceKind::List(_, xs), SurfaceKind::List(_, ys)) => xs == ys,
            _ => false,
        }
    }
}

impl SurfaceTerm {
    pub fn atom(kind: AtomKind, text: &str, span: Span) -> SurfaceTerm {
        SurfaceTerm {
            kind: SurfaceKind::Atom(Atom { kind, text: Arc::from(text), generated: false }),
            span,
        }
    }

    pub fn symbol(text: &str, span: Span) -> SurfaceTerm {
        SurfaceTerm::atom(AtomKind::Symbol, text, span)
    }

    pub fn generated_symbol(text: &str, span: Span) -> SurfaceTerm {
        SurfaceTerm {
            kind: SurfaceKind::Atom(Atom { kind: AtomKind::Symbol, text: Arc::from(text), generated: true }),
            span,
        }
    }

    pub fn list(items: Vec<SurfaceTerm>, span: Span) -> SurfaceTerm {
        SurfaceTerm { kind: SurfaceKind::List(Bracket::Round, items), span }
    }

    pub fn square(items: Vec<SurfaceTerm>, span: Span) -> SurfaceTerm {
        SurfaceTerm { kind: SurfaceKind::List(Bracket::Square, items), span }
    }

    pub fn as_atom(&self) -> Option<&Atom> {
        match &self.kind {
            SurfaceKind::Atom(a) => Some(a),
            SurfaceKind::List(..) => None,
        }
    }

    /// Text of a symbol atom.
    pub fn as_symbol(&self) -> Option<&str> {
        match &self.kind {
            SurfaceKind::Atom(a) if a.kind == AtomKind::Symbol => Some(&a.text),
            _ => None,
        }
    }

    pub fn as_keyword(&self) -> Option<&str> {
        match &self.kind {
            SurfaceKind::Atom(a) if a.kind == AtomKind::Keyword => Some(&a.text),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[SurfaceTerm]> {
        match &self.kind {
            SurfaceKind::List(_, xs) => Some(xs),
            SurfaceKind::Atom(_) => None,
        }
    }

    pub fn is_symbol(&self, text: &str) -> bool {
        self.as_symbol() == Some(text)
    }

    /// Head symbol of a list form.
    pub fn head_symbol(&self) -> Option<&str> {
        self.as_list().and_then(|xs| xs.first()).and_then(|h| h.as_symbol())
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match &self.kind {
            SurfaceKind::Atom(_) => 1,
            SurfaceKind::List(_, xs) => 1 + xs.iter().map(SurfaceTerm::size).sum::<usize>(),
        }
    }
}

impl fmt::Display for SurfaceTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            SurfaceKind::Atom(a) if a.kind == AtomKind::Str => {
                f.write_str("\"")?;
                for c in a.text.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")
            }
            SurfaceKind::Atom(a) => f.write_str(&a.text),
            SurfaceKind::List(b, xs) => {
                write!(f, "{}", b.open())?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, "{}", b.close())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ParseErrorKind {
    #[error("{0} unclosed bracket(s)")]
    Unclosed(usize),
    #[error("mismatched bracket: expected `{expected}`, found `{found}`")]
    Mismatched { expected: char, found: char },
    #[error("stray closing bracket `{0}`")]
    StrayCloser(char),
    #[error("unterminated string literal")]
    UnterminatedString,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{span}: parse error: {kind}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub span: Span,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TokenKind {
    Open(Bracket),
    Close(Bracket),
    Atom(AtomKind),
    Whitespace,
    Comment,
}

/// A lexical token, including skipped regions. Tokens tile the input.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub col: u32,
}

fn is_delimiter(c: char) -> bool {
    c.is_whitespace() || matches!(c, '(' | ')' | '[' | ']' | ';' | '"')
}

fn classify(text: &str) -> AtomKind {
    let mut chars = text.chars();
    match (chars.next(), chars.next()) {
        (Some('#'), Some(':')) => AtomKind::Keyword,
        (Some(c), _) if c.is_ascii_digit() => AtomKind::Number,
        (Some('-' | '+'), Some(d)) if d.is_ascii_digit() => AtomKind::Number,
        _ => AtomKind::Symbol,
    }
}

/// Splits `text` into tokens covering every character exactly once.
pub fn lex(text: &str) -> Result<Vec<Token>, (usize, u32, u32)> {
    let mut out = Vec::new();
    let mut iter = text.char_indices().peekable();
    let (mut line, mut col) = (1u32, 1u32);
    while let Some(&(start, c)) = iter.peek() {
        let (tline, tcol) = (line, col);
        let mut advance = |iter: &mut core::iter::Peekable<core::str::CharIndices<'_>>| {
            let (_, c) = iter.next().unwrap();
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
        };
        let kind = match c {
            '(' | '[' | ')' | ']' => {
                advance(&mut iter);
                match c {
                    '(' => TokenKind::Open(Bracket::Round),
                    '[' => TokenKind::Open(Bracket::Square),
                    ')' => TokenKind::Close(Bracket::Round),
                    _ => TokenKind::Close(Bracket::Square),
                }
            }
            ';' => {
                while let Some(&(_, c)) = iter.peek() {
                    if c == '\n' {
                        break;
                    }
                    advance(&mut iter);
                }
                TokenKind::Comment
            }
            '"' => {
                advance(&mut iter);
                let mut closed = false;
                while let Some(&(_, c)) = iter.peek() {
                    advance(&mut iter);
                    if c == '\\' {
                        if iter.peek().is_some() {
                            advance(&mut iter);
                        }
                    } else if c == '"' {
                        closed = true;
                        break;
                    }
                }
                if !closed {
                    return Err((start, tline, tcol));
                }
                TokenKind::Atom(AtomKind::Str)
            }
            c if c.is_whitespace() => {
                while let Some(&(_, c)) = iter.peek() {
                    if !c.is_whitespace() {
                        break;
                    }
                    advance(&mut iter);
                }
                TokenKind::Whitespace
            }
            _ => {
                while let Some(&(_, c)) = iter.peek() {
                    if is_delimiter(c) {
                        break;
                    }
                    advance(&mut iter);
                }
                TokenKind::Atom(AtomKind::Symbol)
            }
        };
        let end = iter.peek().map(|&(i, _)| i).unwrap_or(text.len());
        let kind = match kind {
            TokenKind::Atom(AtomKind::Symbol) => TokenKind::Atom(classify(&text[start..end])),
            k => k,
        };
        out.push(Token { kind, start, end, line: tline, col: tcol });
    }
    Ok(out)
}

fn unescape(body: &str) -> String {
    let mut out = String::new();
    let mut chars = body.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('n') => out.push('\n'),
                Some('t') => out.push('\t'),
                Some(other) => out.push(other),
                None => {}
            }
        } else {
            out.push(c);
        }
    }
    out
}

/// Parses `text` into its top-level forms, in order.
pub fn parse(file: &str, text: &str) -> Result<Vec<SurfaceTerm>, ParseError> {
    let file: Arc<str> = Arc::from(file);
    let span_of = |tok: &Token, end: usize| Span {
        file: file.clone(),
        offset: tok.start,
        line: tok.line,
        col: tok.col,
        len: text[tok.start..end].chars().count() as u32,
    };
    let tokens = lex(text).map_err(|(offset, line, col)| ParseError {
        kind: ParseErrorKind::UnterminatedString,
        span: Span { file: file.clone(), offset, line, col, len: 1 },
    })?;
    // Each frame: opening token, bracket kind, children so far.
    let mut stack: Vec<(Token, Bracket, Vec<SurfaceTerm>)> = Vec::new();
    let mut top = Vec::new();
    for tok in &tokens {
        match tok.kind {
            TokenKind::Whitespace | TokenKind::Comment => {}
            TokenKind::Open(b) => stack.push((tok.clone(), b, Vec::new())),
            TokenKind::Close(b) => {
                let Some((open, ob, items)) = stack.pop() else {
                    return Err(ParseError { kind: ParseErrorKind::StrayCloser(b.close()), span: span_of(tok, tok.end) });
                };
                if ob != b {
                    return Err(ParseError {
                        kind: ParseErrorKind::Mismatched { expected: ob.close(), found: b.close() },
                        span: span_of(tok, tok.end),
                    });
                }
                let node = SurfaceTerm { kind: SurfaceKind::List(b, items), span: span_of(&open, tok.end) };
                match stack.last_mut() {
                    Some(frame) => frame.2.push(node),
                    None => top.push(node),
                }
            }
            TokenKind::Atom(kind) => {
                let raw = &text[tok.start..tok.end];
                let content = if kind == AtomKind::Str { unescape(&raw[1..raw.len() - 1]) } else { raw.to_string() };
                let node = SurfaceTerm {
                    kind: SurfaceKind::Atom(Atom { kind, text: Arc::from(content.as_str()), generated: false }),
                    span: span_of(tok, tok.end),
                };
                match stack.last_mut() {
                    Some(frame) => frame.2.push(node),
                    None => top.push(node),
                }
            }
        }
    }
    if let Some((open, _, _)) = stack.first() {
        return Err(ParseError { kind: ParseErrorKind::Unclosed(stack.len()), span: span_of(open, open.end) });
    }
    Ok(top)
}

/// Parses text expected to hold exactly one form.
pub fn parse_one(file: &str, text: &str) -> Result<SurfaceTerm, ParseError> {
    let mut forms = parse(file, text)?;
    if forms.len() == 1 {
        Ok(forms.pop().unwrap())
    } else {
        // Several forms are read as one application-shaped list.
        let span = Span { file: Arc::from(file), offset: 0, line: 1, col: 1, len: text.chars().count() as u32 };
        Ok(SurfaceTerm::list(forms, span))
    }
}
