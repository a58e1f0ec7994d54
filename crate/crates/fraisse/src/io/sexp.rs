//! S-expressions with source spans: the concrete syntax for every file the
//! tool reads or writes. Atoms are bare symbols (no string literals — names
//! in this domain never need quoting); `;` starts a line comment.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

impl Span {
    pub fn start() -> Span {
        Span { line: 1, col: 1 }
    }
}

#[derive(Debug, Clone)]
pub enum Sexp {
    Atom { text: String, span: Span },
    List { items: Vec<Sexp>, span: Span },
}

/// Machine-readable diagnostic category; the display form is stable and
/// golden-file tested.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagCode {
    Lex,
    Syntax,
    Arity,
    Undeclared,
    IllSorted,
}

impl DiagCode {
    pub fn tag(self) -> &'static str {
        match self {
            DiagCode::Lex => "lex",
            DiagCode::Syntax => "syntax",
            DiagCode::Arity => "arity-mismatch",
            DiagCode::Undeclared => "undeclared-symbol",
            DiagCode::IllSorted => "ill-sorted-term",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Diagnostic {
    pub code: DiagCode,
    pub span: Span,
    pub msg: String,
}

impl Diagnostic {
    pub fn new(code: DiagCode, span: Span, msg: impl Into<String>) -> Diagnostic {
        Diagnostic { code, span, msg: msg.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error[{}] at {}:{}: {}", self.code.tag(), self.span.line, self.span.col, self.msg)
    }
}

impl From<Diagnostic> for crate::error::Error {
    fn from(d: Diagnostic) -> crate::error::Error {
        crate::error::Error::Parse {
            line: d.span.line,
            col: d.span.col,
            msg: format!("[{}] {}", d.code.tag(), d.msg),
        }
    }
}

impl Sexp {
    pub fn span(&self) -> Span {
        match self {
            Sexp::Atom { span, .. } | Sexp::List { span, .. } => *span,
        }
    }

    pub fn atom(text: impl Into<String>) -> Sexp {
        Sexp::Atom { text: text.into(), span: Span::start() }
    }

    pub fn list(items: Vec<Sexp>) -> Sexp {
        Sexp::List { items, span: Span::start() }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom { text, .. } => Some(text),
            Sexp::List { .. } => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List { items, .. } => Some(items),
            Sexp::Atom { .. } => None,
        }
    }

    /// Head atom of a list form, if any.
    pub fn head(&self) -> Option<&str> {
        self.as_list()?.first()?.as_atom()
    }

    /// Structural equality ignoring spans.
    pub fn same_tree(&self, other: &Sexp) -> bool {
        match (self, other) {
            (Sexp::Atom { text: a, .. }, Sexp::Atom { text: b, .. }) => a == b,
            (Sexp::List { items: a, .. }, Sexp::List { items: b, .. }) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.same_tree(y))
            }
            _ => false,
        }
    }
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexp::Atom { text, .. } => write!(f, "{text}"),
            Sexp::List { items, .. } => {
                write!(f, "(")?;
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{it}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Canonical single-line form; `parse(print(t))` returns `t` up to spans,
/// and `print(parse(s)) == s` whenever `s` is already canonical.
pub fn print(forms: &[Sexp]) -> String {
    forms.iter().map(|s| s.to_string()).collect::<Vec<_>>().join("\n")
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

#[derive(Debug)]
enum Token {
    Open(Span),
    Close(Span),
    Atom(String, Span),
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Lexer<'a> {
        Lexer { src: src.as_bytes(), pos: 0, line: 1, col: 1 }
    }

    fn here(&self) -> Span {
        Span { line: self.line, col: self.col }
    }

    fn bump(&mut self) -> u8 {
        let c = self.src[self.pos];
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        c
    }

    fn next(&mut self) -> Result<Option<Token>, Diagnostic> {
        loop {
            if self.pos >= self.src.len() {
                return Ok(None);
            }
            let span = self.here();
            let c = self.src[self.pos];
            match c {
                b' ' | b'\t' | b'\r' | b'\n' => {
                    self.bump();
                }
                b';' => {
                    while self.pos < self.src.len() && self.src[self.pos] != b'\n' {
                        self.bump();
                    }
                }
                b'(' => {
                    self.bump();
                    return Ok(Some(Token::Open(span)));
                }
                b')' => {
                    self.bump();
                    return Ok(Some(Token::Close(span)));
                }
                _ => {
                    if !atom_byte(c) {
                        return Err(Diagnostic::new(
                            DiagCode::Lex,
                            span,
                            format!("unexpected character `{}`", c as char),
                        ));
                    }
                    let mut text = String::new();
                    while self.pos < self.src.len() && atom_byte(self.src[self.pos]) {
                        text.push(self.bump() as char);
                    }
                    return Ok(Some(Token::Atom(text, span)));
                }
            }
        }
    }
}

fn atom_byte(c: u8) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, b'-' | b'_' | b'=' | b'>' | b'<' | b'*' | b'+' | b'.' | b'/' | b'!' | b'?')
}

/// Parses a document: a sequence of top-level forms.
pub fn parse(src: &str) -> Result<Vec<Sexp>, Diagnostic> {
    let mut lex = Lexer::new(src);
    let mut stack: Vec<(Span, Vec<Sexp>)> = Vec::new();
    let mut top: Vec<Sexp> = Vec::new();
    while let Some(tok) = lex.next()? {
        match tok {
            Token::Open(span) => stack.push((span, Vec::new())),
            Token::Close(span) => {
                let Some((start, items)) = stack.pop() else {
                    return Err(Diagnostic::new(DiagCode::Syntax, span, "unmatched `)`"));
                };
                let form = Sexp::List { items, span: start };
                match stack.last_mut() {
                    Some((_, parent)) => parent.push(form),
                    None => top.push(form),
                }
            }
            Token::Atom(text, span) => {
                let form = Sexp::Atom { text, span };
                match stack.last_mut() {
                    Some((_, parent)) => parent.push(form),
                    None => top.push(form),
                }
            }
        }
    }
    if let Some((span, _)) = stack.pop() {
        return Err(Diagnostic::new(DiagCode::Syntax, span, "unclosed `(`"));
    }
    Ok(top)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_an_empty_doc() {
        assert!(parse("").unwrap().is_empty());
        assert!(parse("; just a comment\n").unwrap().is_empty());
    }

    #[test]
    fn round_trips() {
        let src = "(age k (over g) (constraints (forall ((x v)) (=> true (= x x)))))";
        let doc = parse(src).unwrap();
        assert_eq!(print(&doc), src);
        let again = parse(&print(&doc)).unwrap();
        assert!(doc[0].same_tree(&again[0]));
    }

    #[test]
    fn spans_point_at_the_problem() {
        let err = parse("(a\n  (b @))").unwrap_err();
        assert_eq!(err.code, DiagCode::Lex);
        assert_eq!((err.span.line, err.span.col), (2, 6));
        let err = parse("(a))").unwrap_err();
        assert_eq!(err.code, DiagCode::Syntax);
        let err = parse("((a)").unwrap_err();
        assert_eq!(err.code, DiagCode::Syntax);
    }
}
