use super::ast::Span;
use super::SyntaxError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Semi,
    Colon,
    Dot,
    Amp,
    Bar,
    Bang,
    Arrow,
    DArrow,
    Minus,
    Le,
    Lt,
    Eq,
    Ne,
    Ge,
    Gt,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::Comma => ",",
            Tok::Semi => ";",
            Tok::Colon => ":",
            Tok::Dot => ".",
            Tok::Amp => "&",
            Tok::Bar => "|",
            Tok::Bang => "!",
            Tok::Arrow => "->",
            Tok::DArrow => "<->",
            Tok::Minus => "-",
            Tok::Le => "<=",
            Tok::Lt => "<",
            Tok::Eq => "=",
            Tok::Ne => "!=",
            Tok::Ge => ">=",
            Tok::Gt => ">",
            Tok::Ident(_) | Tok::Eof => "",
        }
    }
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<(Tok, Span)>, SyntaxError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let span = Span { line, column: col };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            out.push((Tok::Ident(chars[start..i].iter().collect()), span));
            continue;
        }
        let next = chars.get(i + 1).copied();
        let next2 = chars.get(i + 2).copied();
        let (tok, len) = match (c, next, next2) {
            ('<', Some('-'), Some('>')) => (Tok::DArrow, 3),
            ('-', Some('>'), _) => (Tok::Arrow, 2),
            ('<', Some('='), _) => (Tok::Le, 2),
            ('>', Some('='), _) => (Tok::Ge, 2),
            ('!', Some('='), _) => (Tok::Ne, 2),
            ('{', ..) => (Tok::LBrace, 1),
            ('}', ..) => (Tok::RBrace, 1),
            ('(', ..) => (Tok::LParen, 1),
            (')', ..) => (Tok::RParen, 1),
            (',', ..) => (Tok::Comma, 1),
            (';', ..) => (Tok::Semi, 1),
            (':', ..) => (Tok::Colon, 1),
            ('.', ..) => (Tok::Dot, 1),
            ('&', ..) => (Tok::Amp, 1),
            ('|', ..) => (Tok::Bar, 1),
            ('!', ..) => (Tok::Bang, 1),
            ('-', ..) => (Tok::Minus, 1),
            ('<', ..) => (Tok::Lt, 1),
            ('=', ..) => (Tok::Eq, 1),
            ('>', ..) => (Tok::Gt, 1),
            _ => {
                return Err(SyntaxError::new(span, format!("unexpected character `{c}`")));
            }
        };
        out.push((tok, span));
        i += len;
        col += len;
    }
    out.push((Tok::Eof, Span { line, column: col }));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transition_arrow_splits_into_minus_ident_arrow() {
        let toks: Vec<Tok> = tokenize("f -t-> b;").unwrap().into_iter().map(|(t, _)| t).collect();
        assert_eq!(
            toks,
            vec![
                Tok::Ident("f".into()),
                Tok::Minus,
                Tok::Ident("t".into()),
                Tok::Arrow,
                Tok::Ident("b".into()),
                Tok::Semi,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn comments_and_positions() {
        let toks = tokenize("# header\n  x <-> y").unwrap();
        assert_eq!(toks[0].1, Span { line: 2, column: 3 });
        assert_eq!(toks[0].1.line, 2);
        assert_eq!(toks[0].1.column, 3);
        assert_eq!(toks[1].0, Tok::DArrow);
    }

    #[test]
    fn bad_character() {
        let err = tokenize("a $ b").unwrap_err();
        assert_eq!((err.line, err.column), (1, 3));
    }
}
