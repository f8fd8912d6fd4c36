use crate::diag::{codes, Diagnostic, SourceSpan};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Int(u64),
    LBrace,
    RBrace,
    Comma,
    Semi,
    Colon,
    Arrow,
    Dot,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(n) => format!("`{n}`"),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Dot => "`.`".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Tokenizes one line. Comments run from `#` to the end of the line.
pub(crate) fn lex_line(line_no: u32, line: &str) -> Result<Vec<Token>, Diagnostic> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let span = |start: usize, len: usize| SourceSpan::new(line_no, start as u32 + 1, len as u32);
    while i < chars.len() {
        let c = chars[i];
        if c == '#' {
            break;
        }
        if c == ' ' || c == '\t' {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            ',' => Tok::Comma,
            ';' => Tok::Semi,
            ':' => Tok::Colon,
            '.' => Tok::Dot,
            '-' if chars.get(i + 1) == Some(&'>') => {
                i += 1;
                Tok::Arrow
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i + 1 < chars.len() {
                    let n = chars[i + 1];
                    // a hyphen belongs to the name only when a name character follows
                    let hyphen = n == '-' && chars.get(i + 2).is_some_and(|c| is_ident_char(*c));
                    if is_ident_char(n) || hyphen {
                        i += 1;
                    } else {
                        break;
                    }
                }
                Tok::Ident(chars[start..=i].iter().collect())
            }
            c if c.is_ascii_digit() => {
                while i + 1 < chars.len() && chars[i + 1].is_ascii_digit() {
                    i += 1;
                }
                let text: String = chars[start..=i].iter().collect();
                match text.parse() {
                    Ok(n) => Tok::Int(n),
                    Err(_) => {
                        return Err(Diagnostic::error(
                            codes::LEXICAL_ERROR,
                            format!("integer `{text}` is too large"),
                            Some(span(start, i - start + 1)),
                        ))
                    }
                }
            }
            other => {
                return Err(Diagnostic::error(
                    codes::LEXICAL_ERROR,
                    format!("unexpected character `{}`", other.escape_default()),
                    Some(span(start, 1)),
                ))
            }
        };
        i += 1;
        out.push(Token {
            tok,
            span: span(start, i - start),
        });
    }
    Ok(out)
}
