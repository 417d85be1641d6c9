//! Token quoting and a small s-expression lexer shared by the bracketed
//! tree format, the grammar file and the model files.

use std::borrow::Cow;

/// True if `s` cannot be written bare inside a bracketed expression.
pub fn needs_quotes(s: &str) -> bool {
    s.is_empty()
        || s.starts_with('"')
        || s.chars()
            .any(|c| c.is_whitespace() || c == '(' || c == ')' || c == '\\')
}

/// Quote `s` if it would otherwise be ambiguous.
pub fn quote(s: &str) -> Cow<'_, str> {
    if needs_quotes(s) {
        Cow::Owned(force_quote(s))
    } else {
        Cow::Borrowed(s)
    }
}

pub fn force_quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            _ => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Escape a token for whitespace-separated model files.
pub fn escape_field(s: &str) -> Cow<'_, str> {
    if s.is_empty() {
        return Cow::Borrowed("\\0");
    }
    if !s.chars().any(|c| c == '\\' || c.is_whitespace()) {
        return Cow::Borrowed(s);
    }
    let mut out = String::with_capacity(s.len() + 4);
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            ' ' => out.push_str("\\s"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            _ => out.push(c),
        }
    }
    Cow::Owned(out)
}

pub fn unescape_field(s: &str) -> String {
    if s == "\\0" {
        return String::new();
    }
    if !s.contains('\\') {
        return s.to_string();
    }
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('s') => out.push(' '),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some(other) => out.push(other),
            None => out.push('\\'),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SexpToken {
    Open,
    Close,
    /// Atom text and whether it was written quoted.
    Atom(String, bool),
}

/// Split bracketed text into tokens; returns the byte offset of an
/// unterminated quote on failure.
pub fn lex_sexp(text: &str) -> Result<Vec<SexpToken>, usize> {
    let mut tokens = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(pos, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c == '(' {
            chars.next();
            tokens.push(SexpToken::Open);
        } else if c == ')' {
            chars.next();
            tokens.push(SexpToken::Close);
        } else if c == '"' {
            chars.next();
            let mut atom = String::new();
            let mut closed = false;
            while let Some((_, c)) = chars.next() {
                match c {
                    '"' => {
                        closed = true;
                        break;
                    }
                    '\\' => match chars.next() {
                        Some((_, 't')) => atom.push('\t'),
                        Some((_, 'n')) => atom.push('\n'),
                        Some((_, other)) => atom.push(other),
                        None => return Err(pos),
                    },
                    other => atom.push(other),
                }
            }
            if !closed {
                return Err(pos);
            }
            tokens.push(SexpToken::Atom(atom, true));
        } else {
            let mut atom = String::new();
            while let Some(&(_, c)) = chars.peek() {
                if c.is_whitespace() || c == '(' || c == ')' {
                    break;
                }
                atom.push(c);
                chars.next();
            }
            tokens.push(SexpToken::Atom(atom, false));
        }
    }
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quoting_round_trips_through_lexer() {
        for s in ["plain", "\"New York\"", "a b", "(", "back\\slash", ""] {
            let written = quote(s);
            let toks = lex_sexp(&written).unwrap();
            assert_eq!(toks.len(), 1);
            match &toks[0] {
                SexpToken::Atom(a, _) => assert_eq!(a, s),
                t => panic!("unexpected {t:?}"),
            }
        }
    }

    #[test]
    fn field_escape_round_trips() {
        for s in ["x", "\"New York\"", "tab\there", "", "a\\s"] {
            let e = escape_field(s);
            assert!(!e.contains(' ') && !e.contains('\t'));
            assert_eq!(unescape_field(&e), s);
        }
    }

    #[test]
    fn unterminated_quote_is_reported() {
        assert_eq!(lex_sexp("(a \"bc"), Err(3));
    }
}
