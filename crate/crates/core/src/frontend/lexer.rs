//! Indentation-aware tokenizer for `.stpy` sources.

use crate::diag::{Diagnostic, Pos};

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Name(String),
    /// Numeric lexeme; `is_int` when it has no fraction or exponent.
    Number {
        text: String,
        is_int: bool,
    },
    Str(String),
    Punct(&'static str),
    Newline,
    Indent,
    Dedent,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Name(n) => format!("`{n}`"),
            Tok::Number { text, .. } => format!("number `{text}`"),
            Tok::Str(s) => format!("string \"{s}\""),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Newline => "end of line".into(),
            Tok::Indent => "indentation".into(),
            Tok::Dedent => "dedent".into(),
            Tok::Eof => "end of file".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

const PUNCTS: &[&str] = &[
    "->", "...", "(", ")", "[", "]", ",", ":", ".", "=", "+", "-", "*", "/", "@",
];

pub fn tokenize(src: &str) -> Result<Vec<Token>, Diagnostic> {
    let mut out = Vec::new();
    let mut indents: Vec<usize> = vec![0];
    let mut depth = 0usize;

    for (lineno, line) in src.lines().enumerate() {
        let line_no = lineno as u32 + 1;
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;

        if depth == 0 {
            let mut width = 0;
            while i < chars.len() && (chars[i] == ' ' || chars[i] == '\t') {
                width = if chars[i] == '\t' {
                    (width / 8 + 1) * 8
                } else {
                    width + 1
                };
                i += 1;
            }
            if i >= chars.len() || chars[i] == '#' {
                continue;
            }
            let pos = Pos::new(line_no, i as u32 + 1);
            let cur = *indents.last().unwrap();
            if width > cur {
                indents.push(width);
                out.push(Token {
                    tok: Tok::Indent,
                    pos,
                });
            } else {
                while width < *indents.last().unwrap() {
                    indents.pop();
                    out.push(Token {
                        tok: Tok::Dedent,
                        pos,
                    });
                }
                if width != *indents.last().unwrap() {
                    return Err(Diagnostic::error(pos, "inconsistent indentation"));
                }
            }
        }

        while i < chars.len() {
            let c = chars[i];
            let pos = Pos::new(line_no, i as u32 + 1);
            if c == ' ' || c == '\t' || c == '\r' {
                i += 1;
                continue;
            }
            if c == '#' {
                break;
            }
            if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Token {
                    tok: Tok::Name(chars[start..i].iter().collect()),
                    pos,
                });
                continue;
            }
            if c.is_ascii_digit()
                || (c == '.' && chars.get(i + 1).is_some_and(char::is_ascii_digit))
            {
                let start = i;
                let mut is_int = true;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                if i < chars.len() && chars[i] == '.' {
                    is_int = false;
                    i += 1;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        is_int = false;
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                if i < chars.len() && (chars[i].is_ascii_alphabetic() || chars[i] == '_') {
                    return Err(Diagnostic::error(
                        Pos::new(line_no, i as u32 + 1),
                        "malformed numeric literal",
                    ));
                }
                out.push(Token {
                    tok: Tok::Number {
                        text: chars[start..i].iter().collect(),
                        is_int,
                    },
                    pos,
                });
                continue;
            }
            if c == '"' || c == '\'' {
                let start = i + 1;
                let mut j = start;
                while j < chars.len() && chars[j] != c {
                    j += 1;
                }
                if j >= chars.len() {
                    return Err(Diagnostic::error(pos, "unterminated string literal"));
                }
                out.push(Token {
                    tok: Tok::Str(chars[start..j].iter().collect()),
                    pos,
                });
                i = j + 1;
                continue;
            }
            let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
            match PUNCTS.iter().find(|p| rest.starts_with(**p)) {
                Some(p) => {
                    match *p {
                        "(" | "[" => depth += 1,
                        ")" | "]" => {
                            if depth == 0 {
                                return Err(Diagnostic::error(pos, format!("unbalanced `{p}`")));
                            }
                            depth -= 1;
                        }
                        _ => {}
                    }
                    out.push(Token {
                        tok: Tok::Punct(p),
                        pos,
                    });
                    i += p.len();
                }
                None => {
                    return Err(Diagnostic::error(
                        pos,
                        format!("unexpected character `{c}`"),
                    ));
                }
            }
        }

        if depth == 0
            && !matches!(
                out.last(),
                None | Some(Token {
                    tok: Tok::Newline,
                    ..
                })
            )
        {
            out.push(Token {
                tok: Tok::Newline,
                pos: Pos::new(line_no, chars.len() as u32 + 1),
            });
        }
    }

    let end = Pos::new(src.lines().count() as u32 + 1, 1);
    if depth != 0 {
        return Err(Diagnostic::error(
            end,
            "unclosed parenthesis at end of file",
        ));
    }
    while indents.len() > 1 {
        indents.pop();
        out.push(Token {
            tok: Tok::Dedent,
            pos: end,
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        pos: end,
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<Tok> {
        tokenize(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn continuation_inside_parens_has_no_newline() {
        let toks = kinds("f(1,\n  2)\n");
        assert_eq!(toks.iter().filter(|t| **t == Tok::Newline).count(), 1);
        assert!(!toks.contains(&Tok::Indent));
    }

    #[test]
    fn indentation_produces_balanced_blocks() {
        let toks = kinds("def f():\n  x\n  y\nz\n");
        let ind = toks.iter().filter(|t| **t == Tok::Indent).count();
        let ded = toks.iter().filter(|t| **t == Tok::Dedent).count();
        assert_eq!((ind, ded), (1, 1));
    }

    #[test]
    fn numbers_classify_int_and_float() {
        let toks = kinds("4 0.25 1e-3 2.\n");
        let ints: Vec<bool> = toks
            .iter()
            .filter_map(|t| match t {
                Tok::Number { is_int, .. } => Some(*is_int),
                _ => None,
            })
            .collect();
        assert_eq!(ints, vec![true, false, false, false]);
    }

    #[test]
    fn bad_dedent_is_reported() {
        let err = tokenize("def f():\n    x\n  y\n").unwrap_err();
        assert_eq!(err.pos.line, 3);
    }
}
