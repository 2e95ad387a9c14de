use alloc::string::String;
use alloc::vec::Vec;

use super::SyntaxError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Int(i64),
    Float(f64),
    Str(String),
    /// Identifier, keyword, or all-caps variable.
    Ident(String),
    /// Capitalized identifier with a lower-case letter: constructor or
    /// type name.
    Upper(String),
    Sym(&'static str),
    Eof,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

const SYMBOLS: [&str; 26] = [
    "->", "||", "&&", "==", "!=", "<=", ">=", "++", "(", ")", "{", "}", "[", "]", ",", ";", ":", "=", "|", "<", ">",
    "+", "-", "*", "/", "\\",
];

pub fn lex(src: &str) -> Result<Vec<Token>, SyntaxError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, c: char| {
        *i += 1;
        if c == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, c);
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (tl, tc) = (line, col);
        let tok = if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let mut float = false;
            if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                float = true;
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '-' || chars[j] == '+') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    float = true;
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            col += i - start;
            if float {
                Tok::Float(text.parse().map_err(|_| SyntaxError::new(tl, tc, "malformed number"))?)
            } else {
                Tok::Int(
                    text.parse()
                        .map_err(|_| SyntaxError::new(tl, tc, "integer literal out of range"))?,
                )
            }
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            col += i - start;
            // all-caps names such as `R` or `X1` are variables
            if c.is_uppercase() && text.chars().any(char::is_lowercase) {
                Tok::Upper(text)
            } else {
                Tok::Ident(text)
            }
        } else if c == '"' {
            let mut s = String::new();
            advance(&mut i, &mut line, &mut col, c);
            loop {
                let Some(&ch) = chars.get(i) else {
                    return Err(SyntaxError::new(tl, tc, "unterminated string literal"));
                };
                advance(&mut i, &mut line, &mut col, ch);
                match ch {
                    '"' => break,
                    '\\' => {
                        let Some(&esc) = chars.get(i) else {
                            return Err(SyntaxError::new(tl, tc, "unterminated string literal"));
                        };
                        advance(&mut i, &mut line, &mut col, esc);
                        s.push(match esc {
                            'n' => '\n',
                            't' => '\t',
                            '"' => '"',
                            '\\' => '\\',
                            _ => return Err(SyntaxError::new(line, col, "unknown escape sequence")),
                        });
                    }
                    ch => s.push(ch),
                }
            }
            Tok::Str(s)
        } else if c == '@' {
            i += 1;
            col += 1;
            Tok::Sym("@")
        } else {
            let sym = SYMBOLS.iter().find(|s| {
                let sc: Vec<char> = s.chars().collect();
                chars[i..].starts_with(&sc)
            });
            match sym {
                Some(s) => {
                    i += s.len();
                    col += s.len();
                    Tok::Sym(s)
                }
                None => return Err(SyntaxError::new(tl, tc, &alloc::format!("unexpected character `{c}`"))),
            }
        };
        out.push(Token { tok, line: tl, col: tc });
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}
