// SPDX-License-Identifier: Apache-2.0

//! Tokenizer shared by the RTL and SVA front ends.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Ident(String),
    /// `$name` system identifiers such as `$past` or `$error`.
    SysIdent(String),
    Number { value: u64, width: Option<u32> },
    Str(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Semi,
    Colon,
    At,
    Hash,
    DoubleHash,
    Assign,
    NonBlocking,
    EqEq,
    NotEq,
    Bang,
    Tilde,
    Amp,
    AndAnd,
    Pipe,
    OrOr,
    Caret,
    Plus,
    Minus,
    Star,
    Question,
    Lt,
    Gt,
    Dot,
    Backtick,
    /// `|->`
    Implies,
    /// `|=>`
    ImpliesNext,
    Eof,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TokenKind::Ident(name) => return write!(f, "identifier `{name}`"),
            TokenKind::SysIdent(name) => return write!(f, "`${name}`"),
            TokenKind::Number { .. } => "number",
            TokenKind::Str(_) => "string literal",
            TokenKind::LParen => "`(`",
            TokenKind::RParen => "`)`",
            TokenKind::LBracket => "`[`",
            TokenKind::RBracket => "`]`",
            TokenKind::LBrace => "`{`",
            TokenKind::RBrace => "`}`",
            TokenKind::Comma => "`,`",
            TokenKind::Semi => "`;`",
            TokenKind::Colon => "`:`",
            TokenKind::At => "`@`",
            TokenKind::Hash => "`#`",
            TokenKind::DoubleHash => "`##`",
            TokenKind::Assign => "`=`",
            TokenKind::NonBlocking => "`<=`",
            TokenKind::EqEq => "`==`",
            TokenKind::NotEq => "`!=`",
            TokenKind::Bang => "`!`",
            TokenKind::Tilde => "`~`",
            TokenKind::Amp => "`&`",
            TokenKind::AndAnd => "`&&`",
            TokenKind::Pipe => "`|`",
            TokenKind::OrOr => "`||`",
            TokenKind::Caret => "`^`",
            TokenKind::Plus => "`+`",
            TokenKind::Minus => "`-`",
            TokenKind::Star => "`*`",
            TokenKind::Question => "`?`",
            TokenKind::Lt => "`<`",
            TokenKind::Gt => "`>`",
            TokenKind::Dot => "`.`",
            TokenKind::Backtick => "`` ` ``",
            TokenKind::Implies => "`|->`",
            TokenKind::ImpliesNext => "`|=>`",
            TokenKind::Eof => "end of input",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub line: usize,
    pub column: usize,
}

/// A parse failure with its 1-based source location.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: expected {expected}, found {found}")]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub expected: String,
    pub found: String,
}

impl SyntaxError {
    pub fn at(token: &Token, expected: impl Into<String>) -> Self {
        SyntaxError {
            line: token.line,
            column: token.column,
            expected: expected.into(),
            found: token.kind.to_string(),
        }
    }

    /// Formats the error with the offending source line and a caret.
    pub fn render(&self, source: &str) -> String {
        render_excerpt(source, self.line, self.column, &self.to_string())
    }
}

pub fn render_excerpt(source: &str, line: usize, column: usize, message: &str) -> String {
    let text = source.lines().nth(line.saturating_sub(1)).unwrap_or("");
    let gutter = format!("{line}");
    format!(
        "error: {message}\n{pad} |\n{gutter} | {text}\n{pad} | {caret:>col$}",
        pad = " ".repeat(gutter.len()),
        caret = "^",
        col = column.max(1),
    )
}

pub fn tokenize(source: &str) -> Result<Vec<Token>, SyntaxError> {
    Lexer::new(source).run()
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    column: usize,
}

impl Lexer {
    fn new(source: &str) -> Self {
        Lexer {
            chars: source.chars().collect(),
            pos: 0,
            line: 1,
            column: 1,
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<char> {
        self.chars.get(self.pos + offset).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn error(&self, line: usize, column: usize, expected: &str, found: String) -> SyntaxError {
        SyntaxError {
            line,
            column,
            expected: expected.to_string(),
            found,
        }
    }

    fn skip_trivia(&mut self) -> Result<(), SyntaxError> {
        loop {
            match (self.peek(), self.peek_at(1)) {
                (Some(c), _) if c.is_whitespace() => {
                    self.bump();
                }
                (Some('/'), Some('/')) => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                (Some('/'), Some('*')) => {
                    let (line, column) = (self.line, self.column);
                    self.bump();
                    self.bump();
                    loop {
                        match (self.peek(), self.peek_at(1)) {
                            (Some('*'), Some('/')) => {
                                self.bump();
                                self.bump();
                                break;
                            }
                            (Some(_), _) => {
                                self.bump();
                            }
                            (None, _) => {
                                return Err(self.error(
                                    line,
                                    column,
                                    "`*/` closing block comment",
                                    "end of input".into(),
                                ))
                            }
                        }
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn run(mut self) -> Result<Vec<Token>, SyntaxError> {
        let mut out = Vec::new();
        loop {
            self.skip_trivia()?;
            let (line, column) = (self.line, self.column);
            let Some(c) = self.peek() else {
                out.push(Token {
                    kind: TokenKind::Eof,
                    line,
                    column,
                });
                return Ok(out);
            };
            let kind = if c.is_ascii_alphabetic() || c == '_' {
                TokenKind::Ident(self.word())
            } else if c == '$' {
                self.bump();
                let name = self.word();
                if name.is_empty() {
                    return Err(self.error(line, column, "system task name after `$`", "`$`".into()));
                }
                TokenKind::SysIdent(name)
            } else if c.is_ascii_digit() || (c == '\'' && self.peek_at(1).is_some_and(is_base_char)) {
                self.number(line, column)?
            } else if c == '"' {
                self.string(line, column)?
            } else {
                self.punct(line, column)?
            };
            out.push(Token { kind, line, column });
        }
    }

    fn word(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '_' || c == '$' {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        s
    }

    fn digits(&mut self, accept: impl Fn(char) -> bool) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if c == '_' {
                self.bump();
            } else if accept(c) {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        s
    }

    fn number(&mut self, line: usize, column: usize) -> Result<TokenKind, SyntaxError> {
        let size = self.digits(|c| c.is_ascii_digit());
        if self.peek() != Some('\'') {
            let value = size
                .parse::<u64>()
                .map_err(|_| self.error(line, column, "a number that fits in 64 bits", size.clone()))?;
            return Ok(TokenKind::Number { value, width: None });
        }
        self.bump();
        let base_char = self
            .bump()
            .filter(|c| is_base_char(*c))
            .ok_or_else(|| self.error(line, column, "base specifier (b, o, d, h)", "`'`".into()))?;
        let radix = match base_char.to_ascii_lowercase() {
            'b' => 2,
            'o' => 8,
            'd' => 10,
            _ => 16,
        };
        let body = self.digits(|c| c.is_ascii_alphanumeric());
        if body.chars().any(|c| matches!(c.to_ascii_lowercase(), 'x' | 'z' | '?')) {
            return Err(self.error(line, column, "two-state literal (no x/z digits)", body));
        }
        let value = u64::from_str_radix(&body, radix)
            .map_err(|_| self.error(line, column, "valid literal digits", body.clone()))?;
        let width = if size.is_empty() {
            None
        } else {
            let w: u32 = size
                .parse()
                .map_err(|_| self.error(line, column, "literal width", size.clone()))?;
            if w == 0 || w > 64 {
                return Err(self.error(line, column, "literal width between 1 and 64", size));
            }
            if w < 64 && value >> w != 0 {
                return Err(self.error(
                    line,
                    column,
                    &format!("literal value that fits in {w} bits"),
                    body,
                ));
            }
            Some(w)
        };
        Ok(TokenKind::Number { value, width })
    }

    fn string(&mut self, line: usize, column: usize) -> Result<TokenKind, SyntaxError> {
        self.bump();
        let mut s = String::new();
        loop {
            match self.bump() {
                Some('"') => return Ok(TokenKind::Str(s)),
                Some('\\') => match self.bump() {
                    Some('n') => s.push('\n'),
                    Some('t') => s.push('\t'),
                    Some(c) => s.push(c),
                    None => break,
                },
                Some('\n') | None => break,
                Some(c) => s.push(c),
            }
        }
        Err(self.error(line, column, "closing `\"`", "end of line".into()))
    }

    fn punct(&mut self, line: usize, column: usize) -> Result<TokenKind, SyntaxError> {
        let c = self.bump().unwrap_or('\0');
        let next = self.peek();
        let kind = match (c, next) {
            ('|', Some('-')) if self.peek_at(1) == Some('>') => {
                self.bump();
                self.bump();
                TokenKind::Implies
            }
            ('|', Some('=')) if self.peek_at(1) == Some('>') => {
                self.bump();
                self.bump();
                TokenKind::ImpliesNext
            }
            ('|', Some('|')) => {
                self.bump();
                TokenKind::OrOr
            }
            ('&', Some('&')) => {
                self.bump();
                TokenKind::AndAnd
            }
            ('=', Some('=')) => {
                self.bump();
                TokenKind::EqEq
            }
            ('!', Some('=')) => {
                self.bump();
                TokenKind::NotEq
            }
            ('<', Some('=')) => {
                self.bump();
                TokenKind::NonBlocking
            }
            ('#', Some('#')) => {
                self.bump();
                TokenKind::DoubleHash
            }
            ('|', _) => TokenKind::Pipe,
            ('&', _) => TokenKind::Amp,
            ('=', _) => TokenKind::Assign,
            ('!', _) => TokenKind::Bang,
            ('<', _) => TokenKind::Lt,
            ('#', _) => TokenKind::Hash,
            ('(', _) => TokenKind::LParen,
            (')', _) => TokenKind::RParen,
            ('[', _) => TokenKind::LBracket,
            (']', _) => TokenKind::RBracket,
            ('{', _) => TokenKind::LBrace,
            ('}', _) => TokenKind::RBrace,
            (',', _) => TokenKind::Comma,
            (';', _) => TokenKind::Semi,
            (':', _) => TokenKind::Colon,
            ('@', _) => TokenKind::At,
            ('~', _) => TokenKind::Tilde,
            ('^', _) => TokenKind::Caret,
            ('+', _) => TokenKind::Plus,
            ('-', _) => TokenKind::Minus,
            ('*', _) => TokenKind::Star,
            ('?', _) => TokenKind::Question,
            ('>', _) => TokenKind::Gt,
            ('.', _) => TokenKind::Dot,
            ('`', _) => TokenKind::Backtick,
            (other, _) => {
                return Err(self.error(line, column, "a token", format!("`{other}`")));
            }
        };
        Ok(kind)
    }
}

fn is_base_char(c: char) -> bool {
    matches!(c.to_ascii_lowercase(), 'b' | 'o' | 'd' | 'h')
}

/// Cursor over a token vector used by the recursive-descent parsers.
pub(crate) struct Cursor {
    tokens: Vec<Token>,
    pos: usize,
}

impl Cursor {
    pub(crate) fn new(tokens: Vec<Token>) -> Self {
        Cursor { tokens, pos: 0 }
    }

    pub(crate) fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    pub(crate) fn peek_kind(&self) -> &TokenKind {
        &self.peek().kind
    }

    pub(crate) fn peek_nth(&self, n: usize) -> &TokenKind {
        &self.tokens[(self.pos + n).min(self.tokens.len() - 1)].kind
    }

    pub(crate) fn bump(&mut self) -> Token {
        let t = self.peek().clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn at(&self, kind: &TokenKind) -> bool {
        self.peek_kind() == kind
    }

    pub(crate) fn at_keyword(&self, word: &str) -> bool {
        matches!(self.peek_kind(), TokenKind::Ident(w) if w == word)
    }

    pub(crate) fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.at(kind) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(crate) fn eat_keyword(&mut self, word: &str) -> bool {
        if self.at_keyword(word) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(crate) fn expect(&mut self, kind: &TokenKind) -> Result<Token, SyntaxError> {
        if self.at(kind) {
            Ok(self.bump())
        } else {
            Err(SyntaxError::at(self.peek(), kind.to_string()))
        }
    }

    pub(crate) fn expect_keyword(&mut self, word: &str) -> Result<Token, SyntaxError> {
        if self.at_keyword(word) {
            Ok(self.bump())
        } else {
            Err(SyntaxError::at(self.peek(), format!("`{word}`")))
        }
    }

    pub(crate) fn expect_ident(&mut self, what: &str) -> Result<(String, Token), SyntaxError> {
        match self.peek_kind().clone() {
            TokenKind::Ident(name) => Ok((name, self.bump())),
            _ => Err(SyntaxError::at(self.peek(), what)),
        }
    }

    pub(crate) fn expect_number(&mut self, what: &str) -> Result<(u64, Option<u32>), SyntaxError> {
        match *self.peek_kind() {
            TokenKind::Number { value, width } => {
                self.bump();
                Ok((value, width))
            }
            _ => Err(SyntaxError::at(self.peek(), what)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize(src).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn implication_operators_are_single_tokens() {
        assert_eq!(
            kinds("a |-> b |=> c || d | e"),
            vec![
                TokenKind::Ident("a".into()),
                TokenKind::Implies,
                TokenKind::Ident("b".into()),
                TokenKind::ImpliesNext,
                TokenKind::Ident("c".into()),
                TokenKind::OrOr,
                TokenKind::Ident("d".into()),
                TokenKind::Pipe,
                TokenKind::Ident("e".into()),
                TokenKind::Eof,
            ]
        );
    }

    #[test]
    fn sized_literals() {
        assert_eq!(
            kinds("12'h300 2'b1_1 'd7 42"),
            vec![
                TokenKind::Number { value: 0x300, width: Some(12) },
                TokenKind::Number { value: 3, width: Some(2) },
                TokenKind::Number { value: 7, width: None },
                TokenKind::Number { value: 42, width: None },
                TokenKind::Eof,
            ]
        );
    }

    #[test]
    fn rejects_four_state_digits() {
        let err = tokenize("4'b10x1").unwrap_err();
        assert_eq!((err.line, err.column), (1, 1));
        assert!(err.expected.contains("two-state"));
    }

    #[test]
    fn rejects_oversized_literal() {
        assert!(tokenize("2'd7").is_err());
    }

    #[test]
    fn comments_and_positions() {
        let toks = tokenize("// hi\n  /* block\n */ foo").unwrap();
        assert_eq!(toks[0].kind, TokenKind::Ident("foo".into()));
        assert_eq!((toks[0].line, toks[0].column), (3, 5));
    }

    #[test]
    fn excerpt_points_at_column() {
        let err = SyntaxError {
            line: 2,
            column: 3,
            expected: "`;`".into(),
            found: "`)`".into(),
        };
        let text = err.render("a\nbc)d\n");
        assert!(text.contains("2 | bc)d"));
        assert!(text.ends_with("  ^"));
    }
}
