//! Recursive-descent parser for the formula grammar.
//!
//! Tokens: `p<digits>`, `false`, `true`, `~`, `&`, `|`, `->`, `box`/`[]`,
//! `dia`/`<>`, parentheses. Precedence, tightest first: the unary operators,
//! `&`, `|`, then right-associative `->`. Errors carry 1-based line/column
//! positions.

use thiserror::Error;

use crate::formula::Formula;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Token {
    Var(u32),
    False,
    True,
    Not,
    And,
    Or,
    Implies,
    BoxOp,
    DiaOp,
    LParen,
    RParen,
}

impl Token {
    fn describe(&self) -> &'static str {
        match self {
            Token::Var(_) => "variable",
            Token::False => "`false`",
            Token::True => "`true`",
            Token::Not => "`~`",
            Token::And => "`&`",
            Token::Or => "`|`",
            Token::Implies => "`->`",
            Token::BoxOp => "`box`",
            Token::DiaOp => "`dia`",
            Token::LParen => "`(`",
            Token::RParen => "`)`",
        }
    }
}

struct Lexer<'a> {
    rest: &'a str,
    line: usize,
    column: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer { rest: text, line: 1, column: 1 }
    }

    fn bump(&mut self, len: usize) {
        for ch in self.rest[..len].chars() {
            if ch == '\n' {
                self.line += 1;
                self.column = 1;
            } else {
                self.column += 1;
            }
        }
        self.rest = &self.rest[len..];
    }

    fn skip_whitespace(&mut self) {
        let trimmed = self.rest.trim_start();
        let ws = self.rest.len() - trimmed.len();
        if ws > 0 {
            self.bump(ws);
        }
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError { line: self.line, column: self.column, message: message.into() }
    }

    fn tokenize(mut self) -> Result<Vec<(Token, usize, usize)>, ParseError> {
        let mut tokens = Vec::new();
        loop {
            self.skip_whitespace();
            if self.rest.is_empty() {
                return Ok(tokens);
            }
            let (line, column) = (self.line, self.column);
            let bytes = self.rest.as_bytes();
            let (token, len) = match bytes[0] {
                b'(' => (Token::LParen, 1),
                b')' => (Token::RParen, 1),
                b'~' => (Token::Not, 1),
                b'&' => (Token::And, 1),
                b'|' => (Token::Or, 1),
                b'-' if bytes.get(1) == Some(&b'>') => (Token::Implies, 2),
                b'[' if bytes.get(1) == Some(&b']') => (Token::BoxOp, 2),
                b'<' if bytes.get(1) == Some(&b'>') => (Token::DiaOp, 2),
                b'p' if bytes.get(1).is_some_and(u8::is_ascii_digit) => {
                    let digits = self.rest[1..]
                        .bytes()
                        .take_while(u8::is_ascii_digit)
                        .count();
                    let index: u32 = self.rest[1..1 + digits]
                        .parse()
                        .map_err(|_| self.error("variable index too large"))?;
                    (Token::Var(index), 1 + digits)
                }
                _ => {
                    let word_len = self
                        .rest
                        .bytes()
                        .take_while(|b| b.is_ascii_alphanumeric())
                        .count();
                    match &self.rest[..word_len] {
                        "false" => (Token::False, 5),
                        "true" => (Token::True, 4),
                        "box" => (Token::BoxOp, 3),
                        "dia" => (Token::DiaOp, 3),
                        "" => {
                            let ch = self.rest.chars().next().unwrap();
                            return Err(self.error(format!("unknown token `{ch}`")));
                        }
                        word => return Err(self.error(format!("unknown token `{word}`"))),
                    }
                }
            };
            tokens.push((token, line, column));
            self.bump(len);
        }
    }
}

struct Parser {
    tokens: Vec<(Token, usize, usize)>,
    pos: usize,
    end_line: usize,
    end_column: usize,
}

impl Parser {
    fn peek(&self) -> Option<Token> {
        self.tokens.get(self.pos).map(|&(t, _, _)| t)
    }

    fn advance(&mut self) -> Option<Token> {
        let t = self.peek();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn here(&self) -> (usize, usize) {
        self.tokens
            .get(self.pos)
            .map(|&(_, l, c)| (l, c))
            .unwrap_or((self.end_line, self.end_column))
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        let (line, column) = self.here();
        ParseError { line, column, message: message.into() }
    }

    // implies := or ('->' implies)?     (right-associative)
    fn implies(&mut self) -> Result<Formula, ParseError> {
        let left = self.or()?;
        if self.peek() == Some(Token::Implies) {
            self.advance();
            let right = self.implies()?;
            Ok(Formula::implies(left, right))
        } else {
            Ok(left)
        }
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        let left = self.and()?;
        if self.peek() == Some(Token::Or) {
            self.advance();
            let right = self.or()?;
            Ok(Formula::or(left, right))
        } else {
            Ok(left)
        }
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let left = self.unary()?;
        if self.peek() == Some(Token::And) {
            self.advance();
            let right = self.and()?;
            Ok(Formula::and(left, right))
        } else {
            Ok(left)
        }
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Some(Token::Not) => {
                self.advance();
                Ok(Formula::not(self.unary()?))
            }
            Some(Token::BoxOp) => {
                self.advance();
                Ok(Formula::boxed(self.unary()?))
            }
            Some(Token::DiaOp) => {
                self.advance();
                Ok(Formula::diamond(self.unary()?))
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Some(Token::Var(v)) => {
                self.advance();
                Ok(Formula::var(v))
            }
            Some(Token::False) => {
                self.advance();
                Ok(Formula::bottom())
            }
            Some(Token::True) => {
                self.advance();
                Ok(Formula::top())
            }
            Some(Token::LParen) => {
                self.advance();
                let inner = self.implies()?;
                match self.advance() {
                    Some(Token::RParen) => Ok(inner),
                    Some(t) => {
                        self.pos -= 1;
                        Err(self.error(format!("expected `)`, found {}", t.describe())))
                    }
                    None => Err(self.error("expected `)`, found end of input")),
                }
            }
            Some(t) => Err(self.error(format!("expected a formula, found {}", t.describe()))),
            None => Err(self.error("expected a formula, found end of input")),
        }
    }
}

/// Parses a formula in the surface grammar into its canonical tree.
pub fn parse(text: &str) -> Result<Formula, ParseError> {
    // end-of-input position for error reporting
    let mut end_line = 1;
    let mut end_column = 1;
    for ch in text.chars() {
        if ch == '\n' {
            end_line += 1;
            end_column = 1;
        } else {
            end_column += 1;
        }
    }
    let tokens = Lexer::new(text).tokenize()?;
    let mut parser = Parser { tokens, pos: 0, end_line, end_column };
    let formula = parser.implies()?;
    if parser.peek().is_some() {
        let t = parser.peek().unwrap();
        return Err(parser.error(format!("unexpected {} after formula", t.describe())));
    }
    Ok(formula)
}
