use super::ast::Location;
use super::{FrontendError, SourceProgram};
use std::ops::Range;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keyword {
    Def,
    If,
    Else,
    Return,
    True,
    False,
    Null,
    New,
    Private,
    Public,
    Static,
    // Recognised only so the parser can reject them by name.
    Class,
    Interface,
    Enum,
    Import,
    Package,
    For,
    While,
    Do,
    Switch,
    Try,
    Catch,
    Throw,
}

impl Keyword {
    fn from_ident(s: &str) -> Option<Keyword> {
        Some(match s {
            "def" => Keyword::Def,
            "if" => Keyword::If,
            "else" => Keyword::Else,
            "return" => Keyword::Return,
            "true" => Keyword::True,
            "false" => Keyword::False,
            "null" => Keyword::Null,
            "new" => Keyword::New,
            "private" => Keyword::Private,
            "public" => Keyword::Public,
            "static" => Keyword::Static,
            "class" => Keyword::Class,
            "interface" => Keyword::Interface,
            "enum" => Keyword::Enum,
            "import" => Keyword::Import,
            "package" => Keyword::Package,
            "for" => Keyword::For,
            "while" => Keyword::While,
            "do" => Keyword::Do,
            "switch" => Keyword::Switch,
            "try" => Keyword::Try,
            "catch" => Keyword::Catch,
            "throw" => Keyword::Throw,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Keyword::Def => "def",
            Keyword::If => "if",
            Keyword::Else => "else",
            Keyword::Return => "return",
            Keyword::True => "true",
            Keyword::False => "false",
            Keyword::Null => "null",
            Keyword::New => "new",
            Keyword::Private => "private",
            Keyword::Public => "public",
            Keyword::Static => "static",
            Keyword::Class => "class",
            Keyword::Interface => "interface",
            Keyword::Enum => "enum",
            Keyword::Import => "import",
            Keyword::Package => "package",
            Keyword::For => "for",
            Keyword::While => "while",
            Keyword::Do => "do",
            Keyword::Switch => "switch",
            Keyword::Try => "try",
            Keyword::Catch => "catch",
            Keyword::Throw => "throw",
        }
    }
}

/// One piece of a double-quoted string.
#[derive(Debug, Clone, PartialEq)]
pub enum InterpPart {
    Text(String),
    /// `$a.b` shorthand (`shorthand == true`) or `${ expr }` block.
    Expr {
        text: String,
        shorthand: bool,
        tokens: Vec<Token>,
        location: Location,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Keyword(Keyword),
    Ident(String),
    Int(i64),
    Float(f64),
    Str(String),
    InterpString(Vec<InterpPart>),
    Op(&'static str),
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Semicolon,
    Newline,
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Keyword(k) => format!("keyword `{}`", k.as_str()),
            TokenKind::Ident(s) => format!("identifier `{s}`"),
            TokenKind::Int(i) => format!("integer `{i}`"),
            TokenKind::Float(f) => format!("number `{f}`"),
            TokenKind::Str(_) | TokenKind::InterpString(_) => "string literal".to_string(),
            TokenKind::Op(o) => format!("`{o}`"),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
            TokenKind::LBrace => "`{`".into(),
            TokenKind::RBrace => "`}`".into(),
            TokenKind::LBracket => "`[`".into(),
            TokenKind::RBracket => "`]`".into(),
            TokenKind::Comma => "`,`".into(),
            TokenKind::Semicolon => "`;`".into(),
            TokenKind::Newline => "end of line".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    /// Byte range into the source text.
    pub span: Range<usize>,
    pub location: Location,
    /// Comments between the previous token and this one.
    pub trivia: Vec<String>,
}

const OPERATORS: &[&str] = &[
    "?.", "?:", "->", "==", "!=", "<=", ">=", "&&", "||", "<<", "+=", "-=", "*=", "/=", "++", "--", "=", "+", "-", "*",
    "/", "%", "<", ">", "!", "?", ":", ".",
];

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
    col: u32,
    base: usize,
}

impl<'a> Lexer<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn loc(&self) -> Location {
        Location::new(self.line, self.col)
    }

    fn starts_with(&self, s: &str) -> bool {
        self.src[self.pos..].starts_with(s)
    }

    fn error(&self, c: char) -> FrontendError {
        FrontendError::Lex {
            location: self.loc(),
            character: c,
        }
    }

    fn run(mut self) -> Result<Vec<Token>, FrontendError> {
        let mut out = Vec::new();
        let mut trivia = Vec::new();
        while let Some(c) = self.peek() {
            let start = self.pos;
            let location = self.loc();
            if c == ' ' || c == '\t' || c == '\r' || c == '\u{feff}' {
                self.bump();
                continue;
            }
            if self.starts_with("//") {
                while let Some(c) = self.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
                trivia.push(self.src[start..self.pos].to_string());
                continue;
            }
            if self.starts_with("/*") {
                self.bump();
                self.bump();
                loop {
                    if self.starts_with("*/") {
                        self.bump();
                        self.bump();
                        break;
                    }
                    if self.bump().is_none() {
                        return Err(FrontendError::Parse {
                            location,
                            expected: "`*/`".into(),
                            found: "end of file".into(),
                        });
                    }
                }
                trivia.push(self.src[start..self.pos].to_string());
                continue;
            }
            let kind = if c == '\n' {
                self.bump();
                TokenKind::Newline
            } else if c.is_ascii_alphabetic() || c == '_' {
                while let Some(c) = self.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        self.bump();
                    } else {
                        break;
                    }
                }
                let word = &self.src[start..self.pos];
                match Keyword::from_ident(word) {
                    Some(k) => TokenKind::Keyword(k),
                    None => TokenKind::Ident(word.to_string()),
                }
            } else if c.is_ascii_digit() {
                self.number()
            } else if c == '\'' || c == '"' {
                self.string(c)?
            } else {
                match c {
                    '(' => {
                        self.bump();
                        TokenKind::LParen
                    }
                    ')' => {
                        self.bump();
                        TokenKind::RParen
                    }
                    '{' => {
                        self.bump();
                        TokenKind::LBrace
                    }
                    '}' => {
                        self.bump();
                        TokenKind::RBrace
                    }
                    '[' => {
                        self.bump();
                        TokenKind::LBracket
                    }
                    ']' => {
                        self.bump();
                        TokenKind::RBracket
                    }
                    ',' => {
                        self.bump();
                        TokenKind::Comma
                    }
                    ';' => {
                        self.bump();
                        TokenKind::Semicolon
                    }
                    _ => {
                        let op = OPERATORS
                            .iter()
                            .find(|op| self.starts_with(op))
                            .ok_or_else(|| self.error(c))?;
                        for _ in 0..op.len() {
                            self.bump();
                        }
                        TokenKind::Op(op)
                    }
                }
            };
            out.push(Token {
                kind,
                span: self.base + start..self.base + self.pos,
                location,
                trivia: std::mem::take(&mut trivia),
            });
        }
        Ok(out)
    }

    fn number(&mut self) -> TokenKind {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.bump();
        }
        let mut float = false;
        if self.peek() == Some('.') && matches!(self.peek_at(1), Some(c) if c.is_ascii_digit()) {
            float = true;
            self.bump();
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                self.bump();
            }
        }
        let text = &self.src[start..self.pos];
        // Groovy numeric suffixes
        if matches!(self.peek(), Some('L' | 'l' | 'G' | 'g' | 'd' | 'D' | 'f' | 'F'))
            && !matches!(self.peek_at(1), Some(c) if c.is_ascii_alphanumeric())
        {
            self.bump();
        }
        if float {
            TokenKind::Float(text.parse().unwrap_or(0.0))
        } else {
            match text.parse::<i64>() {
                Ok(i) => TokenKind::Int(i),
                Err(_) => TokenKind::Float(text.parse().unwrap_or(f64::MAX)),
            }
        }
    }

    fn escape(&mut self, buf: &mut String) {
        match self.bump() {
            Some('n') => buf.push('\n'),
            Some('t') => buf.push('\t'),
            Some('r') => buf.push('\r'),
            Some(c) => buf.push(c),
            None => {}
        }
    }

    fn string(&mut self, quote: char) -> Result<TokenKind, FrontendError> {
        let location = self.loc();
        let triple: String = std::iter::repeat_n(quote, 3).collect();
        let is_triple = self.starts_with(&triple);
        for _ in 0..if is_triple { 3 } else { 1 } {
            self.bump();
        }
        let mut parts = Vec::new();
        let mut buf = String::new();
        loop {
            if is_triple && self.starts_with(&triple) {
                for _ in 0..3 {
                    self.bump();
                }
                break;
            }
            let Some(c) = self.peek() else {
                return Err(FrontendError::Parse {
                    location,
                    expected: "closing quote".into(),
                    found: "end of file".into(),
                });
            };
            if !is_triple && c == quote {
                self.bump();
                break;
            }
            if c == '\\' {
                self.bump();
                self.escape(&mut buf);
                continue;
            }
            if quote == '"' && c == '$' {
                if self.peek_at(1) == Some('{') {
                    if !buf.is_empty() {
                        parts.push(InterpPart::Text(std::mem::take(&mut buf)));
                    }
                    parts.push(self.block_interp()?);
                    continue;
                }
                if matches!(self.peek_at(1), Some(c) if c.is_ascii_alphabetic() || c == '_') {
                    if !buf.is_empty() {
                        parts.push(InterpPart::Text(std::mem::take(&mut buf)));
                    }
                    parts.push(self.shorthand_interp()?);
                    continue;
                }
            }
            buf.push(c);
            self.bump();
        }
        if parts.is_empty() {
            return Ok(TokenKind::Str(buf));
        }
        if !buf.is_empty() {
            parts.push(InterpPart::Text(buf));
        }
        Ok(TokenKind::InterpString(parts))
    }

    fn sub_tokens(&self, start: usize, end: usize, loc: Location) -> Result<Vec<Token>, FrontendError> {
        let sub = Lexer {
            src: &self.src[..end],
            pos: start,
            line: loc.line,
            col: loc.column,
            base: self.base,
        };
        sub.run()
    }

    /// `${ ... }` with balanced braces; nested strings are skipped whole.
    fn block_interp(&mut self) -> Result<InterpPart, FrontendError> {
        let outer = self.loc();
        self.bump();
        self.bump();
        let inner_loc = self.loc();
        let start = self.pos;
        let mut depth = 1usize;
        loop {
            let Some(c) = self.peek() else {
                return Err(FrontendError::Parse {
                    location: outer,
                    expected: "`}` closing interpolation".into(),
                    found: "end of file".into(),
                });
            };
            match c {
                '{' => depth += 1,
                '}' => {
                    depth -= 1;
                    if depth == 0 {
                        break;
                    }
                }
                '"' | '\'' => {
                    self.skip_nested_string(c)?;
                    continue;
                }
                _ => {}
            }
            self.bump();
        }
        let end = self.pos;
        self.bump();
        let tokens = self.sub_tokens(start, end, inner_loc)?;
        Ok(InterpPart::Expr {
            text: self.src[start..end].trim().to_string(),
            shorthand: false,
            tokens,
            location: inner_loc,
        })
    }

    /// `$a.b.c`, optionally followed by a parenthesised argument list when the
    /// path has a dot (`"$dev.latestValue("x")"`).
    fn shorthand_interp(&mut self) -> Result<InterpPart, FrontendError> {
        self.bump();
        let inner_loc = self.loc();
        let start = self.pos;
        let mut dotted = false;
        loop {
            while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
                self.bump();
            }
            if self.peek() == Some('.') && matches!(self.peek_at(1), Some(c) if c.is_ascii_alphabetic() || c == '_') {
                dotted = true;
                self.bump();
                continue;
            }
            break;
        }
        if dotted && self.peek() == Some('(') {
            let mut depth = 0usize;
            while let Some(c) = self.peek() {
                match c {
                    '(' => depth += 1,
                    ')' => {
                        depth -= 1;
                        if depth == 0 {
                            self.bump();
                            break;
                        }
                    }
                    '"' | '\'' => {
                        self.skip_nested_string(c)?;
                        continue;
                    }
                    '\n' => break,
                    _ => {}
                }
                self.bump();
            }
        }
        let end = self.pos;
        let tokens = self.sub_tokens(start, end, inner_loc)?;
        Ok(InterpPart::Expr {
            text: self.src[start..end].to_string(),
            shorthand: true,
            tokens,
            location: inner_loc,
        })
    }

    fn skip_nested_string(&mut self, quote: char) -> Result<(), FrontendError> {
        let location = self.loc();
        self.bump();
        loop {
            match self.bump() {
                Some('\\') => {
                    self.bump();
                }
                Some(c) if c == quote => return Ok(()),
                Some(_) => {}
                None => {
                    return Err(FrontendError::Parse {
                        location,
                        expected: "closing quote".into(),
                        found: "end of file".into(),
                    })
                }
            }
        }
    }
}

/// Split `program` into tokens. Whitespace and comments are skipped; comments
/// are kept as trivia on the following token.
pub fn tokenize(program: &SourceProgram) -> Result<Vec<Token>, FrontendError> {
    tokenize_str(&program.source_text)
}

pub fn tokenize_str(src: &str) -> Result<Vec<Token>, FrontendError> {
    Lexer {
        src,
        pos: 0,
        line: 1,
        col: 1,
        base: 0,
    }
    .run()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize_str(src).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn smallest_statement() {
        assert_eq!(
            kinds("def x = 5"),
            vec![
                TokenKind::Keyword(Keyword::Def),
                TokenKind::Ident("x".into()),
                TokenKind::Op("="),
                TokenKind::Int(5),
            ]
        );
    }

    #[test]
    fn reflective_call_string() {
        let toks = tokenize_str(r#""$state.method"()"#).unwrap();
        assert_eq!(toks.len(), 3);
        match &toks[0].kind {
            TokenKind::InterpString(parts) => {
                assert_eq!(parts.len(), 1);
                match &parts[0] {
                    InterpPart::Expr { text, shorthand, .. } => {
                        assert_eq!(text, "state.method");
                        assert!(*shorthand);
                    }
                    other => panic!("unexpected part {other:?}"),
                }
            }
            other => panic!("unexpected token {other:?}"),
        }
        assert_eq!(toks[1].kind, TokenKind::LParen);
        assert_eq!(toks[2].kind, TokenKind::RParen);
    }

    #[test]
    fn stray_character_is_rejected() {
        let err = tokenize_str("def x = 1\ndef y § 2").unwrap_err();
        assert_eq!(
            err,
            FrontendError::Lex {
                location: Location::new(2, 7),
                character: '§'
            }
        );
    }

    #[test]
    fn shorthand_with_call_suffix() {
        let toks = tokenize_str(r#""condition: $thedoor.latestValue("door") now""#).unwrap();
        let TokenKind::InterpString(parts) = &toks[0].kind else {
            panic!()
        };
        assert_eq!(parts.len(), 3);
        let InterpPart::Expr { text, tokens, .. } = &parts[1] else {
            panic!()
        };
        assert_eq!(text, r#"thedoor.latestValue("door")"#);
        assert_eq!(tokens.len(), 6);
    }

    #[test]
    fn block_interpolation_with_nested_string() {
        let toks = tokenize_str(r#""a ${x.currentValue("t")} b""#).unwrap();
        let TokenKind::InterpString(parts) = &toks[0].kind else {
            panic!()
        };
        assert!(matches!(&parts[0], InterpPart::Text(t) if t == "a "));
        assert!(matches!(&parts[2], InterpPart::Text(t) if t == " b"));
    }

    #[test]
    fn comments_become_trivia() {
        let toks = tokenize_str("// hello\nx /* c */ = 1").unwrap();
        assert_eq!(toks[0].kind, TokenKind::Newline);
        assert_eq!(toks[0].trivia, vec!["// hello".to_string()]);
        assert_eq!(toks[2].trivia, vec!["/* c */".to_string()]);
    }

    #[test]
    fn single_quoted_strings_do_not_interpolate() {
        assert_eq!(kinds("'$x'"), vec![TokenKind::Str("$x".into())]);
    }

    #[test]
    fn dollar_without_identifier_is_text() {
        assert_eq!(kinds("\"cost $5\""), vec![TokenKind::Str("cost $5".into())]);
    }
}
