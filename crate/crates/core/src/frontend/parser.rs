use super::ast::{AstNode, LiteralValue, Location, NodeKind};
use super::lexer::{InterpPart, Keyword, Token, TokenKind};
use super::FrontendError;

type PResult<T> = Result<T, FrontendError>;

/// Timer-style scheduling calls that register a handler.
pub const SCHEDULE_CALLS: &[&str] = &[
    "runIn",
    "runOnce",
    "schedule",
    "runEvery1Minute",
    "runEvery5Minutes",
    "runEvery10Minutes",
    "runEvery15Minutes",
    "runEvery30Minutes",
    "runEvery1Hour",
    "runEvery3Hours",
];

struct Parser<'t> {
    toks: &'t [Token],
    pos: usize,
    eof: Location,
}

fn is_sep(k: &TokenKind) -> bool {
    matches!(k, TokenKind::Newline | TokenKind::Semicolon)
}

impl<'t> Parser<'t> {
    fn new(toks: &'t [Token]) -> Self {
        let eof = toks
            .last()
            .map(|t| Location::new(t.location.line, t.location.column + 1))
            .unwrap_or(Location::new(1, 1));
        Self { toks, pos: 0, eof }
    }

    fn peek(&self) -> Option<&'t TokenKind> {
        self.toks.get(self.pos).map(|t| &t.kind)
    }

    fn peek_n(&self, n: usize) -> Option<&'t TokenKind> {
        self.toks.get(self.pos + n).map(|t| &t.kind)
    }

    fn loc(&self) -> Location {
        self.toks.get(self.pos).map(|t| t.location).unwrap_or(self.eof)
    }

    fn bump(&mut self) -> Option<&'t Token> {
        let t = self.toks.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn at(&self, k: &TokenKind) -> bool {
        self.peek() == Some(k)
    }

    fn at_op(&self, op: &str) -> bool {
        matches!(self.peek(), Some(TokenKind::Op(o)) if *o == op)
    }

    fn at_kw(&self, kw: Keyword) -> bool {
        matches!(self.peek(), Some(TokenKind::Keyword(k)) if *k == kw)
    }

    fn found(&self) -> String {
        match self.peek() {
            Some(k) => k.describe(),
            None => "end of file".into(),
        }
    }

    fn err<T>(&self, expected: &str) -> PResult<T> {
        Err(FrontendError::Parse {
            location: self.loc(),
            expected: expected.to_string(),
            found: self.found(),
        })
    }

    fn expect(&mut self, k: TokenKind, what: &str) -> PResult<Location> {
        if self.at(&k) {
            let l = self.loc();
            self.bump();
            Ok(l)
        } else {
            self.err(what)
        }
    }

    fn expect_op(&mut self, op: &str) -> PResult<Location> {
        if self.at_op(op) {
            let l = self.loc();
            self.bump();
            Ok(l)
        } else {
            self.err(&format!("`{op}`"))
        }
    }

    fn ident(&mut self) -> PResult<(String, Location)> {
        match self.peek() {
            Some(TokenKind::Ident(s)) => {
                let l = self.loc();
                self.bump();
                Ok((s.clone(), l))
            }
            _ => self.err("identifier"),
        }
    }

    fn skip_newlines(&mut self) {
        while self.at(&TokenKind::Newline) {
            self.bump();
        }
    }

    /// Skips separators and returns the comments found along the way.
    fn skip_separators(&mut self) -> Vec<String> {
        let mut trivia = Vec::new();
        while let Some(t) = self.toks.get(self.pos) {
            if !is_sep(&t.kind) {
                break;
            }
            trivia.extend(t.trivia.iter().cloned());
            self.pos += 1;
        }
        trivia
    }

    fn current_trivia(&self) -> Vec<String> {
        self.toks.get(self.pos).map(|t| t.trivia.clone()).unwrap_or_default()
    }

    /// True when the next token is on the same line as the previous one.
    fn same_line(&self) -> bool {
        !matches!(self.peek(), None | Some(TokenKind::Newline))
    }

    fn unsupported<T>(&self, name: &str) -> PResult<T> {
        Err(FrontendError::Unsupported {
            location: self.loc(),
            name: name.to_string(),
        })
    }

    // ---- top level ------------------------------------------------------

    fn file(&mut self, file_name: &str) -> PResult<AstNode> {
        let mut items = Vec::new();
        loop {
            let mut trivia = self.skip_separators();
            if self.peek().is_none() {
                break;
            }
            trivia.extend(self.current_trivia());
            let mut item = self.item()?;
            item.trivia = trivia;
            items.push(item);
        }
        Ok(AstNode::new(NodeKind::File, Location::new(1, 1), file_name).with_children(items))
    }

    fn item(&mut self) -> PResult<AstNode> {
        match self.peek() {
            Some(TokenKind::Ident(name)) if name == "definition" && self.peek_n(1) == Some(&TokenKind::LParen) => {
                let loc = self.loc();
                self.bump();
                let args = self.paren_args()?;
                Ok(AstNode::new(NodeKind::DefinitionBlock, loc, "definition").with_children(args))
            }
            Some(TokenKind::Ident(name)) if name == "preferences" => {
                let loc = self.loc();
                self.bump();
                if self.at(&TokenKind::LParen) {
                    self.paren_args()?;
                }
                let body = self.block_statements()?;
                Ok(AstNode::new(NodeKind::PreferencesBlock, loc, "preferences").with_children(lower_preferences(body)))
            }
            Some(TokenKind::Ident(name)) if name == "mappings" => {
                let loc = self.loc();
                self.bump();
                let body = self.block_statements()?;
                Ok(AstNode::new(NodeKind::MappingsBlock, loc, "mappings").with_children(lower_mappings(body)?))
            }
            Some(TokenKind::Keyword(Keyword::Def | Keyword::Private | Keyword::Public | Keyword::Static)) => {
                self.method_decl()
            }
            Some(TokenKind::Ident(_))
                if matches!(self.peek_n(1), Some(TokenKind::Ident(_)))
                    && self.peek_n(2) == Some(&TokenKind::LParen) =>
            {
                self.method_decl()
            }
            Some(TokenKind::Keyword(k)) => {
                let name = k.as_str();
                match k {
                    Keyword::Class | Keyword::Interface | Keyword::Enum => {
                        self.unsupported(&format!("{name} declaration"))
                    }
                    Keyword::Import | Keyword::Package => self.unsupported(&format!("{name} statement")),
                    _ => self.unsupported(&format!("top-level `{name}`")),
                }
            }
            _ => self.err("`definition`, `preferences`, `mappings` or a method declaration"),
        }
    }

    fn method_decl(&mut self) -> PResult<AstNode> {
        let loc = self.loc();
        while self.at_kw(Keyword::Private) || self.at_kw(Keyword::Public) || self.at_kw(Keyword::Static) {
            self.bump();
        }
        if self.at_kw(Keyword::Def) {
            self.bump();
        } else if matches!(self.peek(), Some(TokenKind::Ident(_)))
            && matches!(self.peek_n(1), Some(TokenKind::Ident(_)))
        {
            // return type
            self.bump();
        }
        let (name, _) = self.ident()?;
        self.expect(TokenKind::LParen, "`(`")?;
        let mut children = Vec::new();
        self.skip_newlines();
        while !self.at(&TokenKind::RParen) {
            let typed =
                matches!(self.peek(), Some(TokenKind::Ident(_))) && matches!(self.peek_n(1), Some(TokenKind::Ident(_)));
            if self.at_kw(Keyword::Def) || typed {
                self.bump();
            }
            let (p, ploc) = self.ident()?;
            if self.at_op("=") {
                self.bump();
                self.expression()?;
            }
            children.push(AstNode::new(NodeKind::Param, ploc, p));
            self.skip_newlines();
            if self.at(&TokenKind::Comma) {
                self.bump();
                self.skip_newlines();
            } else if !self.at(&TokenKind::RParen) {
                return self.err("`,` or `)`");
            }
        }
        self.bump();
        self.skip_newlines();
        let bloc = self.loc();
        let body = self.block_statements()?;
        children.push(AstNode::new(NodeKind::Block, bloc, "").with_children(body));
        Ok(AstNode::new(NodeKind::MethodDecl, loc, name).with_children(children))
    }

    // ---- statements -----------------------------------------------------

    fn block_statements(&mut self) -> PResult<Vec<AstNode>> {
        self.expect(TokenKind::LBrace, "`{`")?;
        let stmts = self.statements_until_rbrace()?;
        self.expect(TokenKind::RBrace, "`}`")?;
        Ok(stmts)
    }

    fn statements_until_rbrace(&mut self) -> PResult<Vec<AstNode>> {
        let mut out = Vec::new();
        loop {
            let mut trivia = self.skip_separators();
            if self.at(&TokenKind::RBrace) || self.peek().is_none() {
                break;
            }
            trivia.extend(self.current_trivia());
            let mut s = self.statement()?;
            s.trivia = trivia;
            out.push(s);
            if !(self.at(&TokenKind::RBrace) || self.peek().is_none() || matches!(self.peek(), Some(k) if is_sep(k))) {
                return self.err("end of statement");
            }
        }
        Ok(out)
    }

    fn block(&mut self) -> PResult<AstNode> {
        let loc = self.loc();
        if self.at(&TokenKind::LBrace) {
            let body = self.block_statements()?;
            Ok(AstNode::new(NodeKind::Block, loc, "").with_children(body))
        } else {
            let s = self.statement()?;
            Ok(AstNode::new(NodeKind::Block, loc, "").with_children(vec![s]))
        }
    }

    fn statement(&mut self) -> PResult<AstNode> {
        let loc = self.loc();
        match self.peek() {
            Some(TokenKind::Keyword(Keyword::Def)) => {
                self.bump();
                if self.at(&TokenKind::LParen) {
                    return self.unsupported("multiple assignment");
                }
                let (name, _) = self.ident()?;
                if self.at(&TokenKind::LParen) {
                    return self.unsupported("nested method declaration");
                }
                self.local_decl_rest(loc, name)
            }
            Some(TokenKind::Keyword(Keyword::If)) => self.if_stmt(),
            Some(TokenKind::Keyword(Keyword::Return)) => {
                self.bump();
                let mut n = AstNode::new(NodeKind::ReturnStmt, loc, "return");
                if self.same_line() && !self.at(&TokenKind::RBrace) && !self.at(&TokenKind::Semicolon) {
                    n.children.push(self.expression()?);
                }
                Ok(n)
            }
            Some(TokenKind::Keyword(
                k @ (Keyword::For
                | Keyword::While
                | Keyword::Do
                | Keyword::Switch
                | Keyword::Try
                | Keyword::Catch
                | Keyword::Throw
                | Keyword::Class
                | Keyword::Interface
                | Keyword::Enum
                | Keyword::Import
                | Keyword::Package),
            )) => self.unsupported(&format!("`{}` statement", k.as_str())),
            Some(TokenKind::Ident(_))
                if matches!(self.peek_n(1), Some(TokenKind::Ident(_)))
                    && matches!(self.peek_n(2), Some(TokenKind::Op("="))) =>
            {
                // typed local: `String x = ...`
                self.bump();
                let (name, _) = self.ident()?;
                self.local_decl_rest(loc, name)
            }
            Some(TokenKind::Ident(label)) if matches!(self.peek_n(1), Some(TokenKind::Op(":"))) => {
                let label = label.clone();
                self.bump();
                self.bump();
                self.skip_newlines();
                let v = self.expression()?;
                Ok(AstNode::new(NodeKind::MapEntry, loc, label).with_children(vec![v]))
            }
            _ => self.expression_statement(),
        }
    }

    fn local_decl_rest(&mut self, loc: Location, name: String) -> PResult<AstNode> {
        let mut n = AstNode::new(NodeKind::LocalDecl, loc, name);
        if self.at_op("=") {
            self.bump();
            self.skip_newlines();
            n.children.push(self.expression()?);
        }
        Ok(n)
    }

    fn if_stmt(&mut self) -> PResult<AstNode> {
        let loc = self.loc();
        self.bump();
        self.expect(TokenKind::LParen, "`(` after `if`")?;
        self.skip_newlines();
        let cond = self.expression()?;
        self.skip_newlines();
        self.expect(TokenKind::RParen, "`)`")?;
        self.skip_newlines();
        let then = self.block()?;
        let mut children = vec![cond, then];
        // `else` may sit on the following line
        let save = self.pos;
        self.skip_newlines();
        if self.at_kw(Keyword::Else) {
            self.bump();
            self.skip_newlines();
            if self.at_kw(Keyword::If) {
                children.push(self.if_stmt()?);
            } else {
                children.push(self.block()?);
            }
        } else {
            self.pos = save;
        }
        Ok(AstNode::new(NodeKind::IfStmt, loc, "if").with_children(children))
    }

    fn expression_statement(&mut self) -> PResult<AstNode> {
        let loc = self.loc();
        let mut e = self.expression()?;
        if matches!(e.kind, NodeKind::Identifier | NodeKind::PropertyAccess) && self.starts_command_arg() {
            e = self.command_call(e)?;
        }
        match self.peek() {
            Some(TokenKind::Op(op @ ("=" | "+=" | "-=" | "*=" | "/="))) => {
                if !matches!(
                    e.kind,
                    NodeKind::Identifier | NodeKind::PropertyAccess | NodeKind::IndexExpr
                ) {
                    return self.err("assignable expression");
                }
                let op = *op;
                self.bump();
                self.skip_newlines();
                let v = self.expression()?;
                Ok(AstNode::new(NodeKind::Assignment, loc, op).with_children(vec![e, v]))
            }
            Some(TokenKind::Op(op @ ("++" | "--"))) => {
                let op = if *op == "++" { "+=" } else { "-=" };
                let l = self.loc();
                self.bump();
                let one = AstNode::literal(l, LiteralValue::Int(1), "1");
                Ok(AstNode::new(NodeKind::Assignment, loc, op).with_children(vec![e, one]))
            }
            _ => Ok(AstNode::new(NodeKind::ExprStmt, loc, "").with_children(vec![e])),
        }
    }

    fn starts_command_arg(&self) -> bool {
        matches!(
            self.peek(),
            Some(
                TokenKind::Str(_)
                    | TokenKind::InterpString(_)
                    | TokenKind::Int(_)
                    | TokenKind::Float(_)
                    | TokenKind::Ident(_)
                    | TokenKind::Keyword(Keyword::True | Keyword::False | Keyword::Null | Keyword::New)
            )
        )
    }

    /// `log.debug "x"` / `input "a", "b", required: true`
    fn command_call(&mut self, callee: AstNode) -> PResult<AstNode> {
        let loc = callee.location;
        let args_loc = self.loc();
        let mut args = Vec::new();
        loop {
            args.push(self.argument()?);
            if self.at(&TokenKind::Comma) {
                self.bump();
                self.skip_newlines();
            } else {
                break;
            }
        }
        let arglist = AstNode::new(NodeKind::ArgList, args_loc, "").with_children(args);
        Ok(make_call(callee, arglist, loc))
    }

    // ---- expressions ----------------------------------------------------

    fn expression(&mut self) -> PResult<AstNode> {
        self.ternary()
    }

    fn ternary(&mut self) -> PResult<AstNode> {
        let cond = self.or()?;
        if self.at_op("?") {
            self.bump();
            self.skip_newlines();
            let a = self.ternary()?;
            self.skip_newlines();
            self.expect_op(":")?;
            self.skip_newlines();
            let b = self.ternary()?;
            let loc = cond.location;
            return Ok(AstNode::new(NodeKind::Ternary, loc, "?:").with_children(vec![cond, a, b]));
        }
        if self.at_op("?:") {
            self.bump();
            self.skip_newlines();
            let b = self.ternary()?;
            let loc = cond.location;
            return Ok(AstNode::new(NodeKind::BinaryExpr, loc, "?:").with_children(vec![cond, b]));
        }
        Ok(cond)
    }

    fn binary_level(&mut self, ops: &[&str], next: fn(&mut Self) -> PResult<AstNode>) -> PResult<AstNode> {
        let mut lhs = next(self)?;
        loop {
            let op = match self.peek() {
                Some(TokenKind::Op(o)) if ops.contains(o) => *o,
                _ => break,
            };
            self.bump();
            self.skip_newlines();
            let rhs = next(self)?;
            let loc = lhs.location;
            lhs = AstNode::new(NodeKind::BinaryExpr, loc, op).with_children(vec![lhs, rhs]);
        }
        Ok(lhs)
    }

    fn or(&mut self) -> PResult<AstNode> {
        self.binary_level(&["||"], Self::and)
    }
    fn and(&mut self) -> PResult<AstNode> {
        self.binary_level(&["&&"], Self::equality)
    }
    fn equality(&mut self) -> PResult<AstNode> {
        self.binary_level(&["==", "!="], Self::relational)
    }
    fn relational(&mut self) -> PResult<AstNode> {
        self.binary_level(&["<", "<=", ">", ">="], Self::shift)
    }
    fn shift(&mut self) -> PResult<AstNode> {
        self.binary_level(&["<<"], Self::additive)
    }
    fn additive(&mut self) -> PResult<AstNode> {
        self.binary_level(&["+", "-"], Self::multiplicative)
    }
    fn multiplicative(&mut self) -> PResult<AstNode> {
        self.binary_level(&["*", "/", "%"], Self::unary)
    }

    fn unary(&mut self) -> PResult<AstNode> {
        if let Some(TokenKind::Op(op @ ("!" | "-"))) = self.peek() {
            let loc = self.loc();
            let op = *op;
            self.bump();
            let e = self.unary()?;
            return Ok(AstNode::new(NodeKind::UnaryExpr, loc, op).with_children(vec![e]));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> PResult<AstNode> {
        let mut e = self.primary()?;
        loop {
            match self.peek() {
                Some(TokenKind::Op(".") | TokenKind::Op("?.")) => {
                    self.bump();
                    let (name, _) = match self.peek() {
                        Some(TokenKind::Ident(_)) => self.ident()?,
                        Some(TokenKind::Keyword(k)) => {
                            let s = k.as_str().to_string();
                            let l = self.loc();
                            self.bump();
                            (s, l)
                        }
                        _ => return self.err("member name"),
                    };
                    let loc = e.location;
                    if self.at(&TokenKind::LParen) {
                        let args_loc = self.loc();
                        let mut args = self.paren_args()?;
                        self.trailing_closure(&mut args)?;
                        let arglist = AstNode::new(NodeKind::ArgList, args_loc, "").with_children(args);
                        e = AstNode::new(NodeKind::MethodCall, loc, name).with_children(vec![e, arglist]);
                    } else if self.at(&TokenKind::LBrace) {
                        let args_loc = self.loc();
                        let mut args = Vec::new();
                        self.trailing_closure(&mut args)?;
                        let arglist = AstNode::new(NodeKind::ArgList, args_loc, "").with_children(args);
                        e = AstNode::new(NodeKind::MethodCall, loc, name).with_children(vec![e, arglist]);
                    } else {
                        e = AstNode::new(NodeKind::PropertyAccess, loc, name).with_children(vec![e]);
                    }
                }
                Some(TokenKind::LBracket) => {
                    self.bump();
                    self.skip_newlines();
                    let idx = self.expression()?;
                    self.skip_newlines();
                    self.expect(TokenKind::RBracket, "`]`")?;
                    let loc = e.location;
                    e = AstNode::new(NodeKind::IndexExpr, loc, "[]").with_children(vec![e, idx]);
                }
                Some(TokenKind::Newline) => {
                    // method chain continued on the next line
                    let mut k = self.pos;
                    while matches!(self.toks.get(k).map(|t| &t.kind), Some(TokenKind::Newline)) {
                        k += 1;
                    }
                    if matches!(
                        self.toks.get(k).map(|t| &t.kind),
                        Some(TokenKind::Op(".") | TokenKind::Op("?."))
                    ) {
                        self.pos = k;
                    } else {
                        break;
                    }
                }
                _ => break,
            }
        }
        Ok(e)
    }

    fn trailing_closure(&mut self, args: &mut Vec<AstNode>) -> PResult<()> {
        if self.at(&TokenKind::LBrace) {
            args.push(self.closure()?);
        }
        Ok(())
    }

    fn paren_args(&mut self) -> PResult<Vec<AstNode>> {
        self.expect(TokenKind::LParen, "`(`")?;
        let mut args = Vec::new();
        self.skip_newlines();
        while !self.at(&TokenKind::RParen) {
            args.push(self.argument()?);
            self.skip_newlines();
            if self.at(&TokenKind::Comma) {
                self.bump();
                self.skip_newlines();
            } else if !self.at(&TokenKind::RParen) {
                return self.err("`,` or `)`");
            }
        }
        self.bump();
        Ok(args)
    }

    /// Positional expression or `name: value`.
    fn argument(&mut self) -> PResult<AstNode> {
        let loc = self.loc();
        let key = match (self.peek(), self.peek_n(1)) {
            (Some(TokenKind::Ident(k)), Some(TokenKind::Op(":"))) => Some(k.clone()),
            (Some(TokenKind::Str(k)), Some(TokenKind::Op(":"))) => Some(k.clone()),
            _ => None,
        };
        if let Some(key) = key {
            self.bump();
            self.bump();
            self.skip_newlines();
            let v = self.expression()?;
            return Ok(AstNode::new(NodeKind::MapEntry, loc, key).with_children(vec![v]));
        }
        self.expression()
    }

    fn closure(&mut self) -> PResult<AstNode> {
        let loc = self.expect(TokenKind::LBrace, "`{`")?;
        let mut children = Vec::new();
        // parameter list: `a, b ->`
        let mut k = self.pos;
        while matches!(self.toks.get(k).map(|t| &t.kind), Some(TokenKind::Newline)) {
            k += 1;
        }
        let mut params = Vec::new();
        let mut j = k;
        loop {
            match self.toks.get(j).map(|t| &t.kind) {
                Some(TokenKind::Ident(p)) => {
                    params.push(AstNode::new(NodeKind::Param, self.toks[j].location, p.clone()));
                    j += 1;
                    match self.toks.get(j).map(|t| &t.kind) {
                        Some(TokenKind::Comma) => j += 1,
                        Some(TokenKind::Op("->")) => break,
                        _ => {
                            params.clear();
                            break;
                        }
                    }
                }
                Some(TokenKind::Op("->")) if params.is_empty() => break,
                _ => {
                    params.clear();
                    break;
                }
            }
        }
        if matches!(self.toks.get(j).map(|t| &t.kind), Some(TokenKind::Op("->"))) {
            self.pos = j + 1;
            children.extend(params);
        }
        let bloc = self.loc();
        let body = self.statements_until_rbrace()?;
        self.expect(TokenKind::RBrace, "`}` closing closure")?;
        children.push(AstNode::new(NodeKind::Block, bloc, "").with_children(body));
        Ok(AstNode::new(NodeKind::ClosureExpr, loc, "").with_children(children))
    }

    fn primary(&mut self) -> PResult<AstNode> {
        let loc = self.loc();
        let Some(tok) = self.bump() else {
            return self.err("expression");
        };
        let raw = tok.kind.clone();
        match raw {
            TokenKind::Int(i) => Ok(AstNode::literal(loc, LiteralValue::Int(i), i.to_string())),
            TokenKind::Float(f) => Ok(AstNode::literal(loc, LiteralValue::Float(f), f.to_string())),
            TokenKind::Str(s) => {
                let lit = AstNode::literal(loc, LiteralValue::Str(s.clone()), s);
                if self.at(&TokenKind::LParen) {
                    // `'name'()` calls a method by constant name
                    let args_loc = self.loc();
                    let args = self.paren_args()?;
                    let arglist = AstNode::new(NodeKind::ArgList, args_loc, "").with_children(args);
                    let name = lit.str_value().unwrap_or_default().to_string();
                    return Ok(AstNode::new(NodeKind::MethodCall, loc, name).with_children(vec![arglist]));
                }
                Ok(lit)
            }
            TokenKind::InterpString(parts) => {
                let s = self.interp(loc, &parts)?;
                if self.at(&TokenKind::LParen) {
                    let args_loc = self.loc();
                    let args = self.paren_args()?;
                    let arglist = AstNode::new(NodeKind::ArgList, args_loc, "").with_children(args);
                    return Ok(AstNode::new(NodeKind::ReflectiveCall, loc, "").with_children(vec![s, arglist]));
                }
                Ok(s)
            }
            TokenKind::Keyword(Keyword::True) => Ok(AstNode::literal(loc, LiteralValue::Bool(true), "true")),
            TokenKind::Keyword(Keyword::False) => Ok(AstNode::literal(loc, LiteralValue::Bool(false), "false")),
            TokenKind::Keyword(Keyword::Null) => Ok(AstNode::literal(loc, LiteralValue::Null, "null")),
            TokenKind::Keyword(Keyword::New) => {
                let (mut class, _) = self.ident()?;
                while self.at_op(".") {
                    self.bump();
                    let (seg, _) = self.ident()?;
                    class = format!("{class}.{seg}");
                }
                let args_loc = self.loc();
                let args = if self.at(&TokenKind::LParen) {
                    self.paren_args()?
                } else {
                    Vec::new()
                };
                let arglist = AstNode::new(NodeKind::ArgList, args_loc, "").with_children(args);
                Ok(AstNode::new(NodeKind::NewExpr, loc, class).with_children(vec![arglist]))
            }
            TokenKind::Ident(name) => {
                if self.at(&TokenKind::LParen) {
                    let args_loc = self.loc();
                    let mut args = self.paren_args()?;
                    self.trailing_closure(&mut args)?;
                    let arglist = AstNode::new(NodeKind::ArgList, args_loc, "").with_children(args);
                    let callee = AstNode::new(NodeKind::Identifier, loc, name);
                    return Ok(make_call(callee, arglist, loc));
                }
                if self.at(&TokenKind::LBrace) {
                    let args_loc = self.loc();
                    let arglist = AstNode::new(NodeKind::ArgList, args_loc, "").with_children(vec![self.closure()?]);
                    let callee = AstNode::new(NodeKind::Identifier, loc, name);
                    return Ok(make_call(callee, arglist, loc));
                }
                Ok(AstNode::new(NodeKind::Identifier, loc, name))
            }
            TokenKind::LParen => {
                self.skip_newlines();
                let e = self.expression()?;
                self.skip_newlines();
                self.expect(TokenKind::RParen, "`)`")?;
                Ok(e)
            }
            TokenKind::LBracket => self.collection(loc),
            TokenKind::LBrace => {
                self.pos -= 1;
                self.closure()
            }
            TokenKind::Keyword(k) => {
                self.pos -= 1;
                self.unsupported(&format!("`{}` in expression", k.as_str()))
            }
            _ => {
                self.pos -= 1;
                self.err("expression")
            }
        }
    }

    fn collection(&mut self, loc: Location) -> PResult<AstNode> {
        self.skip_newlines();
        if self.at(&TokenKind::RBracket) {
            self.bump();
            return Ok(AstNode::new(NodeKind::ListLiteral, loc, "[]"));
        }
        if self.at_op(":") && self.peek_n(1) == Some(&TokenKind::RBracket) {
            self.bump();
            self.bump();
            return Ok(AstNode::new(NodeKind::MapLiteral, loc, "[:]"));
        }
        let is_map = matches!(
            (self.peek(), self.peek_n(1)),
            (
                Some(TokenKind::Ident(_) | TokenKind::Str(_) | TokenKind::Int(_) | TokenKind::InterpString(_)),
                Some(TokenKind::Op(":"))
            )
        );
        let mut items = Vec::new();
        loop {
            self.skip_newlines();
            if self.at(&TokenKind::RBracket) {
                break;
            }
            if is_map {
                let kloc = self.loc();
                let key = match self.bump().map(|t| t.kind.clone()) {
                    Some(TokenKind::Ident(k)) | Some(TokenKind::Str(k)) => k,
                    Some(TokenKind::Int(i)) => i.to_string(),
                    Some(TokenKind::InterpString(parts)) => self.interp(kloc, &parts)?.render(),
                    _ => {
                        self.pos -= 1;
                        return self.err("map key");
                    }
                };
                self.expect_op(":")?;
                self.skip_newlines();
                let v = self.expression()?;
                items.push(AstNode::new(NodeKind::MapEntry, kloc, key).with_children(vec![v]));
            } else {
                items.push(self.expression()?);
            }
            self.skip_newlines();
            if self.at(&TokenKind::Comma) {
                self.bump();
            } else if !self.at(&TokenKind::RBracket) {
                return self.err("`,` or `]`");
            }
        }
        self.bump();
        let kind = if is_map {
            NodeKind::MapLiteral
        } else {
            NodeKind::ListLiteral
        };
        Ok(AstNode::new(kind, loc, if is_map { "[:]" } else { "[]" }).with_children(items))
    }

    fn interp(&mut self, loc: Location, parts: &[InterpPart]) -> PResult<AstNode> {
        let mut children = Vec::new();
        let mut raw = String::new();
        for p in parts {
            match p {
                InterpPart::Text(t) => {
                    raw.push_str(t);
                    children.push(AstNode::literal(loc, LiteralValue::Str(t.clone()), t.clone()));
                }
                InterpPart::Expr {
                    text, tokens, location, ..
                } => {
                    raw.push_str("${");
                    raw.push_str(text);
                    raw.push('}');
                    let mut sub = Parser::new(tokens);
                    sub.eof = *location;
                    sub.skip_newlines();
                    let e = sub.expression()?;
                    sub.skip_newlines();
                    if sub.peek().is_some() {
                        return sub.err("end of interpolated expression");
                    }
                    children.push(e);
                }
            }
        }
        // fragment literals take the string's location so pre-order stays monotone
        let mut node = AstNode::new(NodeKind::InterpolatedString, loc, raw).with_children(children);
        let mut last = loc;
        for c in node.children.iter_mut() {
            if c.kind == NodeKind::Literal {
                c.location = last;
            } else {
                last = c.location;
            }
        }
        Ok(node)
    }
}

fn make_call(callee: AstNode, arglist: AstNode, loc: Location) -> AstNode {
    match callee.kind {
        NodeKind::Identifier => {
            let name = callee.text;
            let kind = if name == "subscribe" {
                NodeKind::Subscribe
            } else if SCHEDULE_CALLS.contains(&name.as_str()) {
                NodeKind::Schedule
            } else {
                NodeKind::MethodCall
            };
            AstNode::new(kind, loc, name).with_children(vec![arglist])
        }
        NodeKind::PropertyAccess => {
            let mut c = callee;
            let recv = c.children.pop().expect("property access has a receiver");
            AstNode::new(NodeKind::MethodCall, loc, c.text).with_children(vec![recv, arglist])
        }
        _ => unreachable!("command calls start from identifiers or property accesses"),
    }
}

fn call_of(stmt: &AstNode) -> Option<&AstNode> {
    match stmt.kind {
        NodeKind::ExprStmt => stmt
            .children
            .first()
            .filter(|c| c.kind == NodeKind::MethodCall && c.receiver().is_none()),
        _ => None,
    }
}

fn closure_body(call: &AstNode) -> Vec<AstNode> {
    call.args()
        .iter()
        .find(|a| a.kind == NodeKind::ClosureExpr)
        .and_then(|c| c.body())
        .map(|b| b.children.clone())
        .unwrap_or_default()
}

fn string_arg(call: &AstNode, idx: usize, key: &str) -> Option<(String, Location)> {
    if let Some(n) = call.named_arg(key) {
        return Some((
            n.str_value().map(str::to_string).unwrap_or_else(|| n.render()),
            n.location,
        ));
    }
    call.positional_args().nth(idx).map(|n| {
        (
            n.str_value().map(str::to_string).unwrap_or_else(|| n.render()),
            n.location,
        )
    })
}

fn input_decl(call: &AstNode, trivia: Vec<String>) -> Vec<AstNode> {
    let (name, _) = string_arg(call, 0, "name").unwrap_or_default();
    let (ty, tloc) = string_arg(call, 1, "type").unwrap_or((String::new(), call.location));
    let nested: Vec<AstNode> = closure_body(call)
        .iter()
        .filter_map(|s| call_of(s).filter(|c| c.text == "input").map(|c| (c, s.trivia.clone())))
        .flat_map(|(c, t)| input_decl(c, t))
        .collect();
    if !nested.is_empty() {
        // contact wrapper: the nested inputs stand in for it
        return nested
            .into_iter()
            .map(|mut n| {
                n.children.push(
                    AstNode::new(NodeKind::MapEntry, n.location, "contactWrapper").with_children(vec![
                        AstNode::literal(n.location, LiteralValue::Str(name.clone()), name.clone()),
                    ]),
                );
                n
            })
            .collect();
    }
    let mut children = vec![AstNode::literal(tloc, LiteralValue::Str(ty.clone()), ty)];
    children.extend(
        call.args()
            .iter()
            .filter(|a| a.kind == NodeKind::MapEntry && a.text != "name" && a.text != "type")
            .cloned(),
    );
    let mut n = AstNode::new(NodeKind::InputDecl, call.location, name).with_children(children);
    n.trivia = trivia;
    vec![n]
}

fn lower_preferences(stmts: Vec<AstNode>) -> Vec<AstNode> {
    let mut out = Vec::new();
    for s in stmts {
        let Some(call) = call_of(&s) else {
            out.push(s);
            continue;
        };
        match call.text.as_str() {
            "section" => {
                let title = string_arg(call, 0, "title").map(|t| t.0).unwrap_or_default();
                let mut sec = AstNode::new(NodeKind::Section, call.location, title)
                    .with_children(lower_preferences(closure_body(call)));
                sec.trivia = s.trivia.clone();
                out.push(sec);
            }
            "page" | "dynamicPage" => out.extend(lower_preferences(closure_body(call))),
            "input" => out.extend(input_decl(call, s.trivia.clone())),
            _ => out.push(s),
        }
    }
    out
}

fn lower_mappings(stmts: Vec<AstNode>) -> PResult<Vec<AstNode>> {
    let mut out = Vec::new();
    for s in stmts {
        let Some(call) = call_of(&s).filter(|c| c.text == "path") else {
            return Err(FrontendError::Unsupported {
                location: s.location,
                name: "non-path statement in mappings".into(),
            });
        };
        let (path, _) = string_arg(call, 0, "path").unwrap_or_default();
        let mut verbs = Vec::new();
        for st in closure_body(call) {
            let map = match st.kind {
                NodeKind::MapEntry if st.text == "action" => st.children.first().cloned(),
                _ => None,
            };
            if let Some(m) = map.filter(|m| m.kind == NodeKind::MapLiteral) {
                verbs.extend(m.children);
            }
        }
        let mut p = AstNode::new(NodeKind::PathDecl, call.location, path).with_children(verbs);
        p.trivia = s.trivia;
        out.push(p);
    }
    Ok(out)
}

fn assign_ids(node: &mut AstNode, next: &mut u32) {
    node.id = *next;
    *next += 1;
    for c in node.children.iter_mut() {
        assign_ids(c, next);
    }
}

/// Parse a token stream into a `File` node. Node ids are pre-order indices.
pub fn parse(tokens: &[Token]) -> Result<AstNode, FrontendError> {
    parse_named(tokens, "")
}

pub fn parse_named(tokens: &[Token], file_name: &str) -> Result<AstNode, FrontendError> {
    let mut p = Parser::new(tokens);
    let mut root = p.file(file_name)?;
    let mut next = 0;
    assign_ids(&mut root, &mut next);
    Ok(root)
}
