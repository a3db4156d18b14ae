use serde::{Deserialize, Serialize};
use std::fmt;

/// 1-based source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Location {
    pub line: u32,
    pub column: u32,
}

impl Location {
    pub fn new(line: u32, column: u32) -> Self {
        Self { line, column }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    File,
    DefinitionBlock,
    PreferencesBlock,
    Section,
    InputDecl,
    MappingsBlock,
    PathDecl,
    MethodDecl,
    Param,
    Block,
    Subscribe,
    Schedule,
    LocalDecl,
    Assignment,
    ExprStmt,
    MethodCall,
    ReflectiveCall,
    ArgList,
    PropertyAccess,
    IndexExpr,
    ClosureExpr,
    IfStmt,
    ReturnStmt,
    BinaryExpr,
    UnaryExpr,
    Ternary,
    NewExpr,
    ListLiteral,
    MapLiteral,
    MapEntry,
    Literal,
    Identifier,
    InterpolatedString,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LiteralValue {
    Str(String),
    Int(i64),
    Float(f64),
    Bool(bool),
    Null,
}

impl LiteralValue {
    pub fn as_number(&self) -> Option<f64> {
        match self {
            LiteralValue::Int(i) => Some(*i as f64),
            LiteralValue::Float(f) => Some(*f),
            _ => None,
        }
    }
}

/// A syntax tree node.
///
/// Node shapes by kind (children in order):
///
/// | kind | text | children |
/// |------|------|----------|
/// | `File` | file name | items |
/// | `DefinitionBlock` | `definition` | `MapEntry`* |
/// | `PreferencesBlock` | `preferences` | `Section`* and other calls |
/// | `Section` | title | `InputDecl`* and other calls |
/// | `InputDecl` | input identifier | `Literal`(type), `MapEntry`* modifiers |
/// | `MappingsBlock` | `mappings` | `PathDecl`* |
/// | `PathDecl` | endpoint path | `MapEntry`(verb -> handler literal)* |
/// | `MethodDecl` | method name | `Param`*, `Block` |
/// | `LocalDecl` | variable name | value? |
/// | `Assignment` | operator | target, value |
/// | `MethodCall`, `Subscribe`, `Schedule` | method name | receiver?, `ArgList` |
/// | `ReflectiveCall` | `""` | `InterpolatedString`, `ArgList` |
/// | `PropertyAccess` | property name (`?.` keeps `safe` text prefix off) | receiver |
/// | `ClosureExpr` | `""` | `Param`*, `Block` |
/// | `IfStmt` | `if` | condition, `Block`, else (`Block` or `IfStmt`)? |
/// | `ReturnStmt` | `return` | value? |
/// | `BinaryExpr` | operator | left, right |
/// | `InterpolatedString` | raw text | `Literal` fragments and embedded expressions |
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AstNode {
    pub id: u32,
    pub kind: NodeKind,
    pub children: Vec<AstNode>,
    pub location: Location,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub literal: Option<LiteralValue>,
    /// Comments that immediately precede this node.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trivia: Vec<String>,
}

impl AstNode {
    pub fn new(kind: NodeKind, location: Location, text: impl Into<String>) -> Self {
        Self {
            id: 0,
            kind,
            children: Vec::new(),
            location,
            text: text.into(),
            literal: None,
            trivia: Vec::new(),
        }
    }

    pub fn with_children(mut self, children: Vec<AstNode>) -> Self {
        self.children = children;
        self
    }

    pub fn literal(location: Location, value: LiteralValue, raw: impl Into<String>) -> Self {
        let mut n = Self::new(NodeKind::Literal, location, raw);
        n.literal = Some(value);
        n
    }

    pub fn is(&self, kind: NodeKind) -> bool {
        self.kind == kind
    }

    /// Receiver of a call or property access, if any.
    pub fn receiver(&self) -> Option<&AstNode> {
        match self.kind {
            NodeKind::MethodCall | NodeKind::Subscribe | NodeKind::Schedule => {
                if self.children.len() == 2 {
                    self.children.first()
                } else {
                    None
                }
            }
            NodeKind::PropertyAccess | NodeKind::IndexExpr => self.children.first(),
            _ => None,
        }
    }

    /// Argument list of a call (positional, named and closure arguments).
    pub fn args(&self) -> &[AstNode] {
        match self.kind {
            NodeKind::MethodCall
            | NodeKind::Subscribe
            | NodeKind::Schedule
            | NodeKind::ReflectiveCall
            | NodeKind::NewExpr => self
                .children
                .iter()
                .rev()
                .find(|c| c.kind == NodeKind::ArgList)
                .map(|a| a.children.as_slice())
                .unwrap_or(&[]),
            _ => &[],
        }
    }

    /// Positional arguments, skipping named `key: value` entries and closures.
    pub fn positional_args(&self) -> impl Iterator<Item = &AstNode> {
        self.args()
            .iter()
            .filter(|a| a.kind != NodeKind::MapEntry && a.kind != NodeKind::ClosureExpr)
    }

    pub fn named_arg(&self, key: &str) -> Option<&AstNode> {
        self.args()
            .iter()
            .find(|a| a.kind == NodeKind::MapEntry && a.text == key)
            .and_then(|e| e.children.first())
    }

    /// The `Block` body of a method declaration or closure.
    pub fn body(&self) -> Option<&AstNode> {
        match self.kind {
            NodeKind::MethodDecl | NodeKind::ClosureExpr => self.children.iter().find(|c| c.kind == NodeKind::Block),
            _ => None,
        }
    }

    pub fn params(&self) -> impl Iterator<Item = &AstNode> {
        self.children.iter().filter(|c| c.kind == NodeKind::Param)
    }

    pub fn str_value(&self) -> Option<&str> {
        match &self.literal {
            Some(LiteralValue::Str(s)) => Some(s.as_str()),
            _ => None,
        }
    }

    /// Pre-order traversal.
    pub fn walk(&self) -> Walk<'_> {
        Walk { stack: vec![self] }
    }

    pub fn find_by_id(&self, id: u32) -> Option<&AstNode> {
        self.walk().find(|n| n.id == id)
    }

    /// Compact source-like rendering used in reports and IR listings.
    pub fn render(&self) -> String {
        let mut out = String::new();
        render_into(self, &mut out);
        out
    }
}

pub struct Walk<'a> {
    stack: Vec<&'a AstNode>,
}

impl<'a> Iterator for Walk<'a> {
    type Item = &'a AstNode;

    fn next(&mut self) -> Option<Self::Item> {
        let n = self.stack.pop()?;
        self.stack.extend(n.children.iter().rev());
        Some(n)
    }
}

fn render_args(args: &[AstNode], out: &mut String) {
    out.push('(');
    let mut first = true;
    for a in args.iter().filter(|a| a.kind != NodeKind::ClosureExpr) {
        if !first {
            out.push_str(", ");
        }
        first = false;
        render_into(a, out);
    }
    out.push(')');
    if args.iter().any(|a| a.kind == NodeKind::ClosureExpr) {
        out.push_str(" {...}");
    }
}

fn render_into(n: &AstNode, out: &mut String) {
    match n.kind {
        NodeKind::Identifier => out.push_str(&n.text),
        NodeKind::Literal => match &n.literal {
            Some(LiteralValue::Str(s)) => {
                out.push('"');
                out.push_str(s);
                out.push('"');
            }
            _ => out.push_str(&n.text),
        },
        NodeKind::PropertyAccess => {
            if let Some(r) = n.receiver() {
                render_into(r, out);
                out.push('.');
            }
            out.push_str(&n.text);
        }
        NodeKind::IndexExpr => {
            if let Some(r) = n.children.first() {
                render_into(r, out);
            }
            out.push('[');
            if let Some(i) = n.children.get(1) {
                render_into(i, out);
            }
            out.push(']');
        }
        NodeKind::MethodCall | NodeKind::Subscribe | NodeKind::Schedule => {
            if let Some(r) = n.receiver() {
                render_into(r, out);
                out.push('.');
            }
            out.push_str(&n.text);
            render_args(n.args(), out);
        }
        NodeKind::ReflectiveCall => {
            if let Some(s) = n.children.first() {
                render_into(s, out);
            }
            render_args(n.args(), out);
        }
        NodeKind::NewExpr => {
            out.push_str("new ");
            out.push_str(&n.text);
            render_args(n.args(), out);
        }
        NodeKind::InterpolatedString => {
            out.push('"');
            for part in &n.children {
                if part.kind == NodeKind::Literal {
                    if let Some(s) = part.str_value() {
                        out.push_str(s);
                    }
                } else {
                    out.push_str("${");
                    render_into(part, out);
                    out.push('}');
                }
            }
            out.push('"');
        }
        NodeKind::BinaryExpr => {
            if let [l, r] = n.children.as_slice() {
                render_into(l, out);
                out.push(' ');
                out.push_str(&n.text);
                out.push(' ');
                render_into(r, out);
            }
        }
        NodeKind::UnaryExpr => {
            out.push_str(&n.text);
            if let Some(c) = n.children.first() {
                render_into(c, out);
            }
        }
        NodeKind::Ternary => {
            if let [c, a, b] = n.children.as_slice() {
                render_into(c, out);
                out.push_str(" ? ");
                render_into(a, out);
                out.push_str(" : ");
                render_into(b, out);
            }
        }
        NodeKind::ListLiteral => {
            out.push('[');
            for (i, c) in n.children.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                render_into(c, out);
            }
            out.push(']');
        }
        NodeKind::MapLiteral => {
            out.push('[');
            if n.children.is_empty() {
                out.push(':');
            }
            for (i, c) in n.children.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                render_into(c, out);
            }
            out.push(']');
        }
        NodeKind::MapEntry => {
            out.push_str(&n.text);
            out.push_str(": ");
            if let Some(v) = n.children.first() {
                render_into(v, out);
            }
        }
        NodeKind::ClosureExpr => out.push_str("{...}"),
        NodeKind::Assignment => {
            if let [t, v] = n.children.as_slice() {
                render_into(t, out);
                out.push(' ');
                out.push_str(&n.text);
                out.push(' ');
                render_into(v, out);
            }
        }
        NodeKind::LocalDecl => {
            out.push_str("def ");
            out.push_str(&n.text);
            if let Some(v) = n.children.first() {
                out.push_str(" = ");
                render_into(v, out);
            }
        }
        NodeKind::ExprStmt => {
            if let Some(e) = n.children.first() {
                render_into(e, out);
            }
        }
        NodeKind::ReturnStmt => {
            out.push_str("return");
            if let Some(e) = n.children.first() {
                out.push(' ');
                render_into(e, out);
            }
        }
        NodeKind::IfStmt => {
            out.push_str("if (");
            if let Some(c) = n.children.first() {
                render_into(c, out);
            }
            out.push(')');
        }
        _ => out.push_str(&n.text),
    }
}
