use super::ast::{AstNode, Location, NodeKind};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// What an identifier (or `state.x` access) refers to.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Binding {
    Input(String),
    Local { method: String, name: String },
    Method(String),
    StateField { store: String, field: String },
    Platform(String),
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputInfo {
    pub name: String,
    pub type_text: String,
    pub modifiers: BTreeMap<String, String>,
    pub location: Location,
    pub node_id: u32,
    /// Name of the contact wrapper this input was nested in, if any.
    pub contact_wrapper: Option<String>,
}

impl InputInfo {
    pub fn is_device(&self) -> bool {
        self.type_text.starts_with("capability.") || self.type_text.starts_with("device.")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodInfo {
    pub name: String,
    pub params: Vec<String>,
    pub node_id: u32,
    pub location: Location,
}

/// The parsed tree plus symbol tables and per-node bindings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScopedAst {
    pub root: AstNode,
    pub inputs: Vec<InputInfo>,
    pub methods: Vec<MethodInfo>,
    /// Identifier node id (or `state.x` property access id) to binding.
    pub bindings: BTreeMap<u32, Binding>,
    /// Contact wrapper name to the input it stands for.
    pub aliases: BTreeMap<String, String>,
    /// Locals of each method, including parameters and closure parameters.
    pub locals: BTreeMap<String, BTreeSet<String>>,
}

pub const STATE_STORES: &[&str] = &["state", "atomicState"];

const PLATFORM_NAMES: &[&str] = &[
    "location",
    "state",
    "atomicState",
    "log",
    "app",
    "settings",
    "params",
    "request",
    "now",
    "timeToday",
];

impl ScopedAst {
    pub fn input(&self, name: &str) -> Option<&InputInfo> {
        let name = self.aliases.get(name).map(String::as_str).unwrap_or(name);
        self.inputs.iter().find(|i| i.name == name)
    }

    pub fn method_decl(&self, name: &str) -> Option<&AstNode> {
        self.root
            .children
            .iter()
            .find(|c| c.kind == NodeKind::MethodDecl && c.text == name)
    }

    pub fn method_decls(&self) -> impl Iterator<Item = &AstNode> {
        self.root.children.iter().filter(|c| c.kind == NodeKind::MethodDecl)
    }

    pub fn has_method(&self, name: &str) -> bool {
        self.methods.iter().any(|m| m.name == name)
    }

    pub fn binding(&self, node_id: u32) -> Option<&Binding> {
        self.bindings.get(&node_id)
    }

    pub fn node(&self, id: u32) -> Option<&AstNode> {
        self.root.find_by_id(id)
    }
}

fn collect_inputs(root: &AstNode) -> Vec<InputInfo> {
    let mut out = Vec::new();
    for block in root.children.iter().filter(|c| c.kind == NodeKind::PreferencesBlock) {
        for n in block.walk().filter(|n| n.kind == NodeKind::InputDecl) {
            let type_text = n
                .children
                .first()
                .and_then(|t| t.str_value())
                .unwrap_or_default()
                .to_string();
            let mut modifiers = BTreeMap::new();
            let mut wrapper = None;
            for m in n.children.iter().filter(|c| c.kind == NodeKind::MapEntry) {
                let v = m
                    .children
                    .first()
                    .map(|v| v.str_value().map(str::to_string).unwrap_or_else(|| v.render()))
                    .unwrap_or_default();
                if m.text == "contactWrapper" {
                    wrapper = Some(v);
                } else {
                    modifiers.insert(m.text.clone(), v);
                }
            }
            out.push(InputInfo {
                name: n.text.clone(),
                type_text,
                modifiers,
                location: n.location,
                node_id: n.id,
                contact_wrapper: wrapper,
            });
        }
    }
    out
}

/// Names declared inside a method body: parameters, `def`s, assignment
/// targets and closure parameters (implicit `it` included).
fn method_locals(m: &AstNode) -> BTreeSet<String> {
    let mut out: BTreeSet<String> = m.params().map(|p| p.text.clone()).collect();
    for n in m.walk() {
        match n.kind {
            NodeKind::LocalDecl => {
                out.insert(n.text.clone());
            }
            NodeKind::Assignment => {
                if let Some(t) = n.children.first().filter(|t| t.kind == NodeKind::Identifier) {
                    out.insert(t.text.clone());
                }
            }
            // `acc << x` as a statement appends to (and so declares) `acc`
            NodeKind::ExprStmt => {
                if let Some(t) = n
                    .children
                    .first()
                    .filter(|e| e.kind == NodeKind::BinaryExpr && e.text == "<<")
                    .and_then(|e| e.children.first())
                    .filter(|t| t.kind == NodeKind::Identifier)
                {
                    out.insert(t.text.clone());
                }
            }
            NodeKind::ClosureExpr => {
                let mut any = false;
                for p in n.params() {
                    out.insert(p.text.clone());
                    any = true;
                }
                if !any {
                    out.insert("it".into());
                }
            }
            _ => {}
        }
    }
    out
}

struct Resolver<'a> {
    inputs: &'a [InputInfo],
    aliases: &'a BTreeMap<String, String>,
    methods: &'a BTreeSet<String>,
    bindings: BTreeMap<u32, Binding>,
}

impl Resolver<'_> {
    fn resolve_name(&self, name: &str, scope: Option<(&str, &BTreeSet<String>)>) -> Binding {
        if let Some((m, locals)) = scope {
            if locals.contains(name) {
                return Binding::Local {
                    method: m.to_string(),
                    name: name.to_string(),
                };
            }
        }
        if self.inputs.iter().any(|i| i.name == name) {
            return Binding::Input(name.to_string());
        }
        if let Some(target) = self.aliases.get(name) {
            return Binding::Input(target.clone());
        }
        if self.methods.contains(name) {
            return Binding::Method(name.to_string());
        }
        if PLATFORM_NAMES.contains(&name) || name.starts_with(|c: char| c.is_ascii_uppercase()) {
            return Binding::Platform(name.to_string());
        }
        Binding::Unresolved
    }

    fn visit(&mut self, n: &AstNode, scope: Option<(&str, &BTreeSet<String>)>) {
        match n.kind {
            NodeKind::Identifier => {
                let b = self.resolve_name(&n.text, scope);
                self.bindings.insert(n.id, b);
            }
            NodeKind::PropertyAccess => {
                if let Some(r) = n.receiver().filter(|r| r.kind == NodeKind::Identifier) {
                    let rb = self.resolve_name(&r.text, scope);
                    match &rb {
                        Binding::Platform(p) if STATE_STORES.contains(&p.as_str()) => {
                            self.bindings.insert(
                                n.id,
                                Binding::StateField {
                                    store: p.clone(),
                                    field: n.text.clone(),
                                },
                            );
                        }
                        Binding::Platform(p) if p == "settings" && self.inputs.iter().any(|i| i.name == n.text) => {
                            self.bindings.insert(n.id, Binding::Input(n.text.clone()));
                        }
                        _ => {}
                    }
                }
            }
            _ => {}
        }
        for c in &n.children {
            self.visit(c, scope);
        }
    }
}

/// Bind every identifier of the tree. Unknown names bind to `Unresolved`.
pub fn resolve_scopes(root: AstNode) -> ScopedAst {
    let inputs = collect_inputs(&root);
    let mut aliases = BTreeMap::new();
    for i in &inputs {
        if let Some(w) = &i.contact_wrapper {
            // a wrapper stands for its phone input, or the first nested one
            let replace = match aliases.get(w) {
                None => true,
                Some(cur) => i.type_text == "phone" && inputs.iter().any(|j| &j.name == cur && j.type_text != "phone"),
            };
            if replace {
                aliases.insert(w.clone(), i.name.clone());
            }
        }
    }
    let methods: Vec<MethodInfo> = root
        .children
        .iter()
        .filter(|c| c.kind == NodeKind::MethodDecl)
        .map(|m| MethodInfo {
            name: m.text.clone(),
            params: m.params().map(|p| p.text.clone()).collect(),
            node_id: m.id,
            location: m.location,
        })
        .collect();
    let method_names: BTreeSet<String> = methods.iter().map(|m| m.name.clone()).collect();
    let mut locals = BTreeMap::new();
    let mut r = Resolver {
        inputs: &inputs,
        aliases: &aliases,
        methods: &method_names,
        bindings: BTreeMap::new(),
    };
    for item in &root.children {
        if item.kind == NodeKind::MethodDecl {
            let l = method_locals(item);
            r.visit(item, Some((&item.text, &l)));
            locals.insert(item.text.clone(), l);
        } else {
            r.visit(item, None);
        }
    }
    let bindings = r.bindings;
    ScopedAst {
        root,
        inputs,
        methods,
        bindings,
        aliases,
        locals,
    }
}
