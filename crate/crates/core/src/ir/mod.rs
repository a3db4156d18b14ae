//! Permissions, event subscriptions, per-entry-point call graphs and the ICFG.

mod icfg;
mod listing;

pub use icfg::{build_icfg, walk_own, IcfgKind, IcfgNode};
pub use listing::render_ir;

use crate::catalog::{TaintCatalog, TaintLabel};
use crate::frontend::ast::{AstNode, Location, NodeKind};
use crate::frontend::scope::{Binding, ScopedAst};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

pub type NodeId = u32;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Permission {
    pub identifier: String,
    /// Device capability name (without the `capability.` prefix) or input type.
    pub platform_name: String,
    pub taint_label: TaintLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EventKind {
    DeviceEvent,
    TimerEvent,
    WebServiceEvent,
    AppTouchEvent,
    ModeEvent,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EventSource {
    Permission(String),
    Platform(String),
}

impl EventSource {
    pub fn name(&self) -> &str {
        match self {
            EventSource::Permission(s) | EventSource::Platform(s) => s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventSubscription {
    pub device: EventSource,
    pub event_name: String,
    pub handler: String,
    pub kind: EventKind,
    pub location: Location,
    /// HTTP verb for web-service callbacks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verb: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CallEdge {
    pub caller: String,
    /// AST id of the call expression.
    pub site: NodeId,
    pub callee: String,
    /// Site sits under an `if` in the caller.
    pub conditional: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallGraph {
    pub entry: String,
    pub edges: BTreeSet<CallEdge>,
    pub reflective_sites: BTreeSet<NodeId>,
    /// Methods reachable from `entry`, entry included.
    pub methods: BTreeSet<String>,
}

impl CallGraph {
    pub fn callees_at(&self, site: NodeId) -> BTreeSet<&str> {
        self.edges
            .iter()
            .filter(|e| e.site == site)
            .map(|e| e.callee.as_str())
            .collect()
    }
}

/// How reflective call sites are resolved.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum ReflectionPolicy {
    /// Every declared method is a possible target.
    #[default]
    AllMethods,
    /// Only the named methods (those that exist) are targets.
    Targets(BTreeSet<String>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IrError {
    #[error("{location}: unknown handler `{name}`")]
    UnknownHandler { name: String, location: Location },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EdgeKind {
    Intra,
    Call,
    Return,
    Entry,
}

/// The analysis IR of one app.
#[derive(Debug, Clone)]
pub struct AppIR {
    pub app: String,
    pub ast: ScopedAst,
    pub permissions: Vec<Permission>,
    pub subscriptions: Vec<EventSubscription>,
    pub call_graphs: Vec<CallGraph>,
    pub nodes: BTreeMap<NodeId, IcfgNode>,
    pub dummy_mains: Vec<NodeId>,
    /// Intra-procedural edges (closure back edges included).
    pub intra: BTreeSet<(NodeId, NodeId)>,
    /// Call node to callee entry node.
    pub calls: BTreeSet<(NodeId, NodeId)>,
    /// Callee exit node to the continuation of the call.
    pub returns: BTreeSet<(NodeId, NodeId)>,
    /// User call site to the nodes its callees return to.
    pub continuations: BTreeMap<NodeId, BTreeSet<NodeId>>,
    /// Dummy main to handler entry node.
    pub entries: BTreeSet<(NodeId, NodeId)>,
    /// First node of each method that has statements.
    pub method_entry: BTreeMap<String, NodeId>,
    /// Parameters of entry handlers, `(method, name)`.
    pub event_params: BTreeSet<(String, String)>,
    /// Closure parameters bound to HTTP responses, `(method, name)`.
    pub external_params: BTreeSet<(String, String)>,
    pub policy: ReflectionPolicy,
    index: Vec<Vec<u32>>,
    preds: BTreeMap<NodeId, Vec<(NodeId, EdgeKind)>>,
    succs: BTreeMap<NodeId, Vec<(NodeId, EdgeKind)>>,
}

/// Calls whose response closures receive external data.
pub const HTTP_CALLS: &[&str] = &[
    "httpGet",
    "httpPost",
    "httpPut",
    "httpDelete",
    "httpHead",
    "httpPostJson",
    "httpPutJson",
];

pub fn is_log_call(n: &AstNode) -> bool {
    let call = match n.kind {
        NodeKind::ExprStmt => n.children.first(),
        _ => Some(n),
    };
    matches!(call, Some(c) if c.kind == NodeKind::MethodCall
        && matches!(c.receiver(), Some(r) if r.kind == NodeKind::Identifier && r.text == "log"))
}

/// Capability name for device inputs, raw type text otherwise.
fn platform_name(type_text: &str) -> String {
    type_text
        .strip_prefix("capability.")
        .or_else(|| type_text.strip_prefix("device."))
        .unwrap_or(type_text)
        .to_string()
}

pub fn build_permissions(ast: &ScopedAst, cat: &TaintCatalog) -> Vec<Permission> {
    let mut out: Vec<Permission> = ast
        .inputs
        .iter()
        .map(|i| Permission {
            identifier: i.name.clone(),
            platform_name: platform_name(&i.type_text),
            taint_label: cat
                .lookup_source(&["input"], &i.type_text)
                .map(|e| e.label)
                .unwrap_or(if i.is_device() {
                    TaintLabel::DeviceInfo
                } else {
                    TaintLabel::UserInput
                }),
        })
        .collect();
    let uses_location = ast
        .bindings
        .values()
        .any(|b| matches!(b, Binding::Platform(p) if p == "location"));
    if uses_location {
        out.push(Permission {
            identifier: "location".into(),
            platform_name: "location".into(),
            taint_label: TaintLabel::Location,
        });
    }
    out
}

fn handler_name(arg: &AstNode) -> Option<String> {
    match arg.kind {
        NodeKind::Identifier => Some(arg.text.clone()),
        NodeKind::Literal => arg.str_value().map(str::to_string),
        _ => None,
    }
}

fn check_handler(ast: &ScopedAst, name: String, location: Location) -> Result<String, IrError> {
    if ast.has_method(&name) {
        Ok(name)
    } else {
        Err(IrError::UnknownHandler { name, location })
    }
}

const TIMER_LOCATION_EVENTS: &[&str] = &["sunrise", "sunset", "sunriseTime", "sunsetTime"];

pub fn build_subscriptions(ast: &ScopedAst) -> Result<Vec<EventSubscription>, IrError> {
    let mut out = Vec::new();
    for m in ast.method_decls() {
        for n in m.walk() {
            match n.kind {
                NodeKind::Subscribe if n.receiver().is_none() => {
                    let args: Vec<&AstNode> = n.positional_args().collect();
                    let Some(h) = args.last() else { continue };
                    let Some(handler) = handler_name(h) else { continue };
                    let handler = check_handler(ast, handler, h.location)?;
                    let dev = args[0];
                    let event_name = if args.len() >= 3 {
                        args[1]
                            .str_value()
                            .map(str::to_string)
                            .unwrap_or_else(|| args[1].render())
                    } else {
                        String::new()
                    };
                    let binding = if dev.kind == NodeKind::Identifier {
                        ast.binding(dev.id)
                    } else {
                        None
                    };
                    let (device, kind) = match binding {
                        Some(Binding::Input(i)) => (EventSource::Permission(i.clone()), EventKind::DeviceEvent),
                        Some(Binding::Platform(p)) if p == "app" => {
                            (EventSource::Platform("app".into()), EventKind::AppTouchEvent)
                        }
                        Some(Binding::Platform(p)) if p == "location" => {
                            let kind = if event_name.is_empty() || event_name == "mode" {
                                EventKind::ModeEvent
                            } else if TIMER_LOCATION_EVENTS.contains(&event_name.as_str()) {
                                EventKind::TimerEvent
                            } else {
                                EventKind::DeviceEvent
                            };
                            (EventSource::Platform("location".into()), kind)
                        }
                        _ => (EventSource::Platform(dev.render()), EventKind::DeviceEvent),
                    };
                    out.push(EventSubscription {
                        device,
                        event_name,
                        handler,
                        kind,
                        location: n.location,
                        verb: None,
                    });
                }
                NodeKind::Schedule if n.receiver().is_none() => {
                    let args: Vec<&AstNode> = n.positional_args().collect();
                    let Some(h) = args.last() else { continue };
                    let Some(handler) = handler_name(h) else { continue };
                    let handler = check_handler(ast, handler, h.location)?;
                    let event_name = if args.len() >= 2 {
                        args[0].render()
                    } else {
                        n.text.clone()
                    };
                    out.push(EventSubscription {
                        device: EventSource::Platform(n.text.clone()),
                        event_name,
                        handler,
                        kind: EventKind::TimerEvent,
                        location: n.location,
                        verb: None,
                    });
                }
                _ => {}
            }
        }
    }
    for block in ast.root.children.iter().filter(|c| c.kind == NodeKind::MappingsBlock) {
        for path in &block.children {
            for verb in &path.children {
                let Some(h) = verb.children.first().and_then(|v| v.str_value()) else {
                    continue;
                };
                let handler = check_handler(ast, h.to_string(), verb.location)?;
                out.push(EventSubscription {
                    device: EventSource::Platform("mappings".into()),
                    event_name: format!("{} {}", verb.text, path.text),
                    handler,
                    kind: EventKind::WebServiceEvent,
                    location: verb.location,
                    verb: Some(verb.text.clone()),
                });
            }
        }
    }
    Ok(out)
}

/// `(call ast id, callees, reflective, conditional)`
type CallSite = (NodeId, Vec<String>, bool, bool);

/// Calls made directly by a method body.
pub(crate) fn method_call_sites(ast: &ScopedAst, method: &AstNode, policy: &ReflectionPolicy) -> Vec<CallSite> {
    let all: Vec<String> = ast.methods.iter().map(|m| m.name.clone()).collect();
    let mut out = Vec::new();
    fn visit(
        n: &AstNode,
        depth_if: usize,
        ast: &ScopedAst,
        all: &[String],
        policy: &ReflectionPolicy,
        out: &mut Vec<CallSite>,
    ) {
        if is_log_call(n) {
            return;
        }
        match n.kind {
            NodeKind::MethodCall if n.receiver().is_none() && ast.has_method(&n.text) => {
                out.push((n.id, vec![n.text.clone()], false, depth_if > 0));
            }
            NodeKind::ReflectiveCall => {
                let targets: Vec<String> = match policy {
                    ReflectionPolicy::AllMethods => all.to_vec(),
                    ReflectionPolicy::Targets(t) => all.iter().filter(|m| t.contains(*m)).cloned().collect(),
                };
                out.push((n.id, targets, true, depth_if > 0));
            }
            _ => {}
        }
        if n.kind == NodeKind::IfStmt {
            for (i, c) in n.children.iter().enumerate() {
                visit(c, if i == 0 { depth_if } else { depth_if + 1 }, ast, all, policy, out);
            }
        } else {
            for c in &n.children {
                visit(c, depth_if, ast, all, policy, out);
            }
        }
    }
    if let Some(body) = method.body() {
        visit(body, 0, ast, &all, policy, &mut out);
    }
    out
}

pub fn build_call_graphs(ast: &ScopedAst, subs: &[EventSubscription], policy: &ReflectionPolicy) -> Vec<CallGraph> {
    let mut handlers: Vec<&str> = Vec::new();
    for s in subs {
        if !handlers.contains(&s.handler.as_str()) {
            handlers.push(&s.handler);
        }
    }
    let sites: BTreeMap<&str, Vec<CallSite>> = ast
        .method_decls()
        .map(|m| (m.text.as_str(), method_call_sites(ast, m, policy)))
        .collect();
    handlers
        .into_iter()
        .map(|h| {
            let mut g = CallGraph {
                entry: h.to_string(),
                edges: BTreeSet::new(),
                reflective_sites: BTreeSet::new(),
                methods: BTreeSet::new(),
            };
            let mut stack = vec![h.to_string()];
            while let Some(m) = stack.pop() {
                if !g.methods.insert(m.clone()) {
                    continue;
                }
                for (site, callees, reflective, conditional) in sites.get(m.as_str()).into_iter().flatten() {
                    if *reflective {
                        g.reflective_sites.insert(*site);
                    }
                    for c in callees {
                        g.edges.insert(CallEdge {
                            caller: m.clone(),
                            site: *site,
                            callee: c.clone(),
                            conditional: *conditional,
                        });
                        stack.push(c.clone());
                    }
                }
            }
            g
        })
        .collect()
}

impl AppIR {
    /// Full IR construction with the default reflection policy.
    pub fn build(ast: ScopedAst, cat: &TaintCatalog) -> Result<AppIR, IrError> {
        Self::build_with(ast, cat, ReflectionPolicy::AllMethods)
    }

    pub fn build_with(ast: ScopedAst, cat: &TaintCatalog, policy: ReflectionPolicy) -> Result<AppIR, IrError> {
        let permissions = build_permissions(&ast, cat);
        let subs = build_subscriptions(&ast)?;
        let cgs = build_call_graphs(&ast, &subs, &policy);
        let mut ir = build_icfg(ast, cgs, policy);
        for s in subs.iter().filter(|s| s.kind != EventKind::WebServiceEvent) {
            if let Some(m) = ir.ast.methods.iter().find(|m| m.name == s.handler) {
                for p in &m.params {
                    ir.event_params.insert((m.name.clone(), p.clone()));
                }
            }
        }
        ir.permissions = permissions;
        ir.subscriptions = subs;
        Ok(ir)
    }

    pub(crate) fn finish_index(&mut self) {
        let mut index = Vec::new();
        fn walk(n: &AstNode, path: &mut Vec<u32>, index: &mut Vec<Vec<u32>>) {
            let id = n.id as usize;
            if index.len() <= id {
                index.resize(id + 1, Vec::new());
            }
            index[id] = path.clone();
            for (i, c) in n.children.iter().enumerate() {
                path.push(i as u32);
                walk(c, path, index);
                path.pop();
            }
        }
        walk(&self.ast.root, &mut Vec::new(), &mut index);
        self.index = index;
        let mut preds: BTreeMap<NodeId, Vec<(NodeId, EdgeKind)>> = BTreeMap::new();
        let mut succs: BTreeMap<NodeId, Vec<(NodeId, EdgeKind)>> = BTreeMap::new();
        for (set, kind) in [
            (&self.intra, EdgeKind::Intra),
            (&self.calls, EdgeKind::Call),
            (&self.returns, EdgeKind::Return),
            (&self.entries, EdgeKind::Entry),
        ] {
            for &(a, b) in set.iter() {
                succs.entry(a).or_default().push((b, kind));
                preds.entry(b).or_default().push((a, kind));
            }
        }
        self.preds = preds;
        self.succs = succs;
    }

    /// AST node by id.
    pub fn ast_node(&self, id: NodeId) -> &AstNode {
        let mut n = &self.ast.root;
        for &i in &self.index[id as usize] {
            n = &n.children[i as usize];
        }
        n
    }

    pub fn node(&self, id: NodeId) -> &IcfgNode {
        &self.nodes[&id]
    }

    pub fn preds(&self, id: NodeId) -> &[(NodeId, EdgeKind)] {
        self.preds.get(&id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn succs(&self, id: NodeId) -> &[(NodeId, EdgeKind)] {
        self.succs.get(&id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn intra_preds(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.preds(id)
            .iter()
            .filter(|(_, k)| *k == EdgeKind::Intra)
            .map(|(p, _)| *p)
    }

    pub fn intra_succs(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.succs(id)
            .iter()
            .filter(|(_, k)| *k == EdgeKind::Intra)
            .map(|(p, _)| *p)
    }

    /// Nodes calling into `method`'s entry.
    pub fn call_sites_of(&self, method: &str) -> Vec<NodeId> {
        let Some(&e) = self.method_entry.get(method) else {
            return Vec::new();
        };
        self.preds(e)
            .iter()
            .filter(|(_, k)| *k == EdgeKind::Call)
            .map(|(p, _)| *p)
            .collect()
    }

    /// Methods called from an ICFG node, with the AST id of each call expression.
    pub fn callees(&self, node: NodeId) -> &[(NodeId, String)] {
        self.nodes.get(&node).map(|n| n.callees.as_slice()).unwrap_or(&[])
    }

    pub fn is_user_call_site(&self, node: NodeId) -> bool {
        self.callees(node)
            .iter()
            .any(|(_, m)| self.method_entry.contains_key(m))
    }

    pub fn dummy_main_of(&self, handler: &str) -> Option<NodeId> {
        self.dummy_mains
            .iter()
            .copied()
            .find(|d| matches!(&self.nodes[d].kind, IcfgKind::DummyMain { entry } if entry == handler))
    }

    /// Nodes reachable from a dummy main over all edge kinds.
    pub fn reachable_from(&self, start: NodeId) -> BTreeSet<NodeId> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![start];
        while let Some(n) = stack.pop() {
            if seen.insert(n) {
                stack.extend(self.succs(n).iter().map(|(s, _)| *s));
            }
        }
        seen
    }

    pub fn method_nodes(&self, method: &str) -> impl Iterator<Item = &IcfgNode> {
        let method = method.to_string();
        self.nodes.values().filter(move |n| n.method == method && !n.is_dummy())
    }

    /// Exit nodes of a method: no intra successor.
    pub fn exits(&self, method: &str) -> Vec<NodeId> {
        self.method_nodes(method)
            .filter(|n| self.intra_succs(n.id).next().is_none())
            .map(|n| n.id)
            .collect()
    }

    pub fn is_event_param(&self, method: &str, name: &str) -> bool {
        self.event_params.contains(&(method.to_string(), name.to_string()))
    }

    pub fn is_external_param(&self, method: &str, name: &str) -> bool {
        self.external_params.contains(&(method.to_string(), name.to_string()))
    }

    /// Web-service verb of a handler, when it is a mappings callback.
    pub fn endpoints_of(&self, handler: &str) -> Vec<&EventSubscription> {
        self.subscriptions
            .iter()
            .filter(|s| s.kind == EventKind::WebServiceEvent && s.handler == handler)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse_program, resolve_scopes, SourceProgram};

    const APP: &str = "def installed() {\n    subscribe(s, \"switch\", h)\n}\ndef h(evt) {\n    def a = f(1)\n    def b = f(2)\n    \"$name\"()\n}\ndef f(x) {\n    return x\n}\ndef g() {\n    log.debug \"g\"\n}\n";

    fn build(policy: ReflectionPolicy) -> AppIR {
        let ast = resolve_scopes(parse_program(&SourceProgram::new("t.groovy", APP)).unwrap());
        AppIR::build_with(ast, &TaintCatalog::default_catalog(), policy).unwrap()
    }

    #[test]
    fn each_call_site_returns_to_its_own_continuation() {
        let ir = build(ReflectionPolicy::default());
        // the reflective call on line 7 is the third site
        let all = ir.call_sites_of("f");
        assert_eq!(
            all.iter().map(|&s| ir.node(s).line).collect::<BTreeSet<_>>(),
            [5, 6, 7].into()
        );
        let sites: Vec<NodeId> = all.into_iter().filter(|&s| ir.node(s).line < 7).collect();
        let conts: Vec<&BTreeSet<NodeId>> = sites.iter().map(|s| &ir.continuations[s]).collect();
        assert!(conts[0].is_disjoint(conts[1]));
        assert!(sites.iter().all(|&s| ir.is_user_call_site(s)));
    }

    #[test]
    fn reflection_reaches_every_method_by_default() {
        let ir = build(ReflectionPolicy::default());
        let cg = ir.call_graphs.iter().find(|c| c.entry == "h").unwrap();
        let site = *cg.reflective_sites.iter().next().unwrap();
        let callees = cg.callees_at(site);
        assert!(callees.contains("g") && callees.contains("f"), "{callees:?}");
    }

    #[test]
    fn reflection_targets_restrict_callees() {
        let ir = build(ReflectionPolicy::Targets(["g".to_string()].into()));
        let cg = ir.call_graphs.iter().find(|c| c.entry == "h").unwrap();
        let site = *cg.reflective_sites.iter().next().unwrap();
        assert_eq!(cg.callees_at(site), ["g"].into());
    }

    #[test]
    fn handlers_get_dummy_mains() {
        let ir = build(ReflectionPolicy::default());
        let main = ir.dummy_main_of("h").unwrap();
        assert!(ir.node(main).is_dummy());
        assert!(ir.reachable_from(main).contains(&ir.method_entry["f"]));
        assert!(ir.is_event_param("h", "evt"));
    }

    #[test]
    fn log_calls_are_recognized() {
        let ast = parse_program(&SourceProgram::new("t.groovy", APP)).unwrap();
        assert!(ast.walk().any(is_log_call));
    }
}
