use super::{is_log_call, method_call_sites, AppIR, CallGraph, NodeId, ReflectionPolicy, HTTP_CALLS};
use crate::frontend::ast::{AstNode, NodeKind};
use crate::frontend::scope::ScopedAst;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum IcfgKind {
    DummyMain {
        entry: String,
    },
    Statement,
    /// `if` condition; the predicate is the first child of the anchor.
    Branch,
    /// Binds closure parameters to the receiver of the call owning the closure.
    ClosureParam {
        params: Vec<String>,
        /// AST id of the call the closure is passed to.
        call: NodeId,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IcfgNode {
    /// Equal to the AST id of the anchor node (statement, `if`, closure or handler).
    pub id: NodeId,
    pub kind: IcfgKind,
    pub method: String,
    pub line: u32,
    /// Enclosing branches of the method, outermost first, with the taken polarity.
    pub guards: Vec<(NodeId, bool)>,
    /// User methods called here: `(call ast id, callee)`.
    pub callees: Vec<(NodeId, String)>,
}

impl IcfgNode {
    pub fn is_dummy(&self) -> bool {
        matches!(self.kind, IcfgKind::DummyMain { .. })
    }
}

/// Visit `n` in pre-order without entering closure bodies.
pub fn walk_own<'a>(n: &'a AstNode, f: &mut impl FnMut(&'a AstNode)) {
    f(n);
    for c in &n.children {
        if c.kind != NodeKind::ClosureExpr {
            walk_own(c, f);
        }
    }
}

/// Closures directly owned by an expression, with the call each is passed to.
fn owned_closures(n: &AstNode) -> Vec<(&AstNode, Option<&AstNode>)> {
    fn go<'a>(n: &'a AstNode, parent_call: Option<&'a AstNode>, out: &mut Vec<(&'a AstNode, Option<&'a AstNode>)>) {
        if n.kind == NodeKind::ClosureExpr {
            out.push((n, parent_call));
            return;
        }
        let is_call = matches!(
            n.kind,
            NodeKind::MethodCall
                | NodeKind::Subscribe
                | NodeKind::Schedule
                | NodeKind::ReflectiveCall
                | NodeKind::NewExpr
        );
        for c in &n.children {
            let pc = if is_call && c.kind == NodeKind::ArgList {
                Some(n)
            } else if n.kind == NodeKind::ArgList {
                parent_call
            } else {
                None
            };
            go(c, pc, out);
        }
    }
    let mut out = Vec::new();
    go(n, None, &mut out);
    out
}

struct Lowerer<'a> {
    method: String,
    nodes: BTreeMap<NodeId, IcfgNode>,
    intra: BTreeSet<(NodeId, NodeId)>,
    external: BTreeSet<(String, String)>,
    first: Option<NodeId>,
    call_info: &'a BTreeMap<NodeId, Vec<String>>,
}

impl<'a> Lowerer<'a> {
    fn add(&mut self, anchor: &AstNode, kind: IcfgKind, guards: &[(NodeId, bool)], preds: &[NodeId]) -> NodeId {
        let id = anchor.id;
        let mut callees = Vec::new();
        let roots: Vec<&AstNode> = match &kind {
            IcfgKind::Branch => anchor.children.first().into_iter().collect(),
            IcfgKind::ClosureParam { .. } => Vec::new(),
            _ => vec![anchor],
        };
        for r in roots {
            walk_own(r, &mut |n| {
                if let Some(ms) = self.call_info.get(&n.id) {
                    for m in ms {
                        callees.push((n.id, m.clone()));
                    }
                }
            });
        }
        self.nodes.insert(
            id,
            IcfgNode {
                id,
                kind,
                method: self.method.clone(),
                line: anchor.location.line,
                guards: guards.to_vec(),
                callees,
            },
        );
        for &p in preds {
            self.intra.insert((p, id));
        }
        if self.first.is_none() {
            self.first = Some(id);
        }
        id
    }

    fn closures(&mut self, expr: &'a AstNode, guards: &[(NodeId, bool)], mut preds: Vec<NodeId>) -> Vec<NodeId> {
        for (c, call) in owned_closures(expr) {
            let mut params: Vec<String> = c.params().map(|p| p.text.clone()).collect();
            if params.is_empty() {
                params.push("it".into());
            }
            if let Some(k) = call {
                if k.receiver().is_none() && HTTP_CALLS.iter().any(|h| h.eq_ignore_ascii_case(&k.text)) {
                    for p in &params {
                        self.external.insert((self.method.clone(), p.clone()));
                    }
                }
            }
            let cp = self.add(
                c,
                IcfgKind::ClosureParam {
                    params,
                    call: call.map(|k| k.id).unwrap_or(c.id),
                },
                guards,
                &preds,
            );
            let body: Vec<&AstNode> = c.body().map(|b| b.children.iter().collect()).unwrap_or_default();
            let ends = self.block(&body, guards, vec![cp]);
            for e in ends {
                self.intra.insert((e, cp));
            }
            preds = vec![cp];
        }
        preds
    }

    fn block(&mut self, stmts: &[&'a AstNode], guards: &[(NodeId, bool)], mut preds: Vec<NodeId>) -> Vec<NodeId> {
        for s in stmts {
            if is_log_call(s) {
                continue;
            }
            match s.kind {
                NodeKind::IfStmt => {
                    let cond = &s.children[0];
                    preds = self.closures(cond, guards, preds);
                    let b = self.add(s, IcfgKind::Branch, guards, &preds);
                    let mut g = guards.to_vec();
                    g.push((b, true));
                    let then: Vec<&AstNode> = s.children[1].children.iter().collect();
                    let mut ends = self.block(&then, &g, vec![b]);
                    g.pop();
                    g.push((b, false));
                    match s.children.get(2) {
                        Some(e) if e.kind == NodeKind::IfStmt => ends.extend(self.block(&[e], &g, vec![b])),
                        Some(e) => {
                            let els: Vec<&AstNode> = e.children.iter().collect();
                            ends.extend(self.block(&els, &g, vec![b]));
                        }
                        None => ends.push(b),
                    }
                    ends.sort_unstable();
                    ends.dedup();
                    preds = ends;
                }
                NodeKind::Block => {
                    let inner: Vec<&AstNode> = s.children.iter().collect();
                    preds = self.block(&inner, guards, preds);
                }
                _ => {
                    preds = self.closures(s, guards, preds);
                    let n = self.add(s, IcfgKind::Statement, guards, &preds);
                    preds = if s.kind == NodeKind::ReturnStmt {
                        Vec::new()
                    } else {
                        vec![n]
                    };
                }
            }
        }
        preds
    }
}

/// Lower every method reachable from some call graph into one ICFG with a
/// dummy main per entry point.
pub fn build_icfg(ast: ScopedAst, cgs: Vec<CallGraph>, policy: ReflectionPolicy) -> AppIR {
    let reachable: BTreeSet<String> = cgs.iter().flat_map(|g| g.methods.iter().cloned()).collect();
    let mut nodes = BTreeMap::new();
    let mut intra = BTreeSet::new();
    let mut external = BTreeSet::new();
    let mut method_entry = BTreeMap::new();
    for m in ast.method_decls().filter(|m| reachable.contains(&m.text)) {
        let call_info: BTreeMap<NodeId, Vec<String>> = method_call_sites(&ast, m, &policy)
            .into_iter()
            .map(|(site, callees, _, _)| (site, callees))
            .collect();
        let mut l = Lowerer {
            method: m.text.clone(),
            nodes: BTreeMap::new(),
            intra: BTreeSet::new(),
            external: BTreeSet::new(),
            first: None,
            call_info: &call_info,
        };
        let body: Vec<&AstNode> = m.body().map(|b| b.children.iter().collect()).unwrap_or_default();
        l.block(&body, &[], Vec::new());
        if let Some(f) = l.first {
            method_entry.insert(m.text.clone(), f);
        }
        nodes.extend(l.nodes);
        intra.extend(l.intra);
        external.extend(l.external);
    }

    let mut calls = BTreeSet::new();
    for n in nodes.values() {
        for (_, callee) in &n.callees {
            if let Some(&e) = method_entry.get(callee) {
                calls.insert((n.id, e));
            }
        }
    }

    // continuation of a call: the caller's successors, or those of the
    // caller's own call sites when the call ends its method
    let intra_succ =
        |id: NodeId| -> Vec<NodeId> { intra.range((id, 0)..=(id, NodeId::MAX)).map(|&(_, b)| b).collect() };
    let mut callers_of: BTreeMap<&str, Vec<NodeId>> = BTreeMap::new();
    for n in nodes.values() {
        for (_, callee) in &n.callees {
            if method_entry.contains_key(callee) {
                callers_of.entry(callee.as_str()).or_default().push(n.id);
            }
        }
    }
    fn ret_targets(
        c: NodeId,
        nodes: &BTreeMap<NodeId, IcfgNode>,
        succ: &dyn Fn(NodeId) -> Vec<NodeId>,
        callers_of: &BTreeMap<&str, Vec<NodeId>>,
        seen: &mut BTreeSet<NodeId>,
    ) -> BTreeSet<NodeId> {
        if !seen.insert(c) {
            return BTreeSet::new();
        }
        let s = succ(c);
        if !s.is_empty() {
            return s.into_iter().collect();
        }
        let m = nodes[&c].method.as_str();
        let mut out = BTreeSet::new();
        for &cc in callers_of.get(m).into_iter().flatten() {
            out.extend(ret_targets(cc, nodes, succ, callers_of, seen));
        }
        out
    }
    let mut exits: BTreeMap<&str, Vec<NodeId>> = BTreeMap::new();
    for n in nodes.values() {
        if intra_succ(n.id).is_empty() {
            exits.entry(n.method.as_str()).or_default().push(n.id);
        }
    }
    let mut returns = BTreeSet::new();
    let mut continuations = BTreeMap::new();
    for n in nodes.values() {
        let mut targets = None;
        for (_, callee) in &n.callees {
            if !method_entry.contains_key(callee) {
                continue;
            }
            let t = targets
                .get_or_insert_with(|| ret_targets(n.id, &nodes, &intra_succ, &callers_of, &mut BTreeSet::new()))
                .clone();
            for &e in exits.get(callee.as_str()).into_iter().flatten() {
                for &tt in &t {
                    returns.insert((e, tt));
                }
            }
        }
        if let Some(t) = targets {
            continuations.insert(n.id, t);
        }
    }

    let mut dummy_mains = Vec::new();
    let mut entries = BTreeSet::new();
    for g in &cgs {
        let Some(decl) = ast.method_decl(&g.entry) else {
            continue;
        };
        let id = decl.id;
        nodes.insert(
            id,
            IcfgNode {
                id,
                kind: IcfgKind::DummyMain { entry: g.entry.clone() },
                method: g.entry.clone(),
                line: decl.location.line,
                guards: Vec::new(),
                callees: Vec::new(),
            },
        );
        dummy_mains.push(id);
        if let Some(&e) = method_entry.get(&g.entry) {
            entries.insert((id, e));
        }
    }

    let mut ir = AppIR {
        app: ast.root.text.clone(),
        ast,
        permissions: Vec::new(),
        subscriptions: Vec::new(),
        call_graphs: cgs,
        nodes,
        dummy_mains,
        intra,
        calls,
        returns,
        continuations,
        entries,
        method_entry,
        event_params: BTreeSet::new(),
        external_params: external,
        policy,
        index: Vec::new(),
        preds: BTreeMap::new(),
        succs: BTreeMap::new(),
    };
    ir.finish_index();
    ir
}
