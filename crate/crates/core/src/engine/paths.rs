use super::condition::{Cmp, Conjunct, Constant, PathCondition};
use super::{
    chain_base, satisfiable, Analyzer, Dep, DepItem, DependenceRelation, FlowPath, Hop, Link, SinkSite, SourceSite,
    TaintedUse, Var, Via,
};
use crate::catalog::TaintCatalog;
use crate::frontend::ast::{AstNode, LiteralValue, NodeKind};
use crate::frontend::scope::Binding;
use crate::ir::{AppIR, IcfgKind, NodeId};
use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};

/// Upper bound on candidate chains enumerated per app.
pub const MAX_PATHS: usize = 20_000;

struct Partial {
    source: SourceSite,
    hops: Vec<Hop>,
    links: Vec<Link>,
}

struct Dfs<'r> {
    dep: &'r DependenceRelation,
    ir: &'r AppIR,
    an: &'r Analyzer<'r>,
    uses: Vec<TaintedUse>,
    hops: Vec<Hop>,
    links: Vec<Link>,
    out: Vec<Partial>,
    limit: usize,
}

impl Dfs<'_> {
    fn emit(&mut self, source: SourceSite, first: Hop) {
        if self.out.len() >= self.limit {
            return;
        }
        let mut hops = vec![first];
        hops.extend(self.hops.iter().rev().cloned());
        self.out.push(Partial {
            source,
            hops,
            links: self.links.clone(),
        });
    }

    fn walk(&mut self, item: &DepItem) {
        if self.out.len() >= self.limit {
            return;
        }
        match &item.dep {
            Dep::Source(s) => {
                let hop = Hop {
                    node: s.node,
                    line: s.line,
                    id: s.api.clone(),
                };
                self.emit(s.clone(), hop);
            }
            Dep::Var(Var::Input(i)) => {
                if let Some(s) = self.an.input_source(i) {
                    let hop = Hop {
                        node: s.node,
                        line: s.line,
                        id: i.clone(),
                    };
                    self.emit(s, hop);
                }
            }
            Dep::Var(v) => {
                let u = TaintedUse {
                    node: item.node,
                    var: v.clone(),
                };
                if self.uses.contains(&u) {
                    return;
                }
                let line = self.ir.nodes.get(&u.node).map(|n| n.line).unwrap_or(0);
                self.hops.push(Hop {
                    node: u.node,
                    line,
                    id: v.to_string(),
                });
                self.uses.push(u.clone());
                let entries: Vec<_> = self.dep.defs_of(&u).cloned().collect();
                for e in entries {
                    self.links.push(Link {
                        use_node: u.node,
                        def_site: e.def_site,
                        via: e.via,
                    });
                    for d in &e.deps {
                        self.walk(d);
                    }
                    self.links.pop();
                }
                self.uses.pop();
                self.hops.pop();
            }
        }
    }
}

/// Builds path conditions from the branch guards of path nodes.
struct Conditions<'r> {
    an: &'r Analyzer<'r>,
    cache: RefCell<BTreeMap<(NodeId, bool), Vec<Conjunct>>>,
}

fn constant(e: &AstNode) -> Option<Constant> {
    match e.kind {
        NodeKind::Literal => match e.literal.as_ref()? {
            LiteralValue::Int(i) => Some(Constant::Num(*i as f64)),
            LiteralValue::Float(f) => Some(Constant::Num(*f)),
            LiteralValue::Str(s) => Some(Constant::Str(s.clone())),
            LiteralValue::Bool(b) => Some(Constant::Bool(*b)),
            LiteralValue::Null => None,
        },
        NodeKind::UnaryExpr if e.text == "-" => match constant(e.children.first()?)? {
            Constant::Num(v) => Some(Constant::Num(-v)),
            _ => None,
        },
        NodeKind::UnaryExpr if e.text == "+" => match constant(e.children.first()?)? {
            c @ Constant::Num(_) => Some(c),
            _ => None,
        },
        _ => None,
    }
}

/// Identifier or property chain rooted at an identifier, without calls.
fn trackable(e: &AstNode) -> bool {
    match e.kind {
        NodeKind::Identifier => true,
        NodeKind::PropertyAccess => e.receiver().is_some_and(trackable),
        _ => false,
    }
}

impl<'r> Conditions<'r> {
    fn new(an: &'r Analyzer<'r>) -> Self {
        Conditions {
            an,
            cache: RefCell::new(BTreeMap::new()),
        }
    }

    /// `text@defs`: the compared value is the same only under the same
    /// reaching definitions.
    fn key(&self, branch: NodeId, e: &AstNode) -> String {
        let ast = &self.an.ir.ast;
        let text = e.render();
        let state = match ast.binding(e.id) {
            Some(Binding::StateField { store, field }) => Some(Var::State {
                store: store.clone(),
                field: field.clone(),
            }),
            _ => None,
        };
        let base = chain_base(e);
        let var = state.or_else(|| match ast.binding(base.id) {
            Some(Binding::Local { method, name }) => Some(Var::Local {
                method: method.clone(),
                name: name.clone(),
            }),
            Some(Binding::StateField { store, field }) => Some(Var::State {
                store: store.clone(),
                field: field.clone(),
            }),
            _ => None,
        });
        match var {
            Some(v) => {
                let mut defs: Vec<NodeId> = self.an.reaching(branch, &v).iter().map(|r| r.def_site).collect();
                defs.sort_unstable();
                defs.dedup();
                let defs: Vec<String> = defs.iter().map(|d| d.to_string()).collect();
                format!("{text}@{}", defs.join(","))
            }
            None => format!("{text}@-"),
        }
    }

    fn conjuncts(&self, branch: NodeId, e: &AstNode, truth: bool, out: &mut Vec<Conjunct>) {
        let opaque = |out: &mut Vec<Conjunct>| {
            out.push(Conjunct::Opaque {
                text: e.render(),
                truth,
            })
        };
        match e.kind {
            NodeKind::BinaryExpr if e.text == "&&" && truth || e.text == "||" && !truth => {
                for c in &e.children {
                    self.conjuncts(branch, c, truth, out);
                }
            }
            NodeKind::UnaryExpr if e.text == "!" => match e.children.first() {
                Some(c) => self.conjuncts(branch, c, !truth, out),
                None => opaque(out),
            },
            NodeKind::BinaryExpr => {
                let (Some(cmp), [l, r]) = (Cmp::parse(&e.text), e.children.as_slice()) else {
                    return opaque(out);
                };
                let (var, c, cmp) = match (constant(l), constant(r)) {
                    (None, Some(c)) if trackable(l) => (l, c, cmp),
                    (Some(c), None) if trackable(r) => (r, c, cmp.flip()),
                    _ => return opaque(out),
                };
                if !matches!(c, Constant::Num(_)) && !matches!(cmp, Cmp::Eq | Cmp::Ne) {
                    return opaque(out);
                }
                out.push(Conjunct::Compare {
                    ident: self.key(branch, var),
                    cmp,
                    constant: c,
                    truth,
                });
            }
            _ => opaque(out),
        }
    }

    fn guard(&self, branch: NodeId, truth: bool) -> Vec<Conjunct> {
        if let Some(c) = self.cache.borrow().get(&(branch, truth)) {
            return c.clone();
        }
        let mut out = Vec::new();
        if let Some(cond) = self.an.ir.ast_node(branch).children.first() {
            self.conjuncts(branch, cond, truth, &mut out);
        }
        self.cache.borrow_mut().insert((branch, truth), out.clone());
        out
    }

    fn of_nodes(&self, nodes: impl IntoIterator<Item = NodeId>) -> PathCondition {
        let ir = self.an.ir;
        let mut guards = BTreeSet::new();
        for n in nodes {
            if let Some(node) = ir.nodes.get(&n) {
                guards.extend(node.guards.iter().copied());
            }
        }
        PathCondition {
            conjuncts: guards.into_iter().flat_map(|(b, t)| self.guard(b, t)).collect(),
        }
    }
}

fn path_nodes(p: &Partial, extra: &[NodeId]) -> Vec<NodeId> {
    let mut v: Vec<NodeId> = vec![p.source.node];
    for l in &p.links {
        v.push(l.use_node);
        v.push(l.def_site);
    }
    v.extend_from_slice(extra);
    v
}

pub(crate) fn construct_with(an: &Analyzer<'_>, dep: &DependenceRelation) -> Vec<FlowPath> {
    let conds = Conditions::new(an);
    let mut out = Vec::new();
    for seed in &dep.seeds {
        for arg in &seed.content {
            let mut dfs = Dfs {
                dep,
                ir: an.ir,
                an,
                uses: Vec::new(),
                hops: Vec::new(),
                links: Vec::new(),
                out: Vec::new(),
                limit: MAX_PATHS.saturating_sub(out.len()),
            };
            for item in an.arg_deps(arg) {
                dfs.walk(&item);
            }
            for p in dfs.out {
                let condition = conds.of_nodes(path_nodes(&p, &[seed.site.node]));
                out.push(FlowPath {
                    source: p.source,
                    hops: p.hops,
                    sink: seed.site.clone(),
                    links: p.links,
                    condition,
                    feasible: false,
                    via_implicit: false,
                });
            }
        }
    }
    out
}

/// Candidate source-to-sink paths through the dependence relation.
pub fn construct_paths(dep: &DependenceRelation, ir: &AppIR, cat: &TaintCatalog) -> Vec<FlowPath> {
    construct_with(&Analyzer::new(ir, cat), dep)
}

/// Call/return pairing one level deep: a path that enters a callee's return
/// value from call site `c` must leave through a parameter bound at `c`.
fn calls_match(links: &[Link]) -> bool {
    let mut pending = None;
    for l in links {
        match l.via {
            Via::Return => pending = Some(l.use_node),
            Via::Param => {
                if let Some(c) = pending.take() {
                    if l.def_site != c {
                        return false;
                    }
                }
            }
            Via::State | Via::Event => pending = None,
            Via::Local => {}
        }
    }
    true
}

/// Keep paths whose condition is satisfiable and whose calls and returns pair up.
pub fn prune_paths(paths: Vec<FlowPath>, _ir: &AppIR) -> Vec<FlowPath> {
    paths
        .into_iter()
        .filter(|p| satisfiable(&p.condition) && calls_match(&p.links))
        .map(|mut p| {
            p.feasible = true;
            p
        })
        .collect()
}

/// Nodes whose execution is control dependent on `branch`, callees included.
fn controlled_nodes(ir: &AppIR, branch: NodeId) -> BTreeSet<NodeId> {
    let mut nodes: BTreeSet<NodeId> = ir
        .nodes
        .values()
        .filter(|n| n.guards.iter().any(|(b, _)| *b == branch))
        .map(|n| n.id)
        .collect();
    let mut methods = BTreeSet::new();
    let mut stack: Vec<NodeId> = nodes.iter().copied().collect();
    while let Some(n) = stack.pop() {
        for (_, m) in ir.callees(n) {
            if methods.insert(m.clone()) {
                for x in ir.method_nodes(m) {
                    if nodes.insert(x.id) {
                        stack.push(x.id);
                    }
                }
            }
        }
    }
    nodes
}

pub(crate) fn implicit_with(an: &Analyzer<'_>) -> Vec<FlowPath> {
    let ir = an.ir;
    let conds = Conditions::new(an);
    let seeds = an.sink_seeds();
    let mut rel = DependenceRelation::default();
    let mut out = Vec::new();
    for b in ir.nodes.values().filter(|n| n.kind == IcfgKind::Branch) {
        let items = an.branch_deps(b.id);
        an.extend_dependence(&mut rel, &items);
        let mut dfs = Dfs {
            dep: &rel,
            ir,
            an,
            uses: Vec::new(),
            hops: Vec::new(),
            links: Vec::new(),
            out: Vec::new(),
            limit: MAX_PATHS.saturating_sub(out.len()),
        };
        for item in &items {
            dfs.walk(item);
        }
        if dfs.out.is_empty() {
            continue;
        }
        let controlled = controlled_nodes(ir, b.id);
        let sinks: Vec<&SinkSite> = seeds
            .iter()
            .map(|s| &s.site)
            .filter(|s| controlled.contains(&s.node))
            .collect();
        for p in &dfs.out {
            for s in &sinks {
                let mut hops = p.hops.clone();
                hops.push(Hop {
                    node: s.node,
                    line: s.line,
                    id: s.api.clone(),
                });
                out.push(FlowPath {
                    source: p.source.clone(),
                    hops,
                    sink: (*s).clone(),
                    links: p.links.clone(),
                    condition: conds.of_nodes(path_nodes(p, &[b.id, s.node])),
                    feasible: false,
                    via_implicit: true,
                });
            }
        }
    }
    out
}

/// Paths from sources tested by a branch to the sinks that branch controls.
pub fn propagate_implicit(ir: &AppIR, dep: &DependenceRelation, cat: &TaintCatalog, enabled: bool) -> Vec<FlowPath> {
    if !enabled {
        return Vec::new();
    }
    let an = Analyzer::new(ir, cat);
    let explicit: BTreeSet<_> = construct_with(&an, dep).iter().map(FlowPath::key).collect();
    implicit_with(&an)
        .into_iter()
        .filter(|p| !explicit.contains(&p.key()))
        .collect()
}
