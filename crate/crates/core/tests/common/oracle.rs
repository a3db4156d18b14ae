//! Random handler programs, their source rendering and a forward
//! path-enumerating taint oracle.

use iot_taint::catalog::{TaintCatalog, TaintLabel};
use iot_taint::engine::analyze_flows;
use proptest::prelude::*;
use std::collections::BTreeSet;

pub type Taint = BTreeSet<(TaintLabel, u32)>;
pub type Flow = (TaintLabel, u32, u32);

pub const VARS: usize = 2;
pub const FIELDS: usize = 2;
pub const INPUT_LINE: u32 = 5;

#[derive(Debug, Clone)]
pub enum Ex {
    Const(i64),
    Var(usize),
    Dev(usize),
    Input,
    Loc,
    State(usize),
    Add(Box<Ex>, Box<Ex>),
}

#[derive(Debug, Clone)]
pub enum St {
    Assign(usize, Ex),
    Call(Option<usize>, Ex),
    StateWrite(usize, Ex),
    Sink(Ex),
    If(usize, usize, Vec<St>, Vec<St>),
}

#[derive(Debug, Clone)]
pub struct Prog {
    pub handlers: Vec<Vec<St>>,
    pub helper: Vec<St>,
}

fn ex(in_helper: bool) -> impl Strategy<Value = Ex> {
    let leaf = if in_helper {
        prop_oneof![
            (-3i64..10).prop_map(Ex::Const),
            (0..VARS).prop_map(Ex::Var),
            (0..2usize).prop_map(Ex::Dev),
            Just(Ex::Input),
            Just(Ex::Loc),
        ]
        .boxed()
    } else {
        prop_oneof![
            (-3i64..10).prop_map(Ex::Const),
            (0..VARS).prop_map(Ex::Var),
            (0..VARS).prop_map(Ex::Var),
            (0..2usize).prop_map(Ex::Dev),
            Just(Ex::Input),
            Just(Ex::Loc),
            (0..FIELDS).prop_map(Ex::State),
        ]
        .boxed()
    };
    leaf.prop_recursive(2, 4, 2, |inner| {
        (inner.clone(), inner).prop_map(|(a, b)| Ex::Add(Box::new(a), Box::new(b)))
    })
}

fn stmt(in_helper: bool, depth: u32) -> BoxedStrategy<St> {
    let mut simple: Vec<BoxedStrategy<St>> = vec![
        ((0..VARS), ex(in_helper)).prop_map(|(v, e)| St::Assign(v, e)).boxed(),
        ((0..VARS), ex(in_helper)).prop_map(|(v, e)| St::Assign(v, e)).boxed(),
        ex(in_helper).prop_map(St::Sink).boxed(),
    ];
    if !in_helper {
        simple.push(
            (proptest::option::of(0..VARS), ex(false))
                .prop_map(|(v, e)| St::Call(v, e))
                .boxed(),
        );
        simple.push(((0..FIELDS), ex(false)).prop_map(|(f, e)| St::StateWrite(f, e)).boxed());
    }
    let simple = proptest::strategy::Union::new(simple).boxed();
    if depth == 0 {
        return simple;
    }
    let block = proptest::collection::vec(stmt(in_helper, depth - 1), 0..3);
    prop_oneof![
        3 => simple,
        1 => ((0..VARS), (0..VARS), block.clone(), block)
            .prop_map(|(a, b, t, e)| St::If(a, b, t, e)),
    ]
    .boxed()
}

pub fn prog() -> impl Strategy<Value = Prog> {
    (
        proptest::collection::vec(proptest::collection::vec(stmt(false, 2), 1..6), 1..3),
        proptest::collection::vec(stmt(true, 1), 0..3),
    )
        .prop_map(|(handlers, helper)| Prog { handlers, helper })
}

/// Source text plus the line of every statement, in emission order.
pub struct Rendered {
    pub text: String,
    pub lines: Vec<u32>,
}

struct Writer {
    out: Vec<String>,
    lines: Vec<u32>,
    helper: bool,
}

impl Writer {
    fn line(&mut self, s: String) -> u32 {
        self.out.push(s);
        self.out.len() as u32
    }

    fn var(&self, v: usize) -> String {
        if self.helper {
            ["a", "r"][v].to_string()
        } else {
            format!("v{v}")
        }
    }

    fn ex(&self, e: &Ex) -> String {
        match e {
            Ex::Const(c) => c.to_string(),
            Ex::Var(v) => self.var(*v),
            Ex::Dev(0) => "d0.currentTemperature".into(),
            Ex::Dev(_) => "d1.currentSwitch".into(),
            Ex::Input => "u1".into(),
            Ex::Loc => "location.mode".into(),
            Ex::State(f) => format!("state.s{f}"),
            Ex::Add(a, b) => format!("({} + {})", self.ex(a), self.ex(b)),
        }
    }

    fn block(&mut self, stmts: &[St], indent: usize) {
        let pad = "    ".repeat(indent);
        for s in stmts {
            match s {
                St::Assign(v, e) => {
                    let l = self.line(format!("{pad}{} = {}", self.var(*v), self.ex(e)));
                    self.lines.push(l);
                }
                St::Call(Some(v), e) => {
                    let l = self.line(format!("{pad}{} = f({})", self.var(*v), self.ex(e)));
                    self.lines.push(l);
                }
                St::Call(None, e) => {
                    let l = self.line(format!("{pad}f({})", self.ex(e)));
                    self.lines.push(l);
                }
                St::StateWrite(f, e) => {
                    let l = self.line(format!("{pad}state.s{f} = {}", self.ex(e)));
                    self.lines.push(l);
                }
                St::Sink(e) => {
                    let l = self.line(format!("{pad}sendSms(phone, {})", self.ex(e)));
                    self.lines.push(l);
                }
                St::If(a, b, t, e) => {
                    let l = self.line(format!("{pad}if ({} > {}) {{", self.var(*a), self.var(*b)));
                    self.lines.push(l);
                    self.block(t, indent + 1);
                    self.line(format!("{pad}}} else {{"));
                    self.block(e, indent + 1);
                    self.line(format!("{pad}}}"));
                }
            }
        }
    }
}

pub fn render_prog(p: &Prog) -> Rendered {
    let mut w = Writer {
        out: Vec::new(),
        lines: Vec::new(),
        helper: false,
    };
    for l in [
        "preferences {",
        "    section(\"s\") {",
        "        input \"d0\", \"capability.temperatureMeasurement\"",
        "        input \"d1\", \"capability.switch\"",
        "        input \"u1\", \"number\"",
        "        input \"phone\", \"phone\"",
        "    }",
        "}",
        "def installed() {",
    ] {
        w.line(l.into());
    }
    assert_eq!(w.out[INPUT_LINE as usize - 1].trim(), "input \"u1\", \"number\"");
    for (i, _) in p.handlers.iter().enumerate() {
        w.line(format!("    subscribe(d{i}, \"ev{i}\", h{i})"));
    }
    w.line("}".into());
    for (i, h) in p.handlers.iter().enumerate() {
        w.line(format!("def h{i}(evt) {{"));
        w.line("    def v0 = 0".into());
        w.line("    def v1 = 0".into());
        w.block(h, 1);
        w.line("}".into());
    }
    w.helper = true;
    w.line("def f(a) {".into());
    w.line("    def r = 0".into());
    w.block(&p.helper, 1);
    w.line("    return r".into());
    w.line("}".into());
    Rendered {
        text: w.out.join("\n") + "\n",
        lines: w.lines,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Env {
    vars: [Taint; VARS],
    state: [Taint; FIELDS],
}

/// Forward propagation over every control-flow path, with the helper inlined
/// at each call and state persisting across handler executions.
pub struct Oracle<'a> {
    prog: &'a Prog,
    lines: &'a [u32],
    flows: BTreeSet<Flow>,
    writes: [Taint; FIELDS],
}

impl Oracle<'_> {
    fn eval(&self, e: &Ex, env: &Env, line: u32) -> Taint {
        match e {
            Ex::Const(_) => Taint::new(),
            Ex::Var(v) => env.vars[*v].clone(),
            Ex::Dev(_) => [(TaintLabel::DeviceState, line)].into(),
            Ex::Input => [(TaintLabel::UserInput, INPUT_LINE)].into(),
            Ex::Loc => [(TaintLabel::Location, line)].into(),
            Ex::State(f) => {
                let mut t = env.state[*f].clone();
                t.insert((TaintLabel::StateVariable, line));
                t
            }
            Ex::Add(a, b) => {
                let mut t = self.eval(a, env, line);
                t.extend(self.eval(b, env, line));
                t
            }
        }
    }

    /// Runs a block from a set of environments; `pos` walks statement lines.
    fn block(&mut self, stmts: &[St], envs: BTreeSet<Env>, pos: &mut usize, helper_pos: usize) -> BTreeSet<Env> {
        let mut envs = envs;
        for s in stmts {
            let line = self.lines[*pos];
            *pos += 1;
            match s {
                St::Assign(v, e) => {
                    envs = envs
                        .into_iter()
                        .map(|mut env| {
                            env.vars[*v] = self.eval(e, &env, line);
                            env
                        })
                        .collect();
                }
                St::StateWrite(f, e) => {
                    envs = envs
                        .into_iter()
                        .map(|mut env| {
                            let t = self.eval(e, &env, line);
                            self.writes[*f].extend(t.iter().copied());
                            env.state[*f] = t;
                            env
                        })
                        .collect();
                }
                St::Sink(e) => {
                    for env in &envs {
                        for (label, src) in self.eval(e, env, line) {
                            self.flows.insert((label, src, line));
                        }
                    }
                }
                St::Call(target, e) => {
                    let mut next = BTreeSet::new();
                    for env in envs {
                        let arg = self.eval(e, &env, line);
                        let entry = Env {
                            vars: [arg, Taint::new()],
                            state: env.state.clone(),
                        };
                        let mut hp = helper_pos;
                        let helper = self.prog.helper.clone();
                        for out in self.block(&helper, [entry].into(), &mut hp, helper_pos) {
                            let mut e2 = env.clone();
                            if let Some(v) = target {
                                e2.vars[*v] = out.vars[1].clone();
                            }
                            next.insert(e2);
                        }
                    }
                    envs = next;
                }
                St::If(_, _, t, e) => {
                    let mut then_pos = *pos;
                    let mut out = self.block(t, envs.clone(), &mut then_pos, helper_pos);
                    let mut else_pos = then_pos;
                    out.extend(self.block(e, envs, &mut else_pos, helper_pos));
                    *pos = else_pos;
                    envs = out;
                }
            }
        }
        envs
    }

    pub fn run(prog: &Prog, lines: &[u32]) -> BTreeSet<Flow> {
        let handler_stmts: usize = prog.handlers.iter().map(|h| count(h)).sum();
        let mut global: [Taint; FIELDS] = Default::default();
        loop {
            let mut o = Oracle {
                prog,
                lines,
                flows: BTreeSet::new(),
                writes: Default::default(),
            };
            let mut pos = 0;
            for h in &prog.handlers {
                let env = Env {
                    vars: Default::default(),
                    state: global.clone(),
                };
                o.block(h, [env].into(), &mut pos, handler_stmts);
            }
            // sinks inside the helper are only reached through calls
            if o.writes == global {
                return o.flows;
            }
            global = o.writes;
        }
    }
}

fn count(stmts: &[St]) -> usize {
    stmts
        .iter()
        .map(|s| match s {
            St::If(_, _, t, e) => 1 + count(t) + count(e),
            _ => 1,
        })
        .sum()
}

pub fn engine_flows(text: &str, implicit: bool) -> (BTreeSet<Flow>, usize) {
    let ir = super::ir_of(text);
    let (_, paths) = analyze_flows(&ir, &TaintCatalog::default_catalog(), implicit);
    let flows = paths
        .iter()
        .filter(|p| p.feasible)
        .map(|p| (p.source.label, p.source.line, p.sink.line))
        .collect();
    let size = ir.nodes.values().filter(|n| !n.is_dummy()).count();
    (flows, size)
}
