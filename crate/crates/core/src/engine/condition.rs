use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cmp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Cmp {
    pub fn parse(op: &str) -> Option<Cmp> {
        Some(match op {
            "==" => Cmp::Eq,
            "!=" => Cmp::Ne,
            "<" => Cmp::Lt,
            "<=" => Cmp::Le,
            ">" => Cmp::Gt,
            ">=" => Cmp::Ge,
            _ => return None,
        })
    }

    pub fn negate(self) -> Cmp {
        match self {
            Cmp::Eq => Cmp::Ne,
            Cmp::Ne => Cmp::Eq,
            Cmp::Lt => Cmp::Ge,
            Cmp::Le => Cmp::Gt,
            Cmp::Gt => Cmp::Le,
            Cmp::Ge => Cmp::Lt,
        }
    }

    /// The comparator with its operands swapped.
    pub fn flip(self) -> Cmp {
        match self {
            Cmp::Lt => Cmp::Gt,
            Cmp::Le => Cmp::Ge,
            Cmp::Gt => Cmp::Lt,
            Cmp::Ge => Cmp::Le,
            c => c,
        }
    }

    pub fn holds(self, a: f64, b: f64) -> bool {
        match self {
            Cmp::Eq => a == b,
            Cmp::Ne => a != b,
            Cmp::Lt => a < b,
            Cmp::Le => a <= b,
            Cmp::Gt => a > b,
            Cmp::Ge => a >= b,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Cmp::Eq => "==",
            Cmp::Ne => "!=",
            Cmp::Lt => "<",
            Cmp::Le => "<=",
            Cmp::Gt => ">",
            Cmp::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Constant {
    Num(f64),
    Str(String),
    Bool(bool),
}

impl fmt::Display for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constant::Num(n) => write!(f, "{n}"),
            Constant::Str(s) => write!(f, "{s:?}"),
            Constant::Bool(b) => write!(f, "{b}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Conjunct {
    /// `ident cmp constant`, asserted when `truth` holds and negated otherwise.
    /// `ident` includes the reaching definitions of the compared value.
    Compare {
        ident: String,
        cmp: Cmp,
        constant: Constant,
        truth: bool,
    },
    /// Anything else; always assumed satisfiable.
    Opaque { text: String, truth: bool },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PathCondition {
    pub conjuncts: Vec<Conjunct>,
}

#[derive(Default)]
struct Bound {
    v: f64,
    closed: bool,
}

struct NumDomain {
    lo: Bound,
    hi: Bound,
    excluded: Vec<f64>,
}

impl NumDomain {
    fn new() -> Self {
        NumDomain {
            lo: Bound {
                v: f64::NEG_INFINITY,
                closed: false,
            },
            hi: Bound {
                v: f64::INFINITY,
                closed: false,
            },
            excluded: Vec::new(),
        }
    }

    fn lower(&mut self, v: f64, closed: bool) {
        if v > self.lo.v || (v == self.lo.v && !closed) {
            self.lo = Bound { v, closed };
        }
    }

    fn upper(&mut self, v: f64, closed: bool) {
        if v < self.hi.v || (v == self.hi.v && !closed) {
            self.hi = Bound { v, closed };
        }
    }

    fn add(&mut self, cmp: Cmp, c: f64) {
        match cmp {
            Cmp::Eq => {
                self.lower(c, true);
                self.upper(c, true);
            }
            Cmp::Ne => self.excluded.push(c),
            Cmp::Lt => self.upper(c, false),
            Cmp::Le => self.upper(c, true),
            Cmp::Gt => self.lower(c, false),
            Cmp::Ge => self.lower(c, true),
        }
    }

    /// Non-empty over the reals: an open interval minus finitely many points
    /// is never empty.
    fn nonempty(&self) -> bool {
        if self.lo.v < self.hi.v {
            true
        } else if self.lo.v == self.hi.v {
            self.lo.closed && self.hi.closed && !self.excluded.contains(&self.lo.v)
        } else {
            false
        }
    }
}

#[derive(Default)]
struct Values {
    eq: Vec<String>,
    ne: Vec<String>,
    ordered: bool,
}

impl Values {
    fn nonempty(&self) -> bool {
        if self.ordered {
            return true;
        }
        match self.eq.first() {
            Some(v) => self.eq.iter().all(|e| e == v) && !self.ne.contains(v),
            None => true,
        }
    }
}

/// Per-identifier constraint intersection; opaque conjuncts never make a
/// condition unsatisfiable.
pub fn satisfiable(cond: &PathCondition) -> bool {
    let mut nums: BTreeMap<&str, NumDomain> = BTreeMap::new();
    let mut vals: BTreeMap<&str, Values> = BTreeMap::new();
    for c in &cond.conjuncts {
        let Conjunct::Compare {
            ident,
            cmp,
            constant,
            truth,
        } = c
        else {
            continue;
        };
        let cmp = if *truth { *cmp } else { cmp.negate() };
        match constant {
            Constant::Num(v) => nums.entry(ident).or_insert_with(NumDomain::new).add(cmp, *v),
            Constant::Str(_) | Constant::Bool(_) => {
                let s = constant.to_string();
                let e = vals.entry(ident).or_default();
                match cmp {
                    Cmp::Eq => e.eq.push(s),
                    Cmp::Ne => e.ne.push(s),
                    _ => e.ordered = true,
                }
            }
        }
    }
    for (ident, d) in &nums {
        if !d.nonempty() {
            return false;
        }
        // a value pinned to a number cannot also equal a string
        let pinned = d.lo.v == d.hi.v;
        if pinned && vals.get(ident).is_some_and(|v| !v.eq.is_empty()) {
            return false;
        }
    }
    vals.values().all(Values::nonempty)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn num(ident: &str, cmp: Cmp, v: f64) -> Conjunct {
        Conjunct::Compare {
            ident: ident.into(),
            cmp,
            constant: Constant::Num(v),
            truth: true,
        }
    }

    fn cond(c: Vec<Conjunct>) -> PathCondition {
        PathCondition { conjuncts: c }
    }

    #[test]
    fn interval_examples() {
        assert!(!satisfiable(&cond(vec![
            num("x", Cmp::Gt, 1.0),
            num("x", Cmp::Lt, 0.0)
        ])));
        assert!(satisfiable(&cond(vec![])));
        assert!(satisfiable(&cond(vec![
            num("x", Cmp::Eq, 5.0),
            num("x", Cmp::Ge, 3.0),
            num("x", Cmp::Le, 7.0)
        ])));
        assert!(!satisfiable(&cond(vec![
            num("x", Cmp::Eq, 5.0),
            num("x", Cmp::Gt, 5.0)
        ])));
        assert!(!satisfiable(&cond(vec![
            num("x", Cmp::Eq, 5.0),
            num("x", Cmp::Ne, 5.0)
        ])));
        assert!(satisfiable(&cond(vec![num("x", Cmp::Gt, 1.0), num("y", Cmp::Lt, 0.0)])));
    }

    #[test]
    fn negated_conjuncts() {
        let not_gt = Conjunct::Compare {
            ident: "x".into(),
            cmp: Cmp::Gt,
            constant: Constant::Num(1.0),
            truth: false,
        };
        assert!(!satisfiable(&cond(vec![not_gt.clone(), num("x", Cmp::Gt, 1.0)])));
        assert!(satisfiable(&cond(vec![not_gt, num("x", Cmp::Eq, 1.0)])));
    }

    #[test]
    fn strings_and_opaque() {
        let s = |cmp, v: &str| Conjunct::Compare {
            ident: "m".into(),
            cmp,
            constant: Constant::Str(v.into()),
            truth: true,
        };
        assert!(!satisfiable(&cond(vec![s(Cmp::Eq, "home"), s(Cmp::Eq, "away")])));
        assert!(!satisfiable(&cond(vec![s(Cmp::Eq, "home"), s(Cmp::Ne, "home")])));
        assert!(satisfiable(&cond(vec![s(Cmp::Ne, "home"), s(Cmp::Ne, "away")])));
        let op = Conjunct::Opaque {
            text: "x > y".into(),
            truth: false,
        };
        assert!(satisfiable(&cond(vec![op])));
    }
}
