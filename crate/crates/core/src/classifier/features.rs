//! Robustness at time 0 of one template under many valuations.
//!
//! A subformula's robustness signal depends only on the parameters occurring
//! in it, so signals are cached per node under the values of those
//! parameters. The root is evaluated at time 0 only.

use std::collections::HashMap;
use std::rc::Rc;

use crate::formula::{Expr, Interval};
use crate::pstl::{Term, Valuation};
use crate::robustness::{atom_robustness, sliding_extremum, until, windows, Extremum, MonitorError};
use crate::trace::{TimedTrace, TIME_EPS};

struct Node<'a> {
    expr: &'a Expr<Term>,
    children: Vec<usize>,
    params: Vec<&'a str>,
}

pub(crate) struct Plan<'a> {
    nodes: Vec<Node<'a>>,
}

impl<'a> Plan<'a> {
    pub(crate) fn new(template: &'a Expr<Term>) -> Self {
        let mut plan = Plan { nodes: Vec::new() };
        plan.add(template);
        plan
    }

    // pre-order; returns the node id
    fn add(&mut self, e: &'a Expr<Term>) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node {
            expr: e,
            children: Vec::new(),
            params: Vec::new(),
        });
        let kids: Vec<&'a Expr<Term>> = match e {
            Expr::True | Expr::Atom(_) => vec![],
            Expr::Not(a) | Expr::Globally(_, a) | Expr::Eventually(_, a) => vec![a],
            Expr::And(a, b) | Expr::Or(a, b) | Expr::Implies(a, b) | Expr::Until(_, a, b) => vec![a, b],
        };
        let mut params: Vec<&'a str> = Vec::new();
        let mut own = |t: &'a Term| {
            if let Term::Param(p) = t {
                params.push(p);
            }
        };
        match e {
            Expr::Atom(a) => own(&a.value),
            Expr::Globally(iv, _) | Expr::Eventually(iv, _) | Expr::Until(iv, _, _) => {
                own(&iv.lo);
                own(&iv.hi);
            }
            _ => {}
        }
        let mut children = Vec::new();
        for k in kids {
            let c = self.add(k);
            params.extend(self.nodes[c].params.iter().copied());
            children.push(c);
        }
        params.sort_unstable();
        params.dedup();
        self.nodes[id].children = children;
        self.nodes[id].params = params;
        id
    }

    /// `ρ(template(nu), trace, 0)` for every `nu`. Valuations must bind every
    /// parameter; intervals are assumed already validated.
    pub(crate) fn robustness_at_zero(&self, trace: &TimedTrace, valuations: &[Valuation]) -> Result<Vec<f64>, MonitorError> {
        let mut eval = Eval {
            plan: self,
            trace,
            memo: (0..self.nodes.len()).map(|_| HashMap::new()).collect(),
        };
        valuations.iter().map(|nu| eval.at_zero(0, nu)).collect()
    }
}

struct Eval<'p, 'a, 't> {
    plan: &'p Plan<'a>,
    trace: &'t TimedTrace,
    memo: Vec<HashMap<Vec<u64>, Rc<Vec<f64>>>>,
}

fn value(t: &Term, nu: &Valuation) -> f64 {
    match t {
        Term::Const(c) => *c,
        Term::Param(p) => nu.get(p).unwrap_or(f64::NAN),
    }
}

fn interval(iv: &Interval<Term>, nu: &Valuation) -> Interval {
    Interval {
        lo: value(&iv.lo, nu),
        hi: value(&iv.hi, nu),
        lo_closed: iv.lo_closed,
        hi_closed: iv.hi_closed,
    }
}

impl Eval<'_, '_, '_> {
    fn signal(&mut self, id: usize, nu: &Valuation) -> Result<Rc<Vec<f64>>, MonitorError> {
        let node = &self.plan.nodes[id];
        let key: Vec<u64> = node
            .params
            .iter()
            .map(|p| nu.get(p).unwrap_or(f64::NAN).to_bits())
            .collect();
        if let Some(s) = self.memo[id].get(&key) {
            return Ok(Rc::clone(s));
        }
        let times = self.trace.times();
        let kids = node.children.clone();
        let out: Vec<f64> = match node.expr {
            Expr::True => vec![f64::INFINITY; times.len()],
            Expr::Atom(a) => {
                let ch = self
                    .trace
                    .channel(&a.signal)
                    .ok_or_else(|| MonitorError::UnknownSignal(a.signal.clone()))?;
                let c = value(&a.value, nu);
                ch.iter().map(|&v| atom_robustness(a.cmp, v, c)).collect()
            }
            Expr::Not(_) => self.signal(kids[0], nu)?.iter().map(|v| -v).collect(),
            Expr::And(..) | Expr::Or(..) | Expr::Implies(..) => {
                let a = self.signal(kids[0], nu)?;
                let b = self.signal(kids[1], nu)?;
                let f = combiner(node.expr);
                a.iter().zip(b.iter()).map(|(&p, &q)| f(p, q)).collect()
            }
            Expr::Globally(iv, _) | Expr::Eventually(iv, _) => {
                let kind = if matches!(node.expr, Expr::Globally(..)) {
                    Extremum::Min
                } else {
                    Extremum::Max
                };
                let a = self.signal(kids[0], nu)?;
                sliding_extremum(&a, &windows(times, &interval(iv, nu)), kind)
            }
            Expr::Until(iv, _, _) => {
                let a = self.signal(kids[0], nu)?;
                let b = self.signal(kids[1], nu)?;
                until(&a, &b, &windows(times, &interval(iv, nu)))
            }
        };
        let out = Rc::new(out);
        self.memo[id].insert(key, Rc::clone(&out));
        Ok(out)
    }

    fn at_zero(&mut self, id: usize, nu: &Valuation) -> Result<f64, MonitorError> {
        let node = &self.plan.nodes[id];
        let kids = node.children.clone();
        let times = self.trace.times();
        Ok(match node.expr {
            Expr::True | Expr::Atom(_) => self.signal(id, nu)?[0],
            Expr::Not(_) => -self.at_zero(kids[0], nu)?,
            Expr::And(..) | Expr::Or(..) | Expr::Implies(..) => {
                let f = combiner(node.expr);
                let a = self.at_zero(kids[0], nu)?;
                let b = self.at_zero(kids[1], nu)?;
                f(a, b)
            }
            Expr::Globally(iv, _) | Expr::Eventually(iv, _) => {
                let is_g = matches!(node.expr, Expr::Globally(..));
                let a = self.signal(kids[0], nu)?;
                let (s, e) = first_window(times, &interval(iv, nu));
                let w = a[s..e].iter().copied();
                if is_g {
                    w.fold(f64::INFINITY, f64::min)
                } else {
                    w.fold(f64::NEG_INFINITY, f64::max)
                }
            }
            Expr::Until(iv, _, _) => {
                let a = self.signal(kids[0], nu)?;
                let b = self.signal(kids[1], nu)?;
                let (s, e) = first_window(times, &interval(iv, nu));
                until(&a[..e.max(s)], &b[..e.max(s)], &[(s, e)])[0]
            }
        })
    }
}

fn combiner(e: &Expr<Term>) -> fn(f64, f64) -> f64 {
    match e {
        Expr::And(..) => f64::min,
        Expr::Or(..) => f64::max,
        _ => |p: f64, q: f64| f64::max(-p, q),
    }
}

// Samples j with t_j - t_0 inside the interval, as a half-open range.
fn first_window(times: &[f64], iv: &Interval) -> (usize, usize) {
    let t0 = times[0];
    let mut s = 0;
    while s < times.len() && !iv.contains_offset(times[s] - t0) && times[s] - t0 <= iv.hi + TIME_EPS {
        s += 1;
    }
    let mut e = s;
    while e < times.len() && iv.contains_offset(times[e] - t0) {
        e += 1;
    }
    (s, e)
}
