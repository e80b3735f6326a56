//! Systematic enumeration of PSTL templates by increasing length.
//!
//! Length-1 templates are the parameterized predicates `s > ?p` and `s < ?p`
//! for every signal. Level `L` is built by applying each operator, in the
//! configured order, to stored templates whose lengths add up to `L - 1`.
//! Candidates are canonicalized and skipped when they are redundant or equal
//! to a stored template up to parameter renaming.

use std::collections::{HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::formula::{Atom, Cmp, Expr, Interval};
use crate::pstl::Term;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operator {
    Not,
    Globally,
    Eventually,
    And,
    Or,
    Implies,
    Until,
}

impl Operator {
    pub fn is_unary(self) -> bool {
        matches!(self, Operator::Not | Operator::Globally | Operator::Eventually)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GrammarConfig {
    /// Operators in application order.
    pub operators: Vec<Operator>,
    /// Largest template length (node count) to emit.
    pub max_length: usize,
    /// Emit `G[0,?t]` / `F[0,?t]` instead of `G[?t1,?t2]`.
    pub anchored_intervals: bool,
}

impl Default for GrammarConfig {
    fn default() -> Self {
        GrammarConfig {
            operators: vec![
                Operator::Not,
                Operator::Globally,
                Operator::Eventually,
                Operator::And,
                Operator::Or,
                Operator::Implies,
            ],
            max_length: 5,
            anchored_intervals: false,
        }
    }
}

type Template = Expr<Term>;

/// Stateful template generator; see the module docs.
#[derive(Debug, Clone)]
pub struct Enumerator {
    signals: Vec<String>,
    config: GrammarConfig,
    database: Vec<Vec<Template>>,
    seen: HashSet<String>,
    pending: VecDeque<Template>,
    built_len: usize,
    emitted: usize,
}

impl Enumerator {
    pub fn new(signals: impl IntoIterator<Item = impl Into<String>>, config: GrammarConfig) -> Self {
        Enumerator {
            signals: signals.into_iter().map(Into::into).collect(),
            config,
            database: vec![Vec::new()],
            seen: HashSet::new(),
            pending: VecDeque::new(),
            built_len: 0,
            emitted: 0,
        }
    }

    pub fn config(&self) -> &GrammarConfig {
        &self.config
    }

    /// Number of templates handed out so far.
    pub fn emitted(&self) -> usize {
        self.emitted
    }

    /// Next template, or `None` once every template up to `max_length` was emitted.
    pub fn next_pstl(&mut self) -> Option<Template> {
        while self.pending.is_empty() {
            if self.built_len >= self.config.max_length {
                return None;
            }
            self.build_level(self.built_len + 1);
            self.built_len += 1;
        }
        self.emitted += 1;
        self.pending.pop_front()
    }

    fn build_level(&mut self, len: usize) {
        let mut level = Vec::new();
        if len == 1 {
            for s in &self.signals {
                for cmp in [Cmp::Gt, Cmp::Lt] {
                    level.push(Expr::atom(s.clone(), cmp, Term::Param(String::new())));
                }
            }
        } else {
            for &op in &self.config.operators.clone() {
                if op.is_unary() {
                    for a in self.database[len - 1].clone() {
                        if let Some(c) = self.compose_unary(op, a) {
                            level.push(c);
                        }
                    }
                } else {
                    for la in 1..len - 1 {
                        let lb = len - 1 - la;
                        for a in &self.database[la] {
                            for b in &self.database[lb] {
                                level.push(self.compose_binary(op, a.clone(), b.clone()));
                            }
                        }
                    }
                }
            }
        }
        let mut stored = Vec::new();
        for cand in level {
            let Some(c) = canonicalize(&cand) else {
                continue;
            };
            if self.seen.insert(skeleton(&c)) {
                stored.push(c);
            }
        }
        self.pending.extend(stored.iter().cloned());
        self.database.push(stored);
    }

    fn window(&self) -> Interval<Term> {
        let fresh = || Term::Param(String::new());
        Interval {
            lo: if self.config.anchored_intervals {
                Term::Const(0.0)
            } else {
                fresh()
            },
            hi: fresh(),
            lo_closed: true,
            hi_closed: true,
        }
    }

    fn compose_unary(&self, op: Operator, a: Template) -> Option<Template> {
        Some(match op {
            // negation is only applied to predicates
            Operator::Not => match a {
                Expr::Atom(_) => a.not(),
                _ => return None,
            },
            Operator::Globally => Expr::globally(self.window(), a),
            Operator::Eventually => Expr::eventually(self.window(), a),
            _ => unreachable!("binary operator"),
        })
    }

    fn compose_binary(&self, op: Operator, a: Template, b: Template) -> Template {
        match op {
            Operator::And => a.and(b),
            Operator::Or => a.or(b),
            Operator::Implies => a.implies(b),
            Operator::Until => Expr::until(self.window(), a, b),
            _ => unreachable!("unary operator"),
        }
    }
}

impl Iterator for Enumerator {
    type Item = Template;

    fn next(&mut self) -> Option<Template> {
        self.next_pstl()
    }
}

/// Template text with every parameter printed as a bare `?`; equal skeletons
/// mean equal templates up to parameter renaming.
pub fn skeleton(t: &Template) -> String {
    let anon: Template = t
        .try_map(&mut |term: &Term| {
            Ok::<_, ()>(match term {
                Term::Const(c) => Term::Const(*c),
                Term::Param(_) => Term::Param(String::new()),
            })
        })
        .expect("infallible");
    anon.to_string()
}

/// Rewrite a template into canonical form, or reject it as redundant.
///
/// Rewrites: `!!a` to `a`; `!(s ~ p)` to the complementary predicate; `>=`
/// and `<=` to `>` and `<` (same robustness); operands of `&&`/`||` sorted by
/// skeleton. Rejections: `a && a`, `a || a`, `G(G(..))`, `F(F(..))`.
/// Parameters are renamed `t1, t2, ..` (time) and `p1, p2, ..` (value) in
/// order of occurrence.
pub fn canonicalize(t: &Template) -> Option<Template> {
    Some(rename_params(&canon(t)?))
}

fn canon(t: &Template) -> Option<Template> {
    Some(match t {
        Expr::True => Expr::True,
        Expr::Atom(a) => Expr::Atom(Atom {
            signal: a.signal.clone(),
            cmp: strict(a.cmp),
            value: a.value.clone(),
        }),
        Expr::Not(inner) => match inner.as_ref() {
            Expr::Not(x) => canon(x)?,
            Expr::Atom(a) => Expr::Atom(Atom {
                signal: a.signal.clone(),
                cmp: strict(a.cmp.negate()),
                value: a.value.clone(),
            }),
            other => canon(other)?.not(),
        },
        Expr::And(a, b) | Expr::Or(a, b) => {
            let (a, b) = (canon(a)?, canon(b)?);
            let (ka, kb) = (skeleton(&a), skeleton(&b));
            if ka == kb {
                return None;
            }
            let (a, b) = if ka <= kb { (a, b) } else { (b, a) };
            if matches!(t, Expr::And(..)) {
                a.and(b)
            } else {
                a.or(b)
            }
        }
        Expr::Implies(a, b) => canon(a)?.implies(canon(b)?),
        Expr::Globally(iv, a) => {
            if matches!(a.as_ref(), Expr::Globally(..)) {
                return None;
            }
            Expr::globally(iv.clone(), canon(a)?)
        }
        Expr::Eventually(iv, a) => {
            if matches!(a.as_ref(), Expr::Eventually(..)) {
                return None;
            }
            Expr::eventually(iv.clone(), canon(a)?)
        }
        Expr::Until(iv, a, b) => Expr::until(iv.clone(), canon(a)?, canon(b)?),
    })
}

fn strict(c: Cmp) -> Cmp {
    match c {
        Cmp::Ge | Cmp::Gt => Cmp::Gt,
        Cmp::Le | Cmp::Lt => Cmp::Lt,
    }
}

fn rename_params(t: &Template) -> Template {
    struct Namer {
        time: usize,
        value: usize,
    }
    fn go(e: &Template, n: &mut Namer) -> Template {
        let mut time = |term: &Term, n: &mut Namer| match term {
            Term::Const(c) => Term::Const(*c),
            Term::Param(_) => {
                n.time += 1;
                Term::Param(format!("t{}", n.time))
            }
        };
        let win = |iv: &Interval<Term>, n: &mut Namer, time: &mut dyn FnMut(&Term, &mut Namer) -> Term| {
            Interval {
                lo: time(&iv.lo, n),
                hi: time(&iv.hi, n),
                lo_closed: iv.lo_closed,
                hi_closed: iv.hi_closed,
            }
        };
        match e {
            Expr::True => Expr::True,
            Expr::Atom(a) => Expr::Atom(Atom {
                signal: a.signal.clone(),
                cmp: a.cmp,
                value: match &a.value {
                    Term::Const(c) => Term::Const(*c),
                    Term::Param(_) => {
                        n.value += 1;
                        Term::Param(format!("p{}", n.value))
                    }
                },
            }),
            Expr::Not(a) => go(a, n).not(),
            Expr::And(a, b) => {
                let a = go(a, n);
                a.and(go(b, n))
            }
            Expr::Or(a, b) => {
                let a = go(a, n);
                a.or(go(b, n))
            }
            Expr::Implies(a, b) => {
                let a = go(a, n);
                a.implies(go(b, n))
            }
            Expr::Globally(iv, a) => {
                let iv = win(iv, n, &mut time);
                Expr::globally(iv, go(a, n))
            }
            Expr::Eventually(iv, a) => {
                let iv = win(iv, n, &mut time);
                Expr::eventually(iv, go(a, n))
            }
            Expr::Until(iv, a, b) => {
                let iv = win(iv, n, &mut time);
                let a = go(a, n);
                Expr::until(iv, a, go(b, n))
            }
        }
    }
    go(t, &mut Namer { time: 0, value: 0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_template;

    fn all(signals: &[&str], cfg: GrammarConfig) -> Vec<Template> {
        Enumerator::new(signals.iter().copied(), cfg).collect()
    }

    #[test]
    fn first_emissions_are_predicates() {
        let mut e = Enumerator::new(["x"], GrammarConfig::default());
        assert_eq!(e.next_pstl().unwrap().to_string(), "x > ?p1");
        assert_eq!(e.next_pstl().unwrap().to_string(), "x < ?p1");
    }

    #[test]
    fn lengths_are_non_decreasing_and_bounded() {
        let cfg = GrammarConfig {
            max_length: 4,
            ..Default::default()
        };
        let ts = all(&["x", "y"], cfg);
        assert!(ts.windows(2).all(|w| w[0].len() <= w[1].len()));
        assert!(ts.iter().all(|t| t.len() <= 4));
        assert_eq!(ts.last().unwrap().len(), 4);
    }

    #[test]
    fn globally_predicate_precedes_length_four() {
        let cfg = GrammarConfig {
            max_length: 4,
            ..Default::default()
        };
        let ts = all(&["x"], cfg);
        let target = skeleton(&parse_template("G[?a,?b](x < ?c)").unwrap());
        let pos = ts.iter().position(|t| skeleton(t) == target).unwrap();
        let first4 = ts.iter().position(|t| t.len() == 4).unwrap();
        assert!(pos < first4);
    }

    #[test]
    fn canonicalization_examples() {
        let t = parse_template("!!(x > ?p)").unwrap();
        assert_eq!(canonicalize(&t).unwrap().to_string(), "x > ?p1");
        let a = canonicalize(&parse_template("x < ?p && x > ?q").unwrap()).unwrap();
        let b = canonicalize(&parse_template("x > ?q && x < ?p").unwrap()).unwrap();
        assert_eq!(a, b);
        assert!(canonicalize(&parse_template("G[?a,?b](G[?c,?d](x > ?p))").unwrap()).is_none());
        assert!(canonicalize(&parse_template("F[?a,?b](F[?c,?d](x > ?p))").unwrap()).is_none());
        assert!(canonicalize(&parse_template("x > ?p || x > ?q").unwrap()).is_none());
    }

    #[test]
    fn no_nested_same_temporal_operator_in_first_10000() {
        let cfg = GrammarConfig {
            max_length: 7,
            ..Default::default()
        };
        let mut n = 0;
        for t in Enumerator::new(["x", "y"], cfg).take(10_000) {
            fn nested(e: &Template) -> bool {
                match e {
                    Expr::Globally(_, a) => matches!(a.as_ref(), Expr::Globally(..)) || nested(a),
                    Expr::Eventually(_, a) => {
                        matches!(a.as_ref(), Expr::Eventually(..)) || nested(a)
                    }
                    Expr::Not(a) => nested(a),
                    Expr::And(a, b) | Expr::Or(a, b) | Expr::Implies(a, b) | Expr::Until(_, a, b) => {
                        nested(a) || nested(b)
                    }
                    _ => false,
                }
            }
            assert!(!nested(&t));
            n += 1;
        }
        assert_eq!(n, 10_000);
    }

    #[test]
    fn oscillator_shape_is_reachable() {
        let target = skeleton(
            &canonicalize(&parse_template("G[?a,?b](u1 < ?c1 -> G[?d,?e](u2 >= ?c2))").unwrap())
                .unwrap(),
        );
        let found = Enumerator::new(["u1", "u2"], GrammarConfig::default())
            .any(|t| skeleton(&t) == target);
        assert!(found);
    }

    #[test]
    fn anchored_windows() {
        let cfg = GrammarConfig {
            max_length: 2,
            anchored_intervals: true,
            ..Default::default()
        };
        let ts: Vec<String> = all(&["x"], cfg).iter().map(|t| t.to_string()).collect();
        assert!(ts.contains(&"G[0,?t1](x > ?p1)".to_string()));
    }

    #[test]
    fn emissions_are_unique_and_reparse() {
        let cfg = GrammarConfig {
            max_length: 5,
            operators: vec![
                Operator::Not,
                Operator::Globally,
                Operator::Eventually,
                Operator::And,
                Operator::Or,
                Operator::Implies,
                Operator::Until,
            ],
            ..Default::default()
        };
        let ts = all(&["x", "y"], cfg);
        let mut keys = HashSet::new();
        for t in &ts {
            assert!(keys.insert(skeleton(t)), "duplicate {t}");
            let text = t.to_string();
            let back = parse_template(&text).unwrap();
            assert_eq!(&back, t);
            assert_eq!(back.to_string(), text);
        }
    }
}
