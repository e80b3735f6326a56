//! STL abstract syntax.
//!
//! The tree is generic over the type stored at numeric positions (atom
//! thresholds and interval endpoints). Concrete formulas use `f64`; templates
//! use [`Term`](crate::pstl::Term), which may reference a parameter.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormulaError {
    #[error("malformed interval: {0}")]
    BadInterval(String),
    #[error("atom constant for `{0}` is not finite")]
    NonFiniteConstant(String),
    #[error("formula is not in negation normal form")]
    NotNnf,
}

/// Comparison operator of an atomic predicate `signal ~ constant`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cmp {
    Ge,
    Gt,
    Le,
    Lt,
}

impl Cmp {
    /// Comparator of the negated predicate: `!(x >= c)` is `x < c`.
    pub fn negate(self) -> Cmp {
        match self {
            Cmp::Ge => Cmp::Lt,
            Cmp::Gt => Cmp::Le,
            Cmp::Le => Cmp::Gt,
            Cmp::Lt => Cmp::Ge,
        }
    }

    /// Comparator with operands swapped: `c <= x` is `x >= c`.
    pub fn mirror(self) -> Cmp {
        match self {
            Cmp::Ge => Cmp::Le,
            Cmp::Gt => Cmp::Lt,
            Cmp::Le => Cmp::Ge,
            Cmp::Lt => Cmp::Gt,
        }
    }

    /// True for `>=` and `>`, whose robustness grows with the signal.
    pub fn is_lower_bound(self) -> bool {
        matches!(self, Cmp::Ge | Cmp::Gt)
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Cmp::Ge => ">=",
            Cmp::Gt => ">",
            Cmp::Le => "<=",
            Cmp::Lt => "<",
        }
    }
}

/// Time window `lo..hi` with independent endpoint closure.
#[derive(Debug, Clone, PartialEq)]
pub struct Interval<V = f64> {
    pub lo: V,
    pub hi: V,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl<V> Interval<V> {
    pub fn map<W, E>(&self, mut f: impl FnMut(&V) -> Result<W, E>) -> Result<Interval<W>, E> {
        Ok(Interval {
            lo: f(&self.lo)?,
            hi: f(&self.hi)?,
            lo_closed: self.lo_closed,
            hi_closed: self.hi_closed,
        })
    }
}

impl Interval<f64> {
    pub fn new(lo: f64, hi: f64, lo_closed: bool, hi_closed: bool) -> Result<Self, FormulaError> {
        let iv = Interval {
            lo,
            hi,
            lo_closed,
            hi_closed,
        };
        iv.validate()?;
        Ok(iv)
    }

    pub fn closed(lo: f64, hi: f64) -> Result<Self, FormulaError> {
        Self::new(lo, hi, true, true)
    }

    /// `[0, inf)`, the window of an unannotated `G`/`F`.
    pub fn unbounded() -> Self {
        Interval {
            lo: 0.0,
            hi: f64::INFINITY,
            lo_closed: true,
            hi_closed: false,
        }
    }

    pub fn is_unbounded(&self) -> bool {
        self.lo == 0.0 && self.lo_closed && self.hi == f64::INFINITY
    }

    pub fn validate(&self) -> Result<(), FormulaError> {
        let Interval {
            lo,
            hi,
            lo_closed,
            hi_closed,
        } = *self;
        if lo.is_nan() || hi.is_nan() || !lo.is_finite() {
            return Err(FormulaError::BadInterval(format!("{self}")));
        }
        if lo < 0.0 || lo > hi {
            return Err(FormulaError::BadInterval(format!("{self}: need 0 <= lo <= hi")));
        }
        if lo == hi && !(lo_closed && hi_closed) {
            return Err(FormulaError::BadInterval(format!(
                "{self}: a point interval must be closed"
            )));
        }
        Ok(())
    }

    /// Whether the offset `d = t' - t` lies in the window.
    ///
    /// Offsets are compared with a small absolute tolerance so that stamps
    /// produced as `i * dt` land on nominally equal endpoints.
    #[inline]
    pub fn contains_offset(&self, d: f64) -> bool {
        use crate::trace::TIME_EPS;
        let above_lo = if self.lo_closed {
            d >= self.lo - TIME_EPS
        } else {
            d > self.lo + TIME_EPS
        };
        let below_hi = if self.hi_closed {
            d <= self.hi + TIME_EPS
        } else {
            d < self.hi - TIME_EPS
        };
        above_lo && below_hi
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atom<V = f64> {
    pub signal: String,
    pub cmp: Cmp,
    pub value: V,
}

/// STL formula tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr<V = f64> {
    True,
    Atom(Atom<V>),
    Not(Box<Expr<V>>),
    And(Box<Expr<V>>, Box<Expr<V>>),
    Or(Box<Expr<V>>, Box<Expr<V>>),
    Implies(Box<Expr<V>>, Box<Expr<V>>),
    Globally(Interval<V>, Box<Expr<V>>),
    Eventually(Interval<V>, Box<Expr<V>>),
    Until(Interval<V>, Box<Expr<V>>, Box<Expr<V>>),
}

/// A concrete STL formula.
pub type Formula = Expr<f64>;

impl<V> Expr<V> {
    pub fn atom(signal: impl Into<String>, cmp: Cmp, value: V) -> Self {
        Expr::Atom(Atom {
            signal: signal.into(),
            cmp,
            value,
        })
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        Expr::Not(Box::new(self))
    }

    pub fn and(self, rhs: Self) -> Self {
        Expr::And(Box::new(self), Box::new(rhs))
    }

    pub fn or(self, rhs: Self) -> Self {
        Expr::Or(Box::new(self), Box::new(rhs))
    }

    pub fn implies(self, rhs: Self) -> Self {
        Expr::Implies(Box::new(self), Box::new(rhs))
    }

    pub fn globally(iv: Interval<V>, body: Self) -> Self {
        Expr::Globally(iv, Box::new(body))
    }

    pub fn eventually(iv: Interval<V>, body: Self) -> Self {
        Expr::Eventually(iv, Box::new(body))
    }

    pub fn until(iv: Interval<V>, lhs: Self, rhs: Self) -> Self {
        Expr::Until(iv, Box::new(lhs), Box::new(rhs))
    }

    /// Number of AST nodes; an interval-annotated operator counts once.
    pub fn len(&self) -> usize {
        match self {
            Expr::True | Expr::Atom(_) => 1,
            Expr::Not(a) | Expr::Globally(_, a) | Expr::Eventually(_, a) => 1 + a.len(),
            Expr::And(a, b) | Expr::Or(a, b) | Expr::Implies(a, b) | Expr::Until(_, a, b) => {
                1 + a.len() + b.len()
            }
        }
    }

    /// Signal names occurring in atomic predicates.
    pub fn support(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_support(&mut out);
        out
    }

    fn collect_support(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::True => {}
            Expr::Atom(a) => {
                out.insert(a.signal.clone());
            }
            Expr::Not(a) | Expr::Globally(_, a) | Expr::Eventually(_, a) => a.collect_support(out),
            Expr::And(a, b) | Expr::Or(a, b) | Expr::Implies(a, b) | Expr::Until(_, a, b) => {
                a.collect_support(out);
                b.collect_support(out);
            }
        }
    }

    /// Rebuild the tree with every numeric slot passed through `f`.
    pub fn try_map<W, E>(&self, f: &mut impl FnMut(&V) -> Result<W, E>) -> Result<Expr<W>, E> {
        Ok(match self {
            Expr::True => Expr::True,
            Expr::Atom(a) => Expr::Atom(Atom {
                signal: a.signal.clone(),
                cmp: a.cmp,
                value: f(&a.value)?,
            }),
            Expr::Not(a) => Expr::Not(Box::new(a.try_map(f)?)),
            Expr::And(a, b) => Expr::And(Box::new(a.try_map(f)?), Box::new(b.try_map(f)?)),
            Expr::Or(a, b) => Expr::Or(Box::new(a.try_map(f)?), Box::new(b.try_map(f)?)),
            Expr::Implies(a, b) => {
                Expr::Implies(Box::new(a.try_map(f)?), Box::new(b.try_map(f)?))
            }
            Expr::Globally(iv, a) => Expr::Globally(iv.map(&mut *f)?, Box::new(a.try_map(f)?)),
            Expr::Eventually(iv, a) => {
                Expr::Eventually(iv.map(&mut *f)?, Box::new(a.try_map(f)?))
            }
            Expr::Until(iv, a, b) => Expr::Until(
                iv.map(&mut *f)?,
                Box::new(a.try_map(f)?),
                Box::new(b.try_map(f)?),
            ),
        })
    }

    /// Visit every atom, left to right.
    pub fn for_each_atom<'a>(&'a self, f: &mut impl FnMut(&'a Atom<V>)) {
        match self {
            Expr::True => {}
            Expr::Atom(a) => f(a),
            Expr::Not(a) | Expr::Globally(_, a) | Expr::Eventually(_, a) => a.for_each_atom(f),
            Expr::And(a, b) | Expr::Or(a, b) | Expr::Implies(a, b) | Expr::Until(_, a, b) => {
                a.for_each_atom(f);
                b.for_each_atom(f);
            }
        }
    }

    /// Whether negation appears only directly above `true` or an `Until`
    /// (which has no dual among the supported operators) and `->` is absent.
    pub fn is_nnf(&self) -> bool {
        match self {
            Expr::True | Expr::Atom(_) => true,
            Expr::Not(a) => match a.as_ref() {
                Expr::True => true,
                Expr::Until(_, l, r) => l.is_nnf() && r.is_nnf(),
                _ => false,
            },
            Expr::Implies(..) => false,
            Expr::Globally(_, a) | Expr::Eventually(_, a) => a.is_nnf(),
            Expr::And(a, b) | Expr::Or(a, b) | Expr::Until(_, a, b) => a.is_nnf() && b.is_nnf(),
        }
    }
}

impl<V: Clone> Expr<V> {
    /// Negation normal form: negations are absorbed into atom comparators,
    /// `a -> b` becomes `!a || b`, and `G`/`F` are dualized.
    ///
    /// `!true` is kept as the false constant and `!(a U b)` keeps its
    /// negation, since no release operator exists. Robustness is preserved
    /// exactly at every sample.
    pub fn to_nnf(&self) -> Expr<V> {
        self.nnf(false)
    }

    fn nnf(&self, neg: bool) -> Expr<V> {
        match (self, neg) {
            (Expr::True, false) => Expr::True,
            (Expr::True, true) => Expr::True.not(),
            (Expr::Atom(a), _) => Expr::Atom(Atom {
                signal: a.signal.clone(),
                cmp: if neg { a.cmp.negate() } else { a.cmp },
                value: a.value.clone(),
            }),
            (Expr::Not(a), _) => a.nnf(!neg),
            (Expr::And(a, b), false) => a.nnf(false).and(b.nnf(false)),
            (Expr::And(a, b), true) => a.nnf(true).or(b.nnf(true)),
            (Expr::Or(a, b), false) => a.nnf(false).or(b.nnf(false)),
            (Expr::Or(a, b), true) => a.nnf(true).and(b.nnf(true)),
            (Expr::Implies(a, b), false) => a.nnf(true).or(b.nnf(false)),
            (Expr::Implies(a, b), true) => a.nnf(false).and(b.nnf(true)),
            (Expr::Globally(iv, a), false) => Expr::globally(iv.clone(), a.nnf(false)),
            (Expr::Globally(iv, a), true) => Expr::eventually(iv.clone(), a.nnf(true)),
            (Expr::Eventually(iv, a), false) => Expr::eventually(iv.clone(), a.nnf(false)),
            (Expr::Eventually(iv, a), true) => Expr::globally(iv.clone(), a.nnf(true)),
            (Expr::Until(iv, a, b), _) => {
                let u = Expr::until(iv.clone(), a.nnf(false), b.nnf(false));
                if neg {
                    u.not()
                } else {
                    u
                }
            }
        }
    }
}

impl Formula {
    /// Check the invariants a parsed or instantiated formula must hold.
    pub fn validate(&self) -> Result<(), FormulaError> {
        match self {
            Expr::True => Ok(()),
            Expr::Atom(a) => {
                if a.value.is_finite() {
                    Ok(())
                } else {
                    Err(FormulaError::NonFiniteConstant(a.signal.clone()))
                }
            }
            Expr::Not(a) => a.validate(),
            Expr::And(a, b) | Expr::Or(a, b) | Expr::Implies(a, b) => {
                a.validate()?;
                b.validate()
            }
            Expr::Globally(iv, a) | Expr::Eventually(iv, a) => {
                iv.validate()?;
                a.validate()
            }
            Expr::Until(iv, a, b) => {
                iv.validate()?;
                a.validate()?;
                b.validate()
            }
        }
    }
}

// Binding strength used by the printer; must agree with the parser.
fn precedence<V>(e: &Expr<V>) -> u8 {
    match e {
        Expr::Implies(..) => 1,
        Expr::Or(..) => 2,
        Expr::And(..) => 3,
        Expr::Until(..) => 4,
        _ => 5,
    }
}

struct Paren<'a, V>(&'a Expr<V>, bool);

impl<V: fmt::Display> fmt::Display for Paren<'_, V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.1 {
            write!(f, "({})", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl<V: fmt::Display> fmt::Display for Interval<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{},{}{}",
            if self.lo_closed { '[' } else { '(' },
            self.lo,
            self.hi,
            if self.hi_closed { ']' } else { ')' }
        )
    }
}

// `G(...)` without a window is printed only for the exact unbounded interval.
fn fmt_window<V: fmt::Display>(iv: &Interval<V>, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let text = iv.to_string();
    if text == "[0,inf)" {
        Ok(())
    } else {
        f.write_str(&text)
    }
}

impl<V: fmt::Display> fmt::Display for Expr<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = precedence(self);
        match self {
            Expr::True => f.write_str("true"),
            Expr::Atom(a) => write!(f, "{} {} {}", a.signal, a.cmp.symbol(), a.value),
            Expr::Not(a) => write!(f, "!({a})"),
            Expr::And(a, b) | Expr::Or(a, b) => {
                let op = if matches!(self, Expr::And(..)) {
                    "&&"
                } else {
                    "||"
                };
                // left-associative
                write!(
                    f,
                    "{} {op} {}",
                    Paren(a, precedence(a) < p),
                    Paren(b, precedence(b) <= p)
                )
            }
            Expr::Implies(a, b) => {
                // right-associative
                write!(
                    f,
                    "{} -> {}",
                    Paren(a, precedence(a) <= p),
                    Paren(b, precedence(b) < p)
                )
            }
            Expr::Until(iv, a, b) => {
                write!(f, "{} U", Paren(a, precedence(a) <= p))?;
                fmt_window(iv, f)?;
                write!(f, " {}", Paren(b, precedence(b) <= p))
            }
            Expr::Globally(iv, a) | Expr::Eventually(iv, a) => {
                f.write_str(if matches!(self, Expr::Globally(..)) {
                    "G"
                } else {
                    "F"
                })?;
                fmt_window(iv, f)?;
                write!(f, "({a})")
            }
        }
    }
}
