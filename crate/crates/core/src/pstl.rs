//! Parametric STL: templates, valuations, parameter spaces and grid sampling.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{Expr, Formula, Interval};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PstlError {
    #[error("parameter `{0}` has no value")]
    MissingParameter(String),
    #[error("parameter `{name}` = {value} outside [{lo}, {hi}]")]
    OutOfRange {
        name: String,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("interval ordering violated: {0}")]
    IntervalOrder(String),
    #[error("parameter `{0}` used both as a time bound and as an atom threshold")]
    MixedKind(String),
    #[error("no range given for parameter `{0}`")]
    MissingRange(String),
    #[error("bad range for parameter `{name}`: [{lo}, {hi}]")]
    BadRange { name: String, lo: f64, hi: f64 },
    #[error("parameter space is empty under its interval constraints")]
    EmptySpace,
    #[error("requested {requested} samples but the space only holds {available}")]
    TooFewPoints { requested: usize, available: usize },
    #[error("sample count must be at least 1")]
    ZeroSamples,
}

/// Numeric slot of a template: a constant or a named parameter.
#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    Const(f64),
    Param(String),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(v) => write!(f, "{v}"),
            Term::Param(p) => write!(f, "?{p}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamKind {
    Value,
    Time,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameter {
    pub name: String,
    pub kind: ParamKind,
    pub lo: f64,
    pub hi: f64,
}

/// Where a parameter occurs in a template.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamUse {
    /// Threshold of an atom over `signal`.
    Value { signal: String },
    Time,
}

/// Parameter assignment.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Valuation(pub BTreeMap<String, f64>);

impl Valuation {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }
}

impl<S: Into<String>> FromIterator<(S, f64)> for Valuation {
    fn from_iter<I: IntoIterator<Item = (S, f64)>>(iter: I) -> Self {
        Valuation(iter.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            write!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

/// Interval whose endpoints involve at least one parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalConstraint(pub Interval<Term>);

/// Product box of parameter ranges plus the ordering constraints of every
/// parameterized interval.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpace {
    pub params: Vec<Parameter>,
    pub constraints: Vec<IntervalConstraint>,
}

/// A template together with its declared parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ParametricFormula {
    template: Expr<Term>,
    params: Vec<Parameter>,
    interval_pairs: Vec<(String, String)>,
    constraints: Vec<IntervalConstraint>,
}

/// Parameter names in order of first occurrence, with their use sites.
pub fn parameter_uses(template: &Expr<Term>) -> Result<Vec<(String, ParamUse)>, PstlError> {
    fn visit(e: &Expr<Term>, out: &mut Vec<(String, ParamUse)>) -> Result<(), PstlError> {
        let note = |term: &Term, u: ParamUse, out: &mut Vec<(String, ParamUse)>| {
            if let Term::Param(p) = term {
                match out.iter().find(|(n, _)| n == p) {
                    Some((_, prev)) => {
                        if std::mem::discriminant(prev) != std::mem::discriminant(&u) {
                            return Err(PstlError::MixedKind(p.clone()));
                        }
                    }
                    None => out.push((p.clone(), u)),
                }
            }
            Ok(())
        };
        match e {
            Expr::True => Ok(()),
            Expr::Atom(a) => note(
                &a.value,
                ParamUse::Value {
                    signal: a.signal.clone(),
                },
                out,
            ),
            Expr::Not(a) => visit(a, out),
            Expr::And(a, b) | Expr::Or(a, b) | Expr::Implies(a, b) => {
                visit(a, out)?;
                visit(b, out)
            }
            Expr::Globally(iv, a) | Expr::Eventually(iv, a) => {
                note(&iv.lo, ParamUse::Time, out)?;
                note(&iv.hi, ParamUse::Time, out)?;
                visit(a, out)
            }
            Expr::Until(iv, a, b) => {
                note(&iv.lo, ParamUse::Time, out)?;
                note(&iv.hi, ParamUse::Time, out)?;
                visit(a, out)?;
                visit(b, out)
            }
        }
    }
    let mut out = Vec::new();
    visit(template, &mut out)?;
    Ok(out)
}

fn collect_intervals(e: &Expr<Term>, out: &mut Vec<Interval<Term>>) {
    match e {
        Expr::True | Expr::Atom(_) => {}
        Expr::Not(a) => collect_intervals(a, out),
        Expr::And(a, b) | Expr::Or(a, b) | Expr::Implies(a, b) => {
            collect_intervals(a, out);
            collect_intervals(b, out);
        }
        Expr::Globally(iv, a) | Expr::Eventually(iv, a) => {
            out.push(iv.clone());
            collect_intervals(a, out);
        }
        Expr::Until(iv, a, b) => {
            out.push(iv.clone());
            collect_intervals(a, out);
            collect_intervals(b, out);
        }
    }
}

impl ParametricFormula {
    /// Attach a range to every parameter of `template` using `range_of`.
    pub fn new(
        template: Expr<Term>,
        mut range_of: impl FnMut(&str, &ParamUse) -> Option<(f64, f64)>,
    ) -> Result<Self, PstlError> {
        let mut params = Vec::new();
        for (name, u) in parameter_uses(&template)? {
            let (lo, hi) = range_of(&name, &u).ok_or_else(|| PstlError::MissingRange(name.clone()))?;
            let kind = match u {
                ParamUse::Value { .. } => ParamKind::Value,
                ParamUse::Time => ParamKind::Time,
            };
            if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() || (kind == ParamKind::Time && lo < 0.0) {
                return Err(PstlError::BadRange { name, lo, hi });
            }
            params.push(Parameter { name, kind, lo, hi });
        }
        let mut intervals = Vec::new();
        collect_intervals(&template, &mut intervals);
        let mut interval_pairs = Vec::new();
        let mut constraints = Vec::new();
        for iv in intervals {
            match (&iv.lo, &iv.hi) {
                (Term::Param(a), Term::Param(b)) => {
                    interval_pairs.push((a.clone(), b.clone()));
                    constraints.push(IntervalConstraint(iv));
                }
                (Term::Param(_), _) | (_, Term::Param(_)) => constraints.push(IntervalConstraint(iv)),
                _ => {}
            }
        }
        let psi = ParametricFormula {
            template,
            params,
            interval_pairs,
            constraints,
        };
        Ok(psi)
    }

    /// Template with ranges given by name.
    pub fn with_ranges(
        template: Expr<Term>,
        ranges: &BTreeMap<String, (f64, f64)>,
    ) -> Result<Self, PstlError> {
        Self::new(template, |name, _| ranges.get(name).copied())
    }

    pub fn template(&self) -> &Expr<Term> {
        &self.template
    }

    pub fn params(&self) -> &[Parameter] {
        &self.params
    }

    pub fn interval_pairs(&self) -> &[(String, String)] {
        &self.interval_pairs
    }

    pub fn space(&self) -> ParamSpace {
        ParamSpace {
            params: self.params.clone(),
            constraints: self.constraints.clone(),
        }
    }

    /// Signals of the template's atoms.
    pub fn support(&self) -> BTreeSet<String> {
        self.template.support()
    }

    /// Substitute `nu` into the template.
    pub fn instantiate(&self, nu: &Valuation) -> Result<Formula, PstlError> {
        for p in &self.params {
            let v = nu
                .get(&p.name)
                .ok_or_else(|| PstlError::MissingParameter(p.name.clone()))?;
            if !(v >= p.lo && v <= p.hi) {
                return Err(PstlError::OutOfRange {
                    name: p.name.clone(),
                    value: v,
                    lo: p.lo,
                    hi: p.hi,
                });
            }
        }
        self.space().check_constraints(nu)?;
        let f = self.template.try_map(&mut |t: &Term| match t {
            Term::Const(c) => Ok(*c),
            Term::Param(p) => nu.get(p).ok_or_else(|| PstlError::MissingParameter(p.clone())),
        })?;
        f.validate()
            .map_err(|e| PstlError::IntervalOrder(e.to_string()))?;
        Ok(f)
    }
}

impl fmt::Display for ParametricFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.template)
    }
}

fn resolve(t: &Term, nu: &Valuation) -> Option<f64> {
    match t {
        Term::Const(c) => Some(*c),
        Term::Param(p) => nu.get(p),
    }
}

impl ParamSpace {
    /// Interval-ordering check: two parameters in one interval must satisfy
    /// `lo < hi`; a parameter against a constant must give a well-formed interval.
    pub fn check_constraints(&self, nu: &Valuation) -> Result<(), PstlError> {
        for IntervalConstraint(iv) in &self.constraints {
            let lo = resolve(&iv.lo, nu).ok_or_else(|| PstlError::MissingParameter(iv.lo.to_string()))?;
            let hi = resolve(&iv.hi, nu).ok_or_else(|| PstlError::MissingParameter(iv.hi.to_string()))?;
            let both = matches!((&iv.lo, &iv.hi), (Term::Param(_), Term::Param(_)));
            let ok = if both {
                lo < hi
            } else {
                Interval::new(lo, hi, iv.lo_closed, iv.hi_closed).is_ok()
            };
            if !ok {
                return Err(PstlError::IntervalOrder(format!(
                    "{}{},{}{} with {nu}",
                    if iv.lo_closed { '[' } else { '(' },
                    iv.lo,
                    iv.hi,
                    if iv.hi_closed { ']' } else { ')' }
                )));
            }
        }
        Ok(())
    }

    pub fn contains(&self, nu: &Valuation) -> bool {
        self.params.iter().all(|p| {
            nu.get(&p.name)
                .is_some_and(|v| v >= p.lo && v <= p.hi)
        }) && self.check_constraints(nu).is_ok()
    }

    /// `m` valuations on a regular axis-aligned lattice over the box.
    ///
    /// Per-axis point counts start as equal as possible with a product of at
    /// least `m`; lattice points are enumerated with the first parameter
    /// varying slowest, points breaking an interval constraint are dropped,
    /// and axes are refined one at a time (round robin) until `m` valid
    /// points exist. The first `m` are returned.
    pub fn grid_sample(&self, m: usize) -> Result<Vec<Valuation>, PstlError> {
        if m == 0 {
            return Err(PstlError::ZeroSamples);
        }
        let d = self.params.len();
        if d == 0 {
            return Ok(vec![Valuation::default(); m]);
        }
        let degenerate: Vec<bool> = self.params.iter().map(|p| p.lo == p.hi).collect();
        let growable: Vec<usize> = (0..d).filter(|&i| !degenerate[i]).collect();
        let mut counts = vec![1usize; d];
        if !growable.is_empty() {
            let mut k = 1usize;
            while (k + 1).checked_pow(growable.len() as u32).is_some_and(|p| p <= m) {
                k += 1;
            }
            for &i in &growable {
                counts[i] = k;
            }
        }
        let mut next_axis = 0;
        let grow = |counts: &mut Vec<usize>, next_axis: &mut usize| -> bool {
            if growable.is_empty() {
                return false;
            }
            let i = growable[*next_axis % growable.len()];
            counts[i] += 1;
            *next_axis += 1;
            true
        };
        while lattice_size(&counts) < m {
            if !grow(&mut counts, &mut next_axis) {
                break;
            }
        }
        let cap = m.saturating_mul(64).max(1 << 16);
        loop {
            let valid = self.lattice(&counts, m);
            if valid.len() >= m {
                return Ok(valid);
            }
            if lattice_size(&counts) > cap || !grow(&mut counts, &mut next_axis) {
                return Err(if valid.is_empty() {
                    PstlError::EmptySpace
                } else {
                    PstlError::TooFewPoints {
                        requested: m,
                        available: valid.len(),
                    }
                });
            }
        }
    }

    fn lattice(&self, counts: &[usize], limit: usize) -> Vec<Valuation> {
        let axes: Vec<Vec<f64>> = self
            .params
            .iter()
            .zip(counts)
            .map(|(p, &k)| axis_points(p.lo, p.hi, k))
            .collect();
        let total = lattice_size(counts);
        let mut out = Vec::new();
        let mut idx = vec![0usize; axes.len()];
        for _ in 0..total {
            let nu: Valuation = self
                .params
                .iter()
                .zip(&idx)
                .enumerate()
                .map(|(a, (p, &j))| (p.name.clone(), axes[a][j]))
                .collect();
            if self.check_constraints(&nu).is_ok() {
                out.push(nu);
                if out.len() == limit {
                    break;
                }
            }
            // odometer, last axis fastest
            for a in (0..idx.len()).rev() {
                idx[a] += 1;
                if idx[a] < counts[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
        out
    }
}

fn lattice_size(counts: &[usize]) -> usize {
    counts.iter().fold(1usize, |acc, &c| acc.saturating_mul(c))
}

fn axis_points(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    if k <= 1 || lo == hi {
        return vec![if lo == hi { lo } else { lo + (hi - lo) / 2.0 }];
    }
    (0..k)
        .map(|j| {
            if j == k - 1 {
                hi
            } else {
                lo + (hi - lo) * j as f64 / (k - 1) as f64
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_formula, parse_template};

    fn ranges(pairs: &[(&str, f64, f64)]) -> BTreeMap<String, (f64, f64)> {
        pairs.iter().map(|(n, a, b)| (n.to_string(), (*a, *b))).collect()
    }

    #[test]
    fn instantiate_example_two() {
        let t = parse_template("G[0,?tau](x > ?c1 && y < ?c2)").unwrap();
        let psi = ParametricFormula::with_ranges(
            t,
            &ranges(&[("tau", 0.0, 10.0), ("c1", 1.0, 2.0), ("c2", 0.0, 3.0)]),
        )
        .unwrap();
        assert_eq!(psi.params().len(), 3);
        assert_eq!(psi.params()[0].kind, ParamKind::Time);
        let nu: Valuation = [("tau", 6.0), ("c1", 1.7), ("c2", 2.0)].into_iter().collect();
        assert_eq!(
            psi.instantiate(&nu).unwrap(),
            parse_formula("G[0,6](x > 1.7 && y < 2)").unwrap()
        );
    }

    #[test]
    fn instantiate_interval_pair() {
        let t = parse_template("G[?t1,?t2](x < ?c)").unwrap();
        let psi = ParametricFormula::with_ranges(
            t,
            &ranges(&[("t1", 0.0, 60.0), ("t2", 0.0, 60.0), ("c", 15.0, 45.0)]),
        )
        .unwrap();
        assert_eq!(psi.interval_pairs(), &[("t1".to_string(), "t2".to_string())]);
        let nu: Valuation = [("t1", 15.0), ("t2", 30.0), ("c", 39.0)].into_iter().collect();
        assert_eq!(
            psi.instantiate(&nu).unwrap(),
            parse_formula("G[15,30](x < 39)").unwrap()
        );
        let bad: Valuation = [("t1", 30.0), ("t2", 30.0), ("c", 39.0)].into_iter().collect();
        assert!(matches!(psi.instantiate(&bad), Err(PstlError::IntervalOrder(_))));
        let out: Valuation = [("t1", 15.0), ("t2", 30.0), ("c", 50.0)].into_iter().collect();
        assert!(matches!(psi.instantiate(&out), Err(PstlError::OutOfRange { .. })));
        let missing: Valuation = [("t1", 15.0), ("c", 20.0)].into_iter().collect();
        assert!(matches!(
            psi.instantiate(&missing),
            Err(PstlError::MissingParameter(_))
        ));
    }

    #[test]
    fn no_parameters_is_identity() {
        let t = parse_template("F[0,1](x >= 0)").unwrap();
        let psi = ParametricFormula::with_ranges(t, &BTreeMap::new()).unwrap();
        assert_eq!(
            psi.instantiate(&Valuation::default()).unwrap(),
            parse_formula("F[0,1](x >= 0)").unwrap()
        );
    }

    #[test]
    fn mixed_kind_is_rejected() {
        let t = parse_template("G[0,?a](x > ?a)").unwrap();
        assert!(matches!(
            ParametricFormula::with_ranges(t, &ranges(&[("a", 0.0, 1.0)])),
            Err(PstlError::MixedKind(_))
        ));
    }

    #[test]
    fn single_axis_grid() {
        let t = parse_template("x > ?c").unwrap();
        let psi = ParametricFormula::with_ranges(t, &ranges(&[("c", 0.0, 1.0)])).unwrap();
        let vals = psi.space().grid_sample(3).unwrap();
        let cs: Vec<f64> = vals.iter().map(|v| v.get("c").unwrap()).collect();
        assert_eq!(cs, [0.0, 0.5, 1.0]);
    }

    #[test]
    fn grid_respects_interval_order() {
        let t = parse_template("G[?t1,?t2](x > ?c)").unwrap();
        let psi = ParametricFormula::with_ranges(
            t,
            &ranges(&[("t1", 0.0, 60.0), ("t2", 0.0, 60.0), ("c", 0.0, 80.0)]),
        )
        .unwrap();
        let space = psi.space();
        for m in [1, 4, 10, 27, 100] {
            let vals = space.grid_sample(m).unwrap();
            assert_eq!(vals.len(), m);
            for v in &vals {
                assert!(v.get("t1").unwrap() < v.get("t2").unwrap());
                assert!(space.contains(v));
                psi.instantiate(v).unwrap();
            }
            assert_eq!(vals, space.grid_sample(m).unwrap());
        }
    }

    #[test]
    fn empty_space_is_reported() {
        let t = parse_template("G[?t1,?t2](x > 0)").unwrap();
        let psi = ParametricFormula::with_ranges(
            t,
            &ranges(&[("t1", 10.0, 20.0), ("t2", 0.0, 5.0)]),
        )
        .unwrap();
        assert_eq!(psi.space().grid_sample(4), Err(PstlError::EmptySpace));
    }

    #[test]
    fn growth_yields_regular_grid() {
        // anchored windows: [0, 0] stays legal, so 5^4 points are all valid
        let t = parse_template("G[0,?b](u1 < ?c1 -> G[0,?e](u2 > ?c2))").unwrap();
        let psi = ParametricFormula::with_ranges(
            t,
            &ranges(&[("b", 0.0, 20.0), ("c1", -1.0, 3.0), ("e", 0.0, 20.0), ("c2", -1.0, 3.0)]),
        )
        .unwrap();
        let vals = psi.space().grid_sample(625).unwrap();
        let es: BTreeSet<i64> = vals.iter().map(|v| v.get("e").unwrap() as i64).collect();
        assert_eq!(es.into_iter().collect::<Vec<_>>(), [0, 5, 10, 15, 20]);
        assert_eq!(vals[0].get("b"), Some(0.0));
        assert_eq!(vals[1].get("c2"), Some(0.0));
    }
}
