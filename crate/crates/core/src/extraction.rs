//! Decision tree to STL.
//!
//! A tree edge tests `ρ(ψ_i, u, 0) >= c_i` (right) or `< c_i` (left). With
//! `ψ̂_i = shift(nnf(ψ_i), c_i)` we have `ρ(ψ̂_i) = ρ(ψ_i) - c_i`, so the right
//! edge is `ψ̂_i` and the left edge is `!ψ̂_i`. Paths to label-1 leaves become
//! conjunctions and the result is their disjunction.

use thiserror::Error;

use crate::classifier::DecisionTree;
use crate::formula::{Atom, Expr, Formula, FormulaError};
use crate::pstl::{ParametricFormula, PstlError, Valuation};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExtractionError {
    #[error("tree has no label-1 leaf; the assumption would be unsatisfiable")]
    EmptyAssumption,
    #[error("tree references feature {feature} but only {count} valuations were given")]
    FeatureOutOfRange { feature: usize, count: usize },
    #[error("shift constant {0} is not finite")]
    NonFiniteShift(f64),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Pstl(#[from] PstlError),
}

/// `φ̂` with `ρ(φ̂, u, t) = ρ(φ, u, t) - c` everywhere. Lower-bound atoms move
/// up by `c`, upper-bound atoms move down by `c`.
pub fn shift_formula(phi: &Formula, c: f64) -> Result<Formula, ExtractionError> {
    if !c.is_finite() {
        return Err(ExtractionError::NonFiniteShift(c));
    }
    if !phi.is_nnf() {
        return Err(FormulaError::NotNnf.into());
    }
    Ok(shift(phi, c))
}

fn shift(phi: &Formula, c: f64) -> Formula {
    match phi {
        Expr::True => Expr::True,
        Expr::Atom(a) => Expr::Atom(Atom {
            signal: a.signal.clone(),
            cmp: a.cmp,
            value: if a.cmp.is_lower_bound() {
                a.value + c
            } else {
                a.value - c
            },
        }),
        // -(ρ + c') = -ρ - c  with  c' = -c
        Expr::Not(a) => match a.as_ref() {
            Expr::True => Expr::True.not(),
            inner => shift(inner, -c).not(),
        },
        Expr::And(a, b) => shift(a, c).and(shift(b, c)),
        Expr::Or(a, b) => shift(a, c).or(shift(b, c)),
        Expr::Implies(..) => unreachable!("checked by is_nnf"),
        Expr::Globally(iv, a) => Expr::globally(iv.clone(), shift(a, c)),
        Expr::Eventually(iv, a) => Expr::eventually(iv.clone(), shift(a, c)),
        Expr::Until(iv, a, b) => Expr::until(iv.clone(), shift(a, c), shift(b, c)),
    }
}

/// The STL formula satisfied by exactly the traces `tree` labels 1, where
/// feature `i` of the tree is the robustness of `psi` under `valuations[i]`.
pub fn extract_stl(
    tree: &DecisionTree,
    psi: &ParametricFormula,
    valuations: &[Valuation],
) -> Result<Formula, ExtractionError> {
    let mut paths: Vec<Vec<Formula>> = Vec::new();
    let mut current = Vec::new();
    walk(tree, psi, valuations, &mut current, &mut paths)?;
    if paths.is_empty() {
        return Err(ExtractionError::EmptyAssumption);
    }
    let mut disjuncts: Vec<Formula> = Vec::new();
    for path in paths {
        let mut conj: Vec<Formula> = Vec::new();
        for f in path {
            flatten_and(f, &mut conj);
        }
        let term = join(conj, Expr::and).unwrap_or(Expr::True);
        let mut parts = Vec::new();
        flatten_or(term, &mut parts);
        for p in parts {
            if !disjuncts.contains(&p) {
                disjuncts.push(p);
            }
        }
    }
    if disjuncts.contains(&Expr::True) {
        return Ok(Expr::True);
    }
    Ok(join(disjuncts, Expr::or).expect("at least one path"))
}

fn walk(
    node: &DecisionTree,
    psi: &ParametricFormula,
    valuations: &[Valuation],
    current: &mut Vec<Formula>,
    out: &mut Vec<Vec<Formula>>,
) -> Result<(), ExtractionError> {
    match node {
        DecisionTree::Leaf { label } => {
            if *label == 1 {
                out.push(current.clone());
            }
            Ok(())
        }
        DecisionTree::Split {
            feature,
            threshold,
            left,
            right,
        } => {
            let nu = valuations
                .get(*feature)
                .ok_or(ExtractionError::FeatureOutOfRange {
                    feature: *feature,
                    count: valuations.len(),
                })?;
            let hat = shift_formula(&psi.instantiate(nu)?.to_nnf(), *threshold)?;
            current.push(hat.clone().not());
            walk(left, psi, valuations, current, out)?;
            current.pop();
            current.push(hat);
            walk(right, psi, valuations, current, out)?;
            current.pop();
            Ok(())
        }
    }
}

fn flatten_and(f: Formula, out: &mut Vec<Formula>) {
    match f {
        Expr::And(a, b) => {
            flatten_and(*a, out);
            flatten_and(*b, out);
        }
        Expr::True => {}
        other => {
            if !out.contains(&other) {
                out.push(other);
            }
        }
    }
}

fn flatten_or(f: Formula, out: &mut Vec<Formula>) {
    match f {
        Expr::Or(a, b) => {
            flatten_or(*a, out);
            flatten_or(*b, out);
        }
        other => out.push(other),
    }
}

fn join(items: Vec<Formula>, op: fn(Formula, Formula) -> Formula) -> Option<Formula> {
    items.into_iter().reduce(op)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_formula, parse_template};
    use std::collections::BTreeMap;

    fn f(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    #[test]
    fn shift_examples() {
        assert_eq!(shift_formula(&f("x >= 3"), 2.0).unwrap(), f("x >= 5"));
        assert_eq!(shift_formula(&f("x <= 3"), 2.0).unwrap(), f("x <= 1"));
        assert_eq!(shift_formula(&f("x > 3"), -1.0).unwrap(), f("x > 2"));
        assert_eq!(
            shift_formula(&f("G[0,5](x < 1 || F[1,2](y >= 0))"), 0.5).unwrap(),
            f("G[0,5](x < 0.5 || F[1,2](y >= 0.5))")
        );
    }

    #[test]
    fn shift_rejects_non_nnf() {
        assert_eq!(
            shift_formula(&f("x > 0 -> y > 0"), 1.0),
            Err(ExtractionError::Formula(FormulaError::NotNnf))
        );
        assert_eq!(
            shift_formula(&f("!(x > 0)"), 1.0),
            Err(ExtractionError::Formula(FormulaError::NotNnf))
        );
    }

    fn psi() -> ParametricFormula {
        ParametricFormula::with_ranges(
            parse_template("G[0,?t](x < ?c)").unwrap(),
            &BTreeMap::from([("t".to_string(), (0.0, 10.0)), ("c".to_string(), (0.0, 50.0))]),
        )
        .unwrap()
    }

    fn nu(t: f64, c: f64) -> Valuation {
        [("t", t), ("c", c)].into_iter().collect()
    }

    #[test]
    fn root_leaf() {
        let one = DecisionTree::Leaf { label: 1 };
        assert_eq!(extract_stl(&one, &psi(), &[]).unwrap(), Expr::True);
        let zero = DecisionTree::Leaf { label: 0 };
        assert_eq!(extract_stl(&zero, &psi(), &[]), Err(ExtractionError::EmptyAssumption));
    }

    #[test]
    fn two_level_tree_shape() {
        // right of the root is label 1; left descends into a second test
        let tree = DecisionTree::Split {
            feature: 0,
            threshold: 1.0,
            left: Box::new(DecisionTree::Split {
                feature: 1,
                threshold: -2.0,
                left: Box::new(DecisionTree::Leaf { label: 0 }),
                right: Box::new(DecisionTree::Leaf { label: 1 }),
            }),
            right: Box::new(DecisionTree::Leaf { label: 1 }),
        };
        let out = extract_stl(&tree, &psi(), &[nu(5.0, 40.0), nu(8.0, 42.0)]).unwrap();
        let h1 = f("G[0,5](x < 39)");
        let h2 = f("G[0,8](x < 44)");
        assert_eq!(out, h1.clone().not().and(h2).or(h1));
    }

    #[test]
    fn duplicate_conjuncts_are_dropped() {
        let tree = DecisionTree::Split {
            feature: 0,
            threshold: 0.0,
            left: Box::new(DecisionTree::Leaf { label: 0 }),
            right: Box::new(DecisionTree::Split {
                feature: 1,
                threshold: 0.0,
                left: Box::new(DecisionTree::Leaf { label: 0 }),
                right: Box::new(DecisionTree::Leaf { label: 1 }),
            }),
        };
        let out = extract_stl(&tree, &psi(), &[nu(5.0, 40.0), nu(5.0, 40.0)]).unwrap();
        assert_eq!(out, f("G[0,5](x < 40)"));
    }

    #[test]
    fn support_is_preserved() {
        let tree = DecisionTree::Split {
            feature: 0,
            threshold: 0.3,
            left: Box::new(DecisionTree::Leaf { label: 1 }),
            right: Box::new(DecisionTree::Leaf { label: 0 }),
        };
        let out = extract_stl(&tree, &psi(), &[nu(2.0, 1.0)]).unwrap();
        assert!(out.support().is_subset(&psi().support()));
    }
}
