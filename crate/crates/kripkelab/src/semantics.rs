//! Kripke semantics: truth sets under a valuation and frame validity.
//!
//! `truth_set` evaluates a formula bottom-up over bitset state sets;
//! `Box(g)` holds at a state exactly when its successor row is contained in
//! the truth set of `g`. Validity enumerates every valuation of the
//! variables occurring in the formula (other variables cannot matter), with
//! an explicit bit budget so runaway inputs fail loudly instead of hanging.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::formula::Formula;
use crate::frame::{Frame, StateSet};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SemanticsError {
    #[error("valuation does not cover variable p{0}")]
    UncoveredVariable(u32),
    #[error("validity check needs {bits} valuation bits, budget is {budget}")]
    BudgetExceeded { bits: usize, budget: usize },
}

/// Default cap on `k·n` valuation bits for [`is_valid`].
pub const DEFAULT_VALUATION_BUDGET_BITS: usize = 24;

/// Assignment of a state set to each variable under evaluation.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Valuation {
    sets: BTreeMap<u32, StateSet>,
}

impl Valuation {
    pub fn new() -> Self {
        Valuation { sets: BTreeMap::new() }
    }

    pub fn with(mut self, var: u32, set: StateSet) -> Self {
        self.sets.insert(var, set);
        self
    }

    pub fn assign(&mut self, var: u32, set: StateSet) {
        self.sets.insert(var, set);
    }

    pub fn get(&self, var: u32) -> Option<&StateSet> {
        self.sets.get(&var)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &StateSet)> {
        self.sets.iter().map(|(&v, s)| (v, s))
    }
}

impl Default for Valuation {
    fn default() -> Self {
        Self::new()
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (v, set) in &self.sets {
            if !first {
                write!(f, " ")?;
            }
            first = false;
            write!(f, "p{v}={{")?;
            let mut inner_first = true;
            for a in set.iter() {
                if !inner_first {
                    write!(f, ",")?;
                }
                inner_first = false;
                write!(f, "{a}")?;
            }
            write!(f, "}}")?;
        }
        if first {
            write!(f, "(empty valuation)")?;
        }
        Ok(())
    }
}

/// The set of states where the formula holds.
pub fn truth_set(
    frame: &Frame,
    valuation: &Valuation,
    formula: &Formula,
) -> Result<StateSet, SemanticsError> {
    let n = frame.n();
    match formula {
        Formula::Var(v) => valuation
            .get(*v)
            .cloned()
            .ok_or(SemanticsError::UncoveredVariable(*v)),
        Formula::Bottom => Ok(StateSet::empty(n)),
        Formula::Implies(a, b) => {
            let ta = truth_set(frame, valuation, a)?;
            let tb = truth_set(frame, valuation, b)?;
            Ok(ta.complement().union(&tb))
        }
        Formula::Box(g) => {
            let tg = truth_set(frame, valuation, g)?;
            let mut out = StateSet::empty(n);
            for a in 0..n {
                if frame.out_set(a).is_subset(&tg) {
                    out.insert(a);
                }
            }
            Ok(out)
        }
    }
}

/// Validity check outcome; a refutation carries a concrete witness.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Validity {
    Valid,
    Refuted { valuation: Valuation, state: usize },
}

impl Validity {
    pub fn is_valid(&self) -> bool {
        matches!(self, Validity::Valid)
    }
}

/// `F ⊨ φ` with the default valuation-bit budget.
pub fn is_valid(frame: &Frame, formula: &Formula) -> Result<Validity, SemanticsError> {
    is_valid_with_budget(frame, formula, DEFAULT_VALUATION_BUDGET_BITS)
}

// Flattened postorder program evaluated over one u64 truth mask per
// subformula; only usable when the frame has at most 64 states.
enum Op {
    Var(usize),
    Bottom,
    Implies,
    BoxOp,
}

fn flatten(formula: &Formula, var_slot: &BTreeMap<u32, usize>, program: &mut Vec<Op>) {
    match formula {
        Formula::Var(v) => program.push(Op::Var(var_slot[v])),
        Formula::Bottom => program.push(Op::Bottom),
        Formula::Implies(a, b) => {
            flatten(a, var_slot, program);
            flatten(b, var_slot, program);
            program.push(Op::Implies);
        }
        Formula::Box(g) => {
            flatten(g, var_slot, program);
            program.push(Op::BoxOp);
        }
    }
}

/// Exhaustive validity check over all `2^(k·n)` valuations of the `k`
/// variables occurring in the formula, with early exit on the first
/// refutation.
pub fn is_valid_with_budget(
    frame: &Frame,
    formula: &Formula,
    budget_bits: usize,
) -> Result<Validity, SemanticsError> {
    let n = frame.n();
    let vars: Vec<u32> = formula.variables().into_iter().collect();
    let bits = vars.len() * n;
    if bits > budget_bits || bits >= 64 {
        return Err(SemanticsError::BudgetExceeded { bits, budget: budget_bits });
    }

    let var_slot: BTreeMap<u32, usize> = vars.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut program = Vec::new();
    flatten(formula, &var_slot, &mut program);

    let rows: Vec<u64> = (0..n)
        .map(|a| {
            let mut mask = 0u64;
            for b in frame.out_iter(a) {
                mask |= 1 << b;
            }
            mask
        })
        .collect();
    let full: u64 = if n == 64 { !0 } else { (1u64 << n) - 1 };

    let mut stack: Vec<u64> = Vec::with_capacity(program.len());
    for assignment in 0u64..(1u64 << bits) {
        stack.clear();
        for op in &program {
            match op {
                Op::Var(slot) => {
                    stack.push(assignment >> (slot * n) & full);
                }
                Op::Bottom => stack.push(0),
                Op::Implies => {
                    let b = stack.pop().unwrap();
                    let a = stack.pop().unwrap();
                    stack.push((!a | b) & full);
                }
                Op::BoxOp => {
                    let g = stack.pop().unwrap();
                    let mut out = 0u64;
                    for (a, &row) in rows.iter().enumerate() {
                        if row & !g == 0 {
                            out |= 1 << a;
                        }
                    }
                    stack.push(out);
                }
            }
        }
        let truth = stack.pop().unwrap();
        if truth != full {
            let state = (truth ^ full).trailing_zeros() as usize;
            let mut valuation = Valuation::new();
            for (slot, &v) in vars.iter().enumerate() {
                let mask = assignment >> (slot * n) & full;
                valuation.assign(v, StateSet::from_states(n, (0..n).filter(|&b| mask >> b & 1 == 1)));
            }
            return Ok(Validity::Refuted { valuation, state });
        }
    }
    Ok(Validity::Valid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;

    #[test]
    fn truth_set_examples() {
        let f = Frame::from_edges(2, &[(0, 1)]);
        let val = Valuation::new().with(0, StateSet::singleton(2, 1));

        // box p0 holds at 0 (successor 1 satisfies p0) and vacuously at 1
        let box_p0 = Formula::boxed(Formula::var(0));
        assert_eq!(truth_set(&f, &val, &box_p0).unwrap(), StateSet::full(2));

        let dia_p0 = Formula::diamond(Formula::var(0));
        assert_eq!(truth_set(&f, &val, &dia_p0).unwrap(), StateSet::singleton(2, 0));

        assert!(truth_set(&f, &val, &Formula::Bottom).unwrap().is_empty());
    }

    #[test]
    fn truth_set_uncovered_variable() {
        let f = Frame::empty(1);
        let err = truth_set(&f, &Valuation::new(), &Formula::var(3)).unwrap_err();
        assert_eq!(err, SemanticsError::UncoveredVariable(3));
    }

    #[test]
    fn validity_examples() {
        let t = parse("box p0 -> p0").unwrap();

        // reflexivity validates T
        assert!(is_valid(&Frame::cluster(3), &t).unwrap().is_valid());

        // irreflexive singleton refutes seriality
        let dia_top = parse("dia true").unwrap();
        match is_valid(&Frame::empty(1), &dia_top).unwrap() {
            Validity::Refuted { state, .. } => assert_eq!(state, 0),
            Validity::Valid => panic!("dia true cannot hold without successors"),
        }

        // ({0,1}, {(0,0),(1,0)}) refutes T with p0 = {0} at state 1
        let f = Frame::from_edges(2, &[(0, 0), (1, 0)]);
        match is_valid(&f, &t).unwrap() {
            Validity::Refuted { valuation, state } => {
                assert_eq!(state, 1);
                assert_eq!(valuation.get(0).unwrap().to_vec(), vec![0]);
            }
            Validity::Valid => panic!("T must fail on a non-reflexive frame"),
        }
    }

    #[test]
    fn validity_budget() {
        let f = Frame::cluster(13);
        let phi = parse("box (p0 -> p1) -> (box p0 -> box p1)").unwrap();
        let err = is_valid(&f, &phi).unwrap_err();
        assert_eq!(err, SemanticsError::BudgetExceeded { bits: 26, budget: 24 });
        assert!(is_valid_with_budget(&f, &phi, 26).unwrap().is_valid());
    }

    #[test]
    fn refutation_witness_is_sound() {
        // Whenever a refutation is reported, re-evaluating the formula under
        // the witness valuation must indeed make it false at the state.
        let frames = [
            Frame::from_edges(3, &[(0, 1), (1, 2)]),
            Frame::from_edges(2, &[(0, 0), (1, 0)]),
            Frame::empty(2),
        ];
        let formulas = ["box p0 -> p0", "p0 -> box dia p0", "dia p0 -> box p0"];
        for f in &frames {
            for text in formulas {
                let phi = parse(text).unwrap();
                if let Validity::Refuted { valuation, state } = is_valid(f, &phi).unwrap() {
                    let truth = truth_set(f, &valuation, &phi).unwrap();
                    assert!(!truth.contains(state), "{text} witness not sound");
                }
            }
        }
    }
}
