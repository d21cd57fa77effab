use std::collections::HashMap;

use num_traits::{One, Signed, Zero};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use super::lp::{self, LinearProgram, LpOutcome};
use crate::bell::{mixed_radix, BellInequality, Scenario};
use crate::error::{Error, Result};
use crate::ratio::{self, Rational};

pub const TABLE_LIMIT: u128 = 100_000;

/// A full conditional distribution `p(a|x)`, rows per input vector
/// (lexicographic), entries per output vector (lexicographic).
#[derive(Clone, Debug, PartialEq)]
pub struct Behavior {
    pub scenario: Scenario,
    pub inputs: Vec<Vec<usize>>,
    pub table: Vec<Vec<Rational>>,
}

impl Serialize for Behavior {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let table: Vec<Vec<String>> = self
            .table
            .iter()
            .map(|row| row.iter().map(ratio::format).collect())
            .collect();
        let mut st = s.serialize_struct("Behavior", 2)?;
        st.serialize_field("inputs", &self.inputs)?;
        st.serialize_field("table", &table)?;
        st.end()
    }
}

impl Behavior {
    pub fn prob(&self, x: &[usize], a: &[usize]) -> &Rational {
        let row = self.inputs.iter().position(|v| v == x).expect("input vector in range");
        let radices: Vec<usize> = x.iter().enumerate().map(|(i, &xi)| self.scenario.outputs(i, xi)).collect();
        let col = a.iter().zip(&radices).fold(0, |acc, (&ai, &r)| acc * r + ai);
        &self.table[row][col]
    }

    pub fn value(&self, ineq: &BellInequality) -> Rational {
        ineq.terms
            .iter()
            .fold(Rational::zero(), |acc, t| acc + &t.q * self.prob(&t.x, &t.a))
    }

    /// Marginal of the parties in `keep` (a sorted subset), as a map from
    /// `(x_keep, a_keep)` to probability, computed at full input `x`.
    fn marginal(&self, x: &[usize], keep: &[usize]) -> HashMap<Vec<usize>, Rational> {
        let row = self.inputs.iter().position(|v| v == x).expect("input vector in range");
        let outs = self.scenario.output_vectors(x);
        let mut m: HashMap<Vec<usize>, Rational> = HashMap::new();
        for (a, p) in outs.iter().zip(&self.table[row]) {
            let key: Vec<usize> = keep.iter().map(|&i| a[i]).collect();
            *m.entry(key).or_insert_with(Rational::zero) += p;
        }
        m
    }

    /// Nonnegativity, normalization, and no-signalling for every strict
    /// subset of parties, all checked exactly.
    pub fn is_nonsignalling(&self) -> bool {
        let n = self.scenario.n();
        let rows_ok = self.table.iter().all(|row| {
            row.iter().all(|p| !p.is_negative()) && row.iter().fold(Rational::zero(), |a, p| a + p).is_one()
        });
        if !rows_ok {
            return false;
        }
        for mask in 1..(1usize << n) - 1 {
            let keep: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            let mut reference: HashMap<Vec<usize>, HashMap<Vec<usize>, Rational>> = HashMap::new();
            for x in &self.inputs {
                let xk: Vec<usize> = keep.iter().map(|&i| x[i]).collect();
                let m = self.marginal(x, &keep);
                match reference.get(&xk) {
                    Some(r) => {
                        if *r != m {
                            return false;
                        }
                    }
                    None => {
                        reference.insert(xk, m);
                    }
                }
            }
        }
        true
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NsBound {
    #[serde(with = "ratio")]
    pub value: Rational,
    pub behavior: Behavior,
}

struct Layout {
    inputs: Vec<Vec<usize>>,
    offsets: Vec<usize>,
    radices: Vec<Vec<usize>>,
}

impl Layout {
    fn new(s: &Scenario) -> Self {
        let inputs = s.input_vectors();
        let mut offsets = Vec::with_capacity(inputs.len());
        let mut radices = Vec::with_capacity(inputs.len());
        let mut at = 0;
        for x in &inputs {
            let r: Vec<usize> = x.iter().enumerate().map(|(i, &xi)| s.outputs(i, xi)).collect();
            offsets.push(at);
            at += r.iter().product::<usize>();
            radices.push(r);
        }
        Layout { inputs, offsets, radices }
    }

    fn row_of(&self, x: &[usize]) -> usize {
        self.inputs.binary_search_by(|v| v.as_slice().cmp(x)).expect("input vector in range")
    }

    fn column(&self, row: usize, a: &[usize]) -> usize {
        self.offsets[row] + a.iter().zip(&self.radices[row]).fold(0, |acc, (&ai, &r)| acc * r + ai)
    }
}

/// No-signalling constraints. Single-party conditions (the marginal of all
/// parties but `i` does not depend on `x_i`) together with normalization
/// generate the conditions for every strict subset.
fn build_lp(ineq: &BellInequality, layout: &Layout, columns: usize) -> LinearProgram {
    let s = &ineq.scenario;
    let n = s.n();
    let mut lp = LinearProgram::new(columns);
    for t in &ineq.terms {
        let row = layout.row_of(&t.x);
        lp.objective[layout.column(row, &t.a)] += &t.q;
    }
    for (row, _) in layout.inputs.iter().enumerate() {
        let width: usize = layout.radices[row].iter().product();
        let cols = (0..width).map(|k| (layout.offsets[row] + k, Rational::one())).collect();
        lp.add_row(cols, Rational::one());
    }
    for i in 0..n {
        for x in &layout.inputs {
            if x[i] == 0 {
                continue;
            }
            let mut x0 = x.clone();
            x0[i] = 0;
            let (r1, r0) = (layout.row_of(x), layout.row_of(&x0));
            let mut others: Vec<usize> = layout.radices[r1].clone();
            others[i] = 1;
            for a_rest in mixed_radix(&others) {
                let mut coeffs = Vec::new();
                let mut a = a_rest.clone();
                for ai in 0..s.outputs(i, x[i]) {
                    a[i] = ai;
                    coeffs.push((layout.column(r1, &a), Rational::one()));
                }
                for ai in 0..s.outputs(i, 0) {
                    a[i] = ai;
                    coeffs.push((layout.column(r0, &a), -Rational::one()));
                }
                lp.add_row(coeffs, Rational::zero());
            }
        }
    }
    lp
}

/// Exact maximum of the inequality over the no-signalling polytope, with an
/// optimal behavior. The result is re-verified against every strict-subset
/// marginal condition.
pub fn ns_bound(ineq: &BellInequality) -> Result<NsBound> {
    ns_bound_with(ineq, true)
}

/// With `warm_start`, the exact simplex starts from the support of a
/// floating-point optimum; the answer is exact either way.
pub fn ns_bound_with(ineq: &BellInequality, warm_start: bool) -> Result<NsBound> {
    let size = ineq.scenario.table_size();
    if size > TABLE_LIMIT {
        return Err(Error::Capacity {
            what: "behavior table entries",
            required: size,
            limit: TABLE_LIMIT,
        });
    }
    let layout = Layout::new(&ineq.scenario);
    let lp = build_lp(ineq, &layout, size as usize);
    let hint = if warm_start { lp::float_basis_hint(&lp) } else { Vec::new() };
    let sol = match lp::solve_with_hint(&lp, &hint)? {
        LpOutcome::Optimal(sol) => sol,
        LpOutcome::Infeasible => return Err(Error::Internal("no-signalling polytope reported empty".into())),
        LpOutcome::Unbounded => return Err(Error::Internal("no-signalling LP reported unbounded".into())),
    };
    let table: Vec<Vec<Rational>> = (0..layout.inputs.len())
        .map(|row| {
            let width: usize = layout.radices[row].iter().product();
            sol.x[layout.offsets[row]..layout.offsets[row] + width].to_vec()
        })
        .collect();
    let behavior = Behavior {
        scenario: ineq.scenario.clone(),
        inputs: layout.inputs,
        table,
    };
    if !behavior.is_nonsignalling() || behavior.value(ineq) != sol.value {
        return Err(Error::Internal("optimal behavior failed exact verification".into()));
    }
    Ok(NsBound {
        value: sol.value,
        behavior,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::{chsh_inequality, gyni_inequality, unit_inequality, BellTerm};
    use crate::ratio::{int, rat};

    #[test]
    fn trivial_values() {
        let s = Scenario::uniform(2, 2, 2).unwrap();
        let one = BellInequality::new(s.clone(), vec![BellTerm::unit(vec![0, 0], vec![0, 0])]).unwrap();
        assert_eq!(ns_bound(&one).unwrap().value, int(1));
        let all: Vec<BellTerm> = s
            .output_vectors(&[1, 0])
            .into_iter()
            .map(|a| BellTerm::unit(vec![1, 0], a))
            .collect();
        assert_eq!(ns_bound(&BellInequality::new(s, all).unwrap()).unwrap().value, int(1));
    }

    #[test]
    fn chsh_reaches_the_pr_box() {
        let r = ns_bound(&chsh_inequality()).unwrap();
        assert_eq!(r.value, int(4));
        assert_eq!(*r.behavior.prob(&[1, 1], &[0, 1]), rat(1, 2));
    }

    #[test]
    fn shifts_and_gyni3_exceed_one() {
        let shifts = unit_inequality(3, &["000|000", "101|110", "011|101", "110|011"]).unwrap();
        assert_eq!(ns_bound(&shifts).unwrap().value, rat(4, 3));
        assert_eq!(ns_bound(&gyni_inequality(3).unwrap()).unwrap().value, rat(4, 3));
        for ineq in [shifts, chsh_inequality()] {
            assert_eq!(ns_bound_with(&ineq, false).unwrap().value, ns_bound(&ineq).unwrap().value);
        }
    }

    #[test]
    fn signalling_behavior_is_rejected() {
        let s = Scenario::uniform(2, 2, 2).unwrap();
        let inputs = s.input_vectors();
        // Bob outputs Alice's input.
        let table = inputs
            .iter()
            .map(|x| {
                let mut row = vec![int(0); 4];
                row[x[0]] = int(1);
                row
            })
            .collect();
        let b = Behavior {
            scenario: s,
            inputs,
            table,
        };
        assert!(!b.is_nonsignalling());
    }
}
