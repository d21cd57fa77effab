//! Classical, quantum and no-signalling values of Bell inequalities, and the
//! entanglement-witness construction attached to unextendible sets.

pub mod classical;
pub mod lp;
pub mod ns;
pub mod operator;
pub mod seesaw;
pub mod witness;

use serde::Serialize;

pub use classical::{classical_bound, ClassicalBound, DeterministicStrategy};
pub use ns::{ns_bound, Behavior, NsBound};
pub use operator::{bell_operator, own_projectors, quantum_spectral_bound, random_projectors, ProjectorAssignment};
pub use seesaw::{seesaw_quantum_bound, SeesawOptions, SeesawResult};
pub use witness::{
    product_epsilon, sample_normalized_witness, upb_witness, witness_value_check, EpsilonEstimate, WitnessReport,
};

use crate::bell::{inequality_from_set, BellInequality};
use crate::error::{arg, Result};
use crate::linalg::span_projector;
use crate::product_set::{check_property_p, ProductVectorSet};
use crate::ratio::{self, Rational};

/// Largest behavior table solved by default: five parties, binary inputs
/// and outputs.
pub const DEFAULT_NS_TABLE: u128 = 1024;

#[derive(Clone, Debug)]
pub struct BoundsOptions {
    pub seed: u64,
    pub seesaw_restarts: usize,
    pub seesaw_max_iters: usize,
    pub epsilon_restarts: usize,
    /// Behavior-table size above which the exact LP is skipped.
    pub ns_table_limit: u128,
}

impl Default for BoundsOptions {
    fn default() -> Self {
        BoundsOptions {
            seed: 0,
            seesaw_restarts: 8,
            seesaw_max_iters: 500,
            epsilon_restarts: witness::DEFAULT_EPSILON_RESTARTS,
            ns_table_limit: DEFAULT_NS_TABLE,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundsReport {
    #[serde(with = "ratio")]
    pub beta_c: Rational,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_q_spectral: Option<f64>,
    pub beta_q_seesaw: f64,
    #[serde(with = "ratio::option")]
    pub beta_n: Option<Rational>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon_status: Option<&'static str>,
    /// Quantities that were not computed, with the reason.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<String>,
}

impl BoundsReport {
    /// `beta_c <= seesaw <= spectral` up to tolerance and `beta_c <= beta_n`.
    pub fn sandwich_holds(&self) -> bool {
        let c = ratio::to_f64(&self.beta_c);
        let mut ok = c <= self.beta_q_seesaw + 1e-6;
        if let Some(s) = self.beta_q_spectral {
            ok &= self.beta_q_seesaw <= s + 1e-6 && c <= s + 1e-9;
        }
        if let Some(n) = &self.beta_n {
            ok &= self.beta_c <= *n;
        }
        ok
    }
}

/// Reweights the set's own inequality with the weights `ineq` assigns to the
/// same `(x, a)` pairs; fails when the two disagree on the term list.
pub fn align_with_set(ineq: &BellInequality, set: &ProductVectorSet) -> Result<(BellInequality, ProjectorAssignment)> {
    let part = match check_property_p(set).partition() {
        Some(p) => p.clone(),
        None => return arg("set violates property (P)"),
    };
    let own = inequality_from_set(set, &part, &vec![Rational::from_integer(1.into()); set.len()])?;
    if own.scenario != ineq.scenario || own.terms.len() != ineq.terms.len() {
        return arg("inequality and set disagree in scenario or term count");
    }
    let mut weights = Vec::with_capacity(own.terms.len());
    for t in &own.terms {
        match ineq.terms.iter().find(|u| u.x == t.x && u.a == t.a) {
            Some(u) => weights.push(u.q.clone()),
            None => return arg("inequality and set disagree under the set's own labeling"),
        }
    }
    let aligned = inequality_from_set(set, &part, &weights)?;
    Ok((aligned, own_projectors(&part)))
}

/// All bounds for `ineq`. With a set, the spectral bound uses the set's own
/// projectors and the witness value uses its span projector.
pub fn bounds_report(ineq: &BellInequality, set: Option<&ProductVectorSet>, opts: &BoundsOptions) -> Result<BoundsReport> {
    let mut skipped = Vec::new();
    let beta_c = classical_bound(ineq)?.value;
    let table = ineq.scenario.table_size();
    let ns = if table > opts.ns_table_limit {
        Err(crate::Error::Capacity {
            what: "behavior table entries",
            required: table,
            limit: opts.ns_table_limit,
        })
    } else {
        ns_bound(ineq)
    };
    let beta_n = match ns {
        Ok(r) => Some(r.value),
        Err(crate::Error::Capacity { what, required, limit }) => {
            skipped.push(format!("beta_n: {what} {required} exceeds {limit}"));
            None
        }
        Err(e) => return Err(e),
    };
    let local_dims = match set {
        Some(s) => s.dims().to_vec(),
        None => ineq.scenario.local_dims(),
    };
    let mut so = SeesawOptions::new(local_dims, opts.seed);
    so.restarts = opts.seesaw_restarts;
    so.max_iters = opts.seesaw_max_iters;
    let beta_q_seesaw = seesaw_quantum_bound(ineq, &so)?.value;

    let (mut beta_q_spectral, mut witness_value, mut epsilon) = (None, None, None);
    match set {
        None => {
            skipped.push("beta_q_spectral: no product-vector set supplied".into());
            skipped.push("witness_value: no product-vector set supplied".into());
        }
        Some(set) => {
            let (aligned, proj) = align_with_set(ineq, set)?;
            beta_q_spectral = Some(quantum_spectral_bound(&aligned, &proj)?);
            let pi = span_projector(&set.global_kets())?;
            let eps = product_epsilon(&pi, set.dims(), opts.epsilon_restarts, opts.seed)?.value;
            epsilon = Some(eps);
            match upb_witness(set, eps) {
                Ok(w) => {
                    let b = bell_operator(&aligned, &proj)?;
                    witness_value = Some(witness_value_check(&b, w.witness.as_ref().expect("built with matrices"))?);
                }
                Err(e) => skipped.push(format!("witness_value: {e}")),
            }
        }
    }
    Ok(BoundsReport {
        beta_c,
        beta_q_spectral,
        beta_q_seesaw,
        beta_n,
        witness_value,
        epsilon,
        epsilon_status: epsilon.map(|_| witness::HEURISTIC),
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::{gyni_inequality, relabel_canonical};
    use crate::families::{gyni_upb, shifts_upb, LocalPairChoice};
    use crate::ratio::{int, rat};

    #[test]
    fn shifts_report() {
        let set = shifts_upb(None).unwrap();
        let part = check_property_p(&set).partition().unwrap().clone();
        let ineq = inequality_from_set(&set, &part, &vec![int(1); 4]).unwrap();
        let r = bounds_report(&ineq, Some(&set), &BoundsOptions::default()).unwrap();
        assert_eq!(r.beta_c, int(1));
        assert_eq!(r.beta_n, Some(rat(4, 3)));
        assert!((r.beta_q_spectral.unwrap() - 1.0).abs() < 1e-9);
        assert!(r.witness_value.unwrap() > 1.0);
        assert!(r.sandwich_holds());
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["beta_n"], "4/3");
        assert_eq!(json["beta_c"], "1/1");
    }

    #[test]
    fn mismatched_set_and_inequality() {
        let set = gyni_upb(4, &LocalPairChoice::default_for(4)).unwrap();
        let shuffled = relabel_canonical(&gyni_inequality(4).unwrap()).unwrap();
        let part = check_property_p(&set).partition().unwrap().clone();
        let own = inequality_from_set(&set, &part, &vec![int(1); 8]).unwrap();
        if own.terms.iter().collect::<std::collections::HashSet<_>>() != shuffled.terms.iter().collect() {
            assert!(align_with_set(&shuffled, &set).is_err());
        }
        assert!(align_with_set(&own, &set).is_ok());
    }
}
