use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::operator::{bell_operator, own_projectors, projector_from};
use crate::bell::inequality_from_set;
use crate::error::{arg, pre, Result};
use crate::families::product;
use crate::linalg::{
    digits, hermitian_eigs, partial_transpose, random_ket, random_unitary, span_projector, HermitianOperator, Ket, C64,
};
use crate::product_set::{check_property_p, ProductVectorSet};
use crate::ratio::int;
use crate::tol;

pub const DEFAULT_EPSILON_RESTARTS: usize = 64;
const MAX_SWEEPS: usize = 20_000;
/// Status string carried by every epsilon estimate.
pub const HEURISTIC: &str = "heuristic-upper-bound";

#[derive(Clone, Debug, Serialize)]
pub struct EpsilonEstimate {
    pub value: f64,
    pub argmin: Vec<Ket>,
    pub status: &'static str,
    pub restarts: usize,
    pub seed: u64,
}

/// `Pi = sum_k w_k |v_k><v_k|` over the eigenvectors with nonzero weight.
struct Factored {
    weights: Vec<f64>,
    vectors: Vec<Vec<C64>>,
}

impl Factored {
    fn new(pi: &HermitianOperator) -> Result<Self> {
        let e = hermitian_eigs(pi)?;
        let min = e.values.last().copied().unwrap_or(0.0);
        if min < -tol::RANK {
            return pre(format!("operator is not positive semidefinite (eigenvalue {min:.3e})"));
        }
        let mut weights = Vec::new();
        let mut vectors = Vec::new();
        for (w, v) in e.values.iter().zip(e.vectors) {
            if *w > tol::CONVERGENCE {
                weights.push(*w);
                vectors.push(v.into_amplitudes());
            }
        }
        Ok(Factored { weights, vectors })
    }

    /// Effective operator on `free` with the other parties fixed:
    /// `A = sum_k w_k c_k c_k^dagger`, `c_k = (<rest| (x) 1) v_k`.
    fn contract(&self, dims: &[usize], kets: &[Ket], free: usize, index_digits: &[Vec<usize>]) -> HermitianOperator {
        let df = dims[free];
        let weights: Vec<C64> = index_digits
            .iter()
            .map(|dg| {
                dg.iter()
                    .enumerate()
                    .filter(|&(i, _)| i != free)
                    .fold(C64::new(1.0, 0.0), |acc, (i, &k)| acc * kets[i].amplitudes()[k].conj())
            })
            .collect();
        let mut a = nalgebra::DMatrix::<C64>::zeros(df, df);
        for (w, v) in self.weights.iter().zip(&self.vectors) {
            let mut c = vec![C64::new(0.0, 0.0); df];
            for ((dg, wt), amp) in index_digits.iter().zip(&weights).zip(v) {
                c[dg[free]] += wt * amp;
            }
            for r in 0..df {
                for s in 0..df {
                    a[(r, s)] += c[r] * c[s].conj() * *w;
                }
            }
        }
        HermitianOperator::symmetrized(a)
    }
}

fn minimize_from(f: &Factored, dims: &[usize], index_digits: &[Vec<usize>], mut kets: Vec<Ket>) -> (f64, Vec<Ket>) {
    let mut value = f64::INFINITY;
    for _ in 0..MAX_SWEEPS {
        let mut last = value;
        for free in 0..dims.len() {
            let a = f.contract(dims, &kets, free, index_digits);
            let e = hermitian_eigs(&a).expect("symmetrized");
            kets[free] = e.vectors.last().expect("dim >= 1").canonical_phase();
            last = *e.values.last().expect("dim >= 1");
        }
        let delta = (value - last).abs();
        value = last;
        if delta <= tol::CONVERGENCE {
            break;
        }
    }
    (value.max(0.0), kets)
}

/// Heuristic minimum of `<prod|Pi|prod>` over product states by alternating
/// minimization from `restarts` seeded random product states. The value is
/// attained by the returned product state, so it bounds the true minimum
/// from above.
pub fn product_epsilon(pi: &HermitianOperator, dims: &[usize], restarts: usize, seed: u64) -> Result<EpsilonEstimate> {
    let total: usize = dims.iter().product();
    if dims.is_empty() || dims.contains(&0) || total != pi.dim() {
        return arg(format!("party dimensions {dims:?} do not match operator dim {}", pi.dim()));
    }
    if restarts == 0 {
        return arg("at least one restart required");
    }
    let f = Factored::new(pi)?;
    let index_digits: Vec<Vec<usize>> = (0..total).map(|i| digits(i, dims)).collect();
    let runs: Vec<(f64, Vec<Ket>)> = (0..restarts)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let start: Vec<Ket> = dims.iter().map(|&d| random_ket(d, &mut rng)).collect();
            if f.weights.is_empty() {
                return (0.0, start);
            }
            minimize_from(&f, dims, &index_digits, start)
        })
        .collect();
    let (value, argmin) = runs
        .into_iter()
        .reduce(|a, b| if b.0 < a.0 { b } else { a })
        .expect("restarts >= 1");
    Ok(EpsilonEstimate {
        value,
        argmin,
        status: HEURISTIC,
        restarts,
        seed,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PptFlag {
    /// Parties transposed; the complement forms the other side.
    pub parties: Vec<usize>,
    pub min_eigenvalue: f64,
    pub ppt: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessReport {
    pub epsilon: f64,
    pub epsilon_status: &'static str,
    pub set_size: usize,
    pub total_dim: usize,
    #[serde(rename = "trace_BW")]
    pub trace_bw: f64,
    pub formula_value: f64,
    #[serde(rename = "trace_W_rho")]
    pub trace_w_rho: f64,
    pub trace_rho: f64,
    pub ppt_flags: Vec<PptFlag>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<HermitianOperator>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state: Option<HermitianOperator>,
}

impl WitnessReport {
    pub fn without_matrices(mut self) -> Self {
        self.witness = None;
        self.state = None;
        self
    }
}

/// `(Pi - eps 1) / (rank - eps D)`.
pub fn normalized_witness(pi: &HermitianOperator, rank: usize, epsilon: f64) -> Result<HermitianOperator> {
    let d = pi.dim() as f64;
    let denom = rank as f64 - epsilon * d;
    if denom <= 0.0 {
        return pre(format!("rank {rank} <= epsilon * D = {}", epsilon * d));
    }
    Ok(pi.sub(&HermitianOperator::identity(pi.dim()).scaled(epsilon)).scaled(1.0 / denom))
}

/// Bipartitions as the transposed side: nonempty subsets not containing the
/// last party.
pub fn bipartitions(n: usize) -> Vec<Vec<usize>> {
    (1..1usize << (n - 1))
        .map(|mask| (0..n - 1).filter(|i| mask >> i & 1 == 1).collect())
        .collect()
}

/// Builds the witness `W` and the state `rho` from the set and `epsilon`,
/// with `B` the Bell operator of the set's own inequality and projectors
/// (equal to the span projector for orthogonal property-(P) sets).
pub fn upb_witness(set: &ProductVectorSet, epsilon: f64) -> Result<WitnessReport> {
    if !(0.0..=1.0).contains(&epsilon) {
        return arg(format!("epsilon {epsilon} outside [0, 1]"));
    }
    let size = set.len();
    let total = set.total_dim();
    if (size as f64) <= epsilon * total as f64 {
        return pre(format!("|S| = {size} <= epsilon * D = {}: the set does not behave as a UPB", epsilon * total as f64));
    }
    if size >= total {
        return pre("the set spans the whole space; no complementary state exists");
    }
    let pi = span_projector(&set.global_kets())?;
    let b = match check_property_p(set).partition() {
        Some(part) => {
            let ineq = inequality_from_set(set, part, &vec![int(1); size])?;
            bell_operator(&ineq, &own_projectors(part))?
        }
        None => pi.clone(),
    };
    let w = normalized_witness(&pi, size, epsilon)?;
    let id = HermitianOperator::identity(total);
    let rho = id.sub(&pi).scaled(1.0 / (total - size) as f64);
    let ppt_flags = bipartitions(set.n())
        .into_iter()
        .map(|parties| {
            let pt = partial_transpose(&rho, set.dims(), &parties)?;
            let min = pt.min_eigenvalue();
            Ok(PptFlag {
                parties,
                min_eigenvalue: min,
                ppt: min >= -tol::RANK,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let s = size as f64;
    Ok(WitnessReport {
        epsilon,
        epsilon_status: HEURISTIC,
        set_size: size,
        total_dim: total,
        trace_bw: b.trace_product(&w),
        formula_value: s * (1.0 - epsilon) / (s - epsilon * total as f64),
        trace_w_rho: w.trace_product(&rho),
        trace_rho: rho.trace(),
        ppt_flags,
        witness: Some(w),
        state: Some(rho),
    })
}

/// `Tr(BW)` for a normalized witness.
pub fn witness_value_check(b: &HermitianOperator, w: &HermitianOperator) -> Result<f64> {
    if b.dim() != w.dim() {
        return arg(format!("dimension mismatch: {} vs {}", b.dim(), w.dim()));
    }
    if (w.trace() - 1.0).abs() > 1e-10 {
        return pre(format!("witness trace {} is not 1", w.trace()));
    }
    Ok(b.trace_product(w))
}

#[derive(Clone, Debug, Serialize)]
pub struct SampledWitness {
    pub witness: HermitianOperator,
    pub rank: usize,
    pub epsilon: f64,
}

/// Random normalized witness `(Pi' - eps' 1) / (rank - eps' D)` for a random
/// subspace projector `Pi'`; the full-rank case is the maximally mixed state.
pub fn sample_normalized_witness(dims: &[usize], seed: u64, restarts: usize) -> Result<SampledWitness> {
    let total: usize = dims.iter().product();
    if dims.is_empty() || dims.contains(&0) {
        return arg("party dimensions must be positive");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let rank = rng.random_range(1..=total);
        if rank == total {
            return Ok(SampledWitness {
                witness: HermitianOperator::identity(total).scaled(1.0 / total as f64),
                rank,
                epsilon: 1.0,
            });
        }
        let basis = random_unitary(total, &mut rng);
        let pi = projector_from(&basis[..rank], total);
        let eps = product_epsilon(&pi, dims, restarts, rng.random())?.value;
        if (rank as f64 - eps * total as f64).abs() <= tol::RANK {
            continue;
        }
        return Ok(SampledWitness {
            witness: normalized_witness(&pi, rank, eps)?,
            rank,
            epsilon: eps,
        });
    }
}

/// `<prod|op|prod>` for local kets.
pub fn product_expectation(op: &HermitianOperator, kets: &[Ket]) -> f64 {
    op.expectation(&product(kets))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::shifts_upb;

    /// Frozen by an independent 256-restart alternating minimization and a
    /// real Bloch-angle grid search at step pi/200.
    const SHIFTS_EPSILON: f64 = 0.081441346456309;

    fn shifts_pi() -> HermitianOperator {
        span_projector(&shifts_upb(None).unwrap().global_kets()).unwrap()
    }

    #[test]
    fn identity_and_basis_projector() {
        let e = product_epsilon(&HermitianOperator::identity(4), &[2, 2], 4, 0).unwrap();
        assert!((e.value - 1.0).abs() < 1e-12);
        let p = Ket::basis(4, 0).projector();
        let e = product_epsilon(&p, &[2, 2], 4, 0).unwrap();
        assert!(e.value.abs() < 1e-12);
        assert!(product_expectation(&p, &e.argmin) < 1e-12);
    }

    #[test]
    fn shifts_epsilon_matches_oracle() {
        let e = product_epsilon(&shifts_pi(), &[2, 2, 2], 256, 2024).unwrap();
        assert!((e.value - SHIFTS_EPSILON).abs() < 1e-8, "{}", e.value);
        assert!((product_expectation(&shifts_pi(), &e.argmin) - e.value).abs() < 1e-10);
        assert_eq!(e.status, HEURISTIC);
    }

    #[test]
    fn non_psd_rejected() {
        let m = HermitianOperator::diagonal(&[1.0, -0.5, 0.0, 0.0]);
        assert!(matches!(product_epsilon(&m, &[2, 2], 2, 0), Err(crate::Error::Precondition(_))));
    }

    #[test]
    fn shifts_witness_report() {
        let set = shifts_upb(None).unwrap();
        let eps = SHIFTS_EPSILON;
        let r = upb_witness(&set, eps).unwrap();
        assert!(r.trace_bw > 1.0);
        assert!((r.trace_bw - 4.0 * (1.0 - eps) / (4.0 - 8.0 * eps)).abs() < 1e-8);
        assert!((r.trace_bw - r.formula_value).abs() < 1e-8);
        assert!((r.trace_w_rho + eps / (4.0 - 8.0 * eps)).abs() < 1e-10);
        assert!(r.trace_w_rho < 0.0);
        assert!((r.trace_rho - 1.0).abs() < 1e-12);
        assert_eq!(r.ppt_flags.len(), 3);
        assert!(r.ppt_flags.iter().all(|f| f.ppt));
        let w = r.witness.as_ref().unwrap();
        let b = shifts_pi();
        assert!((witness_value_check(&b, w).unwrap() - r.trace_bw).abs() < 1e-12);
    }

    #[test]
    fn zero_epsilon_and_precondition() {
        let set = shifts_upb(None).unwrap();
        let r = upb_witness(&set, 0.0).unwrap();
        assert!((r.trace_bw - 1.0).abs() < 1e-12);
        assert!(matches!(upb_witness(&set, 0.5), Err(crate::Error::Precondition(_))));
    }

    #[test]
    fn witness_check_on_identity() {
        let d = 4;
        let b = HermitianOperator::diagonal(&[1.0, 2.0, 0.0, 3.0]);
        let w = HermitianOperator::identity(d).scaled(0.25);
        assert!((witness_value_check(&b, &w).unwrap() - b.trace() / 4.0).abs() < 1e-12);
        assert!(witness_value_check(&b, &HermitianOperator::identity(d)).is_err());
    }

    #[test]
    fn sampled_witness_shifts_formula() {
        let pi = shifts_pi();
        let w = normalized_witness(&pi, 4, SHIFTS_EPSILON).unwrap();
        let r = upb_witness(&shifts_upb(None).unwrap(), SHIFTS_EPSILON).unwrap();
        assert!(w.max_abs_diff(r.witness.as_ref().unwrap()) < 1e-15);
    }

    #[test]
    fn sampled_witnesses_are_normalized_and_block_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for seed in 0..10 {
            let s = sample_normalized_witness(&[2, 2, 2], seed, 16).unwrap();
            assert!((s.witness.trace() - 1.0).abs() < 1e-9);
            for _ in 0..500 {
                let kets: Vec<Ket> = (0..3).map(|_| random_ket(2, &mut rng)).collect();
                assert!(product_expectation(&s.witness, &kets) >= -1e-6);
            }
        }
    }
}
