use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::operator::{bell_operator_unchecked, random_projectors, ProjectorAssignment};
use crate::bell::BellInequality;
use crate::error::{arg, Result};
use crate::linalg::{apply_local, hermitian_eigs, reduced_cross, HermitianOperator, Ket, C64};
use crate::ratio;
use crate::tol;

#[derive(Clone, Debug)]
pub struct SeesawOptions {
    pub local_dims: Vec<usize>,
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
}

impl SeesawOptions {
    pub fn new(local_dims: Vec<usize>, seed: u64) -> Self {
        SeesawOptions {
            local_dims,
            restarts: 16,
            max_iters: 500,
            seed,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SeesawResult {
    pub value: f64,
    /// Restart that produced `value`.
    pub restart: usize,
    pub iterations: usize,
    pub converged: bool,
    #[serde(skip)]
    pub projectors: ProjectorAssignment,
    #[serde(skip)]
    pub state: Ket,
}

fn top_eigenpair(b: &HermitianOperator) -> (f64, Ket) {
    let e = hermitian_eigs(b).expect("Bell operators are Hermitian");
    (e.values[0], e.vectors[0].clone())
}

/// Projector onto the eigenvectors of `m` with eigenvalue above zero.
fn positive_part(m: &DMatrix<C64>) -> HermitianOperator {
    let h = HermitianOperator::symmetrized(m.clone());
    let e = hermitian_eigs(&h).expect("symmetrized");
    let mut p = HermitianOperator::zeros(h.dim());
    for (v, k) in e.values.iter().zip(&e.vectors) {
        if *v > tol::CONVERGENCE {
            p.add_scaled_assign(&k.projector(), 1.0);
        }
    }
    p
}

/// Effective operators `F[x][a]` of `party` with every other party fixed, so
/// that `<psi|B|psi> = sum_{x,a} Tr(P(party,x,a) F[x][a])`.
fn effective_operators(
    ineq: &BellInequality,
    projectors: &ProjectorAssignment,
    dims: &[usize],
    psi: &[C64],
    party: usize,
) -> Vec<Vec<DMatrix<C64>>> {
    let d = dims[party];
    let s = &ineq.scenario;
    let mut f: Vec<Vec<DMatrix<C64>>> = (0..s.inputs(party))
        .map(|x| vec![DMatrix::zeros(d, d); s.outputs(party, x)])
        .collect();
    for t in &ineq.terms {
        let mut phi = psi.to_vec();
        for j in 0..dims.len() {
            if j != party {
                phi = apply_local(&phi, dims, j, projectors[j][t.x[j]][t.a[j]].matrix());
            }
        }
        let g = reduced_cross(&phi, psi, dims, party);
        let q = C64::new(ratio::to_f64(&t.q), 0.0);
        f[t.x[party]][t.a[party]] += g * q;
    }
    f
}

/// Best measurement for one input against fixed effective operators, by
/// pairwise reassignment of the subspace held by two outputs.
fn improve_measurement(current: &[HermitianOperator], f: &[DMatrix<C64>]) -> Vec<HermitianOperator> {
    let r = current.len();
    let mut ps = current.to_vec();
    let sweeps = if r == 2 { 1 } else { 4 };
    for _ in 0..sweeps {
        for a in 0..r {
            for b in a + 1..r {
                let q = ps[a].add(&ps[b]);
                let diff = &f[a] - &f[b];
                let m = q.matrix() * diff * q.matrix();
                let pa = positive_part(&m);
                ps[b] = q.sub(&pa);
                ps[a] = pa;
            }
        }
    }
    ps
}

fn run_restart(ineq: &BellInequality, opts: &SeesawOptions, restart: usize) -> SeesawResult {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(restart as u64);
    let dims = &opts.local_dims;
    let mut projectors = random_projectors(&ineq.scenario, dims, &mut rng);
    let (mut value, mut state) = top_eigenpair(&bell_operator_unchecked(ineq, &projectors, dims));
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iters {
        iterations += 1;
        for party in 0..dims.len() {
            let f = effective_operators(ineq, &projectors, dims, state.amplitudes(), party);
            for (x, fx) in f.iter().enumerate() {
                projectors[party][x] = improve_measurement(&projectors[party][x], fx);
            }
        }
        let (next, next_state) = top_eigenpair(&bell_operator_unchecked(ineq, &projectors, dims));
        let delta = (next - value).abs();
        value = next;
        state = next_state;
        if delta <= tol::CONVERGENCE {
            converged = true;
            break;
        }
    }
    SeesawResult {
        value,
        restart,
        iterations,
        converged,
        projectors,
        state,
    }
}

/// Lower bound on the quantum maximum by alternating optimization over
/// projective measurements, best of `restarts` seeded starts. The selected
/// restart does not depend on thread scheduling.
pub fn seesaw_quantum_bound(ineq: &BellInequality, opts: &SeesawOptions) -> Result<SeesawResult> {
    if opts.local_dims.len() != ineq.n() || opts.local_dims.contains(&0) {
        return arg("one positive local dimension per party required");
    }
    if opts.restarts == 0 {
        return arg("at least one restart required");
    }
    let runs: Vec<SeesawResult> = (0..opts.restarts)
        .into_par_iter()
        .map(|k| run_restart(ineq, opts, k))
        .collect();
    let mut best = runs.into_iter().reduce(|a, b| if b.value > a.value { b } else { a });
    Ok(best.take().expect("restarts >= 1"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::{chsh_inequality, unit_inequality, BellTerm, Scenario};
    use crate::ratio::rat;

    #[test]
    fn chsh_reaches_tsirelson() {
        let r = seesaw_quantum_bound(&chsh_inequality(), &SeesawOptions::new(vec![2, 2], 3)).unwrap();
        assert!((r.value - (2.0 + 2f64.sqrt())).abs() < 1e-6, "{}", r.value);
    }

    #[test]
    fn shifts_reaches_but_never_exceeds_one() {
        let shifts = unit_inequality(3, &["000|000", "101|110", "011|101", "110|011"]).unwrap();
        let r = seesaw_quantum_bound(&shifts, &SeesawOptions::new(vec![2, 2, 2], 9)).unwrap();
        assert!(r.value <= 1.0 + 1e-9 && r.value >= 1.0 - 1e-6, "{}", r.value);
    }

    #[test]
    fn single_term() {
        let s = Scenario::uniform(2, 2, 2).unwrap();
        let ineq = BellInequality::new(s, vec![BellTerm::new(vec![1, 0], vec![0, 1], rat(3, 7))]).unwrap();
        let r = seesaw_quantum_bound(&ineq, &SeesawOptions::new(vec![2, 2], 0)).unwrap();
        assert!((r.value - 3.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn reproducible_for_a_seed() {
        let opts = SeesawOptions::new(vec![2, 2], 42);
        let a = seesaw_quantum_bound(&chsh_inequality(), &opts).unwrap();
        let b = seesaw_quantum_bound(&chsh_inequality(), &opts).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.restart, b.restart);
    }

    #[test]
    fn three_outputs_qutrits() {
        // Perfect correlations on one input pair: value 1 is attainable.
        let s = Scenario::uniform(2, 1, 3).unwrap();
        let terms = (0..3).map(|a| BellTerm::unit(vec![0, 0], vec![a, a])).collect();
        let ineq = BellInequality::new(s, terms).unwrap();
        let r = seesaw_quantum_bound(&ineq, &SeesawOptions::new(vec![3, 3], 1)).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9, "{}", r.value);
    }
}
