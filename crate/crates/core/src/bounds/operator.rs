use rand::seq::SliceRandom;
use rand::Rng;

use crate::bell::{BellInequality, Scenario};
use crate::error::{arg, pre, Result};
use crate::linalg::{random_unitary, tensor_product, HermitianOperator, Ket};
use crate::product_set::MeasurementPartition;
use crate::ratio;
use crate::tol;

/// Projectors indexed `[party][input][output]`.
pub type ProjectorAssignment = Vec<Vec<Vec<HermitianOperator>>>;

/// Validates the assignment against the scenario and returns the local dims.
pub fn check_projectors(scenario: &Scenario, projectors: &ProjectorAssignment) -> Result<Vec<usize>> {
    if projectors.len() != scenario.n() {
        return arg(format!("projectors for {} parties, scenario has {}", projectors.len(), scenario.n()));
    }
    let mut dims = Vec::with_capacity(scenario.n());
    for (i, party) in projectors.iter().enumerate() {
        if party.len() != scenario.inputs(i) {
            return arg(format!("party {i}: {} inputs given, {} expected", party.len(), scenario.inputs(i)));
        }
        let d = match party.first().and_then(|m| m.first()) {
            Some(p) => p.dim(),
            None => return arg(format!("party {i}: empty measurement")),
        };
        for (x, meas) in party.iter().enumerate() {
            if meas.len() != scenario.outputs(i, x) {
                return arg(format!("party {i} input {x}: {} outputs given, {} expected", meas.len(), scenario.outputs(i, x)));
            }
            let mut total = HermitianOperator::zeros(d);
            for (a, p) in meas.iter().enumerate() {
                if p.dim() != d {
                    return arg(format!("party {i}: projector dims disagree"));
                }
                if !p.is_projector(tol::ORTHOGONAL) {
                    return pre(format!("party {i} input {x} output {a}: not a projector"));
                }
                for (b, p2) in meas.iter().enumerate().skip(a + 1) {
                    let prod = p.product(p2);
                    if prod.iter().any(|z| z.norm() > tol::ORTHOGONAL) {
                        return pre(format!("party {i} input {x}: outputs {a} and {b} are not orthogonal"));
                    }
                }
                total.add_scaled_assign(p, 1.0);
            }
            // Orthogonal projectors sum to a projector, hence at most identity.
            if !total.is_projector(tol::ORTHOGONAL) {
                return pre(format!("party {i} input {x}: projectors exceed identity"));
            }
        }
        dims.push(d);
    }
    Ok(dims)
}

/// `B = sum_j q_j (x)_i P(i, x_i^j, a_i^j)`.
pub fn bell_operator(ineq: &BellInequality, projectors: &ProjectorAssignment) -> Result<HermitianOperator> {
    let dims = check_projectors(&ineq.scenario, projectors)?;
    Ok(bell_operator_unchecked(ineq, projectors, &dims))
}

pub(crate) fn bell_operator_unchecked(ineq: &BellInequality, projectors: &ProjectorAssignment, dims: &[usize]) -> HermitianOperator {
    let total: usize = dims.iter().product();
    let mut b = HermitianOperator::zeros(total);
    for t in &ineq.terms {
        let factors: Vec<HermitianOperator> = (0..dims.len())
            .map(|i| projectors[i][t.x[i]][t.a[i]].clone())
            .collect();
        let term = tensor_product(&factors).expect("nonempty");
        b.add_scaled_assign(&term, ratio::to_f64(&t.q));
    }
    b
}

/// Largest eigenvalue of the Bell operator.
pub fn quantum_spectral_bound(ineq: &BellInequality, projectors: &ProjectorAssignment) -> Result<f64> {
    Ok(bell_operator(ineq, projectors)?.max_eigenvalue())
}

/// Rank-1 projectors onto the rays of a property-(P) partition.
pub fn own_projectors(partition: &MeasurementPartition) -> ProjectorAssignment {
    partition
        .dictionary()
        .iter()
        .map(|party| {
            party
                .iter()
                .map(|meas| meas.iter().map(Ket::projector).collect())
                .collect()
        })
        .collect()
}

/// Projective measurement in a random basis of dimension `dim`: every basis
/// vector goes to some output, each output receiving at least one when
/// `dim >= outputs`.
pub fn random_measurement<R: Rng + ?Sized>(dim: usize, outputs: usize, rng: &mut R) -> Vec<HermitianOperator> {
    let basis = random_unitary(dim, rng);
    let mut owner: Vec<usize> = (0..dim).map(|k| k % outputs).collect();
    owner.shuffle(rng);
    let mut ps = vec![HermitianOperator::zeros(dim); outputs];
    for (k, v) in basis.iter().enumerate() {
        ps[owner[k]].add_scaled_assign(&v.projector(), 1.0);
    }
    ps
}

pub fn random_projectors<R: Rng + ?Sized>(scenario: &Scenario, dims: &[usize], rng: &mut R) -> ProjectorAssignment {
    (0..scenario.n())
        .map(|i| {
            (0..scenario.inputs(i))
                .map(|x| random_measurement(dims[i], scenario.outputs(i, x), rng))
                .collect()
        })
        .collect()
}

/// Projector onto the span of orthonormal columns.
pub(crate) fn projector_from(vectors: &[Ket], dim: usize) -> HermitianOperator {
    let mut p = HermitianOperator::zeros(dim);
    for v in vectors {
        p.add_scaled_assign(&v.projector(), 1.0);
    }
    p
}
