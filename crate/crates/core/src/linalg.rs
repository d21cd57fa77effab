//! Small dense complex linear algebra.
//!
//! Party order convention: party 0 is the most significant (leftmost) tensor
//! factor, so a global basis index is the mixed-radix number whose leading
//! digit belongs to party 0.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{arg, pre, Result};
use crate::tol;

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// A vector in `C^dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct Ket {
    amps: Vec<C64>,
}

impl Ket {
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        if amps.is_empty() {
            return arg("ket must have positive dimension");
        }
        if amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return arg("ket amplitudes must be finite");
        }
        Ok(Ket { amps })
    }

    /// Builds a ket and rescales it to unit norm.
    pub fn normalized(amps: Vec<C64>) -> Result<Self> {
        let k = Ket::new(amps)?;
        let n = k.norm();
        if n < tol::PHASE_PIVOT {
            return arg("cannot normalize a zero vector");
        }
        Ok(k.scaled(C64::new(1.0 / n, 0.0)))
    }

    pub fn from_real(amps: &[f64]) -> Result<Self> {
        Ket::normalized(amps.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim, "basis index {index} out of range for dim {dim}");
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Ket { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= tol::NORMALIZED
    }

    /// `<self|other>`, antilinear in `self`.
    pub fn inner(&self, other: &Ket) -> C64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `|<self|other>|`.
    pub fn overlap(&self, other: &Ket) -> f64 {
        self.inner(other).norm()
    }

    pub fn scaled(&self, c: C64) -> Ket {
        Ket {
            amps: self.amps.iter().map(|z| z * c).collect(),
        }
    }

    /// Representative of the ray with the first non-negligible amplitude
    /// rotated onto the positive real axis.
    pub fn canonical_phase(&self) -> Ket {
        match self.amps.iter().find(|z| z.norm() > tol::PHASE_PIVOT) {
            Some(z) => self.scaled(z.conj() / z.norm()),
            None => self.clone(),
        }
    }

    /// Whether `self` and `other` describe the same ray.
    pub fn same_ray(&self, other: &Ket) -> bool {
        self.dim() == other.dim()
            && self.overlap(other) >= (self.norm() * other.norm()) * (1.0 - tol::RAY_EQUAL)
    }

    pub fn is_orthogonal(&self, other: &Ket) -> bool {
        self.overlap(other) <= tol::ORTHOGONAL
    }

    /// `|self><self|`.
    pub fn projector(&self) -> HermitianOperator {
        let d = self.dim();
        let m = DMatrix::from_fn(d, d, |i, j| self.amps[i] * self.amps[j].conj());
        HermitianOperator { m }
    }

    /// The unit qubit ket orthogonal to `self`, `(-conj(b), conj(a))`.
    pub fn qubit_perp(&self) -> Result<Ket> {
        if self.dim() != 2 {
            return arg("orthocomplement ray is only unique for qubits");
        }
        let (a, b) = (self.amps[0], self.amps[1]);
        Ket::normalized(vec![-b.conj(), a.conj()])
    }
}

impl Serialize for Ket {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = self.amps.iter().map(|z| [z.re, z.im]).collect();
        pairs.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Ket {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        Ket::new(pairs.into_iter().map(|[re, im]| C64::new(re, im)).collect())
            .map_err(serde::de::Error::custom)
    }
}

/// Dense Hermitian matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    m: DMatrix<C64>,
}

impl HermitianOperator {
    /// Wraps `m` after checking it is square, finite, and Hermitian within
    /// [`tol::HERMITIAN`]. The stored matrix is symmetrised exactly.
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return arg(format!("operator must be square and nonempty, got {}x{}", m.nrows(), m.ncols()));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return arg("operator entries must be finite");
        }
        let defect = hermiticity_defect(&m);
        if defect > tol::HERMITIAN {
            return pre(format!("matrix is not Hermitian (defect {defect:.3e})"));
        }
        Ok(Self::symmetrized(m))
    }

    pub(crate) fn symmetrized(m: DMatrix<C64>) -> Self {
        let mut h = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        for i in 0..h.nrows() {
            h[(i, i)].im = 0.0;
        }
        HermitianOperator { m: h }
    }

    pub fn identity(dim: usize) -> Self {
        HermitianOperator {
            m: DMatrix::identity(dim, dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        HermitianOperator {
            m: DMatrix::zeros(dim, dim),
        }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let d = values.len();
        HermitianOperator {
            m: DMatrix::from_fn(d, d, |i, j| if i == j { C64::new(values[i], 0.0) } else { ZERO }),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.m[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.m[(i, i)].re).sum()
    }

    /// `Tr(self * other)`, real for Hermitian arguments.
    pub fn trace_product(&self, other: &HermitianOperator) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        let d = self.dim();
        let mut acc = ZERO;
        for i in 0..d {
            for j in 0..d {
                acc += self.m[(i, j)] * other.m[(j, i)];
            }
        }
        acc.re
    }

    pub fn apply(&self, k: &Ket) -> Vec<C64> {
        let d = self.dim();
        (0..d)
            .map(|i| (0..d).map(|j| self.m[(i, j)] * k.amps[j]).sum())
            .collect()
    }

    /// `<k|self|k>`.
    pub fn expectation(&self, k: &Ket) -> f64 {
        self.apply(k)
            .iter()
            .zip(&k.amps)
            .map(|(a, b)| b.conj() * a)
            .sum::<C64>()
            .re
    }

    pub fn scaled(&self, c: f64) -> Self {
        HermitianOperator {
            m: &self.m * C64::new(c, 0.0),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        HermitianOperator { m: &self.m + &other.m }
    }

    pub fn sub(&self, other: &Self) -> Self {
        HermitianOperator { m: &self.m - &other.m }
    }

    pub(crate) fn add_scaled_assign(&mut self, other: &Self, c: f64) {
        self.m += &other.m * C64::new(c, 0.0);
    }

    pub fn product(&self, other: &Self) -> DMatrix<C64> {
        &self.m * &other.m
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.m
            .iter()
            .zip(other.m.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Whether `self^2 = self` within `tolerance` entrywise.
    pub fn is_projector(&self, tolerance: f64) -> bool {
        let sq = &self.m * &self.m;
        sq.iter()
            .zip(self.m.iter())
            .all(|(a, b)| (a - b).norm() <= tolerance)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        hermitian_eigs(self)
            .expect("stored operators are Hermitian")
            .values[0]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        *hermitian_eigs(self)
            .expect("stored operators are Hermitian")
            .values
            .last()
            .expect("nonempty")
    }
}

impl Serialize for HermitianOperator {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| [self.m[(i, j)].re, self.m[(i, j)].im]).collect())
            .collect();
        rows.serialize(s)
    }
}

fn hermiticity_defect(m: &DMatrix<C64>) -> f64 {
    let d = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in i..d {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Kronecker product of two values of the same kind.
pub trait Kron {
    fn kron(&self, other: &Self) -> Self;
}

impl Kron for Ket {
    fn kron(&self, other: &Self) -> Self {
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amps {
            amps.extend(other.amps.iter().map(|b| a * b));
        }
        Ket { amps }
    }
}

impl Kron for HermitianOperator {
    fn kron(&self, other: &Self) -> Self {
        HermitianOperator {
            m: self.m.kronecker(&other.m),
        }
    }
}

/// Kronecker product of `factors` in left-to-right party order.
pub fn tensor_product<T: Kron + Clone>(factors: &[T]) -> Result<T> {
    let (first, rest) = match factors.split_first() {
        Some(x) => x,
        None => return arg("tensor product of an empty list"),
    };
    Ok(rest.iter().fold(first.clone(), |acc, f| acc.kron(f)))
}

/// Eigen-decomposition with eigenvalues sorted in descending order.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Ket>,
}

pub fn hermitian_eigs(m: &HermitianOperator) -> Result<Eigen> {
    let defect = hermiticity_defect(&m.m);
    if defect > tol::HERMITIAN {
        return pre(format!("matrix is not Hermitian (defect {defect:.3e})"));
    }
    let d = m.dim();
    if d == 1 {
        return Ok(Eigen {
            values: vec![m.m[(0, 0)].re],
            vectors: vec![Ket::basis(1, 0)],
        });
    }
    let eig = m.m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    // Descending; ties keep the solver's index order.
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = order
        .iter()
        .map(|&k| Ket {
            amps: eig.eigenvectors.column(k).iter().copied().collect(),
        })
        .collect();
    Ok(Eigen { values, vectors })
}

fn check_dims(total: usize, dims: &[usize]) -> Result<()> {
    if dims.is_empty() || dims.contains(&0) {
        return arg("party dimensions must be positive and nonempty");
    }
    let prod: usize = dims.iter().product();
    if prod != total {
        return arg(format!("party dimensions {dims:?} multiply to {prod}, operator has dim {total}"));
    }
    Ok(())
}

/// Mixed-radix digits of `index`, party 0 first.
pub(crate) fn digits(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for (slot, &d) in out.iter_mut().zip(dims).rev() {
        *slot = index % d;
        index /= d;
    }
    out
}

pub(crate) fn index_of(digits: &[usize], dims: &[usize]) -> usize {
    digits.iter().zip(dims).fold(0, |acc, (&x, &d)| acc * d + x)
}

/// Transposes the tensor indices of the parties in `subset`.
pub fn partial_transpose(m: &HermitianOperator, dims: &[usize], subset: &[usize]) -> Result<HermitianOperator> {
    check_dims(m.dim(), dims)?;
    if let Some(&p) = subset.iter().find(|&&p| p >= dims.len()) {
        return arg(format!("party {p} out of range for {} parties", dims.len()));
    }
    let d = m.dim();
    let row_digits: Vec<Vec<usize>> = (0..d).map(|i| digits(i, dims)).collect();
    let mut out = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let mut ri = row_digits[i].clone();
            let mut cj = row_digits[j].clone();
            for &p in subset {
                std::mem::swap(&mut ri[p], &mut cj[p]);
            }
            out[(index_of(&ri, dims), index_of(&cj, dims))] = m.m[(i, j)];
        }
    }
    Ok(HermitianOperator { m: out })
}

/// Contracts `m` against fixed kets on every party except one, returning
/// the operator `A` on the free party with `<phi|A|phi> = <psi|m|psi>` where
/// `psi` is the product state with `phi` in the free slot.
pub fn partial_contraction(m: &HermitianOperator, dims: &[usize], kets: &[Option<Ket>]) -> Result<HermitianOperator> {
    check_dims(m.dim(), dims)?;
    if kets.len() != dims.len() {
        return arg(format!("expected {} slots, got {}", dims.len(), kets.len()));
    }
    let free: Vec<usize> = (0..kets.len()).filter(|&i| kets[i].is_none()).collect();
    let free = match free.as_slice() {
        [f] => *f,
        _ => return arg(format!("exactly one free slot required, found {}", free.len())),
    };
    for (i, k) in kets.iter().enumerate() {
        if let Some(k) = k {
            if k.dim() != dims[i] {
                return arg(format!("ket for party {i} has dim {}, expected {}", k.dim(), dims[i]));
            }
        }
    }
    let df = dims[free];
    // Column l of `lift` is the product state with basis vector l in the free slot.
    let lift_cols: Vec<Vec<C64>> = (0..df)
        .map(|l| {
            let factors: Vec<Ket> = kets
                .iter()
                .enumerate()
                .map(|(i, k)| match k {
                    Some(k) => k.clone(),
                    None => Ket::basis(dims[i], l),
                })
                .collect();
            tensor_product(&factors).expect("nonempty").amps
        })
        .collect();
    let applied: Vec<Vec<C64>> = lift_cols
        .iter()
        .map(|c| m.apply(&Ket { amps: c.clone() }))
        .collect();
    let a = DMatrix::from_fn(df, df, |k, l| {
        lift_cols[k]
            .iter()
            .zip(&applied[l])
            .map(|(u, v)| u.conj() * v)
            .sum::<C64>()
    });
    Ok(HermitianOperator::symmetrized(a))
}

/// Applies a `d_party x d_party` matrix to the given tensor factor of `state`.
pub fn apply_local(state: &[C64], dims: &[usize], party: usize, op: &DMatrix<C64>) -> Vec<C64> {
    let d = dims[party];
    let inner: usize = dims[party + 1..].iter().product();
    let outer: usize = dims[..party].iter().product();
    let mut out = vec![ZERO; state.len()];
    for o in 0..outer {
        for r in 0..inner {
            let base = o * d * inner + r;
            for k in 0..d {
                let mut acc = ZERO;
                for l in 0..d {
                    acc += op[(k, l)] * state[base + l * inner];
                }
                out[base + k * inner] = acc;
            }
        }
    }
    out
}

/// Reduced operator on `party`: `G = sum_r phi_r psi_r^dagger`, so that
/// `Tr(P G) = <psi|(A (x) P)|psi>` when `phi = (A (x) 1) psi`.
pub(crate) fn reduced_cross(phi: &[C64], psi: &[C64], dims: &[usize], party: usize) -> DMatrix<C64> {
    let d = dims[party];
    let inner: usize = dims[party + 1..].iter().product();
    let outer: usize = dims[..party].iter().product();
    let mut g = DMatrix::zeros(d, d);
    for o in 0..outer {
        for r in 0..inner {
            let base = o * d * inner + r;
            for l in 0..d {
                for k in 0..d {
                    g[(l, k)] += phi[base + l * inner] * psi[base + k * inner].conj();
                }
            }
        }
    }
    g
}

/// Haar-random unit ket.
pub fn random_ket<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Ket {
    loop {
        let amps: Vec<C64> = (0..dim)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        if let Ok(k) = Ket::normalized(amps) {
            return k;
        }
    }
}

/// Orthonormal basis drawn by Gram-Schmidt on Gaussian vectors; returned as columns.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<Ket> {
    let mut basis: Vec<Ket> = Vec::with_capacity(dim);
    while basis.len() < dim {
        let v = random_ket(dim, rng);
        if let Some(u) = orthonormalize_against(&v, &basis) {
            basis.push(u);
        }
    }
    basis
}

/// Component of `v` orthogonal to the orthonormal `basis`, normalized; `None`
/// when `v` lies in their span up to [`tol::RANK`].
pub fn orthonormalize_against(v: &Ket, basis: &[Ket]) -> Option<Ket> {
    let mut w = v.amps.clone();
    // Two passes of modified Gram-Schmidt.
    for _ in 0..2 {
        for b in basis {
            let c = b.inner(&Ket { amps: w.clone() });
            for (wi, bi) in w.iter_mut().zip(&b.amps) {
                *wi -= c * bi;
            }
        }
    }
    let n: f64 = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if n <= tol::RANK.sqrt() * v.norm().max(1.0) {
        None
    } else {
        Some(Ket {
            amps: w.into_iter().map(|z| z / n).collect(),
        })
    }
}

/// Orthonormal basis of `span(vectors)`.
pub fn span_basis(vectors: &[Ket]) -> Vec<Ket> {
    let mut basis = Vec::new();
    for v in vectors {
        if let Some(u) = orthonormalize_against(v, &basis) {
            basis.push(u);
        }
    }
    basis
}

/// Orthogonal projector onto `span(vectors)`.
pub fn span_projector(vectors: &[Ket]) -> Result<HermitianOperator> {
    let dim = match vectors.first() {
        Some(v) => v.dim(),
        None => return arg("span of an empty set"),
    };
    let mut p = HermitianOperator::zeros(dim);
    for b in span_basis(vectors) {
        p.add_scaled_assign(&b.projector(), 1.0);
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(dim: usize, rng: &mut ChaCha8Rng) -> HermitianOperator {
        let a = DMatrix::from_fn(dim, dim, |_, _| {
            C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        HermitianOperator::symmetrized(a)
    }

    fn plus() -> Ket {
        Ket::from_real(&[1.0, 1.0]).unwrap()
    }

    #[test]
    fn tensor_of_zeros_is_first_basis_vector() {
        let z = Ket::basis(2, 0);
        let k = tensor_product(&[z.clone(), z.clone(), z]).unwrap();
        assert_eq!(k, Ket::basis(8, 0));
    }

    #[test]
    fn tensor_of_identities() {
        let i2 = HermitianOperator::identity(2);
        assert_eq!(tensor_product(&[i2.clone(), i2]).unwrap(), HermitianOperator::identity(4));
    }

    #[test]
    fn tensor_one_e_e() {
        let k = tensor_product(&[Ket::basis(2, 1), plus(), plus()]).unwrap();
        for (i, z) in k.amplitudes().iter().enumerate() {
            let want = if i >= 4 { 0.5 } else { 0.0 };
            assert!((z - C64::new(want, 0.0)).norm() < 1e-15, "index {i}: {z}");
        }
    }

    #[test]
    fn empty_tensor_is_an_error() {
        assert!(tensor_product::<Ket>(&[]).is_err());
    }

    #[test]
    fn tensor_associativity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (a, b, c) = (random_hermitian(2, &mut rng), random_hermitian(3, &mut rng), random_hermitian(2, &mut rng));
        let left = a.kron(&b.kron(&c));
        let right = a.kron(&b).kron(&c);
        assert!(left.max_abs_diff(&right) <= 1e-12);
    }

    #[test]
    fn eigs_simple() {
        let e = hermitian_eigs(&HermitianOperator::identity(2)).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0]);
        let e = hermitian_eigs(&HermitianOperator::diagonal(&[1.0, 3.0, -2.0])).unwrap();
        for (got, want) in e.values.iter().zip([3.0, 1.0, -2.0]) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn eigs_reject_non_hermitian() {
        let m = DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]);
        assert!(HermitianOperator::new(m.clone()).is_err());
        let raw = HermitianOperator { m };
        assert!(matches!(hermitian_eigs(&raw), Err(crate::Error::Precondition(_))));
    }

    #[test]
    fn eigs_residual_and_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for dim in [2, 3, 8, 27, 64] {
            let m = random_hermitian(dim, &mut rng);
            let e = hermitian_eigs(&m).unwrap();
            assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
            let mut rebuilt = HermitianOperator::zeros(dim);
            for (lam, v) in e.values.iter().zip(&e.vectors) {
                let mv = m.apply(v);
                let res: f64 = mv
                    .iter()
                    .zip(v.amplitudes())
                    .map(|(a, b)| (a - b * lam).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                assert!(res <= 1e-9 * dim as f64, "dim {dim} residual {res}");
                rebuilt.add_scaled_assign(&v.projector(), *lam);
            }
            assert!(rebuilt.max_abs_diff(&m) <= 1e-8 * dim as f64);
        }
    }

    #[test]
    fn partial_transpose_basics() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let dims = [2, 3, 2];
        let m = random_hermitian(12, &mut rng);
        assert_eq!(partial_transpose(&m, &dims, &[]).unwrap(), m);
        for subset in [vec![0], vec![1], vec![0, 2]] {
            let t = partial_transpose(&m, &dims, &subset).unwrap();
            assert!((t.trace() - m.trace()).abs() <= 1e-12);
            assert_eq!(partial_transpose(&t, &dims, &subset).unwrap(), m);
        }
        assert!(partial_transpose(&m, &[2, 2], &[0]).is_err());
        assert!(partial_transpose(&m, &dims, &[3]).is_err());
    }

    #[test]
    fn partial_transpose_of_all_parties_is_full_transpose() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = random_hermitian(4, &mut rng);
        let t = partial_transpose(&m, &[2, 2], &[0, 1]).unwrap();
        assert_eq!(t.matrix(), &m.matrix().transpose());
    }

    #[test]
    fn contraction_of_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let kets = vec![Some(random_ket(2, &mut rng)), None, Some(random_ket(3, &mut rng))];
        let a = partial_contraction(&HermitianOperator::identity(12), &[2, 2, 3], &kets).unwrap();
        assert!(a.max_abs_diff(&HermitianOperator::identity(2)) < 1e-12);
    }

    #[test]
    fn contraction_of_basis_projector() {
        let p = Ket::basis(8, 0).projector();
        let z = Ket::basis(2, 0);
        let a = partial_contraction(&p, &[2, 2, 2], &[None, Some(z.clone()), Some(z.clone())]).unwrap();
        assert!(a.max_abs_diff(&z.projector()) < 1e-15);
    }

    #[test]
    fn contraction_needs_one_free_slot() {
        let p = HermitianOperator::identity(4);
        let z = Ket::basis(2, 0);
        assert!(partial_contraction(&p, &[2, 2], &[None, None]).is_err());
        assert!(partial_contraction(&p, &[2, 2], &[Some(z.clone()), Some(z)]).is_err());
    }

    #[test]
    fn contraction_matches_full_expectation() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let dims = [2, 3, 2];
        for trial in 0..100 {
            let m = random_hermitian(12, &mut rng);
            let kets: Vec<Ket> = dims.iter().map(|&d| random_ket(d, &mut rng)).collect();
            let free = trial % 3;
            let slots: Vec<Option<Ket>> = kets
                .iter()
                .enumerate()
                .map(|(i, k)| (i != free).then(|| k.clone()))
                .collect();
            let a = partial_contraction(&m, &dims, &slots).unwrap();
            let full = m.expectation(&tensor_product(&kets).unwrap());
            assert!((a.expectation(&kets[free]) - full).abs() <= 1e-10);
        }
    }

    #[test]
    fn apply_local_matches_kron() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let dims = [2, 3, 2];
        let op = random_hermitian(3, &mut rng);
        let state = random_ket(12, &mut rng);
        let full = tensor_product(&[HermitianOperator::identity(2), op.clone(), HermitianOperator::identity(2)]).unwrap();
        let want = full.apply(&state);
        let got = apply_local(state.amplitudes(), &dims, 1, op.matrix());
        for (a, b) in want.iter().zip(&got) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn canonical_phase_identifies_rays() {
        let z = Ket::basis(2, 0);
        let rotated = z.scaled(C64::from_polar(1.0, std::f64::consts::FRAC_PI_3));
        assert!(z.same_ray(&rotated));
        let c = rotated.canonical_phase();
        assert!((c.amplitudes()[0] - ONE).norm() < 1e-15);
    }

    #[test]
    fn qubit_perp_is_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let k = random_ket(2, &mut rng);
        assert!(k.is_orthogonal(&k.qubit_perp().unwrap()));
    }
}
