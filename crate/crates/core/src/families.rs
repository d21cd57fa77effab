//! Concrete qubit families: the three-qubit Shifts UPB, the `2^(n-1)`-member
//! family obtained from the GYNI-type inequalities, and the recursive
//! construction taking an n-qubit member of that family to n+1 qubits.

use nalgebra::DMatrix;
use rand::Rng;

use crate::bell::{gyni_flip_sets, predecessor};
use crate::error::{arg, pre, Result};
use crate::linalg::{random_unitary, tensor_product, Ket, C64};
use crate::product_set::{LocalLabel, ProductVectorSet, QubitFrame, SubsetAnnotation};
use crate::tol;

const ZERO_LABEL: LocalLabel = LocalLabel::new(0, 0);
const ONE_LABEL: LocalLabel = LocalLabel::new(0, 1);
const E_LABEL: LocalLabel = LocalLabel::new(1, 0);
const E_PERP_LABEL: LocalLabel = LocalLabel::new(1, 1);

/// The ray `|e_i>` per party, with `S_0 = {|0>,|1>}` and `S_1 = {|e_i>,|e_i^perp>}`.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalPairChoice {
    e: Vec<Ket>,
}

/// `(|0> + |1>)/sqrt 2`.
pub fn default_e() -> Ket {
    Ket::from_real(&[1.0, 1.0]).expect("nonzero")
}

impl LocalPairChoice {
    pub fn uniform(n: usize, e: Ket) -> Result<Self> {
        LocalPairChoice::per_party(vec![e; n])
    }

    pub fn default_for(n: usize) -> Self {
        LocalPairChoice::uniform(n, default_e()).expect("default e is valid")
    }

    pub fn per_party(e: Vec<Ket>) -> Result<Self> {
        let e = e.into_iter().map(|k| check_e(&k).map(|_| k.canonical_phase())).collect::<Result<_>>()?;
        Ok(LocalPairChoice { e })
    }

    /// Real `|e> = cos t |0> + sin t |1>` per party.
    pub fn from_angles(angles: &[f64]) -> Result<Self> {
        LocalPairChoice::per_party(angles.iter().map(|t| Ket::from_real(&[t.cos(), t.sin()])).collect::<Result<_>>()?)
    }

    pub fn n(&self) -> usize {
        self.e.len()
    }

    pub fn frame(&self, party: usize) -> QubitFrame {
        standard_frame(&self.e[party])
    }

    pub fn frames(&self) -> Vec<QubitFrame> {
        (0..self.n()).map(|i| self.frame(i)).collect()
    }

    /// `V_i` with `V|0> = |e_i>` and `V|1> = |e_i^perp>`.
    pub fn v_operator(&self, party: usize) -> DMatrix<C64> {
        transfer_operator(&self.frame(party))
    }
}

fn check_e(e: &Ket) -> Result<()> {
    if e.dim() != 2 || !e.is_normalized() {
        return pre("e must be a unit qubit ket");
    }
    let (z, o) = (Ket::basis(2, 0), Ket::basis(2, 1));
    if e.overlap(&z) >= 1.0 - tol::RAY_EQUAL || e.overlap(&o) >= 1.0 - tol::RAY_EQUAL {
        return pre("e must differ from |0> and |1>");
    }
    Ok(())
}

/// Frame with `S_0 = {|0>,|1>}` and `S_1 = {|e>, |e^perp>}`.
pub fn standard_frame(e: &Ket) -> QubitFrame {
    let e = e.canonical_phase();
    let ep = e.qubit_perp().expect("qubit").canonical_phase();
    QubitFrame {
        s0: [Ket::basis(2, 0), Ket::basis(2, 1)],
        s1: [e, ep],
    }
}

fn outer(a: &Ket, b: &Ket) -> DMatrix<C64> {
    DMatrix::from_fn(2, 2, |i, j| a.amplitudes()[i] * b.amplitudes()[j].conj())
}

/// `sum_k |s1_k><s0_k|`, mapping the `S_0` basis onto the `S_1` basis.
fn transfer_operator(f: &QubitFrame) -> DMatrix<C64> {
    outer(&f.s1[0], &f.s0[0]) + outer(&f.s1[1], &f.s0[1])
}

/// Swap `s0[0] <-> s0[1]`; the Pauli `X` for the standard frame.
fn flip_operator(f: &QubitFrame) -> DMatrix<C64> {
    outer(&f.s0[0], &f.s0[1]) + outer(&f.s0[1], &f.s0[0])
}

fn apply2(m: &DMatrix<C64>, k: &Ket) -> Ket {
    let a = k.amplitudes();
    Ket::new(vec![m[(0, 0)] * a[0] + m[(0, 1)] * a[1], m[(1, 0)] * a[0] + m[(1, 1)] * a[1]]).expect("finite")
}

fn annotated(frames: Vec<QubitFrame>, labels: Vec<Vec<LocalLabel>>) -> Result<ProductVectorSet> {
    let members = labels
        .iter()
        .map(|row| row.iter().enumerate().map(|(i, &l)| frames[i].ket(l).clone()).collect())
        .collect();
    ProductVectorSet::new(vec![2; frames.len()], members)?.with_subsets(SubsetAnnotation { frames, labels })
}

/// `{|000>, |1 e2 e3>, |e1 1 e3^perp>, |e1^perp e2^perp 1>}`.
pub fn shifts_upb(choice: Option<&LocalPairChoice>) -> Result<ProductVectorSet> {
    let choice = choice.cloned().unwrap_or_else(|| LocalPairChoice::default_for(3));
    if choice.n() != 3 {
        return arg(format!("Shifts UPB has 3 parties, choice has {}", choice.n()));
    }
    let labels = vec![
        vec![ZERO_LABEL, ZERO_LABEL, ZERO_LABEL],
        vec![ONE_LABEL, E_LABEL, E_LABEL],
        vec![E_LABEL, ONE_LABEL, E_PERP_LABEL],
        vec![E_PERP_LABEL, E_PERP_LABEL, ONE_LABEL],
    ];
    annotated(choice.frames(), labels)
}

/// The `2^(n-1)` product vectors `V_{i1}..V_{ik} sigma_{i1-1}..sigma_{ik-1} |0..0>`
/// (odd `n`), plus for even `n` the companions with an extra `V_1` and
/// `sigma_n`. Members are ordered by `(seed, I)`.
pub fn gyni_upb(n: usize, choice: &LocalPairChoice) -> Result<ProductVectorSet> {
    if n < 3 {
        return arg(format!("GYNI family needs n >= 3, got {n}"));
    }
    if choice.n() != n {
        return arg(format!("choice has {} parties, expected {n}", choice.n()));
    }
    gyni_upb_in_frames(&choice.frames())
}

/// Same construction with arbitrary orthonormal `S_0`, `S_1` per party:
/// `sigma` swaps the `S_0` pair and `V` carries `S_0` onto `S_1`.
pub fn gyni_upb_in_frames(frames: &[QubitFrame]) -> Result<ProductVectorSet> {
    let n = frames.len();
    if n < 3 {
        return arg(format!("GYNI family needs n >= 3, got {n}"));
    }
    let v_ops: Vec<DMatrix<C64>> = frames.iter().map(transfer_operator).collect();
    let sigma_ops: Vec<DMatrix<C64>> = frames.iter().map(flip_operator).collect();
    let mut members = Vec::new();
    let mut labels = Vec::new();
    for (seed, flips) in gyni_flip_sets(n) {
        let mut v_at = vec![false; n];
        let mut sigma_at = vec![false; n];
        if seed == 1 {
            v_at[0] = true;
            sigma_at[n - 1] = true;
        }
        for &i in &flips {
            v_at[i - 1] = true;
            sigma_at[predecessor(i, n) - 1] = true;
        }
        let mut row = Vec::with_capacity(n);
        let mut label_row = Vec::with_capacity(n);
        for p in 0..n {
            let mut k = frames[p].s0[0].clone();
            if sigma_at[p] {
                k = apply2(&sigma_ops[p], &k);
            }
            if v_at[p] {
                k = apply2(&v_ops[p], &k);
            }
            row.push(k);
            label_row.push(LocalLabel::new(v_at[p] as u8, sigma_at[p] as u8));
        }
        members.push(row);
        labels.push(label_row);
    }
    ProductVectorSet::new(vec![2; n], members)?.with_subsets(SubsetAnnotation {
        frames: frames.to_vec(),
        labels,
    })
}

/// Builds the `(n+1)`-qubit set
/// `|0> U1^(1), |1> U2^(2), |e> U2^(1), |e^perp> U1^(2)` from an annotated
/// n-qubit set `U1`, prepending the new party.
///
/// `U2` orthogonalizes the last qubit when `n` is odd; when `n` is even it
/// orthogonalizes the penultimate qubit and maps the last by
/// `|0> <-> |e^perp>`, `|1> <-> |e>`. `U^(1)` / `U^(2)` hold the members
/// whose first qubit lies in `S_0` / `S_1`.
pub fn recursive_extend(set: &ProductVectorSet, e_new: &Ket) -> Result<ProductVectorSet> {
    let ann = match set.subsets() {
        Some(a) => a,
        None => return arg("recursive_extend needs subset annotations on the input set"),
    };
    let n = set.n();
    if n < 2 {
        return arg("recursive_extend needs at least two parties");
    }
    check_e(e_new)?;
    let u2: Vec<Vec<LocalLabel>> = ann
        .labels
        .iter()
        .map(|row| {
            let mut row = row.clone();
            if n % 2 == 1 {
                row[n - 1] = row[n - 1].orthogonalized();
            } else {
                row[n - 2] = row[n - 2].orthogonalized();
                row[n - 1] = match row[n - 1] {
                    ZERO_LABEL => E_PERP_LABEL,
                    E_PERP_LABEL => ZERO_LABEL,
                    ONE_LABEL => E_LABEL,
                    _ => ONE_LABEL,
                };
            }
            row
        })
        .collect();
    let split = |rows: &[Vec<LocalLabel>], subset: u8| -> Vec<Vec<LocalLabel>> {
        rows.iter().filter(|r| r[0].subset == subset).cloned().collect()
    };
    let blocks = [
        (ZERO_LABEL, split(&ann.labels, 0)),
        (ONE_LABEL, split(&u2, 1)),
        (E_LABEL, split(&u2, 0)),
        (E_PERP_LABEL, split(&ann.labels, 1)),
    ];
    let mut labels = Vec::with_capacity(2 * set.len());
    for (head, rows) in blocks {
        for r in rows {
            let mut row = Vec::with_capacity(n + 1);
            row.push(head);
            row.extend(r);
            labels.push(row);
        }
    }
    let mut frames = vec![standard_frame(e_new)];
    frames.extend(ann.frames.iter().cloned());
    annotated(frames, labels)
}

/// Random three-party (P)-set: `gyni_upb_in_frames` with per-party random
/// orthonormal bases whose cross overlaps lie in `[0.1, 0.99]`.
pub fn random_p_set<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<ProductVectorSet> {
    let frames = (0..n).map(|_| random_frame(rng)).collect::<Vec<_>>();
    gyni_upb_in_frames(&frames)
}

pub fn random_frame<R: Rng + ?Sized>(rng: &mut R) -> QubitFrame {
    loop {
        let b = random_unitary(2, rng);
        let c = random_unitary(2, rng);
        let ok = b.iter().all(|u| c.iter().all(|v| (0.1..=0.99).contains(&u.overlap(v))));
        if ok {
            return QubitFrame {
                s0: [b[0].clone(), b[1].clone()],
                s1: [c[0].clone(), c[1].clone()],
            };
        }
    }
}

/// Applies a local single-qubit unitary to one party of every member.
pub fn apply_local_unitary(set: &ProductVectorSet, party: usize, u: &DMatrix<C64>) -> Result<ProductVectorSet> {
    if party >= set.n() || set.dims()[party] != 2 {
        return arg("local unitary target must be a qubit party");
    }
    let members = set
        .members()
        .iter()
        .map(|m| {
            let mut m = m.clone();
            m[party] = apply2(u, &m[party]);
            m
        })
        .collect();
    ProductVectorSet::new(set.dims().to_vec(), members)
}

/// Full product ket of `kets`, a convenience for tests and callers.
pub fn product(kets: &[Ket]) -> Ket {
    tensor_product(kets).expect("nonempty")
}
