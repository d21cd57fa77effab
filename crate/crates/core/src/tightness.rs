//! Facet test for Bell inequalities over the local polytope, by exact rank of
//! the saturating deterministic vertices.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::bell::{BellInequality, Scenario};
use crate::bounds::classical::{all_strategies, classical_bound, local_strategies, DeterministicStrategy};
use crate::error::{Error, Result};
use crate::ratio::Rational;

/// Hard cap for `local_vertices`.
pub const VERTEX_LIMIT: u128 = 1_000_000;
/// Default cap for `is_tight`: six parties with two binary inputs each.
pub const DEFAULT_TIGHTNESS_VERTICES: u128 = 4096;
/// Rank computations on at most this many rows are audited in integers.
pub const AUDIT_ROWS: usize = 200;
/// Above this many vertices the polytope dimension uses the per-party
/// factorization instead of eliminating every vertex.
pub const DIRECT_POLYTOPE_ROWS: usize = 1024;

/// Deterministic vertices as sparse 0/1 rows over the full `p(a|x)` table.
#[derive(Clone, Debug)]
pub struct VertexMatrix {
    pub scenario: Scenario,
    pub strategies: Vec<DeterministicStrategy>,
    /// Column of the single 1 in each input-vector block, per row.
    pub ones: Vec<Vec<u32>>,
    pub columns: usize,
}

impl VertexMatrix {
    pub fn rows(&self) -> usize {
        self.ones.len()
    }

    pub fn dense_row(&self, k: usize) -> Vec<u8> {
        let mut r = vec![0u8; self.columns];
        for &c in &self.ones[k] {
            r[c as usize] = 1;
        }
        r
    }

    /// Rows `k` of the selection minus the first, restricted to `cols`.
    fn differences(&self, rows: &[usize], cols: &[usize]) -> Vec<Vec<i8>> {
        let Some((&first, rest)) = rows.split_first() else {
            return Vec::new();
        };
        let base = self.dense_row(first);
        rest.iter()
            .map(|&k| {
                let r = self.dense_row(k);
                cols.iter().map(|&c| r[c] as i8 - base[c] as i8).collect()
            })
            .collect()
    }
}

struct TableLayout {
    offsets: Vec<usize>,
    radices: Vec<Vec<usize>>,
    inputs: Vec<Vec<usize>>,
}

impl TableLayout {
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
        TableLayout { offsets, radices, inputs }
    }

    fn column(&self, row: usize, a: &[usize]) -> usize {
        self.offsets[row] + a.iter().zip(&self.radices[row]).fold(0, |acc, (&ai, &r)| acc * r + ai)
    }
}

/// Every product of per-party deterministic maps, in the lexicographic order
/// used by the classical search.
pub fn local_vertices(scenario: &Scenario) -> Result<VertexMatrix> {
    let count = scenario.strategy_count();
    if count > VERTEX_LIMIT {
        return Err(Error::Capacity {
            what: "local vertices",
            required: count,
            limit: VERTEX_LIMIT,
        });
    }
    let layout = TableLayout::new(scenario);
    let strategies = all_strategies(scenario)?;
    let ones = strategies
        .iter()
        .map(|s| {
            layout
                .inputs
                .iter()
                .enumerate()
                .map(|(row, x)| {
                    let a: Vec<usize> = x.iter().zip(&s.maps).map(|(&xi, m)| m[xi]).collect();
                    layout.column(row, &a) as u32
                })
                .collect()
        })
        .collect();
    Ok(VertexMatrix {
        scenario: scenario.clone(),
        strategies,
        ones,
        columns: scenario.table_size() as usize,
    })
}

/// Columns of the full table indexed by products of independent local
/// columns. Every vertex column is a fixed combination of these, so any row
/// selection has the same rank on them as on the full table.
fn basis_columns(scenario: &Scenario) -> Vec<usize> {
    let local: Vec<Vec<(usize, usize)>> = (0..scenario.n())
        .map(|i| {
            let strategies = local_strategies(scenario, i);
            let cols: Vec<(usize, usize)> = (0..scenario.inputs(i))
                .flat_map(|x| (0..scenario.outputs(i, x)).map(move |a| (x, a)))
                .collect();
            let matrix: Vec<Vec<i64>> = cols
                .iter()
                .map(|&(x, a)| strategies.iter().map(|m| (m[x] == a) as i64).collect())
                .collect();
            independent_rows(&matrix).into_iter().map(|k| cols[k]).collect()
        })
        .collect();
    let layout = TableLayout::new(scenario);
    let mut out = Vec::new();
    for (row, x) in layout.inputs.iter().enumerate() {
        let radices = &layout.radices[row];
        for a in crate::bell::mixed_radix(radices) {
            let keep = (0..scenario.n()).all(|i| local[i].contains(&(x[i], a[i])));
            if keep {
                out.push(layout.column(row, &a));
            }
        }
    }
    out
}

/// Greedy maximal independent subset of rows, exactly over the rationals.
fn independent_rows(rows: &[Vec<i64>]) -> Vec<usize> {
    let mut basis: Vec<Vec<Rational>> = Vec::new();
    let mut pivots: Vec<usize> = Vec::new();
    let mut keep = Vec::new();
    for (k, row) in rows.iter().enumerate() {
        let mut v: Vec<Rational> = row.iter().map(|&e| Rational::from_integer(e.into())).collect();
        for (b, &pc) in basis.iter().zip(&pivots) {
            if !v[pc].is_zero() {
                let f = v[pc].clone() / &b[pc];
                for (vj, bj) in v.iter_mut().zip(b) {
                    *vj -= &f * bj;
                }
            }
        }
        if let Some(pc) = v.iter().position(|e| !e.is_zero()) {
            basis.push(v);
            pivots.push(pc);
            keep.push(k);
        }
    }
    keep
}

struct Montgomery {
    p: u64,
    neg_inv: u64,
    r2: u64,
}

impl Montgomery {
    fn new(p: u64) -> Self {
        let mut inv = p;
        for _ in 0..6 {
            inv = inv.wrapping_mul(2u64.wrapping_sub(p.wrapping_mul(inv)));
        }
        let r = ((1u128 << 64) % p as u128) as u64;
        let r2 = ((r as u128 * r as u128) % p as u128) as u64;
        Montgomery {
            p,
            neg_inv: inv.wrapping_neg(),
            r2,
        }
    }

    #[inline]
    fn reduce(&self, t: u128) -> u64 {
        let m = (t as u64).wrapping_mul(self.neg_inv);
        let u = ((t + m as u128 * self.p as u128) >> 64) as u64;
        if u >= self.p {
            u - self.p
        } else {
            u
        }
    }

    #[inline]
    fn mul(&self, a: u64, b: u64) -> u64 {
        self.reduce(a as u128 * b as u128)
    }

    #[inline]
    fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    fn lift(&self, x: i64) -> u64 {
        let r = x.rem_euclid(self.p as i64) as u64;
        self.mul(r, self.r2)
    }

    fn inverse(&self, a: u64) -> u64 {
        let mut result = self.lift(1);
        let mut base = a;
        let mut e = self.p - 2;
        while e > 0 {
            if e & 1 == 1 {
                result = self.mul(result, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        result
    }
}

fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    (a as u128 * b as u128 % p as u128) as u64
}

fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b, p);
        }
        b = mul_mod(b, b, p);
        e >>= 1;
    }
    r
}

/// Deterministic Miller-Rabin, exact for all 64-bit inputs.
pub fn is_prime(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &b in &BASES {
        if n.is_multiple_of(b) {
            return n == b;
        }
    }
    let (mut d, mut s) = (n - 1, 0);
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'outer: for &a in &BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

/// The two largest primes below 2^62.
pub fn rank_primes() -> [u64; 2] {
    static PRIMES: OnceLock<[u64; 2]> = OnceLock::new();
    *PRIMES.get_or_init(|| {
        let mut found = Vec::new();
        let mut c = (1u64 << 62) - 1;
        while found.len() < 2 {
            if is_prime(c) {
                found.push(c);
            }
            c -= 2;
        }
        [found[0], found[1]]
    })
}

/// Rank modulo the prime `p`, keeping the basis in reduced echelon form.
pub fn rank_mod(rows: &[Vec<i8>], p: u64) -> usize {
    let m = Montgomery::new(p);
    let Some(width) = rows.first().map(Vec::len) else {
        return 0;
    };
    let mut basis: Vec<Vec<u64>> = Vec::new();
    let mut pivots: Vec<usize> = Vec::new();
    for row in rows {
        if basis.len() == width {
            break;
        }
        let mut v: Vec<u64> = row.iter().map(|&e| m.lift(e as i64)).collect();
        for (b, &pc) in basis.iter().zip(&pivots) {
            let f = v[pc];
            if f != 0 {
                for (vj, &bj) in v.iter_mut().zip(b) {
                    if bj != 0 {
                        *vj = m.sub(*vj, m.mul(f, bj));
                    }
                }
            }
        }
        let Some(pc) = v.iter().position(|&e| e != 0) else {
            continue;
        };
        let inv = m.inverse(v[pc]);
        for e in v.iter_mut() {
            *e = m.mul(*e, inv);
        }
        for b in basis.iter_mut() {
            let f = b[pc];
            if f != 0 {
                for (bj, &vj) in b.iter_mut().zip(&v) {
                    if vj != 0 {
                        *bj = m.sub(*bj, m.mul(f, vj));
                    }
                }
            }
        }
        basis.push(v);
        pivots.push(pc);
    }
    basis.len()
}

/// Exact integer rank by fraction-free (Bareiss) elimination.
pub fn rank_bareiss(rows: &[Vec<i8>]) -> usize {
    let mut a: Vec<Vec<BigInt>> = rows
        .iter()
        .map(|r| r.iter().map(|&e| BigInt::from(e)).collect())
        .collect();
    let Some(width) = a.first().map(Vec::len) else {
        return 0;
    };
    let mut prev = BigInt::one();
    let mut r = 0;
    for c in 0..width {
        let Some(p) = (r..a.len()).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        for i in r + 1..a.len() {
            for j in c + 1..width {
                let v = (&a[r][c] * &a[i][j] - &a[i][c] * &a[r][j]) / &prev;
                a[i][j] = v;
            }
            a[i][c] = BigInt::zero();
        }
        prev = a[r][c].clone();
        r += 1;
        if r == a.len() {
            break;
        }
    }
    r
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RankCertificate {
    pub rank: usize,
    /// Whether the integer elimination confirmed the modular ranks.
    pub audited: bool,
}

/// Rank of a small-integer matrix modulo both primes, which must agree, and
/// by integer elimination when the matrix has at most [`AUDIT_ROWS`] rows.
pub fn certified_rank(rows: &[Vec<i8>]) -> Result<RankCertificate> {
    let [p, q] = rank_primes();
    let (r1, r2) = rayon::join(|| rank_mod(rows, p), || rank_mod(rows, q));
    if r1 != r2 {
        return Err(Error::Internal(format!("modular ranks disagree: {r1} vs {r2}")));
    }
    let audited = rows.len() <= AUDIT_ROWS;
    if audited {
        let exact = rank_bareiss(rows);
        if exact != r1 {
            return Err(Error::Internal(format!("integer rank {exact} differs from modular rank {r1}")));
        }
    }
    Ok(RankCertificate { rank: r1, audited })
}

/// Affine dimension of the selected vertices.
pub fn affine_dimension(vm: &VertexMatrix, rows: &[usize]) -> Result<RankCertificate> {
    if rows.is_empty() {
        return Err(Error::Argument("affine dimension of an empty selection".into()));
    }
    let cols = basis_columns(&vm.scenario);
    certified_rank(&vm.differences(rows, &cols))
}

/// Dimension of the local polytope. Small scenarios eliminate every vertex
/// difference; larger ones use the fact that the vertex matrix is a tensor
/// product of per-party vertex matrices, so its rank is the product of the
/// local ranks, and the constant row sum makes the affine dimension one less.
pub fn polytope_dimension(scenario: &Scenario) -> Result<usize> {
    let count = scenario.strategy_count();
    if count <= DIRECT_POLYTOPE_ROWS as u128 {
        let vm = local_vertices(scenario)?;
        let all: Vec<usize> = (0..vm.rows()).collect();
        return Ok(affine_dimension(&vm, &all)?.rank);
    }
    if count > VERTEX_LIMIT {
        return Err(Error::Capacity {
            what: "local vertices",
            required: count,
            limit: VERTEX_LIMIT,
        });
    }
    Ok(factored_polytope_dimension(scenario))
}

fn factored_polytope_dimension(scenario: &Scenario) -> usize {
    let product: usize = (0..scenario.n())
        .map(|i| {
            let strategies = local_strategies(scenario, i);
            let rows: Vec<Vec<i8>> = strategies
                .iter()
                .map(|m| {
                    (0..scenario.inputs(i))
                        .flat_map(|x| (0..scenario.outputs(i, x)).map(move |a| (m[x] == a) as i8))
                        .collect()
                })
                .collect();
            rank_bareiss(&rows)
        })
        .product();
    product - 1
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TightnessReport {
    pub polytope_dim: usize,
    pub face_dim: usize,
    pub is_facet: bool,
    pub saturating_count: usize,
    pub audited: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub saturating_vertices: Option<Vec<usize>>,
}

#[derive(Clone, Debug, Default)]
pub struct TightnessOptions {
    /// Lifts the default vertex cap up to [`VERTEX_LIMIT`].
    pub extended: bool,
    pub dump_vertices: bool,
}

pub fn is_tight(ineq: &BellInequality) -> Result<TightnessReport> {
    is_tight_with(ineq, &TightnessOptions::default())
}

pub fn is_tight_with(ineq: &BellInequality, opts: &TightnessOptions) -> Result<TightnessReport> {
    let count = ineq.scenario.strategy_count();
    let limit = if opts.extended { VERTEX_LIMIT } else { DEFAULT_TIGHTNESS_VERTICES };
    if count > limit {
        return Err(Error::Capacity {
            what: "tightness vertices",
            required: count,
            limit,
        });
    }
    let beta_c = match &ineq.classical_bound {
        Some(b) => b.clone(),
        None => classical_bound(ineq)?.value,
    };
    let vm = local_vertices(&ineq.scenario)?;
    let saturating: Vec<usize> = (0..vm.rows())
        .filter(|&k| vm.strategies[k].value(ineq) == beta_c)
        .collect();
    if saturating.is_empty() {
        return Err(Error::Format("no deterministic strategy attains the stated classical bound".into()));
    }
    if vm.strategies.iter().any(|s| s.value(ineq) > beta_c) {
        return Err(Error::Format("a deterministic strategy exceeds the stated classical bound".into()));
    }
    let face = affine_dimension(&vm, &saturating)?;
    let polytope_dim = polytope_dimension(&ineq.scenario)?;
    Ok(TightnessReport {
        polytope_dim,
        face_dim: face.rank,
        is_facet: face.rank + 1 == polytope_dim,
        saturating_count: saturating.len(),
        audited: face.audited,
        saturating_vertices: opts.dump_vertices.then_some(saturating),
    })
}
