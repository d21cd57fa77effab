//! Unextendibility of product-vector sets: a qubit-specialized search over
//! orthocomplement rays, a general assignment search with local rank checks,
//! a numeric product-state minimization, and completions of extendible sets.

use serde::{Serialize, Serializer};

use crate::bounds::product_epsilon;
use crate::bell::mixed_radix;
use crate::error::{arg, Result};
use crate::families::product;
use crate::linalg::{orthonormalize_against, span_projector, Ket};
use crate::product_set::{distinct_local_rays, gram_orthogonality_check, ProductVectorSet, RayTable};
use crate::tol;

pub const GENERAL_NODE_CAP: u64 = 10_000_000;
pub const COMPLETION_BUDGET: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    QubitCombinatorial,
    PartitionSearch,
    Numeric,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Unextendible,
    Extendible,
    /// The set spans the whole space: trivially unextendible, not a UPB.
    SpanComplete,
    Undecided,
}

/// A product vector given by its local kets.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductWitness(pub Vec<Ket>);

impl Serialize for ProductWitness {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl ProductWitness {
    /// Largest `|<witness|member>|` over the set.
    pub fn max_overlap(&self, set: &ProductVectorSet) -> f64 {
        set.members()
            .iter()
            .map(|m| m.iter().zip(&self.0).map(|(a, b)| a.overlap(b)).product::<f64>())
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExtendibilityReport {
    pub unextendible: bool,
    pub method: Method,
    pub witness: Option<ProductWitness>,
    pub status: Status,
    pub span_complete: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nodes: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub numeric_value: Option<f64>,
}

impl ExtendibilityReport {
    fn new(method: Method, status: Status, witness: Option<ProductWitness>) -> Self {
        ExtendibilityReport {
            unextendible: matches!(status, Status::Unextendible | Status::SpanComplete),
            method,
            witness,
            status,
            span_complete: status == Status::SpanComplete,
            nodes: None,
            numeric_value: None,
        }
    }

    /// Unextendible and spanning a proper subspace.
    pub fn is_upb(&self) -> bool {
        self.status == Status::Unextendible
    }
}

fn verified(set: &ProductVectorSet, kets: Vec<Ket>) -> Option<ProductWitness> {
    let w = ProductWitness(kets);
    (w.max_overlap(set) <= tol::ORTHOGONAL).then_some(w)
}

fn is_span_complete(set: &ProductVectorSet) -> bool {
    set.span_rank() == set.total_dim()
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Bits(Vec<u64>);

impl Bits {
    fn empty(len: usize) -> Self {
        Bits(vec![0; len.div_ceil(64).max(1)])
    }

    fn set(&mut self, k: usize) {
        self.0[k / 64] |= 1 << (k % 64);
    }

    fn or(&self, other: &Bits) -> Bits {
        Bits(self.0.iter().zip(&other.0).map(|(a, b)| a | b).collect())
    }

    fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }
}

struct QubitSearch<'a> {
    tables: &'a [RayTable],
    /// `kills[party][option]`; the last option at each party kills nothing.
    kills: Vec<Vec<Bits>>,
    target: usize,
    choice: Vec<usize>,
}

impl QubitSearch<'_> {
    fn descend(&mut self, party: usize, covered: &Bits) -> bool {
        if covered.count() == self.target {
            for c in self.choice[party..].iter_mut() {
                *c = usize::MAX;
            }
            return true;
        }
        if party == self.tables.len() {
            return false;
        }
        for opt in 0..self.kills[party].len() {
            self.choice[party] = opt;
            let next = covered.or(&self.kills[party][opt]);
            if self.descend(party + 1, &next) {
                return true;
            }
        }
        false
    }
}

/// Qubit decision procedure. A product vector orthogonal to the set picks,
/// at every party, either the orthocomplement of one distinct local ray
/// (killing the members with that ray) or a ket killing nothing; the set is
/// extendible iff some choice kills every member.
pub fn unextendible_qubit(set: &ProductVectorSet) -> Result<ExtendibilityReport> {
    if set.dims().iter().any(|&d| d != 2) {
        return arg("qubit search needs every local dimension to be 2; use unextendible_general");
    }
    if is_span_complete(set) {
        return Ok(ExtendibilityReport::new(Method::QubitCombinatorial, Status::SpanComplete, None));
    }
    let tables: Vec<RayTable> = (0..set.n())
        .map(|i| distinct_local_rays(set, i))
        .collect::<Result<_>>()?;
    let kills: Vec<Vec<Bits>> = tables
        .iter()
        .map(|t| {
            let mut opts: Vec<Bits> = (0..t.rays.len())
                .map(|r| {
                    let mut b = Bits::empty(set.len());
                    for (j, &m) in t.member_map.iter().enumerate() {
                        if m == r {
                            b.set(j);
                        }
                    }
                    b
                })
                .collect();
            opts.push(Bits::empty(set.len()));
            opts
        })
        .collect();
    let mut search = QubitSearch {
        tables: &tables,
        kills,
        target: set.len(),
        choice: vec![usize::MAX; set.n()],
    };
    if !search.descend(0, &Bits::empty(set.len())) {
        return Ok(ExtendibilityReport::new(Method::QubitCombinatorial, Status::Unextendible, None));
    }
    let kets: Vec<Ket> = search
        .choice
        .iter()
        .zip(&tables)
        .map(|(&c, t)| match t.rays.get(c) {
            Some(r) => r.qubit_perp(),
            None => Ok(free_ket(&t.rays, 2)),
        })
        .collect::<Result<_>>()?;
    let witness = verified(set, kets);
    let status = if witness.is_some() { Status::Extendible } else { Status::Undecided };
    Ok(ExtendibilityReport::new(Method::QubitCombinatorial, status, witness))
}

/// A basis ket not orthogonal to any of `rays` where possible; any unit ket
/// is acceptable for a party that kills nothing.
fn free_ket(rays: &[Ket], dim: usize) -> Ket {
    (0..dim)
        .map(|k| Ket::basis(dim, k))
        .find(|b| rays.iter().all(|r| !r.is_orthogonal(b)))
        .unwrap_or_else(|| Ket::basis(dim, 0))
}

struct GeneralSearch<'a> {
    set: &'a ProductVectorSet,
    /// Orthonormal basis of the rays assigned to each party so far.
    spans: Vec<Vec<Ket>>,
    found: Option<Vec<Vec<Ket>>>,
    nodes: u64,
    cap: u64,
}

enum Outcome {
    Found,
    Exhausted,
    Capped,
}

impl GeneralSearch<'_> {
    fn descend(&mut self, member: usize) -> Outcome {
        self.nodes += 1;
        if self.nodes > self.cap {
            return Outcome::Capped;
        }
        if member == self.set.len() {
            self.found = Some(self.spans.clone());
            return Outcome::Found;
        }
        let dims = self.set.dims();
        // A ray already inside an assigned span costs nothing there.
        for i in 0..dims.len() {
            if !self.spans[i].is_empty() && orthonormalize_against(self.set.local(member, i), &self.spans[i]).is_none() {
                return self.descend(member + 1);
            }
        }
        for i in (0..dims.len()).rev() {
            if self.spans[i].len() + 1 >= dims[i] {
                continue;
            }
            if let Some(u) = orthonormalize_against(self.set.local(member, i), &self.spans[i]) {
                self.spans[i].push(u);
                let r = self.descend(member + 1);
                self.spans[i].pop();
                if !matches!(r, Outcome::Exhausted) {
                    return r;
                }
            }
        }
        Outcome::Exhausted
    }
}

/// General decision procedure: assign each member a party at which the
/// witness will be orthogonal to it, keeping every party's assigned rays in
/// a proper subspace. Reports `Undecided` past `node_cap` search nodes.
pub fn unextendible_general_with_cap(set: &ProductVectorSet, node_cap: u64) -> Result<ExtendibilityReport> {
    if is_span_complete(set) {
        return Ok(ExtendibilityReport::new(Method::PartitionSearch, Status::SpanComplete, None));
    }
    let mut search = GeneralSearch {
        set,
        spans: vec![Vec::new(); set.n()],
        found: None,
        nodes: 0,
        cap: node_cap,
    };
    let mut report = match search.descend(0) {
        Outcome::Exhausted => ExtendibilityReport::new(Method::PartitionSearch, Status::Unextendible, None),
        Outcome::Capped => ExtendibilityReport::new(Method::PartitionSearch, Status::Undecided, None),
        Outcome::Found => {
            let spans = search.found.take().expect("set at the leaf");
            let kets = spans
                .iter()
                .zip(set.dims())
                .map(|(span, &d)| {
                    (0..d)
                        .find_map(|k| orthonormalize_against(&Ket::basis(d, k), span))
                        .expect("assigned span is proper")
                })
                .collect();
            let witness = verified(set, kets);
            let status = if witness.is_some() { Status::Extendible } else { Status::Undecided };
            ExtendibilityReport::new(Method::PartitionSearch, status, witness)
        }
    };
    report.nodes = Some(search.nodes);
    Ok(report)
}

pub fn unextendible_general(set: &ProductVectorSet) -> Result<ExtendibilityReport> {
    unextendible_general_with_cap(set, GENERAL_NODE_CAP)
}

pub const NUMERIC_THRESHOLD: f64 = tol::NUMERIC_EXTENDIBLE;

/// Heuristic minimum of `<prod|Pi_S|prod>` over product states; near zero
/// signals extendibility.
pub fn numeric_extendibility(set: &ProductVectorSet, restarts: usize, seed: u64) -> Result<f64> {
    Ok(numeric_report(set, restarts, seed)?.numeric_value.expect("set by numeric_report"))
}

pub fn numeric_report(set: &ProductVectorSet, restarts: usize, seed: u64) -> Result<ExtendibilityReport> {
    let pi = span_projector(&set.global_kets())?;
    let e = product_epsilon(&pi, set.dims(), restarts, seed)?;
    let mut report = if e.value <= NUMERIC_THRESHOLD {
        let w = verified(set, e.argmin.clone());
        ExtendibilityReport::new(Method::Numeric, Status::Extendible, w)
    } else if is_span_complete(set) {
        ExtendibilityReport::new(Method::Numeric, Status::SpanComplete, None)
    } else {
        ExtendibilityReport::new(Method::Numeric, Status::Unextendible, None)
    };
    report.numeric_value = Some(e.value);
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
pub struct CrossCheck {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qubit: Option<ExtendibilityReport>,
    pub partition: ExtendibilityReport,
    pub numeric: ExtendibilityReport,
    pub agree: bool,
}

/// Runs every applicable method; `agree` compares the extendible verdicts.
pub fn cross_check(set: &ProductVectorSet, restarts: usize, seed: u64) -> Result<CrossCheck> {
    let qubit = if set.dims().iter().all(|&d| d == 2) {
        Some(unextendible_qubit(set)?)
    } else {
        None
    };
    let partition = unextendible_general(set)?;
    let numeric = numeric_report(set, restarts, seed)?;
    let verdicts: Vec<bool> = qubit
        .iter()
        .chain([&partition, &numeric])
        .map(|r| r.unextendible)
        .collect();
    let decided = qubit.iter().chain([&partition]).all(|r| r.status != Status::Undecided);
    let agree = decided && verdicts.windows(2).all(|w| w[0] == w[1]);
    Ok(CrossCheck {
        qubit,
        partition,
        numeric,
        agree,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum Completion {
    /// Product vectors completing the set to an orthogonal basis.
    Found(Vec<Vec<Ket>>),
    /// No completion exists within the candidate vocabulary.
    NotFound,
    Undecided,
}

struct CompletionSearch<'a> {
    candidates: &'a [Vec<Ket>],
    /// `compatible[a][b]`: candidates `a` and `b` are orthogonal.
    compatible: Vec<Vec<bool>>,
    needed: usize,
    chosen: Vec<usize>,
    nodes: u64,
    budget: u64,
}

impl CompletionSearch<'_> {
    fn descend(&mut self, allowed: &[usize]) -> Option<bool> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return None;
        }
        if self.chosen.len() == self.needed {
            return Some(true);
        }
        if self.chosen.len() + allowed.len() < self.needed {
            return Some(false);
        }
        for (k, &c) in allowed.iter().enumerate() {
            let rest: Vec<usize> = allowed[k + 1..]
                .iter()
                .copied()
                .filter(|&d| self.compatible[c][d])
                .collect();
            self.chosen.push(c);
            match self.descend(&rest) {
                Some(true) => return Some(true),
                None => return None,
                Some(false) => {}
            }
            self.chosen.pop();
        }
        Some(false)
    }
}

/// Extends an orthogonal qubit set to an orthogonal product basis using
/// product vectors whose local kets are existing distinct rays or their
/// orthocomplements.
pub fn completability_search(set: &ProductVectorSet, budget: u64) -> Result<Completion> {
    if set.dims().iter().any(|&d| d != 2) {
        return arg("completion search is specialized to qubits");
    }
    if !gram_orthogonality_check(set).orthogonal {
        return arg("completion search needs an orthogonal set");
    }
    let vocab: Vec<Vec<Ket>> = (0..set.n())
        .map(|i| {
            let t = distinct_local_rays(set, i)?;
            let mut v: Vec<Ket> = Vec::new();
            for r in &t.rays {
                for k in [r.clone(), r.qubit_perp()?.canonical_phase()] {
                    if !v.iter().any(|u| u.same_ray(&k)) {
                        v.push(k);
                    }
                }
            }
            Ok(v)
        })
        .collect::<Result<_>>()?;
    let radices: Vec<usize> = vocab.iter().map(|v| v.len()).collect();
    let orthogonal = |a: &[Ket], b: &[Ket]| a.iter().zip(b).any(|(x, y)| x.is_orthogonal(y));
    let candidates: Vec<Vec<Ket>> = mixed_radix(&radices)
        .into_iter()
        .map(|idx| idx.iter().zip(&vocab).map(|(&k, v)| v[k].clone()).collect::<Vec<Ket>>())
        .filter(|c| set.members().iter().all(|m| orthogonal(m, c)))
        .collect();
    let needed = set.total_dim() - set.len();
    if needed == 0 {
        return Ok(Completion::Found(Vec::new()));
    }
    let compatible: Vec<Vec<bool>> = candidates
        .iter()
        .map(|a| candidates.iter().map(|b| orthogonal(a, b)).collect())
        .collect();
    let mut search = CompletionSearch {
        candidates: &candidates,
        compatible,
        needed,
        chosen: Vec::new(),
        nodes: 0,
        budget,
    };
    let all: Vec<usize> = (0..candidates.len()).collect();
    Ok(match search.descend(&all) {
        Some(true) => Completion::Found(search.chosen.iter().map(|&c| search.candidates[c].clone()).collect()),
        Some(false) => Completion::NotFound,
        None => Completion::Undecided,
    })
}

/// The set together with a completion, as one product-vector set.
pub fn completed_set(set: &ProductVectorSet, completion: &[Vec<Ket>]) -> Result<ProductVectorSet> {
    let mut members = set.members().to_vec();
    members.extend(completion.iter().cloned());
    ProductVectorSet::new(set.dims().to_vec(), members)
}

/// Global ket of a witness.
pub fn witness_ket(w: &ProductWitness) -> Ket {
    product(&w.0)
}
