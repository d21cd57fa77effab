//! Bell scenarios and positive-weight Bell inequalities, the forward map from
//! product-vector sets, the reverse map back to vectors, the GYNI-type
//! family, and canonical forms under relabeling.

use std::collections::HashSet;
use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};
use crate::linalg::Ket;
use crate::product_set::{MeasurementPartition, ProductVectorSet};
use crate::ratio::{self, Rational};
use crate::tol;

/// Inputs per party and outputs per (party, input).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawScenario")]
pub struct Scenario {
    inputs: Vec<usize>,
    outputs: Vec<Vec<usize>>,
}

#[derive(Deserialize)]
struct RawScenario {
    inputs: Vec<usize>,
    outputs: Vec<Vec<usize>>,
}

impl TryFrom<RawScenario> for Scenario {
    type Error = Error;
    fn try_from(r: RawScenario) -> Result<Self> {
        Scenario::new(r.inputs, r.outputs)
    }
}

impl Scenario {
    pub fn new(inputs: Vec<usize>, outputs: Vec<Vec<usize>>) -> Result<Self> {
        if inputs.is_empty() {
            return arg("scenario needs at least one party");
        }
        if inputs.len() != outputs.len() {
            return arg("inputs and outputs disagree on the party count");
        }
        for (i, (&m, r)) in inputs.iter().zip(&outputs).enumerate() {
            if m == 0 || r.len() != m || r.contains(&0) {
                return arg(format!("party {i}: counts must be positive and outputs must list one entry per input"));
            }
        }
        Ok(Scenario { inputs, outputs })
    }

    /// Every party has `inputs` settings with `outputs` outcomes each.
    pub fn uniform(n: usize, inputs: usize, outputs: usize) -> Result<Self> {
        Scenario::new(vec![inputs; n], vec![vec![outputs; inputs]; n])
    }

    pub fn n(&self) -> usize {
        self.inputs.len()
    }

    pub fn inputs(&self, party: usize) -> usize {
        self.inputs[party]
    }

    pub fn outputs(&self, party: usize, input: usize) -> usize {
        self.outputs[party][input]
    }

    pub fn input_counts(&self) -> &[usize] {
        &self.inputs
    }

    pub fn output_counts(&self) -> &[Vec<usize>] {
        &self.outputs
    }

    /// Largest outcome count at `party`, the natural local dimension.
    pub fn local_dim(&self, party: usize) -> usize {
        *self.outputs[party].iter().max().expect("inputs >= 1")
    }

    pub fn local_dims(&self) -> Vec<usize> {
        (0..self.n()).map(|i| self.local_dim(i)).collect()
    }

    /// All input vectors in lexicographic order.
    pub fn input_vectors(&self) -> Vec<Vec<usize>> {
        mixed_radix(&self.inputs)
    }

    /// All output vectors for input vector `x`, lexicographic.
    pub fn output_vectors(&self, x: &[usize]) -> Vec<Vec<usize>> {
        let radices: Vec<usize> = x.iter().enumerate().map(|(i, &xi)| self.outputs[i][xi]).collect();
        mixed_radix(&radices)
    }

    /// Number of deterministic local strategies, `prod_i prod_x r_i^x`.
    pub fn strategy_count(&self) -> u128 {
        self.outputs
            .iter()
            .flat_map(|r| r.iter())
            .fold(1u128, |acc, &r| acc.saturating_mul(r as u128))
    }

    /// Number of `p(a|x)` entries.
    pub fn table_size(&self) -> u128 {
        fn rec(s: &Scenario, party: usize) -> u128 {
            if party == s.n() {
                return 1;
            }
            let rest = rec(s, party + 1);
            s.outputs[party].iter().map(|&r| r as u128 * rest).sum()
        }
        rec(self, 0)
    }
}

pub(crate) fn mixed_radix(radices: &[usize]) -> Vec<Vec<usize>> {
    let total: usize = radices.iter().product();
    let mut out = Vec::with_capacity(total);
    let mut cur = vec![0; radices.len()];
    for _ in 0..total {
        out.push(cur.clone());
        for i in (0..radices.len()).rev() {
            cur[i] += 1;
            if cur[i] < radices[i] {
                break;
            }
            cur[i] = 0;
        }
    }
    out
}

/// One weighted probability `q * p(a|x)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BellTerm {
    pub x: Vec<usize>,
    pub a: Vec<usize>,
    #[serde(with = "ratio")]
    pub q: Rational,
}

impl BellTerm {
    pub fn new(x: Vec<usize>, a: Vec<usize>, q: Rational) -> Self {
        BellTerm { x, a, q }
    }

    pub fn unit(x: Vec<usize>, a: Vec<usize>) -> Self {
        BellTerm::new(x, a, Rational::one())
    }
}

/// `sum_j q_j p(a_j|x_j) <= classical_bound`, zero weight outside the listed terms.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawInequality")]
pub struct BellInequality {
    pub scenario: Scenario,
    pub terms: Vec<BellTerm>,
    #[serde(with = "ratio::option", skip_serializing_if = "Option::is_none", default)]
    pub classical_bound: Option<Rational>,
}

#[derive(Deserialize)]
struct RawInequality {
    scenario: Scenario,
    terms: Vec<BellTerm>,
    #[serde(with = "ratio::option", default)]
    classical_bound: Option<Rational>,
}

impl TryFrom<RawInequality> for BellInequality {
    type Error = Error;
    fn try_from(r: RawInequality) -> Result<Self> {
        let mut ineq = BellInequality::new(r.scenario, r.terms)?;
        ineq.classical_bound = r.classical_bound;
        Ok(ineq)
    }
}

impl BellInequality {
    pub fn new(scenario: Scenario, terms: Vec<BellTerm>) -> Result<Self> {
        let mut seen = HashSet::new();
        for (j, t) in terms.iter().enumerate() {
            if t.x.len() != scenario.n() || t.a.len() != scenario.n() {
                return arg(format!("term {j}: wrong vector length"));
            }
            for i in 0..scenario.n() {
                if t.x[i] >= scenario.inputs(i) || t.a[i] >= scenario.outputs(i, t.x[i]) {
                    return arg(format!("term {j}: label out of range at party {i}"));
                }
            }
            if t.q <= Rational::zero() {
                return arg(format!("term {j}: weight must be positive"));
            }
            if !seen.insert((t.x.clone(), t.a.clone())) {
                return arg(format!("term {j}: duplicate (x, a)"));
            }
        }
        Ok(BellInequality {
            scenario,
            terms,
            classical_bound: None,
        })
    }

    pub fn with_classical_bound(mut self, bound: Rational) -> Self {
        self.classical_bound = Some(bound);
        self
    }

    pub fn n(&self) -> usize {
        self.scenario.n()
    }

    pub fn max_weight(&self) -> Option<Rational> {
        self.terms.iter().map(|t| t.q.clone()).max()
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn fmt_labels(v: &[usize]) -> String {
    if v.iter().all(|&k| k < 10) {
        v.iter().map(|k| k.to_string()).collect()
    } else {
        v.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(",")
    }
}

impl fmt::Display for BellInequality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (j, t) in self.terms.iter().enumerate() {
            if j > 0 {
                f.write_str(" + ")?;
            }
            if !t.q.is_one() {
                write!(f, "{} ", t.q)?;
            }
            write!(f, "p({}|{})", fmt_labels(&t.a), fmt_labels(&t.x))?;
        }
        match &self.classical_bound {
            Some(b) => write!(f, " <= {b}"),
            None => Ok(()),
        }
    }
}

/// One term per member: the member's measurement at each party is the index
/// of the subset holding its local ray, the output its position there.
pub fn inequality_from_set(set: &ProductVectorSet, partition: &MeasurementPartition, weights: &[Rational]) -> Result<BellInequality> {
    if weights.len() != set.len() {
        return arg(format!("{} weights for {} members", weights.len(), set.len()));
    }
    if partition.parties.len() != set.n() || partition.assignment.len() != set.len() {
        return arg("partition does not match the set's shape");
    }
    for (j, row) in partition.assignment.iter().enumerate() {
        for (i, &(x, a)) in row.iter().enumerate() {
            let p = &partition.parties[i];
            let ray = p.subsets.get(x).and_then(|s| s.get(a)).map(|&r| &p.rays[r]);
            if !ray.is_some_and(|r| r.same_ray(set.local(j, i))) {
                return arg(format!("partition does not describe member {j} at party {i}"));
            }
        }
    }
    let inputs = partition.parties.iter().map(|p| p.subsets.len()).collect();
    let outputs = partition
        .parties
        .iter()
        .map(|p| p.subsets.iter().map(Vec::len).collect())
        .collect();
    let scenario = Scenario::new(inputs, outputs)?;
    let terms = partition
        .assignment
        .iter()
        .zip(weights)
        .map(|(row, q)| BellTerm::new(row.iter().map(|p| p.0).collect(), row.iter().map(|p| p.1).collect(), q.clone()))
        .collect();
    BellInequality::new(scenario, terms)
}

/// Flip sets of the GYNI-type family, 1-based, ordered by `(seed, I)` with
/// `I` compared as a sorted list. Odd `n`: seed 0 only, even-size `I` in
/// `{1..n}`. Even `n`: seeds 0 and 1, even-size `I` in `{2..n}`.
pub(crate) fn gyni_flip_sets(n: usize) -> Vec<(u8, Vec<usize>)> {
    let (lo, seeds): (usize, &[u8]) = if n % 2 == 1 { (1, &[0]) } else { (2, &[0, 1]) };
    let pool: Vec<usize> = (lo..=n).collect();
    let mut subsets: Vec<Vec<usize>> = (0u64..1 << pool.len())
        .map(|mask| pool.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &p)| p).collect::<Vec<_>>())
        .filter(|s| s.len() % 2 == 0)
        .collect();
    subsets.sort();
    seeds
        .iter()
        .flat_map(|&seed| subsets.iter().map(move |s| (seed, s.clone())))
        .collect()
}

/// Position `i - 1` with `1 - 1` wrapping to `n`, all 1-based.
pub(crate) fn predecessor(i: usize, n: usize) -> usize {
    if i == 1 {
        n
    } else {
        i - 1
    }
}

/// The GYNI-type inequality on `n >= 3` parties with two inputs and two
/// outputs each. `D_I` flips inputs at the positions in `I` and outputs at
/// their predecessors.
pub fn gyni_inequality(n: usize) -> Result<BellInequality> {
    if n < 3 {
        return arg(format!("GYNI family needs n >= 3, got {n}"));
    }
    let terms = gyni_flip_sets(n)
        .into_iter()
        .map(|(seed, flips)| {
            let mut x = vec![0; n];
            let mut a = vec![0; n];
            if seed == 1 {
                x[0] = 1;
                a[n - 1] = 1;
            }
            for &i in &flips {
                x[i - 1] ^= 1;
                a[predecessor(i, n) - 1] ^= 1;
            }
            BellTerm::unit(x, a)
        })
        .collect();
    Ok(BellInequality::new(Scenario::uniform(n, 2, 2)?, terms)?.with_classical_bound(Rational::one()))
}

/// Reverse map: member `j` carries `dictionaries[i][x_i][a_i]` at party `i`.
/// Local dimension `d_i` is the largest outcome count at party `i`.
pub fn vectors_from_inequality(ineq: &BellInequality, dictionaries: &[Vec<Vec<Ket>>]) -> Result<ProductVectorSet> {
    let sc = &ineq.scenario;
    if dictionaries.len() != sc.n() {
        return arg("one dictionary per party required");
    }
    let dims = sc.local_dims();
    for (i, dict) in dictionaries.iter().enumerate() {
        if dict.len() != sc.inputs(i) {
            return arg(format!("party {i}: dictionary has {} inputs, scenario {}", dict.len(), sc.inputs(i)));
        }
        for (x, kets) in dict.iter().enumerate() {
            if kets.len() != sc.outputs(i, x) {
                return arg(format!("party {i} input {x}: {} kets for {} outputs", kets.len(), sc.outputs(i, x)));
            }
            for (a, k) in kets.iter().enumerate() {
                if k.dim() != dims[i] || !k.is_normalized() {
                    return arg(format!("party {i} input {x} output {a}: expected a unit ket of dim {}", dims[i]));
                }
                if kets[..a].iter().any(|o| o.overlap(k) > tol::ORTHOGONAL) {
                    return arg(format!("party {i} input {x}: kets are not orthogonal"));
                }
            }
        }
    }
    let members = ineq
        .terms
        .iter()
        .map(|t| (0..sc.n()).map(|i| dictionaries[i][t.x[i]][t.a[i]].clone()).collect())
        .collect();
    ProductVectorSet::new(dims, members)
}

/// Default node budget for [`relabel_canonical`].
pub const CANONICAL_NODE_BUDGET: u64 = 5_000_000;

/// Per-party relabeling: `inputs[old] = new` and `outputs[old_x][old_a] = new_a`.
#[derive(Clone, Debug)]
struct LocalRelabel {
    inputs: Vec<usize>,
    outputs: Vec<Vec<usize>>,
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

fn local_relabelings(outputs: &[usize], cap: u64) -> Result<Vec<LocalRelabel>> {
    let m = outputs.len();
    let count = (1..=m as u64).product::<u64>() * outputs.iter().map(|&r| (1..=r as u64).product::<u64>()).product::<u64>();
    if count > cap {
        return Err(Error::Capacity {
            what: "local relabelings",
            required: count as u128,
            limit: cap as u128,
        });
    }
    let mut out = Vec::with_capacity(count as usize);
    let per_input: Vec<Vec<Vec<usize>>> = outputs.iter().map(|&r| permutations(r)).collect();
    for ip in permutations(m) {
        let mut partial: Vec<Vec<Vec<usize>>> = vec![Vec::new()];
        for perms in &per_input {
            partial = partial
                .into_iter()
                .flat_map(|acc| {
                    perms.iter().map(move |p| {
                        let mut acc = acc.clone();
                        acc.push(p.clone());
                        acc
                    })
                })
                .collect();
        }
        for outs in partial {
            out.push(LocalRelabel {
                inputs: ip.clone(),
                outputs: outs,
            });
        }
    }
    Ok(out)
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
struct LevelKey {
    signature: Vec<usize>,
    prefixes: Vec<Vec<usize>>,
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct SearchState {
    parties: Vec<usize>,
    choices: Vec<usize>,
    /// Per term, interleaved relabeled `(x, a)` for the chosen slots.
    prefixes: Vec<Vec<usize>>,
}

/// Canonical representative under party permutations, per-party input
/// relabeling, and per-input output relabeling. Two inequalities are
/// equivalent exactly when their canonical forms are equal.
///
/// The key compared is, slot by slot, the relabeled outcome-count signature
/// of the party placed there followed by the sorted list of term prefixes
/// over the slots filled so far; the minimum is found level by level keeping
/// every tie, which makes it exact.
pub fn relabel_canonical(ineq: &BellInequality) -> Result<BellInequality> {
    relabel_canonical_with_budget(ineq, CANONICAL_NODE_BUDGET)
}

pub fn relabel_canonical_with_budget(ineq: &BellInequality, budget: u64) -> Result<BellInequality> {
    let n = ineq.n();
    let sc = &ineq.scenario;
    let relabels: Vec<Vec<LocalRelabel>> = (0..n)
        .map(|i| local_relabelings(&sc.output_counts()[i], budget))
        .collect::<Result<_>>()?;
    let mut states = vec![SearchState {
        parties: Vec::new(),
        choices: Vec::new(),
        prefixes: vec![Vec::new(); ineq.terms.len()],
    }];
    let mut nodes = 0u64;
    for _level in 0..n {
        let mut best: Option<LevelKey> = None;
        let mut next: Vec<SearchState> = Vec::new();
        let mut seen: HashSet<(Vec<usize>, Vec<Vec<usize>>)> = HashSet::new();
        for st in &states {
            for p in (0..n).filter(|p| !st.parties.contains(p)) {
                for (ci, rl) in relabels[p].iter().enumerate() {
                    nodes += 1;
                    if nodes > budget {
                        return Err(Error::Capacity {
                            what: "canonical-form search nodes",
                            required: nodes as u128,
                            limit: budget as u128,
                        });
                    }
                    let mut signature = vec![0; sc.inputs(p)];
                    for (x, &nx) in rl.inputs.iter().enumerate() {
                        signature[nx] = sc.outputs(p, x);
                    }
                    let prefixes: Vec<Vec<usize>> = ineq
                        .terms
                        .iter()
                        .zip(&st.prefixes)
                        .map(|(t, pre)| {
                            let mut v = pre.clone();
                            v.push(rl.inputs[t.x[p]]);
                            v.push(rl.outputs[t.x[p]][t.a[p]]);
                            v
                        })
                        .collect();
                    let mut sorted = prefixes.clone();
                    sorted.sort();
                    let key = LevelKey { signature, prefixes: sorted };
                    match best.as_ref().map(|b| key.cmp(b)) {
                        Some(std::cmp::Ordering::Greater) => continue,
                        Some(std::cmp::Ordering::Less) | None => {
                            best = Some(key);
                            next.clear();
                            seen.clear();
                        }
                        Some(std::cmp::Ordering::Equal) => {}
                    }
                    let mut parties = st.parties.clone();
                    parties.push(p);
                    let mut used = parties.clone();
                    used.sort_unstable();
                    if !seen.insert((used, prefixes.clone())) {
                        continue;
                    }
                    let mut choices = st.choices.clone();
                    choices.push(ci);
                    next.push(SearchState { parties, choices, prefixes });
                }
            }
        }
        states = next;
    }
    // All surviving states produce the same relabeled term multiset; take
    // the one with the smallest weight list for a total order on weights.
    let mut best: Option<BellInequality> = None;
    for st in &states {
        let cand = apply_relabeling(ineq, &st.parties, &st.choices, &relabels)?;
        let better = match &best {
            None => true,
            Some(b) => term_key(&cand) < term_key(b),
        };
        if better {
            best = Some(cand);
        }
    }
    best.ok_or_else(|| Error::Internal("canonical search produced no state".into()))
}

fn term_key(ineq: &BellInequality) -> Vec<(Vec<usize>, Vec<usize>, Rational)> {
    ineq.terms.iter().map(|t| (t.x.clone(), t.a.clone(), t.q.clone())).collect()
}

fn apply_relabeling(ineq: &BellInequality, parties: &[usize], choices: &[usize], relabels: &[Vec<LocalRelabel>]) -> Result<BellInequality> {
    let sc = &ineq.scenario;
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    for (&p, &c) in parties.iter().zip(choices) {
        let rl = &relabels[p][c];
        let mut sig = vec![0; sc.inputs(p)];
        for (x, &nx) in rl.inputs.iter().enumerate() {
            sig[nx] = sc.outputs(p, x);
        }
        inputs.push(sc.inputs(p));
        outputs.push(sig);
    }
    let mut terms: Vec<BellTerm> = ineq
        .terms
        .iter()
        .map(|t| {
            let x = parties.iter().zip(choices).map(|(&p, &c)| relabels[p][c].inputs[t.x[p]]).collect();
            let a = parties
                .iter()
                .zip(choices)
                .map(|(&p, &c)| relabels[p][c].outputs[t.x[p]][t.a[p]])
                .collect();
            BellTerm::new(x, a, t.q.clone())
        })
        .collect();
    terms.sort_by(|s, t| (&s.x, &s.a, &s.q).cmp(&(&t.x, &t.a, &t.q)));
    let mut out = BellInequality::new(Scenario::new(inputs, outputs)?, terms)?;
    out.classical_bound = ineq.classical_bound.clone();
    Ok(out)
}

/// Whether two inequalities agree up to relabeling (classical bounds ignored).
pub fn equivalent(a: &BellInequality, b: &BellInequality) -> Result<bool> {
    if a.n() != b.n() || a.terms.len() != b.terms.len() {
        return Ok(false);
    }
    let (mut ca, mut cb) = (relabel_canonical(a)?, relabel_canonical(b)?);
    ca.classical_bound = None;
    cb.classical_bound = None;
    Ok(ca == cb)
}

/// Parses the `p(a|x)` notation used in documentation, e.g. `"000|000"`.
pub fn term_from_str(s: &str) -> Result<BellTerm> {
    let (a, x) = s.split_once('|').ok_or_else(|| Error::Format(format!("expected a|x, got {s:?}")))?;
    let digits = |t: &str| -> Result<Vec<usize>> {
        t.chars()
            .map(|c| c.to_digit(10).map(|d| d as usize).ok_or_else(|| Error::Format(format!("bad label in {s:?}"))))
            .collect()
    };
    Ok(BellTerm::unit(digits(x)?, digits(a)?))
}

/// The inequality `sum p(a|x) <= 1` over qubit-style two-input, two-output
/// parties, from terms written as `"a|x"`.
pub fn unit_inequality(n: usize, terms: &[&str]) -> Result<BellInequality> {
    let terms = terms.iter().map(|t| term_from_str(t)).collect::<Result<Vec<_>>>()?;
    BellInequality::new(Scenario::uniform(n, 2, 2)?, terms)
}

/// CHSH in probability form: unit weight on every `p(ab|xy)` with
/// `a xor b = x and y`.
pub fn chsh_inequality() -> BellInequality {
    let mut terms = Vec::new();
    for x in 0..2 {
        for y in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    if (a ^ b) == (x & y) {
                        terms.push(BellTerm::unit(vec![x, y], vec![a, b]));
                    }
                }
            }
        }
    }
    BellInequality::new(Scenario::uniform(2, 2, 2).expect("valid"), terms).expect("valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::product_set::check_property_p;
    use crate::ratio::rat;

    fn q(v: [f64; 2]) -> Ket {
        Ket::from_real(&v).unwrap()
    }

    fn shifts() -> ProductVectorSet {
        let (z, o, e, ep) = (q([1., 0.]), q([0., 1.]), q([1., 1.]), q([1., -1.]));
        ProductVectorSet::new(
            vec![2, 2, 2],
            vec![
                vec![z.clone(), z.clone(), z.clone()],
                vec![o.clone(), e.clone(), e.clone()],
                vec![e.clone(), o.clone(), ep.clone()],
                vec![ep.clone(), ep, o],
            ],
        )
        .unwrap()
    }

    fn listed_shifts_inequality() -> BellInequality {
        unit_inequality(3, &["000|000", "100|011", "011|101", "111|110"]).unwrap()
    }

    #[test]
    fn forward_map_on_shifts_reproduces_listed_terms() {
        let s = shifts();
        let part = check_property_p(&s).partition().unwrap().clone();
        let ineq = inequality_from_set(&s, &part, &vec![Rational::one(); 4]).unwrap();
        assert_eq!(ineq, listed_shifts_inequality());
    }

    #[test]
    fn forward_map_single_member() {
        let z = Ket::basis(2, 0);
        let s = ProductVectorSet::new(vec![2, 2], vec![vec![z.clone(), z]]).unwrap();
        let part = check_property_p(&s).partition().unwrap().clone();
        let ineq = inequality_from_set(&s, &part, &[rat(7, 10)]).unwrap();
        assert_eq!(ineq.terms, vec![BellTerm::new(vec![0, 0], vec![0, 0], rat(7, 10))]);
        assert_eq!(ineq.scenario, Scenario::uniform(2, 1, 1).unwrap());
    }

    #[test]
    fn forward_map_rejects_mismatched_partition() {
        let s = shifts();
        let part = check_property_p(&s).partition().unwrap().clone();
        assert!(inequality_from_set(&s, &part, &[Rational::one()]).is_err());
        let other = s.permuted(&[1, 0, 2, 3]).unwrap();
        assert!(inequality_from_set(&other, &part, &vec![Rational::one(); 4]).is_err());
    }

    #[test]
    fn gyni_three_terms() {
        let g = gyni_inequality(3).unwrap();
        assert_eq!(g.terms.len(), 4);
        assert_eq!(g.terms[0], term_from_str("000|000").unwrap());
        // I = {1,3}: inputs flipped at 1,3 and outputs at 3,2.
        assert!(g.terms.contains(&term_from_str("011|101").unwrap()));
        assert_eq!(g.classical_bound, Some(Rational::one()));
        assert!(gyni_inequality(2).is_err());
    }

    #[test]
    fn gyni_term_counts_and_distinct_inputs() {
        for n in 3..=8 {
            let g = gyni_inequality(n).unwrap();
            assert_eq!(g.terms.len(), 1 << (n - 1), "n = {n}");
            let xs: HashSet<&Vec<usize>> = g.terms.iter().map(|t| &t.x).collect();
            assert_eq!(xs.len(), g.terms.len(), "inputs repeat for n = {n}");
        }
    }

    #[test]
    fn gyni_four_has_literal_second_seed() {
        let g = gyni_inequality(4).unwrap();
        assert!(g.terms.contains(&term_from_str("0001|1000").unwrap()));
    }

    #[test]
    fn canonical_form_is_idempotent_and_party_symmetric() {
        let g = gyni_inequality(3).unwrap();
        let c = relabel_canonical(&g).unwrap();
        assert_eq!(relabel_canonical(&c).unwrap(), c);
        let swapped_terms = g
            .terms
            .iter()
            .map(|t| BellTerm::new(vec![t.x[1], t.x[0], t.x[2]], vec![t.a[1], t.a[0], t.a[2]], t.q.clone()))
            .collect();
        let swapped = BellInequality::new(g.scenario.clone(), swapped_terms).unwrap();
        assert_eq!(relabel_canonical(&swapped).unwrap().terms, c.terms);
    }

    #[test]
    fn gyni_three_matches_listed_shifts_inequality() {
        let g = gyni_inequality(3).unwrap();
        assert_ne!(g.terms, listed_shifts_inequality().terms);
        assert!(equivalent(&g, &listed_shifts_inequality()).unwrap());
    }

    #[test]
    fn canonical_form_separates_inequivalent() {
        let a = unit_inequality(2, &["00|00", "11|11"]).unwrap();
        let b = unit_inequality(2, &["00|00", "11|01"]).unwrap();
        assert!(!equivalent(&a, &b).unwrap());
        let c = unit_inequality(2, &["10|10", "01|01"]).unwrap();
        assert!(equivalent(&a, &c).unwrap());
        let weighted = BellInequality::new(a.scenario.clone(), vec![BellTerm::new(vec![0, 0], vec![0, 0], rat(1, 2)), BellTerm::unit(vec![1, 1], vec![1, 1])]).unwrap();
        assert!(!equivalent(&a, &weighted).unwrap());
    }

    #[test]
    fn canonical_budget_is_enforced() {
        let g = gyni_inequality(5).unwrap();
        assert!(matches!(relabel_canonical_with_budget(&g, 10), Err(Error::Capacity { .. })));
    }

    #[test]
    fn reverse_map_recovers_shifts() {
        let s = shifts();
        let part = check_property_p(&s).partition().unwrap().clone();
        let ineq = inequality_from_set(&s, &part, &vec![Rational::one(); 4]).unwrap();
        let back = vectors_from_inequality(&ineq, &part.dictionary()).unwrap();
        assert!(crate::product_set::same_up_to_order_and_phase(&back, &s));
        let again = inequality_from_set(&back, &check_property_p(&back).partition().unwrap().clone(), &vec![Rational::one(); 4]).unwrap();
        assert_eq!(relabel_canonical(&again).unwrap(), relabel_canonical(&ineq).unwrap());
    }

    #[test]
    fn reverse_map_single_term() {
        let ineq = unit_inequality(2, &["00|00"]).unwrap();
        let comp = vec![vec![Ket::basis(2, 0), Ket::basis(2, 1)]; 2];
        let set = vectors_from_inequality(&ineq, &[comp.clone(), comp]).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.member_ket(0), Ket::basis(4, 0));
    }

    #[test]
    fn reverse_map_rejects_bad_dictionaries() {
        let ineq = unit_inequality(2, &["00|00"]).unwrap();
        let comp = vec![vec![Ket::basis(2, 0), Ket::basis(2, 1)]; 2];
        assert!(vectors_from_inequality(&ineq, std::slice::from_ref(&comp)).is_err());
        let bad = vec![vec![Ket::basis(2, 0), Ket::basis(2, 0)], comp[1].clone()];
        assert!(vectors_from_inequality(&ineq, &[comp, bad]).is_err());
    }

    #[test]
    fn json_format() {
        let g = gyni_inequality(3).unwrap();
        let text = serde_json::to_string(&g).unwrap();
        assert!(text.starts_with(r#"{"scenario":{"inputs":[2,2,2],"outputs":[[2,2],[2,2],[2,2]]},"terms":[{"x":[0,0,0],"a":[0,0,0],"q":"1/1"}"#));
        assert!(text.ends_with(r#""classical_bound":"1/1"}"#));
        assert_eq!(BellInequality::from_json(&text).unwrap(), g);
        assert!(BellInequality::from_json(r#"{"scenario":{"inputs":[2],"outputs":[[2,2]]},"terms":[{"x":[2],"a":[0],"q":"1/1"}]}"#).is_err());
    }

    #[test]
    fn display() {
        assert_eq!(listed_shifts_inequality().with_classical_bound(Rational::one()).to_string(), "p(000|000) + p(100|011) + p(011|101) + p(111|110) <= 1");
    }
}
