//! Sets of product vectors, their local ray structure, and property (P).

use serde::{Deserialize, Serialize};

use crate::error::{arg, Result};
use crate::linalg::{span_basis, tensor_product, Ket};
use crate::tol;

/// Two-element orthonormal local subsets `S_0 = {s0[0], s0[1]}` and
/// `S_1 = {s1[0], s1[1]}` on a qubit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QubitFrame {
    pub s0: [Ket; 2],
    pub s1: [Ket; 2],
}

impl QubitFrame {
    pub fn ket(&self, label: LocalLabel) -> &Ket {
        let pair = if label.subset == 0 { &self.s0 } else { &self.s1 };
        &pair[label.position as usize]
    }
}

/// Which declared subset (0 or 1) and which position inside it a local ket is.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LocalLabel {
    pub subset: u8,
    pub position: u8,
}

impl LocalLabel {
    pub const fn new(subset: u8, position: u8) -> Self {
        LocalLabel { subset, position }
    }

    /// The other element of the same two-element subset.
    pub fn orthogonalized(self) -> Self {
        LocalLabel::new(self.subset, 1 - self.position)
    }
}

impl Serialize for LocalLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.subset, self.position].serialize(s)
    }
}

impl<'de> Deserialize<'de> for LocalLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [subset, position] = <[u8; 2]>::deserialize(d)?;
        if subset > 1 || position > 1 {
            return Err(serde::de::Error::custom("subset labels must be 0 or 1"));
        }
        Ok(LocalLabel::new(subset, position))
    }
}

/// Declared subset membership of every local ket, per party.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsetAnnotation {
    pub frames: Vec<QubitFrame>,
    /// `labels[member][party]`.
    pub labels: Vec<Vec<LocalLabel>>,
}

/// An n-partite set of product vectors.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProductVectorSet {
    dims: Vec<usize>,
    members: Vec<Vec<Ket>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    subsets: Option<SubsetAnnotation>,
}

#[derive(Deserialize)]
struct RawSet {
    dims: Vec<usize>,
    members: Vec<Vec<Ket>>,
    #[serde(default)]
    subsets: Option<SubsetAnnotation>,
}

impl<'de> Deserialize<'de> for ProductVectorSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawSet::deserialize(d)?;
        let set = ProductVectorSet::new(raw.dims, raw.members).map_err(serde::de::Error::custom)?;
        match raw.subsets {
            Some(a) => set.with_subsets(a).map_err(serde::de::Error::custom),
            None => Ok(set),
        }
    }
}

impl ProductVectorSet {
    /// Validates shapes and normalises local kets. Kets whose squared norm is
    /// off by more than 1e-6 are rejected rather than silently rescaled.
    pub fn new(dims: Vec<usize>, members: Vec<Vec<Ket>>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return arg("dims must be a nonempty list of positive integers");
        }
        let mut clean = Vec::with_capacity(members.len());
        for (j, m) in members.into_iter().enumerate() {
            if m.len() != dims.len() {
                return arg(format!("member {j} has {} factors, expected {}", m.len(), dims.len()));
            }
            let mut row = Vec::with_capacity(m.len());
            for (i, k) in m.into_iter().enumerate() {
                if k.dim() != dims[i] {
                    return arg(format!("member {j} party {i}: ket dim {} != {}", k.dim(), dims[i]));
                }
                if (k.norm_sqr() - 1.0).abs() > 1e-6 {
                    return arg(format!("member {j} party {i}: ket is not normalized"));
                }
                row.push(if k.is_normalized() { k } else { Ket::normalized(k.into_amplitudes())? });
            }
            clean.push(row);
        }
        Ok(ProductVectorSet {
            dims,
            members: clean,
            subsets: None,
        })
    }

    /// Attaches subset metadata after checking each label names the actual ket.
    pub fn with_subsets(mut self, annotation: SubsetAnnotation) -> Result<Self> {
        if self.dims.iter().any(|&d| d != 2) {
            return arg("subset annotations are defined for qubit sets only");
        }
        if annotation.frames.len() != self.n() {
            return arg("one frame per party required");
        }
        if annotation.labels.len() != self.len() {
            return arg("one label row per member required");
        }
        for f in &annotation.frames {
            let ks = [&f.s0[0], &f.s0[1], &f.s1[0], &f.s1[1]];
            if ks.iter().any(|k| k.dim() != 2 || !k.is_normalized()) {
                return arg("frame kets must be normalized qubit kets");
            }
            if !f.s0[0].is_orthogonal(&f.s0[1]) || !f.s1[0].is_orthogonal(&f.s1[1]) {
                return arg("frame subsets must be orthonormal pairs");
            }
        }
        for (j, row) in annotation.labels.iter().enumerate() {
            if row.len() != self.n() {
                return arg(format!("label row {j} has wrong length"));
            }
            for (i, &l) in row.iter().enumerate() {
                if !annotation.frames[i].ket(l).same_ray(&self.members[j][i]) {
                    return arg(format!("member {j} party {i}: ket does not match its label"));
                }
            }
        }
        self.subsets = Some(annotation);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[Vec<Ket>] {
        &self.members
    }

    pub fn local(&self, member: usize, party: usize) -> &Ket {
        &self.members[member][party]
    }

    pub fn subsets(&self) -> Option<&SubsetAnnotation> {
        self.subsets.as_ref()
    }

    /// The global product vector of member `j`.
    pub fn member_ket(&self, j: usize) -> Ket {
        tensor_product(&self.members[j]).expect("members have n >= 1 factors")
    }

    pub fn global_kets(&self) -> Vec<Ket> {
        (0..self.len()).map(|j| self.member_ket(j)).collect()
    }

    /// Dimension of `span(S)`.
    pub fn span_rank(&self) -> usize {
        span_basis(&self.global_kets()).len()
    }

    /// The set with member order permuted; `order[k]` is the old index of new member `k`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.len()];
        if order.len() != self.len() || order.iter().any(|&k| k >= self.len() || std::mem::replace(&mut seen[k], true)) {
            return arg("order must be a permutation of member indices");
        }
        let members = order.iter().map(|&k| self.members[k].clone()).collect();
        let subsets = self.subsets.as_ref().map(|a| SubsetAnnotation {
            frames: a.frames.clone(),
            labels: order.iter().map(|&k| a.labels[k].clone()).collect(),
        });
        Ok(ProductVectorSet {
            dims: self.dims.clone(),
            members,
            subsets,
        })
    }

    /// Concatenates the members of `other`; subset metadata is dropped.
    pub fn union(&self, other: &ProductVectorSet) -> Result<Self> {
        if self.dims != other.dims {
            return arg("cannot join sets with different dims");
        }
        let mut members = self.members.clone();
        members.extend(other.members.iter().cloned());
        ProductVectorSet::new(self.dims.clone(), members)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Distinct local rays at one party, in first-occurrence order.
#[derive(Clone, Debug)]
pub struct RayTable {
    pub party: usize,
    pub rays: Vec<Ket>,
    /// `member_map[j]` is the ray index of member `j`'s local ket.
    pub member_map: Vec<usize>,
}

pub fn distinct_local_rays(set: &ProductVectorSet, party: usize) -> Result<RayTable> {
    if party >= set.n() {
        return arg(format!("party {party} out of range for {} parties", set.n()));
    }
    let mut rays: Vec<Ket> = Vec::new();
    let mut member_map = Vec::with_capacity(set.len());
    for m in set.members() {
        let k = &m[party];
        let idx = match rays.iter().position(|r| r.same_ray(k)) {
            Some(i) => i,
            None => {
                rays.push(k.canonical_phase());
                rays.len() - 1
            }
        };
        member_map.push(idx);
    }
    Ok(RayTable {
        party,
        rays,
        member_map,
    })
}

/// Undirected graph on ray indices with an edge for every orthogonal pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrthogonalityGraph {
    adjacency: Vec<Vec<bool>>,
}

impl OrthogonalityGraph {
    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn adjacent(&self, u: usize, v: usize) -> bool {
        self.adjacency[u][v]
    }

    /// Edges `(u, v)` with `u < v`, lexicographically ordered.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.vertex_count();
        (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .filter(|&(u, v)| self.adjacency[u][v])
            .collect()
    }

    /// Connected components, each sorted, ordered by smallest vertex.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.vertex_count();
        let mut comp = vec![usize::MAX; n];
        let mut out: Vec<Vec<usize>> = Vec::new();
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut stack = vec![start];
            let mut members = Vec::new();
            comp[start] = id;
            while let Some(u) = stack.pop() {
                members.push(u);
                for v in 0..n {
                    if self.adjacency[u][v] && comp[v] == usize::MAX {
                        comp[v] = id;
                        stack.push(v);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }
}

pub fn orthogonality_graph(table: &RayTable) -> OrthogonalityGraph {
    let n = table.rays.len();
    let mut adjacency = vec![vec![false; n]; n];
    for u in 0..n {
        for v in u + 1..n {
            let e = table.rays[u].is_orthogonal(&table.rays[v]);
            adjacency[u][v] = e;
            adjacency[v][u] = e;
        }
    }
    OrthogonalityGraph { adjacency }
}

/// Local measurement structure induced by property (P) at one party.
#[derive(Clone, Debug, PartialEq)]
pub struct PartyPartition {
    pub rays: Vec<Ket>,
    /// Each subset (one measurement) lists ray indices in output order.
    pub subsets: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementPartition {
    pub parties: Vec<PartyPartition>,
    /// `assignment[member][party] = (input, output)`.
    pub assignment: Vec<Vec<(usize, usize)>>,
}

impl MeasurementPartition {
    /// Kets indexed `[party][input][output]`.
    pub fn dictionary(&self) -> Vec<Vec<Vec<Ket>>> {
        self.parties
            .iter()
            .map(|p| {
                p.subsets
                    .iter()
                    .map(|s| s.iter().map(|&r| p.rays[r].clone()).collect())
                    .collect()
            })
            .collect()
    }

    /// The partition as sets of rays, independent of labels, for comparing
    /// partitions of reordered sets.
    pub fn ray_subsets(&self) -> Vec<Vec<Vec<Ket>>> {
        self.dictionary()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyViolation {
    pub party: usize,
    /// Two rays in the same orthogonality component that are not orthogonal.
    pub rays: (Ket, Ket),
    pub overlap: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PropertyP {
    Holds(MeasurementPartition),
    Violated(PropertyViolation),
}

impl PropertyP {
    pub fn holds(&self) -> bool {
        matches!(self, PropertyP::Holds(_))
    }

    pub fn partition(&self) -> Option<&MeasurementPartition> {
        match self {
            PropertyP::Holds(p) => Some(p),
            PropertyP::Violated(_) => None,
        }
    }
}

/// Decides property (P): every connected component of each party's
/// orthogonality graph must be a clique. The components then are the
/// measurements, ordered by first member occurrence, with outputs in
/// first-occurrence order.
pub fn check_property_p(set: &ProductVectorSet) -> PropertyP {
    let mut parties = Vec::with_capacity(set.n());
    let mut assignment = vec![vec![(0, 0); set.n()]; set.len()];
    for party in 0..set.n() {
        let table = distinct_local_rays(set, party).expect("party in range");
        let graph = orthogonality_graph(&table);
        let components = graph.components();
        for comp in &components {
            for (a, &u) in comp.iter().enumerate() {
                for &v in &comp[a + 1..] {
                    if !graph.adjacent(u, v) {
                        return PropertyP::Violated(PropertyViolation {
                            party,
                            rays: (table.rays[u].clone(), table.rays[v].clone()),
                            overlap: table.rays[u].overlap(&table.rays[v]),
                        });
                    }
                }
            }
        }
        let mut where_is = vec![(0, 0); table.rays.len()];
        for (k, comp) in components.iter().enumerate() {
            for (pos, &r) in comp.iter().enumerate() {
                where_is[r] = (k, pos);
            }
        }
        for (j, &r) in table.member_map.iter().enumerate() {
            assignment[j][party] = where_is[r];
        }
        parties.push(PartyPartition {
            rays: table.rays,
            subsets: components,
        });
    }
    PropertyP::Holds(MeasurementPartition { parties, assignment })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrthogonalityReport {
    pub orthogonal: bool,
    /// Member pair with the largest global overlap.
    pub worst_pair: Option<(usize, usize)>,
    pub worst_overlap: f64,
}

/// Pairwise global overlaps computed as products of local overlaps.
pub fn gram_orthogonality_check(set: &ProductVectorSet) -> OrthogonalityReport {
    let mut worst_pair = None;
    let mut worst_overlap = 0.0f64;
    for j in 0..set.len() {
        for k in j + 1..set.len() {
            let ov: f64 = (0..set.n())
                .map(|i| set.local(j, i).overlap(set.local(k, i)))
                .product();
            if worst_pair.is_none() || ov > worst_overlap {
                worst_overlap = ov;
                worst_pair = Some((j, k));
            }
        }
    }
    OrthogonalityReport {
        orthogonal: worst_overlap <= tol::ORTHOGONAL,
        worst_pair,
        worst_overlap,
    }
}

/// Whether two sets contain the same product vectors up to member order and
/// local phases.
pub fn same_up_to_order_and_phase(a: &ProductVectorSet, b: &ProductVectorSet) -> bool {
    if a.dims() != b.dims() || a.len() != b.len() {
        return false;
    }
    let joined = match a.union(b) {
        Ok(j) => j,
        Err(_) => return false,
    };
    let tables: Vec<RayTable> = (0..joined.n())
        .map(|p| distinct_local_rays(&joined, p).expect("party in range"))
        .collect();
    let fingerprint = |range: std::ops::Range<usize>| {
        let mut fps: Vec<Vec<usize>> = range
            .map(|j| tables.iter().map(|t| t.member_map[j]).collect())
            .collect();
        fps.sort();
        fps
    };
    fingerprint(0..a.len()) == fingerprint(a.len()..joined.len())
}
