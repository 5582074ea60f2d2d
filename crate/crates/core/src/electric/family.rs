use std::collections::{BTreeMap, BTreeSet};

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::length::{serde_frac, serde_frac_opt, Length};
use crate::metric_graph::{MetricGraph, PathWitness, INF};

/// A peripheral structure: named, pairwise disjoint, uniformly separated
/// vertex subsets of a host space.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HoroFamily {
    pub host: String,
    pub members: BTreeMap<String, Vec<usize>>,
    #[serde(with = "serde_frac")]
    pub separation: Length,
}

impl HoroFamily {
    pub fn new(
        host: impl Into<String>,
        members: impl IntoIterator<Item = (String, Vec<usize>)>,
        separation: Length,
    ) -> Self {
        let members = members
            .into_iter()
            .map(|(k, mut v)| {
                v.sort_unstable();
                v.dedup();
                (k, v)
            })
            .collect();
        HoroFamily {
            host: host.into(),
            members,
            separation,
        }
    }

    pub fn empty(host: impl Into<String>) -> Self {
        HoroFamily {
            host: host.into(),
            members: BTreeMap::new(),
            separation: Ratio::from_integer(1),
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.members.keys().map(String::as_str)
    }

    /// Member vertex lists in name order; the position is the member index.
    pub fn member_sets(&self) -> Vec<&[usize]> {
        self.members.values().map(Vec::as_slice).collect()
    }

    pub fn member_of(&self, n: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; n];
        for (i, set) in self.members.values().enumerate() {
            for &v in set {
                if v < n {
                    out[v] = Some(i);
                }
            }
        }
        out
    }

    /// Checks membership ids, disjointness and uniform separation on `host`.
    pub fn validate(&self, host: &MetricGraph) -> Result<()> {
        if self.host != host.id() {
            return Err(Error::domain(format!(
                "family is declared on `{}` but applied to `{}`",
                self.host,
                host.id()
            )));
        }
        if self.members.is_empty() {
            return Ok(());
        }
        if self.separation <= Ratio::from_integer(0) {
            return Err(Error::invariant("separation must be positive"));
        }
        let mut owner: Vec<Option<usize>> = vec![None; host.n()];
        let names: Vec<&String> = self.members.keys().collect();
        for (i, set) in self.members.values().enumerate() {
            if set.is_empty() {
                return Err(Error::invariant(format!("member `{}` is empty", names[i])));
            }
            for &v in set {
                host.check_vertex(v)?;
                if let Some(j) = owner[v] {
                    return Err(Error::invariant(format!(
                        "members `{}` and `{}` overlap at vertex {v}",
                        names[j], names[i]
                    )));
                }
                owner[v] = Some(i);
            }
        }
        let bound = host.floor_raw(&self.separation);
        for (i, set) in self.members.values().enumerate() {
            let sources: Vec<(usize, i64)> = set.iter().map(|&v| (v, 0)).collect();
            let d = host.dijkstra_raw(&sources, Some(bound));
            for (v, &dv) in d.iter().enumerate() {
                if dv == INF {
                    continue;
                }
                if let Some(j) = owner[v] {
                    if j != i && host.cmp_raw(dv, &self.separation).is_lt() {
                        return Err(Error::invariant(format!(
                            "members `{}` and `{}` are closer than the separation {}",
                            names[i], names[j], self.separation
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Induced-subgraph path metric on one member.
#[derive(Clone, Debug)]
pub struct IntrinsicMetric {
    vertices: Vec<usize>,
    scale: i64,
    dist: Vec<i64>,
}

impl IntrinsicMetric {
    pub fn new(host: &MetricGraph, name: &str, vertices: &[usize]) -> Result<Self> {
        let mut vs = vertices.to_vec();
        vs.sort_unstable();
        vs.dedup();
        let m = vs.len();
        if m == 0 {
            return Err(Error::invariant(format!("member `{name}` is empty")));
        }
        let local = |v: usize| vs.binary_search(&v).ok();
        let adj: Vec<Vec<(usize, i64)>> = vs
            .iter()
            .map(|&v| {
                host.neighbors(v)
                    .iter()
                    .filter_map(|&(w, len)| local(w).map(|j| (j, len)))
                    .collect()
            })
            .collect();
        let mut dist = vec![INF; m * m];
        for s in 0..m {
            let row = &mut dist[s * m..(s + 1) * m];
            row[s] = 0;
            let mut heap = std::collections::BinaryHeap::new();
            heap.push(std::cmp::Reverse((0i64, s)));
            while let Some(std::cmp::Reverse((d, u))) = heap.pop() {
                if d > row[u] {
                    continue;
                }
                for &(w, len) in &adj[u] {
                    if d + len < row[w] {
                        row[w] = d + len;
                        heap.push(std::cmp::Reverse((d + len, w)));
                    }
                }
            }
            if row.contains(&INF) {
                return Err(Error::DisconnectedMember(name.to_string()));
            }
        }
        Ok(IntrinsicMetric {
            vertices: vs,
            scale: host.scale(),
            dist,
        })
    }

    /// A metric given directly as a symmetric matrix of lengths over
    /// `vertices` (ascending ids).
    pub fn from_matrix(vertices: Vec<usize>, dist: &[Vec<Length>]) -> Result<Self> {
        let m = vertices.len();
        if m == 0 || dist.len() != m || dist.iter().any(|r| r.len() != m) {
            return Err(Error::domain("intrinsic metric matrix does not match its vertices"));
        }
        if vertices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::domain("intrinsic metric vertices must be strictly ascending"));
        }
        let scale = dist
            .iter()
            .flatten()
            .fold(1i64, |acc, x| num_integer::lcm(acc, *x.denom()));
        let mut raw = vec![0i64; m * m];
        for i in 0..m {
            for j in 0..m {
                let (a, b) = (dist[i][j], dist[j][i]);
                if a != b || (i == j) != (a == Ratio::from_integer(0)) || a < Ratio::from_integer(0) {
                    return Err(Error::domain("intrinsic metric matrix is not a metric"));
                }
                raw[i * m + j] = (a * scale).to_integer();
            }
        }
        Ok(IntrinsicMetric {
            vertices,
            scale,
            dist: raw,
        })
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn scale(&self) -> i64 {
        self.scale
    }

    pub fn local(&self, v: usize) -> Option<usize> {
        self.vertices.binary_search(&v).ok()
    }

    pub fn raw_local(&self, i: usize, j: usize) -> i64 {
        self.dist[i * self.vertices.len() + j]
    }

    pub fn raw(&self, u: usize, v: usize) -> Option<i64> {
        Some(self.raw_local(self.local(u)?, self.local(v)?))
    }

    pub fn get(&self, u: usize, v: usize) -> Option<Length> {
        self.raw(u, v).map(|r| Ratio::new(r, self.scale))
    }

    pub fn diameter(&self) -> Length {
        Ratio::new(*self.dist.iter().max().unwrap(), self.scale)
    }
}

/// Membership data for every vertex of a space built over a host (the host
/// itself, its coned-off space, or its glued space).
#[derive(Clone, Debug)]
pub struct FamilyIndex {
    host_n: usize,
    names: Vec<String>,
    member_of: Vec<Option<usize>>,
    intrinsic: Vec<Option<IntrinsicMetric>>,
}

impl FamilyIndex {
    /// Index over the host only. Intrinsic metrics are computed for members
    /// that are intrinsically connected and left empty otherwise.
    pub fn new(host: &MetricGraph, family: &HoroFamily) -> Self {
        let intrinsic = family
            .members
            .iter()
            .map(|(name, set)| IntrinsicMetric::new(host, name, set).ok())
            .collect();
        FamilyIndex {
            host_n: host.n(),
            names: family.members.keys().cloned().collect(),
            member_of: family.member_of(host.n()),
            intrinsic,
        }
    }

    /// Extends the index to extra vertices appended after the host.
    pub(crate) fn extend(&mut self, extra: impl IntoIterator<Item = Option<usize>>) {
        self.member_of.extend(extra);
    }

    pub fn host_n(&self) -> usize {
        self.host_n
    }

    pub fn is_host(&self, v: usize) -> bool {
        v < self.host_n
    }

    pub fn member_of(&self, v: usize) -> Option<usize> {
        self.member_of.get(v).copied().flatten()
    }

    /// Host vertex outside every member.
    pub fn is_off_member(&self, v: usize) -> bool {
        self.is_host(v) && self.member_of(v).is_none()
    }

    pub fn name(&self, m: usize) -> &str {
        &self.names[m]
    }

    pub fn member_count(&self) -> usize {
        self.names.len()
    }

    pub fn intrinsic(&self, m: usize) -> Option<&IntrinsicMetric> {
        self.intrinsic[m].as_ref()
    }

    /// Ordered visits of `p` to members, with entry and exit points.
    pub fn penetration_profile(&self, p: &PathWitness) -> PenetrationProfile {
        let mut visits: Vec<Visit> = Vec::new();
        let mut i = 0;
        let vs = &p.vertices;
        while i < vs.len() {
            let Some(m) = self.member_of(vs[i]) else {
                i += 1;
                continue;
            };
            let start = i;
            while i + 1 < vs.len() && self.member_of(vs[i + 1]) == Some(m) {
                i += 1;
            }
            let end = i;
            let base: Vec<usize> = (start..=end).filter(|&k| self.is_host(vs[k])).collect();
            let (entry_pos, exit_pos) = match (base.first(), base.last()) {
                (Some(&a), Some(&b)) => (a, b),
                _ => (start, end),
            };
            let (entry, exit) = (vs[entry_pos], vs[exit_pos]);
            let intrinsic_length = self.intrinsic(m).and_then(|im| im.get(entry, exit));
            visits.push(Visit {
                member: m,
                name: self.names[m].clone(),
                first_pos: start,
                last_pos: end,
                entry_pos,
                exit_pos,
                entry,
                exit,
                intrinsic_length,
                through_cone: (start..=end).any(|k| !self.is_host(vs[k])),
            });
            i += 1;
        }
        let mut seen = BTreeSet::new();
        let backtracking = visits.iter().any(|v| !seen.insert(v.member));
        PenetrationProfile {
            visits,
            backtracking,
        }
    }
}

/// One maximal run of a path inside a member (or its cone/horoball).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Visit {
    pub member: usize,
    pub name: String,
    pub first_pos: usize,
    pub last_pos: usize,
    pub entry_pos: usize,
    pub exit_pos: usize,
    pub entry: usize,
    pub exit: usize,
    /// Intrinsic distance in the member from entry to exit.
    #[serde(with = "serde_frac_opt")]
    pub intrinsic_length: Option<Length>,
    /// The run leaves the host (through a cone point or horoball level).
    pub through_cone: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PenetrationProfile {
    pub visits: Vec<Visit>,
    /// Some member is visited again after being left.
    pub backtracking: bool,
}

impl PenetrationProfile {
    pub fn first_visit(&self, member: usize) -> Option<&Visit> {
        self.visits.iter().find(|v| v.member == member)
    }

    pub fn last_visit(&self, member: usize) -> Option<&Visit> {
        self.visits.iter().rev().find(|v| v.member == member)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::length::int;

    fn path(n: usize) -> MetricGraph {
        let e: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        MetricGraph::unit("path", n, &e).unwrap()
    }

    #[test]
    fn validation_catches_overlap_and_crowding() {
        let g = path(10);
        let overlap = HoroFamily::new(
            "path",
            [("A".to_string(), vec![0, 1, 2]), ("B".to_string(), vec![2, 3])],
            int(1),
        );
        assert!(matches!(overlap.validate(&g), Err(Error::Invariant(_))));
        let crowded = HoroFamily::new(
            "path",
            [("A".to_string(), vec![0, 1]), ("B".to_string(), vec![3, 4])],
            int(3),
        );
        assert!(crowded.validate(&g).is_err());
        let ok = HoroFamily::new(
            "path",
            [("A".to_string(), vec![0, 1]), ("B".to_string(), vec![4, 5])],
            int(3),
        );
        ok.validate(&g).unwrap();
        let wrong_host = HoroFamily::empty("other");
        assert!(wrong_host.validate(&g).is_err());
    }

    #[test]
    fn intrinsic_metric_rejects_disconnected() {
        let g = path(6);
        assert!(matches!(
            IntrinsicMetric::new(&g, "gap", &[0, 1, 3]),
            Err(Error::DisconnectedMember(_))
        ));
        let im = IntrinsicMetric::new(&g, "run", &[2, 3, 4]).unwrap();
        assert_eq!(im.get(2, 4), Some(int(2)));
        assert_eq!(im.diameter(), int(2));
    }

    #[test]
    fn profile_on_host_paths() {
        let g = path(8);
        let fam = HoroFamily::new(
            "path",
            [("A".to_string(), vec![2, 3, 4]), ("B".to_string(), vec![6])],
            int(1),
        );
        let idx = FamilyIndex::new(&g, &fam);
        let disjoint = PathWitness::new(&g, vec![0, 1]).unwrap();
        assert!(idx.penetration_profile(&disjoint).visits.is_empty());
        let inside = PathWitness::new(&g, vec![2, 3, 4]).unwrap();
        let prof = idx.penetration_profile(&inside);
        assert_eq!(prof.visits.len(), 1);
        assert_eq!((prof.visits[0].entry, prof.visits[0].exit), (2, 4));
        assert_eq!(prof.visits[0].intrinsic_length, Some(int(2)));
        let back = PathWitness::new(&g, vec![3, 4, 5, 6, 5, 4]).unwrap();
        let prof = idx.penetration_profile(&back);
        assert!(prof.backtracking);
        assert_eq!(prof.visits.len(), 3);
    }
}
