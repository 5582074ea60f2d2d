//! Finite weighted graphs as geodesic metric spaces.
//!
//! Edge lengths are exact rationals. Internally every length is rescaled by
//! the least common multiple of the edge denominators so shortest-path runs
//! work on `i64` and stay exact; results are converted back to [`Length`]
//! at the API boundary.

mod diagnostics;
mod params;

pub use diagnostics::{
    measure_projection_lipschitz, measure_projection_tracking, LipschitzMeasure, PairScan,
    TrackingMeasure,
};
pub use params::{Constant, GeometryParams, Param, Provenance};

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};

use num_integer::Integer;
use num_rational::Ratio;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::length::{serde_frac, serde_frac_opt, Length};
use crate::rng;

/// Marker for unreachable vertices in raw distance vectors.
pub const INF: i64 = i64::MAX;

/// A connected, undirected graph with positive exact edge lengths.
#[derive(Clone, Debug)]
pub struct MetricGraph {
    id: String,
    adj: Vec<Vec<(usize, i64)>>,
    edges: Vec<(usize, usize, Length)>,
    scale: i64,
    labels: BTreeMap<usize, String>,
}

/// Incremental construction of a [`MetricGraph`].
#[derive(Clone, Debug, Default)]
pub struct GraphBuilder {
    n: usize,
    edges: BTreeMap<(usize, usize), Length>,
    labels: BTreeMap<usize, String>,
}

impl GraphBuilder {
    pub fn new(n: usize) -> Self {
        GraphBuilder {
            n,
            ..Default::default()
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn add_vertex(&mut self) -> usize {
        self.n += 1;
        self.n - 1
    }

    fn key(&self, u: usize, v: usize, len: &Length) -> Result<(usize, usize)> {
        if u >= self.n || v >= self.n {
            return Err(Error::domain(format!(
                "edge ({u},{v}) references a vertex outside 0..{}",
                self.n
            )));
        }
        if u == v {
            return Err(Error::domain(format!("self-loop at vertex {u}")));
        }
        if *len <= Ratio::from_integer(0) {
            return Err(Error::domain(format!("edge ({u},{v}) has non-positive length {len}")));
        }
        Ok((u.min(v), u.max(v)))
    }

    /// Adds an edge; a second edge on the same pair is an error.
    pub fn add_edge(&mut self, u: usize, v: usize, len: Length) -> Result<()> {
        let key = self.key(u, v, &len)?;
        if self.edges.insert(key, len).is_some() {
            return Err(Error::domain(format!("duplicate edge ({u},{v})")));
        }
        Ok(())
    }

    /// Adds an edge, keeping the shorter length if the pair is already joined.
    pub fn add_edge_min(&mut self, u: usize, v: usize, len: Length) -> Result<()> {
        let key = self.key(u, v, &len)?;
        self.edges
            .entry(key)
            .and_modify(|l| {
                if len < *l {
                    *l = len
                }
            })
            .or_insert(len);
        Ok(())
    }

    pub fn label(&mut self, v: usize, label: impl Into<String>) {
        self.labels.insert(v, label.into());
    }

    pub fn build(self, id: impl Into<String>) -> Result<MetricGraph> {
        let id = id.into();
        if self.n == 0 {
            return Err(Error::domain(format!("space `{id}` has no vertices")));
        }
        let scale = self
            .edges
            .values()
            .fold(1i64, |acc, l| acc.lcm(l.denom()));
        let mut adj = vec![Vec::new(); self.n];
        let mut edges = Vec::with_capacity(self.edges.len());
        for (&(u, v), len) in &self.edges {
            let w = (len * scale).to_integer();
            adj[u].push((v, w));
            adj[v].push((u, w));
            edges.push((u, v, *len));
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        let g = MetricGraph {
            id,
            adj,
            edges,
            scale,
            labels: self.labels,
        };
        let reach = g.sssp_raw(0);
        if let Some(v) = reach.iter().position(|&d| d == INF) {
            return Err(Error::invariant(format!(
                "space `{}` is disconnected (vertex {v} unreachable from 0)",
                g.id
            )));
        }
        Ok(g)
    }
}

/// Single-source distances in a graph's raw (rescaled) units.
#[derive(Clone, Debug)]
pub struct Distances {
    raw: Vec<i64>,
    scale: i64,
}

impl Distances {
    pub fn get(&self, v: usize) -> Length {
        Ratio::new(self.raw[v], self.scale)
    }

    pub fn raw(&self, v: usize) -> i64 {
        self.raw[v]
    }

    pub fn as_raw(&self) -> &[i64] {
        &self.raw
    }
}

/// Dense all-pairs distance table in raw units.
#[derive(Clone, Debug)]
pub struct DistanceMatrix {
    n: usize,
    scale: i64,
    d: Vec<i64>,
}

impl DistanceMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn scale(&self) -> i64 {
        self.scale
    }

    pub fn raw(&self, u: usize, v: usize) -> i64 {
        self.d[u * self.n + v]
    }

    pub fn get(&self, u: usize, v: usize) -> Length {
        Ratio::new(self.raw(u, v), self.scale)
    }

    pub fn row(&self, u: usize) -> &[i64] {
        &self.d[u * self.n..(u + 1) * self.n]
    }
}

/// A path in a host space, recorded as its vertex sequence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathWitness {
    pub host: String,
    pub vertices: Vec<usize>,
    #[serde(with = "serde_frac")]
    pub length: Length,
    /// Minimal quasigeodesic constant, filled in by certification.
    #[serde(with = "serde_frac_opt", default)]
    pub quality: Option<Length>,
}

impl PathWitness {
    pub fn new(g: &MetricGraph, vertices: Vec<usize>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::domain("empty path"));
        }
        let mut raw = 0i64;
        for w in vertices.windows(2) {
            g.check_vertex(w[0])?;
            raw += g.edge_raw(w[0], w[1]).ok_or_else(|| {
                Error::domain(format!(
                    "path steps {}→{} but they are not adjacent in `{}`",
                    w[0], w[1], g.id
                ))
            })?;
        }
        g.check_vertex(*vertices.last().unwrap())?;
        Ok(PathWitness {
            host: g.id.clone(),
            vertices,
            length: g.to_length(raw),
            quality: None,
        })
    }

    pub fn single(g: &MetricGraph, v: usize) -> Result<Self> {
        Self::new(g, vec![v])
    }

    pub fn start(&self) -> usize {
        self.vertices[0]
    }

    pub fn end(&self) -> usize {
        *self.vertices.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Checks the witness against its host: adjacency and recorded length.
    pub fn validate(&self, g: &MetricGraph) -> Result<()> {
        if self.host != g.id {
            return Err(Error::domain(format!(
                "path lives in `{}`, not `{}`",
                self.host, g.id
            )));
        }
        let fresh = PathWitness::new(g, self.vertices.clone())?;
        if fresh.length != self.length {
            return Err(Error::invariant(format!(
                "recorded length {} differs from traversed length {}",
                self.length, fresh.length
            )));
        }
        Ok(())
    }
}

/// How to evaluate the four-point condition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaMode {
    Exhaustive,
    /// Scan every quadruple of `count` vertices drawn with `seed`.
    Sampled { count: usize, seed: u64 },
}

impl DeltaMode {
    /// Exhaustive up to 200 vertices, sampled above.
    pub fn auto(n: usize, seed: u64) -> Self {
        if n <= 200 {
            DeltaMode::Exhaustive
        } else {
            DeltaMode::Sampled { count: 96, seed }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DeltaEstimate {
    #[serde(with = "serde_frac")]
    pub delta: Length,
    pub mode: DeltaMode,
    /// True when every quadruple was examined.
    pub exact: bool,
    pub quadruples: u64,
    /// The sampled vertices (sampled mode only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sample: Vec<usize>,
}

impl MetricGraph {
    pub fn from_edges(
        id: impl Into<String>,
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize, Length)>,
    ) -> Result<Self> {
        let mut b = GraphBuilder::new(n);
        for (u, v, l) in edges {
            b.add_edge(u, v, l)?;
        }
        b.build(id)
    }

    /// Unit-length edges.
    pub fn unit(id: impl Into<String>, n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        Self::from_edges(id, n, edges.iter().map(|&(u, v)| (u, v, Ratio::from_integer(1))))
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn scale(&self) -> i64 {
        self.scale
    }

    pub fn edges(&self) -> &[(usize, usize, Length)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, i64)] {
        &self.adj[v]
    }

    pub fn label(&self, v: usize) -> Option<&str> {
        self.labels.get(&v).map(String::as_str)
    }

    pub fn labels(&self) -> &BTreeMap<usize, String> {
        &self.labels
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn to_builder(&self) -> GraphBuilder {
        let mut b = GraphBuilder::new(self.n());
        for &(u, v, l) in &self.edges {
            b.edges.insert((u, v), l);
        }
        b.labels = self.labels.clone();
        b
    }

    pub fn check_vertex(&self, v: usize) -> Result<()> {
        if v < self.n() {
            Ok(())
        } else {
            Err(Error::UnknownVertex {
                space: self.id.clone(),
                vertex: v,
            })
        }
    }

    pub fn to_length(&self, raw: i64) -> Length {
        Ratio::new(raw, self.scale)
    }

    /// Orders a raw distance against an exact length.
    pub fn cmp_raw(&self, raw: i64, len: &Length) -> Ordering {
        (raw as i128 * *len.denom() as i128).cmp(&(*len.numer() as i128 * self.scale as i128))
    }

    /// Largest raw value not exceeding `len`.
    pub fn floor_raw(&self, len: &Length) -> i64 {
        ((*len.numer() as i128 * self.scale as i128).div_euclid(*len.denom() as i128)) as i64
    }

    pub fn edge_raw(&self, u: usize, v: usize) -> Option<i64> {
        let list = self.adj.get(u)?;
        list.binary_search_by_key(&v, |&(w, _)| w)
            .ok()
            .map(|i| list[i].1)
    }

    pub fn edge_length(&self, u: usize, v: usize) -> Option<Length> {
        self.edge_raw(u, v).map(|w| self.to_length(w))
    }

    /// Multi-source shortest paths, optionally pruned beyond `bound`.
    pub fn dijkstra_raw(&self, sources: &[(usize, i64)], bound: Option<i64>) -> Vec<i64> {
        let mut dist = vec![INF; self.n()];
        let mut heap = BinaryHeap::new();
        for &(s, d0) in sources {
            if d0 < dist[s] {
                dist[s] = d0;
                heap.push(Reverse((d0, s)));
            }
        }
        while let Some(Reverse((d, u))) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for &(v, w) in &self.adj[u] {
                let nd = d + w;
                if bound.is_some_and(|b| nd > b) {
                    continue;
                }
                if nd < dist[v] {
                    dist[v] = nd;
                    heap.push(Reverse((nd, v)));
                }
            }
        }
        dist
    }

    pub fn sssp_raw(&self, src: usize) -> Vec<i64> {
        self.dijkstra_raw(&[(src, 0)], None)
    }

    /// For every vertex, the lexicographically least `(distance, source)`
    /// over the given sources: the nearest source with ties broken toward
    /// the smallest id.
    pub fn nearest_sources_raw(&self, sources: &[usize]) -> Vec<(i64, usize)> {
        let mut best = vec![(INF, usize::MAX); self.n()];
        let mut heap = BinaryHeap::new();
        for &s in sources {
            if (0, s) < best[s] {
                best[s] = (0, s);
                heap.push(Reverse((0i64, s, s)));
            }
        }
        while let Some(Reverse((d, src, u))) = heap.pop() {
            if (d, src) > best[u] {
                continue;
            }
            for &(v, w) in &self.adj[u] {
                let cand = (d + w, src);
                if cand < best[v] {
                    best[v] = cand;
                    heap.push(Reverse((cand.0, src, v)));
                }
            }
        }
        best
    }

    pub fn distances_from(&self, u: usize) -> Result<Distances> {
        self.check_vertex(u)?;
        Ok(Distances {
            raw: self.sssp_raw(u),
            scale: self.scale,
        })
    }

    pub fn distance(&self, u: usize, v: usize) -> Result<Length> {
        self.check_vertex(v)?;
        Ok(self.distances_from(u)?.get(v))
    }

    pub fn all_pairs(&self) -> DistanceMatrix {
        let n = self.n();
        let rows: Vec<Vec<i64>> = (0..n).into_par_iter().map(|s| self.sssp_raw(s)).collect();
        DistanceMatrix {
            n,
            scale: self.scale,
            d: rows.concat(),
        }
    }

    /// Walks from `u` toward `v` along a shortest path, stepping each time to
    /// the smallest-id neighbor that stays on some shortest path. The result
    /// is the lexicographically least geodesic vertex sequence.
    pub fn geodesic_with(&self, u: usize, v: usize, to_v: &[i64]) -> Vec<usize> {
        let mut path = vec![u];
        let mut cur = u;
        while cur != v {
            let here = to_v[cur];
            let next = self.adj[cur]
                .iter()
                .find(|&&(w, len)| to_v[w] != INF && to_v[w] + len == here)
                .map(|&(w, _)| w)
                .expect("connected graph has a shortest-path successor");
            path.push(next);
            cur = next;
        }
        path
    }

    pub fn geodesic(&self, u: usize, v: usize) -> Result<PathWitness> {
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        let to_v = self.sssp_raw(v);
        let vertices = self.geodesic_with(u, v, &to_v);
        Ok(PathWitness {
            host: self.id.clone(),
            vertices,
            length: self.to_length(to_v[u]),
            quality: None,
        })
    }

    /// Gromov four-point constant: half the largest gap between the two
    /// largest of the three pair sums, maximized over quadruples.
    pub fn four_point_delta(&self, mode: DeltaMode) -> Result<DeltaEstimate> {
        match mode {
            DeltaMode::Exhaustive => {
                let dm = self.all_pairs();
                let verts: Vec<usize> = (0..self.n()).collect();
                let (defect, quads) = quad_scan(&verts, |a, b| dm.raw(a, b));
                Ok(DeltaEstimate {
                    delta: Ratio::new(defect, 2 * self.scale),
                    mode,
                    exact: true,
                    quadruples: quads,
                    sample: Vec::new(),
                })
            }
            DeltaMode::Sampled { count, seed } => {
                if count == 0 {
                    return Err(Error::domain("sampled four-point scan needs count > 0"));
                }
                let mut all: Vec<usize> = (0..self.n()).collect();
                let mut r = rng::seeded(seed);
                all.shuffle(&mut r);
                let mut sample: Vec<usize> = all.into_iter().take(count.min(self.n())).collect();
                sample.sort_unstable();
                let rows: Vec<Vec<i64>> =
                    sample.par_iter().map(|&s| self.sssp_raw(s)).collect();
                let idx: Vec<usize> = (0..sample.len()).collect();
                let (defect, quads) = quad_scan(&idx, |a, b| rows[a][sample[b]]);
                Ok(DeltaEstimate {
                    delta: Ratio::new(defect, 2 * self.scale),
                    mode,
                    exact: sample.len() == self.n(),
                    quadruples: quads,
                    sample,
                })
            }
        }
    }

    /// Smallest `K >= 1` with `length(β) <= K·d(ends of β) + K` for every
    /// contiguous subpath β. Stores the result in `p.quality`.
    pub fn certify_quasigeodesic(&self, p: &mut PathWitness) -> Result<Length> {
        p.validate(self)?;
        let mut rows: BTreeMap<usize, Vec<i64>> = BTreeMap::new();
        for &v in &p.vertices {
            rows.entry(v).or_insert_with(|| self.sssp_raw(v));
        }
        let k = self.certify_with(&p.vertices, |a, b| rows[&a][b]);
        p.quality = Some(k);
        Ok(k)
    }

    /// Certification against a caller-supplied raw distance.
    pub fn certify_with(&self, vertices: &[usize], dist: impl Fn(usize, usize) -> i64) -> Length {
        let mut prefix = Vec::with_capacity(vertices.len());
        let mut acc = 0i64;
        prefix.push(0);
        for w in vertices.windows(2) {
            acc += self.edge_raw(w[0], w[1]).expect("validated path");
            prefix.push(acc);
        }
        // worst ratio L / (d + scale), starting from K = 1
        let (mut num, mut den) = (1i64, 1i64);
        for i in 0..vertices.len() {
            for j in i + 1..vertices.len() {
                let l = prefix[j] - prefix[i];
                let d = dist(vertices[i], vertices[j]) + self.scale;
                if (l as i128) * (den as i128) > (num as i128) * (d as i128) {
                    num = l;
                    den = d;
                }
            }
        }
        Ratio::new(num, den)
    }

    /// Vertex of `target` nearest to `x`; ties go to the smallest id.
    pub fn nearest_point_projection(&self, x: usize, target: &PathWitness) -> Result<usize> {
        if target.vertices.is_empty() {
            return Err(Error::domain("projection onto an empty target"));
        }
        let d = self.distances_from(x)?;
        for &t in &target.vertices {
            self.check_vertex(t)?;
        }
        Ok(target
            .vertices
            .iter()
            .copied()
            .min_by_key(|&t| (d.raw(t), t))
            .unwrap())
    }

    /// Distance from every vertex to the nearest member of `set`, raw units.
    pub fn distance_to_set_raw(&self, set: &[usize]) -> Vec<i64> {
        let sources: Vec<(usize, i64)> = set.iter().map(|&s| (s, 0)).collect();
        self.dijkstra_raw(&sources, None)
    }

    pub fn hausdorff_distance(&self, a: &[usize], b: &[usize]) -> Result<Length> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::domain("Hausdorff distance of an empty set"));
        }
        for &v in a.iter().chain(b) {
            self.check_vertex(v)?;
        }
        let to_a = self.distance_to_set_raw(a);
        let to_b = self.distance_to_set_raw(b);
        let ab = a.iter().map(|&x| to_b[x]).max().unwrap();
        let ba = b.iter().map(|&y| to_a[y]).max().unwrap();
        Ok(self.to_length(ab.max(ba)))
    }

    /// Eccentricity of `v` (largest distance from it).
    pub fn eccentricity(&self, v: usize) -> Result<Length> {
        let d = self.distances_from(v)?;
        Ok(self.to_length(*d.as_raw().iter().max().unwrap()))
    }
}

/// Largest four-point defect (in raw units, before halving) over all
/// quadruples of `verts`, and the number of quadruples examined.
fn quad_scan(verts: &[usize], d: impl Fn(usize, usize) -> i64 + Sync) -> (i64, u64) {
    let m = verts.len();
    if m < 4 {
        return (0, 0);
    }
    let mut dense = vec![0i64; m * m];
    for i in 0..m {
        for j in 0..m {
            dense[i * m + j] = d(verts[i], verts[j]);
        }
    }
    let dense = &dense;
    let best = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut best = 0i64;
            for j in i + 1..m {
                let dij = dense[i * m + j];
                for k in j + 1..m {
                    let dik = dense[i * m + k];
                    let djk = dense[j * m + k];
                    for l in k + 1..m {
                        let s1 = dij + dense[k * m + l];
                        let s2 = dik + dense[j * m + l];
                        let s3 = dense[i * m + l] + djk;
                        let (hi, mid) = top_two(s1, s2, s3);
                        best = best.max(hi - mid);
                    }
                }
            }
            best
        })
        .max()
        .unwrap_or(0);
    let m = m as u64;
    (best, m * (m - 1) * (m - 2) * (m - 3) / 24)
}

#[inline]
fn top_two(a: i64, b: i64, c: i64) -> (i64, i64) {
    if a >= b {
        if b >= c {
            (a, b)
        } else if a >= c {
            (a, c)
        } else {
            (c, a)
        }
    } else if a >= c {
        (b, a)
    } else if b >= c {
        (b, c)
    } else {
        (c, b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::length::{frac, int};

    fn path(n: usize) -> MetricGraph {
        let e: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        MetricGraph::unit("path", n, &e).unwrap()
    }

    fn cycle(n: usize) -> MetricGraph {
        let e: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        MetricGraph::unit("cycle", n, &e).unwrap()
    }

    #[test]
    fn path_distance() {
        assert_eq!(path(5).distance(0, 4).unwrap(), int(4));
    }

    #[test]
    fn triangle_inequality_forces_short_route() {
        let g = MetricGraph::from_edges("tri", 3, [(0, 1, int(1)), (1, 2, int(1)), (0, 2, int(3))])
            .unwrap();
        assert_eq!(g.distance(0, 2).unwrap(), int(2));
    }

    #[test]
    fn rejects_bad_graphs() {
        assert!(MetricGraph::unit("x", 3, &[(0, 1)]).is_err());
        assert!(MetricGraph::unit("x", 2, &[(0, 0)]).is_err());
        assert!(MetricGraph::unit("x", 2, &[(0, 1), (1, 0)]).is_err());
        assert!(MetricGraph::from_edges("x", 2, [(0, 1, int(0))]).is_err());
        assert!(matches!(
            path(3).distance(0, 9),
            Err(Error::UnknownVertex { vertex: 9, .. })
        ));
    }

    #[test]
    fn geodesic_identity_and_path() {
        let g = path(5);
        let p = g.geodesic(2, 2).unwrap();
        assert_eq!(p.vertices, vec![2]);
        assert_eq!(p.length, int(0));
        assert_eq!(g.geodesic(0, 4).unwrap().vertices, vec![0, 1, 2, 3, 4]);
        assert_eq!(g.geodesic(4, 1).unwrap().vertices, vec![4, 3, 2, 1]);
    }

    #[test]
    fn c6_antipodal_tie_break() {
        // Both shortest paths, enumerated: [0,1,2,3] and [0,5,4,3].
        // The rule picks the lexicographically smaller one.
        let g = cycle(6);
        assert_eq!(g.geodesic(0, 3).unwrap().vertices, vec![0, 1, 2, 3]);
        assert_eq!(g.geodesic(3, 0).unwrap().vertices, vec![3, 2, 1, 0]);
    }

    #[test]
    fn delta_trivial_cases() {
        let single = GraphBuilder::new(1).build("pt").unwrap();
        assert_eq!(single.four_point_delta(DeltaMode::Exhaustive).unwrap().delta, int(0));
        let star = MetricGraph::unit("star", 5, &[(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
        assert_eq!(star.four_point_delta(DeltaMode::Exhaustive).unwrap().delta, int(0));
        assert!(path(4)
            .four_point_delta(DeltaMode::Sampled { count: 0, seed: 1 })
            .is_err());
    }

    #[test]
    fn certify_geodesic_and_single_vertex() {
        let g = cycle(7);
        let mut p = g.geodesic(0, 3).unwrap();
        assert_eq!(g.certify_quasigeodesic(&mut p).unwrap(), int(1));
        assert_eq!(p.quality, Some(int(1)));
        let mut s = PathWitness::single(&g, 4).unwrap();
        assert_eq!(g.certify_quasigeodesic(&mut s).unwrap(), int(1));
    }

    #[test]
    fn certify_backtracking_walk() {
        // Walk 0→4→2 on the 5-path. Exhaustive subsegment scan (by hand):
        // the loop 2,3,4,3,2 has length 4 with coincident ends, so K >= 4;
        // every other subsegment needs at most 5/2.
        let g = path(5);
        let mut p = PathWitness::new(&g, vec![0, 1, 2, 3, 4, 3, 2]).unwrap();
        assert_eq!(p.length, int(6));
        assert_eq!(g.certify_quasigeodesic(&mut p).unwrap(), int(4));
    }

    #[test]
    fn path_witness_validation() {
        let g = path(4);
        assert!(PathWitness::new(&g, vec![0, 2]).is_err());
        assert!(PathWitness::new(&g, vec![]).is_err());
        let mut p = PathWitness::new(&g, vec![0, 1]).unwrap();
        p.length = int(5);
        assert!(p.validate(&g).is_err());
    }

    #[test]
    fn projection_cases() {
        let g = path(6);
        let target = PathWitness::new(&g, vec![2, 3, 4]).unwrap();
        assert_eq!(g.nearest_point_projection(3, &target).unwrap(), 3);
        assert_eq!(g.nearest_point_projection(0, &target).unwrap(), 2);
        assert_eq!(g.nearest_point_projection(5, &target).unwrap(), 4);
        // tree: spider with legs through 1 and 2 meeting at 0
        let t = MetricGraph::unit("t", 6, &[(0, 1), (1, 2), (0, 3), (3, 4), (0, 5)]).unwrap();
        let geo = t.geodesic(2, 4).unwrap();
        assert_eq!(t.nearest_point_projection(5, &geo).unwrap(), 0);
        let empty = PathWitness {
            host: "t".into(),
            vertices: vec![],
            length: int(0),
            quality: None,
        };
        assert!(t.nearest_point_projection(5, &empty).is_err());
    }

    #[test]
    fn hausdorff_cases() {
        let g = path(5);
        assert_eq!(g.hausdorff_distance(&[1, 2], &[1, 2]).unwrap(), int(0));
        assert_eq!(g.hausdorff_distance(&[0], &[3]).unwrap(), int(3));
        assert!(g.hausdorff_distance(&[], &[3]).is_err());
    }

    #[test]
    fn half_edges_stay_exact() {
        let g = MetricGraph::from_edges("h", 3, [(0, 1, frac(1, 2)), (1, 2, frac(1, 3))]).unwrap();
        assert_eq!(g.scale(), 6);
        assert_eq!(g.distance(0, 2).unwrap(), frac(5, 6));
        assert_eq!(g.cmp_raw(5, &frac(5, 6)), Ordering::Equal);
        assert_eq!(g.floor_raw(&frac(1, 4)), 1);
    }

    #[test]
    fn nearest_sources_tie_break() {
        let g = cycle(6);
        let near = g.nearest_sources_raw(&[1, 5]);
        assert_eq!(near[3], (2, 1));
        assert_eq!(near[0], (1, 1));
        assert_eq!(near[4], (1, 5));
    }
}
