use std::collections::BTreeMap;

use num_rational::Ratio;
use rayon::prelude::*;
use serde::Serialize;

use super::{cone_locus, TreeGeometry};
use crate::electric::cone_off;
use crate::error::Result;
use crate::length::{serde_frac, Length};
use crate::metric_graph::MetricGraph;
use crate::rng;

/// Measured distortion of one vertex map between graphs.
#[derive(Clone, Debug, Serialize)]
pub struct MapDistortion {
    pub edge: usize,
    pub vertex: usize,
    /// Largest of `d_target/d_source` and `d_source/d_target` over pairs.
    #[serde(with = "serde_frac")]
    pub measured_k: Length,
    /// Additive constant needed for the declared multiplicative constant.
    #[serde(with = "serde_frac")]
    pub eps_at_declared_k: Length,
    #[serde(with = "serde_frac")]
    pub declared_k: Length,
    #[serde(with = "serde_frac")]
    pub declared_eps: Length,
    pub within_declared: bool,
    pub pairs: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProperRow {
    #[serde(with = "serde_frac")]
    pub m: Length,
    #[serde(with = "serde_frac")]
    pub n: Length,
}

/// `N(M)`: the largest vertex-space distance between points at ambient
/// distance at most `M`.
#[derive(Clone, Debug, Serialize)]
pub struct ProperTable {
    pub vertex: usize,
    pub ambient: String,
    pub sources: usize,
    pub exhaustive: bool,
    pub rows: Vec<ProperRow>,
}

impl ProperTable {
    pub fn is_monotone(&self) -> bool {
        self.rows.windows(2).all(|w| w[0].m < w[1].m && w[0].n <= w[1].n)
    }
}

/// How coarsely an edge-member's image fills the vertex-member containing it.
#[derive(Clone, Debug, Serialize)]
pub struct DensityRecord {
    pub edge: usize,
    pub vertex: usize,
    pub edge_member: String,
    pub vertex_member: String,
    #[serde(with = "serde_frac")]
    pub density: Length,
    /// Some member point is more than one unit from the image.
    pub poor: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub maps: Vec<MapDistortion>,
    pub coned_maps: Vec<MapDistortion>,
    pub strictly_type_preserving: bool,
    pub locus_is_forest: bool,
    pub properness_total: Vec<ProperTable>,
    pub properness_coned: Vec<ProperTable>,
    pub density: Vec<DensityRecord>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.strictly_type_preserving
            && self.locus_is_forest
            && self.maps.iter().all(|m| m.within_declared)
            && self.properness_total.iter().chain(&self.properness_coned).all(ProperTable::is_monotone)
    }
}

/// Measures every edge map and coned edge map, the properness of the vertex
/// inclusions into `X` and `TC(X)`, and member image density. Distance scans
/// start from at most `max_sources` vertices per space (all when smaller).
pub fn validate(geo: &TreeGeometry, max_sources: usize, seed: u64) -> Result<ValidationReport> {
    let tos = &geo.tos;
    let mut maps = Vec::new();
    let mut coned_maps = Vec::new();
    let mut density = Vec::new();
    for (e, &(v1, v2)) in tos.tree.edges().iter().enumerate() {
        let es = &tos.edges[e];
        let ce = cone_off(&es.graph, &es.family)?;
        for (end, v) in [(0usize, v1), (1, v2)] {
            let f = &es.maps[end];
            let sources = pick(es.graph.n(), max_sources, seed);
            let (k, eps, pairs) = distortion(&es.graph, &tos.vertices[v].graph, |x| f[x], &sources, es.declared_k);
            maps.push(MapDistortion {
                edge: e,
                vertex: v,
                measured_k: k,
                eps_at_declared_k: eps,
                declared_k: es.declared_k,
                declared_eps: es.declared_eps,
                within_declared: eps <= es.declared_eps,
                pairs,
            });
            let cv = &geo.coned[v];
            let inc = tos.incidence(e, end);
            let n_e = es.graph.n();
            let fhat = |x: usize| if x < n_e { f[x] } else { cv.cone(inc[x - n_e]) };
            let sources = pick(ce.graph.n(), max_sources, seed);
            let (k, eps, pairs) = distortion(&ce.graph, &cv.graph, fhat, &sources, es.declared_k);
            coned_maps.push(MapDistortion {
                edge: e,
                vertex: v,
                measured_k: k,
                eps_at_declared_k: eps,
                declared_k: es.declared_k,
                declared_eps: es.declared_eps,
                within_declared: eps <= es.declared_eps,
                pairs,
            });
            let vg = &tos.vertices[v].graph;
            for (beta, (bname, bset)) in es.family.members.iter().enumerate() {
                let a = inc[beta];
                let image: Vec<usize> = bset.iter().map(|&x| f[x]).collect();
                let to_image = vg.distance_to_set_raw(&image);
                let worst = cv.member_vertices(a).iter().map(|&z| to_image[z]).max().unwrap_or(0);
                let d = vg.to_length(worst);
                density.push(DensityRecord {
                    edge: e,
                    vertex: v,
                    edge_member: bname.clone(),
                    vertex_member: cv.index.name(a).to_string(),
                    density: d,
                    poor: d > Ratio::from_integer(1),
                });
            }
        }
    }
    let locus_is_forest = cone_locus(tos).is_ok();
    let mut properness_total = Vec::new();
    let mut properness_coned = Vec::new();
    for v in 0..tos.tree.n() {
        let xv = &tos.vertices[v].graph;
        let sources = pick(xv.n(), max_sources, seed);
        properness_total.push(proper_table(v, xv, &geo.total.graph, "X", &sources, |x| geo.total.id_of(v, x)));
        let cv = &geo.coned[v].graph;
        let sources = pick(cv.n(), max_sources, seed);
        properness_coned.push(proper_table(v, cv, &geo.tc.graph, "TC", &sources, |x| geo.tc.id_of(v, x)));
    }
    Ok(ValidationReport {
        maps,
        coned_maps,
        strictly_type_preserving: true,
        locus_is_forest,
        properness_total,
        properness_coned,
        density,
    })
}

fn pick(n: usize, max: usize, seed: u64) -> Vec<usize> {
    let all: Vec<usize> = (0..n).collect();
    if n <= max {
        return all;
    }
    let mut s: Vec<usize> = rng::shuffled(&all, seed).into_iter().take(max).collect();
    s.sort_unstable();
    s
}

/// Returns `(K, eps at declared K, pairs)` for `f: src → dst` over pairs
/// `(s, y)` with `s` a source and `y > s` (or any `y` when sampling).
fn distortion(
    src: &MetricGraph,
    dst: &MetricGraph,
    f: impl Fn(usize) -> usize + Sync,
    sources: &[usize],
    declared_k: Length,
) -> (Length, Length, u64) {
    let exhaustive = sources.len() == src.n();
    let l = num_integer::lcm(src.scale(), dst.scale()) as i128;
    let (ms, md) = (l / src.scale() as i128, l / dst.scale() as i128);
    let (kn, kd) = (*declared_k.numer() as i128, *declared_k.denom() as i128);
    // fractions as (num, den) over the common unit l
    let better = |a: (i128, i128), b: (i128, i128)| if a.0 * b.1 > b.0 * a.1 { a } else { b };
    let results: Vec<((i128, i128), (i128, i128), u64)> = sources
        .par_iter()
        .map(|&s| {
            let ds = src.sssp_raw(s);
            let dd = dst.sssp_raw(f(s));
            let mut k = (1i128, 1i128);
            let mut eps = (0i128, 1i128);
            let mut pairs = 0u64;
            let start = if exhaustive { s + 1 } else { 0 };
            for y in start..src.n() {
                if y == s {
                    continue;
                }
                let a = ds[y] as i128 * ms;
                let b = dd[f(y)] as i128 * md;
                pairs += 1;
                k = better(k, (b, a));
                k = better(k, (a, b.max(1)));
                eps = better(eps, (b * kd - kn * a, kd));
                eps = better(eps, (a * kd - b * kn, kn));
            }
            (k, eps, pairs)
        })
        .collect();
    let mut k = (1i128, 1i128);
    let mut eps = (0i128, 1i128);
    let mut pairs = 0;
    for (rk, re, p) in results {
        k = better(k, rk);
        eps = better(eps, re);
        pairs += p;
    }
    let to_len = |(n, d): (i128, i128), unit: i128| {
        let r = num_rational::Ratio::new(n, d * unit);
        Ratio::new(*r.numer() as i64, *r.denom() as i64)
    };
    (to_len(k, 1), to_len(eps, l), pairs)
}

fn proper_table(
    v: usize,
    space: &MetricGraph,
    ambient: &MetricGraph,
    name: &str,
    sources: &[usize],
    embed: impl Fn(usize) -> usize + Sync,
) -> ProperTable {
    let rows: Vec<BTreeMap<i64, i64>> = sources
        .par_iter()
        .map(|&s| {
            let ds = space.sssp_raw(s);
            let da = ambient.sssp_raw(embed(s));
            let mut m: BTreeMap<i64, i64> = BTreeMap::new();
            for y in 0..space.n() {
                let e = m.entry(da[embed(y)]).or_insert(0);
                *e = (*e).max(ds[y]);
            }
            m
        })
        .collect();
    let mut merged: BTreeMap<i64, i64> = BTreeMap::new();
    for r in rows {
        for (k, val) in r {
            let e = merged.entry(k).or_insert(0);
            *e = (*e).max(val);
        }
    }
    let mut out = Vec::with_capacity(merged.len());
    let mut running = 0i64;
    for (k, val) in merged {
        running = running.max(val);
        out.push(ProperRow {
            m: ambient.to_length(k),
            n: space.to_length(running),
        });
    }
    ProperTable {
        vertex: v,
        ambient: name.to_string(),
        sources: sources.len(),
        exhaustive: sources.len() == space.n(),
        rows: out,
    }
}

#[cfg(test)]
mod tests {
    use super::super::{BaseTree, EdgeSpace, TreeOfSpaces, VertexSpace};
    use super::*;
    use crate::electric::HoroFamily;
    use crate::length::int;

    #[test]
    fn identity_maps_are_isometries() {
        let e: Vec<_> = (0..5).map(|i| (i, (i + 1) % 5)).collect();
        let y = MetricGraph::unit("Y", 5, &e).unwrap();
        let fam = HoroFamily::new("Y", [("H".to_string(), vec![0])], int(1));
        let vs = VertexSpace { graph: y.clone(), family: fam.clone() };
        let es = EdgeSpace {
            graph: y.clone(),
            family: fam,
            maps: [(0..5).collect(), (0..5).collect()],
            declared_k: int(1),
            declared_eps: int(0),
        };
        let tos = TreeOfSpaces::new("seg", BaseTree::path(1), vec![vs.clone(), vs], vec![es]).unwrap();
        let geo = TreeGeometry::new(tos, None).unwrap();
        let r = validate(&geo, 1000, 0).unwrap();
        assert!(r.passed());
        for m in r.maps.iter().chain(&r.coned_maps) {
            assert_eq!((m.measured_k, m.eps_at_declared_k), (int(1), int(0)));
        }
        assert_eq!(r.density[0].density, int(0));
    }

    #[test]
    fn single_vertex_properness_is_identity() {
        let e: Vec<_> = (0..6).map(|i| (i, i + 1)).collect();
        let y = MetricGraph::unit("Y", 7, &e).unwrap();
        let tos = TreeOfSpaces::new(
            "one",
            BaseTree::single(),
            vec![VertexSpace { graph: y, family: HoroFamily::empty("Y") }],
            vec![],
        )
        .unwrap();
        let geo = TreeGeometry::new(tos, None).unwrap();
        let r = validate(&geo, 1000, 0).unwrap();
        assert!(r.passed());
        for row in &r.properness_total[0].rows {
            assert_eq!(row.m, row.n);
        }
    }
}
