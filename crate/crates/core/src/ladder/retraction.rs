use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::Ladder;
use crate::error::Result;
use crate::length::{serde_frac, Length};
use crate::tree_spaces::TreeGeometry;

/// `Π̂_λ̂` tabulated on every vertex of `TC(X)`.
#[derive(Clone, Debug)]
pub struct Retraction {
    image: Vec<usize>,
    /// `x` itself over `T1`; otherwise the chosen nearest point over `T1`.
    anchor: Vec<usize>,
}

impl Retraction {
    pub fn new(geo: &TreeGeometry, ladder: &Ladder) -> Result<Self> {
        let tc = &geo.tc;
        let projectors = ladder.projectors(geo)?;
        let over_t1: Vec<usize> = ladder.support().into_iter().flat_map(|v| tc.block(v)).collect();
        let nearest = tc.graph.nearest_sources_raw(&over_t1);
        let anchor: Vec<usize> = (0..tc.graph.n())
            .map(|x| if ladder.contains(tc.vertex_of(x)) { x } else { nearest[x].1 })
            .collect();
        let image = anchor
            .iter()
            .map(|&a| {
                let v = tc.vertex_of(a);
                tc.id_of(v, projectors[&v].project(tc.local_of(a)).coned)
            })
            .collect();
        Ok(Retraction { image, anchor })
    }

    pub fn retract(&self, x: usize) -> usize {
        self.image[x]
    }

    pub fn anchor(&self, x: usize) -> usize {
        self.anchor[x]
    }

    pub fn image(&self) -> &[usize] {
        &self.image
    }
}

/// `Π̂_λ̂(x)` for a single vertex of `TC(X)`.
pub fn retract(geo: &TreeGeometry, ladder: &Ladder, x: usize) -> Result<usize> {
    geo.tc.graph.check_vertex(x)?;
    Ok(Retraction::new(geo, ladder)?.retract(x))
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct CaseStat {
    pub pairs: u64,
    #[serde(with = "serde_frac")]
    pub max: Length,
    pub witness: Option<(usize, usize)>,
}

/// Largest `d(Π̂x, Π̂y)` over pairs at distance at most 1 in `TC(X)`, split
/// into pairs over one vertex of `T1`, over two adjacent vertices of `T1`,
/// and pairs with a point off `T1`.
#[derive(Clone, Debug, Serialize)]
pub struct RetractionMeasure {
    #[serde(with = "serde_frac")]
    pub c0: Length,
    pub same_vertex: CaseStat,
    pub adjacent_vertices: CaseStat,
    pub outside: CaseStat,
    /// Off-`T1` pairs whose anchors lie over different vertices of `T1`.
    pub outside_split_anchors: u64,
}

pub fn measure_retraction_lipschitz(geo: &TreeGeometry, ladder: &Ladder) -> Result<RetractionMeasure> {
    let ret = Retraction::new(geo, ladder)?;
    let g = &geo.tc.graph;
    let tc = &geo.tc;
    let unit = g.scale();
    let mut targets: Vec<usize> = ret.image.clone();
    targets.sort_unstable();
    targets.dedup();
    let rows: BTreeMap<usize, Vec<i64>> = targets.par_iter().map(|&t| (t, g.sssp_raw(t))).collect();
    // per source: (case, d(Πx, Πy) raw, y), plus split-anchor count
    let per: Vec<([(u64, i64, Option<(usize, usize)>); 3], u64)> = (0..g.n())
        .into_par_iter()
        .map(|x| {
            let near = g.dijkstra_raw(&[(x, 0)], Some(unit));
            let mut acc = [(0u64, -1i64, None); 3];
            let mut split = 0;
            for (y, &d) in near.iter().enumerate() {
                if y <= x || d > unit {
                    continue;
                }
                let (vx, vy) = (tc.vertex_of(x), tc.vertex_of(y));
                let case = if !ladder.contains(vx) || !ladder.contains(vy) {
                    if tc.vertex_of(ret.anchor[x]) != tc.vertex_of(ret.anchor[y]) {
                        split += 1;
                    }
                    2
                } else if vx == vy {
                    0
                } else {
                    1
                };
                let dd = rows[&ret.image[x]][ret.image[y]];
                let a = &mut acc[case];
                a.0 += 1;
                if dd > a.1 {
                    a.1 = dd;
                    a.2 = Some((x, y));
                }
            }
            (acc, split)
        })
        .collect();
    let mut acc = [(0u64, -1i64, None); 3];
    let mut split = 0;
    for (a, s) in per {
        split += s;
        for i in 0..3 {
            acc[i].0 += a[i].0;
            if a[i].1 > acc[i].1 {
                acc[i].1 = a[i].1;
                acc[i].2 = a[i].2;
            }
        }
    }
    let stat = |(pairs, raw, witness): (u64, i64, Option<(usize, usize)>)| CaseStat {
        pairs,
        max: g.to_length(raw.max(0)),
        witness,
    };
    let [a, b, c] = acc;
    let c0 = g.to_length(a.1.max(b.1).max(c.1).max(0));
    Ok(RetractionMeasure {
        c0,
        same_vertex: stat(a),
        adjacent_vertices: stat(b),
        outside: stat(c),
        outside_split_anchors: split,
    })
}

#[cfg(test)]
mod tests {
    use super::super::build_ladder_with;
    use super::super::tests::{identity_segment, path_graph, single};
    use super::*;
    use crate::electric::HoroFamily;
    use crate::length::int;
    use crate::metric_graph::MetricGraph;

    #[test]
    fn points_on_the_segment_are_fixed() {
        let y = path_graph(9);
        let geo = identity_segment(1, &y, &HoroFamily::empty("Y"));
        let lam = geo.coned[0].graph.geodesic(1, 7).unwrap();
        let l = build_ladder_with(&geo, &lam, int(2), int(1)).unwrap();
        let r = Retraction::new(&geo, &l).unwrap();
        for v in l.support() {
            for &x in &l.pieces[&v].lambda.vertices {
                let t = geo.tc.id_of(v, x);
                assert_eq!(r.retract(t), t);
            }
        }
        assert_eq!(retract(&geo, &l, geo.tc.id_of(0, 8)).unwrap(), geo.tc.id_of(0, 7));
    }

    #[test]
    fn tree_projection_is_one_lipschitz() {
        // binary tree of depth 3, geodesic between two leaves
        let e: Vec<_> = (1..15).map(|i| ((i - 1) / 2, i)).collect();
        let y = MetricGraph::unit("Y", 15, &e).unwrap();
        let geo = single(&y, &HoroFamily::empty("Y"));
        let lam = geo.coned[0].graph.geodesic(7, 12).unwrap();
        let l = build_ladder_with(&geo, &lam, int(1), int(1)).unwrap();
        let m = measure_retraction_lipschitz(&geo, &l).unwrap();
        assert!(m.c0 <= int(1));
        assert_eq!(m.same_vertex.pairs, 14);
        assert_eq!(m.adjacent_vertices.pairs + m.outside.pairs, 0);
    }

    #[test]
    fn identity_segment_cases() {
        let y = path_graph(12);
        let geo = identity_segment(3, &y, &HoroFamily::empty("Y"));
        let lam = geo.coned[0].graph.geodesic(3, 8).unwrap();
        // each stage widens the segment by one point on either side
        let l = build_ladder_with(&geo, &lam, int(6), int(1)).unwrap();
        assert_eq!(l.support(), vec![0, 1, 2, 3]);
        let m = measure_retraction_lipschitz(&geo, &l).unwrap();
        assert_eq!(m.outside.pairs, 0);
        assert!(m.adjacent_vertices.pairs > 0);
        assert!(m.adjacent_vertices.max <= int(2));
        // the widest pair (2, 9) is only 7 apart, so nothing flows
        let l = build_ladder_with(&geo, &lam, int(8), int(1)).unwrap();
        assert_eq!(l.support(), vec![0]);
        let m = measure_retraction_lipschitz(&geo, &l).unwrap();
        assert_eq!(m.adjacent_vertices.pairs, 0);
        assert!(m.outside.pairs > 0);
        assert_eq!(m.outside_split_anchors, 0);
        assert!(m.c0 <= int(1));
    }
}
