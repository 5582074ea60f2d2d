//! The hyperbolic ladder over a tree of spaces, its retraction and vertical
//! rays.

mod measure;
mod rays;
mod retraction;

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::electric::{ElectricProjector, ElectroAmbient};
use crate::error::{Error, Result};
use crate::length::{serde_frac, Length};
use crate::metric_graph::{GeometryParams, Param, PathWitness};
use crate::tree_spaces::TreeGeometry;

pub use measure::{ladder_quasiconvexity, subpiece_constants, QuasiconvexityMeasure, SubpieceConstants};
pub use rays::{all_rays, check_depth_escape, ray_constant, vertical_ray, DepthEscape, RayStep, VerticalRay};
pub use retraction::{measure_retraction_lipschitz, retract, CaseStat, Retraction, RetractionMeasure};

/// A pair `(p_e, q_e)` flowed across a child edge, with the coned geodesic
/// `μ̂` joining it.
#[derive(Clone, Debug, Serialize)]
pub struct Subpiece {
    pub edge: usize,
    pub child: usize,
    pub p: usize,
    pub q: usize,
    /// Separation in the glued vertex space, the quantity maximized.
    #[serde(with = "serde_frac")]
    pub glued_separation: Length,
    /// Separation in the coned vertex space, compared with `D`.
    #[serde(with = "serde_frac")]
    pub coned_separation: Length,
    pub candidates: usize,
    pub mu: PathWitness,
}

#[derive(Clone, Debug, Serialize)]
pub struct LadderPiece {
    pub vertex: usize,
    /// Stage at which the vertex joined the support, starting at 1.
    pub stage: usize,
    /// `(parent vertex, edge)` for non-root pieces.
    pub parent: Option<(usize, usize)>,
    pub lambda: PathWitness,
    pub subpieces: Vec<Subpiece>,
}

/// `B_λ̂` as one segment per vertex of the support subtree `T1`.
#[derive(Clone, Debug, Serialize)]
pub struct Ladder {
    pub root: usize,
    #[serde(with = "serde_frac")]
    pub d: Length,
    #[serde(with = "serde_frac")]
    pub c: Length,
    pub pieces: BTreeMap<usize, LadderPiece>,
    /// `stages[m]`: vertices added at stage `m + 1`.
    pub stages: Vec<Vec<usize>>,
}

/// Candidates of one Step-1 scan: image points of the edge map within `C` of
/// the electro-ambient path in the glued vertex space.
pub(crate) fn candidates(geo: &TreeGeometry, v: usize, e: usize, mu: &ElectroAmbient, c: &Length) -> Vec<usize> {
    let gs = &geo.glued[v];
    let end = geo.tos.tree.end_of(e, v).expect("edge incident to v");
    let sources: Vec<(usize, i64)> = mu.path.vertices.iter().map(|&x| (x, 0)).collect();
    let bound = gs.graph.floor_raw(c);
    let near = gs.graph.dijkstra_raw(&sources, Some(bound));
    let mut out: Vec<usize> = geo.tos.map(e, end).iter().copied().filter(|&y| near[y] <= bound).collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Step 1 at `v` across `e`: the maximal pair among the candidates and
/// whether it is separated by more than `D` in the coned metric.
fn step_one(
    geo: &TreeGeometry,
    v: usize,
    e: usize,
    child: usize,
    mu: &ElectroAmbient,
    d: &Length,
    c: &Length,
) -> Result<Option<Subpiece>> {
    let cand = candidates(geo, v, e, mu, c);
    if cand.len() < 2 {
        return Ok(None);
    }
    let gs = &geo.glued[v];
    let rows: Vec<Vec<i64>> = cand.par_iter().map(|&s| gs.graph.sssp_raw(s)).collect();
    let mut best = (-1i64, 0usize, 0usize);
    for (i, row) in rows.iter().enumerate() {
        for &q in &cand[i + 1..] {
            if row[q] > best.0 {
                best = (row[q], cand[i], q);
            }
        }
    }
    let (raw, p, q) = best;
    let cs = &geo.coned[v];
    let coned_sep = cs.graph.distance(p, q)?;
    if coned_sep <= *d {
        return Ok(None);
    }
    Ok(Some(Subpiece {
        edge: e,
        child,
        p,
        q,
        glued_separation: gs.graph.to_length(raw),
        coned_separation: coned_sep,
        candidates: cand.len(),
        mu: cs.electric_geodesic_nb(p, q)?,
    }))
}

/// Builds `B_λ̂` from an electric geodesic `lambda` in the coned root space,
/// with `D` and `C` taken from `params`.
pub fn build_ladder(geo: &TreeGeometry, lambda: &PathWitness, params: &GeometryParams) -> Result<Ladder> {
    build_ladder_with(geo, lambda, params.require(Param::D)?, params.require(Param::C)?)
}

pub fn build_ladder_with(geo: &TreeGeometry, lambda: &PathWitness, d: Length, c: Length) -> Result<Ladder> {
    let root = geo.tos.tree.root();
    let cs = &geo.coned[root];
    lambda.validate(&cs.graph)?;
    for x in [lambda.start(), lambda.end()] {
        if !cs.index.is_off_member(x) {
            return Err(Error::domain(format!(
                "ladder geodesic endpoint {x} lies in a member or is a cone point"
            )));
        }
    }
    let mut pieces = BTreeMap::new();
    pieces.insert(
        root,
        LadderPiece {
            vertex: root,
            stage: 1,
            parent: None,
            lambda: lambda.clone(),
            subpieces: Vec::new(),
        },
    );
    let mut stages = vec![vec![root]];
    loop {
        let stage = stages.len();
        let frontier = stages.last().unwrap().clone();
        let mut next = Vec::new();
        for v in frontier {
            let piece = &pieces[&v];
            let mu = ElectroAmbient::new(&geo.coned[v], &geo.glued[v], &piece.lambda)?;
            let children = geo.tos.tree.children(v);
            let found: Vec<Option<Subpiece>> = children
                .par_iter()
                .map(|&(w, e)| step_one(geo, v, e, w, &mu, &d, &c))
                .collect::<Result<_>>()?;
            let subs: Vec<Subpiece> = found.into_iter().flatten().collect();
            for s in &subs {
                let pw = geo.phi(s.child, s.edge, s.p)?;
                let qw = geo.phi(s.child, s.edge, s.q)?;
                let lw = geo.coned[s.child].electric_geodesic_nb(pw, qw)?;
                pieces.insert(
                    s.child,
                    LadderPiece {
                        vertex: s.child,
                        stage: stage + 1,
                        parent: Some((v, s.edge)),
                        lambda: lw,
                        subpieces: Vec::new(),
                    },
                );
                next.push(s.child);
            }
            pieces.get_mut(&v).unwrap().subpieces = subs;
        }
        if next.is_empty() {
            break;
        }
        next.sort_unstable();
        stages.push(next);
    }
    Ok(Ladder {
        root,
        d,
        c,
        pieces,
        stages,
    })
}

impl Ladder {
    /// Vertices of `T1`.
    pub fn support(&self) -> Vec<usize> {
        self.pieces.keys().copied().collect()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.pieces.contains_key(&v)
    }

    /// `B^m(λ̂)` as `TC(X)` vertices, for `m >= 1`.
    pub fn stage_points(&self, geo: &TreeGeometry, m: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .pieces
            .values()
            .filter(|p| p.stage <= m)
            .flat_map(|p| p.lambda.vertices.iter().map(move |&x| geo.tc.id_of(p.vertex, x)))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// `B_λ̂` as `TC(X)` vertices.
    pub fn points(&self, geo: &TreeGeometry) -> Vec<usize> {
        self.stage_points(geo, self.stages.len())
    }

    /// `λ^b_v`: vertices of `λ̂_v` lying outside every member, in path order.
    pub fn off_member(&self, geo: &TreeGeometry, v: usize) -> Vec<usize> {
        let Some(piece) = self.pieces.get(&v) else {
            return Vec::new();
        };
        let idx = &geo.coned[v].index;
        let mut seen = BTreeSet::new();
        piece
            .lambda
            .vertices
            .iter()
            .copied()
            .filter(|&x| idx.is_off_member(x) && seen.insert(x))
            .collect()
    }

    /// `B^b` as `(tree vertex, local vertex)` pairs.
    pub fn off_member_points(&self, geo: &TreeGeometry) -> Vec<(usize, usize)> {
        self.pieces
            .keys()
            .flat_map(|&v| self.off_member(geo, v).into_iter().map(move |x| (v, x)))
            .collect()
    }

    /// Electric projections onto every `λ̂_v`.
    pub fn projectors(&self, geo: &TreeGeometry) -> Result<BTreeMap<usize, ElectricProjector>> {
        let list: Vec<(usize, ElectricProjector)> = self
            .pieces
            .par_iter()
            .map(|(&v, p)| Ok((v, ElectricProjector::new(&geo.coned[v], &geo.glued[v], &p.lambda)?)))
            .collect::<Result<_>>()?;
        Ok(list.into_iter().collect())
    }

    /// Rechecks the structural invariants: the root segment, a support
    /// subtree hanging from the root, `D`-separated pairs, segments joining
    /// the flowed pairs, and stages that only grow.
    pub fn check_invariants(&self, geo: &TreeGeometry, lambda: &PathWitness) -> Result<()> {
        let tree = &geo.tos.tree;
        let root = self
            .pieces
            .get(&self.root)
            .ok_or_else(|| Error::invariant("ladder has no root piece"))?;
        if root.lambda != *lambda || self.root != tree.root() {
            return Err(Error::invariant("root segment differs from the source geodesic"));
        }
        for (&v, piece) in &self.pieces {
            if let Some((u, e)) = piece.parent {
                if tree.parent(v) != Some((u, e)) || !self.contains(u) {
                    return Err(Error::invariant(format!("piece {v} does not hang from its parent {u}")));
                }
                let sub = self.pieces[&u]
                    .subpieces
                    .iter()
                    .find(|s| s.child == v)
                    .ok_or_else(|| Error::invariant(format!("no subpiece of {u} leads to {v}")))?;
                let ends = (geo.phi(v, e, sub.p)?, geo.phi(v, e, sub.q)?);
                if (piece.lambda.start(), piece.lambda.end()) != ends {
                    return Err(Error::invariant(format!("segment over {v} does not join the flowed pair")));
                }
                if piece.stage != self.pieces[&u].stage + 1 {
                    return Err(Error::invariant(format!("piece {v} skips a stage")));
                }
            }
            for s in &piece.subpieces {
                if s.coned_separation <= self.d {
                    return Err(Error::invariant(format!(
                        "subpiece of {v} across edge {} is not separated by more than D",
                        s.edge
                    )));
                }
            }
        }
        let mut prev: BTreeSet<usize> = BTreeSet::new();
        for m in 1..=self.stages.len() {
            let cur: BTreeSet<usize> = self.stage_points(geo, m).into_iter().collect();
            if !prev.is_subset(&cur) {
                return Err(Error::invariant(format!("stage {m} loses points of stage {}", m - 1)));
            }
            prev = cur;
        }
        Ok(())
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::electric::HoroFamily;
    use crate::length::int;
    use crate::metric_graph::MetricGraph;
    use crate::tree_spaces::{BaseTree, EdgeSpace, TreeOfSpaces, VertexSpace};

    pub(crate) fn path_graph(n: usize) -> MetricGraph {
        let e: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        MetricGraph::unit("Y", n, &e).unwrap()
    }

    pub(crate) fn identity_segment(len: usize, y: &MetricGraph, fam: &HoroFamily) -> TreeGeometry {
        let vs = VertexSpace {
            graph: y.clone(),
            family: fam.clone(),
        };
        let es = EdgeSpace {
            graph: y.clone(),
            family: fam.clone(),
            maps: [(0..y.n()).collect(), (0..y.n()).collect()],
            declared_k: int(1),
            declared_eps: int(0),
        };
        let tos = TreeOfSpaces::new("seg", BaseTree::path(len), vec![vs; len + 1], vec![es; len]).unwrap();
        TreeGeometry::new(tos, None).unwrap()
    }

    pub(crate) fn single(y: &MetricGraph, fam: &HoroFamily) -> TreeGeometry {
        let tos = TreeOfSpaces::new(
            "one",
            BaseTree::single(),
            vec![VertexSpace {
                graph: y.clone(),
                family: fam.clone(),
            }],
            vec![],
        )
        .unwrap();
        TreeGeometry::new(tos, None).unwrap()
    }

    #[test]
    fn single_vertex_ladder_is_the_geodesic() {
        let y = path_graph(8);
        let geo = single(&y, &HoroFamily::empty("Y"));
        let lam = geo.coned[0].graph.geodesic(1, 6).unwrap();
        let l = build_ladder_with(&geo, &lam, int(1), int(1)).unwrap();
        assert_eq!(l.support(), vec![0]);
        assert_eq!(l.points(&geo), lam.vertices);
        l.check_invariants(&geo, &lam).unwrap();
    }

    #[test]
    fn identity_segment_flows_the_geodesic() {
        let y = path_graph(10);
        let geo = identity_segment(2, &y, &HoroFamily::empty("Y"));
        let lam = geo.coned[0].graph.geodesic(2, 8).unwrap();
        let l = build_ladder_with(&geo, &lam, int(3), int(1)).unwrap();
        assert_eq!(l.support(), vec![0, 1, 2]);
        // exhaustive recomputation: the candidates are the points within 1 of
        // [2, 8], the farthest pair is (1, 9), separated by 8 > 3
        let s = &l.pieces[&0].subpieces[0];
        assert_eq!((s.p, s.q, s.candidates), (1, 9, 9));
        assert_eq!(s.coned_separation, int(8));
        assert_eq!(l.pieces[&1].lambda.vertices, (1..=9).collect::<Vec<_>>());
        assert_eq!(l.stages, vec![vec![0], vec![1], vec![2]]);
        l.check_invariants(&geo, &lam).unwrap();
    }

    #[test]
    fn short_geodesic_does_not_descend() {
        let y = path_graph(10);
        let geo = identity_segment(1, &y, &HoroFamily::empty("Y"));
        let lam = geo.coned[0].graph.geodesic(4, 5).unwrap();
        let l = build_ladder_with(&geo, &lam, int(5), int(1)).unwrap();
        assert_eq!(l.support(), vec![0]);
    }

    #[test]
    fn member_endpoints_are_rejected() {
        let y = path_graph(6);
        let fam = HoroFamily::new("Y", [("H".to_string(), vec![0, 1])], int(1));
        let geo = single(&y, &fam);
        let lam = geo.coned[0].graph.geodesic(0, 5).unwrap();
        assert!(matches!(build_ladder_with(&geo, &lam, int(1), int(1)), Err(Error::Domain(_))));
    }
}
