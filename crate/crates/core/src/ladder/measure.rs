use rayon::prelude::*;
use serde::Serialize;

use super::{candidates, Ladder};
use crate::electric::ElectroAmbient;
use crate::error::Result;
use crate::length::{serde_frac, Length};
use crate::rng;
use crate::tree_spaces::TreeGeometry;

/// How far `TC(X)`-geodesics between points of `B_λ̂` stray from it.
#[derive(Clone, Debug, Serialize)]
pub struct QuasiconvexityMeasure {
    pub pairs: usize,
    #[serde(with = "serde_frac")]
    pub bound: Length,
    /// Pair realizing the bound and the farthest geodesic vertex.
    pub witness: Option<(usize, usize, usize)>,
}

/// Samples up to `pairs` pairs of `B_λ̂` and measures the largest distance
/// from a vertex of their `TC(X)`-geodesic to `B_λ̂`.
pub fn ladder_quasiconvexity(
    geo: &TreeGeometry,
    ladder: &Ladder,
    pairs: usize,
    seed: u64,
) -> QuasiconvexityMeasure {
    let g = &geo.tc.graph;
    let pts = ladder.points(geo);
    let sampled = rng::sample_pairs(&pts, pairs, seed);
    let to_b = g.distance_to_set_raw(&pts);
    let per: Vec<(i64, (usize, usize, usize))> = sampled
        .par_iter()
        .map(|&(a, b)| {
            let to_b_end = g.sssp_raw(b);
            g.geodesic_with(a, b, &to_b_end)
                .into_iter()
                .map(|z| (to_b[z], (a, b, z)))
                .max_by_key(|&(d, (_, _, z))| (d, std::cmp::Reverse(z)))
                .unwrap()
        })
        .collect();
    let best = per.iter().copied().max_by_key(|&(d, w)| (d, std::cmp::Reverse(w)));
    QuasiconvexityMeasure {
        pairs: sampled.len(),
        bound: g.to_length(best.map_or(0, |b| b.0)),
        witness: best.map(|b| b.1),
    }
}

/// Measured constants for the maximal subpieces: how far candidate points
/// sit from `μ`, and how far nearest-point projections to `λ_v` and to `μ`
/// drift apart on the edge image, both in the glued vertex space.
#[derive(Clone, Debug, Serialize)]
pub struct SubpieceConstants {
    pub subpieces: usize,
    #[serde(with = "serde_frac")]
    pub p6: Length,
    #[serde(with = "serde_frac")]
    pub p7: Length,
}

pub fn subpiece_constants(geo: &TreeGeometry, ladder: &Ladder) -> Result<SubpieceConstants> {
    let jobs: Vec<(usize, usize)> = ladder
        .pieces
        .iter()
        .flat_map(|(&v, p)| (0..p.subpieces.len()).map(move |i| (v, i)))
        .collect();
    let per: Vec<(i64, i64, i64)> = jobs
        .par_iter()
        .map(|&(v, i)| {
            let piece = &ladder.pieces[&v];
            let s = &piece.subpieces[i];
            let (cs, gs) = (&geo.coned[v], &geo.glued[v]);
            let mu1 = ElectroAmbient::new(cs, gs, &piece.lambda)?;
            let mu2 = ElectroAmbient::new(cs, gs, &s.mu)?;
            let to_mu2 = gs.graph.distance_to_set_raw(&mu2.path.vertices);
            let p6 = candidates(geo, v, s.edge, &mu1, &ladder.c)
                .iter()
                .map(|&r| to_mu2[r])
                .max()
                .unwrap_or(0);
            let near1 = gs.graph.nearest_sources_raw(&mu1.path.vertices);
            let near2 = gs.graph.nearest_sources_raw(&mu2.path.vertices);
            let end = geo.tos.tree.end_of(s.edge, v).unwrap();
            let mut image: Vec<usize> = geo.tos.map(s.edge, end).to_vec();
            image.sort_unstable();
            image.dedup();
            let mut pi1: Vec<usize> = image.iter().map(|&z| near1[z].1).collect();
            pi1.sort_unstable();
            pi1.dedup();
            let rows: std::collections::BTreeMap<usize, Vec<i64>> =
                pi1.iter().map(|&a| (a, gs.graph.sssp_raw(a))).collect();
            let p7 = image
                .iter()
                .map(|&z| rows[&near1[z].1][near2[z].1])
                .max()
                .unwrap_or(0);
            Ok((p6, p7, gs.graph.scale()))
        })
        .collect::<Result<_>>()?;
    let mut p6 = Length::from_integer(0);
    let mut p7 = Length::from_integer(0);
    for (a, b, scale) in per {
        p6 = p6.max(Length::new(a, scale));
        p7 = p7.max(Length::new(b, scale));
    }
    Ok(SubpieceConstants {
        subpieces: jobs.len(),
        p6,
        p7,
    })
}
