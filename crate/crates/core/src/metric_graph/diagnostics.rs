//! Empirical projection constants for hyperbolic graphs.

use std::collections::HashMap;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::MetricGraph;
use crate::error::{Error, Result};
use crate::length::{serde_frac, serde_frac_opt, Length};
use crate::rng;

/// Which vertex pairs a diagnostic examines.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairScan {
    Exhaustive,
    Sampled { count: usize, seed: u64 },
}

impl PairScan {
    pub fn pairs(&self, domain: &[usize]) -> Vec<(usize, usize)> {
        match *self {
            PairScan::Exhaustive => rng::sample_pairs(domain, usize::MAX, 0),
            PairScan::Sampled { count, seed } => rng::sample_pairs(domain, count, seed),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LipschitzMeasure {
    /// Smallest `P` with `d(π x, π y) <= P·d(x, y) + P` on the scanned pairs.
    #[serde(with = "serde_frac")]
    pub constant: Length,
    pub witness: Option<(usize, usize)>,
    pub pairs: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrackingMeasure {
    /// Smallest `C1` such that the broken path through the projections stays
    /// within `C1` of `[x, y]`, over pairs whose projections are `>= D` apart.
    #[serde(with = "serde_frac_opt")]
    pub constant: Option<Length>,
    pub qualifying_pairs: u64,
    pub pairs: u64,
    pub witness: Option<(usize, usize)>,
}

struct RowCache<'a> {
    g: &'a MetricGraph,
    rows: HashMap<usize, Vec<i64>>,
}

impl<'a> RowCache<'a> {
    fn new(g: &'a MetricGraph) -> Self {
        RowCache {
            g,
            rows: HashMap::new(),
        }
    }

    fn row(&mut self, v: usize) -> &[i64] {
        let g = self.g;
        self.rows.entry(v).or_insert_with(|| g.sssp_raw(v))
    }
}

fn check_target(g: &MetricGraph, target: &[usize], domain: &[usize]) -> Result<()> {
    if target.is_empty() {
        return Err(Error::domain("projection target is empty"));
    }
    for &v in target.iter().chain(domain) {
        g.check_vertex(v)?;
    }
    Ok(())
}

/// Measures the coarse-Lipschitz constant of nearest-point projection onto
/// `target` over pairs drawn from `domain`.
pub fn measure_projection_lipschitz(
    g: &MetricGraph,
    target: &[usize],
    domain: &[usize],
    scan: PairScan,
) -> Result<LipschitzMeasure> {
    check_target(g, target, domain)?;
    let proj = g.nearest_sources_raw(target);
    let mut cache = RowCache::new(g);
    let pairs = scan.pairs(domain);
    let (mut num, mut den) = (0i64, 1i64);
    let mut witness = None;
    for &(x, y) in &pairs {
        let dxy = cache.row(x)[y];
        let (px, py) = (proj[x].1, proj[y].1);
        let dp = cache.row(px)[py];
        let d = dxy + g.scale();
        if (dp as i128) * (den as i128) > (num as i128) * (d as i128) {
            num = dp;
            den = d;
            witness = Some((x, y));
        }
    }
    Ok(LipschitzMeasure {
        constant: Ratio::new(num, den),
        witness,
        pairs: pairs.len() as u64,
    })
}

/// Measures how far `[x, π x] ∪ [π x, π y] ∪ [π y, y]` strays from `[x, y]`
/// when the projections are at least `d_threshold` apart.
pub fn measure_projection_tracking(
    g: &MetricGraph,
    target: &[usize],
    domain: &[usize],
    d_threshold: &Length,
    scan: PairScan,
) -> Result<TrackingMeasure> {
    check_target(g, target, domain)?;
    let proj = g.nearest_sources_raw(target);
    let mut cache = RowCache::new(g);
    let pairs = scan.pairs(domain);
    let mut best: Option<i64> = None;
    let mut witness = None;
    let mut qualifying = 0u64;
    for &(x, y) in &pairs {
        let (px, py) = (proj[x].1, proj[y].1);
        if g.cmp_raw(cache.row(px)[py], d_threshold).is_lt() {
            continue;
        }
        qualifying += 1;
        let geo = g.geodesic_with(x, y, &cache.row(y).to_vec());
        let mut broken = g.geodesic_with(x, px, &cache.row(px).to_vec());
        broken.extend(g.geodesic_with(px, py, &cache.row(py).to_vec()));
        broken.extend(g.geodesic_with(py, y, &cache.row(y).to_vec()));
        let to_geo = g.distance_to_set_raw(&geo);
        let worst = broken.iter().map(|&v| to_geo[v]).max().unwrap_or(0);
        if best.is_none_or(|b| worst > b) {
            best = Some(worst);
            witness = Some((x, y));
        }
    }
    Ok(TrackingMeasure {
        constant: best.map(|b| g.to_length(b)),
        qualifying_pairs: qualifying,
        pairs: pairs.len() as u64,
        witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::length::int;

    #[test]
    fn tree_projection_is_one_lipschitz() {
        // binary tree of depth 3, target a root-to-leaf geodesic
        let mut e = Vec::new();
        for v in 1..15usize {
            e.push(((v - 1) / 2, v));
        }
        let g = MetricGraph::unit("bt", 15, &e).unwrap();
        let target = g.geodesic(7, 14).unwrap().vertices;
        let all: Vec<usize> = (0..15).collect();
        let m = measure_projection_lipschitz(&g, &target, &all, PairScan::Exhaustive).unwrap();
        assert!(m.constant <= int(1));
        assert_eq!(m.pairs, 105);
        let t = measure_projection_tracking(&g, &target, &all, &int(1), PairScan::Exhaustive)
            .unwrap();
        // in a tree the broken path is the geodesic itself
        assert_eq!(t.constant, Some(int(0)));
        assert!(t.qualifying_pairs > 0);
    }
}
