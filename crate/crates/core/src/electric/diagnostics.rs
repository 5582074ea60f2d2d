//! Measured projection and representative constants in the electric space.

use std::collections::{BTreeSet, HashMap};

use num_rational::Ratio;

use super::{ConedSpace, ElectricProjector, GluedSpace};
use crate::error::Result;
use crate::length::Length;
use crate::metric_graph::{LipschitzMeasure, PairScan};

/// Hausdorff distance, in the coned metric, between the electric geodesic
/// from `u` to `v` and the collapse of the glued-space geodesic.
pub fn electric_tracking(cs: &ConedSpace, gs: &GluedSpace, u: usize, v: usize) -> Result<Length> {
    let beta = cs.electric_geodesic_nb(u, v)?;
    let gamma = gs.graph.geodesic(u, v)?;
    let gamma_hat = cs.collapse_glued_path(gs, &gamma.vertices);
    cs.graph.hausdorff_distance(&beta.vertices, &gamma_hat)
}

/// How far glued-space geodesics between horoball vertices stray from the
/// horoball, over the scanned pairs.
pub fn horoball_quasiconvexity(gs: &GluedSpace, member: usize, scan: PairScan) -> Result<Length> {
    let verts = gs.horoball_vertices(member);
    let to_ball = gs.graph.distance_to_set_raw(&verts);
    let mut by_target: HashMap<usize, Vec<usize>> = HashMap::new();
    for (a, b) in scan.pairs(&verts) {
        by_target.entry(b).or_default().push(a);
    }
    let mut worst = 0i64;
    for (b, sources) in by_target {
        let to_b = gs.graph.sssp_raw(b);
        for a in sources {
            let path = gs.graph.geodesic_with(a, b, &to_b);
            worst = worst.max(path.iter().map(|&w| to_ball[w]).max().unwrap_or(0));
        }
    }
    Ok(gs.graph.to_length(worst))
}

/// Largest coned distance between the projections of two vertices of one
/// member, over all members: the discrepancy caused by choosing a
/// representative for a cone vertex.
pub fn representative_discrepancy(cs: &ConedSpace, proj: &ElectricProjector) -> Length {
    let mut rows: HashMap<usize, Vec<i64>> = HashMap::new();
    let mut worst = 0i64;
    for set in cs.members() {
        let images: BTreeSet<usize> = set.iter().map(|&z| proj.project(z).coned).collect();
        if images.len() < 2 {
            continue;
        }
        let images: Vec<usize> = images.into_iter().collect();
        for (i, &a) in images.iter().enumerate() {
            let row = rows.entry(a).or_insert_with(|| cs.graph.sssp_raw(a));
            for &b in &images[i + 1..] {
                worst = worst.max(row[b]);
            }
        }
    }
    cs.graph.to_length(worst)
}

/// Smallest `P` with `d(π x, π y) <= P·d(x, y) + P` in the coned metric for
/// the electric projection, over pairs from `domain`.
pub fn electric_projection_lipschitz(
    cs: &ConedSpace,
    proj: &ElectricProjector,
    domain: &[usize],
    scan: PairScan,
) -> Result<LipschitzMeasure> {
    for &v in domain {
        cs.graph.check_vertex(v)?;
    }
    let g = &cs.graph;
    let mut image_rows: HashMap<usize, Vec<i64>> = HashMap::new();
    for &v in &proj.electric_vertices() {
        image_rows.insert(v, g.sssp_raw(v));
    }
    let mut by_source: HashMap<usize, Vec<usize>> = HashMap::new();
    let pairs = scan.pairs(domain);
    for &(x, y) in &pairs {
        by_source.entry(x).or_default().push(y);
    }
    let mut sources: Vec<usize> = by_source.keys().copied().collect();
    sources.sort_unstable();
    let (mut num, mut den) = (0i64, 1i64);
    let mut witness = None;
    for x in sources {
        let row = g.sssp_raw(x);
        let px = proj.project(x).coned;
        for &y in &by_source[&x] {
            let dp = image_rows[&px][proj.project(y).coned];
            let d = row[y] + g.scale();
            if (dp as i128) * (den as i128) > (num as i128) * (d as i128) {
                num = dp;
                den = d;
                witness = Some((x, y));
            }
        }
    }
    Ok(LipschitzMeasure {
        constant: Ratio::new(num, den),
        witness,
        pairs: pairs.len() as u64,
    })
}

impl ElectricProjector {
    /// Distinct coned vertices that projections can land on.
    pub fn electric_vertices(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self.table().iter().map(|p| p.coned).collect();
        set.into_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::super::{cone_off, glue_cones, HoroFamily};
    use super::*;
    use crate::length::int;
    use crate::metric_graph::MetricGraph;

    #[test]
    fn path_host_measures() {
        let e: Vec<_> = (0..11).map(|i| (i, i + 1)).collect();
        let g = MetricGraph::unit("path", 12, &e).unwrap();
        let fam = HoroFamily::new(
            "path",
            [("A".to_string(), vec![3, 4, 5, 6]), ("B".to_string(), vec![9])],
            int(1),
        );
        let cs = cone_off(&g, &fam).unwrap();
        let gs = glue_cones(&g, &fam, None).unwrap();
        assert!(electric_tracking(&cs, &gs, 0, 11).unwrap() <= int(1));
        assert!(horoball_quasiconvexity(&gs, 0, PairScan::Exhaustive).unwrap() <= int(1));
        let mu = cs.electric_geodesic_nb(0, 11).unwrap();
        let proj = ElectricProjector::new(&cs, &gs, &mu).unwrap();
        // every host vertex lies on the path, so members project into their own visit
        assert!(representative_discrepancy(&cs, &proj) <= int(1));
        let all: Vec<usize> = (0..cs.graph.n()).collect();
        let lip = electric_projection_lipschitz(&cs, &proj, &all, PairScan::Exhaustive).unwrap();
        assert!(lip.constant <= int(1));
        assert_eq!(lip.pairs as usize, all.len() * (all.len() - 1) / 2);
    }
}
