//! Measurement of the geometric constants an experiment runs with.

use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::length::{serde_frac_opt, Length};
use crate::metric_graph::{measure_projection_tracking, DeltaMode, GeometryParams, PairScan, Param};
use crate::rng;
use crate::tree_spaces::TreeGeometry;

/// User-fixed constants; anything left `None` is measured.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Overrides {
    #[serde(with = "serde_frac_opt", default)]
    pub d: Option<Length>,
    #[serde(with = "serde_frac_opt", default)]
    pub c: Option<Length>,
}

/// Pairs examined per space by the sampled scans below.
pub const SCAN_PAIRS: usize = 300;

/// Measures `delta` over the glued vertex spaces, `D` (default `4·delta + 1`),
/// the tracking constant `C1` of broken projection paths, the
/// quasiconvexity constant `C2` of edge images, and `C = C1 + C2`.
pub fn measure_constants(geo: &TreeGeometry, overrides: &Overrides, seed: u64) -> Result<GeometryParams> {
    let id = geo.tos.id.clone();
    let mut params = GeometryParams::new();
    let delta = geo
        .glued
        .par_iter()
        .map(|g| g.graph.four_point_delta(DeltaMode::auto(g.graph.n(), seed)).map(|d| d.delta))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .max()
        .unwrap_or_else(|| Ratio::from_integer(0));
    params.record(Param::Delta, delta, &id, "four_point_delta over glued vertex spaces")?;
    let d = match overrides.d {
        Some(d) => {
            params.configure(Param::D, d)?;
            d
        }
        None => params.d_or_default()?,
    };
    params.record(Param::C1, tracking_constant(geo, &d, seed)?, &id, "measure_projection_tracking")?;
    params.record(Param::C2, image_quasiconvexity(geo, seed), &id, "edge image quasiconvexity")?;
    if let Some(c) = overrides.c {
        params.configure(Param::C, c)?;
    }
    Ok(params)
}

/// Largest `C1` over the glued vertex spaces, with the target a geodesic
/// from the first off-member vertex to the off-member vertex farthest from
/// it, and pairs sampled among host vertices.
fn tracking_constant(geo: &TreeGeometry, d: &Length, seed: u64) -> Result<Length> {
    let per = geo
        .glued
        .par_iter()
        .map(|gs| {
            let off: Vec<usize> = (0..gs.host_n()).filter(|&x| gs.index.is_off_member(x)).collect();
            let Some(&a) = off.first() else {
                return Ok(Ratio::from_integer(0));
            };
            let da = gs.graph.sssp_raw(a);
            let b = off.iter().copied().max_by_key(|&x| (da[x], std::cmp::Reverse(x))).unwrap();
            let target = gs.graph.geodesic(a, b)?.vertices;
            let domain: Vec<usize> = (0..gs.host_n()).collect();
            let m = measure_projection_tracking(
                &gs.graph,
                &target,
                &domain,
                d,
                PairScan::Sampled {
                    count: SCAN_PAIRS,
                    seed,
                },
            )?;
            Ok(m.constant.unwrap_or_else(|| Ratio::from_integer(0)))
        })
        .collect::<Result<Vec<Length>>>()?;
    Ok(per.into_iter().max().unwrap_or_else(|| Ratio::from_integer(0)))
}

/// Largest distance from a glued geodesic between two image points of an
/// edge map to that image.
fn image_quasiconvexity(geo: &TreeGeometry, seed: u64) -> Length {
    let tree = &geo.tos.tree;
    let jobs: Vec<(usize, usize, usize)> = tree
        .edges()
        .iter()
        .enumerate()
        .flat_map(|(e, &(v1, v2))| [(e, 0, v1), (e, 1, v2)])
        .collect();
    jobs.par_iter()
        .map(|&(e, end, v)| {
            let g = &geo.glued[v].graph;
            let mut image = geo.tos.map(e, end).to_vec();
            image.sort_unstable();
            image.dedup();
            let to_image = g.distance_to_set_raw(&image);
            let worst = rng::sample_pairs(&image, SCAN_PAIRS, seed)
                .into_iter()
                .map(|(a, b)| {
                    let to_b = g.sssp_raw(b);
                    g.geodesic_with(a, b, &to_b).iter().map(|&z| to_image[z]).max().unwrap_or(0)
                })
                .max()
                .unwrap_or(0);
            g.to_length(worst)
        })
        .max()
        .unwrap_or_else(|| Ratio::from_integer(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ct_harness::{generate_instance, GeneratorSpec};
    use crate::length::int;

    #[test]
    fn plain_tree_constants() {
        let tos = generate_instance(&"tree-plain,2,3".parse::<GeneratorSpec>().unwrap(), 0).unwrap();
        let geo = TreeGeometry::new(tos, None).unwrap();
        let p = measure_constants(&geo, &Overrides::default(), 0).unwrap();
        assert_eq!(p.get(Param::Delta), Some(int(0)));
        assert_eq!(p.get(Param::D), Some(int(1)));
        assert_eq!(p.get(Param::C1), Some(int(0)));
        assert_eq!(p.get(Param::C), Some(int(0)));
    }

    #[test]
    fn overrides_win() {
        let tos = generate_instance(&"segment-identity,tree-plain:2:2,1".parse::<GeneratorSpec>().unwrap(), 0).unwrap();
        let geo = TreeGeometry::new(tos, None).unwrap();
        let o = Overrides {
            d: Some(int(5)),
            c: Some(int(2)),
        };
        let p = measure_constants(&geo, &o, 0).unwrap();
        assert_eq!((p.get(Param::D), p.get(Param::C)), (Some(int(5)), Some(int(2))));
        // identity images are the whole space
        assert_eq!(p.get(Param::C2), Some(int(0)));
    }
}
