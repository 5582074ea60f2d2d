//! The proper function `M(N)`: how close to a base point the off-member
//! part of a pel-geodesic can come when its endpoints are joined by an
//! electric geodesic avoiding the `N`-ball.

use std::collections::BTreeMap;

use num_rational::Ratio;
use rayon::prelude::*;
use serde::Serialize;

use crate::electric::ConedSpace;
use crate::error::{Error, Result};
use crate::ladder::{
    all_rays, build_ladder, check_depth_escape, measure_retraction_lipschitz, ray_constant, subpiece_constants,
    DepthEscape,
};
use crate::length::{format_length, serde_frac, serde_frac_opt, Length};
use crate::metric_graph::{GeometryParams, MetricGraph, Param, PathWitness};
use crate::rng;
use crate::tree_spaces::TreeGeometry;

/// Electric geodesics of the root space whose off-member parts avoid the
/// `N`-ball about `p`.
#[derive(Clone, Debug, Serialize)]
pub struct Admissible {
    #[serde(with = "serde_frac")]
    pub n: Length,
    pub geodesics: Vec<PathWitness>,
    /// Endpoint pairs examined.
    pub endpoint_pairs: usize,
    /// Every endpoint pair outside the ball was examined.
    pub exhaustive: bool,
    pub diagnostic: Option<String>,
}

/// Off-member host vertices at distance at least `n` from `p`.
fn endpoints(cs: &ConedSpace, dp: &[i64], host: &MetricGraph, n: &Length) -> Vec<usize> {
    (0..cs.host_n())
        .filter(|&x| cs.index.is_off_member(x) && host.cmp_raw(dp[x], n).is_ge())
        .collect()
}

fn check_base(cs: &ConedSpace, host: &MetricGraph, p: usize) -> Result<()> {
    host.check_vertex(p)?;
    if !cs.index.is_off_member(p) {
        return Err(Error::domain(format!("base point {p} lies in a member")));
    }
    Ok(())
}

/// Smallest host distance from `p` to an off-member vertex of `lambda`.
fn clearance(cs: &ConedSpace, dp: &[i64], lambda: &PathWitness) -> i64 {
    lambda
        .vertices
        .iter()
        .filter(|&&x| cs.index.is_off_member(x))
        .map(|&x| dp[x])
        .min()
        .unwrap_or(i64::MAX)
}

/// Endpoint pairs are all off-member pairs outside the ball when there are
/// at most `budget` of them, and `budget` seeded pairs otherwise.
pub fn enumerate_admissible(
    host: &MetricGraph,
    cs: &ConedSpace,
    p: usize,
    n: &Length,
    budget: usize,
    seed: u64,
) -> Result<Admissible> {
    check_base(cs, host, p)?;
    let dp = host.sssp_raw(p);
    let ecc = host.to_length(*dp.iter().max().unwrap());
    if *n >= ecc {
        return Ok(Admissible {
            n: *n,
            geodesics: Vec::new(),
            endpoint_pairs: 0,
            exhaustive: true,
            diagnostic: Some(format!(
                "N = {} reaches the eccentricity {} of {p}",
                format_length(n),
                format_length(&ecc)
            )),
        });
    }
    let ends = endpoints(cs, &dp, host, n);
    let total = ends.len() * ends.len().saturating_sub(1) / 2;
    let pairs = rng::sample_pairs(&ends, budget.max(1), seed);
    let found: Vec<Option<PathWitness>> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let lam = cs.electric_geodesic_nb(a, b)?;
            Ok(host.cmp_raw(clearance(cs, &dp, &lam), n).is_ge().then_some(lam))
        })
        .collect::<Result<_>>()?;
    Ok(Admissible {
        n: *n,
        geodesics: found.into_iter().flatten().collect(),
        endpoint_pairs: pairs.len(),
        exhaustive: pairs.len() == total,
        diagnostic: None,
    })
}

/// Ladder-side measurements for a row's witness geodesic.
#[derive(Clone, Debug, Serialize)]
pub struct RowLadder {
    pub support: usize,
    #[serde(with = "serde_frac")]
    pub ray_c: Length,
    /// Largest `d_X` from the witness pel-geodesic's off-member part to `B^b`.
    #[serde(with = "serde_frac")]
    pub track_c1: Length,
    #[serde(with = "serde_frac")]
    pub c0: Length,
    pub depth_escape: Option<DepthEscape>,
    /// `N/(ray_C + 1) - track_C1` with the profile-wide constants.
    #[serde(with = "serde_frac_opt")]
    pub shape_bound: Option<Length>,
    pub shape_ok: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProfileRow {
    pub n: u32,
    #[serde(with = "serde_frac_opt")]
    pub m: Option<Length>,
    pub admissible: usize,
    pub endpoint_pairs: usize,
    pub exhaustive: bool,
    pub lambda: Option<(usize, usize)>,
    /// Witness point as a vertex of `X`.
    pub witness_vertex: Option<usize>,
    pub diagnostic: Option<String>,
    pub ladder: Option<RowLadder>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CTProfile {
    pub instance: String,
    pub root: usize,
    /// Base point in the root space.
    pub p: usize,
    pub depth: u32,
    pub budget: usize,
    pub seed: u64,
    pub params: GeometryParams,
    pub rows: Vec<ProfileRow>,
}

#[derive(Clone, Debug)]
pub struct ProfileConfig {
    pub p: Option<usize>,
    pub ns: Vec<u32>,
    pub budget: usize,
    pub seed: u64,
    /// Build the witness ladders, rays and depth-escape checks.
    pub ladders: bool,
}

/// One endpoint pair: its electric geodesic's clearance from `p` in the
/// root space, and the nearest off-member point of its pel-geodesic in `X`.
#[derive(Clone, Debug)]
struct PairEval {
    clearance: i64,
    nearest: (i64, usize),
}

/// Fixed data of a profile run.
struct Frame<'a> {
    geo: &'a TreeGeometry,
    root: usize,
    p: usize,
    dp: Vec<i64>,
    dx: Vec<i64>,
    off: Vec<bool>,
}

impl<'a> Frame<'a> {
    fn new(geo: &'a TreeGeometry, p: Option<usize>) -> Result<Self> {
        let root = geo.tos.tree.root();
        let cs = &geo.coned[root];
        let host = &geo.tos.vertices[root].graph;
        let p = match p {
            Some(p) => p,
            None => default_base_point(geo)?,
        };
        check_base(cs, host, p)?;
        let tc = &geo.tc;
        let off = (0..tc.graph.n())
            .map(|x| !tc.is_cone(x) && geo.coned[tc.vertex_of(x)].index.is_off_member(tc.local_of(x)))
            .collect();
        Ok(Frame {
            geo,
            root,
            p,
            dp: host.sssp_raw(p),
            dx: geo.total.graph.sssp_raw(geo.total.id_of(root, p)),
            off,
        })
    }

    /// Off-member part of the pel-geodesic from `a` to `b`, as `X` vertices.
    fn pel_off_member(&self, a: usize, b: usize) -> Vec<usize> {
        let tc = &self.geo.tc;
        let (ta, tb) = (tc.id_of(self.root, a), tc.id_of(self.root, b));
        let to_b = tc.graph.sssp_raw(tb);
        tc.graph
            .geodesic_with(ta, tb, &to_b)
            .into_iter()
            .filter(|&x| self.off[x])
            .map(|x| tc.to_total(&self.geo.total, x).unwrap())
            .collect()
    }

    fn eval(&self, a: usize, b: usize) -> Result<PairEval> {
        let cs = &self.geo.coned[self.root];
        let lam = cs.electric_geodesic_nb(a, b)?;
        let nearest = self
            .pel_off_member(a, b)
            .into_iter()
            .map(|x| (self.dx[x], x))
            .min()
            .unwrap();
        Ok(PairEval {
            clearance: clearance(cs, &self.dp, &lam),
            nearest,
        })
    }
}

/// Smallest off-member vertex of the root space.
pub fn default_base_point(geo: &TreeGeometry) -> Result<usize> {
    let cs = &geo.coned[geo.tos.tree.root()];
    (0..cs.host_n())
        .find(|&x| cs.index.is_off_member(x))
        .ok_or_else(|| Error::domain("the root space has no point outside the members"))
}

/// Measures `M(N)` for each `N` in the configuration. `params` must hold
/// `D` and `C` when ladders are enabled; the ladder constants measured on
/// the way are recorded into the returned snapshot.
pub fn ct_profile(geo: &TreeGeometry, params: &GeometryParams, cfg: &ProfileConfig) -> Result<CTProfile> {
    if cfg.ns.is_empty() {
        return Err(Error::domain("empty N range"));
    }
    if cfg.budget == 0 {
        return Err(Error::domain("budget must be at least 1"));
    }
    let frame = Frame::new(geo, cfg.p)?;
    let root = frame.root;
    let host = &geo.tos.vertices[root].graph;
    let cs = &geo.coned[root];
    let ecc = *frame.dp.iter().max().unwrap();
    let mut cache: BTreeMap<(usize, usize), PairEval> = BTreeMap::new();
    let mut rows = Vec::new();
    for &n in &cfg.ns {
        let nl = Ratio::from_integer(n as i64);
        if host.cmp_raw(ecc, &nl).is_le() {
            rows.push(ProfileRow {
                n,
                m: None,
                admissible: 0,
                endpoint_pairs: 0,
                exhaustive: true,
                lambda: None,
                witness_vertex: None,
                diagnostic: Some(format!("N = {n} reaches the eccentricity {}", format_length(&host.to_length(ecc)))),
                ladder: None,
            });
            continue;
        }
        let ends = endpoints(cs, &frame.dp, host, &nl);
        let total = ends.len() * ends.len().saturating_sub(1) / 2;
        let pairs = rng::sample_pairs(&ends, cfg.budget, cfg.seed ^ n as u64);
        let fresh: Vec<(usize, usize)> = pairs.iter().copied().filter(|k| !cache.contains_key(k)).collect();
        let evals: Vec<((usize, usize), PairEval)> = fresh
            .par_iter()
            .map(|&(a, b)| Ok(((a, b), frame.eval(a, b)?)))
            .collect::<Result<_>>()?;
        cache.extend(evals);
        let best = pairs
            .iter()
            .filter(|k| host.cmp_raw(cache[k].clearance, &nl).is_ge())
            .map(|k| (cache[k].nearest, *k))
            .min();
        let admissible = pairs.iter().filter(|k| host.cmp_raw(cache[k].clearance, &nl).is_ge()).count();
        rows.push(ProfileRow {
            n,
            m: best.map(|((d, _), _)| geo.total.graph.to_length(d)),
            admissible,
            endpoint_pairs: pairs.len(),
            exhaustive: pairs.len() == total,
            lambda: best.map(|(_, k)| k),
            witness_vertex: best.map(|((_, x), _)| x),
            diagnostic: (admissible == 0).then(|| format!("no admissible geodesic at N = {n}")),
            ladder: None,
        });
    }
    let mut params = params.clone();
    if cfg.ladders {
        attach_ladders(&frame, &mut params, &mut rows)?;
    }
    Ok(CTProfile {
        instance: geo.tos.id.clone(),
        root,
        p: frame.p,
        depth: geo.depth(),
        budget: cfg.budget,
        seed: cfg.seed,
        params,
        rows,
    })
}

fn attach_ladders(frame: &Frame, params: &mut GeometryParams, rows: &mut [ProfileRow]) -> Result<()> {
    let geo = frame.geo;
    let cs = &geo.coned[frame.root];
    let total = &geo.total;
    let mut witnesses: Vec<(usize, usize)> = rows.iter().filter_map(|r| r.lambda).collect();
    witnesses.sort_unstable();
    witnesses.dedup();
    struct Measured {
        ladder: crate::ladder::Ladder,
        rays: Vec<crate::ladder::VerticalRay>,
        ray_c: Length,
        track: Length,
        c0: Length,
        p6: Length,
        p7: Length,
    }
    let measured: BTreeMap<(usize, usize), Measured> = witnesses
        .par_iter()
        .map(|&(a, b)| {
            let lam = cs.electric_geodesic_nb(a, b)?;
            let ladder = build_ladder(geo, &lam, params)?;
            let rays = all_rays(geo, &ladder)?;
            let bb: Vec<usize> = ladder
                .off_member_points(geo)
                .into_iter()
                .map(|(v, x)| total.id_of(v, x))
                .collect();
            let to_bb = total.graph.distance_to_set_raw(&bb);
            let track = frame.pel_off_member(a, b).into_iter().map(|x| to_bb[x]).max().unwrap_or(0);
            let sub = subpiece_constants(geo, &ladder)?;
            let c0 = measure_retraction_lipschitz(geo, &ladder)?.c0;
            Ok((
                (a, b),
                Measured {
                    ray_c: ray_constant(&rays),
                    track: total.graph.to_length(track),
                    c0,
                    p6: sub.p6,
                    p7: sub.p7,
                    ladder,
                    rays,
                },
            ))
        })
        .collect::<Result<_>>()?;
    let max_of = |f: &dyn Fn(&Measured) -> Length| measured.values().map(f).max();
    let (Some(ray_c), Some(track)) = (max_of(&|m| m.ray_c), max_of(&|m| m.track)) else {
        return Ok(());
    };
    let id = geo.tos.id.clone();
    params.record(Param::RayC, ray_c, &id, "vertical_ray over witness ladders")?;
    params.record(Param::TrackC1, track, &id, "pel-geodesic distance to B^b over witness ladders")?;
    params.record(Param::C0, max_of(&|m| m.c0).unwrap(), &id, "measure_retraction_lipschitz over witness ladders")?;
    params.record(Param::P6, max_of(&|m| m.p6).unwrap(), &id, "subpiece_constants over witness ladders")?;
    params.record(Param::P7, max_of(&|m| m.p7).unwrap(), &id, "subpiece_constants over witness ladders")?;
    params.refresh_pmax();
    for row in rows.iter_mut() {
        let Some(k) = row.lambda else { continue };
        let m = &measured[&k];
        let nl = Ratio::from_integer(row.n as i64);
        let esc = check_depth_escape(geo, &m.ladder, &m.rays, frame.p, nl, ray_c)?;
        let bound = nl / (ray_c + 1) - track;
        row.ladder = Some(RowLadder {
            support: m.ladder.pieces.len(),
            ray_c: m.ray_c,
            track_c1: m.track,
            c0: m.c0,
            depth_escape: Some(esc),
            shape_bound: Some(bound),
            shape_ok: row.m.map(|v| v >= bound),
        });
    }
    Ok(())
}

impl CTProfile {
    /// `N,M,lambda_endpoints,witness_vertex`, one line per row; rows with no
    /// admissible geodesic leave the last three fields empty.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["N", "M", "lambda_endpoints", "witness_vertex"])?;
        for r in &self.rows {
            w.write_record([
                r.n.to_string(),
                r.m.map(|m| format_length(&m)).unwrap_or_default(),
                r.lambda.map(|(a, b)| format!("{a}-{b}")).unwrap_or_default(),
                r.witness_vertex.map(|x| x.to_string()).unwrap_or_default(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// In exhaustive rows, `M(N)` equals `min_{N' >= N} M(N')`.
    pub fn envelope_is_monotone(&self) -> bool {
        let rows: Vec<&ProfileRow> = self.rows.iter().filter(|r| r.exhaustive && r.m.is_some()).collect();
        let mut sorted = rows.clone();
        sorted.sort_by_key(|r| r.n);
        sorted.windows(2).all(|w| w[0].m <= w[1].m)
    }

    pub fn all_shapes_hold(&self) -> bool {
        self.rows
            .iter()
            .filter_map(|r| r.ladder.as_ref())
            .all(|l| l.shape_ok != Some(false) && l.depth_escape.as_ref().is_none_or(|e| e.passed))
    }

    /// Recomputes every witness: the geodesic is admissible at its `N`, the
    /// witness lies on the off-member part of the pel-geodesic, no point of
    /// it is nearer to `p`, and the distance is the recorded `M(N)`.
    pub fn verify_rows(&self, geo: &TreeGeometry) -> Result<()> {
        let frame = Frame::new(geo, Some(self.p))?;
        let host = &geo.tos.vertices[frame.root].graph;
        for r in &self.rows {
            let (Some((a, b)), Some(x), Some(m)) = (r.lambda, r.witness_vertex, r.m) else {
                continue;
            };
            let eval = frame.eval(a, b)?;
            let nl = Ratio::from_integer(r.n as i64);
            if !host.cmp_raw(eval.clearance, &nl).is_ge() {
                return Err(Error::invariant(format!("row N = {}: witness geodesic is not admissible", r.n)));
            }
            let on_beta = frame.pel_off_member(a, b);
            if !on_beta.contains(&x) {
                return Err(Error::invariant(format!("row N = {}: witness is off the pel-geodesic", r.n)));
            }
            let d = geo.total.graph.to_length(frame.dx[x]);
            if d != m || eval.nearest.0 != frame.dx[x] {
                return Err(Error::invariant(format!(
                    "row N = {}: recorded M = {} but recomputed {}",
                    r.n,
                    format_length(&m),
                    format_length(&d)
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ct_harness::constants::{measure_constants, Overrides};
    use crate::ct_harness::{generate_instance, GeneratorSpec};
    use crate::electric::{cone_off, HoroFamily};
    use crate::length::int;

    fn geometry(spec: &str) -> TreeGeometry {
        let tos = generate_instance(&spec.parse::<GeneratorSpec>().unwrap(), 0).unwrap();
        TreeGeometry::new(tos, None).unwrap()
    }

    #[test]
    fn zero_radius_admits_every_pair() {
        let e: Vec<_> = (1..6).map(|i| (0, i)).collect();
        let star = MetricGraph::unit("S", 6, &e).unwrap();
        let cs = cone_off(&star, &HoroFamily::empty("S")).unwrap();
        let a = enumerate_admissible(&star, &cs, 0, &int(0), 100, 0).unwrap();
        assert_eq!(a.geodesics.len(), 15);
        assert!(a.exhaustive);
        // every leaf-to-leaf geodesic crosses the center
        let a = enumerate_admissible(&star, &cs, 0, &int(1), 100, 0).unwrap();
        assert!(a.geodesics.is_empty());
        assert!(a.diagnostic.is_some());
        // three legs of length 2: only pairs within one leg avoid the center
        let e = [(0, 1), (1, 2), (0, 3), (3, 4), (0, 5), (5, 6)];
        let spider = MetricGraph::unit("S", 7, &e).unwrap();
        let cs = cone_off(&spider, &HoroFamily::empty("S")).unwrap();
        let a = enumerate_admissible(&spider, &cs, 0, &int(1), 100, 0).unwrap();
        assert_eq!(a.endpoint_pairs, 15);
        assert_eq!(a.geodesics.len(), 3);
    }

    #[test]
    fn plain_tree_profile_is_the_identity() {
        let geo = geometry("tree-plain,2,3");
        let params = measure_constants(&geo, &Overrides::default(), 0).unwrap();
        let cfg = ProfileConfig {
            p: Some(0),
            ns: vec![0, 1, 2, 3],
            budget: 10_000,
            seed: 0,
            ladders: true,
        };
        let prof = ct_profile(&geo, &params, &cfg).unwrap();
        let ms: Vec<_> = prof.rows.iter().map(|r| r.m).collect();
        assert_eq!(ms, vec![Some(int(0)), Some(int(1)), Some(int(2)), None]);
        prof.verify_rows(&geo).unwrap();
        assert!(prof.envelope_is_monotone());
        assert!(prof.all_shapes_hold());
        let csv = prof.to_csv().unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "N,M,lambda_endpoints,witness_vertex");
        assert_eq!(lines[1], "0,0/1,0-1,0");
        assert_eq!(lines[4], "3,,,");
    }

    #[test]
    fn identity_segment_loses_at_most_one() {
        let geo = geometry("segment-identity,tree-plain:2:3,2");
        let params = measure_constants(&geo, &Overrides::default(), 0).unwrap();
        let cfg = ProfileConfig {
            p: None,
            ns: (0..3).collect(),
            budget: 10_000,
            seed: 0,
            ladders: true,
        };
        let prof = ct_profile(&geo, &params, &cfg).unwrap();
        for r in &prof.rows {
            assert!(r.m.unwrap() >= int(r.n as i64 - 1));
        }
        prof.verify_rows(&geo).unwrap();
        assert!(prof.all_shapes_hold());
    }
}
