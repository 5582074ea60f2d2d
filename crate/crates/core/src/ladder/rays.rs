use std::collections::BTreeMap;

use num_rational::Ratio;
use rayon::prelude::*;
use serde::Serialize;

use super::Ladder;
use crate::electric::ElectroAmbient;
use crate::error::{Error, Result};
use crate::length::{format_length, serde_frac, Length};
use crate::tree_spaces::TreeGeometry;

/// One step of a vertical ray from `X_v` to the parent space `X_w`, with
/// the intermediate points of the construction (all local ids).
#[derive(Clone, Debug, Serialize)]
pub struct RayStep {
    pub from_vertex: usize,
    pub to_vertex: usize,
    pub edge: usize,
    pub from: usize,
    /// Nearest point of the edge image to `from`.
    pub snapped: usize,
    /// `ψ(snapped)` in `X_w`.
    pub carried: usize,
    /// Off-member point of the glued geodesic between the carried run ends.
    pub on_geodesic: usize,
    /// Off-member point of the electro-ambient `μ` recorded at `w`.
    pub on_mu: usize,
    /// Off-member point of `λ̂_w`.
    pub to: usize,
    /// `d_X(from, to)`.
    #[serde(with = "serde_frac")]
    pub displacement: Length,
}

/// `r_x`: one off-member point of `λ̂` over every vertex from `v` up to the
/// root.
#[derive(Clone, Debug, Serialize)]
pub struct VerticalRay {
    /// Tree vertices from the start vertex to the root.
    pub vertices: Vec<usize>,
    /// `r_x` at each of those vertices (local ids).
    pub points: Vec<usize>,
    pub steps: Vec<RayStep>,
}

impl VerticalRay {
    pub fn start(&self) -> (usize, usize) {
        (self.vertices[0], self.points[0])
    }

    pub fn end(&self) -> (usize, usize) {
        (*self.vertices.last().unwrap(), *self.points.last().unwrap())
    }

    pub fn total_displacement(&self) -> Length {
        self.steps.iter().map(|s| s.displacement).sum()
    }
}

/// Per-ladder data shared by all ray steps.
struct RayContext<'a> {
    geo: &'a TreeGeometry,
    ladder: &'a Ladder,
    off: BTreeMap<usize, Vec<usize>>,
    /// Off-member vertices of the electro-ambient `μ` recorded at the parent
    /// of each non-root piece.
    mu_off: BTreeMap<usize, Vec<usize>>,
}

impl<'a> RayContext<'a> {
    fn new(geo: &'a TreeGeometry, ladder: &'a Ladder) -> Result<Self> {
        let off = ladder
            .pieces
            .keys()
            .map(|&v| (v, ladder.off_member(geo, v)))
            .collect();
        let mut mu_off = BTreeMap::new();
        for (&w, piece) in &ladder.pieces {
            for s in &piece.subpieces {
                let amb = ElectroAmbient::new(&geo.coned[w], &geo.glued[w], &s.mu)?;
                let idx = &geo.glued[w].index;
                let pts: Vec<usize> = amb.path.vertices.iter().copied().filter(|&y| idx.is_off_member(y)).collect();
                mu_off.insert(s.child, pts);
            }
        }
        Ok(RayContext {
            geo,
            ladder,
            off,
            mu_off,
        })
    }

    fn nearest(dist: &[i64], set: &[usize]) -> Option<usize> {
        set.iter().copied().min_by_key(|&y| (dist[y], y))
    }

    fn step(&self, v: usize, x: usize) -> Result<RayStep> {
        let geo = self.geo;
        let (w, e) = self.ladder.pieces[&v]
            .parent
            .ok_or_else(|| Error::domain("the root has no parent step"))?;
        let end = geo.tos.tree.end_of(e, v).unwrap();
        let image = geo.tos.map(e, end);
        let gv = &geo.glued[v].graph;
        let snap = |z: usize| -> usize {
            let d = gv.sssp_raw(z);
            Self::nearest(&d, image).expect("edge spaces are non-empty")
        };
        // the run of λ^b through x: between the surrounding member visits
        let lam = &self.ladder.pieces[&v].lambda;
        let pos = lam.vertices.iter().position(|&y| y == x).unwrap();
        let visits = geo.coned[v].profile(lam).visits;
        let a_pos = visits.iter().filter(|vis| vis.exit_pos <= pos).map(|vis| vis.exit_pos).max().unwrap_or(0);
        let b_pos = visits
            .iter()
            .filter(|vis| vis.entry_pos >= pos)
            .map(|vis| vis.entry_pos)
            .min()
            .unwrap_or(lam.len() - 1);
        let snapped = snap(x);
        let carried = geo.phi(w, e, snapped)?;
        let ra = geo.phi(w, e, snap(lam.vertices[a_pos]))?;
        let rb = geo.phi(w, e, snap(lam.vertices[b_pos]))?;
        let gw = &geo.glued[w];
        let to_rb = gw.graph.sssp_raw(rb);
        let psi: Vec<usize> = gw
            .graph
            .geodesic_with(ra, rb, &to_rb)
            .into_iter()
            .filter(|&y| gw.index.is_off_member(y))
            .collect();
        let d0 = gw.graph.sssp_raw(carried);
        let on_geodesic = Self::nearest(&d0, &psi).unwrap_or(carried);
        let d1 = gw.graph.sssp_raw(on_geodesic);
        let on_mu = Self::nearest(&d1, &self.mu_off[&v]).unwrap_or(on_geodesic);
        let d2 = gw.graph.sssp_raw(on_mu);
        let to = Self::nearest(&d2, &self.off[&w])
            .ok_or_else(|| Error::invariant(format!("segment over {w} has no point outside the members")))?;
        let total = &geo.total;
        let dx = total.graph.sssp_raw(total.id_of(v, x));
        Ok(RayStep {
            from_vertex: v,
            to_vertex: w,
            edge: e,
            from: x,
            snapped,
            carried,
            on_geodesic,
            on_mu,
            to,
            displacement: total.graph.to_length(dx[total.id_of(w, to)]),
        })
    }

    fn ray(&self, v: usize, x: usize, memo: &BTreeMap<(usize, usize), RayStep>) -> Result<VerticalRay> {
        let mut vertices = vec![v];
        let mut points = vec![x];
        let mut steps = Vec::new();
        let (mut cv, mut cx) = (v, x);
        while cv != self.ladder.root {
            let s = match memo.get(&(cv, cx)) {
                Some(s) => s.clone(),
                None => self.step(cv, cx)?,
            };
            cv = s.to_vertex;
            cx = s.to;
            vertices.push(cv);
            points.push(cx);
            steps.push(s);
        }
        Ok(VerticalRay { vertices, points, steps })
    }
}

fn check_start(geo: &TreeGeometry, ladder: &Ladder, v: usize, x: usize) -> Result<()> {
    let piece = ladder
        .pieces
        .get(&v)
        .ok_or_else(|| Error::domain(format!("vertex {v} is not in the ladder support")))?;
    let idx = &geo.coned[v].index;
    if !idx.is_off_member(x) {
        return Err(Error::domain(format!("{x} lies in a member or is a cone point")));
    }
    if !piece.lambda.vertices.contains(&x) {
        return Err(Error::domain(format!("{x} is not on the segment over {v}")));
    }
    Ok(())
}

/// The vertical ray from an off-member point `x` of `λ̂_v` to the root.
pub fn vertical_ray(geo: &TreeGeometry, ladder: &Ladder, v: usize, x: usize) -> Result<VerticalRay> {
    check_start(geo, ladder, v, x)?;
    RayContext::new(geo, ladder)?.ray(v, x, &BTreeMap::new())
}

/// Rays from every point of `B^b`, ordered by `(vertex, point)`.
pub fn all_rays(geo: &TreeGeometry, ladder: &Ladder) -> Result<Vec<VerticalRay>> {
    let ctx = RayContext::new(geo, ladder)?;
    let starts = ladder.off_member_points(geo);
    let steps: Vec<((usize, usize), RayStep)> = starts
        .par_iter()
        .filter(|&&(v, _)| v != ladder.root)
        .map(|&(v, x)| Ok(((v, x), ctx.step(v, x)?)))
        .collect::<Result<_>>()?;
    let memo: BTreeMap<(usize, usize), RayStep> = steps.into_iter().collect();
    starts.iter().map(|&(v, x)| ctx.ray(v, x, &memo)).collect()
}

/// Largest per-step displacement over the rays, and 1 when no ray moves.
pub fn ray_constant(rays: &[VerticalRay]) -> Length {
    rays.iter()
        .flat_map(|r| r.steps.iter().map(|s| s.displacement))
        .max()
        .unwrap_or_else(|| Ratio::from_integer(1))
        .max(Ratio::from_integer(1))
}

/// Outcome of the depth-escape check at radius `n`.
#[derive(Clone, Debug, Serialize)]
pub struct DepthEscape {
    #[serde(with = "serde_frac")]
    pub n: Length,
    #[serde(with = "serde_frac")]
    pub c: Length,
    /// `n / (c + 1)`.
    #[serde(with = "serde_frac")]
    pub threshold: Length,
    pub checked: usize,
    #[serde(with = "serde_frac")]
    pub min_distance: Length,
    /// Point of `B^b` nearest to `p`, as `(vertex, local id)`.
    pub nearest: (usize, usize),
    pub passed: bool,
    /// Points closer to `p` than `max(m, d_X(r_x(v0), p) - |r_x|)`, where
    /// `m` is the number of steps and `|r_x|` the summed displacement.
    pub ray_bound_violations: usize,
}

/// Checks that every point of `B^b` lies at least `n/(c+1)` from `p` in
/// `X`, given that `λ^b` over the root avoids the `n`-ball about `p` in the
/// root space.
pub fn check_depth_escape(
    geo: &TreeGeometry,
    ladder: &Ladder,
    rays: &[VerticalRay],
    p: usize,
    n: Length,
    c: Length,
) -> Result<DepthEscape> {
    let root = ladder.root;
    let xv = &geo.tos.vertices[root].graph;
    xv.check_vertex(p)?;
    let dv = xv.sssp_raw(p);
    let close: Vec<String> = ladder
        .off_member(geo, root)
        .into_iter()
        .filter(|&x| xv.to_length(dv[x]) < n)
        .map(|x| format!("{x} at {}", format_length(&xv.to_length(dv[x]))))
        .collect();
    if !close.is_empty() {
        return Err(Error::Precondition(format!(
            "root segment meets the {}-ball about {p}: {}",
            format_length(&n),
            close.join(", ")
        )));
    }
    let total = &geo.total;
    let dx = total.graph.sssp_raw(total.id_of(root, p));
    let at = |(v, x): (usize, usize)| total.graph.to_length(dx[total.id_of(v, x)]);
    let threshold = n / (c + 1);
    let points = ladder.off_member_points(geo);
    let nearest = points
        .iter()
        .copied()
        .min_by_key(|&(v, x)| (dx[total.id_of(v, x)], v, x))
        .ok_or_else(|| Error::invariant("ladder has no point outside the members"))?;
    let min_distance = at(nearest);
    let ray_bound_violations = rays
        .iter()
        .filter(|r| {
            let m = Ratio::from_integer(r.steps.len() as i64);
            let bound = m.max(at(r.end()) - r.total_displacement());
            at(r.start()) < bound
        })
        .count();
    Ok(DepthEscape {
        n,
        c,
        threshold,
        checked: points.len(),
        min_distance,
        nearest,
        passed: min_distance >= threshold,
        ray_bound_violations,
    })
}

#[cfg(test)]
mod tests {
    use super::super::build_ladder_with;
    use super::super::tests::{identity_segment, path_graph, single};
    use super::*;
    use crate::electric::HoroFamily;
    use crate::length::int;

    #[test]
    fn root_points_give_constant_rays() {
        let y = path_graph(8);
        let geo = single(&y, &HoroFamily::empty("Y"));
        let lam = geo.coned[0].graph.geodesic(1, 6).unwrap();
        let l = build_ladder_with(&geo, &lam, int(1), int(1)).unwrap();
        let r = vertical_ray(&geo, &l, 0, 3).unwrap();
        assert_eq!((r.vertices.clone(), r.points.clone()), (vec![0], vec![3]));
        assert!(r.steps.is_empty());
        assert!(vertical_ray(&geo, &l, 0, 7).is_err());
        let esc = check_depth_escape(&geo, &l, &[r], 0, int(1), int(1)).unwrap();
        assert!(esc.passed);
        assert!(matches!(
            check_depth_escape(&geo, &l, &[], 0, int(2), int(1)),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn identity_rays_climb_rungs() {
        let y = path_graph(14);
        let geo = identity_segment(3, &y, &HoroFamily::empty("Y"));
        let lam = geo.coned[0].graph.geodesic(4, 10).unwrap();
        let l = build_ladder_with(&geo, &lam, int(4), int(1)).unwrap();
        assert_eq!(l.support(), vec![0, 1, 2, 3]);
        let rays = all_rays(&geo, &l).unwrap();
        for r in &rays {
            let (v, x) = r.start();
            // the copy of x survives when it lies on every segment above
            if (4..=10).contains(&x) {
                assert!(r.points.iter().all(|&p| p == x));
            }
            for s in &r.steps {
                assert_eq!(s.carried, s.from);
                assert!(s.displacement >= int(1));
            }
            assert_eq!(r.vertices.len(), v + 1);
        }
        let c = ray_constant(&rays);
        let inner: Vec<_> = rays.iter().filter(|r| (4..=10).contains(&r.start().1)).collect();
        assert!(inner.iter().all(|r| r.steps.iter().all(|s| s.displacement == int(1))));
        // p = 0: λ^b over the root starts at 4
        let esc = check_depth_escape(&geo, &l, &rays, 0, int(4), c).unwrap();
        assert!(esc.passed);
        assert_eq!(esc.ray_bound_violations, 0);
        assert_eq!(esc.min_distance, int(4));
    }
}
