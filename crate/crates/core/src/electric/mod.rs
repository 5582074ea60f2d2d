//! Coned-off (electric) spaces, combinatorial horoballs and the glued space,
//! electro-ambient paths and electric projections.

mod ambient;
pub mod diagnostics;
mod family;
mod horoball;

pub use ambient::{electric_projection, ElectricProjector, ElectroAmbient, Origin, Projection};
pub use family::{FamilyIndex, HoroFamily, IntrinsicMetric, PenetrationProfile, Visit};
pub use horoball::{build_horoball, default_depth, glue_cones, horoball_over, GluedSpace, Horoball};

use std::collections::BTreeMap;

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::length::Length;
use crate::metric_graph::{MetricGraph, PathWitness};

/// A host with one cone vertex per family member, joined to every member
/// vertex by an edge of length 1/2.
#[derive(Clone, Debug)]
pub struct ConedSpace {
    pub graph: MetricGraph,
    pub family: HoroFamily,
    pub index: FamilyIndex,
    cones: Vec<usize>,
    sets: Vec<Vec<usize>>,
}

pub fn cone_off(host: &MetricGraph, family: &HoroFamily) -> Result<ConedSpace> {
    family.validate(host)?;
    let mut b = host.to_builder();
    let half = Ratio::new(1, 2);
    let mut cones = Vec::with_capacity(family.len());
    for (name, set) in &family.members {
        let c = b.add_vertex();
        b.label(c, format!("cone[{name}]"));
        for &v in set {
            b.add_edge(v, c, half)?;
        }
        cones.push(c);
    }
    let graph = b.build(format!("{}/coned", host.id()))?;
    let mut index = FamilyIndex::new(host, family);
    index.extend((0..cones.len()).map(Some));
    Ok(ConedSpace {
        graph,
        family: family.clone(),
        index,
        cones,
        sets: family.members.values().cloned().collect(),
    })
}

impl ConedSpace {
    pub fn host_n(&self) -> usize {
        self.index.host_n()
    }

    pub fn is_cone(&self, v: usize) -> bool {
        v >= self.host_n() && v < self.graph.n()
    }

    pub fn cone(&self, member: usize) -> usize {
        self.cones[member]
    }

    pub fn cones(&self) -> &[usize] {
        &self.cones
    }

    /// Member whose cone vertex is `v`.
    pub fn member_of_cone(&self, v: usize) -> Option<usize> {
        self.is_cone(v).then(|| v - self.host_n())
    }

    /// The representative used for cone vertices: the smallest member vertex.
    pub fn representative(&self, member: usize) -> usize {
        self.sets[member][0]
    }

    pub fn member_vertices(&self, member: usize) -> &[usize] {
        &self.sets[member]
    }

    pub fn members(&self) -> impl Iterator<Item = &[usize]> {
        self.sets.iter().map(Vec::as_slice)
    }

    pub fn member_index(&self, name: &str) -> Option<usize> {
        self.family.members.keys().position(|k| k == name)
    }

    pub fn profile(&self, p: &PathWitness) -> PenetrationProfile {
        self.index.penetration_profile(p)
    }

    /// Coned-space geodesic from `u` to `v` in which no member is revisited.
    /// A recurring member has everything between its first entry and last
    /// exit replaced by the two cone edges.
    pub fn electric_geodesic_nb(&self, u: usize, v: usize) -> Result<PathWitness> {
        for w in [u, v] {
            self.graph.check_vertex(w)?;
            if self.is_cone(w) {
                return Err(Error::domain(format!(
                    "vertex {w} is a cone vertex; electric geodesics join ordinary vertices"
                )));
            }
        }
        let mut verts = self.graph.geodesic(u, v)?.vertices;
        loop {
            let prof = self.index.penetration_profile(&PathWitness {
                host: self.graph.id().to_string(),
                vertices: verts.clone(),
                length: Ratio::from_integer(0),
                quality: None,
            });
            if !prof.backtracking {
                break;
            }
            let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
            for vis in &prof.visits {
                *counts.entry(vis.member).or_default() += 1;
            }
            let m = prof
                .visits
                .iter()
                .find(|vis| counts[&vis.member] > 1)
                .unwrap()
                .member;
            let first = prof.first_visit(m).unwrap();
            let last = prof.last_visit(m).unwrap();
            let mut spliced = verts[..=first.entry_pos].to_vec();
            spliced.push(self.cones[m]);
            spliced.extend_from_slice(&verts[last.exit_pos..]);
            verts = spliced;
        }
        let mut p = PathWitness::new(&self.graph, verts)?;
        self.graph.certify_quasigeodesic(&mut p)?;
        Ok(p)
    }

    /// Smallest `B` for which two non-backtracking paths with common endpoints
    /// have similar intersection patterns: a member met by only one path is
    /// crossed intrinsically within `B`, and a member met by both is entered
    /// (and exited) at points intrinsically within `B` of each other.
    pub fn check_similar_intersections(&self, p1: &PathWitness, p2: &PathWitness) -> Result<Length> {
        if p1.start() != p2.start() || p1.end() != p2.end() {
            return Err(Error::domain("paths do not share endpoints"));
        }
        let a = self.profile(p1);
        let b = self.profile(p2);
        if a.backtracking || b.backtracking {
            return Err(Error::domain("similar-intersection check needs non-backtracking paths"));
        }
        let intrinsic = |m: usize, x: usize, y: usize| -> Result<Length> {
            self.index
                .intrinsic(m)
                .ok_or_else(|| Error::DisconnectedMember(self.index.name(m).to_string()))?
                .get(x, y)
                .ok_or_else(|| Error::invariant(format!("vertex {x} or {y} outside member {m}")))
        };
        let mut best = Ratio::from_integer(0);
        for (mine, other) in [(&a, &b), (&b, &a)] {
            for vis in &mine.visits {
                match other.first_visit(vis.member) {
                    None => best = best.max(intrinsic(vis.member, vis.entry, vis.exit)?),
                    Some(o) => {
                        best = best.max(intrinsic(vis.member, vis.entry, o.entry)?);
                        best = best.max(intrinsic(vis.member, vis.exit, o.exit)?);
                    }
                }
            }
        }
        Ok(best)
    }

    /// Maps a path of the glued space to the coned space: horoball vertices
    /// above level 0 collapse to their member's cone vertex.
    pub fn collapse_glued_path(&self, gs: &GluedSpace, path: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::with_capacity(path.len());
        for &v in path {
            let w = if gs.index.is_host(v) {
                v
            } else {
                self.cones[gs.index.member_of(v).unwrap()]
            };
            if out.last() != Some(&w) {
                out.push(w);
            }
        }
        out
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

    #[test]
    fn empty_family_keeps_distances() {
        let g = path(6);
        let cs = cone_off(&g, &HoroFamily::empty("path")).unwrap();
        assert_eq!(cs.graph.n(), 6);
        assert_eq!(cs.graph.all_pairs().row(0), g.all_pairs().row(0));
        let p = cs.electric_geodesic_nb(0, 5).unwrap();
        assert_eq!(p.vertices, g.geodesic(0, 5).unwrap().vertices);
    }

    #[test]
    fn covering_member_gives_unit_distance() {
        let g = path(11);
        let fam = HoroFamily::new("path", [("all".to_string(), (0..11).collect())], int(1));
        let cs = cone_off(&g, &fam).unwrap();
        assert_eq!(cs.graph.distance(0, 10).unwrap(), int(1));
        let p = cs.electric_geodesic_nb(0, 10).unwrap();
        assert_eq!(p.vertices, vec![0, 11, 10]);
        assert_eq!(p.length, int(1));
        assert!(cs.electric_geodesic_nb(11, 0).is_err());
    }

    #[test]
    fn cone_edges_are_halves_and_removable() {
        let g = path(8);
        let fam = HoroFamily::new(
            "path",
            [("A".to_string(), vec![1, 2]), ("B".to_string(), vec![5, 6, 7])],
            int(2),
        );
        let cs = cone_off(&g, &fam).unwrap();
        for (m, set) in cs.members().enumerate() {
            let c = cs.cone(m);
            assert_eq!(cs.graph.neighbors(c).len(), set.len());
            for &v in set {
                assert_eq!(cs.graph.edge_length(v, c), Some(frac(1, 2)));
            }
        }
        let host_edges: Vec<_> = cs
            .graph
            .edges()
            .iter()
            .filter(|&&(u, v, _)| !cs.is_cone(u) && !cs.is_cone(v))
            .cloned()
            .collect();
        assert_eq!(host_edges, g.edges());
    }

    #[test]
    fn backtracking_is_spliced() {
        // square 0-1-2-3-0 with member {0, 2}: the coned geodesic 0..2 has a
        // tie between the cone route and the route through 1; the splice
        // guarantees a single visit either way
        let g = MetricGraph::from_edges(
            "sq",
            4,
            [(0, 1, frac(1, 2)), (1, 2, frac(1, 2)), (2, 3, int(1)), (3, 0, int(1))],
        )
        .unwrap();
        let fam = HoroFamily::new("sq", [("H".to_string(), vec![0, 2])], int(1));
        let cs = cone_off(&g, &fam).unwrap();
        let p = cs.electric_geodesic_nb(3, 1).unwrap();
        assert!(!cs.profile(&p).backtracking);
        assert_eq!(p.length, cs.graph.distance(3, 1).unwrap());
    }

    #[test]
    fn similar_intersections_trivial_cases() {
        let g = path(9);
        let fam = HoroFamily::new("path", [("M".to_string(), vec![3, 4, 5])], int(1));
        let cs = cone_off(&g, &fam).unwrap();
        let p = cs.electric_geodesic_nb(0, 8).unwrap();
        assert_eq!(cs.check_similar_intersections(&p, &p).unwrap(), int(0));
        let q = cs.electric_geodesic_nb(0, 2).unwrap();
        assert_eq!(cs.check_similar_intersections(&q, &q).unwrap(), int(0));
        // the host route crosses the member; the cone route does not cross it
        let host_route = PathWitness::new(&cs.graph, (0..9).collect()).unwrap();
        assert_eq!(cs.check_similar_intersections(&p, &host_route).unwrap(), int(0));
        assert!(cs.check_similar_intersections(&p, &q).is_err());
    }
}
