use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{ConedSpace, GluedSpace, Visit};
use crate::error::{Error, Result};
use crate::metric_graph::PathWitness;

/// Where a vertex of an electro-ambient path came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    /// Copied from this position of the electric path.
    Electric(usize),
    /// Interior of the horoball detour replacing this visit.
    Horoball(usize),
}

/// An electric path with each member visit replaced by a horoball geodesic
/// between its entry and exit points.
#[derive(Clone, Debug)]
pub struct ElectroAmbient {
    pub electric: PathWitness,
    pub path: PathWitness,
    pub origin: Vec<Origin>,
    pub visits: Vec<Visit>,
}

impl ElectroAmbient {
    pub fn new(cs: &ConedSpace, gs: &GluedSpace, ep: &PathWitness) -> Result<Self> {
        ep.validate(&cs.graph)?;
        if cs.is_cone(ep.start()) || cs.is_cone(ep.end()) {
            return Err(Error::domain("electro-ambient path needs ordinary endpoints"));
        }
        if cs.family != gs.family {
            return Err(Error::domain("coned and glued spaces use different families"));
        }
        let prof = cs.profile(ep);
        if prof.backtracking {
            return Err(Error::domain("electric path backtracks"));
        }
        let mut verts = Vec::with_capacity(ep.len());
        let mut origin = Vec::with_capacity(ep.len());
        let mut pos = 0;
        for (vi, vis) in prof.visits.iter().enumerate() {
            while pos < vis.entry_pos {
                verts.push(ep.vertices[pos]);
                origin.push(Origin::Electric(pos));
                pos += 1;
            }
            let seg = gs.horoballs[vis.member].geodesic_glued(vis.entry, vis.exit)?;
            let last = seg.len() - 1;
            for (k, v) in seg.into_iter().enumerate() {
                verts.push(v);
                origin.push(match k {
                    0 => Origin::Electric(vis.entry_pos),
                    k if k == last => Origin::Electric(vis.exit_pos),
                    _ => Origin::Horoball(vi),
                });
            }
            pos = vis.exit_pos + 1;
        }
        while pos < ep.len() {
            verts.push(ep.vertices[pos]);
            origin.push(Origin::Electric(pos));
            pos += 1;
        }
        let mut path = PathWitness::new(&gs.graph, verts)?;
        gs.graph.certify_quasigeodesic(&mut path)?;
        Ok(ElectroAmbient {
            electric: ep.clone(),
            path,
            origin,
            visits: prof.visits,
        })
    }

    /// The coned-space vertex that position `pos` of the ambient path stands
    /// for: horoball interiors collapse to the cone vertex when the electric
    /// path went through it, and to the entry point otherwise.
    pub fn collapse(&self, cs: &ConedSpace, pos: usize) -> usize {
        match self.origin[pos] {
            Origin::Electric(p) => self.electric.vertices[p],
            Origin::Horoball(vi) => {
                let vis = &self.visits[vi];
                if vis.through_cone {
                    cs.cone(vis.member)
                } else {
                    vis.entry
                }
            }
        }
    }
}

/// Result of projecting one coned-space vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Projection {
    /// Position on the electro-ambient path.
    pub position: usize,
    /// The glued-space vertex at that position.
    pub glued: usize,
    /// Its coned-space counterpart on the electric path.
    pub coned: usize,
}

/// Electric projection onto one electric path, tabulated for every vertex of
/// the coned space by one multi-source search in the glued space.
#[derive(Clone, Debug)]
pub struct ElectricProjector {
    pub ambient: ElectroAmbient,
    table: Vec<Projection>,
}

impl ElectricProjector {
    pub fn new(cs: &ConedSpace, gs: &GluedSpace, ep: &PathWitness) -> Result<Self> {
        let ambient = ElectroAmbient::new(cs, gs, ep)?;
        let nearest = gs.graph.nearest_sources_raw(&ambient.path.vertices);
        let pos_of: HashMap<usize, usize> = ambient
            .path
            .vertices
            .iter()
            .enumerate()
            .rev()
            .map(|(i, &v)| (v, i))
            .collect();
        let lookup = |host_v: usize| {
            let glued = nearest[host_v].1;
            let position = pos_of[&glued];
            Projection {
                position,
                glued,
                coned: ambient.collapse(cs, position),
            }
        };
        let table = (0..cs.graph.n())
            .map(|y| match cs.member_of_cone(y) {
                Some(m) => lookup(cs.representative(m)),
                None => lookup(y),
            })
            .collect();
        Ok(ElectricProjector { ambient, table })
    }

    pub fn project(&self, y: usize) -> Projection {
        self.table[y]
    }

    pub fn table(&self) -> &[Projection] {
        &self.table
    }
}

/// Projects `y` onto the electro-ambient representative of `mu_hat`.
pub fn electric_projection(
    cs: &ConedSpace,
    gs: &GluedSpace,
    y: usize,
    mu_hat: &PathWitness,
) -> Result<Projection> {
    cs.graph.check_vertex(y)?;
    Ok(ElectricProjector::new(cs, gs, mu_hat)?.project(y))
}

#[cfg(test)]
mod tests {
    use super::super::{cone_off, glue_cones, HoroFamily};
    use super::*;
    use crate::length::int;
    use crate::metric_graph::MetricGraph;

    fn path(n: usize) -> MetricGraph {
        let e: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        MetricGraph::unit("path", n, &e).unwrap()
    }

    #[test]
    fn no_member_path_is_unchanged() {
        let g = path(6);
        let fam = HoroFamily::new("path", [("M".to_string(), vec![5])], int(1));
        let cs = cone_off(&g, &fam).unwrap();
        let gs = glue_cones(&g, &fam, None).unwrap();
        let ep = cs.electric_geodesic_nb(0, 3).unwrap();
        let ea = ElectroAmbient::new(&cs, &gs, &ep).unwrap();
        assert_eq!(ea.path.vertices, ep.vertices);
    }

    #[test]
    fn cone_detour_becomes_horoball_geodesic() {
        let g = path(11);
        let fam = HoroFamily::new("path", [("all".to_string(), (0..11).collect())], int(1));
        let cs = cone_off(&g, &fam).unwrap();
        let gs = glue_cones(&g, &fam, None).unwrap();
        let ep = cs.electric_geodesic_nb(0, 10).unwrap();
        let ea = ElectroAmbient::new(&cs, &gs, &ep).unwrap();
        let hb = &gs.horoballs[0];
        let oracle = hb.graph.distance(hb.local(0, 0), hb.local(0, 10)).unwrap();
        assert_eq!(ea.path.length, oracle);
        assert_eq!((ea.path.start(), ea.path.end()), (0, 10));
        assert!(ea.path.quality.is_some());
        // interior points collapse onto the cone vertex
        assert_eq!(ea.collapse(&cs, 1), cs.cone(0));
    }

    #[test]
    fn projection_of_points_and_cones() {
        let g = path(9);
        let fam = HoroFamily::new(
            "path",
            [("A".to_string(), vec![2, 3, 4]), ("S".to_string(), vec![7])],
            int(1),
        );
        let cs = cone_off(&g, &fam).unwrap();
        let gs = glue_cones(&g, &fam, None).unwrap();
        let mu = cs.electric_geodesic_nb(0, 5).unwrap();
        for &v in &mu.vertices {
            if !cs.is_cone(v) {
                assert_eq!(electric_projection(&cs, &gs, v, &mu).unwrap().coned, v);
            }
        }
        let single = electric_projection(&cs, &gs, cs.cone(1), &mu).unwrap();
        let z = electric_projection(&cs, &gs, 7, &mu).unwrap();
        assert_eq!(single, z);
        assert_eq!(z.coned, 5);
    }
}
