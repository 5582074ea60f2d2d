use num_rational::Ratio;

use super::family::{FamilyIndex, HoroFamily, IntrinsicMetric};
use crate::error::{Error, Result};
use crate::length::Length;
use crate::metric_graph::{GraphBuilder, MetricGraph};

/// A combinatorial horoball over one member: level `k` copies of the member
/// vertices, vertical unit edges, and level-`k` unit edges between copies at
/// intrinsic distance at most `2^k`.
#[derive(Clone, Debug)]
pub struct Horoball {
    pub name: String,
    pub depth: u32,
    /// Host ids of the member, ascending; local column `i` is `columns[i]`.
    pub columns: Vec<usize>,
    /// Local graph with vertex `level * m + i`.
    pub graph: MetricGraph,
    offset: usize,
}

impl Horoball {
    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn local(&self, level: u32, column: usize) -> usize {
        level as usize * self.width() + column
    }

    /// Id in the glued space of a local vertex.
    pub fn to_glued(&self, local: usize) -> usize {
        let m = self.width();
        if local < m {
            self.columns[local]
        } else {
            self.offset + local - m
        }
    }

    pub fn column_of(&self, host_vertex: usize) -> Option<usize> {
        self.columns.binary_search(&host_vertex).ok()
    }

    /// Horoball geodesic between two member vertices, as glued-space ids.
    pub fn geodesic_glued(&self, x: usize, y: usize) -> Result<Vec<usize>> {
        let (i, j) = match (self.column_of(x), self.column_of(y)) {
            (Some(i), Some(j)) => (i, j),
            _ => {
                return Err(Error::domain(format!(
                    "{x} or {y} is not in member `{}`",
                    self.name
                )))
            }
        };
        let p = self.graph.geodesic(i, j)?;
        Ok(p.vertices.iter().map(|&l| self.to_glued(l)).collect())
    }
}

/// Smallest `d >= 1` with `2^(d-1) >= diameter`, so the top level joins
/// every pair of the widest member.
pub fn default_depth(max_diameter: &Length) -> u32 {
    let mut k = 0u32;
    while Ratio::from_integer(1i64 << k) < *max_diameter {
        k += 1;
    }
    k + 1
}

pub fn build_horoball(host: &MetricGraph, name: &str, member: &[usize], depth: u32) -> Result<Horoball> {
    if depth == 0 {
        return Err(Error::domain("horoball depth must be at least 1"));
    }
    if depth > 40 {
        return Err(Error::domain("horoball depth above 40 is not supported"));
    }
    for &v in member {
        host.check_vertex(v)?;
    }
    let im = IntrinsicMetric::new(host, name, member)?;
    Ok(assemble(name, &im, depth))
}

/// Horoball over a member whose intrinsic metric is given explicitly.
pub fn horoball_over(name: &str, metric: &IntrinsicMetric, depth: u32) -> Result<Horoball> {
    if depth == 0 || depth > 40 {
        return Err(Error::domain("horoball depth must lie in 1..=40"));
    }
    let hb = assemble(name, metric, depth);
    Ok(hb)
}

fn assemble(name: &str, im: &IntrinsicMetric, depth: u32) -> Horoball {
    let m = im.vertices().len();
    let levels = depth as usize + 1;
    let mut b = GraphBuilder::new(m * levels);
    let one = Ratio::from_integer(1);
    for k in 0..levels {
        let reach = (1i64 << k) * im.scale();
        for i in 0..m {
            if k > 0 {
                b.add_edge((k - 1) * m + i, k * m + i, one).unwrap();
            }
            for j in i + 1..m {
                if im.raw_local(i, j) <= reach {
                    b.add_edge(k * m + i, k * m + j, one).unwrap();
                }
            }
        }
    }
    let graph = b
        .build(format!("horoball[{name}]"))
        .expect("the top level is reached by vertical edges from every column");
    Horoball {
        name: name.to_string(),
        depth,
        columns: im.vertices().to_vec(),
        graph,
        offset: 0,
    }
}

/// The host with a combinatorial horoball attached along every member.
#[derive(Clone, Debug)]
pub struct GluedSpace {
    pub graph: MetricGraph,
    pub family: HoroFamily,
    pub index: FamilyIndex,
    pub depth: u32,
    pub horoballs: Vec<Horoball>,
    level: Vec<u32>,
    base: Vec<usize>,
}

/// Attaches horoballs of the given depth, or of [`default_depth`] over the
/// widest member when `depth` is `None`.
pub fn glue_cones(host: &MetricGraph, family: &HoroFamily, depth: Option<u32>) -> Result<GluedSpace> {
    family.validate(host)?;
    let metrics: Vec<IntrinsicMetric> = family
        .members
        .iter()
        .map(|(name, set)| IntrinsicMetric::new(host, name, set))
        .collect::<Result<_>>()?;
    let depth = match depth {
        Some(0) => return Err(Error::domain("horoball depth must be at least 1")),
        Some(d) => d,
        None => {
            let widest = metrics
                .iter()
                .map(IntrinsicMetric::diameter)
                .max()
                .unwrap_or_else(|| Ratio::from_integer(0));
            default_depth(&widest)
        }
    };
    if depth > 40 {
        return Err(Error::domain("horoball depth above 40 is not supported"));
    }
    let mut b = host.to_builder();
    let mut level = vec![0u32; host.n()];
    let mut base: Vec<usize> = (0..host.n()).collect();
    let mut owner: Vec<Option<usize>> = Vec::new();
    let mut horoballs = Vec::with_capacity(metrics.len());
    for (mi, (name, im)) in family.members.keys().zip(&metrics).enumerate() {
        let mut hb = assemble(name, im, depth);
        hb.offset = b.vertex_count();
        let m = hb.width();
        for k in 1..=depth {
            for &col in &hb.columns {
                let v = b.add_vertex();
                b.label(v, format!("{name}@{k}:{col}"));
                level.push(k);
                base.push(col);
                owner.push(Some(mi));
            }
        }
        for &(u, v, len) in hb.graph.edges() {
            let (gu, gv) = (hb.to_glued(u), hb.to_glued(v));
            if u < m && v < m {
                b.add_edge_min(gu, gv, len)?;
            } else {
                b.add_edge(gu, gv, len)?;
            }
        }
        horoballs.push(hb);
    }
    let graph = b.build(format!("{}/glued", host.id()))?;
    let mut index = FamilyIndex::new(host, family);
    index.extend(owner);
    Ok(GluedSpace {
        graph,
        family: family.clone(),
        index,
        depth,
        horoballs,
        level,
        base,
    })
}

impl GluedSpace {
    pub fn host_n(&self) -> usize {
        self.index.host_n()
    }

    pub fn level(&self, v: usize) -> u32 {
        self.level[v]
    }

    /// Host vertex that `v` sits above (itself for host vertices).
    pub fn base(&self, v: usize) -> usize {
        self.base[v]
    }

    /// All glued-space vertices of a member's horoball, level 0 included.
    pub fn horoball_vertices(&self, member: usize) -> Vec<usize> {
        let hb = &self.horoballs[member];
        (0..hb.graph.n()).map(|l| hb.to_glued(l)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::length::int;

    fn path(n: usize) -> MetricGraph {
        let e: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        MetricGraph::unit("path", n, &e).unwrap()
    }

    #[test]
    fn two_point_member_at_distance_eight() {
        let im = IntrinsicMetric::from_matrix(vec![0, 1], &[vec![int(0), int(8)], vec![int(8), int(0)]])
            .unwrap();
        let hb = horoball_over("pair", &im, 3).unwrap();
        // the only horizontal edge is at level 3 (8 <= 2^3): up 3, across 1, down 3
        assert_eq!(hb.graph.distance(hb.local(0, 0), hb.local(0, 1)).unwrap(), int(7));
        assert_eq!(hb.graph.n(), 8);
        assert_eq!(hb.graph.edges().len(), 6 + 1);
    }

    #[test]
    fn vertical_distance_is_level() {
        let g = path(5);
        let hb = build_horoball(&g, "P", &[0, 1, 2, 3, 4], 4).unwrap();
        for k in 0..=4u32 {
            for c in 0..5 {
                let d = hb.graph.distance(hb.local(0, c), hb.local(k, c)).unwrap();
                assert_eq!(d, int(k as i64));
            }
        }
        let hb1 = build_horoball(&g, "P", &[1, 2], 1).unwrap();
        assert_eq!(hb1.graph.edge_length(0, 1), Some(int(1)));
        assert!(build_horoball(&g, "P", &[0, 2], 1).is_err());
        assert!(build_horoball(&g, "P", &[0], 0).is_err());
    }

    #[test]
    fn default_depth_reaches_diameter() {
        assert_eq!(default_depth(&int(0)), 1);
        assert_eq!(default_depth(&int(1)), 1);
        assert_eq!(default_depth(&int(2)), 2);
        assert_eq!(default_depth(&int(8)), 4);
        assert_eq!(default_depth(&int(9)), 5);
    }

    #[test]
    fn glued_space_structure() {
        let g = path(7);
        let empty = glue_cones(&g, &HoroFamily::empty("path"), None).unwrap();
        assert_eq!(empty.graph.n(), 7);
        assert_eq!(empty.graph.all_pairs().row(3), g.all_pairs().row(3));

        let fam = HoroFamily::new("path", [("M".to_string(), vec![1, 2, 3, 4, 5])], int(1));
        let gs = glue_cones(&g, &fam, Some(2)).unwrap();
        assert_eq!(gs.graph.n(), 7 + 2 * 5);
        assert_eq!(gs.level(7), 1);
        assert_eq!(gs.base(7), 1);
        assert_eq!(gs.index.member_of(16), Some(0));
        // host distance 4 between 1 and 5 shrinks through level 2
        assert_eq!(gs.graph.distance(1, 5).unwrap(), int(4).min(int(2 + 1 + 2)));
        assert_eq!(gs.horoball_vertices(0).len(), 15);
        let disconnected = HoroFamily::new("path", [("M".to_string(), vec![1, 3])], int(1));
        assert!(glue_cones(&g, &disconnected, None).is_err());
    }
}
