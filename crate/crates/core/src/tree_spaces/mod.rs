//! Trees of spaces over a finite base tree: structural checks, the total
//! space `X`, the induced tree of coned-off spaces `TC(X)` and the cone locus.

mod locus;
mod validate;

pub use locus::{cone_locus, ConeLocus, LocusComponent};
pub use validate::{validate, DensityRecord, MapDistortion, ProperTable, ValidationReport};

use std::collections::{BTreeMap, VecDeque};

use num_rational::Ratio;

use crate::electric::{cone_off, glue_cones, ConedSpace, GluedSpace, HoroFamily};
use crate::error::{Error, Result};
use crate::length::Length;
use crate::metric_graph::{GraphBuilder, MetricGraph};

/// A finite rooted tree; edges keep their declared orientation `(v1, v2)`.
#[derive(Clone, Debug)]
pub struct BaseTree {
    n: usize,
    root: usize,
    edges: Vec<(usize, usize)>,
    incident: Vec<Vec<(usize, usize)>>,
    parent: Vec<Option<(usize, usize)>>,
    depth: Vec<usize>,
    bfs: Vec<usize>,
}

impl BaseTree {
    pub fn new(n: usize, root: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if n == 0 || root >= n {
            return Err(Error::domain("base tree needs a root among its vertices"));
        }
        if edges.len() != n - 1 {
            return Err(Error::domain(format!(
                "a tree on {n} vertices has {} edges, got {}",
                n - 1,
                edges.len()
            )));
        }
        let mut incident = vec![Vec::new(); n];
        for (e, &(a, b)) in edges.iter().enumerate() {
            if a >= n || b >= n || a == b {
                return Err(Error::domain(format!("bad tree edge ({a}, {b})")));
            }
            incident[a].push((b, e));
            incident[b].push((a, e));
        }
        for inc in &mut incident {
            inc.sort_unstable();
        }
        let mut parent = vec![None; n];
        let mut depth = vec![usize::MAX; n];
        let mut bfs = Vec::with_capacity(n);
        let mut queue = VecDeque::from([root]);
        depth[root] = 0;
        while let Some(v) = queue.pop_front() {
            bfs.push(v);
            for &(w, e) in &incident[v] {
                if depth[w] == usize::MAX {
                    depth[w] = depth[v] + 1;
                    parent[w] = Some((v, e));
                    queue.push_back(w);
                }
            }
        }
        if bfs.len() != n {
            return Err(Error::domain("base tree is disconnected"));
        }
        Ok(BaseTree {
            n,
            root,
            edges,
            incident,
            parent,
            depth,
            bfs,
        })
    }

    pub fn single() -> Self {
        BaseTree::new(1, 0, Vec::new()).unwrap()
    }

    /// Path `0 - 1 - ... - len` rooted at 0.
    pub fn path(len: usize) -> Self {
        BaseTree::new(len + 1, 0, (0..len).map(|i| (i, i + 1)).collect()).unwrap()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// `(neighbor, edge index)` pairs, by neighbor id.
    pub fn incident(&self, v: usize) -> &[(usize, usize)] {
        &self.incident[v]
    }

    pub fn parent(&self, v: usize) -> Option<(usize, usize)> {
        self.parent[v]
    }

    pub fn depth(&self, v: usize) -> usize {
        self.depth[v]
    }

    pub fn bfs_order(&self) -> &[usize] {
        &self.bfs
    }

    /// Children of `v` with the connecting edges, by child id.
    pub fn children(&self, v: usize) -> Vec<(usize, usize)> {
        self.incident[v]
            .iter()
            .copied()
            .filter(|&(w, _)| self.parent[w].is_some_and(|(p, _)| p == v))
            .collect()
    }

    /// Which end of edge `e` is `v`: 0 for `v1`, 1 for `v2`.
    pub fn end_of(&self, e: usize, v: usize) -> Option<usize> {
        let (a, b) = self.edges[e];
        if v == a {
            Some(0)
        } else if v == b {
            Some(1)
        } else {
            None
        }
    }

    /// Vertices from `v` up to the root, inclusive.
    pub fn path_to_root(&self, v: usize) -> Vec<usize> {
        let mut out = vec![v];
        let mut cur = v;
        while let Some((p, _)) = self.parent[cur] {
            out.push(p);
            cur = p;
        }
        out
    }

    pub fn distance(&self, u: usize, v: usize) -> usize {
        let (mut a, mut b) = (u, v);
        let mut d = 0;
        while a != b {
            if self.depth[a] >= self.depth[b] {
                a = self.parent[a].unwrap().0;
            } else {
                b = self.parent[b].unwrap().0;
            }
            d += 1;
        }
        d
    }
}

#[derive(Clone, Debug)]
pub struct VertexSpace {
    pub graph: MetricGraph,
    pub family: HoroFamily,
}

#[derive(Clone, Debug)]
pub struct EdgeSpace {
    pub graph: MetricGraph,
    pub family: HoroFamily,
    /// `maps[i][x]` is the image of `x` in the space over the edge's `i`-th end.
    pub maps: [Vec<usize>; 2],
    pub declared_k: Length,
    pub declared_eps: Length,
}

#[derive(Clone, Debug)]
pub struct TreeOfSpaces {
    pub id: String,
    pub tree: BaseTree,
    pub vertices: Vec<VertexSpace>,
    pub edges: Vec<EdgeSpace>,
    /// `incidence[e][i][β]`: vertex-member containing the image of edge-member `β`.
    incidence: Vec<[Vec<usize>; 2]>,
}

impl TreeOfSpaces {
    /// Builds and structurally checks a tree of spaces; all failures are
    /// reported together.
    pub fn new(
        id: impl Into<String>,
        tree: BaseTree,
        vertices: Vec<VertexSpace>,
        edges: Vec<EdgeSpace>,
    ) -> Result<Self> {
        let mut fails = Vec::new();
        if vertices.len() != tree.n() {
            fails.push(format!("{} vertex spaces for {} tree vertices", vertices.len(), tree.n()));
        }
        if edges.len() != tree.edges().len() {
            fails.push(format!("{} edge spaces for {} tree edges", edges.len(), tree.edges().len()));
        }
        if !fails.is_empty() {
            return Err(Error::InvalidTree(fails));
        }
        for (v, vs) in vertices.iter().enumerate() {
            if let Err(e) = vs.family.validate(&vs.graph) {
                fails.push(format!("vertex {v}: {e}"));
            }
        }
        let mut incidence = Vec::with_capacity(edges.len());
        for (e, es) in edges.iter().enumerate() {
            if let Err(err) = es.family.validate(&es.graph) {
                fails.push(format!("edge {e}: {err}"));
            }
            let ends = tree.edges()[e];
            let mut inc: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
            for i in 0..2 {
                let v = if i == 0 { ends.0 } else { ends.1 };
                match check_map(es, &vertices[v], i) {
                    Ok(table) => inc[i] = table,
                    Err(msgs) => fails.extend(msgs.into_iter().map(|m| format!("edge {e} → {v}: {m}"))),
                }
            }
            incidence.push(inc);
        }
        if !fails.is_empty() {
            return Err(Error::InvalidTree(fails));
        }
        Ok(TreeOfSpaces {
            id: id.into(),
            tree,
            vertices,
            edges,
            incidence,
        })
    }

    pub fn incidence(&self, e: usize, end: usize) -> &[usize] {
        &self.incidence[e][end]
    }

    pub fn map(&self, e: usize, end: usize) -> &[usize] {
        &self.edges[e].maps[end]
    }

    /// True when no space carries a peripheral structure.
    pub fn is_plain(&self) -> bool {
        self.vertices.iter().all(|v| v.family.is_empty())
    }
}

/// Checks one edge inclusion: total, in range, injective, and strictly
/// type-preserving. Returns the member incidence table.
fn check_map(es: &EdgeSpace, vs: &VertexSpace, end: usize) -> std::result::Result<Vec<usize>, Vec<String>> {
    let map = &es.maps[end];
    let mut fails = Vec::new();
    if map.len() != es.graph.n() {
        return Err(vec![format!("map covers {} of {} vertices", map.len(), es.graph.n())]);
    }
    let mut seen = vec![usize::MAX; vs.graph.n()];
    for (x, &y) in map.iter().enumerate() {
        if y >= vs.graph.n() {
            fails.push(format!("image {y} of {x} is out of range"));
            continue;
        }
        if seen[y] != usize::MAX {
            fails.push(format!("not injective: {} and {x} both map to {y}", seen[y]));
        }
        seen[y] = x;
    }
    if !fails.is_empty() {
        return Err(fails);
    }
    let v_owner = vs.family.member_of(vs.graph.n());
    let e_owner = es.family.member_of(es.graph.n());
    let v_names: Vec<&String> = vs.family.members.keys().collect();
    let e_names: Vec<&String> = es.family.members.keys().collect();
    let mut table = Vec::with_capacity(es.family.len());
    for (b, set) in es.family.members.values().enumerate() {
        let targets: Vec<Option<usize>> = set.iter().map(|&x| v_owner[map[x]]).collect();
        match targets[0] {
            Some(a) if targets.iter().all(|&t| t == Some(a)) => table.push(a),
            _ => {
                fails.push(format!(
                    "edge-member `{}` does not map into a single vertex-member",
                    e_names[b]
                ));
                table.push(usize::MAX);
            }
        }
    }
    // the preimage of each vertex-member is empty or exactly one edge-member
    let mut preimage: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (x, &y) in map.iter().enumerate() {
        if let Some(a) = v_owner[y] {
            preimage.entry(a).or_default().push(x);
        }
    }
    for (a, xs) in preimage {
        let owners: Vec<Option<usize>> = xs.iter().map(|&x| e_owner[x]).collect();
        let ok = match owners[0] {
            Some(b) => {
                owners.iter().all(|&o| o == Some(b))
                    && es.family.members.values().nth(b).unwrap().len() == xs.len()
            }
            None => false,
        };
        if !ok {
            fails.push(format!(
                "preimage of vertex-member `{}` is not exactly one edge-member",
                v_names[a]
            ));
        }
    }
    let mut used = BTreeMap::new();
    for (b, &a) in table.iter().enumerate() {
        if a == usize::MAX {
            continue;
        }
        if let Some(prev) = used.insert(a, b) {
            fails.push(format!(
                "edge-members `{}` and `{}` both map into `{}`",
                e_names[prev], e_names[b], v_names[a]
            ));
        }
    }
    if fails.is_empty() {
        Ok(table)
    } else {
        Err(fails)
    }
}

/// The total space: disjoint union of vertex spaces plus a unit rung between
/// `f_{e,v1}(x)` and `f_{e,v2}(x)` for every edge-space vertex `x`.
#[derive(Clone, Debug)]
pub struct TotalSpace {
    pub graph: MetricGraph,
    offsets: Vec<usize>,
    owner: Vec<usize>,
}

impl TotalSpace {
    pub fn id_of(&self, v: usize, local: usize) -> usize {
        self.offsets[v] + local
    }

    /// Base-tree vertex over which `x` lies.
    pub fn vertex_of(&self, x: usize) -> usize {
        self.owner[x]
    }

    pub fn local_of(&self, x: usize) -> usize {
        x - self.offsets[self.owner[x]]
    }

    pub fn block(&self, v: usize) -> std::ops::Range<usize> {
        let end = self.offsets.get(v + 1).copied().unwrap_or(self.graph.n());
        self.offsets[v]..end
    }
}

pub fn assemble_total(tos: &TreeOfSpaces) -> Result<TotalSpace> {
    let graphs: Vec<&MetricGraph> = tos.vertices.iter().map(|v| &v.graph).collect();
    let (mut b, offsets, owner) = disjoint_union(&graphs)?;
    add_rungs(&mut b, tos, &offsets)?;
    Ok(TotalSpace {
        graph: b.build(format!("{}/X", tos.id))?,
        offsets,
        owner,
    })
}

fn disjoint_union(graphs: &[&MetricGraph]) -> Result<(GraphBuilder, Vec<usize>, Vec<usize>)> {
    let total: usize = graphs.iter().map(|g| g.n()).sum();
    let mut b = GraphBuilder::new(total);
    let mut offsets = Vec::with_capacity(graphs.len());
    let mut owner = Vec::with_capacity(total);
    let mut off = 0;
    for (v, g) in graphs.iter().enumerate() {
        offsets.push(off);
        for &(x, y, len) in g.edges() {
            b.add_edge(off + x, off + y, len)?;
        }
        for (&x, l) in g.labels() {
            b.label(off + x, format!("{v}:{l}"));
        }
        owner.extend(std::iter::repeat_n(v, g.n()));
        off += g.n();
    }
    Ok((b, offsets, owner))
}

fn add_rungs(b: &mut GraphBuilder, tos: &TreeOfSpaces, offsets: &[usize]) -> Result<()> {
    let one = Ratio::from_integer(1);
    for (e, &(v1, v2)) in tos.tree.edges().iter().enumerate() {
        let es = &tos.edges[e];
        for x in 0..es.graph.n() {
            b.add_edge(offsets[v1] + es.maps[0][x], offsets[v2] + es.maps[1][x], one)?;
        }
    }
    Ok(())
}

/// `TC(X)`: coned vertex spaces joined by rungs over edge-space vertices and
/// by rungs between corresponding cone points.
#[derive(Clone, Debug)]
pub struct ConedTree {
    pub graph: MetricGraph,
    offsets: Vec<usize>,
    owner: Vec<usize>,
    host_sizes: Vec<usize>,
}

impl ConedTree {
    pub fn id_of(&self, v: usize, local: usize) -> usize {
        self.offsets[v] + local
    }

    pub fn vertex_of(&self, x: usize) -> usize {
        self.owner[x]
    }

    pub fn local_of(&self, x: usize) -> usize {
        x - self.offsets[self.owner[x]]
    }

    pub fn is_cone(&self, x: usize) -> bool {
        self.local_of(x) >= self.host_sizes[self.owner[x]]
    }

    pub fn block(&self, v: usize) -> std::ops::Range<usize> {
        let end = self.offsets.get(v + 1).copied().unwrap_or(self.graph.n());
        self.offsets[v]..end
    }

    /// The `TC(X)` vertex of a total-space vertex.
    pub fn from_total(&self, total: &TotalSpace, x: usize) -> usize {
        self.id_of(total.vertex_of(x), total.local_of(x))
    }

    /// The total-space vertex of an ordinary `TC(X)` vertex.
    pub fn to_total(&self, total: &TotalSpace, x: usize) -> Option<usize> {
        (!self.is_cone(x)).then(|| total.id_of(self.owner[x], self.local_of(x)))
    }
}

pub fn induced_coned_tree(tos: &TreeOfSpaces, coned: &[ConedSpace]) -> Result<ConedTree> {
    let graphs: Vec<&MetricGraph> = coned.iter().map(|c| &c.graph).collect();
    let (mut b, offsets, owner) = disjoint_union(&graphs)?;
    add_rungs(&mut b, tos, &offsets)?;
    let one = Ratio::from_integer(1);
    for (e, &(v1, v2)) in tos.tree.edges().iter().enumerate() {
        for beta in 0..tos.edges[e].family.len() {
            let a1 = tos.incidence(e, 0)[beta];
            let a2 = tos.incidence(e, 1)[beta];
            b.add_edge(offsets[v1] + coned[v1].cone(a1), offsets[v2] + coned[v2].cone(a2), one)?;
        }
    }
    Ok(ConedTree {
        graph: b.build(format!("{}/TC", tos.id))?,
        offsets,
        owner,
        host_sizes: coned.iter().map(|c| c.host_n()).collect(),
    })
}

/// Everything derived from a tree of spaces that the ladder and the
/// harness work with.
#[derive(Clone, Debug)]
pub struct TreeGeometry {
    pub tos: TreeOfSpaces,
    pub coned: Vec<ConedSpace>,
    pub glued: Vec<GluedSpace>,
    pub total: TotalSpace,
    pub tc: ConedTree,
    /// `inverse[e][i][y]`: preimage in `X_e` of `y` in the `i`-th end space.
    inverse: Vec<[Vec<usize>; 2]>,
}

impl TreeGeometry {
    /// Builds coned and glued vertex spaces (one common horoball depth,
    /// defaulting to the widest member over all vertex spaces), `X` and `TC(X)`.
    pub fn new(tos: TreeOfSpaces, depth: Option<u32>) -> Result<Self> {
        let coned: Vec<ConedSpace> = tos
            .vertices
            .iter()
            .map(|v| cone_off(&v.graph, &v.family))
            .collect::<Result<_>>()?;
        let depth = match depth {
            Some(d) => d,
            None => {
                let widest = coned
                    .iter()
                    .flat_map(|c| (0..c.index.member_count()).map(move |m| (c, m)))
                    .map(|(c, m)| {
                        c.index
                            .intrinsic(m)
                            .map(|im| im.diameter())
                            .ok_or_else(|| Error::DisconnectedMember(c.index.name(m).to_string()))
                    })
                    .collect::<Result<Vec<_>>>()?
                    .into_iter()
                    .max()
                    .unwrap_or_else(|| Ratio::from_integer(0));
                crate::electric::default_depth(&widest)
            }
        };
        let glued: Vec<GluedSpace> = tos
            .vertices
            .iter()
            .map(|v| glue_cones(&v.graph, &v.family, Some(depth)))
            .collect::<Result<_>>()?;
        let total = assemble_total(&tos)?;
        let tc = induced_coned_tree(&tos, &coned)?;
        let inverse = tos
            .tree
            .edges()
            .iter()
            .enumerate()
            .map(|(e, &(v1, v2))| {
                [(0, v1), (1, v2)].map(|(end, v)| {
                    let mut inv = vec![usize::MAX; tos.vertices[v].graph.n()];
                    for (x, &y) in tos.map(e, end).iter().enumerate() {
                        inv[y] = x;
                    }
                    inv
                })
            })
            .collect();
        Ok(TreeGeometry {
            tos,
            coned,
            glued,
            total,
            tc,
            inverse,
        })
    }

    pub fn depth(&self) -> u32 {
        self.glued[0].depth
    }

    /// `φ_{v,e}`: carries a point of `f_{e,v-}(X_e)` across edge `e` to `X_v`.
    pub fn phi(&self, v: usize, e: usize, p: usize) -> Result<usize> {
        let end = self
            .tos
            .tree
            .end_of(e, v)
            .ok_or_else(|| Error::domain(format!("vertex {v} is not an end of edge {e}")))?;
        // maps are injective, so the preimage is a single point
        match self.preimage(e, 1 - end, p) {
            Some(x) => Ok(self.tos.map(e, end)[x]),
            None => Err(Error::domain(format!("{p} is not in the image of edge {e}"))),
        }
    }

    /// Preimage in `X_e` of `y` in the space over end `end` of edge `e`.
    pub fn preimage(&self, e: usize, end: usize, y: usize) -> Option<usize> {
        self.inverse[e][end].get(y).copied().filter(|&x| x != usize::MAX)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::length::int;

    fn cycle(n: usize) -> MetricGraph {
        let e: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        MetricGraph::unit("Y", n, &e).unwrap()
    }

    pub(crate) fn identity_segment(len: usize, y: &MetricGraph, fam: &HoroFamily) -> TreeOfSpaces {
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
        TreeOfSpaces::new("seg", BaseTree::path(len), vec![vs; len + 1], vec![es; len]).unwrap()
    }

    #[test]
    fn base_tree_queries() {
        let t = BaseTree::new(5, 0, vec![(0, 1), (1, 2), (0, 3), (3, 4)]).unwrap();
        assert_eq!(t.bfs_order(), &[0, 1, 3, 2, 4]);
        assert_eq!(t.path_to_root(4), vec![4, 3, 0]);
        assert_eq!(t.distance(2, 4), 4);
        assert_eq!(t.children(0), vec![(1, 0), (3, 2)]);
        assert!(BaseTree::new(3, 0, vec![(0, 1), (0, 1)]).is_err());
    }

    #[test]
    fn identity_segment_total_space() {
        let y = cycle(6);
        let tos = identity_segment(1, &y, &HoroFamily::empty("Y"));
        let x = assemble_total(&tos).unwrap();
        assert_eq!(x.graph.n(), 12);
        for i in 0..6 {
            assert_eq!(x.graph.distance(x.id_of(0, i), x.id_of(1, i)).unwrap(), int(1));
        }
        assert_eq!(x.graph.distance(x.id_of(0, 0), x.id_of(1, 3)).unwrap(), int(4));
        let geo = TreeGeometry::new(tos, None).unwrap();
        // empty families: TC(X) = X
        assert_eq!(geo.tc.graph.all_pairs().row(0), geo.total.graph.all_pairs().row(0));
        assert_eq!(geo.phi(1, 0, 4).unwrap(), 4);
        assert!(geo.phi(2, 0, 4).is_err());
    }

    #[test]
    fn structure_failures_are_itemized() {
        let y = cycle(4);
        let fam = HoroFamily::new("Y", [("H".to_string(), vec![0, 1])], int(1));
        let vs = VertexSpace {
            graph: y.clone(),
            family: fam.clone(),
        };
        let es = EdgeSpace {
            graph: y.clone(),
            family: HoroFamily::empty("Y"),
            maps: [vec![0, 1, 2, 2], vec![0, 1, 2, 3]],
            declared_k: int(1),
            declared_eps: int(0),
        };
        match TreeOfSpaces::new("bad", BaseTree::path(1), vec![vs.clone(), vs], vec![es]) {
            Err(Error::InvalidTree(f)) => {
                assert!(f.iter().any(|m| m.contains("not injective")));
                assert!(f.iter().any(|m| m.contains("preimage")));
            }
            other => panic!("expected invalid tree, got {other:?}"),
        }
    }

    #[test]
    fn single_vertex_tc_is_coned_space() {
        let y = cycle(6);
        let fam = HoroFamily::new("Y", [("H".to_string(), vec![1, 2])], int(1));
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
        let geo = TreeGeometry::new(tos, None).unwrap();
        let cs = cone_off(&y, &fam).unwrap();
        assert_eq!(geo.tc.graph.all_pairs().row(4), cs.graph.all_pairs().row(4));
        assert_eq!(geo.total.graph.all_pairs().row(4), y.all_pairs().row(4));
    }
}
