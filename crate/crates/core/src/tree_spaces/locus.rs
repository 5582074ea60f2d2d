use std::collections::BTreeMap;

use num_rational::Ratio;
use serde::Serialize;

use super::{TotalSpace, TreeOfSpaces};
use crate::electric::HoroFamily;
use crate::error::{Error, Result};
use crate::metric_graph::MetricGraph;
use crate::partial_electro::Target;

/// One component of the cone locus: a subtree `T_α` of cone points and the
/// union `C_α` of the vertex-members over it.
#[derive(Clone, Debug, Serialize)]
pub struct LocusComponent {
    pub name: String,
    /// `(tree vertex, member index)`, sorted.
    pub nodes: Vec<(usize, usize)>,
    /// Links between node positions, one per edge-member.
    pub links: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConeLocus {
    pub components: Vec<LocusComponent>,
}

struct Dsu(Vec<usize>);

impl Dsu {
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut c = x;
        while self.0[c] != r {
            let next = self.0[c];
            self.0[c] = r;
            c = next;
        }
        r
    }
}

pub fn cone_locus(tos: &TreeOfSpaces) -> Result<ConeLocus> {
    let mut node_id: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (v, vs) in tos.vertices.iter().enumerate() {
        for a in 0..vs.family.len() {
            let id = node_id.len();
            node_id.insert((v, a), id);
        }
    }
    let nodes: Vec<(usize, usize)> = node_id.keys().copied().collect();
    let mut dsu = Dsu((0..nodes.len()).collect());
    let mut links = Vec::new();
    for (e, &(v1, v2)) in tos.tree.edges().iter().enumerate() {
        for beta in 0..tos.edges[e].family.len() {
            let a = node_id[&(v1, tos.incidence(e, 0)[beta])];
            let b = node_id[&(v2, tos.incidence(e, 1)[beta])];
            let (ra, rb) = (dsu.find(a), dsu.find(b));
            if ra == rb {
                return Err(Error::invariant(format!(
                    "cone locus has a cycle through edge {e}"
                )));
            }
            dsu.0[ra] = rb;
            links.push((a, b));
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..nodes.len() {
        let r = dsu.find(i);
        groups.entry(r).or_default().push(i);
    }
    let mut components: Vec<LocusComponent> = groups
        .into_values()
        .map(|members| {
            let local: BTreeMap<usize, usize> =
                members.iter().enumerate().map(|(i, &n)| (n, i)).collect();
            let comp_links = links
                .iter()
                .filter(|(a, _)| local.contains_key(a))
                .map(|(a, b)| (local[a], local[b]))
                .collect();
            let (v, a) = nodes[members[0]];
            LocusComponent {
                name: format!("{v}:{}", tos.vertices[v].family.names().nth(a).unwrap()),
                nodes: members.iter().map(|&n| nodes[n]).collect(),
                links: comp_links,
            }
        })
        .collect();
    components.sort_by(|x, y| x.nodes.cmp(&y.nodes));
    for c in &components {
        let mut vs: Vec<usize> = c.nodes.iter().map(|n| n.0).collect();
        vs.dedup();
        if vs.len() != c.nodes.len() {
            return Err(Error::invariant(format!(
                "cone-locus component `{}` meets a tree vertex twice",
                c.name
            )));
        }
    }
    Ok(ConeLocus { components })
}

impl LocusComponent {
    /// The tree `T_α`, one unit edge per link.
    pub fn tree_graph(&self) -> Result<MetricGraph> {
        MetricGraph::unit(format!("T[{}]", self.name), self.nodes.len(), &self.links)
    }
}

impl ConeLocus {
    /// The family `{C_α}` on the total space together with the tree-collapse
    /// targets `g_α: C_α → T_α`.
    pub fn electrocution_data(
        &self,
        tos: &TreeOfSpaces,
        total: &TotalSpace,
    ) -> Result<(HoroFamily, BTreeMap<String, Target>)> {
        let sep = tos
            .vertices
            .iter()
            .filter(|v| !v.family.is_empty())
            .map(|v| v.family.separation)
            .min()
            .unwrap_or_else(|| Ratio::from_integer(1));
        let mut members = Vec::new();
        let mut targets = BTreeMap::new();
        for c in &self.components {
            let mut set = Vec::new();
            let mut map = BTreeMap::new();
            for (i, &(v, a)) in c.nodes.iter().enumerate() {
                for &x in tos.vertices[v].family.members.values().nth(a).unwrap() {
                    let gx = total.id_of(v, x);
                    set.push(gx);
                    map.insert(gx, i);
                }
            }
            members.push((c.name.clone(), set));
            targets.insert(
                c.name.clone(),
                Target {
                    graph: c.tree_graph()?,
                    map,
                },
            );
        }
        Ok((HoroFamily::new(total.graph.id(), members, sep), targets))
    }
}
