//! JSON forms of graphs, families, targets and trees of spaces. Lengths are
//! fraction strings; parse failures name the file position or field path.

use std::collections::BTreeMap;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::electric::HoroFamily;
use crate::error::{Error, Result};
use crate::length::{format_length, parse_length};
use crate::metric_graph::{GraphBuilder, MetricGraph};
use crate::partial_electro::Target;
use crate::tree_spaces::{BaseTree, EdgeSpace, TreeOfSpaces, VertexSpace};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphJson {
    pub space_id: String,
    pub vertices: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<BTreeMap<usize, String>>,
    pub edges: Vec<(usize, usize, String)>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetJson {
    #[serde(rename = "L")]
    pub l: GraphJson,
    pub g: BTreeMap<usize, usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseTreeJson {
    pub root: usize,
    pub edges: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexSpaceJson {
    pub graph: GraphJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<HoroFamily>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpaceJson {
    pub graph: GraphJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<HoroFamily>,
    /// Keyed by the tree vertex at each end; each map sends edge-space
    /// vertices to vertices of that end's space.
    pub maps: BTreeMap<usize, BTreeMap<usize, usize>>,
    #[serde(rename = "declared_K")]
    pub declared_k: String,
    pub declared_eps: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeOfSpacesJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub tree: BaseTreeJson,
    pub vertex_spaces: BTreeMap<usize, VertexSpaceJson>,
    pub edge_spaces: BTreeMap<usize, EdgeSpaceJson>,
}

fn at(location: impl Into<String>, message: impl ToString) -> Error {
    Error::Parse {
        location: location.into(),
        message: message.to_string(),
    }
}

/// Deserializes `text`, reporting syntax and shape errors as `source:line:column`.
pub fn parse_json<T: DeserializeOwned>(text: &str, source: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| at(format!("{source}:{}:{}", e.line(), e.column()), e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    parse_json(&text, &path.display().to_string())
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

impl GraphJson {
    pub fn from_graph(g: &MetricGraph) -> Self {
        GraphJson {
            space_id: g.id().to_string(),
            vertices: (0..g.n()).collect(),
            labels: (!g.labels().is_empty()).then(|| g.labels().clone()),
            edges: g.edges().iter().map(|(u, v, l)| (*u, *v, format_length(l))).collect(),
        }
    }

    /// Vertices must be exactly `0..n` in some order.
    pub fn to_graph(&self, path: &str) -> Result<MetricGraph> {
        let n = self.vertices.len();
        let mut seen = vec![false; n];
        for (i, &v) in self.vertices.iter().enumerate() {
            if v >= n || std::mem::replace(&mut seen[v], true) {
                return Err(at(format!("{path}.vertices[{i}]"), format!("vertex ids must be 0..{n} without repeats")));
            }
        }
        let mut b = GraphBuilder::new(n);
        for (i, (u, v, l)) in self.edges.iter().enumerate() {
            let loc = format!("{path}.edges[{i}]");
            let len = parse_length(l).map_err(|e| at(&loc, e))?;
            b.add_edge(*u, *v, len).map_err(|e| at(&loc, e))?;
        }
        for (v, s) in self.labels.iter().flatten() {
            if *v >= n {
                return Err(at(format!("{path}.labels.{v}"), "label on an unknown vertex"));
            }
            b.label(*v, s.clone());
        }
        b.build(self.space_id.clone()).map_err(|e| at(path, e))
    }
}

pub fn parse_graph(text: &str, source: &str) -> Result<MetricGraph> {
    parse_json::<GraphJson>(text, source)?.to_graph(source)
}

pub fn read_graph(path: &Path) -> Result<MetricGraph> {
    read_json::<GraphJson>(path)?.to_graph(&path.display().to_string())
}

/// Parses a family and checks it against its host.
pub fn parse_family(text: &str, source: &str, host: &MetricGraph) -> Result<HoroFamily> {
    let fam: HoroFamily = parse_json(text, source)?;
    let fam = HoroFamily::new(fam.host, fam.members, fam.separation);
    fam.validate(host).map_err(|e| at(source, e))?;
    Ok(fam)
}

pub fn read_family(path: &Path, host: &MetricGraph) -> Result<HoroFamily> {
    parse_family(&std::fs::read_to_string(path)?, &path.display().to_string(), host)
}

pub fn parse_targets(text: &str, source: &str) -> Result<BTreeMap<String, Target>> {
    let raw: BTreeMap<String, TargetJson> = parse_json(text, source)?;
    raw.into_iter()
        .map(|(name, t)| {
            let path = format!("{source}:{name}");
            let graph = t.l.to_graph(&format!("{path}.L"))?;
            if let Some((x, y)) = t.g.iter().find(|&(_, &y)| y >= graph.n()) {
                return Err(at(format!("{path}.g.{x}"), format!("target vertex {y} is outside L")));
            }
            Ok((name, Target { graph, map: t.g }))
        })
        .collect()
}

impl TreeOfSpacesJson {
    pub fn from_tree(tos: &TreeOfSpaces) -> Self {
        let vertex_spaces = tos
            .vertices
            .iter()
            .enumerate()
            .map(|(v, vs)| {
                let sj = VertexSpaceJson {
                    graph: GraphJson::from_graph(&vs.graph),
                    family: (!vs.family.is_empty()).then(|| vs.family.clone()),
                };
                (v, sj)
            })
            .collect();
        let edge_spaces = tos
            .edges
            .iter()
            .enumerate()
            .map(|(e, es)| {
                let (v1, v2) = tos.tree.edges()[e];
                let table = |m: &[usize]| m.iter().copied().enumerate().collect();
                let ej = EdgeSpaceJson {
                    graph: GraphJson::from_graph(&es.graph),
                    family: (!es.family.is_empty()).then(|| es.family.clone()),
                    maps: [(v1, table(&es.maps[0])), (v2, table(&es.maps[1]))].into_iter().collect(),
                    declared_k: format_length(&es.declared_k),
                    declared_eps: format_length(&es.declared_eps),
                };
                (e, ej)
            })
            .collect();
        TreeOfSpacesJson {
            id: Some(tos.id.clone()),
            tree: BaseTreeJson {
                root: tos.tree.root(),
                edges: tos.tree.edges().to_vec(),
            },
            vertex_spaces,
            edge_spaces,
        }
    }

    /// Spaces are keyed `0..n` over tree vertices and `0..m` over tree edges.
    pub fn to_tree(&self, source: &str) -> Result<TreeOfSpaces> {
        let n = self.vertex_spaces.len();
        let tree = BaseTree::new(n, self.tree.root, self.tree.edges.clone()).map_err(|e| at(format!("{source}:tree"), e))?;
        let keyed = |keys: Vec<usize>, what: &str| -> Result<()> {
            match keys.iter().enumerate().find(|&(i, &k)| i != k) {
                Some((i, _)) => Err(at(format!("{source}:{what}"), format!("expected keys 0..{}, missing {i}", keys.len()))),
                None => Ok(()),
            }
        };
        keyed(self.vertex_spaces.keys().copied().collect(), "vertex_spaces")?;
        keyed(self.edge_spaces.keys().copied().collect(), "edge_spaces")?;
        let family = |f: &Option<HoroFamily>, g: &MetricGraph| match f {
            Some(f) => HoroFamily::new(f.host.clone(), f.members.clone(), f.separation),
            None => HoroFamily::empty(g.id()),
        };
        let mut vertices = Vec::with_capacity(n);
        for (v, sj) in &self.vertex_spaces {
            let graph = sj.graph.to_graph(&format!("{source}:vertex_spaces.{v}.graph"))?;
            let family = family(&sj.family, &graph);
            vertices.push(VertexSpace { graph, family });
        }
        let mut edges = Vec::with_capacity(self.edge_spaces.len());
        for (e, ej) in &self.edge_spaces {
            let path = format!("{source}:edge_spaces.{e}");
            let graph = ej.graph.to_graph(&format!("{path}.graph"))?;
            let &(v1, v2) = tree
                .edges()
                .get(*e)
                .ok_or_else(|| at(&path, "no such tree edge"))?;
            let mut maps: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
            for (i, v) in [v1, v2].into_iter().enumerate() {
                let table = ej
                    .maps
                    .get(&v)
                    .ok_or_else(|| at(format!("{path}.maps"), format!("no map to tree vertex {v}")))?;
                maps[i] = (0..graph.n())
                    .map(|x| {
                        table
                            .get(&x)
                            .copied()
                            .ok_or_else(|| at(format!("{path}.maps.{v}"), format!("vertex {x} has no image")))
                    })
                    .collect::<Result<_>>()?;
            }
            if let Some(k) = ej.maps.keys().find(|&&k| k != v1 && k != v2) {
                return Err(at(format!("{path}.maps.{k}"), format!("{k} is not an end of the edge")));
            }
            let family = family(&ej.family, &graph);
            edges.push(EdgeSpace {
                graph,
                family,
                maps,
                declared_k: parse_length(&ej.declared_k).map_err(|err| at(format!("{path}.declared_K"), err))?,
                declared_eps: parse_length(&ej.declared_eps).map_err(|err| at(format!("{path}.declared_eps"), err))?,
            });
        }
        let id = self.id.clone().unwrap_or_else(|| source.to_string());
        TreeOfSpaces::new(id, tree, vertices, edges)
    }
}

pub fn parse_tree(text: &str, source: &str) -> Result<TreeOfSpaces> {
    parse_json::<TreeOfSpacesJson>(text, source)?.to_tree(source)
}

pub fn read_tree(path: &Path) -> Result<TreeOfSpaces> {
    read_json::<TreeOfSpacesJson>(path)?.to_tree(&path.display().to_string())
}

pub fn tree_to_json(tos: &TreeOfSpaces) -> Result<String> {
    to_json(&TreeOfSpacesJson::from_tree(tos))
}

pub fn graph_to_json(g: &MetricGraph) -> Result<String> {
    to_json(&GraphJson::from_graph(g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ct_harness::{generate_instance, GeneratorSpec};
    use crate::length::frac;

    #[test]
    fn graph_round_trip() {
        let g = MetricGraph::from_edges("G", 3, [(0, 1, frac(1, 2)), (1, 2, frac(3, 1))]).unwrap();
        let text = graph_to_json(&g).unwrap();
        assert!(text.contains("\"1/2\""));
        let h = parse_graph(&text, "g.json").unwrap();
        assert_eq!(h.edges(), g.edges());
        assert_eq!(h.id(), "G");
    }

    #[test]
    fn syntax_errors_carry_line_and_column() {
        let err = parse_graph("{\n  \"space_id\": \"G\",\n  \"vertices\": [0,\n}", "bad.json").unwrap_err();
        match err {
            Error::Parse { location, .. } => assert!(location.starts_with("bad.json:4:"), "{location}"),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn semantic_errors_carry_field_path() {
        let text = r#"{"space_id":"G","vertices":[0,1],"edges":[[0,1,"1/1"],[1,1,"1/1"]]}"#;
        match parse_graph(text, "g.json").unwrap_err() {
            Error::Parse { location, .. } => assert_eq!(location, "g.json.edges[1]"),
            other => panic!("{other}"),
        }
        let text = r#"{"space_id":"G","vertices":[0,0],"edges":[]}"#;
        match parse_graph(text, "g.json").unwrap_err() {
            Error::Parse { location, .. } => assert_eq!(location, "g.json.vertices[1]"),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn tree_round_trip() {
        let tos = generate_instance(&"segment-automorphism,2".parse::<GeneratorSpec>().unwrap(), 0).unwrap();
        let text = tree_to_json(&tos).unwrap();
        let back = parse_tree(&text, "t.json").unwrap();
        assert_eq!(back.id, tos.id);
        assert_eq!(back.tree.edges(), tos.tree.edges());
        for (a, b) in back.edges.iter().zip(&tos.edges) {
            assert_eq!(a.maps, b.maps);
            assert_eq!(a.family, b.family);
        }
        assert_eq!(tree_to_json(&back).unwrap(), text);
    }

    #[test]
    fn targets_are_checked() {
        let text = r#"{"H": {"L": {"space_id":"L","vertices":[0],"edges":[]}, "g": {"3": 1}}}"#;
        match parse_targets(text, "t.json").unwrap_err() {
            Error::Parse { location, .. } => assert_eq!(location, "t.json:H.g.3"),
            other => panic!("{other}"),
        }
    }
}
