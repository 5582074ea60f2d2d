//! Deterministic instance generators.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use rand::Rng;

use super::free_group::{FreeGroupBall, WordMap};
use crate::electric::HoroFamily;
use crate::error::{Error, Result};
use crate::length::int;
use crate::metric_graph::{GraphBuilder, MetricGraph};
use crate::rng;
use crate::tree_spaces::{BaseTree, EdgeSpace, TreeOfSpaces, VertexSpace};

/// A space repeated over every vertex of an identity-glued segment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Fiber {
    FreePeripheral(u32),
    TreePlain(usize, usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GeneratorSpec {
    /// Ball of the free group with `<a>`-coset segments as members.
    FreePeripheral { radius: u32 },
    /// Identity gluings of one fiber along a path of `len` edges.
    SegmentIdentity { fiber: Fiber, len: usize },
    /// Free-group balls glued along a path by inclusion on one side and a
    /// word map fixing `a` on the other.
    SegmentAutomorphism { radius: u32, map: String, len: usize },
    /// Rooted tree with the given branching and depth, no members.
    TreePlain { branching: usize, depth: usize },
    /// Random connected graph with rational weights, no members.
    RandomGraph { n: usize, extra: usize },
}

pub const DEFAULT_WORD_MAP: &str = "a=a;b=ba";

impl fmt::Display for Fiber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fiber::FreePeripheral(r) => write!(f, "free-peripheral:{r}"),
            Fiber::TreePlain(b, d) => write!(f, "tree-plain:{b}:{d}"),
        }
    }
}

impl FromStr for Fiber {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        match parts[0] {
            "free-peripheral" => Ok(Fiber::FreePeripheral(arg(&parts, 1, 3)?)),
            "tree-plain" => Ok(Fiber::TreePlain(arg(&parts, 1, 2)?, arg(&parts, 2, 3)?)),
            other => Err(Error::domain(format!("unknown fiber `{other}`"))),
        }
    }
}

fn arg<T: FromStr>(parts: &[&str], i: usize, default: T) -> Result<T> {
    match parts.get(i) {
        None => Ok(default),
        Some(s) if s.is_empty() => Ok(default),
        Some(s) => s
            .trim()
            .parse()
            .map_err(|_| Error::domain(format!("cannot parse generator argument `{s}`"))),
    }
}

impl fmt::Display for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeneratorSpec::FreePeripheral { radius } => write!(f, "free-peripheral,{radius}"),
            GeneratorSpec::SegmentIdentity { fiber, len } => write!(f, "segment-identity,{fiber},{len}"),
            GeneratorSpec::SegmentAutomorphism { radius, map, len } => {
                write!(f, "segment-automorphism,{radius},{map},{len}")
            }
            GeneratorSpec::TreePlain { branching, depth } => write!(f, "tree-plain,{branching},{depth}"),
            GeneratorSpec::RandomGraph { n, extra } => write!(f, "random-graph,{n},{extra}"),
        }
    }
}

impl FromStr for GeneratorSpec {
    type Err = Error;

    /// Parses `name[,arg...]`; omitted arguments take their defaults.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(',').map(str::trim).collect();
        let spec = match parts[0] {
            "free-peripheral" => GeneratorSpec::FreePeripheral {
                radius: arg(&parts, 1, 3)?,
            },
            "segment-identity" => GeneratorSpec::SegmentIdentity {
                fiber: match parts.get(1) {
                    Some(f) if !f.is_empty() => f.parse()?,
                    _ => Fiber::FreePeripheral(3),
                },
                len: arg(&parts, 2, 2)?,
            },
            "segment-automorphism" => {
                let map = parts
                    .get(2)
                    .filter(|m| !m.is_empty())
                    .map_or(DEFAULT_WORD_MAP.to_string(), |m| m.to_string());
                WordMap::parse(&map)?;
                GeneratorSpec::SegmentAutomorphism {
                    radius: arg(&parts, 1, 3)?,
                    map,
                    len: arg(&parts, 3, 2)?,
                }
            }
            "tree-plain" => GeneratorSpec::TreePlain {
                branching: arg(&parts, 1, 2)?,
                depth: arg(&parts, 2, 3)?,
            },
            "random-graph" => GeneratorSpec::RandomGraph {
                n: arg(&parts, 1, 50)?,
                extra: arg(&parts, 2, 25)?,
            },
            other => return Err(Error::domain(format!("unknown generator `{other}`"))),
        };
        Ok(spec)
    }
}

/// Builds the instance for `spec`. Only `random-graph` depends on `seed`.
pub fn generate_instance(spec: &GeneratorSpec, seed: u64) -> Result<TreeOfSpaces> {
    let id = spec.to_string();
    match spec {
        GeneratorSpec::FreePeripheral { radius } => {
            let (graph, family) = free_peripheral_space(*radius, "X")?;
            single_vertex(&id, graph, family)
        }
        GeneratorSpec::TreePlain { branching, depth } => {
            let g = plain_tree(*branching, *depth, "X")?;
            let fam = HoroFamily::empty("X");
            single_vertex(&id, g, fam)
        }
        GeneratorSpec::RandomGraph { n, extra } => {
            let g = random_graph(*n, *extra, seed, "X")?;
            single_vertex(&id, g, HoroFamily::empty("X"))
        }
        GeneratorSpec::SegmentIdentity { fiber, len } => {
            let (graph, family) = match fiber {
                Fiber::FreePeripheral(r) => free_peripheral_space(*r, "Y")?,
                Fiber::TreePlain(b, d) => (plain_tree(*b, *d, "Y")?, HoroFamily::empty("Y")),
            };
            let n = graph.n();
            let vs = VertexSpace {
                graph: graph.clone(),
                family: family.clone(),
            };
            let es = EdgeSpace {
                graph,
                family,
                maps: [(0..n).collect(), (0..n).collect()],
                declared_k: int(1),
                declared_eps: int(0),
            };
            TreeOfSpaces::new(id, BaseTree::path(*len), vec![vs; len + 1], vec![es; *len])
        }
        GeneratorSpec::SegmentAutomorphism { radius, map, len } => {
            segment_automorphism(&id, *radius, &WordMap::parse(map)?, *len)
        }
    }
}

fn single_vertex(id: &str, graph: MetricGraph, family: HoroFamily) -> Result<TreeOfSpaces> {
    TreeOfSpaces::new(id, BaseTree::single(), vec![VertexSpace { graph, family }], vec![])
}

/// The free-group ball of the given radius and its `<a>`-coset segments.
pub fn free_peripheral_space(radius: u32, id: &str) -> Result<(MetricGraph, HoroFamily)> {
    let ball = FreeGroupBall::new(radius, id)?;
    let family = HoroFamily::new(id, ball.coset_segments(|_| true), int(1));
    Ok((ball.graph, family))
}

/// Rooted tree: vertex `i` has children `b·i + 1 ..= b·i + b`.
pub fn plain_tree(branching: usize, depth: usize, id: &str) -> Result<MetricGraph> {
    if branching == 0 {
        return Err(Error::domain("tree branching must be positive"));
    }
    let mut n = 1usize;
    let mut level = 1usize;
    for _ in 0..depth {
        level = level
            .checked_mul(branching)
            .ok_or_else(|| Error::domain("tree is too large"))?;
        n = n.checked_add(level).ok_or_else(|| Error::domain("tree is too large"))?;
    }
    if n > 2_000_000 {
        return Err(Error::domain("tree is too large"));
    }
    let edges: Vec<(usize, usize)> = (1..n).map(|v| ((v - 1) / branching, v)).collect();
    MetricGraph::unit(id, n, &edges)
}

/// Random spanning tree plus `extra` random chords, weights `p/q` with
/// `p` in 1..=4 and `q` in 1..=3.
pub fn random_graph(n: usize, extra: usize, seed: u64, id: &str) -> Result<MetricGraph> {
    if n == 0 {
        return Err(Error::domain("random graph needs at least one vertex"));
    }
    let mut r = rng::seeded(seed);
    let mut b = GraphBuilder::new(n);
    let weight = |r: &mut rng::DetRng| Ratio::new(r.gen_range(1..=4i64), r.gen_range(1..=3i64));
    for v in 1..n {
        let u = r.gen_range(0..v);
        let w = weight(&mut r);
        b.add_edge(u, v, w)?;
    }
    if n > 1 {
        for _ in 0..extra {
            let u = r.gen_range(0..n);
            let v = r.gen_range(0..n);
            let w = weight(&mut r);
            if u != v {
                b.add_edge_min(u, v, w)?;
            }
        }
    }
    b.build(id)
}

/// Random weighted tree on `n` vertices.
pub fn random_tree(n: usize, seed: u64, id: &str) -> Result<MetricGraph> {
    random_graph(n, 0, seed, id)
}

fn segment_automorphism(id: &str, radius: u32, phi: &WordMap, len: usize) -> Result<TreeOfSpaces> {
    if !phi.fixes_a() {
        return Err(Error::domain("the word map must fix a so that cosets of <a> correspond"));
    }
    let ball = FreeGroupBall::new(radius, "X")?;
    let family = HoroFamily::new("X", ball.coset_segments(|_| true), int(1));
    let image: Vec<Option<usize>> = ball.words.iter().map(|w| ball.element(&phi.apply(w))).collect();

    // the component of the identity among elements whose image stays in the ball
    let allowed = |v: usize| -> bool {
        if ball.is_element(v) {
            image[v].is_some()
        } else {
            let (g, h) = ball.midpoint_ends(v).unwrap();
            image[g].is_some() && image[h].is_some()
        }
    };
    let mut in_edge = vec![false; ball.graph.n()];
    let mut stack = vec![0usize];
    in_edge[0] = true;
    while let Some(v) = stack.pop() {
        for &(w, _) in ball.graph.neighbors(v) {
            if !in_edge[w] && allowed(w) {
                in_edge[w] = true;
                stack.push(w);
            }
        }
    }
    let verts: Vec<usize> = (0..ball.graph.n()).filter(|&v| in_edge[v]).collect();
    let local = |v: usize| verts.binary_search(&v).ok();
    let mut b = GraphBuilder::new(verts.len());
    for &(u, v, l) in ball.graph.edges() {
        if let (Some(i), Some(j)) = (local(u), local(v)) {
            b.add_edge(i, j, l)?;
        }
    }
    for (i, &v) in verts.iter().enumerate() {
        if let Some(l) = ball.graph.label(v) {
            b.label(i, l);
        }
    }
    let edge_graph = b.build("Xe")?;
    let edge_family = HoroFamily::new(
        "Xe",
        ball.coset_segments(|g| in_edge[g])
            .into_iter()
            .map(|(name, set)| (name, set.into_iter().map(|g| local(g).unwrap()).collect())),
        int(1),
    );
    let phi_b = phi.apply(&[2]);
    let k = phi_b
        .iter()
        .position(|&x| x >= 2)
        .ok_or_else(|| Error::domain("the image of b lies in <a>; the map is not injective"))?;
    let forward: Vec<usize> = verts
        .iter()
        .map(|&v| -> Result<usize> {
            if ball.is_element(v) {
                return Ok(image[v].unwrap());
            }
            // a b-edge {g, g·b} goes to the first b-edge on the way from φ(g) to φ(g·b)
            let (g, h) = ball.midpoint_ends(v).unwrap();
            let low = if ball.words[h].last() == Some(&3) { h } else { g };
            let mut w = ball.words[image[low].unwrap()].clone();
            w.extend_from_slice(&phi_b[..k]);
            let before = ball.element(&super::free_group::reduce(&w));
            w.push(phi_b[k]);
            let after = ball.element(&super::free_group::reduce(&w));
            match (before, after) {
                (Some(x), Some(y)) => ball
                    .midpoint(x, y)
                    .ok_or_else(|| Error::invariant("image b-edge has no midpoint")),
                _ => Err(Error::invariant("image b-edge leaves the ball")),
            }
        })
        .collect::<Result<_>>()?;
    let vs = VertexSpace {
        graph: ball.graph.clone(),
        family,
    };
    let es = EdgeSpace {
        graph: edge_graph,
        family: edge_family,
        maps: [verts.clone(), forward],
        declared_k: int(2),
        declared_eps: int(2),
    };
    TreeOfSpaces::new(id, BaseTree::path(len), vec![vs; len + 1], vec![es; len])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_round_trip_and_defaults() {
        for s in [
            "free-peripheral,4",
            "segment-identity,free-peripheral:3,2",
            "segment-identity,tree-plain:2:3,1",
            "segment-automorphism,3,a=a;b=ba,2",
            "tree-plain,2,3",
            "random-graph,40,10",
        ] {
            assert_eq!(s.parse::<GeneratorSpec>().unwrap().to_string(), s);
        }
        assert_eq!(
            "segment-identity".parse::<GeneratorSpec>().unwrap().to_string(),
            "segment-identity,free-peripheral:3,2"
        );
        assert!("moebius,3".parse::<GeneratorSpec>().is_err());
        assert!("segment-automorphism,3,a=b".parse::<GeneratorSpec>().is_err());
    }

    #[test]
    fn plain_tree_sizes() {
        let tos = generate_instance(&"tree-plain,2,3".parse().unwrap(), 0).unwrap();
        assert_eq!(tos.vertices[0].graph.n(), 15);
        assert!(tos.vertices[0].family.is_empty());
    }

    #[test]
    fn segment_identity_shape() {
        let tos = generate_instance(&"segment-identity".parse().unwrap(), 0).unwrap();
        assert_eq!(tos.tree.n(), 3);
        for e in 0..2 {
            assert_eq!(tos.map(e, 0), tos.map(e, 1));
        }
    }

    #[test]
    fn automorphism_instance_is_well_formed() {
        let tos = generate_instance(&"segment-automorphism,3".parse().unwrap(), 0).unwrap();
        assert_eq!(tos.tree.n(), 3);
        let es = &tos.edges[0];
        assert!(es.graph.n() < tos.vertices[0].graph.n());
        // inclusion side is the identity on labels
        for x in 0..es.graph.n() {
            assert_eq!(es.graph.label(x), tos.vertices[0].graph.label(es.maps[0][x]));
        }
        assert!(generate_instance(&"segment-automorphism,3,a=b;b=a".parse().unwrap(), 0).is_err());
    }

    #[test]
    fn random_graphs_are_seeded() {
        let a = random_graph(30, 10, 7, "g").unwrap();
        let b = random_graph(30, 10, 7, "g").unwrap();
        let c = random_graph(30, 10, 8, "g").unwrap();
        assert_eq!(a.edges(), b.edges());
        assert_ne!(a.edges(), c.edges());
    }
}
