//! Partially electrocuted spaces: a mapping cylinder of `g_α: H_α → L_α`
//! glued along every family member.

use std::collections::{BTreeMap, HashMap};

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::electric::{GluedSpace, HoroFamily};
use crate::error::{Error, Result};
use crate::length::{serde_frac, Length};
use crate::metric_graph::{DeltaEstimate, DeltaMode, MetricGraph, PairScan, PathWitness, INF};

/// Target graph `L_α` and the vertex map `g_α` from a member into it.
#[derive(Clone, Debug)]
pub struct Target {
    pub graph: MetricGraph,
    pub map: BTreeMap<usize, usize>,
}

impl Target {
    /// A one-vertex target with the constant map.
    pub fn point(name: &str, member: &[usize]) -> Self {
        Target {
            graph: MetricGraph::unit(format!("point[{name}]"), 1, &[]).unwrap(),
            map: member.iter().map(|&v| (v, 0)).collect(),
        }
    }
}

/// Length of the edges joining `x` to `g_α(x)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CylinderLength {
    #[default]
    Unit,
    /// Half-length rungs; with point targets this is exactly Farb coning.
    Half,
}

impl CylinderLength {
    pub fn length(self) -> Length {
        match self {
            CylinderLength::Unit => Ratio::from_integer(1),
            CylinderLength::Half => Ratio::new(1, 2),
        }
    }
}

/// Measured data for one target.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TargetReport {
    pub member: String,
    pub target_vertices: usize,
    /// Smallest `P` with `d_L(g x, g y) <= P·d(x, y) + P` over member pairs.
    #[serde(with = "serde_frac")]
    pub lipschitz: Length,
    pub delta: DeltaEstimate,
}

#[derive(Clone, Debug)]
pub struct PartialElectroSpace {
    pub graph: MetricGraph,
    pub family: HoroFamily,
    pub cylinder: CylinderLength,
    pub targets: Vec<TargetReport>,
    host_n: usize,
    offsets: Vec<usize>,
    sizes: Vec<usize>,
}

pub fn partially_electrocute(
    host: &MetricGraph,
    family: &HoroFamily,
    targets: &BTreeMap<String, Target>,
    cylinder: CylinderLength,
) -> Result<PartialElectroSpace> {
    family.validate(host)?;
    for name in targets.keys() {
        if !family.members.contains_key(name) {
            return Err(Error::domain(format!("target `{name}` has no family member")));
        }
    }
    let mut b = host.to_builder();
    let mut offsets = Vec::with_capacity(family.len());
    let mut sizes = Vec::with_capacity(family.len());
    let mut reports = Vec::with_capacity(family.len());
    for (name, set) in &family.members {
        let t = targets
            .get(name)
            .ok_or_else(|| Error::domain(format!("member `{name}` has no target")))?;
        for &x in set {
            match t.map.get(&x) {
                None => return Err(Error::domain(format!("g[{name}] is undefined at {x}"))),
                Some(&y) if y >= t.graph.n() => {
                    return Err(Error::domain(format!(
                        "g[{name}]({x}) = {y} lies outside the target"
                    )))
                }
                _ => {}
            }
        }
        if let Some(&x) = t.map.keys().find(|x| set.binary_search(x).is_err()) {
            return Err(Error::domain(format!("g[{name}] is defined at {x}, outside the member")));
        }
        let off = b.vertex_count();
        for l in 0..t.graph.n() {
            let v = b.add_vertex();
            b.label(v, format!("{name}/{}", t.graph.label(l).map_or(l.to_string(), str::to_string)));
        }
        for &(u, v, len) in t.graph.edges() {
            b.add_edge(off + u, off + v, len)?;
        }
        for (&x, &y) in &t.map {
            b.add_edge(x, off + y, cylinder.length())?;
        }
        offsets.push(off);
        sizes.push(t.graph.n());
        reports.push(measure_target(host, name, set, t)?);
    }
    let graph = b.build(format!("{}/pel", host.id()))?;
    Ok(PartialElectroSpace {
        graph,
        family: family.clone(),
        cylinder,
        targets: reports,
        host_n: host.n(),
        offsets,
        sizes,
    })
}

fn measure_target(host: &MetricGraph, name: &str, set: &[usize], t: &Target) -> Result<TargetReport> {
    let scan = if set.len() <= 200 {
        PairScan::Exhaustive
    } else {
        PairScan::Sampled { count: 20_000, seed: 0 }
    };
    let pairs = scan.pairs(set);
    let mut host_rows: HashMap<usize, Vec<i64>> = HashMap::new();
    let mut target_rows: HashMap<usize, Vec<i64>> = HashMap::new();
    let (mut num, mut den) = (0i64, 1i64);
    for (x, y) in pairs {
        let d = host_rows.entry(x).or_insert_with(|| host.sssp_raw(x))[y];
        let (gx, gy) = (t.map[&x], t.map[&y]);
        let dl = target_rows.entry(gx).or_insert_with(|| t.graph.sssp_raw(gx))[gy];
        // compare dl/tscale against d/hscale + 1, both scaled to a common unit
        let lhs = dl as i128 * host.scale() as i128;
        let rhs = (d + host.scale()) as i128 * t.graph.scale() as i128;
        if lhs * den as i128 > num as i128 * rhs {
            num = lhs as i64;
            den = rhs as i64;
        }
    }
    Ok(TargetReport {
        member: name.to_string(),
        target_vertices: t.graph.n(),
        lipschitz: Ratio::new(num, den),
        delta: t.graph.four_point_delta(DeltaMode::auto(t.graph.n(), 0))?,
    })
}

impl PartialElectroSpace {
    pub fn host_n(&self) -> usize {
        self.host_n
    }

    pub fn is_host(&self, v: usize) -> bool {
        v < self.host_n
    }

    /// Ids of `L_α` inside the assembled graph.
    pub fn target_vertices(&self, member: usize) -> std::ops::Range<usize> {
        self.offsets[member]..self.offsets[member] + self.sizes[member]
    }

    pub fn pel_geodesic(&self, u: usize, v: usize) -> Result<PathWitness> {
        for w in [u, v] {
            self.graph.check_vertex(w)?;
            if !self.is_host(w) {
                return Err(Error::domain(format!("vertex {w} is not a host vertex")));
            }
        }
        self.graph.geodesic(u, v)
    }

    /// Contracts every target to a single vertex, leaving the host with one
    /// apex per member joined by cylinder-length edges.
    pub fn electrocute_targets(&self) -> Result<MetricGraph> {
        let mut b = crate::metric_graph::GraphBuilder::new(self.host_n + self.offsets.len());
        let owner = |v: usize| -> Option<usize> {
            (0..self.offsets.len()).find(|&m| self.target_vertices(m).contains(&v))
        };
        for &(u, v, len) in self.graph.edges() {
            match (self.is_host(u), self.is_host(v)) {
                (true, true) => b.add_edge(u, v, len)?,
                (true, false) => b.add_edge_min(u, self.host_n + owner(v).unwrap(), len)?,
                (false, true) => b.add_edge_min(v, self.host_n + owner(u).unwrap(), len)?,
                (false, false) => {}
            }
        }
        b.build(format!("{}/contracted", self.graph.id()))
    }

    /// How far pel-geodesics between target vertices stray from the target,
    /// maximized over members and the scanned pairs.
    pub fn target_quasiconvexity(&self, scan: PairScan) -> Result<Length> {
        let mut worst = 0i64;
        for m in 0..self.offsets.len() {
            let verts: Vec<usize> = self.target_vertices(m).collect();
            let to_target = self.graph.distance_to_set_raw(&verts);
            for (a, b) in scan.pairs(&verts) {
                let to_b = self.graph.sssp_raw(b);
                let path = self.graph.geodesic_with(a, b, &to_b);
                worst = worst.max(path.iter().map(|&w| to_target[w]).max().unwrap_or(0));
            }
        }
        Ok(self.graph.to_length(worst))
    }
}

/// Measured tracking between a glued-space geodesic and a pel-geodesic.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PelTracking {
    /// Largest distance from a point of the glued geodesic outside the
    /// horoballs to the pel-geodesic.
    #[serde(with = "serde_frac")]
    pub outside_horoballs: Length,
    /// Smallest `t` such that points of either path farther than `t` from
    /// the met members lie within `t` of the other path.
    #[serde(with = "serde_frac")]
    pub mutual: Length,
    #[serde(with = "serde_frac")]
    pub constant: Length,
}

/// Compares the glued-space geodesic and the pel-geodesic from `u` to `v`,
/// with all distances taken in `host` between host vertices of the paths.
pub fn verify_pel_tracking(
    host: &MetricGraph,
    pe: &PartialElectroSpace,
    gs: &GluedSpace,
    u: usize,
    v: usize,
) -> Result<PelTracking> {
    if pe.family != gs.family || pe.host_n != host.n() || gs.host_n() != host.n() {
        return Err(Error::domain("host, pel space and glued space do not match"));
    }
    for w in [u, v] {
        host.check_vertex(w)?;
        if gs.index.member_of(w).is_some() {
            return Err(Error::domain(format!("endpoint {w} lies in a member")));
        }
    }
    let gamma = gs.graph.geodesic(u, v)?;
    let pel = pe.pel_geodesic(u, v)?;
    let gamma_host: Vec<usize> = gamma.vertices.iter().copied().filter(|&x| x < host.n()).collect();
    let pel_host: Vec<usize> = pel.vertices.iter().copied().filter(|&x| x < host.n()).collect();
    let to_pel = host.distance_to_set_raw(&pel_host);
    let to_gamma = host.distance_to_set_raw(&gamma_host);
    let outside = gamma_host
        .iter()
        .filter(|&&x| gs.index.member_of(x).is_none())
        .map(|&x| to_pel[x])
        .max()
        .unwrap_or(0);

    let met: Vec<usize> = {
        let mut ms: Vec<usize> = gamma.vertices.iter().filter_map(|&x| gs.index.member_of(x)).collect();
        ms.sort_unstable();
        ms.dedup();
        ms.iter().flat_map(|&m| gs.horoballs[m].columns.clone()).collect()
    };
    let to_met = if met.is_empty() {
        vec![INF; host.n()]
    } else {
        host.distance_to_set_raw(&met)
    };
    // (distance to met members, distance to the other path)
    let mut pts: Vec<(i64, i64)> = gamma_host
        .iter()
        .map(|&x| (to_met[x], to_pel[x]))
        .chain(pel_host.iter().map(|&x| (to_met[x], to_gamma[x])))
        .collect();
    pts.sort_unstable();
    let mut thresholds: Vec<i64> = pts.iter().map(|p| p.0).filter(|&d| d != INF).collect();
    thresholds.push(0);
    thresholds.sort_unstable();
    thresholds.dedup();
    // suffix maxima of the other-path distance over points beyond each threshold
    let mut suffix = vec![0i64; pts.len() + 1];
    for i in (0..pts.len()).rev() {
        suffix[i] = suffix[i + 1].max(pts[i].1);
    }
    let mutual = thresholds
        .iter()
        .map(|&t| {
            let first_beyond = pts.partition_point(|p| p.0 <= t);
            t.max(suffix[first_beyond])
        })
        .min()
        .unwrap();
    Ok(PelTracking {
        outside_horoballs: host.to_length(outside),
        mutual: host.to_length(mutual),
        constant: host.to_length(outside.max(mutual)),
    })
}
