//! End-to-end experiments: build an instance, measure its constants, run the
//! profile with ladders, check the invariant suites and write the report.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::ct_harness::{ct_profile, generate_instance, measure_constants, CTProfile, GeneratorSpec, Overrides, ProfileConfig};
use crate::error::{Error, Result};
use crate::io::{read_tree, to_json};
use crate::length::{format_length, Length};
use crate::metric_graph::{GeometryParams, Provenance};
use crate::tree_spaces::{validate, TreeGeometry, TreeOfSpaces};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "CTLAB_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "ctlab-out";
/// Distance-scan sources per space in the tree validation suite.
const VALIDATION_SOURCES: usize = 48;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceSource {
    Generator(String),
    File(PathBuf),
}

impl InstanceSource {
    pub fn load(&self, seed: u64) -> Result<TreeOfSpaces> {
        match self {
            InstanceSource::Generator(s) => generate_instance(&s.parse::<GeneratorSpec>()?, seed),
            InstanceSource::File(p) => read_tree(p),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub instance: InstanceSource,
    pub overrides: Overrides,
    pub depth: Option<u32>,
    pub ns: Vec<u32>,
    pub budget: usize,
    pub seed: u64,
    /// Base point; the smallest off-member root vertex when unset.
    pub p: Option<usize>,
    #[serde(skip)]
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(instance: InstanceSource, ns: Vec<u32>) -> Self {
        ExperimentConfig {
            instance,
            overrides: Overrides::default(),
            depth: None,
            ns,
            budget: 400,
            seed: 0,
            p: None,
            out_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ns.is_empty() {
            return Err(Error::domain("N range is empty"));
        }
        if self.budget == 0 {
            return Err(Error::domain("budget must be at least 1"));
        }
        let zero = Length::from_integer(0);
        for (name, v) in [("D", self.overrides.d), ("C", self.overrides.c)] {
            if v.is_some_and(|v| v < zero) {
                return Err(Error::domain(format!("override {name} is negative")));
            }
        }
        Ok(())
    }

    /// The configured directory, else the environment default, else `ctlab-out`.
    pub fn resolved_out_dir(&self) -> PathBuf {
        self.out_dir
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }
}

/// Parses `a..b` (inclusive), `a..=b`, a single value or a comma list.
pub fn parse_n_range(s: &str) -> Result<Vec<u32>> {
    let bad = || Error::Parse {
        location: format!("N range `{s}`"),
        message: "expected `a..b`, `a` or `a,b,...`".into(),
    };
    let num = |t: &str| t.trim().parse::<u32>().map_err(|_| bad());
    let ns: Vec<u32> = if let Some((a, b)) = s.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        (num(a)?..=num(b)?).collect()
    } else {
        s.split(',').map(num).collect::<Result<_>>()?
    };
    if ns.is_empty() {
        return Err(Error::domain(format!("N range `{s}` is empty")));
    }
    Ok(ns)
}

/// One row of the constants table.
#[derive(Clone, Debug, Serialize)]
pub struct ConstantRow {
    pub name: String,
    pub value: String,
    pub kind: String,
    pub instance: Option<String>,
    /// Operation or rule that produced the value.
    pub operation: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReportDocument {
    pub instance: String,
    pub config: ExperimentConfig,
    pub params: GeometryParams,
    pub constants: Vec<ConstantRow>,
    pub profile: CTProfile,
    pub suites: Vec<SuiteResult>,
    pub passed: bool,
    /// Wall-clock timings live in this sibling file so that the report
    /// itself is reproducible byte for byte.
    pub timings_file: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Timings {
    pub seconds: BTreeMap<String, f64>,
}

impl Timings {
    fn time<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.seconds.insert(phase.to_string(), t.elapsed().as_secs_f64());
        out
    }
}

pub fn constants_table(params: &GeometryParams) -> Vec<ConstantRow> {
    params
        .entries()
        .map(|c| {
            let (kind, instance, operation) = match &c.provenance {
                Provenance::Configured => ("configured", None, "user override".to_string()),
                Provenance::Measured { instance, operation } => ("measured", Some(instance.clone()), operation.clone()),
                Provenance::Derived { rule } => ("derived", None, rule.clone()),
            };
            ConstantRow {
                name: c.name.to_string(),
                value: format_length(&c.value),
                kind: kind.to_string(),
                instance,
                operation,
            }
        })
        .collect()
}

fn suite(name: &str, passed: bool, detail: impl Into<String>) -> SuiteResult {
    SuiteResult {
        name: name.to_string(),
        passed,
        detail: detail.into(),
    }
}

/// Invariant suites over a finished profile.
pub fn run_suites(geo: &TreeGeometry, profile: &CTProfile, seed: u64) -> Result<Vec<SuiteResult>> {
    let mut out = Vec::new();
    let v = validate(geo, VALIDATION_SOURCES, seed)?;
    let poor = v.density.iter().filter(|d| d.poor).count();
    out.push(suite(
        "tree_validation",
        v.passed(),
        format!(
            "type preserving {}, locus forest {}, maps within declared {}/{}, poor density records {poor}",
            v.strictly_type_preserving,
            v.locus_is_forest,
            v.maps.iter().filter(|m| m.within_declared).count(),
            v.maps.len()
        ),
    ));
    let witnesses = profile.verify_rows(geo);
    out.push(suite(
        "profile_witnesses",
        witnesses.is_ok(),
        witnesses.err().map_or("every witness recomputed".to_string(), |e| e.to_string()),
    ));
    out.push(suite(
        "envelope_monotone",
        profile.envelope_is_monotone(),
        "exhaustive rows are nondecreasing in N",
    ));
    let ladders: Vec<_> = profile.rows.iter().filter_map(|r| r.ladder.as_ref().map(|l| (r.n, l))).collect();
    let escapes: Vec<u32> = ladders
        .iter()
        .filter(|(_, l)| l.depth_escape.as_ref().is_some_and(|e| !e.passed))
        .map(|(n, _)| *n)
        .collect();
    out.push(suite(
        "depth_escape",
        escapes.is_empty(),
        format!("{} rows checked, failing N: {escapes:?}", ladders.len()),
    ));
    let shapes: Vec<u32> = ladders
        .iter()
        .filter(|(_, l)| l.shape_ok == Some(false))
        .map(|(n, _)| *n)
        .collect();
    out.push(suite(
        "ct_shape",
        shapes.is_empty(),
        format!("M(N) >= N/(ray_C + 1) - track_C1; failing N: {shapes:?}"),
    ));
    if geo.tos.tree.n() == 1 && geo.tos.is_plain() {
        let off: Vec<u32> = profile
            .rows
            .iter()
            .filter(|r| r.m.is_some_and(|m| m != Length::from_integer(r.n as i64)))
            .map(|r| r.n)
            .collect();
        out.push(suite("plain_exact", off.is_empty(), format!("M(N) = N; failing N: {off:?}")));
    }
    Ok(out)
}

/// Runs the experiment in memory.
pub fn run(cfg: &ExperimentConfig) -> Result<(ReportDocument, Timings)> {
    cfg.validate()?;
    let mut timings = Timings::default();
    let geo = timings.time("build", || -> Result<TreeGeometry> {
        TreeGeometry::new(cfg.instance.load(cfg.seed)?, cfg.depth)
    })?;
    let params = timings.time("constants", || measure_constants(&geo, &cfg.overrides, cfg.seed))?;
    let pcfg = ProfileConfig {
        p: cfg.p,
        ns: cfg.ns.clone(),
        budget: cfg.budget,
        seed: cfg.seed,
        ladders: true,
    };
    let profile = timings.time("profile", || ct_profile(&geo, &params, &pcfg))?;
    let suites = timings.time("suites", || run_suites(&geo, &profile, cfg.seed))?;
    let total = timings.seconds.values().sum();
    timings.seconds.insert("total".into(), total);
    let params = profile.params.clone();
    let doc = ReportDocument {
        instance: geo.tos.id.clone(),
        config: cfg.clone(),
        constants: constants_table(&params),
        params,
        passed: suites.iter().all(|s| s.passed),
        suites,
        profile,
        timings_file: "timings.json".into(),
    };
    Ok((doc, timings))
}

/// Writes `report.json`, `profile.csv` and `timings.json` into `dir`.
pub fn write_outputs(dir: &Path, doc: &ReportDocument, timings: &Timings) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.json"), to_json(doc)?)?;
    std::fs::write(dir.join("profile.csv"), doc.profile.to_csv()?)?;
    std::fs::write(dir.join(&doc.timings_file), to_json(timings)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn n_ranges() {
        assert_eq!(parse_n_range("1..4").unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(parse_n_range("2..=3").unwrap(), vec![2, 3]);
        assert_eq!(parse_n_range("5").unwrap(), vec![5]);
        assert_eq!(parse_n_range("0,2").unwrap(), vec![0, 2]);
        assert!(parse_n_range("4..1").is_err());
        assert!(parse_n_range("x").is_err());
    }

    #[test]
    fn config_checks() {
        let mut c = ExperimentConfig::new(InstanceSource::Generator("tree-plain,2,3".into()), vec![]);
        assert!(c.validate().is_err());
        c.ns = vec![1];
        c.budget = 0;
        assert!(c.validate().is_err());
        c.budget = 1;
        c.overrides.d = Some(Length::from_integer(-1));
        assert!(c.validate().is_err());
    }

    #[test]
    fn plain_tree_run_passes() {
        let cfg = ExperimentConfig::new(InstanceSource::Generator("tree-plain,2,3".into()), vec![1, 2, 3, 4]);
        let (doc, _) = run(&cfg).unwrap();
        assert!(doc.passed, "{:?}", doc.suites);
        let ms: Vec<_> = doc.profile.rows.iter().map(|r| r.m).collect();
        let int = Length::from_integer;
        assert_eq!(ms, vec![Some(int(1)), Some(int(2)), None, None]);
        assert!(doc.suites.iter().any(|s| s.name == "plain_exact" && s.passed));
        assert!(doc.constants.iter().all(|c| !c.operation.is_empty()));
    }
}
