use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use coarse_ct::ct_harness::{ct_profile, measure_constants, Overrides, ProfileConfig};
use coarse_ct::electric::{cone_off, glue_cones};
use coarse_ct::io::{graph_to_json, read_family, read_graph, to_json, tree_to_json};
use coarse_ct::ladder::build_ladder_with;
use coarse_ct::length::{format_length, parse_length};
use coarse_ct::metric_graph::{MetricGraph, Param};
use coarse_ct::report::{parse_n_range, run, write_outputs, ExperimentConfig, InstanceSource};
use coarse_ct::tree_spaces::{validate, TreeGeometry, TreeOfSpaces};
use coarse_ct::{DeltaMode, Error, Length};

#[derive(Parser)]
#[command(name = "coarse-ct", version, about = "Coarse geometry experiments on finite graph models")]
struct Cli {
    /// Worker threads for parallel scans (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Auto,
    Exhaustive,
    Sampled,
}

#[derive(Args)]
struct Common {
    /// Input file (graph JSON or tree-of-spaces JSON).
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Output file, or directory for `run`; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct Instance {
    /// Generator spec, e.g. `free-peripheral,4` or `segment-automorphism,3`.
    #[arg(long = "gen")]
    generator: Option<String>,
    /// Horoball depth (default from member diameters).
    #[arg(long)]
    depth: Option<u32>,
}

#[derive(Args)]
struct Constants {
    #[arg(long = "D", value_parser = length_arg)]
    d: Option<Length>,
    #[arg(long = "C", value_parser = length_arg)]
    c: Option<Length>,
}

#[derive(Subcommand)]
enum Command {
    /// Read a graph (or generate an instance) and write it back in canonical form.
    Build {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        instance: Instance,
    },
    /// Four-point hyperbolicity constant of a graph.
    Delta {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Mode::Auto)]
        mode: Mode,
        /// Vertices drawn in sampled mode.
        #[arg(long, default_value_t = 96)]
        samples: usize,
    },
    /// Cone off the members of a family.
    Cone {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        family: PathBuf,
    },
    /// Glue a combinatorial horoball along every member of a family.
    Horoball {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        depth: Option<u32>,
    },
    /// Validate a tree of spaces.
    Tree {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        instance: Instance,
        /// Distance-scan sources per space.
        #[arg(long, default_value_t = 64)]
        sources: usize,
    },
    /// Build the ladder of the electric geodesic between two root vertices.
    Ladder {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        instance: Instance,
        #[command(flatten)]
        constants: Constants,
        #[arg(long, value_parser = pair_arg)]
        lambda: (usize, usize),
    },
    /// Measure the profile M(N).
    CtProfile {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        instance: Instance,
        #[command(flatten)]
        constants: Constants,
        #[arg(long = "N", default_value = "0..4")]
        n: String,
        #[arg(long, default_value_t = 400)]
        budget: usize,
        /// Base point in the root space.
        #[arg(long)]
        p: Option<usize>,
        /// Also build witness ladders, rays and depth-escape checks.
        #[arg(long)]
        ladders: bool,
    },
    /// Run a full experiment and write report.json, profile.csv and timings.json.
    Run {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        instance: Instance,
        #[command(flatten)]
        constants: Constants,
        #[arg(long = "N", default_value = "0..4")]
        n: String,
        #[arg(long, default_value_t = 400)]
        budget: usize,
        #[arg(long)]
        p: Option<usize>,
    },
}

fn length_arg(s: &str) -> std::result::Result<Length, String> {
    let l = parse_length(s).map_err(|e| e.to_string())?;
    if l < Length::from_integer(0) {
        return Err("must be non-negative".into());
    }
    Ok(l)
}

fn pair_arg(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected `a,b`")?;
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("`{t}` is not a vertex id"));
    Ok((num(a)?, num(b)?))
}

enum Failure {
    Usage(String),
    Suites,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn emit(common: &Common, text: &str) -> std::result::Result<(), Failure> {
    match &common.out {
        Some(p) => std::fs::write(p, text).map_err(|e| usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn input_graph(common: &Common) -> std::result::Result<MetricGraph, Failure> {
    let path = common.input.as_deref().ok_or_else(|| usage("--in is required"))?;
    Ok(read_graph(path)?)
}

fn instance_source(common: &Common, instance: &Instance) -> std::result::Result<InstanceSource, Failure> {
    match (&instance.generator, &common.input) {
        (Some(g), None) => Ok(InstanceSource::Generator(g.clone())),
        (None, Some(p)) => Ok(InstanceSource::File(p.clone())),
        _ => Err(usage("give exactly one of --gen and --in")),
    }
}

fn load(common: &Common, instance: &Instance) -> std::result::Result<TreeOfSpaces, Failure> {
    Ok(instance_source(common, instance)?.load(common.seed)?)
}

fn edge_csv(g: &MetricGraph) -> String {
    let mut s = String::from("u,v,length\n");
    for (u, v, l) in g.edges() {
        s.push_str(&format!("{u},{v},{}\n", format_length(l)));
    }
    s
}

fn graph_out(common: &Common, g: &MetricGraph) -> std::result::Result<(), Failure> {
    match common.format {
        Some(Format::Csv) => emit(common, &edge_csv(g)),
        _ => emit(common, &graph_to_json(g)?),
    }
}

fn overrides(c: &Constants) -> Overrides {
    Overrides { d: c.d, c: c.c }
}

fn dispatch(cmd: Command) -> std::result::Result<(), Failure> {
    match cmd {
        Command::Build { common, instance } => {
            if instance.generator.is_some() {
                let tos = load(&common, &instance)?;
                return emit(&common, &tree_to_json(&tos)?);
            }
            let g = input_graph(&common)?;
            graph_out(&common, &g)
        }
        Command::Delta { common, mode, samples } => {
            let g = input_graph(&common)?;
            let mode = match mode {
                Mode::Auto => DeltaMode::auto(g.n(), common.seed),
                Mode::Exhaustive => DeltaMode::Exhaustive,
                Mode::Sampled => DeltaMode::Sampled {
                    count: samples,
                    seed: common.seed,
                },
            };
            let est = g.four_point_delta(mode)?;
            match common.format {
                Some(Format::Csv) => emit(
                    &common,
                    &format!(
                        "delta,exact,quadruples\n{},{},{}\n",
                        format_length(&est.delta),
                        est.exact,
                        est.quadruples
                    ),
                ),
                _ => emit(&common, &to_json(&est)?),
            }
        }
        Command::Cone { common, family } => {
            let g = input_graph(&common)?;
            let fam = read_family(&family, &g)?;
            graph_out(&common, &cone_off(&g, &fam)?.graph)
        }
        Command::Horoball { common, family, depth } => {
            let g = input_graph(&common)?;
            let fam = read_family(&family, &g)?;
            graph_out(&common, &glue_cones(&g, &fam, depth)?.graph)
        }
        Command::Tree {
            common,
            instance,
            sources,
        } => {
            let geo = TreeGeometry::new(load(&common, &instance)?, instance.depth)?;
            let report = validate(&geo, sources, common.seed)?;
            match common.format {
                Some(Format::Csv) => {
                    let mut s = String::from("edge,vertex,measured_K,eps_at_declared_K,declared_K,declared_eps,within\n");
                    for m in &report.maps {
                        s.push_str(&format!(
                            "{},{},{},{},{},{},{}\n",
                            m.edge,
                            m.vertex,
                            format_length(&m.measured_k),
                            format_length(&m.eps_at_declared_k),
                            format_length(&m.declared_k),
                            format_length(&m.declared_eps),
                            m.within_declared
                        ));
                    }
                    emit(&common, &s)
                }
                _ => emit(&common, &to_json(&report)?),
            }
        }
        Command::Ladder {
            common,
            instance,
            constants,
            lambda: (a, b),
        } => {
            let geo = TreeGeometry::new(load(&common, &instance)?, instance.depth)?;
            let (d, c) = match (constants.d, constants.c) {
                (Some(d), Some(c)) => (d, c),
                _ => {
                    let params = measure_constants(&geo, &overrides(&constants), common.seed)?;
                    (params.require(Param::D)?, params.require(Param::C)?)
                }
            };
            let lam = geo.coned[geo.tos.tree.root()].electric_geodesic_nb(a, b)?;
            let ladder = build_ladder_with(&geo, &lam, d, c)?;
            match common.format {
                Some(Format::Csv) => {
                    let mut s = String::from("vertex,stage,lambda_start,lambda_end,subpieces\n");
                    for p in ladder.pieces.values() {
                        s.push_str(&format!(
                            "{},{},{},{},{}\n",
                            p.vertex,
                            p.stage,
                            p.lambda.start(),
                            p.lambda.end(),
                            p.subpieces.len()
                        ));
                    }
                    emit(&common, &s)
                }
                _ => emit(&common, &to_json(&ladder)?),
            }
        }
        Command::CtProfile {
            common,
            instance,
            constants,
            n,
            budget,
            p,
            ladders,
        } => {
            let geo = TreeGeometry::new(load(&common, &instance)?, instance.depth)?;
            let params = measure_constants(&geo, &overrides(&constants), common.seed)?;
            let cfg = ProfileConfig {
                p,
                ns: parse_n_range(&n)?,
                budget,
                seed: common.seed,
                ladders,
            };
            let profile = ct_profile(&geo, &params, &cfg)?;
            match common.format {
                Some(Format::Json) => emit(&common, &to_json(&profile)?),
                _ => emit(&common, &profile.to_csv()?),
            }
        }
        Command::Run {
            common,
            instance,
            constants,
            n,
            budget,
            p,
        } => {
            let cfg = ExperimentConfig {
                instance: instance_source(&common, &instance)?,
                overrides: overrides(&constants),
                depth: instance.depth,
                ns: parse_n_range(&n)?,
                budget,
                seed: common.seed,
                p,
                out_dir: common.out.clone(),
            };
            let (doc, timings) = run(&cfg)?;
            let dir = cfg.resolved_out_dir();
            write_outputs(&dir, &doc, &timings)?;
            for s in &doc.suites {
                eprintln!("{} {}: {}", if s.passed { "PASS" } else { "FAIL" }, s.name, s.detail);
            }
            eprintln!("wrote {}", Path::new(&dir).display());
            if doc.passed {
                Ok(())
            } else {
                Err(Failure::Suites)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(j) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Suites) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
