use std::collections::BTreeSet;

use num_rational::Ratio;
use proptest::prelude::*;

use coarse_ct::ct_harness::generators::{plain_tree, random_graph, random_tree};
use coarse_ct::ct_harness::{ct_profile, generate_instance, measure_constants, GeneratorSpec, Overrides, ProfileConfig};
use coarse_ct::electric::{build_horoball, cone_off, HoroFamily};
use coarse_ct::ladder::{all_rays, build_ladder_with, ray_constant, Retraction};
use coarse_ct::length::{int, Length};
use coarse_ct::metric_graph::MetricGraph;
use coarse_ct::partial_electro::{partially_electrocute, CylinderLength, Target};
use coarse_ct::tree_spaces::TreeGeometry;
use coarse_ct::DeltaMode;

fn cfg(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

fn instance(spec: &str) -> TreeGeometry {
    let tos = generate_instance(&spec.parse::<GeneratorSpec>().unwrap(), 0).unwrap();
    TreeGeometry::new(tos, None).unwrap()
}

/// Off-member vertices of the root space.
fn off_member_root(geo: &TreeGeometry) -> Vec<usize> {
    let cs = &geo.coned[geo.tos.tree.root()];
    (0..cs.host_n()).filter(|&x| cs.index.is_off_member(x)).collect()
}

proptest! {
    #![proptest_config(cfg(24))]

    #[test]
    fn distances_form_a_metric(n in 2usize..40, extra in 0usize..30, seed in any::<u64>()) {
        let g = random_graph(n, extra, seed, "G").unwrap();
        let d = g.all_pairs();
        for u in 0..n {
            prop_assert_eq!(d.raw(u, u), 0);
            for v in 0..n {
                prop_assert_eq!(d.raw(u, v), d.raw(v, u));
                for w in 0..n {
                    prop_assert!(d.raw(u, w) <= d.raw(u, v) + d.raw(v, w));
                }
            }
        }
    }

    #[test]
    fn geodesics_certify_at_one(n in 2usize..40, extra in 0usize..30, seed in any::<u64>(), a in any::<usize>(), b in any::<usize>()) {
        let g = random_graph(n, extra, seed, "G").unwrap();
        let (a, b) = (a % n, b % n);
        let mut p = g.geodesic(a, b).unwrap();
        prop_assert_eq!(p.length, g.distance(a, b).unwrap());
        prop_assert_eq!(g.certify_quasigeodesic(&mut p).unwrap(), int(1));
    }

    #[test]
    fn trees_have_zero_delta(n in 1usize..30, seed in any::<u64>()) {
        let t = random_tree(n, seed, "T").unwrap();
        prop_assert_eq!(t.four_point_delta(DeltaMode::Exhaustive).unwrap().delta, int(0));
    }

    #[test]
    fn coning_shortens_and_collapses_members(n in 4usize..30, extra in 0usize..20, seed in any::<u64>(), k in 2usize..6) {
        let g = random_graph(n, extra, seed, "G").unwrap();
        let k = k.min(n);
        // a ball about vertex 0 is connected, so its intrinsic metric exists
        let d0 = g.distances_from(0).unwrap();
        let mut by_dist: Vec<usize> = (0..n).collect();
        by_dist.sort_by_key(|&v| (d0.raw(v), v));
        let member: Vec<usize> = by_dist[..k].to_vec();
        let fam = HoroFamily::new("G", [("H".to_string(), member.clone())], int(1));
        prop_assume!(fam.validate(&g).is_ok());
        let cs = cone_off(&g, &fam).unwrap();
        let before = g.all_pairs();
        let after = cs.graph.all_pairs();
        for u in 0..n {
            for v in 0..n {
                prop_assert!(after.get(u, v) <= before.get(u, v));
            }
        }
        for &u in &member {
            for &v in &member {
                prop_assert!(after.get(u, v) <= int(1));
            }
        }
    }

    #[test]
    fn horoball_level_zero_bounds(len in 2usize..40, depth in 1u32..6) {
        let edges: Vec<(usize, usize)> = (1..len).map(|i| (i - 1, i)).collect();
        let host = MetricGraph::unit("P", len, &edges).unwrap();
        let member: Vec<usize> = (0..len).collect();
        let hb = build_horoball(&host, "H", &member, depth).unwrap();
        let d = hb.graph.all_pairs();
        for i in 0..len {
            for j in 0..len {
                if i == j {
                    continue;
                }
                let dist = d.get(hb.local(0, i), hb.local(0, j));
                let dh = i.abs_diff(j) as i64;
                let bound = 2 * depth as i64 + (dh + (1 << depth) - 1) / (1 << depth);
                prop_assert!(dist >= int(1));
                prop_assert!(dist <= int(bound));
            }
        }
    }

    #[test]
    fn point_targets_with_half_rungs_match_coning(n in 4usize..25, extra in 0usize..15, seed in any::<u64>(), k in 2usize..5) {
        let g = random_graph(n, extra, seed, "G").unwrap();
        let d0 = g.distances_from(n - 1).unwrap();
        let mut by_dist: Vec<usize> = (0..n).collect();
        by_dist.sort_by_key(|&v| (d0.raw(v), v));
        let member: Vec<usize> = by_dist[..k.min(n)].to_vec();
        let fam = HoroFamily::new("G", [("H".to_string(), member.clone())], int(1));
        prop_assume!(fam.validate(&g).is_ok());
        let targets = [("H".to_string(), Target::point("H", &member))].into_iter().collect();
        let pe = partially_electrocute(&g, &fam, &targets, CylinderLength::Half).unwrap();
        let cs = cone_off(&g, &fam).unwrap();
        let a = pe.graph.all_pairs();
        let b = cs.graph.all_pairs();
        for u in 0..n {
            for v in 0..n {
                prop_assert_eq!(a.get(u, v), b.get(u, v));
            }
        }
    }
}

proptest! {
    #![proptest_config(cfg(12))]

    #[test]
    fn ladders_grow_and_rays_climb(
        spec in prop::sample::select(vec!["segment-identity,free-peripheral:2,2", "segment-automorphism,2,a=a;b=ba,2", "segment-identity,tree-plain:2:3,3"]),
        i in any::<usize>(),
        j in any::<usize>(),
        d in 1i64..5,
        c in 0i64..2,
    ) {
        let geo = instance(spec);
        let off = off_member_root(&geo);
        let (a, b) = (off[i % off.len()], off[j % off.len()]);
        prop_assume!(a != b);
        let lam = geo.coned[geo.tos.tree.root()].electric_geodesic_nb(a, b).unwrap();
        let ladder = build_ladder_with(&geo, &lam, int(d), int(c)).unwrap();
        ladder.check_invariants(&geo, &lam).unwrap();
        let mut prev = BTreeSet::new();
        for m in 1..=ladder.stages.len() {
            let cur: BTreeSet<usize> = ladder.stage_points(&geo, m).into_iter().collect();
            prop_assert!(prev.is_subset(&cur));
            prev = cur;
        }
        let rays = all_rays(&geo, &ladder).unwrap();
        let bound = ray_constant(&rays);
        for r in &rays {
            for s in &r.steps {
                prop_assert!(s.displacement >= int(1));
                prop_assert!(s.displacement <= bound);
            }
            prop_assert_eq!(r.end().0, geo.tos.tree.root());
        }
        let points: BTreeSet<usize> = ladder.points(&geo).into_iter().collect();
        let ret = Retraction::new(&geo, &ladder).unwrap();
        for x in 0..geo.tc.graph.n() {
            prop_assert!(points.contains(&ret.retract(x)));
        }
    }

    #[test]
    fn profile_rows_reverify(r in 2u32..4, budget in 20usize..120, seed in any::<u64>()) {
        let geo = instance(&format!("free-peripheral,{r}"));
        let params = measure_constants(&geo, &Overrides::default(), seed).unwrap();
        let pc = ProfileConfig { p: None, ns: (0..=r).collect(), budget, seed, ladders: false };
        let prof = ct_profile(&geo, &params, &pc).unwrap();
        prof.verify_rows(&geo).unwrap();
        prop_assert!(prof.envelope_is_monotone());
        for w in prof.rows.windows(2) {
            prop_assert!(w[0].n < w[1].n);
        }
    }

    #[test]
    fn plain_trees_profile_identity(branching in 2usize..4, depth in 2usize..5) {
        let g = plain_tree(branching, depth, "X").unwrap();
        let ecc = g.eccentricity(0).unwrap();
        let geo = instance(&format!("tree-plain,{branching},{depth}"));
        let params = measure_constants(&geo, &Overrides::default(), 0).unwrap();
        let pc = ProfileConfig { p: Some(0), ns: (0..depth as u32 + 1).collect(), budget: 1000, seed: 0, ladders: false };
        let prof = ct_profile(&geo, &params, &pc).unwrap();
        for row in &prof.rows {
            let n: Length = Ratio::from_integer(row.n as i64);
            if n < ecc {
                prop_assert_eq!(row.m, Some(n));
            } else {
                prop_assert!(row.m.is_none());
            }
        }
    }
}
