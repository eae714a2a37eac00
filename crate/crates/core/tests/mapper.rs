use proptest::prelude::*;
use resparc::mapper::{compile, utilization, ArchConfig, Endpoint, MappingPlan};
use resparc::quant::{QuantConfig, SignedMode};
use resparc::snn::{LayerSpec, SnnTopology, WeightMatrix};

fn unsigned() -> QuantConfig {
    QuantConfig::default().with_mode(SignedMode::Unsigned)
}

fn ones(rows: usize, cols: usize) -> WeightMatrix {
    WeightMatrix::new(rows, cols, vec![1.0; rows * cols]).unwrap()
}

fn dense(n_in: usize, n_out: usize) -> SnnTopology {
    SnnTopology::new(vec![LayerSpec::dense(n_in, n_out, 1.0)], vec![ones(n_in, n_out)]).unwrap()
}

#[test]
fn four_tiles_share_one_mpe() {
    let plan = compile(&dense(4, 4), &ArchConfig::default().with_crossbar(2), &unsigned()).unwrap();
    assert_eq!(plan.tiles.len(), 4);
    assert_eq!(plan.mpes.len(), 1);
    assert!(plan.cext_links.is_empty());
}

#[test]
fn degree_six_spans_two_adjacent_mpes() {
    let plan = compile(&dense(12, 1), &ArchConfig::default().with_crossbar(2), &unsigned()).unwrap();
    assert_eq!(plan.layers[0].schedule.degree(0), 6);
    assert_eq!(plan.mpes.len(), 2);
    assert!(plan.mpes[0].is_adjacent(&plan.mpes[1]));
    assert_eq!(plan.cext_links.len(), 1);
    assert_eq!(plan.neuron_home[0][0], 0);
    assert_eq!(plan.tile_mpe.iter().filter(|&&m| m == 0).count(), 4);
}

#[test]
fn layers_in_different_neurocells_talk_over_the_bus() {
    let topo = SnnTopology::new(
        vec![LayerSpec::dense(8, 8, 1.0), LayerSpec::dense(8, 4, 1.0)],
        vec![ones(8, 8), ones(8, 4)],
    )
    .unwrap();
    let arch = ArchConfig { nc_grid_w: 1, nc_grid_h: 1, ..ArchConfig::default().with_crossbar(8) };
    let plan = compile(&topo, &arch, &unsigned()).unwrap();
    assert_eq!(plan.num_ncs(), 2);
    assert_ne!(plan.mpes[0].nc, plan.mpes[1].nc);
    assert!(plan.bus_segments.iter().any(|s| s.producer == 0 && s.consumer == 1));
    let inner = &plan.boundaries[1];
    assert!(inner.groups.iter().all(|g| g.switch_dests.is_empty() && !g.bus_dests.is_empty()));
}

#[test]
fn utilization_examples() {
    let arch = ArchConfig::default();
    let fit = compile(&dense(64, 64), &arch, &unsigned()).unwrap();
    assert_eq!(utilization(&fit).mean_fill, 1.0);

    let ragged = utilization(&compile(&dense(100, 100), &arch, &unsigned()).unwrap());
    let want = (4096.0 + 2304.0 + 2304.0 + 1296.0) / (4.0 * 4096.0);
    assert!((ragged.mean_fill - want).abs() < 1e-12);

    let conv = SnnTopology::new(vec![LayerSpec::conv(4, 4, 1, 3, 1, 1, 1.0)], vec![ones(9, 1)]).unwrap();
    let u = utilization(&compile(&conv, &arch.with_crossbar(16), &unsigned()).unwrap());
    assert_eq!(u.total_tiles, 1);
    assert!((u.mean_fill - 36.0 / 256.0).abs() < 1e-12);
}

#[test]
fn too_many_neurocells_is_a_capacity_error() {
    let arch = ArchConfig { num_neurocells: 1, nc_grid_w: 1, nc_grid_h: 1, ..ArchConfig::default().with_crossbar(8) };
    let err = compile(&dense(64, 64), &arch, &unsigned()).unwrap_err();
    assert_eq!(err.exit_code(), 2, "{err}");
}

fn check_routes(plan: &MappingPlan) {
    let arch = &plan.arch;
    for b in &plan.boundaries {
        for g in &b.groups {
            let Endpoint::Mpe(src) = g.src else {
                assert!(g.switch_dests.is_empty(), "SRAM groups travel on the bus");
                continue;
            };
            for &dst in &g.switch_dests {
                assert_eq!(plan.mpes[src].nc, plan.mpes[dst].nc, "switch route leaves its NeuroCell");
                let sw = plan.mpes[src].switch(arch);
                let table = plan.routing_tables.iter().find(|t| t.switch == sw).expect("source switch has a table");
                let route = table.routes.iter().find(|r| r.src_mpe == src && r.dst_mpe == dst).expect("route");
                assert!(route.kind.hops() >= 1);
            }
            for &dst in &g.bus_dests {
                assert_ne!(plan.mpes[src].nc, plan.mpes[dst].nc, "bus used inside one NeuroCell");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn plans_cover_every_synapse_and_route_validly(
        dims in proptest::collection::vec(2usize..40, 2..5),
        size in prop_oneof![Just(4usize), Just(8), Just(16)],
        mcas in 1usize..5,
        differential in any::<bool>(),
        seed in any::<u64>(),
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let lo = if differential { -1.0 } else { 0.0 };
        let topo = SnnTopology::new(
            dims.windows(2).map(|d| LayerSpec::dense(d[0], d[1], 1.0)).collect(),
            dims.windows(2)
                .map(|d| WeightMatrix::new(d[0], d[1], (0..d[0] * d[1]).map(|_| rng.gen_range(lo..1.0)).collect()).unwrap())
                .collect(),
        ).unwrap();
        let mode = if differential { SignedMode::Differential } else { SignedMode::Unsigned };
        let quant = QuantConfig::default().with_mode(mode);
        let arch = ArchConfig { mcas_per_mpe: mcas, ..ArchConfig::default().with_crossbar(size) };
        let plan = compile(&topo, &arch, &quant).unwrap();
        for l in 0..dims.len() - 1 {
            prop_assert_eq!(plan.reconstruct_layer(l).unwrap().len(), dims[l] * dims[l + 1]);
            for j in 0..dims[l + 1] {
                let mut rows: Vec<usize> = plan.layers[l].schedule.sources[j]
                    .iter()
                    .flat_map(|&(t, _)| plan.tiles[t].row_map.clone())
                    .collect();
                rows.sort_unstable();
                prop_assert_eq!(rows, (0..dims[l]).collect::<Vec<_>>());
            }
        }
        for link in &plan.cext_links {
            prop_assert!(plan.mpes[link.from].is_adjacent(&plan.mpes[link.to]));
        }
        check_routes(&plan);
    }
}
