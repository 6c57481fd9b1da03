use nalgebra::DMatrix;
use proptest::prelude::*;

use sis_bounds::analysis::{self, ComparisonRow};
use sis_bounds::bounds::{build_m, build_m_prime};
use sis_bounds::chain::{exact_moments, ChainDistribution, ExactChain, NetworkState};
use sis_bounds::graph::{self, Graph};
use sis_bounds::montecarlo::{self, McConfig, McEstimate};
use sis_bounds::spectral::{dense_qr_radius, gelfand_radius, spectral_radius, SpectralOptions};
use sis_bounds::{EpidemicParams, LinearOperator};

/// Graph on `n` nodes keeping the pairs selected by `mask`.
fn masked_graph(n: usize, mask: u32) -> Graph {
    let mut edges = Vec::new();
    let mut bit = 0;
    for i in 0..n {
        for j in i + 1..n {
            if mask >> bit & 1 == 1 {
                edges.push((i, j));
            }
            bit += 1;
        }
    }
    Graph::from_edges(n, edges).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exact_chain_stays_a_distribution_under_the_bounds(
        n in 2usize..=6,
        mask in any::<u32>(),
        beta in 0.0f64..1.0,
        delta in 0.0f64..=1.0,
    ) {
        let g = masked_graph(n, mask);
        let p = EpidemicParams::new(beta, delta).unwrap();
        let dists = ExactChain::new(&g, p)
            .unwrap()
            .evolve(ChainDistribution::point_mass(n, NetworkState::all_infected(n)).unwrap(), 15)
            .unwrap();
        let mut healthy = 0.0;
        for d in &dists {
            prop_assert!((d.total() - 1.0).abs() < 1e-12);
            prop_assert!(d.probs().iter().all(|&v| v >= 0.0));
            prop_assert!(d.get(NetworkState::HEALTHY) >= healthy - 1e-15);
            healthy = d.get(NetworkState::HEALTHY);
            let mom = exact_moments(d, &g).unwrap();
            prop_assert!(mom.p.iter().all(|&v| (-1e-15..=1.0 + 1e-12).contains(&v)));
        }
        let report = analysis::dominance_check(&g, p, 15).unwrap();
        prop_assert!(report.max_violation() <= 1e-10, "{:?}", report);
    }

    #[test]
    fn gelfand_agrees_with_schur_on_bound_operators(
        n in 2usize..=7,
        mask in any::<u32>(),
        beta in 0.01f64..0.99,
        delta in 0.01f64..0.99,
    ) {
        let g = masked_graph(n, mask);
        let p = EpidemicParams::new(beta, delta).unwrap();
        for dense in [build_m(&g, p).to_dense(), build_m_prime(&g, p).to_dense()] {
            let qr = dense_qr_radius(&dense).unwrap().rho;
            let gel = gelfand_radius(&dense, &SpectralOptions::default()).unwrap().rho;
            prop_assert!((qr - gel).abs() <= 1e-6 * qr.max(1e-3), "schur {qr} gelfand {gel}");
        }
    }
}

#[test]
fn rho_m_is_the_shifted_adjacency_radius() {
    let g = graph::watts_strogatz(30, 4, 0.2, 9).unwrap();
    let p = EpidemicParams::new(0.07, 0.35).unwrap();
    let rho = spectral_radius(&build_m(&g, p), &SpectralOptions::default()).unwrap().rho;
    let adj: DMatrix<f64> = g.adjacency_matrix().to_dense();
    let lambda = dense_qr_radius(&adj).unwrap().rho;
    assert!((rho - (1.0 - 0.35 + 0.07 * lambda)).abs() < 1e-9);
}

#[test]
fn reports_round_trip_through_json() {
    let g = graph::star(6).unwrap();
    let p = EpidemicParams::new(0.05, 0.6).unwrap();
    let row = analysis::table_row(&g, "star6", p, 200).unwrap();
    let back: ComparisonRow = serde_json::from_str(&serde_json::to_string(&row).unwrap()).unwrap();
    assert_eq!(back.graph, row.graph);
    assert_eq!(back.sign_condition, row.sign_condition);
    assert!((back.rho_m_prime - row.rho_m_prime).abs() <= 1e-15 * row.rho_m_prime);

    let mut cfg = McConfig::new(50, 20);
    cfg.track_times = vec![3];
    let est = montecarlo::estimate(&g, p, &cfg).unwrap();
    let back: McEstimate = serde_json::from_str(&serde_json::to_string(&est).unwrap()).unwrap();
    assert_eq!(back.alive, est.alive);
    assert_eq!(back.node_frequency.len(), 1);
}

#[test]
fn edge_list_round_trip() {
    let g = graph::erdos_renyi(40, 0.1, 5).unwrap();
    let mut buf = Vec::new();
    g.write_edge_list(&mut buf).unwrap();
    let back = Graph::read_edge_list(buf.as_slice()).unwrap();
    assert_eq!(back, g);
}
