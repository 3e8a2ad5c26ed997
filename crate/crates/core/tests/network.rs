use fpmimo::network::{build_csi, generate_instance, sample_channels, CsiView, NetworkConfig};
use fpmimo::{NetworkInstance, Scenario};
use num_complex::Complex64;

fn unit_instance(aps: usize, users: usize, antennas: usize, q: usize) -> NetworkInstance {
    NetworkInstance::from_gains(
        antennas,
        aps,
        users,
        vec![1.0; aps * users],
        q,
        Scenario::DistributedCellFree,
    )
    .unwrap()
}

#[test]
fn unit_gain_blocks_have_unit_power() {
    let inst = unit_instance(2, 1, 4, 2);
    let batch = sample_channels(&inst, 10_000, 3).unwrap();
    for l in 0..2 {
        let mean: f64 = (0..batch.n_sim)
            .map(|n| batch.block(n, l, 0).iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            / batch.n_sim as f64
            / 4.0;
        assert!((0.97..=1.03).contains(&mean), "AP {l}: {mean}");
    }
}

#[test]
fn blocks_of_different_aps_are_uncorrelated() {
    let inst = unit_instance(2, 1, 4, 2);
    let batch = sample_channels(&inst, 10_000, 4).unwrap();
    let cross: Complex64 = (0..batch.n_sim)
        .map(|n| {
            batch
                .block(n, 0, 0)
                .iter()
                .zip(batch.block(n, 1, 0))
                .map(|(a, b)| a.conj() * b)
                .sum::<Complex64>()
        })
        .sum::<Complex64>()
        / batch.n_sim as f64;
    assert!(cross.norm() / 4.0 < 0.05, "{cross}");
}

#[test]
fn sampling_is_deterministic() {
    let cfg = NetworkConfig::desk();
    let a = generate_instance(&cfg, Scenario::CentralizedCellFree, 8).unwrap();
    let b = generate_instance(&cfg, Scenario::CentralizedCellFree, 8).unwrap();
    assert_eq!(a, b);
    let x = sample_channels(&a, 20, 5).unwrap();
    let y = sample_channels(&b, 20, 5).unwrap();
    for n in 0..20 {
        for k in 0..a.n_users() {
            assert_eq!(x.column(n, k), y.column(n, k));
        }
    }
}

#[test]
fn unshadowed_gains_are_deterministic() {
    let cfg = NetworkConfig {
        shadow_std: 0.0,
        ..NetworkConfig::desk()
    };
    let a = generate_instance(&cfg, Scenario::SmallCells, 1).unwrap();
    let b = generate_instance(&cfg, Scenario::SmallCells, 1).unwrap();
    assert_eq!(a.beta, b.beta);
}

#[test]
fn full_clusters_leave_batch_unmasked() {
    let inst = unit_instance(4, 3, 2, 4);
    let batch = sample_channels(&inst, 5, 1).unwrap();
    let csi = build_csi(&batch, &inst).unwrap();
    let full = CsiView::full(&batch);
    for n in 0..5 {
        for k in 0..3 {
            assert_eq!(csi.column(n, k), full.column(n, k));
        }
    }
}

#[test]
fn single_user_single_ap_has_one_block() {
    let beta = vec![0.5, 2.0, 1.0, 0.1];
    let inst = NetworkInstance::from_gains(2, 4, 1, beta, 1, Scenario::SmallCells).unwrap();
    let batch = sample_channels(&inst, 10, 2).unwrap();
    let csi = build_csi(&batch, &inst).unwrap();
    for n in 0..10 {
        let nonzero: Vec<usize> = (0..4)
            .filter(|&l| csi.block(n, l, 0).iter().any(|z| z.norm() > 0.0))
            .collect();
        assert_eq!(nonzero, vec![1]);
    }
}

#[test]
fn non_serving_blocks_are_zero_on_random_instance() {
    let cfg = NetworkConfig::desk();
    for scenario in Scenario::ALL {
        let inst = generate_instance(&cfg, scenario, 3).unwrap();
        let batch = sample_channels(&inst, 5, 6).unwrap();
        let csi = build_csi(&batch, &inst).unwrap();
        for n in 0..5 {
            for k in 0..inst.n_users() {
                for l in 0..inst.n_aps() {
                    let block = csi.block(n, l, k);
                    if csi.is_known(l, k) {
                        assert_eq!(block, batch.block(n, l, k));
                    } else {
                        assert!(block.iter().all(|z| *z == Complex64::new(0.0, 0.0)));
                    }
                }
            }
        }
    }
}
