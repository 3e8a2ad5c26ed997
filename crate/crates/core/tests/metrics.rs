use fpmimo::beamforming::{CVector, RealizedBeamformers};
use fpmimo::metrics::{
    coherent_rates, empirical_mse, estimate_uatf_stats, mse_from_stats, uatf_rates, uatf_sinr,
    UatfStats,
};
use fpmimo::network::ChannelBatch;
use fpmimo::PowerVector;
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn scalar_batch(values: &[f64]) -> ChannelBatch {
    let mats: Vec<DMatrix<Complex64>> = values.iter().map(|&h| DMatrix::from_element(1, 1, c(h))).collect();
    ChannelBatch::from_matrices(1, 1, &mats).unwrap()
}

fn scalar_beams(values: &[f64]) -> RealizedBeamformers {
    let vectors: Vec<Vec<CVector>> = values.iter().map(|&v| vec![CVector::from_element(1, c(v))]).collect();
    RealizedBeamformers::from_vectors(1, 1, &vectors).unwrap()
}

#[test]
fn coherent_rate_of_two_realizations() {
    let batch = scalar_batch(&[1.0, 3.0]);
    let beams = scalar_beams(&[1.0, 1.0]);
    let p = PowerVector::new(vec![2.0]).unwrap();
    let rates = coherent_rates(&batch, &beams, &p).unwrap();
    let want = 0.5 * ((1.0f64 + 2.0).log2() + (1.0f64 + 18.0).log2());
    assert!((rates[0] - want).abs() < 1e-14);
}

#[test]
fn deterministic_channel_bounds_coincide() {
    let batch = scalar_batch(&[0.7, 0.7, 0.7]);
    let beams = scalar_beams(&[1.3, 1.3, 1.3]);
    let p = PowerVector::new(vec![3.0]).unwrap();
    let stats = estimate_uatf_stats(&batch, &beams).unwrap();
    let uatf = uatf_rates(&stats, &p).unwrap();
    let coherent = coherent_rates(&batch, &beams, &p).unwrap();
    assert!((uatf[0] - coherent[0]).abs() < 1e-12);
}

#[test]
fn scalar_mmse_duality() {
    // h = 1, p = 1, v = 1/2: MSE = 1/4 + 1/4 = 1/(1 + 1)
    let batch = scalar_batch(&[1.0]);
    let beams = scalar_beams(&[0.5]);
    let p = PowerVector::new(vec![1.0]).unwrap();
    assert!((empirical_mse(&batch, &beams, &p, 0).unwrap() - 0.5).abs() < 1e-15);
    let stats = estimate_uatf_stats(&batch, &beams).unwrap();
    assert!((uatf_sinr(&stats, &p, 0).unwrap() - 1.0).abs() < 1e-15);
}

/// Stats of `b v_k` from those of `v_k`.
fn scaled(stats: &UatfStats, k: usize, b: Complex64) -> UatfStats {
    let mut s = stats.clone();
    s.gain[k] *= b;
    for j in 0..s.users {
        s.cross[j * s.users + k] *= b.norm_sqr();
    }
    s.norm[k] *= b.norm_sqr();
    s
}

/// Golden-section search on `|b|` with the phase aligned to the gain.
fn min_over_scaling(stats: &UatfStats, p: &PowerVector, k: usize) -> f64 {
    let phase = Complex64::from_polar(1.0, -stats.gain[k].arg());
    let f = |r: f64| mse_from_stats(&scaled(stats, k, phase * r), p, k).unwrap();
    let (mut lo, mut hi) = (0.0, 1.0);
    while f(hi) < f(hi / 2.0) {
        hi *= 2.0;
    }
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..300 {
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if f(a) < f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    f(0.5 * (lo + hi))
}

fn random_batch(users: usize, m: usize, n_sim: usize, raw: &[f64]) -> (ChannelBatch, RealizedBeamformers) {
    let mut it = raw.iter().copied().cycle();
    let mut next = || Complex64::new(it.next().unwrap(), it.next().unwrap());
    let mats: Vec<DMatrix<Complex64>> = (0..n_sim).map(|_| DMatrix::from_fn(m, users, |_, _| next())).collect();
    let vectors: Vec<Vec<CVector>> = (0..n_sim)
        .map(|_| (0..users).map(|_| CVector::from_fn(m, |_, _| next())).collect())
        .collect();
    (
        ChannelBatch::from_matrices(1, m, &mats).unwrap(),
        RealizedBeamformers::from_vectors(1, m, &vectors).unwrap(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn coherent_dominates_uatf(
        raw in prop::collection::vec(-2.0..2.0f64, 64..256),
        powers in prop::collection::vec(0.01..100.0f64, 3),
        n_sim in 1usize..12,
    ) {
        let (batch, beams) = random_batch(3, 2, n_sim, &raw);
        let p = PowerVector::new(powers).unwrap();
        let stats = estimate_uatf_stats(&batch, &beams).unwrap();
        let uatf = uatf_rates(&stats, &p).unwrap();
        let coherent = coherent_rates(&batch, &beams, &p).unwrap();
        for k in 0..3 {
            prop_assert!(uatf[k] <= coherent[k] + 1e-12, "user {}: {} > {}", k, uatf[k], coherent[k]);
        }
    }

    #[test]
    fn minimum_over_scaling_is_one_over_one_plus_sinr(
        raw in prop::collection::vec(-2.0..2.0f64, 64..256),
        powers in prop::collection::vec(0.01..10.0f64, 3),
        k in 0usize..3,
    ) {
        let (batch, beams) = random_batch(3, 2, 6, &raw);
        let p = PowerVector::new(powers).unwrap();
        let stats = estimate_uatf_stats(&batch, &beams).unwrap();
        prop_assume!(stats.norm[k] > 1e-9 && stats.gain[k].norm() > 1e-6);
        let sinr = uatf_sinr(&stats, &p, k).unwrap();
        let best = min_over_scaling(&stats, &p, k);
        prop_assert!((best - 1.0 / (1.0 + sinr)).abs() <= 1e-9, "{} vs {}", best, 1.0 / (1.0 + sinr));
    }
}
