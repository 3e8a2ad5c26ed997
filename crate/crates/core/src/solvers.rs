//! Joint long-term power control and beamforming, plus the comparison baselines.

use log::{debug, warn};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::beamforming::{
    centralized_mmse_gains, lsfd_optimize, mrc, scenario_design, team_mmse_gains, BeamformerDesign,
    Combiner, CVector, RealizedBeamformers,
};
use crate::error::{Error, Result};
use crate::fixed_point::{
    iterate_fixed_point, iterate_normalized_fixed_point, FixedPointOptions, InterferenceMapping,
    IterationTrace, MonotoneNorm, PowerVector, Status,
};
use crate::metrics::{
    estimate_stats, rate_from_sinr, uatf_sinrs, ApMoments, Measure, UatfStats,
};
use crate::network::{CsiView, Scenario};

/// Which optimization produced a [`SolveResult`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    /// Minimum total power subject to SINR targets.
    JointSumPower,
    /// Weighted max-min SINR under a per-user budget.
    JointMaxMin,
    /// Max-min over powers only, beamformers frozen at full power.
    PowerOnly,
    /// Per-realization max-min with instantaneous CSI.
    ShortTerm,
    /// MRC with optimized LSFD weights and powers.
    MrcLsfd,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::JointSumPower => "joint-qos",
            Method::JointMaxMin => "joint",
            Method::PowerOnly => "power-only",
            Method::ShortTerm => "short-term",
            Method::MrcLsfd => "mrc-lsfd",
        }
    }
}

/// A solved long-term problem together with its certificate trail.
#[derive(Clone, Debug)]
pub struct SolveResult {
    pub method: Method,
    pub scenario: Scenario,
    pub status: Status,
    pub p_star: PowerVector,
    pub design: BeamformerDesign,
    pub beams: RealizedBeamformers,
    pub stats: UatfStats,
    pub trace: IterationTrace,
    /// UatF SINR per user at `p_star`.
    pub sinr: Vec<f64>,
    /// UatF rate per user at `p_star` (bit/s/Hz).
    pub rates: Vec<f64>,
    /// Outer rounds of a block-coordinate method, 1 otherwise.
    pub rounds: usize,
}

impl SolveResult {
    pub fn min_rate(&self) -> f64 {
        self.rates.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn converged(&self) -> bool {
        self.status == Status::Converged
    }
}

fn check_gammas(gammas: &[f64], users: usize) -> Result<()> {
    if gammas.len() != users {
        return Err(Error::DimensionMismatch {
            expected: users,
            got: gammas.len(),
        });
    }
    if gammas.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
        return Err(Error::invalid("SINR targets must be positive and finite"));
    }
    Ok(())
}

fn check_budget(budget: f64) -> Result<()> {
    if budget.is_finite() && budget > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid("power budget must be positive and finite"))
    }
}

/// SINR of the scenario's MSE-optimal design at `p`, per user.
pub fn optimal_sinrs(csi: &CsiView, scenario: Scenario, p: &PowerVector) -> Result<Vec<f64>> {
    if p.len() != csi.users {
        return Err(Error::DimensionMismatch {
            expected: csi.users,
            got: p.len(),
        });
    }
    let gains = match scenario {
        Scenario::CentralizedCellFree => centralized_mmse_gains(csi, p.as_slice())?,
        _ => team_mmse_gains(csi, p.as_slice())?,
    };
    // gain = 1 - MMSE, so SINR = 1 / MMSE - 1
    gains
        .into_iter()
        .enumerate()
        .map(|(k, s)| {
            if s > 0.0 && s < 1.0 {
                Ok(s / (1.0 - s))
            } else {
                Err(Error::Numerical(format!(
                    "MMSE of user {k} left (0, 1): 1 - MMSE = {s}"
                )))
            }
        })
        .collect()
}

/// `T_k(p) = gamma_k p_k / SINR_k(v*(p), p)` with `v*(p)` the scenario-optimal design.
pub struct InducedMapping<'a> {
    csi: &'a CsiView,
    scenario: Scenario,
    gammas: Vec<f64>,
}

impl<'a> InducedMapping<'a> {
    pub fn new(csi: &'a CsiView, scenario: Scenario, gammas: Vec<f64>) -> Result<Self> {
        check_gammas(&gammas, csi.users)?;
        Ok(Self {
            csi,
            scenario,
            gammas,
        })
    }
}

impl InterferenceMapping for InducedMapping<'_> {
    fn dim(&self) -> usize {
        self.csi.users
    }

    fn eval(&self, p: &PowerVector) -> Result<Vec<f64>> {
        let sinr = optimal_sinrs(self.csi, self.scenario, p)?;
        Ok(scale_by_sinr(p, &self.gammas, &sinr))
    }
}

fn scale_by_sinr(p: &PowerVector, gammas: &[f64], sinr: &[f64]) -> Vec<f64> {
    p.iter()
        .zip(gammas)
        .zip(sinr)
        .map(|((p, g), s)| g * p / s)
        .collect()
}

/// `T_k(p) = gamma_k p_k / SINR_k(p)` for fixed beamformer statistics.
pub struct FixedStatsMapping<'a> {
    stats: &'a UatfStats,
    gammas: Vec<f64>,
}

impl<'a> FixedStatsMapping<'a> {
    pub fn new(stats: &'a UatfStats, gammas: Vec<f64>) -> Result<Self> {
        check_gammas(&gammas, stats.users)?;
        if let Some(k) = (0..stats.users).find(|&k| stats.norm[k] <= 0.0 || stats.gain[k].norm_sqr() == 0.0) {
            return Err(Error::UndefinedBeamformer { user: k });
        }
        Ok(Self { stats, gammas })
    }
}

impl InterferenceMapping for FixedStatsMapping<'_> {
    fn dim(&self) -> usize {
        self.stats.users
    }

    fn eval(&self, p: &PowerVector) -> Result<Vec<f64>> {
        let sinr = uatf_sinrs(self.stats, p)?;
        Ok(scale_by_sinr(p, &self.gammas, &sinr))
    }
}

/// `T_k(p) = gamma_k p_k / max_a SINR_k(a, p)` for per-AP weights `a` on fixed
/// local beamformers.
pub struct LsfdMapping<'a> {
    moments: &'a ApMoments,
    gammas: Vec<f64>,
}

impl<'a> LsfdMapping<'a> {
    pub fn new(moments: &'a ApMoments, gammas: Vec<f64>) -> Result<Self> {
        check_gammas(&gammas, moments.users)?;
        Ok(Self { moments, gammas })
    }
}

impl InterferenceMapping for LsfdMapping<'_> {
    fn dim(&self) -> usize {
        self.moments.users
    }

    fn eval(&self, p: &PowerVector) -> Result<Vec<f64>> {
        let sinr = lsfd_weights(self.moments, p)?
            .1;
        Ok(scale_by_sinr(p, &self.gammas, &sinr))
    }
}

fn lsfd_weights(moments: &ApMoments, p: &PowerVector) -> Result<(Vec<Vec<Complex64>>, Vec<f64>)> {
    let mut weights = Vec::with_capacity(moments.users);
    let mut sinr = Vec::with_capacity(moments.users);
    for k in 0..moments.users {
        let m = moments.lsfd_moments(p, k)?;
        let a = lsfd_optimize(&m)?;
        let s = m.sinr(&a);
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::UndefinedBeamformer { user: k });
        }
        // SINR is scale invariant; fix the scale by a_1 = 1 when possible.
        let a = normalize_weights(a);
        sinr.push(s);
        weights.push(a.as_slice().to_vec());
    }
    Ok((weights, sinr))
}

fn normalize_weights(a: CVector) -> CVector {
    let lead = a[0];
    if lead.norm() > 0.0 {
        a / lead
    } else {
        let n = a.norm();
        a / Complex64::from(n)
    }
}

/// Evaluates the scenario-optimal design at `p`.
fn finish(
    csi: &CsiView,
    scenario: Scenario,
    method: Method,
    trace: IterationTrace,
) -> Result<SolveResult> {
    let p_star = trace.point.clone();
    let (design, beams) = scenario_design(csi, scenario, &p_star)?;
    let stats = estimate_stats(csi, &beams, Measure::for_scenario(scenario))?;
    let sinr = uatf_sinrs(&stats, &p_star)?;
    Ok(SolveResult {
        method,
        scenario,
        status: trace.status,
        p_star,
        design,
        beams,
        stats,
        rates: sinr.iter().copied().map(rate_from_sinr).collect(),
        sinr,
        trace,
        rounds: 1,
    })
}

/// Minimum total power meeting `SINR_k >= gamma_k`. An empty feasible set shows
/// up as a `Diverged` result, not as an error.
pub fn solve_sum_power(
    csi: &CsiView,
    scenario: Scenario,
    gammas: &[f64],
    p0: &PowerVector,
    opts: &FixedPointOptions,
) -> Result<SolveResult> {
    let map = InducedMapping::new(csi, scenario, gammas.to_vec())?;
    let trace = iterate_fixed_point(&map, p0, opts)?;
    debug!(
        "sum-power {scenario}: {:?} after {} iterations",
        trace.status,
        trace.iterations()
    );
    finish(csi, scenario, Method::JointSumPower, trace)
}

/// Weighted max-min SINR, `||p||_inf <= budget`.
pub fn solve_max_min(
    csi: &CsiView,
    scenario: Scenario,
    gammas: &[f64],
    budget: f64,
    p0: Option<&PowerVector>,
    opts: &FixedPointOptions,
) -> Result<SolveResult> {
    check_budget(budget)?;
    let map = InducedMapping::new(csi, scenario, gammas.to_vec())?;
    let start = initial_point(csi.users, budget, p0)?;
    let trace = iterate_normalized_fixed_point(&map, &MonotoneNorm::linf(), budget, &start, opts)?;
    debug!(
        "max-min {scenario}: {:?} after {} iterations",
        trace.status,
        trace.iterations()
    );
    finish(csi, scenario, Method::JointMaxMin, trace)
}

fn initial_point(users: usize, budget: f64, p0: Option<&PowerVector>) -> Result<PowerVector> {
    match p0 {
        Some(p) if p.len() != users => Err(Error::DimensionMismatch {
            expected: users,
            got: p.len(),
        }),
        Some(p) => Ok(p.clone()),
        None => PowerVector::uniform(users, budget),
    }
}

/// Max-min over powers with `design` frozen.
pub fn solve_power_only_maxmin(
    csi: &CsiView,
    design: &BeamformerDesign,
    gammas: &[f64],
    budget: f64,
    p0: Option<&PowerVector>,
    opts: &FixedPointOptions,
) -> Result<SolveResult> {
    check_budget(budget)?;
    let beams = design.realize(csi)?;
    let stats = estimate_stats(csi, &beams, Measure::for_scenario(design.scenario))?;
    let map = FixedStatsMapping::new(&stats, gammas.to_vec())?;
    let start = initial_point(csi.users, budget, p0)?;
    let trace = iterate_normalized_fixed_point(&map, &MonotoneNorm::linf(), budget, &start, opts)?;
    let p_star = trace.point.clone();
    let sinr = uatf_sinrs(&stats, &p_star)?;
    Ok(SolveResult {
        method: Method::PowerOnly,
        scenario: design.scenario,
        status: trace.status,
        p_star,
        design: design.clone(),
        beams,
        rates: sinr.iter().copied().map(rate_from_sinr).collect(),
        sinr,
        stats,
        trace,
        rounds: 1,
    })
}

/// The scenario-optimal design at full power `budget * 1`, as used by the
/// power-only baseline.
pub fn full_power_design(csi: &CsiView, scenario: Scenario, budget: f64) -> Result<BeamformerDesign> {
    check_budget(budget)?;
    let p = PowerVector::uniform(csi.users, budget)?;
    Ok(scenario_design(csi, scenario, &p)?.0)
}

/// Per-realization solutions of the short-term baseline.
#[derive(Clone, Debug)]
pub struct ShortTermResult {
    /// Optimal powers per realization.
    pub powers: Vec<PowerVector>,
    /// Instantaneous SINR per realization and user.
    pub sinr: Vec<Vec<f64>>,
    /// Ergodic rate per user, `mean_n log2(1 + SINR_n)`.
    pub rates: Vec<f64>,
    /// Realizations whose iteration met the tolerance.
    pub converged: usize,
}

impl ShortTermResult {
    pub fn min_rate(&self) -> f64 {
        self.rates.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Centralized max-min re-solved for every CSI realization.
pub fn solve_short_term_maxmin(
    csi: &CsiView,
    gammas: &[f64],
    budget: f64,
    opts: &FixedPointOptions,
) -> Result<ShortTermResult> {
    check_budget(budget)?;
    check_gammas(gammas, csi.users)?;
    let start = PowerVector::uniform(csi.users, budget)?;
    let mut powers = Vec::with_capacity(csi.n_sim);
    let mut sinr = Vec::with_capacity(csi.n_sim);
    let mut rates = vec![0.0; csi.users];
    let mut converged = 0;
    for n in 0..csi.n_sim {
        let single = csi.select(&[n]);
        let map = InducedMapping::new(&single, Scenario::CentralizedCellFree, gammas.to_vec())?;
        let trace = iterate_normalized_fixed_point(&map, &MonotoneNorm::linf(), budget, &start, opts)?;
        if trace.converged() {
            converged += 1;
        }
        let s = optimal_sinrs(&single, Scenario::CentralizedCellFree, &trace.point)?;
        for (r, s) in rates.iter_mut().zip(&s) {
            *r += rate_from_sinr(*s);
        }
        powers.push(trace.point);
        sinr.push(s);
    }
    if converged < csi.n_sim {
        warn!("short-term: {} of {} realizations hit the iteration cap", csi.n_sim - converged, csi.n_sim);
    }
    rates.iter_mut().for_each(|r| *r /= csi.n_sim as f64);
    Ok(ShortTermResult {
        powers,
        sinr,
        rates,
        converged,
    })
}

/// Options for the short-term baseline: 200 iterations, relative step 1e-8.
pub fn short_term_options() -> FixedPointOptions {
    FixedPointOptions::default().with_max_iter(200)
}

/// How the LSFD weights and the powers are coupled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LsfdMode {
    /// Alternate closed-form weights and a power-only solve.
    BlockCoordinate,
    /// Fold the weight update into every normalized fixed-point step.
    SingleLoop,
}

/// Outer-loop stopping for [`LsfdMode::BlockCoordinate`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LsfdOptions {
    /// Minimum min-rate improvement (bit/s/Hz) per round.
    pub rate_tol: f64,
    pub max_rounds: usize,
}

impl Default for LsfdOptions {
    fn default() -> Self {
        Self {
            rate_tol: 1e-6,
            max_rounds: 50,
        }
    }
}

/// MRC with jointly optimized LSFD weights and powers (max-min).
pub fn solve_lsfd_maxmin(
    csi: &CsiView,
    scenario: Scenario,
    gammas: &[f64],
    budget: f64,
    mode: LsfdMode,
    lsfd: &LsfdOptions,
    opts: &FixedPointOptions,
) -> Result<SolveResult> {
    check_budget(budget)?;
    check_gammas(gammas, csi.users)?;
    let base = mrc(csi);
    let moments = ApMoments::estimate(csi, &base, false)?;
    let start = PowerVector::uniform(csi.users, budget)?;
    let norm = MonotoneNorm::linf();

    let (weights, trace, rounds) = match mode {
        LsfdMode::SingleLoop => {
            let map = LsfdMapping::new(&moments, gammas.to_vec())?;
            let trace = iterate_normalized_fixed_point(&map, &norm, budget, &start, opts)?;
            let (w, _) = lsfd_weights(&moments, &trace.point)?;
            (w, trace, 1)
        }
        LsfdMode::BlockCoordinate => {
            let mut weights: Vec<Vec<Complex64>> = (0..csi.users)
                .map(|k| vec![Complex64::new(1.0, 0.0); moments.support(k).len()])
                .collect();
            let mut p = start;
            let mut best = f64::NEG_INFINITY;
            let mut rounds = 0;
            let mut last_trace;
            loop {
                rounds += 1;
                let stats = moments.with_weights(&weights)?.stats(Measure::ApProduct)?;
                let map = FixedStatsMapping::new(&stats, gammas.to_vec())?;
                last_trace = iterate_normalized_fixed_point(&map, &norm, budget, &p, opts)?;
                p = last_trace.point.clone();
                let min_rate = uatf_sinrs(&stats, &p)?
                    .into_iter()
                    .map(rate_from_sinr)
                    .fold(f64::INFINITY, f64::min);
                let improvement = min_rate - best;
                best = best.max(min_rate);
                if improvement < lsfd.rate_tol || rounds >= lsfd.max_rounds {
                    break;
                }
                weights = lsfd_weights(&moments, &p)?.0;
            }
            debug!("LSFD block-coordinate ascent: {rounds} rounds, min rate {best}");
            (weights, last_trace, rounds)
        }
    };

    let p_star = trace.point.clone();
    let beams = base.with_ap_weights(&weights)?;
    let stats = moments.with_weights(&weights)?.stats(Measure::ApProduct)?;
    let sinr = uatf_sinrs(&stats, &p_star)?;
    let design = BeamformerDesign {
        scenario,
        powers: p_star.clone(),
        error_scales: (0..csi.aps).map(|l| csi.error_scale(l, p_star.as_slice())).collect(),
        combiner: Combiner::Mrc,
        lsfd: Some(weights),
        team_residual: 0.0,
    };
    Ok(SolveResult {
        method: Method::MrcLsfd,
        scenario,
        status: trace.status,
        p_star,
        design,
        beams,
        rates: sinr.iter().copied().map(rate_from_sinr).collect(),
        sinr,
        stats,
        trace,
        rounds,
    })
}

/// Targets `gamma = 2^rate - 1` for every user.
pub fn rate_targets(users: usize, rate: f64) -> Vec<f64> {
    vec![2f64.powf(rate) - 1.0; users]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamforming::CMatrix;
    use crate::fixed_point::check_si_axioms;
    use crate::network::{build_csi, generate_instance, sample_channels, ChannelBatch, NetworkConfig};
    use approx::assert_relative_eq;

    fn scalar_csi(h: f64) -> CsiView {
        let batch = ChannelBatch::from_matrices(1, 1, &[CMatrix::from_element(1, 1, Complex64::new(h, 0.0))]).unwrap();
        CsiView::full(&batch)
    }

    fn tiny_config() -> NetworkConfig {
        NetworkConfig {
            users: 4,
            aps: 4,
            antennas: 2,
            cluster_size: 2,
            n_sim: 20,
            ..NetworkConfig::desk()
        }
    }

    fn tiny(scenario: Scenario, seed: u64) -> CsiView {
        let cfg = tiny_config();
        let inst = generate_instance(&cfg, scenario, seed).unwrap();
        let batch = sample_channels(&inst, cfg.n_sim, seed + 7).unwrap();
        build_csi(&batch, &inst).unwrap()
    }

    #[test]
    fn scalar_sum_power_is_one() {
        // SINR(p) = p with the MMSE beamformer, so gamma = 1 gives p* = 1.
        let csi = scalar_csi(1.0);
        let p0 = PowerVector::uniform(1, 5.0).unwrap();
        let res = solve_sum_power(&csi, Scenario::CentralizedCellFree, &[1.0], &p0, &FixedPointOptions::default()).unwrap();
        assert!(res.converged());
        assert_relative_eq!(res.p_star[0], 1.0, max_relative = 1e-7);
    }

    #[test]
    fn single_user_max_min_uses_full_power() {
        let csi = scalar_csi(0.7);
        let res = solve_max_min(&csi, Scenario::CentralizedCellFree, &[1.0], 5.0, None, &FixedPointOptions::default()).unwrap();
        assert_eq!(res.p_star[0], 5.0);
        assert_relative_eq!(res.sinr[0], 5.0 * 0.49, max_relative = 1e-12);
    }

    #[test]
    fn fast_and_full_sinr_paths_agree() {
        for scenario in Scenario::ALL {
            let csi = tiny(scenario, 3);
            let p = PowerVector::new(vec![3.0, 50.0, 0.2, 10.0]).unwrap();
            let fast = optimal_sinrs(&csi, scenario, &p).unwrap();
            let (_, beams) = scenario_design(&csi, scenario, &p).unwrap();
            let stats = estimate_stats(&csi, &beams, Measure::for_scenario(scenario)).unwrap();
            let full = uatf_sinrs(&stats, &p).unwrap();
            for (a, b) in fast.iter().zip(&full) {
                assert_relative_eq!(a, b, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn induced_mappings_are_standard() {
        for scenario in Scenario::ALL {
            let csi = tiny(scenario, 11);
            let map = InducedMapping::new(&csi, scenario, vec![1.0; 4]).unwrap();
            let report = check_si_axioms(&map, 200, 5).unwrap();
            assert!(report.is_clean(), "{scenario}: {:?}", report.violations.first());
        }
    }

    #[test]
    fn lsfd_modes_agree() {
        let csi = tiny(Scenario::DistributedCellFree, 2);
        let opts = FixedPointOptions::default();
        let gam = vec![1.0; 4];
        let a = solve_lsfd_maxmin(&csi, Scenario::DistributedCellFree, &gam, 100.0, LsfdMode::BlockCoordinate, &LsfdOptions::default(), &opts).unwrap();
        let b = solve_lsfd_maxmin(&csi, Scenario::DistributedCellFree, &gam, 100.0, LsfdMode::SingleLoop, &LsfdOptions::default(), &opts).unwrap();
        assert_relative_eq!(a.min_rate(), b.min_rate(), max_relative = 1e-4);
    }

    #[test]
    fn rejects_bad_targets() {
        let csi = scalar_csi(1.0);
        let p0 = PowerVector::uniform(1, 1.0).unwrap();
        let opts = FixedPointOptions::default();
        let err = solve_sum_power(&csi, Scenario::CentralizedCellFree, &[0.0], &p0, &opts).unwrap_err();
        assert!(err.is_invalid_argument());
        let err = solve_max_min(&csi, Scenario::CentralizedCellFree, &[1.0], -1.0, None, &opts).unwrap_err();
        assert!(err.is_invalid_argument());
    }
}
