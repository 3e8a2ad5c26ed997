//! Monte Carlo sweeps: convergence traces, rate CDFs and method comparisons.
//!
//! Every sweep is a pure function of its [`ExperimentConfig`]; drops run on
//! the rayon pool and are gathered in drop order, so the emitted CSV is
//! byte-identical across runs and thread counts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixed_point::{
    iterate_fixed_point, iterate_normalized_fixed_point, FixedPointOptions, IterationTrace, MonotoneNorm,
    PowerVector, Status,
};
use crate::beamforming::scenario_design;
use crate::fixed_point::{check_si_axioms_with, SiCheck};
use crate::metrics::{coherent_rates_csi, estimate_stats, mse_from_stats, uatf_rates, Measure};
use crate::network::{build_csi, generate_instance, sample_channels, CsiView, NetworkConfig, Scenario};
use crate::solvers::{
    full_power_design, rate_targets, short_term_options, solve_lsfd_maxmin, solve_max_min,
    optimal_sinrs, solve_power_only_maxmin, solve_short_term_maxmin, InducedMapping, LsfdMode, LsfdOptions, Method,
    SolveResult,
};

/// Version tag written in the header comment of every CSV.
pub const CSV_SCHEMA_VERSION: u32 = 1;

/// Offset between geometry and channel seeds of the same drop.
pub const CHANNEL_SEED_OFFSET: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Profile {
    Desk,
    Paper,
}

impl Profile {
    pub fn network(self) -> NetworkConfig {
        match self {
            Profile::Desk => NetworkConfig::desk(),
            Profile::Paper => NetworkConfig::paper(),
        }
    }

    pub fn drops(self) -> usize {
        match self {
            Profile::Desk => 20,
            Profile::Paper => 100,
        }
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Profile::Desk),
            "paper" => Ok(Profile::Paper),
            other => Err(Error::invalid(format!("unknown profile '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExperimentKind {
    ConvergeQos,
    ConvergeMaxMin,
    Cdf,
    CompareCentralized,
    CompareDistributed,
}

/// Which problem a convergence run iterates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Problem {
    /// Sum-power minimization under rate targets.
    Qos,
    /// Max-min fairness under the power budget.
    MaxMin,
}

impl Problem {
    pub fn label(self) -> &'static str {
        match self {
            Problem::Qos => "qos",
            Problem::MaxMin => "maxmin",
        }
    }
}

impl FromStr for Problem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qos" => Ok(Problem::Qos),
            "maxmin" => Ok(Problem::MaxMin),
            other => Err(Error::invalid(format!("unknown problem '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub network: NetworkConfig,
    pub profile: Profile,
    pub drops: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Scenarios to run where the experiment sweeps scenarios.
    pub scenarios: Vec<Scenario>,
    /// Per-user rate target of the sum-power problem (bit/s/Hz).
    pub rate_target: f64,
    pub fixed_point: FixedPointOptions,
}

impl ExperimentConfig {
    pub fn new(profile: Profile) -> Self {
        Self {
            network: profile.network(),
            profile,
            drops: profile.drops(),
            seed: 1,
            out_dir: PathBuf::from("out"),
            scenarios: Scenario::ALL.to_vec(),
            rate_target: 2.5,
            fixed_point: FixedPointOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        self.fixed_point.validate()?;
        if self.drops == 0 {
            return Err(Error::invalid("drops must be at least 1"));
        }
        if self.scenarios.is_empty() {
            return Err(Error::invalid("at least one scenario is required"));
        }
        if !(self.rate_target.is_finite() && self.rate_target > 0.0) {
            return Err(Error::invalid("rate_target must be positive"));
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_overrides(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("line {}: expected key = value", i + 1)))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::invalid(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::invalid(format!("bad value '{value}' for {key}")))
        }
        let net = &mut self.network;
        match key {
            "users" | "K" => net.users = num(key, value)?,
            "aps" | "L" => net.aps = num(key, value)?,
            "antennas" | "N" => net.antennas = num(key, value)?,
            "cluster_size" | "Q" => net.cluster_size = num(key, value)?,
            "area_side" => net.area_side = num(key, value)?,
            "pathloss_a" => net.pathloss_a = num(key, value)?,
            "pathloss_b" => net.pathloss_b = num(key, value)?,
            "shadow_std" => net.shadow_std = num(key, value)?,
            "shadow_corr_dist" => net.shadow_corr_dist = num(key, value)?,
            "bandwidth_hz" => net.bandwidth_hz = num(key, value)?,
            "noise_figure_db" => net.noise_figure_db = num(key, value)?,
            "height_diff" => net.height_diff = num(key, value)?,
            "power_dbm" => net.power_dbm = num(key, value)?,
            "n_sim" | "nsim" => net.n_sim = num(key, value)?,
            "drops" => self.drops = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "rate_target" => self.rate_target = num(key, value)?,
            "tol" => self.fixed_point.tol = num(key, value)?,
            "max_iter" => self.fixed_point.max_iter = num(key, value)?,
            "out" => self.out_dir = PathBuf::from(value),
            "scenarios" => {
                self.scenarios = value
                    .split(',')
                    .map(|s| s.trim().parse())
                    .collect::<Result<_>>()?
            }
            other => return Err(Error::invalid(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Geometry and channel seeds of drop `d`.
    pub fn drop_seeds(&self, d: usize) -> (u64, u64) {
        let d = d as u64;
        (self.seed + d, self.seed + CHANNEL_SEED_OFFSET + d)
    }

    /// CSI of drop `d` under `scenario`. All scenarios of a drop share the
    /// geometry and the channel realizations.
    pub fn drop_csi(&self, d: usize, scenario: Scenario) -> Result<CsiView> {
        let (geo, chan) = self.drop_seeds(d);
        let inst = generate_instance(&self.network, scenario, geo)?;
        let batch = sample_channels(&inst, self.network.n_sim, chan)?;
        build_csi(&batch, &inst)
    }
}

/// Which rate expression a sample reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Bound {
    Uatf,
    Coherent,
}

impl Bound {
    pub fn label(self) -> &'static str {
        match self {
            Bound::Uatf => "uatf",
            Bound::Coherent => "coherent",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub drop: usize,
    pub user: usize,
    pub method: Method,
    pub scenario: Scenario,
    pub bound: Bound,
    pub rate: f64,
}

/// Raw per-user rate samples; quantiles are left to the consumer.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RateTable {
    pub rows: Vec<RateRow>,
    /// Per-drop ordering checks that failed.
    pub ordering_violations: Vec<String>,
}

impl RateTable {
    pub const HEADER: &'static str = "drop,user,method,scenario,bound,rate";

    fn push(&mut self, drop: usize, method: Method, scenario: Scenario, bound: Bound, rates: &[f64]) {
        for (user, &rate) in rates.iter().enumerate() {
            self.rows.push(RateRow {
                drop,
                user,
                method,
                scenario,
                bound,
                rate,
            });
        }
    }

    /// Rates of one series, in drop then user order.
    pub fn series(&self, method: Method, scenario: Scenario, bound: Bound) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.method == method && r.scenario == scenario && r.bound == bound)
            .map(|r| r.rate)
            .collect()
    }

    pub fn min_rate(&self, drop: usize, method: Method, scenario: Scenario, bound: Bound) -> Option<f64> {
        self.rows
            .iter()
            .filter(|r| r.drop == drop && r.method == method && r.scenario == scenario && r.bound == bound)
            .map(|r| r.rate)
            .reduce(f64::min)
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("# fpmimo rates v{CSV_SCHEMA_VERSION}\n{}\n", Self::HEADER);
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.drop,
                r.user,
                r.method.label(),
                r.scenario.label(),
                r.bound.label(),
                r.rate
            );
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_csv())
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// One convergence series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSeries {
    pub problem: Problem,
    pub scenario: Scenario,
    pub status: Status,
    /// `||p_i - p*||_2` for every iterate; empty when the run diverged.
    pub distances: Vec<f64>,
    /// Iterations of the reported run.
    pub iterations: usize,
    /// Mean ratio of consecutive step residuals over the last 10 steps.
    pub tail_ratio: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub series: Vec<ConvergenceSeries>,
}

impl ConvergenceTable {
    pub const HEADER: &'static str = "problem,scenario,status,iteration,distance";

    pub fn get(&self, scenario: Scenario) -> Option<&ConvergenceSeries> {
        self.series.iter().find(|s| s.scenario == scenario)
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("# fpmimo convergence v{CSV_SCHEMA_VERSION}\n{}\n", Self::HEADER);
        for s in &self.series {
            let status = status_label(s.status);
            if s.status == Status::Diverged {
                // marker row: no distance to a fixed point exists
                let _ = writeln!(out, "{},{},{status},{},", s.problem.label(), s.scenario.label(), s.iterations);
                continue;
            }
            for (i, d) in s.distances.iter().enumerate() {
                let _ = writeln!(out, "{},{},{status},{i},{d}", s.problem.label(), s.scenario.label());
            }
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_csv())
    }
}

pub fn status_label(s: Status) -> &'static str {
    match s {
        Status::Converged => "converged",
        Status::Diverged => "diverged",
        Status::MaxIterations => "max-iterations",
    }
}

fn run_trace(
    csi: &CsiView,
    scenario: Scenario,
    problem: Problem,
    cfg: &ExperimentConfig,
    opts: &FixedPointOptions,
) -> Result<IterationTrace> {
    let users = cfg.network.users;
    let budget = cfg.network.power_budget();
    let p0 = PowerVector::uniform(users, budget)?;
    match problem {
        Problem::Qos => {
            let map = InducedMapping::new(csi, scenario, rate_targets(users, cfg.rate_target))?;
            iterate_fixed_point(&map, &p0, opts)
        }
        Problem::MaxMin => {
            let map = InducedMapping::new(csi, scenario, vec![1.0; users])?;
            iterate_normalized_fixed_point(&map, &MonotoneNorm::linf(), budget, &p0, opts)
        }
    }
}

/// Distance-to-fixed-point traces of drop 0 for every configured scenario.
/// `p*` is the last iterate of a reference run with four times the budget.
pub fn run_convergence(cfg: &ExperimentConfig, problem: Problem) -> Result<ConvergenceTable> {
    cfg.validate()?;
    let series = cfg
        .scenarios
        .par_iter()
        .map(|&scenario| {
            let csi = cfg.drop_csi(0, scenario)?;
            let trace = run_trace(&csi, scenario, problem, cfg, &cfg.fixed_point)?;
            let tail_ratio = trace.tail_ratio(10);
            if trace.status == Status::Diverged {
                info!("{} {scenario}: diverged after {} iterations", problem.label(), trace.iterations());
                return Ok(ConvergenceSeries {
                    problem,
                    scenario,
                    status: trace.status,
                    distances: Vec::new(),
                    iterations: trace.iterations(),
                    tail_ratio,
                });
            }
            let reference_opts = FixedPointOptions {
                tol: f64::MIN_POSITIVE,
                max_iter: 4 * cfg.fixed_point.max_iter,
                ..cfg.fixed_point.clone()
            };
            let reference = run_trace(&csi, scenario, problem, cfg, &reference_opts)?;
            let p_star = reference.iterates.last().expect("non-empty");
            let distances = trace
                .iterates
                .iter()
                .map(|p| {
                    p.iter()
                        .zip(p_star.iter())
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt()
                })
                .collect();
            Ok(ConvergenceSeries {
                problem,
                scenario,
                status: trace.status,
                distances,
                iterations: trace.iterations(),
                tail_ratio,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceTable { series })
}

fn push_result(table: &mut RateTable, drop: usize, res: &SolveResult, csi: &CsiView) -> Result<()> {
    table.push(drop, res.method, res.scenario, Bound::Uatf, &res.rates);
    let coherent = coherent_rates_csi(csi, &res.beams, &res.p_star)?;
    table.push(drop, res.method, res.scenario, Bound::Coherent, &coherent);
    Ok(())
}

fn gather(cfg: &ExperimentConfig, per_drop: impl Fn(usize) -> Result<RateTable> + Sync) -> Result<RateTable> {
    cfg.validate()?;
    let tables = (0..cfg.drops)
        .into_par_iter()
        .map(|d| per_drop(d))
        .collect::<Result<Vec<_>>>()?;
    let mut out = RateTable::default();
    for t in tables {
        if let Some(r) = t.rows.iter().find(|r| !(r.rate.is_finite() && r.rate >= 0.0)) {
            return Err(Error::Numerical(format!(
                "drop {} user {}: {} {} rate is {}",
                r.drop,
                r.user,
                r.method.label(),
                r.scenario.label(),
                r.rate
            )));
        }
        out.rows.extend(t.rows);
        out.ordering_violations.extend(t.ordering_violations);
    }
    for v in &out.ordering_violations {
        warn!("{v}");
    }
    Ok(out)
}

/// Joint max-min rates (UatF and coherent) of every configured scenario.
pub fn run_cdf(cfg: &ExperimentConfig) -> Result<RateTable> {
    let budget = cfg.network.power_budget();
    let gammas = vec![1.0; cfg.network.users];
    gather(cfg, |d| {
        let mut table = RateTable::default();
        for &scenario in &cfg.scenarios {
            let csi = cfg.drop_csi(d, scenario)?;
            let res = solve_max_min(&csi, scenario, &gammas, budget, None, &cfg.fixed_point)?;
            push_result(&mut table, d, &res, &csi)?;
        }
        Ok(table)
    })
}

/// Centralized joint long-term, short-term and power-only solutions.
pub fn run_compare_centralized(cfg: &ExperimentConfig) -> Result<RateTable> {
    let budget = cfg.network.power_budget();
    let gammas = vec![1.0; cfg.network.users];
    let scenario = Scenario::CentralizedCellFree;
    gather(cfg, |d| {
        let mut table = RateTable::default();
        let csi = cfg.drop_csi(d, scenario)?;
        let joint = solve_max_min(&csi, scenario, &gammas, budget, None, &cfg.fixed_point)?;
        push_result(&mut table, d, &joint, &csi)?;
        let frozen = full_power_design(&csi, scenario, budget)?;
        let power_only = solve_power_only_maxmin(&csi, &frozen, &gammas, budget, None, &cfg.fixed_point)?;
        push_result(&mut table, d, &power_only, &csi)?;
        let short = solve_short_term_maxmin(&csi, &gammas, budget, &short_term_options())?;
        table.push(d, Method::ShortTerm, scenario, Bound::Coherent, &short.rates);

        if power_only.min_rate() > joint.min_rate() + 1e-9 {
            table.ordering_violations.push(format!(
                "drop {d}: centralized power-only min rate {} exceeds joint {}",
                power_only.min_rate(),
                joint.min_rate()
            ));
        }
        Ok(table)
    })
}

/// Distributed joint team MMSE, power-only team MMSE and MRC with LSFD.
pub fn run_compare_distributed(cfg: &ExperimentConfig) -> Result<RateTable> {
    let budget = cfg.network.power_budget();
    let gammas = vec![1.0; cfg.network.users];
    let scenario = Scenario::DistributedCellFree;
    gather(cfg, |d| {
        let mut table = RateTable::default();
        let csi = cfg.drop_csi(d, scenario)?;
        let joint = solve_max_min(&csi, scenario, &gammas, budget, None, &cfg.fixed_point)?;
        push_result(&mut table, d, &joint, &csi)?;
        let frozen = full_power_design(&csi, scenario, budget)?;
        let power_only = solve_power_only_maxmin(&csi, &frozen, &gammas, budget, None, &cfg.fixed_point)?;
        push_result(&mut table, d, &power_only, &csi)?;
        let lsfd = solve_lsfd_maxmin(
            &csi,
            scenario,
            &gammas,
            budget,
            LsfdMode::BlockCoordinate,
            &LsfdOptions::default(),
            &cfg.fixed_point,
        )?;
        push_result(&mut table, d, &lsfd, &csi)?;

        let (j, po, m) = (joint.min_rate(), power_only.min_rate(), lsfd.min_rate());
        if !(m <= po + 1e-9 && po <= j + 1e-9) {
            table.ordering_violations.push(format!(
                "drop {d}: expected mrc-lsfd {m} <= power-only {po} <= joint {j}"
            ));
        }
        Ok(table)
    })
}

/// Outcome of one invariant check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

/// Invariant suite on every configured drop: SI axioms of the induced
/// mappings (`si_samples` samples each), MSE duality, max-min certificates,
/// information ordering of the optimal SINRs and UatF <= coherent.
pub fn run_checks(cfg: &ExperimentConfig, si_samples: usize) -> Result<Vec<CheckOutcome>> {
    cfg.validate()?;
    let users = cfg.network.users;
    let budget = cfg.network.power_budget();
    let full = PowerVector::uniform(users, budget)?;
    let ones = vec![1.0; users];
    let gammas = rate_targets(users, cfg.rate_target);

    struct DropCheck {
        si: Vec<(Scenario, usize)>,
        duality: f64,
        spread: f64,
        unconverged: Vec<Scenario>,
        bound: f64,
        sinr: Vec<(Scenario, Vec<f64>)>,
    }

    let drops = (0..cfg.drops)
        .into_par_iter()
        .map(|d| {
            let mut out = DropCheck {
                si: Vec::new(),
                duality: 0.0,
                spread: 0.0,
                unconverged: Vec::new(),
                bound: f64::NEG_INFINITY,
                sinr: Vec::new(),
            };
            for &scenario in &cfg.scenarios {
                let csi = cfg.drop_csi(d, scenario)?;
                let map = InducedMapping::new(&csi, scenario, gammas.clone())?;
                let report = check_si_axioms_with(&map, &SiCheck::new(si_samples, cfg.seed + d as u64))?;
                out.si.push((scenario, report.violation_count));

                let (_, beams) = scenario_design(&csi, scenario, &full)?;
                let stats = estimate_stats(&csi, &beams, Measure::for_scenario(scenario))?;
                let sinr = optimal_sinrs(&csi, scenario, &full)?;
                for (k, s) in sinr.iter().enumerate() {
                    let gap = (mse_from_stats(&stats, &full, k)? - 1.0 / (1.0 + s)).abs();
                    out.duality = out.duality.max(gap);
                }

                let res = solve_max_min(&csi, scenario, &ones, budget, None, &cfg.fixed_point)?;
                if !res.converged() {
                    out.unconverged.push(scenario);
                }
                let hi = res.sinr.iter().copied().fold(f64::MIN, f64::max);
                let lo = res.sinr.iter().copied().fold(f64::MAX, f64::min);
                out.spread = out.spread.max((hi - lo) / hi);
                let joint = estimate_stats(&csi, &res.beams, Measure::Joint)?;
                let uatf = uatf_rates(&joint, &res.p_star)?;
                let coherent = coherent_rates_csi(&csi, &res.beams, &res.p_star)?;
                for (u, c) in uatf.iter().zip(&coherent) {
                    out.bound = out.bound.max(u - c);
                }
                out.sinr.push((scenario, res.sinr));
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut outcomes = Vec::new();
    let si: usize = drops.iter().flat_map(|d| d.si.iter().map(|(_, v)| v)).sum();
    outcomes.push(CheckOutcome::new(
        "si-axioms",
        si == 0,
        format!(
            "{} mappings x {si_samples} samples, {si} violations",
            drops.iter().map(|d| d.si.len()).sum::<usize>()
        ),
    ));
    let duality = drops.iter().map(|d| d.duality).fold(0.0, f64::max);
    outcomes.push(CheckOutcome::new(
        "duality",
        duality <= 1e-9,
        format!("max |MSE - 1/(1+SINR)| = {duality:.2e}"),
    ));
    let spread = drops.iter().map(|d| d.spread).fold(0.0, f64::max);
    let unconverged: usize = drops.iter().map(|d| d.unconverged.len()).sum();
    outcomes.push(CheckOutcome::new(
        "max-min-certificate",
        spread <= 1e-5 && unconverged == 0,
        format!("balance spread {spread:.2e}, {unconverged} unconverged solves"),
    ));
    let bound = drops.iter().map(|d| d.bound).fold(f64::NEG_INFINITY, f64::max);
    outcomes.push(CheckOutcome::new(
        "bound-ordering",
        bound <= 1e-12,
        format!("max UatF - coherent {bound:.2e}"),
    ));
    let chain = [
        Scenario::SmallCells,
        Scenario::DistributedCellFree,
        Scenario::CentralizedCellFree,
    ];
    if chain.iter().all(|s| cfg.scenarios.contains(s)) {
        let mut violations = 0;
        for d in &drops {
            let get = |s: Scenario| &d.sinr.iter().find(|(x, _)| *x == s).expect("scenario solved").1;
            for pair in chain.windows(2) {
                let (lo, hi) = (get(pair[0]), get(pair[1]));
                violations += lo
                    .iter()
                    .zip(hi)
                    .filter(|(a, b)| **a > **b + 1e-9 * b.max(1.0))
                    .count();
            }
        }
        outcomes.push(CheckOutcome::new(
            "information-ordering",
            violations == 0,
            format!("{violations} users out of order"),
        ));
    }
    Ok(outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_parse() {
        let mut cfg = ExperimentConfig::new(Profile::Desk);
        cfg.apply_overrides("# comment\nusers = 4\nQ=2 # inline\nscenarios = centralized, small-cells\n")
            .unwrap();
        assert_eq!(cfg.network.users, 4);
        assert_eq!(cfg.network.cluster_size, 2);
        assert_eq!(cfg.scenarios, vec![Scenario::CentralizedCellFree, Scenario::SmallCells]);
        assert!(cfg.apply_overrides("bogus = 1").unwrap_err().is_invalid_argument());
        assert!(cfg.apply_overrides("users = x").unwrap_err().is_invalid_argument());
        assert!(cfg.apply_overrides("users").unwrap_err().is_invalid_argument());
    }

    #[test]
    fn checks_pass_on_small_config() {
        let mut cfg = ExperimentConfig::new(Profile::Desk);
        cfg.apply_overrides("users = 4\naps = 4\nQ = 2\nN = 2\nn_sim = 10\ndrops = 1").unwrap();
        let outcomes = run_checks(&cfg, 50).unwrap();
        assert_eq!(outcomes.len(), 5);
        assert!(outcomes.iter().all(|o| o.passed), "{outcomes:?}");
    }

    #[test]
    fn zero_drops_rejected() {
        let mut cfg = ExperimentConfig::new(Profile::Desk);
        cfg.drops = 0;
        assert!(run_compare_centralized(&cfg).unwrap_err().is_invalid_argument());
    }

    #[test]
    fn drop_seeds_are_disjoint() {
        let cfg = ExperimentConfig::new(Profile::Desk);
        assert_eq!(cfg.drop_seeds(3), (4, 1_000_004));
    }

    #[test]
    fn csv_marker_row_for_divergence() {
        let table = ConvergenceTable {
            series: vec![ConvergenceSeries {
                problem: Problem::Qos,
                scenario: Scenario::SmallCells,
                status: Status::Diverged,
                distances: vec![],
                iterations: 17,
                tail_ratio: None,
            }],
        };
        let csv = table.to_csv();
        assert!(csv.ends_with("qos,small-cells,diverged,17,\n"));
    }
}
