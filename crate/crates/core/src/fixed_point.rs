//! Fixed-point engine for standard interference mappings.
//!
//! A mapping `T: R++^K -> R++^K` is a standard interference (SI) mapping when
//! it is monotone (`p >= q => T(p) >= T(q)`) and scalable
//! (`a > 1 => a T(p) > T(a p)`). Two iterations are provided:
//!
//! * plain iteration `p <- T(p)`, whose fixed point (if any) is unique and
//!   solves the sum-power minimization problem;
//! * normalized iteration `p <- P T(p) / ||T(p)||`, which always converges and
//!   whose fixed point solves the weighted max-min problem under `||p|| <= P`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Strictly positive per-user transmit powers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PowerVector(Vec<f64>);

impl PowerVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("power vector must have at least one entry"));
        }
        if let Some((k, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(Error::invalid(format!(
                "power of user {k} must be finite and strictly positive, got {v}"
            )));
        }
        Ok(Self(values))
    }

    pub fn uniform(len: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.0.iter().map(|v| v * factor).collect())
    }

    pub fn norm2(&self) -> f64 {
        norm2(&self.0)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::MIN, f64::max)
    }
}

impl std::ops::Index<usize> for PowerVector {
    type Output = f64;

    fn index(&self, k: usize) -> &f64 {
        &self.0[k]
    }
}

impl TryFrom<Vec<f64>> for PowerVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<PowerVector> for Vec<f64> {
    fn from(p: PowerVector) -> Self {
        p.0
    }
}

/// A mapping `p -> (gamma_1 f_1(p), ..., gamma_K f_K(p))`.
///
/// `eval` may return non-finite or huge entries; the iteration engine treats
/// those as divergence rather than as errors.
pub trait InterferenceMapping {
    fn dim(&self) -> usize;

    fn eval(&self, p: &PowerVector) -> Result<Vec<f64>>;
}

impl<T: InterferenceMapping + ?Sized> InterferenceMapping for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn eval(&self, p: &PowerVector) -> Result<Vec<f64>> {
        (**self).eval(p)
    }
}

/// Adapts a closure into an [`InterferenceMapping`].
pub struct FnMapping<F> {
    dim: usize,
    f: F,
}

impl<F> FnMapping<F>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> InterferenceMapping for FnMapping<F>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, p: &PowerVector) -> Result<Vec<f64>> {
        Ok((self.f)(p.as_slice()))
    }
}

/// Monotone norms used for power budgets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum MonotoneNorm {
    L1,
    /// `||p|| = max_k p_k / w_k`; `None` means unit weights.
    WeightedLInf { weights: Option<Vec<f64>> },
}

impl MonotoneNorm {
    pub fn linf() -> Self {
        MonotoneNorm::WeightedLInf { weights: None }
    }

    pub fn weighted_linf(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::invalid("norm weights must be strictly positive"));
        }
        Ok(MonotoneNorm::WeightedLInf {
            weights: Some(weights),
        })
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        match self {
            MonotoneNorm::WeightedLInf { weights: Some(w) } if w.len() != dim => {
                Err(Error::DimensionMismatch {
                    expected: dim,
                    got: w.len(),
                })
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, p: &[f64]) -> f64 {
        match self {
            MonotoneNorm::L1 => p.iter().map(|v| v.abs()).sum(),
            MonotoneNorm::WeightedLInf { weights: None } => {
                p.iter().fold(0.0, |acc, v| acc.max(v.abs()))
            }
            MonotoneNorm::WeightedLInf { weights: Some(w) } => p
                .iter()
                .zip(w)
                .fold(0.0, |acc, (v, w)| acc.max(v.abs() / w)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Converged,
    Diverged,
    MaxIterations,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPointOptions {
    /// Stop when `max_k |p_{n+1,k} - p_{n,k}| / p_{n,k} <= tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// Any power above this value flags divergence (plain iteration only).
    pub divergence_cap: f64,
    /// Flag divergence after this many consecutive steps whose residual does
    /// not shrink while `||p||` grows (plain iteration only).
    pub stall_window: usize,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 500,
            divergence_cap: 1e9,
            stall_window: 50,
        }
    }
}

impl FixedPointOptions {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::invalid("tolerance must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be positive"));
        }
        if !(self.divergence_cap > 0.0) {
            return Err(Error::invalid("divergence cap must be positive"));
        }
        Ok(())
    }
}

/// Record of one fixed-point run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IterationTrace {
    /// `p_1 = p0, p_2, ...` in order.
    pub iterates: Vec<PowerVector>,
    /// `||p_{n+1} - p_n||_2`, one per step.
    pub residuals: Vec<f64>,
    /// Componentwise relative steps used by the stopping rule.
    pub relative_steps: Vec<f64>,
    pub status: Status,
    /// Returned point. When converged this is the last iterate whose image
    /// was evaluated, so `max_k |p_k - T(p)_k| / p_k <= tol` holds for it.
    pub point: PowerVector,
}

impl IterationTrace {
    pub fn converged(&self) -> bool {
        self.status == Status::Converged
    }

    pub fn iterations(&self) -> usize {
        self.residuals.len()
    }

    /// Geometric-mean contraction of the step residuals over the last `window`
    /// steps, `(r_n / r_{n-window})^(1/window)`.
    pub fn tail_ratio(&self, window: usize) -> Option<f64> {
        tail_ratio(&self.residuals, window)
    }
}

pub(crate) fn tail_ratio(series: &[f64], window: usize) -> Option<f64> {
    if window == 0 || series.len() <= window {
        return None;
    }
    let last = series[series.len() - 1];
    let first = series[series.len() - 1 - window];
    if !(first > 0.0 && last > 0.0) {
        return None;
    }
    Some((last / first).powf(1.0 / window as f64))
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn step_metrics(prev: &[f64], next: &[f64]) -> (f64, f64) {
    let mut sq = 0.0;
    let mut rel = 0.0f64;
    for (a, b) in prev.iter().zip(next) {
        let d = b - a;
        sq += d * d;
        rel = rel.max(d.abs() / a);
    }
    (sq.sqrt(), rel)
}

fn check_mapping_dim(map: &dyn InterferenceMapping, p0: &PowerVector) -> Result<()> {
    if map.dim() != p0.len() {
        return Err(Error::DimensionMismatch {
            expected: map.dim(),
            got: p0.len(),
        });
    }
    Ok(())
}

fn eval_checked(map: &dyn InterferenceMapping, p: &PowerVector) -> Result<Vec<f64>> {
    let t = map.eval(p)?;
    if t.len() != p.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            got: t.len(),
        });
    }
    Ok(t)
}

/// Runs `p <- T(p)` from `p0`.
pub fn iterate_fixed_point(
    map: &dyn InterferenceMapping,
    p0: &PowerVector,
    opts: &FixedPointOptions,
) -> Result<IterationTrace> {
    opts.validate()?;
    check_mapping_dim(map, p0)?;

    let mut iterates = vec![p0.clone()];
    let mut residuals = Vec::new();
    let mut relative_steps = Vec::new();
    let mut stalled = 0usize;
    let mut status = Status::MaxIterations;
    let mut point = p0.clone();

    for _ in 0..opts.max_iter {
        let current = iterates.last().expect("non-empty").clone();
        let image = eval_checked(map, &current)?;
        // Unbounded growth (or overflow) is the signature of an empty fixed
        // point set.
        if image.iter().any(|v| !v.is_finite() || *v > opts.divergence_cap) {
            status = Status::Diverged;
            point = current;
            break;
        }
        let next = PowerVector::new(image).map_err(|e| {
            Error::Numerical(format!("mapping left the positive orthant: {e}"))
        })?;
        let (res, rel) = step_metrics(current.as_slice(), next.as_slice());

        if let Some(&prev_res) = residuals.last() {
            if res >= prev_res && next.norm2() > current.norm2() {
                stalled += 1;
            } else {
                stalled = 0;
            }
        }
        residuals.push(res);
        relative_steps.push(rel);
        iterates.push(next);
        point = current;

        if rel <= opts.tol {
            status = Status::Converged;
            break;
        }
        if stalled >= opts.stall_window {
            status = Status::Diverged;
            point = iterates.last().expect("non-empty").clone();
            break;
        }
    }
    if status == Status::MaxIterations {
        point = iterates.last().expect("non-empty").clone();
    }

    Ok(IterationTrace {
        iterates,
        residuals,
        relative_steps,
        status,
        point,
    })
}

/// Runs `p <- (budget / ||T(p)||) T(p)` from `p0`.
pub fn iterate_normalized_fixed_point(
    map: &dyn InterferenceMapping,
    norm: &MonotoneNorm,
    budget: f64,
    p0: &PowerVector,
    opts: &FixedPointOptions,
) -> Result<IterationTrace> {
    opts.validate()?;
    check_mapping_dim(map, p0)?;
    norm.check_dim(p0.len())?;
    if !(budget.is_finite() && budget > 0.0) {
        return Err(Error::invalid("power budget must be positive"));
    }

    let mut iterates = vec![p0.clone()];
    let mut residuals = Vec::new();
    let mut relative_steps = Vec::new();
    let mut status = Status::MaxIterations;
    let mut point = p0.clone();

    for _ in 0..opts.max_iter {
        let current = iterates.last().expect("non-empty").clone();
        let image = eval_checked(map, &current)?;
        let next = normalize(image, norm, budget)?;
        let (res, rel) = step_metrics(current.as_slice(), next.as_slice());
        residuals.push(res);
        relative_steps.push(rel);
        iterates.push(next);
        point = current;
        if rel <= opts.tol {
            status = Status::Converged;
            break;
        }
    }
    if status != Status::Converged {
        point = iterates.last().expect("non-empty").clone();
    }
    // Snap the returned point onto the budget boundary; the iterates already
    // lie on it up to rounding.
    let scale = budget / norm.eval(point.as_slice());
    point = point.scaled(scale)?;

    Ok(IterationTrace {
        iterates,
        residuals,
        relative_steps,
        status,
        point,
    })
}

pub(crate) fn normalize(image: Vec<f64>, norm: &MonotoneNorm, budget: f64) -> Result<PowerVector> {
    let n = norm.eval(&image);
    if !(n.is_finite() && n > 0.0) {
        return Err(Error::Numerical(format!(
            "cannot normalize mapping output with norm {n}"
        )));
    }
    PowerVector::new(image.into_iter().map(|v| v * budget / n).collect())
        .map_err(|e| Error::Numerical(format!("mapping left the positive orthant: {e}")))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AxiomKind {
    Monotonicity,
    Scalability,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AxiomViolation {
    pub sample: usize,
    pub kind: AxiomKind,
    pub user: usize,
    /// Monotonicity: `T(q)_k` vs `T(p)_k`. Scalability: `T(a p)_k` vs `a T(p)_k`.
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SiReport {
    pub samples: usize,
    pub evaluations: usize,
    pub violation_count: usize,
    /// The first few violations, for diagnostics.
    pub violations: Vec<AxiomViolation>,
}

impl SiReport {
    pub fn is_clean(&self) -> bool {
        self.violation_count == 0
    }

    fn record(&mut self, v: AxiomViolation) {
        self.violation_count += 1;
        if self.violations.len() < 32 {
            self.violations.push(v);
        }
    }
}

/// Sampling setup for [`check_si_axioms_with`].
#[derive(Clone, Debug)]
pub struct SiCheck {
    pub samples: usize,
    pub seed: u64,
    /// Base points are drawn log-uniformly in `[low, high]` per coordinate.
    pub low: f64,
    pub high: f64,
    pub tol: f64,
}

impl SiCheck {
    pub fn new(samples: usize, seed: u64) -> Self {
        Self {
            samples,
            seed,
            low: 1e-3,
            high: 1e3,
            tol: 1e-9,
        }
    }

    pub fn with_range(mut self, low: f64, high: f64) -> Self {
        self.low = low;
        self.high = high;
        self
    }
}

/// Samples the SI axioms of `map` on random points of `[1e-3, 1e3]^K`.
pub fn check_si_axioms(
    map: &dyn InterferenceMapping,
    samples: usize,
    seed: u64,
) -> Result<SiReport> {
    check_si_axioms_with(map, &SiCheck::new(samples, seed))
}

/// Samples the SI axioms of `map`.
///
/// Each sample draws `y >= x` (some coordinates left equal) and `a > 1`, and
/// checks `T(y) >= T(x)` and `T(y) < a T(y / a)` componentwise; a violation is
/// reported only when it exceeds the relative tolerance. Consecutive samples
/// are chained (`x_{i+1} = y_i / a_i`) so each sample costs two mapping
/// evaluations, with a fresh base point every eight samples.
pub fn check_si_axioms_with(map: &dyn InterferenceMapping, cfg: &SiCheck) -> Result<SiReport> {
    if cfg.samples == 0 {
        return Err(Error::invalid("at least one sample is required"));
    }
    if !(cfg.low > 0.0 && cfg.high >= cfg.low) {
        return Err(Error::invalid("sampling range must satisfy 0 < low <= high"));
    }
    let dim = map.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut report = SiReport {
        samples: cfg.samples,
        ..Default::default()
    };
    let (log_lo, log_hi) = (cfg.low.ln(), cfg.high.ln());
    let mut base: Option<(PowerVector, Vec<f64>)> = None;

    for sample in 0..cfg.samples {
        let (x, tx) = match base.take() {
            Some(b) if sample % 8 != 0 => b,
            _ => {
                let x = PowerVector::new(
                    (0..dim)
                        .map(|_| rng.random_range(log_lo..=log_hi).exp())
                        .collect(),
                )?;
                let tx = eval_checked(map, &x)?;
                report.evaluations += 1;
                (x, tx)
            }
        };

        let y = PowerVector::new(
            x.iter()
                .map(|&v| {
                    if rng.random_bool(0.3) {
                        v
                    } else {
                        v * (1.0 + rng.random_range(0.0..1.0))
                    }
                })
                .collect(),
        )?;
        let ty = eval_checked(map, &y)?;
        report.evaluations += 1;
        for k in 0..dim {
            if ty[k] < tx[k] - cfg.tol * tx[k].abs() {
                report.record(AxiomViolation {
                    sample,
                    kind: AxiomKind::Monotonicity,
                    user: k,
                    lhs: tx[k],
                    rhs: ty[k],
                });
            }
        }

        let alpha = rng.random_range(1.01..2.5);
        let z = y.scaled(1.0 / alpha)?;
        let tz = eval_checked(map, &z)?;
        report.evaluations += 1;
        for k in 0..dim {
            // T(a z) = T(y) must stay below a T(z).
            let scaled = alpha * tz[k];
            if ty[k] > scaled + cfg.tol * scaled.abs() {
                report.record(AxiomViolation {
                    sample,
                    kind: AxiomKind::Scalability,
                    user: k,
                    lhs: ty[k],
                    rhs: scaled,
                });
            }
        }
        base = Some((z, tz));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn affine_pair() -> FnMapping<impl Fn(&[f64]) -> Vec<f64>> {
        FnMapping::new(2, |p: &[f64]| vec![0.5 * p[1] + 1.0, 0.5 * p[0] + 1.0])
    }

    #[test]
    fn power_vector_rejects_nonpositive() {
        assert!(PowerVector::new(vec![1.0, 0.0]).is_err());
        assert!(PowerVector::new(vec![1.0, f64::NAN]).is_err());
        assert!(PowerVector::new(vec![]).is_err());
        assert!(PowerVector::new(vec![1e-300]).is_ok());
    }

    #[test]
    fn affine_map_converges_to_two() {
        let p0 = PowerVector::uniform(2, 1.0).unwrap();
        let trace = iterate_fixed_point(&affine_pair(), &p0, &FixedPointOptions::default()).unwrap();
        assert_eq!(trace.status, Status::Converged);
        assert_relative_eq!(trace.point[0], 2.0, max_relative = 1e-7);
        assert_relative_eq!(trace.point[1], 2.0, max_relative = 1e-7);
        assert_eq!(trace.residuals.len(), trace.iterates.len() - 1);
    }

    #[test]
    fn converged_point_is_certified() {
        let map = affine_pair();
        let p0 = PowerVector::new(vec![30.0, 0.01]).unwrap();
        let opts = FixedPointOptions::default();
        let trace = iterate_fixed_point(&map, &p0, &opts).unwrap();
        assert!(trace.converged());
        let t = map.eval(&trace.point).unwrap();
        let diff: Vec<f64> = t.iter().zip(trace.point.iter()).map(|(a, b)| a - b).collect();
        assert!(norm2(&diff) <= opts.tol * trace.point.norm2());
        assert!(*trace.relative_steps.last().unwrap() <= opts.tol);
    }

    #[test]
    fn doubling_map_diverges() {
        let map = FnMapping::new(1, |p: &[f64]| vec![2.0 * p[0] + 1.0]);
        let p0 = PowerVector::uniform(1, 1.0).unwrap();
        let trace = iterate_fixed_point(&map, &p0, &FixedPointOptions::default()).unwrap();
        assert_eq!(trace.status, Status::Diverged);
        // 2^30 > 1e9: the cap trips long before max_iter.
        assert!(trace.iterations() < 40);
    }

    #[test]
    fn slow_growth_is_caught_by_stall_window() {
        // Fixed-point free map whose iterates grow linearly: residual constant.
        let map = FnMapping::new(1, |p: &[f64]| vec![p[0] + 1.0]);
        let p0 = PowerVector::uniform(1, 1.0).unwrap();
        let opts = FixedPointOptions::default().with_max_iter(10_000);
        let trace = iterate_fixed_point(&map, &p0, &opts).unwrap();
        assert_eq!(trace.status, Status::Diverged);
        assert!(trace.iterations() < 100);
    }

    #[test]
    fn dimension_mismatch_is_invalid_argument() {
        let p0 = PowerVector::uniform(3, 1.0).unwrap();
        let err = iterate_fixed_point(&affine_pair(), &p0, &FixedPointOptions::default()).unwrap_err();
        assert!(err.is_invalid_argument());
        let err = iterate_normalized_fixed_point(
            &affine_pair(),
            &MonotoneNorm::linf(),
            1.0,
            &p0,
            &FixedPointOptions::default(),
        )
        .unwrap_err();
        assert!(err.is_invalid_argument());
        let bad_norm = MonotoneNorm::weighted_linf(vec![1.0; 3]).unwrap();
        let p0 = PowerVector::uniform(2, 1.0).unwrap();
        assert!(iterate_normalized_fixed_point(
            &affine_pair(),
            &bad_norm,
            1.0,
            &p0,
            &FixedPointOptions::default()
        )
        .is_err());
    }

    #[test]
    fn max_iterations_status() {
        let p0 = PowerVector::uniform(2, 1.0).unwrap();
        let opts = FixedPointOptions::default().with_max_iter(3);
        let trace = iterate_fixed_point(&affine_pair(), &p0, &opts).unwrap();
        assert_eq!(trace.status, Status::MaxIterations);
        assert_eq!(trace.iterates.len(), 4);
        assert_eq!(trace.point, trace.iterates[3]);
    }

    #[test]
    fn normalized_symmetric_map_stays_at_one() {
        let p0 = PowerVector::uniform(2, 1.0).unwrap();
        let trace = iterate_normalized_fixed_point(
            &affine_pair(),
            &MonotoneNorm::linf(),
            1.0,
            &p0,
            &FixedPointOptions::default(),
        )
        .unwrap();
        assert!(trace.converged());
        assert_relative_eq!(trace.point[0], 1.0, max_relative = 1e-12);
        assert_relative_eq!(trace.point[1], 1.0, max_relative = 1e-12);
    }

    #[test]
    fn normalized_single_user_hits_budget() {
        let map = FnMapping::new(1, |p: &[f64]| vec![3.0 * p[0].sqrt() + 0.2]);
        let p0 = PowerVector::uniform(1, 0.01).unwrap();
        let trace =
            iterate_normalized_fixed_point(&map, &MonotoneNorm::linf(), 5.0, &p0, &FixedPointOptions::default())
                .unwrap();
        assert!(trace.converged());
        assert_eq!(trace.point[0], 5.0);
    }

    #[test]
    fn weighted_linf_uses_per_user_budgets() {
        let norm = MonotoneNorm::weighted_linf(vec![1.0, 4.0]).unwrap();
        assert_eq!(norm.eval(&[2.0, 4.0]), 2.0);
        assert_eq!(norm.eval(&[0.5, 4.0]), 1.0);
        assert_eq!(MonotoneNorm::L1.eval(&[0.5, 4.0]), 4.5);
        assert!(MonotoneNorm::weighted_linf(vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn concave_map_passes_si_check() {
        let map = FnMapping::new(2, |p: &[f64]| {
            let m = p[0].min(p[1]) + 1.0;
            vec![m, m]
        });
        let report = check_si_axioms(&map, 2000, 7).unwrap();
        assert!(report.is_clean(), "{:?}", report.violations);
        assert!(report.evaluations >= 2 * report.samples);
    }

    #[test]
    fn quadratic_map_fails_scalability() {
        let map = FnMapping::new(1, |p: &[f64]| vec![p[0] * p[0] + 1.0]);
        // Hand check at p=10, a=2: 2 * 101 = 202 < (20)^2 + 1 = 401.
        let t_p = map.eval(&PowerVector::uniform(1, 10.0).unwrap()).unwrap()[0];
        let t_ap = map.eval(&PowerVector::uniform(1, 20.0).unwrap()).unwrap()[0];
        assert!(2.0 * t_p < t_ap);

        let report = check_si_axioms(&map, 200, 1).unwrap();
        assert!(report
            .violations
            .iter()
            .any(|v| v.kind == AxiomKind::Scalability));
        assert!(report
            .violations
            .iter()
            .all(|v| v.kind != AxiomKind::Monotonicity));
    }

    #[test]
    fn decreasing_map_fails_monotonicity() {
        let map = FnMapping::new(1, |p: &[f64]| vec![1.0 / p[0] + 1.0]);
        let report = check_si_axioms(&map, 100, 3).unwrap();
        assert!(report
            .violations
            .iter()
            .any(|v| v.kind == AxiomKind::Monotonicity));
    }

    #[test]
    fn si_check_rejects_zero_samples() {
        assert!(check_si_axioms(&affine_pair(), 0, 0).is_err());
    }

    #[test]
    fn tail_ratio_of_geometric_series() {
        let series: Vec<f64> = (0..30).map(|i| 0.5f64.powi(i)).collect();
        assert_relative_eq!(tail_ratio(&series, 10).unwrap(), 0.5, max_relative = 1e-12);
        assert!(tail_ratio(&series[..5], 10).is_none());
    }
}
