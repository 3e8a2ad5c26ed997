//! Empirical UatF statistics, SINR, MSE and rates.
//!
//! Expectations are sample means over the CSI realizations. Channel blocks a
//! serving cluster does not know enter only through their second moment
//! `beta_{l,j} I_N`, i.e. `E|h_{l,j}^H v_{l,k}|^2 = beta_{l,j} E||v_{l,k}||^2`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::beamforming::{CMatrix, CVector, LsfdMoments, RealizedBeamformers};
use crate::error::{Error, Result};
use crate::fixed_point::PowerVector;
use crate::network::{ChannelBatch, CsiView, Scenario};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// How realizations at different APs are paired when averaging.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Measure {
    /// Realization `n` at every AP together (the sample mean over `n`).
    Joint,
    /// Independent realization indices per AP. Matches the independence of
    /// the per-AP channels and is the measure under which locally designed
    /// beamformers are compared.
    ApProduct,
}

impl Measure {
    pub fn for_scenario(scenario: Scenario) -> Self {
        match scenario {
            Scenario::CentralizedCellFree => Measure::Joint,
            _ => Measure::ApProduct,
        }
    }
}

/// Per-user moments `g_k = E[h_k^H v_k]`, `cross_{j,k} = E|h_j^H v_k|^2`,
/// `norm_k = E||v_k||^2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UatfStats {
    pub users: usize,
    pub gain: Vec<Complex64>,
    /// Row-major `K x K`, entry `(j, k)`.
    pub cross: Vec<f64>,
    pub norm: Vec<f64>,
}

impl UatfStats {
    pub fn new(gain: Vec<Complex64>, cross: Vec<f64>, norm: Vec<f64>) -> Result<Self> {
        let users = gain.len();
        if norm.len() != users {
            return Err(Error::DimensionMismatch {
                expected: users,
                got: norm.len(),
            });
        }
        if cross.len() != users * users {
            return Err(Error::DimensionMismatch {
                expected: users * users,
                got: cross.len(),
            });
        }
        let finite = gain.iter().all(|g| g.re.is_finite() && g.im.is_finite())
            && cross.iter().chain(&norm).all(|v| v.is_finite() && *v >= 0.0);
        if !finite {
            return Err(Error::Numerical("moments must be finite and nonnegative".into()));
        }
        Ok(Self {
            users,
            gain,
            cross,
            norm,
        })
    }

    pub fn cross(&self, j: usize, k: usize) -> f64 {
        self.cross[j * self.users + k]
    }

    /// `sum_j p_j cross_{j,k} + norm_k`.
    fn total_power(&self, p: &[f64], k: usize) -> f64 {
        (0..self.users).map(|j| p[j] * self.cross(j, k)).sum::<f64>() + self.norm[k]
    }

    fn check(&self, p: &PowerVector, k: usize) -> Result<()> {
        if p.len() != self.users {
            return Err(Error::DimensionMismatch {
                expected: self.users,
                got: p.len(),
            });
        }
        if k >= self.users {
            return Err(Error::invalid(format!("user index {k} out of range")));
        }
        Ok(())
    }
}

/// Sample moments with the true channels of `batch`.
pub fn estimate_uatf_stats(batch: &ChannelBatch, beams: &RealizedBeamformers) -> Result<UatfStats> {
    estimate_stats(&CsiView::full(batch), beams, Measure::Joint)
}

/// Moments of `beams` as seen through `csi` under `measure`.
pub fn estimate_stats(csi: &CsiView, beams: &RealizedBeamformers, measure: Measure) -> Result<UatfStats> {
    ApMoments::estimate(csi, beams, measure == Measure::Joint)?.stats(measure)
}

/// Per-AP moments of `x_{l,j,k} = hat h_{l,j}^H v_{l,k}` on the support of each `v_k`.
#[derive(Clone, Debug)]
pub struct ApMoments {
    pub users: usize,
    support: Vec<Vec<usize>>,
    /// `[k][s * K + j]`: `E x_{l_s,j,k}`.
    mean: Vec<Vec<Complex64>>,
    /// `[k][s * K + j]`: `E |x_{l_s,j,k}|^2`.
    second: Vec<Vec<f64>>,
    /// `[k][s * K + j]`: `beta_{l_s,j} E||v_{l_s,k}||^2` when `h_{l_s,j}` is unknown, else 0.
    analytic: Vec<Vec<f64>>,
    /// `[k][s]`: `E||v_{l_s,k}||^2`.
    norm: Vec<Vec<f64>>,
    /// Row-major `(j, k)`: `E|sum_l x_{l,j,k}|^2` over the joint measure.
    joint_second: Option<Vec<f64>>,
}

impl ApMoments {
    pub fn estimate(csi: &CsiView, beams: &RealizedBeamformers, joint: bool) -> Result<Self> {
        check_alignment(csi, beams)?;
        let users = csi.users;
        let inv_n = 1.0 / csi.n_sim as f64;
        let mut mean = Vec::with_capacity(users);
        let mut second = Vec::with_capacity(users);
        let mut analytic = Vec::with_capacity(users);
        let mut norm = Vec::with_capacity(users);
        let mut joint_second = joint.then(|| vec![0.0; users * users]);
        let mut sum_x = vec![ZERO; users];

        for k in 0..users {
            let support = beams.support(k);
            let q = support.len();
            let mut m = vec![ZERO; q * users];
            let mut s2 = vec![0.0; q * users];
            let mut nv = vec![0.0; q];
            for n in 0..csi.n_sim {
                sum_x.fill(ZERO);
                for (s, &l) in support.iter().enumerate() {
                    let v = beams.block(n, k, s);
                    nv[s] += v.iter().map(|z| z.norm_sqr()).sum::<f64>();
                    for &j in csi.served_by(l) {
                        let x: Complex64 = csi
                            .block(n, l, j)
                            .iter()
                            .zip(v)
                            .map(|(h, v)| h.conj() * v)
                            .sum();
                        m[s * users + j] += x;
                        s2[s * users + j] += x.norm_sqr();
                        sum_x[j] += x;
                    }
                }
                if let Some(js) = joint_second.as_mut() {
                    for j in 0..users {
                        js[j * users + k] += sum_x[j].norm_sqr();
                    }
                }
            }
            m.iter_mut().for_each(|z| *z *= inv_n);
            s2.iter_mut().for_each(|z| *z *= inv_n);
            nv.iter_mut().for_each(|z| *z *= inv_n);
            let mut an = vec![0.0; q * users];
            for (s, &l) in support.iter().enumerate() {
                for &j in csi.unknown_at(l) {
                    an[s * users + j] = csi.beta(l, j) * nv[s];
                }
            }
            mean.push(m);
            second.push(s2);
            analytic.push(an);
            norm.push(nv);
        }
        if let Some(js) = joint_second.as_mut() {
            js.iter_mut().for_each(|z| *z *= inv_n);
        }
        Ok(Self {
            users,
            support: (0..users).map(|k| beams.support(k).to_vec()).collect(),
            mean,
            second,
            analytic,
            norm,
            joint_second,
        })
    }

    pub fn support(&self, k: usize) -> &[usize] {
        &self.support[k]
    }

    /// Moments of the beamformers rescaled per AP, `v_{l_s,k} -> w[k][s] v_{l_s,k}`.
    /// The joint second moments are not recoverable and are dropped.
    pub fn with_weights(&self, weights: &[Vec<Complex64>]) -> Result<Self> {
        if weights.len() != self.users
            || weights.iter().zip(&self.support).any(|(w, s)| w.len() != s.len())
        {
            return Err(Error::invalid("one weight per supporting AP is required"));
        }
        let mut out = self.clone();
        out.joint_second = None;
        for (k, w) in weights.iter().enumerate() {
            for (s, a) in w.iter().enumerate() {
                let a2 = a.norm_sqr();
                out.norm[k][s] *= a2;
                for j in 0..self.users {
                    let i = s * self.users + j;
                    out.mean[k][i] *= a;
                    out.second[k][i] *= a2;
                    out.analytic[k][i] *= a2;
                }
            }
        }
        Ok(out)
    }

    pub fn stats(&self, measure: Measure) -> Result<UatfStats> {
        let users = self.users;
        let mut gain = vec![ZERO; users];
        let mut cross = vec![0.0; users * users];
        let mut norm = vec![0.0; users];
        for k in 0..users {
            let q = self.support[k].len();
            norm[k] = self.norm[k].iter().sum();
            gain[k] = (0..q).map(|s| self.mean[k][s * users + k]).sum();
            for j in 0..users {
                let analytic: f64 = (0..q).map(|s| self.analytic[k][s * users + j]).sum();
                let coherent = match measure {
                    Measure::Joint => {
                        let js = self.joint_second.as_ref().ok_or_else(|| {
                            Error::invalid("joint second moments were not estimated")
                        })?;
                        js[j * users + k]
                    }
                    Measure::ApProduct => {
                        let mut var = 0.0;
                        let mut total = ZERO;
                        for s in 0..q {
                            let m = self.mean[k][s * users + j];
                            var += self.second[k][s * users + j] - m.norm_sqr();
                            total += m;
                        }
                        var + total.norm_sqr()
                    }
                };
                cross[j * users + k] = coherent + analytic;
            }
        }
        UatfStats::new(gain, cross, norm)
    }

    /// Rayleigh-quotient data of user `k` for per-AP weights under the
    /// product measure.
    pub fn lsfd_moments(&self, p: &PowerVector, k: usize) -> Result<LsfdMoments> {
        if p.len() != self.users {
            return Err(Error::DimensionMismatch {
                expected: self.users,
                got: p.len(),
            });
        }
        let users = self.users;
        let p = p.as_slice();
        let q = self.support[k].len();
        let b = CVector::from_fn(q, |s, _| self.mean[k][s * users + k].conj());
        let mut den = CMatrix::zeros(q, q);
        for j in 0..users {
            for r in 0..q {
                let mr = self.mean[k][r * users + j];
                for c in 0..q {
                    den[(r, c)] += if r == c {
                        Complex64::from(p[j] * (self.second[k][r * users + j] + self.analytic[k][r * users + j]))
                    } else {
                        mr.conj() * self.mean[k][c * users + j] * p[j]
                    };
                }
            }
        }
        for s in 0..q {
            den[(s, s)] += Complex64::from(self.norm[k][s]);
        }
        den -= &b * b.adjoint() * Complex64::from(p[k]);
        // exact Hermitian symmetry for the factorization
        let den = (&den + den.adjoint()) * Complex64::from(0.5);
        Ok(LsfdMoments {
            numerator: b,
            denominator: den,
            power: p[k],
        })
    }
}

fn check_alignment(csi: &CsiView, beams: &RealizedBeamformers) -> Result<()> {
    if csi.n_sim != beams.n_sim || csi.users != beams.users {
        return Err(Error::invalid(format!(
            "beamformers ({} realizations, {} users) do not match CSI ({} realizations, {} users)",
            beams.n_sim, beams.users, csi.n_sim, csi.users
        )));
    }
    if csi.aps != beams.aps || csi.antennas != beams.antennas {
        return Err(Error::DimensionMismatch {
            expected: csi.total_antennas(),
            got: beams.aps * beams.antennas,
        });
    }
    if csi.n_sim == 0 {
        return Err(Error::invalid("need at least one realization"));
    }
    Ok(())
}

/// `p_k |g_k|^2 / (sum_j p_j cross_{j,k} - p_k |g_k|^2 + norm_k)`.
pub fn uatf_sinr(stats: &UatfStats, p: &PowerVector, k: usize) -> Result<f64> {
    stats.check(p, k)?;
    if stats.norm[k] <= 0.0 {
        return Err(Error::UndefinedBeamformer { user: k });
    }
    let p = p.as_slice();
    let signal = p[k] * stats.gain[k].norm_sqr();
    // the variance term is nonnegative up to rounding
    let den = (stats.total_power(p, k) - signal).max(stats.norm[k]);
    Ok(signal / den)
}

pub fn uatf_sinrs(stats: &UatfStats, p: &PowerVector) -> Result<Vec<f64>> {
    (0..stats.users).map(|k| uatf_sinr(stats, p, k)).collect()
}

pub fn rate_from_sinr(sinr: f64) -> f64 {
    (1.0 + sinr).log2()
}

/// `log2(1 + SINR_k)` per user.
pub fn uatf_rates(stats: &UatfStats, p: &PowerVector) -> Result<Vec<f64>> {
    Ok(uatf_sinrs(stats, p)?.into_iter().map(rate_from_sinr).collect())
}

/// `sum_j p_j cross_{j,k} - 2 sqrt(p_k) Re g_k + 1 + norm_k`.
pub fn mse_from_stats(stats: &UatfStats, p: &PowerVector, k: usize) -> Result<f64> {
    stats.check(p, k)?;
    let p = p.as_slice();
    Ok(stats.total_power(p, k) - 2.0 * p[k].sqrt() * stats.gain[k].re + 1.0)
}

/// `min_b MSE_k(b v_k) = 1 - p_k |g_k|^2 / (sum_j p_j cross_{j,k} + norm_k)`.
pub fn min_scaled_mse(stats: &UatfStats, p: &PowerVector, k: usize) -> Result<f64> {
    stats.check(p, k)?;
    let p = p.as_slice();
    let total = stats.total_power(p, k);
    if total <= 0.0 {
        return Ok(1.0);
    }
    Ok(1.0 - p[k] * stats.gain[k].norm_sqr() / total)
}

/// `E||P^(1/2) H^H v_k - e_k||^2 + E||v_k||^2` with the true channels of `batch`.
pub fn empirical_mse(batch: &ChannelBatch, beams: &RealizedBeamformers, p: &PowerVector, k: usize) -> Result<f64> {
    empirical_mse_csi(&CsiView::full(batch), beams, p, k)
}

/// Sample MSE under the joint measure, unknown blocks through their second moments.
pub fn empirical_mse_csi(csi: &CsiView, beams: &RealizedBeamformers, p: &PowerVector, k: usize) -> Result<f64> {
    check_alignment(csi, beams)?;
    if p.len() != csi.users || k >= csi.users {
        return Err(Error::DimensionMismatch {
            expected: csi.users,
            got: p.len(),
        });
    }
    let p = p.as_slice();
    let mut total = 0.0;
    for n in 0..csi.n_sim {
        let v = beams.vector(n, k);
        let mut acc = v.norm_squared();
        for j in 0..csi.users {
            let h = csi.column(n, j);
            let x: Complex64 = h.iter().zip(v.iter()).map(|(h, v)| h.conj() * v).sum();
            let target = if j == k { 1.0 } else { 0.0 };
            acc += (x * p[j].sqrt() - target).norm_sqr();
            acc += p[j] * analytic_term(csi, beams, n, j, k);
        }
        total += acc;
    }
    Ok(total / csi.n_sim as f64)
}

/// `sum_{l in supp v_k, h_{l,j} unknown} beta_{l,j} ||v_{l,k}||^2` at realization `n`.
fn analytic_term(csi: &CsiView, beams: &RealizedBeamformers, n: usize, j: usize, k: usize) -> f64 {
    beams
        .support(k)
        .iter()
        .enumerate()
        .filter(|(_, &l)| !csi.is_known(l, j))
        .map(|(s, &l)| csi.beta(l, j) * beams.block(n, k, s).iter().map(|z| z.norm_sqr()).sum::<f64>())
        .sum()
}

/// Coherent-decoding rates `E log2(1 + p_k|h_k^H v_k|^2 / (sum_{j!=k} p_j|h_j^H v_k|^2 + ||v_k||^2))`
/// with the true channels of `batch`.
pub fn coherent_rates(batch: &ChannelBatch, beams: &RealizedBeamformers, p: &PowerVector) -> Result<Vec<f64>> {
    coherent_rates_csi(&CsiView::full(batch), beams, p)
}

/// Coherent-decoding rates given the CSI; unknown blocks add their second
/// moment to the interference-plus-noise term.
pub fn coherent_rates_csi(csi: &CsiView, beams: &RealizedBeamformers, p: &PowerVector) -> Result<Vec<f64>> {
    check_alignment(csi, beams)?;
    if p.len() != csi.users {
        return Err(Error::DimensionMismatch {
            expected: csi.users,
            got: p.len(),
        });
    }
    let p = p.as_slice();
    let users = csi.users;
    let mut rates = vec![0.0; users];
    let mut x = vec![ZERO; users];
    for k in 0..users {
        let support = beams.support(k);
        for n in 0..csi.n_sim {
            x.fill(ZERO);
            let mut norm = 0.0;
            let mut noise = 0.0;
            for (s, &l) in support.iter().enumerate() {
                let v = beams.block(n, k, s);
                let nv: f64 = v.iter().map(|z| z.norm_sqr()).sum();
                norm += nv;
                for &j in csi.served_by(l) {
                    x[j] += csi.block(n, l, j).iter().zip(v).map(|(h, v)| h.conj() * v).sum::<Complex64>();
                }
                for &j in csi.unknown_at(l) {
                    noise += p[j] * csi.beta(l, j) * nv;
                }
            }
            if norm == 0.0 {
                continue;
            }
            let interference: f64 = (0..users)
                .filter(|&j| j != k)
                .map(|j| p[j] * x[j].norm_sqr())
                .sum();
            let sinr = p[k] * x[k].norm_sqr() / (interference + noise + norm);
            rates[k] += rate_from_sinr(sinr);
        }
        rates[k] /= csi.n_sim as f64;
    }
    Ok(rates)
}
