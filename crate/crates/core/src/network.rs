//! Network geometry, large-scale fading, channel batches and CSI views.
//!
//! All gains are noise-normalized: `beta` already includes `-sigma^2`, so the
//! receiver noise has unit power downstream and powers are expressed in mW.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// System parameters of a simulated deployment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub users: usize,
    /// Number of APs; must be a perfect square (grid deployment).
    pub aps: usize,
    pub antennas: usize,
    /// Side of the square service area (m).
    pub area_side: f64,
    /// Serving cluster size of the cell-free scenarios.
    pub cluster_size: usize,
    /// Pathloss slope (dB per decade of distance).
    pub pathloss_a: f64,
    /// Pathloss offset (dB).
    pub pathloss_b: f64,
    /// Shadow fading standard deviation (dB).
    pub shadow_std: f64,
    /// Shadowing decorrelation distance (m).
    pub shadow_corr_dist: f64,
    pub bandwidth_hz: f64,
    pub noise_figure_db: f64,
    /// AP/user height difference (m).
    pub height_diff: f64,
    /// Per-user power budget (dBm).
    pub power_dbm: f64,
    /// Size of the training batch of channel realizations.
    pub n_sim: usize,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self::paper()
    }
}

impl NetworkConfig {
    /// 64 users, 16 APs with 8 antennas on 500 x 500 m^2, Q = 4.
    pub fn paper() -> Self {
        Self {
            users: 64,
            aps: 16,
            antennas: 8,
            area_side: 500.0,
            cluster_size: 4,
            pathloss_a: 36.7,
            pathloss_b: 30.5,
            shadow_std: 4.0,
            shadow_corr_dist: 9.0,
            bandwidth_hz: 20e6,
            noise_figure_db: 7.0,
            height_diff: 10.0,
            power_dbm: 20.0,
            n_sim: 100,
        }
    }

    /// Reduced deployment used by the test suites.
    pub fn desk() -> Self {
        Self {
            users: 16,
            aps: 9,
            antennas: 4,
            cluster_size: 3,
            n_sim: 50,
            ..Self::paper()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.users == 0 || self.aps == 0 || self.antennas == 0 || self.n_sim == 0 {
            return Err(Error::invalid(
                "users, aps, antennas and n_sim must all be at least 1",
            ));
        }
        if self.cluster_size == 0 || self.cluster_size > self.aps {
            return Err(Error::invalid(format!(
                "cluster size must be in 1..={}, got {}",
                self.aps, self.cluster_size
            )));
        }
        if grid_side(self.aps).is_none() {
            return Err(Error::invalid(format!(
                "number of APs must be a perfect square, got {}",
                self.aps
            )));
        }
        if !(self.area_side > 0.0) {
            return Err(Error::invalid("area side must be positive"));
        }
        if !(self.shadow_std >= 0.0) || !(self.shadow_corr_dist > 0.0) {
            return Err(Error::invalid(
                "shadowing needs std >= 0 and a positive decorrelation distance",
            ));
        }
        if !(self.bandwidth_hz > 0.0) {
            return Err(Error::invalid("bandwidth must be positive"));
        }
        Ok(())
    }

    /// Receiver noise power (dBm): `-174 + 10 log10(B) + F`.
    pub fn noise_power_dbm(&self) -> f64 {
        -174.0 + 10.0 * self.bandwidth_hz.log10() + self.noise_figure_db
    }

    /// Power budget in linear units (mW).
    pub fn power_budget(&self) -> f64 {
        db_to_linear(self.power_dbm)
    }

    /// Noise-normalized gain (dB) at 3D distance `distance` with shadowing `shadow_db`.
    pub fn gain_db(&self, distance: f64, shadow_db: f64) -> f64 {
        -self.pathloss_a * distance.log10() - self.pathloss_b + shadow_db - self.noise_power_dbm()
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn grid_side(aps: usize) -> Option<usize> {
    let side = (aps as f64).sqrt().round() as usize;
    (side * side == aps).then_some(side)
}

/// Information structure of the serving infrastructure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scenario {
    /// One serving AP per user, local CSI only.
    SmallCells,
    /// `Q` serving APs per user, local CSI only.
    DistributedCellFree,
    /// `Q` serving APs per user, CSI shared with a central unit.
    CentralizedCellFree,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [
        Scenario::SmallCells,
        Scenario::DistributedCellFree,
        Scenario::CentralizedCellFree,
    ];

    pub fn cluster_size(self, cfg: &NetworkConfig) -> usize {
        match self {
            Scenario::SmallCells => 1,
            _ => cfg.cluster_size,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Scenario::SmallCells => "small-cells",
            Scenario::DistributedCellFree => "distributed",
            Scenario::CentralizedCellFree => "centralized",
        }
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "small-cells" => Ok(Scenario::SmallCells),
            "distributed" => Ok(Scenario::DistributedCellFree),
            "centralized" => Ok(Scenario::CentralizedCellFree),
            other => Err(Error::invalid(format!("unknown scenario '{other}'"))),
        }
    }
}

/// A user drop: geometry, large-scale gains and serving clusters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkInstance {
    pub antennas: usize,
    pub ap_positions: Vec<[f64; 2]>,
    pub user_positions: Vec<[f64; 2]>,
    /// Noise-normalized linear gains, row-major `L x K`.
    pub beta: Vec<f64>,
    /// Serving APs of each user, sorted by AP index.
    pub clusters: Vec<Vec<usize>>,
    pub scenario: Scenario,
}

impl NetworkInstance {
    /// Builds an instance from explicit gains; positions are left empty.
    pub fn from_gains(
        antennas: usize,
        aps: usize,
        users: usize,
        beta: Vec<f64>,
        cluster_size: usize,
        scenario: Scenario,
    ) -> Result<Self> {
        if antennas == 0 || aps == 0 || users == 0 {
            return Err(Error::invalid("instance dimensions must be positive"));
        }
        if beta.len() != aps * users {
            return Err(Error::DimensionMismatch {
                expected: aps * users,
                got: beta.len(),
            });
        }
        if beta.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
            return Err(Error::invalid("large-scale gains must be strictly positive"));
        }
        if cluster_size == 0 || cluster_size > aps {
            return Err(Error::invalid(format!(
                "cluster size must be in 1..={aps}, got {cluster_size}"
            )));
        }
        if scenario == Scenario::SmallCells && cluster_size != 1 {
            return Err(Error::invalid("small cells require a cluster size of one"));
        }
        let clusters = assign_clusters(&beta, aps, users, cluster_size);
        Ok(Self {
            antennas,
            ap_positions: Vec::new(),
            user_positions: Vec::new(),
            beta,
            clusters,
            scenario,
        })
    }

    pub fn n_users(&self) -> usize {
        self.clusters.len()
    }

    pub fn n_aps(&self) -> usize {
        self.beta.len() / self.n_users()
    }

    pub fn n_total_antennas(&self) -> usize {
        self.n_aps() * self.antennas
    }

    pub fn beta(&self, l: usize, k: usize) -> f64 {
        self.beta[l * self.n_users() + k]
    }

    pub fn cluster_size(&self) -> usize {
        self.clusters.first().map_or(0, Vec::len)
    }

    pub fn serves(&self, l: usize, k: usize) -> bool {
        self.clusters[k].binary_search(&l).is_ok()
    }

    /// Same drop re-clustered for another scenario.
    pub fn with_scenario(&self, scenario: Scenario, cluster_size: usize) -> Result<Self> {
        let q = if scenario == Scenario::SmallCells { 1 } else { cluster_size };
        if q == 0 || q > self.n_aps() {
            return Err(Error::invalid(format!(
                "cluster size must be in 1..={}, got {q}",
                self.n_aps()
            )));
        }
        Ok(Self {
            clusters: assign_clusters(&self.beta, self.n_aps(), self.n_users(), q),
            scenario,
            ..self.clone()
        })
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Numerical(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::invalid(format!("bad instance JSON: {e}")))
    }
}

/// The `q` APs with the largest gain per user (ties: lowest index), sorted by index.
pub fn assign_clusters(beta: &[f64], aps: usize, users: usize, q: usize) -> Vec<Vec<usize>> {
    (0..users)
        .map(|k| {
            let mut order: Vec<usize> = (0..aps).collect();
            order.sort_by(|&a, &b| {
                beta[b * users + k]
                    .total_cmp(&beta[a * users + k])
                    .then(a.cmp(&b))
            });
            let mut cluster = order[..q].to_vec();
            cluster.sort_unstable();
            cluster
        })
        .collect()
}

/// APs on a centered `sqrt(L) x sqrt(L)` grid with pitch `side / sqrt(L)`.
pub fn ap_grid(aps: usize, side: f64) -> Result<Vec<[f64; 2]>> {
    let n = grid_side(aps)
        .ok_or_else(|| Error::invalid(format!("number of APs must be a perfect square, got {aps}")))?;
    let pitch = side / n as f64;
    Ok((0..aps)
        .map(|l| {
            let (row, col) = (l / n, l % n);
            [pitch * (col as f64 + 0.5), pitch * (row as f64 + 0.5)]
        })
        .collect())
}

/// Draws a user drop and its large-scale gains.
pub fn generate_instance(cfg: &NetworkConfig, scenario: Scenario, seed: u64) -> Result<NetworkInstance> {
    cfg.validate()?;
    let (aps, users) = (cfg.aps, cfg.users);
    let ap_positions = ap_grid(aps, cfg.area_side)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let user_positions: Vec<[f64; 2]> = (0..users)
        .map(|_| {
            [
                rng.random_range(0.0..cfg.area_side),
                rng.random_range(0.0..cfg.area_side),
            ]
        })
        .collect();

    let shadow = correlated_shadowing(cfg, &user_positions, aps, &mut rng)?;
    let mut beta = vec![0.0; aps * users];
    for (l, ap) in ap_positions.iter().enumerate() {
        for (k, ue) in user_positions.iter().enumerate() {
            let (dx, dy) = (ap[0] - ue[0], ap[1] - ue[1]);
            let distance = (dx * dx + dy * dy + cfg.height_diff * cfg.height_diff).sqrt();
            beta[l * users + k] = db_to_linear(cfg.gain_db(distance, shadow[l * users + k]));
        }
    }
    let clusters = assign_clusters(&beta, aps, users, scenario.cluster_size(cfg));
    Ok(NetworkInstance {
        antennas: cfg.antennas,
        ap_positions,
        user_positions,
        beta,
        clusters,
        scenario,
    })
}

/// Shadowing in dB, row-major `L x K`: independent across APs, correlated
/// across users as `rho^2 2^(-dist / d0)`.
fn correlated_shadowing(
    cfg: &NetworkConfig,
    users: &[[f64; 2]],
    aps: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    let k = users.len();
    if cfg.shadow_std == 0.0 {
        return Ok(vec![0.0; aps * k]);
    }
    let var = cfg.shadow_std * cfg.shadow_std;
    let cov = DMatrix::from_fn(k, k, |i, j| {
        let (dx, dy) = (users[i][0] - users[j][0], users[i][1] - users[j][1]);
        var * 2f64.powf(-(dx * dx + dy * dy).sqrt() / cfg.shadow_corr_dist)
    });
    let factor = cholesky_with_jitter(cov, var)?;
    let mut out = vec![0.0; aps * k];
    for l in 0..aps {
        let white = nalgebra::DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
        let z = &factor * white;
        out[l * k..(l + 1) * k].copy_from_slice(z.as_slice());
    }
    Ok(out)
}

fn cholesky_with_jitter(cov: DMatrix<f64>, scale: f64) -> Result<DMatrix<f64>> {
    if let Some(c) = cov.clone().cholesky() {
        return Ok(c.l());
    }
    let n = cov.nrows();
    let mut jitter = 1e-10 * scale;
    while jitter <= 1e-4 * scale {
        let shifted = &cov + DMatrix::identity(n, n) * jitter;
        if let Some(c) = shifted.cholesky() {
            return Ok(c.l());
        }
        jitter *= 10.0;
    }
    Err(Error::Numerical(
        "shadowing covariance is not positive semidefinite".into(),
    ))
}

/// Training set of `n_sim` global channel matrices `H` (`M x K`, `M = N L`).
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelBatch {
    pub n_sim: usize,
    pub aps: usize,
    pub antennas: usize,
    pub users: usize,
    pub seed: u64,
    /// Layout `[n][k][m]`: the column `h_k` of realization `n` is contiguous.
    data: Vec<Complex64>,
}

impl ChannelBatch {
    /// Wraps column-major per-realization matrices (`M x K` each).
    pub fn from_matrices(aps: usize, antennas: usize, mats: &[DMatrix<Complex64>]) -> Result<Self> {
        let m = aps * antennas;
        let users = mats.first().map_or(0, |h| h.ncols());
        if mats.is_empty() || users == 0 {
            return Err(Error::invalid("channel batch needs at least one realization and user"));
        }
        let mut data = Vec::with_capacity(mats.len() * m * users);
        for h in mats {
            if h.nrows() != m || h.ncols() != users {
                return Err(Error::invalid(format!(
                    "realization has shape {}x{}, expected {m}x{users}",
                    h.nrows(),
                    h.ncols()
                )));
            }
            // nalgebra storage is column-major, i.e. already [k][m].
            data.extend_from_slice(h.as_slice());
        }
        Ok(Self {
            n_sim: mats.len(),
            aps,
            antennas,
            users,
            seed: 0,
            data,
        })
    }

    pub fn total_antennas(&self) -> usize {
        self.aps * self.antennas
    }

    /// `h_k` of realization `n`.
    pub fn column(&self, n: usize, k: usize) -> &[Complex64] {
        let m = self.total_antennas();
        let start = (n * self.users + k) * m;
        &self.data[start..start + m]
    }

    /// `h_{l,k}` of realization `n`.
    pub fn block(&self, n: usize, l: usize, k: usize) -> &[Complex64] {
        let col = self.column(n, k);
        &col[l * self.antennas..(l + 1) * self.antennas]
    }

    pub fn matrix(&self, n: usize) -> DMatrix<Complex64> {
        let m = self.total_antennas();
        let start = n * self.users * m;
        DMatrix::from_column_slice(m, self.users, &self.data[start..start + m * self.users])
    }

    /// Binary container: magic `FPMB`, `u32` version, `u64` dims
    /// `(n_sim, aps, antennas, users)`, `u64` seed, then each realization's
    /// `M x K` matrix in row-major order with interleaved little-endian `f64`
    /// real/imaginary parts.
    pub fn write_to(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut put = |bytes: &[u8]| w.write_all(bytes).map_err(|e| Error::io(path, e));
        put(CONTAINER_MAGIC)?;
        put(&CONTAINER_VERSION.to_le_bytes())?;
        for d in [self.n_sim, self.aps, self.antennas, self.users] {
            put(&(d as u64).to_le_bytes())?;
        }
        put(&self.seed.to_le_bytes())?;
        for n in 0..self.n_sim {
            for row in 0..self.total_antennas() {
                for k in 0..self.users {
                    let z = self.column(n, k)[row];
                    put(&z.re.to_le_bytes())?;
                    put(&z.im.to_le_bytes())?;
                }
            }
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_from(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = BufReader::new(file);
        let bad = |reason: &str| Error::Format {
            path: path.to_path_buf(),
            reason: reason.to_string(),
        };
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(|e| Error::io(path, e))?;
        if &magic != CONTAINER_MAGIC {
            return Err(bad("bad magic"));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4).map_err(|e| Error::io(path, e))?;
        if u32::from_le_bytes(b4) != CONTAINER_VERSION {
            return Err(bad("unsupported version"));
        }
        let mut next_u64 = || -> Result<u64> {
            let mut b8 = [0u8; 8];
            r.read_exact(&mut b8).map_err(|e| Error::io(path, e))?;
            Ok(u64::from_le_bytes(b8))
        };
        let n_sim = next_u64()? as usize;
        let aps = next_u64()? as usize;
        let antennas = next_u64()? as usize;
        let users = next_u64()? as usize;
        let seed = next_u64()?;
        let m = aps * antennas;
        let total = n_sim
            .checked_mul(m)
            .and_then(|v| v.checked_mul(users))
            .ok_or_else(|| bad("dimensions overflow"))?;
        let mut raw = Vec::new();
        r.read_to_end(&mut raw).map_err(|e| Error::io(path, e))?;
        if raw.len() != total * 16 {
            return Err(bad("payload length does not match header"));
        }
        let mut data = vec![Complex64::new(0.0, 0.0); total];
        let f = |i: usize| f64::from_le_bytes(raw[i * 8..i * 8 + 8].try_into().expect("8 bytes"));
        for n in 0..n_sim {
            for row in 0..m {
                for k in 0..users {
                    let src = ((n * m + row) * users + k) * 2;
                    data[(n * users + k) * m + row] = Complex64::new(f(src), f(src + 1));
                }
            }
        }
        Ok(Self {
            n_sim,
            aps,
            antennas,
            users,
            seed,
            data,
        })
    }
}

const CONTAINER_MAGIC: &[u8; 4] = b"FPMB";
const CONTAINER_VERSION: u32 = 1;

/// Draws `n_sim` i.i.d. Rayleigh realizations with `h_{l,k} ~ CN(0, beta_{l,k} I_N)`.
pub fn sample_channels(inst: &NetworkInstance, n_sim: usize, seed: u64) -> Result<ChannelBatch> {
    if n_sim == 0 {
        return Err(Error::invalid("n_sim must be at least 1"));
    }
    let (aps, users, antennas) = (inst.n_aps(), inst.n_users(), inst.antennas);
    let m = aps * antennas;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(n_sim * users * m);
    for _ in 0..n_sim {
        for k in 0..users {
            for l in 0..aps {
                let std = (inst.beta(l, k) / 2.0).sqrt();
                for _ in 0..antennas {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    data.push(Complex64::new(re * std, im * std));
                }
            }
        }
    }
    Ok(ChannelBatch {
        n_sim,
        aps,
        antennas,
        users,
        seed,
        data,
    })
}

/// Channel realizations as seen through the CSI of the serving clusters.
///
/// `h_{l,k}` is kept when AP `l` serves user `k` and replaced by its (zero)
/// mean otherwise. The unknown blocks enter the statistics only through
/// their second moments `beta_{l,k} I_N`.
#[derive(Clone, Debug)]
pub struct CsiView {
    pub n_sim: usize,
    pub aps: usize,
    pub antennas: usize,
    pub users: usize,
    /// Row-major `L x K`.
    beta: Vec<f64>,
    /// Row-major `L x K`: whether `h_{l,k}` is known.
    known: Vec<bool>,
    clusters: Vec<Vec<usize>>,
    served: Vec<Vec<usize>>,
    unknown: Vec<Vec<usize>>,
    data: Vec<Complex64>,
}

impl CsiView {
    /// View with every block known and every AP serving every user.
    pub fn full(batch: &ChannelBatch) -> Self {
        let (aps, users) = (batch.aps, batch.users);
        Self::assemble(
            batch,
            vec![0.0; aps * users],
            vec![(0..aps).collect(); users],
        )
    }

    fn assemble(batch: &ChannelBatch, beta: Vec<f64>, clusters: Vec<Vec<usize>>) -> Self {
        let (aps, users, antennas) = (batch.aps, batch.users, batch.antennas);
        let mut known = vec![false; aps * users];
        for (k, cluster) in clusters.iter().enumerate() {
            for &l in cluster {
                known[l * users + k] = true;
            }
        }
        let served = (0..aps)
            .map(|l| (0..users).filter(|&k| known[l * users + k]).collect())
            .collect();
        let unknown = (0..aps)
            .map(|l| (0..users).filter(|&k| !known[l * users + k]).collect())
            .collect();
        let m = aps * antennas;
        let mut data = batch.data.clone();
        for n in 0..batch.n_sim {
            for k in 0..users {
                for l in 0..aps {
                    if !known[l * users + k] {
                        let start = (n * users + k) * m + l * antennas;
                        data[start..start + antennas].fill(Complex64::new(0.0, 0.0));
                    }
                }
            }
        }
        Self {
            n_sim: batch.n_sim,
            aps,
            antennas,
            users,
            beta,
            known,
            clusters,
            served,
            unknown,
            data,
        }
    }

    pub fn total_antennas(&self) -> usize {
        self.aps * self.antennas
    }

    pub fn beta(&self, l: usize, k: usize) -> f64 {
        self.beta[l * self.users + k]
    }

    pub fn is_known(&self, l: usize, k: usize) -> bool {
        self.known[l * self.users + k]
    }

    /// Serving APs of user `k`, sorted.
    pub fn cluster(&self, k: usize) -> &[usize] {
        &self.clusters[k]
    }

    /// Users whose channel is known at AP `l`, sorted.
    pub fn served_by(&self, l: usize) -> &[usize] {
        &self.served[l]
    }

    /// Users whose channel is unknown at AP `l`, sorted.
    pub fn unknown_at(&self, l: usize) -> &[usize] {
        &self.unknown[l]
    }

    /// `hat h_k` of realization `n`.
    pub fn column(&self, n: usize, k: usize) -> &[Complex64] {
        let m = self.total_antennas();
        let start = (n * self.users + k) * m;
        &self.data[start..start + m]
    }

    /// `hat h_{l,k}` of realization `n`.
    pub fn block(&self, n: usize, l: usize, k: usize) -> &[Complex64] {
        let start = ((n * self.users + k) * self.aps + l) * self.antennas;
        &self.data[start..start + self.antennas]
    }

    /// Error-plus-noise level `1 + sum_{i unknown at l} beta_{l,i} p_i` of AP `l`.
    pub fn error_scale(&self, l: usize, p: &[f64]) -> f64 {
        1.0 + self.unknown[l]
            .iter()
            .map(|&i| self.beta[l * self.users + i] * p[i])
            .sum::<f64>()
    }

    /// View restricted to a subset of the realizations.
    pub fn select(&self, realizations: &[usize]) -> Self {
        let stride = self.users * self.total_antennas();
        let mut data = Vec::with_capacity(realizations.len() * stride);
        for &n in realizations {
            data.extend_from_slice(&self.data[n * stride..(n + 1) * stride]);
        }
        Self {
            n_sim: realizations.len(),
            data,
            ..self.clone_meta()
        }
    }

    fn clone_meta(&self) -> Self {
        Self {
            n_sim: 0,
            aps: self.aps,
            antennas: self.antennas,
            users: self.users,
            beta: self.beta.clone(),
            known: self.known.clone(),
            clusters: self.clusters.clone(),
            served: self.served.clone(),
            unknown: self.unknown.clone(),
            data: Vec::new(),
        }
    }
}

/// Masks the non-serving blocks of `batch` according to `inst`'s clusters.
pub fn build_csi(batch: &ChannelBatch, inst: &NetworkInstance) -> Result<CsiView> {
    if batch.aps != inst.n_aps() || batch.users != inst.n_users() || batch.antennas != inst.antennas {
        return Err(Error::invalid(format!(
            "batch dims (L={}, N={}, K={}) do not match instance (L={}, N={}, K={})",
            batch.aps,
            batch.antennas,
            batch.users,
            inst.n_aps(),
            inst.antennas,
            inst.n_users()
        )));
    }
    Ok(CsiView::assemble(batch, inst.beta.clone(), inst.clusters.clone()))
}
