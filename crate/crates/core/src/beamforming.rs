//! MSE-optimal receive beamforming under information constraints.
//!
//! * small cells / distributed cell-free: local MMSE stage per AP composed
//!   with the statistical team precoding stage `c_{l,k}`;
//! * centralized cell-free: MMSE restricted to the serving antennas of each user;
//! * baselines: MRC and large-scale fading decoding (LSFD) weights.

use log::warn;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixed_point::PowerVector;
use crate::linalg::{backward_in_place, cholesky_in_place, forward_in_place, lu_solve_in_place};
use crate::network::{CsiView, Scenario};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Per-realization beamformers `v_k in C^M`, stored only on their support.
#[derive(Clone, Debug, PartialEq)]
pub struct RealizedBeamformers {
    pub n_sim: usize,
    pub aps: usize,
    pub antennas: usize,
    pub users: usize,
    support: Vec<Vec<usize>>,
    offsets: Vec<usize>,
    data: Vec<Complex64>,
}

impl RealizedBeamformers {
    /// Zero beamformers supported on `support[k]` (sorted AP indices).
    pub fn zeros(n_sim: usize, aps: usize, antennas: usize, support: Vec<Vec<usize>>) -> Result<Self> {
        let mut offsets = Vec::with_capacity(support.len() + 1);
        let mut total = 0;
        for s in &support {
            if s.windows(2).any(|w| w[0] >= w[1]) || s.iter().any(|&l| l >= aps) {
                return Err(Error::invalid("beamformer support must be sorted AP indices"));
            }
            offsets.push(total);
            total += n_sim * s.len() * antennas;
        }
        offsets.push(total);
        Ok(Self {
            n_sim,
            aps,
            antennas,
            users: support.len(),
            support,
            offsets,
            data: vec![ZERO; total],
        })
    }

    /// Builds from dense vectors indexed `[n][k]`; the support of each user is
    /// the set of APs with a nonzero entry in any realization.
    pub fn from_vectors(aps: usize, antennas: usize, vectors: &[Vec<CVector>]) -> Result<Self> {
        let n_sim = vectors.len();
        let users = vectors.first().map_or(0, Vec::len);
        let m = aps * antennas;
        if n_sim == 0 || users == 0 {
            return Err(Error::invalid("need at least one realization and one user"));
        }
        if vectors.iter().any(|r| r.len() != users || r.iter().any(|v| v.len() != m)) {
            return Err(Error::invalid(format!("every beamformer must have length {m}")));
        }
        let support = (0..users)
            .map(|k| {
                (0..aps)
                    .filter(|&l| {
                        vectors.iter().any(|r| {
                            r[k].rows(l * antennas, antennas).iter().any(|z| *z != ZERO)
                        })
                    })
                    .collect()
            })
            .collect();
        let mut out = Self::zeros(n_sim, aps, antennas, support)?;
        for (n, r) in vectors.iter().enumerate() {
            for (k, v) in r.iter().enumerate() {
                for s in 0..out.support[k].len() {
                    let l = out.support[k][s];
                    out.block_mut(n, k, s)
                        .copy_from_slice(v.rows(l * antennas, antennas).as_slice());
                }
            }
        }
        out.check_finite()?;
        Ok(out)
    }

    pub fn support(&self, k: usize) -> &[usize] {
        &self.support[k]
    }

    fn block_index(&self, n: usize, k: usize, s: usize) -> usize {
        self.offsets[k] + (n * self.support[k].len() + s) * self.antennas
    }

    /// Block on the `s`-th supporting AP of user `k`.
    pub fn block(&self, n: usize, k: usize, s: usize) -> &[Complex64] {
        let i = self.block_index(n, k, s);
        &self.data[i..i + self.antennas]
    }

    pub fn block_mut(&mut self, n: usize, k: usize, s: usize) -> &mut [Complex64] {
        let i = self.block_index(n, k, s);
        &mut self.data[i..i + self.antennas]
    }

    /// Dense `v_k` of realization `n`.
    pub fn vector(&self, n: usize, k: usize) -> CVector {
        let mut v = CVector::zeros(self.aps * self.antennas);
        for (s, &l) in self.support[k].iter().enumerate() {
            v.rows_mut(l * self.antennas, self.antennas)
                .copy_from_slice(self.block(n, k, s));
        }
        v
    }

    /// Multiplies the block of user `k` on its `s`-th supporting AP by `weights[k][s]`.
    pub fn with_ap_weights(&self, weights: &[Vec<Complex64>]) -> Result<Self> {
        if weights.len() != self.users
            || weights.iter().zip(&self.support).any(|(w, s)| w.len() != s.len())
        {
            return Err(Error::invalid("one weight per supporting AP is required"));
        }
        let mut out = self.clone();
        for k in 0..self.users {
            for n in 0..self.n_sim {
                for (s, &w) in weights[k].iter().enumerate() {
                    out.block_mut(n, k, s).iter_mut().for_each(|z| *z *= w);
                }
            }
        }
        Ok(out)
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            Ok(())
        } else {
            Err(Error::Numerical("beamformer has non-finite entries".into()))
        }
    }
}

/// How the beamformers are derived from the CSI.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Combiner {
    /// `v_{l,k} = V_l c_{l,k}` with the local MMSE stage `V_l`.
    /// `coefficients[k][s]` is `c_{l,k}` (length `K`) for the `s`-th AP of `L_k`.
    LocalTeam { coefficients: Vec<Vec<Vec<Complex64>>> },
    /// MMSE on the serving antennas with globally shared CSI.
    CentralizedMmse,
    /// `v_k = hat h_k`.
    Mrc,
}

/// Long-term parameters of a beamforming design.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamformerDesign {
    pub scenario: Scenario,
    /// Powers the design was computed for.
    pub powers: PowerVector,
    /// Per-AP error-plus-noise level (the scalar multiplying `I_N` in `Sigma_l`).
    pub error_scales: Vec<f64>,
    pub combiner: Combiner,
    /// Optional LSFD weights, `lsfd[k][s]` for the `s`-th serving AP of user `k`.
    pub lsfd: Option<Vec<Vec<Complex64>>>,
    /// Largest team-system residual `||c_{l,k} + sum_j Pi_j c_{j,k} - e_k||_2`.
    pub team_residual: f64,
}

impl BeamformerDesign {
    /// Applies the design to every CSI realization of `csi`.
    pub fn realize(&self, csi: &CsiView) -> Result<RealizedBeamformers> {
        let p = self.powers.as_slice();
        let beams = match &self.combiner {
            Combiner::LocalTeam { coefficients } => {
                let stages = local_stages(csi, p)?;
                realize_team(csi, &stages, coefficients)?
            }
            Combiner::CentralizedMmse => centralized_mmse(csi, &self.powers)?,
            Combiner::Mrc => mrc(csi),
        };
        match &self.lsfd {
            Some(w) => beams.with_ap_weights(w),
            None => Ok(beams),
        }
    }
}

/// Local MMSE stage of one AP, restricted to the users it serves.
#[derive(Clone, Debug)]
pub(crate) struct LocalStage {
    /// Users served by the AP (columns of each stage matrix).
    pub users: Vec<usize>,
    /// Per realization, `N x |users|`: `(H P H^H + Sigma)^-1 H P^(1/2)` columns.
    pub stages: Vec<CMatrix>,
    /// `E[P^(1/2) H^H V]` restricted to `users x users`.
    pub pi: CMatrix,
}

fn local_stage(csi: &CsiView, p: &[f64], l: usize, keep_stages: bool) -> Result<LocalStage> {
    let users = csi.served_by(l).to_vec();
    let (s, n_ant) = (users.len(), csi.antennas);
    let sigma = csi.error_scale(l, p);
    let sqrt_p: Vec<f64> = users.iter().map(|&i| p[i].sqrt()).collect();
    let mut stages = Vec::with_capacity(if keep_stages { csi.n_sim } else { 0 });
    let mut pi = vec![ZERO; s * s];
    let mut gram = vec![ZERO; n_ant * n_ant];
    // columns of P^(1/2) H, then overwritten by L^-1 P^(1/2) H
    let mut y = vec![ZERO; n_ant * s];
    for n in 0..csi.n_sim {
        if s == 0 {
            if keep_stages {
                stages.push(CMatrix::zeros(n_ant, 0));
            }
            continue;
        }
        for (c, &i) in users.iter().enumerate() {
            let col = &mut y[c * n_ant..(c + 1) * n_ant];
            for (dst, z) in col.iter_mut().zip(csi.block(n, l, i)) {
                *dst = z * sqrt_p[c];
            }
        }
        // lower triangle of Y Y^H + sigma I
        for c in 0..n_ant {
            for r in c..n_ant {
                let mut acc = ZERO;
                for u in 0..s {
                    acc += y[r + u * n_ant] * y[c + u * n_ant].conj();
                }
                gram[r + c * n_ant] = acc;
            }
            gram[c + c * n_ant] += sigma;
        }
        if !cholesky_in_place(&mut gram, n_ant) {
            return Err(Error::Numerical(format!(
                "local MMSE system of AP {l} is not positive definite"
            )));
        }
        for c in 0..s {
            forward_in_place(&gram, n_ant, &mut y[c * n_ant..(c + 1) * n_ant]);
        }
        // Pi += Y^H Y (upper triangle, mirrored below)
        for b in 0..s {
            let yb = &y[b * n_ant..(b + 1) * n_ant];
            for a in 0..=b {
                let ya = &y[a * n_ant..(a + 1) * n_ant];
                let mut acc = ZERO;
                for (u, v) in ya.iter().zip(yb) {
                    acc += u.conj() * v;
                }
                pi[a + b * s] += acc;
            }
        }
        if keep_stages {
            for c in 0..s {
                backward_in_place(&gram, n_ant, &mut y[c * n_ant..(c + 1) * n_ant]);
            }
            stages.push(CMatrix::from_column_slice(n_ant, s, &y));
        }
    }
    for b in 0..s {
        for a in b + 1..s {
            pi[a + b * s] = pi[b + a * s].conj();
        }
    }
    let scale = 1.0 / csi.n_sim.max(1) as f64;
    let pi = CMatrix::from_column_slice(s, s, &pi) * Complex64::from(scale);
    Ok(LocalStage { users, stages, pi })
}

pub(crate) fn local_stages(csi: &CsiView, p: &[f64]) -> Result<Vec<LocalStage>> {
    local_stages_with(csi, p, true)
}

/// With `keep_stages = false` only the `Pi_l` are formed.
pub(crate) fn local_stages_with(csi: &CsiView, p: &[f64], keep_stages: bool) -> Result<Vec<LocalStage>> {
    if p.len() != csi.users {
        return Err(Error::DimensionMismatch {
            expected: csi.users,
            got: p.len(),
        });
    }
    (0..csi.aps).map(|l| local_stage(csi, p, l, keep_stages)).collect()
}

/// Local MMSE stage `V_l = (hat H_l P hat H_l^H + Sigma_l)^-1 hat H_l P^(1/2)`
/// of AP `l`, one `N x K` matrix per realization.
pub fn local_mmse_stage(csi: &CsiView, p: &PowerVector, l: usize) -> Result<Vec<CMatrix>> {
    if p.len() != csi.users {
        return Err(Error::DimensionMismatch {
            expected: csi.users,
            got: p.len(),
        });
    }
    if l >= csi.aps {
        return Err(Error::invalid(format!("AP index {l} out of range")));
    }
    let stage = local_stage(csi, p.as_slice(), l, true)?;
    Ok(stage
        .stages
        .iter()
        .map(|v| {
            let mut full = CMatrix::zeros(csi.antennas, csi.users);
            for (c, &i) in stage.users.iter().enumerate() {
                full.set_column(i, &v.column(c));
            }
            full
        })
        .collect())
}

/// Solves the team system of user `k`,
/// `c_l + sum_{j in L_k \ l} Pi_j c_j = e_k` for `l in L_k`,
/// as one dense `|L_k| K` system with LU (unknowns ordered by AP, then user).
///
/// `pis[j]` is the full `K x K` matrix `Pi_j`.
pub fn solve_team_system_dense(pis: &[CMatrix], cluster: &[usize], k: usize) -> Result<Vec<CVector>> {
    let users = pis.first().map_or(0, |m| m.nrows());
    let q = cluster.len();
    let dim = q * users;
    let mut a = CMatrix::identity(dim, dim);
    let mut b = CVector::zeros(dim);
    for (r, &l) in cluster.iter().enumerate() {
        b[r * users + k] = ONE;
        for (c, &j) in cluster.iter().enumerate() {
            if j != l {
                a.view_mut((r * users, c * users), (users, users))
                    .copy_from(&pis[j]);
            }
        }
    }
    let x = a
        .lu()
        .solve(&b)
        .ok_or(Error::SingularTeamSystem { user: k })?;
    Ok((0..q).map(|r| x.rows(r * users, users).into_owned()).collect())
}

/// Solution `d_l = c_{l,k}[U_l]` of the team system on served-user coordinates,
/// stacked over `l in cluster`, with the offset of each block.
fn solve_team_blocks(stages: &[LocalStage], cluster: &[usize], k: usize) -> Result<(Vec<usize>, Vec<Complex64>)> {
    // V_j has nonzero columns only on the users served by j, so only those
    // coordinates of c_{j,k} matter; Pi_j lives on the same block.
    let mut offsets = Vec::with_capacity(cluster.len());
    let mut dim = 0;
    for &l in cluster {
        offsets.push(dim);
        dim += stages[l].users.len();
    }
    let mut a = vec![ZERO; dim * dim];
    let mut b = vec![ZERO; dim];
    for i in 0..dim {
        a[i + i * dim] = ONE;
    }
    for (r, &l) in cluster.iter().enumerate() {
        let ul = &stages[l].users;
        if let Ok(pos) = ul.binary_search(&k) {
            b[offsets[r] + pos] = ONE;
        }
        for (c, &j) in cluster.iter().enumerate() {
            if j == l {
                continue;
            }
            let uj = &stages[j].users;
            for (row_j, i) in uj.iter().enumerate() {
                if let Ok(row_l) = ul.binary_search(i) {
                    for col in 0..uj.len() {
                        a[offsets[r] + row_l + (offsets[c] + col) * dim] = stages[j].pi[(row_j, col)];
                    }
                }
            }
        }
    }
    if !lu_solve_in_place(&mut a, dim, &mut b) || b.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::SingularTeamSystem { user: k });
    }
    Ok((offsets, b))
}

/// Team coefficients of user `k` from the reduced system on served-user
/// coordinates. Returns the full `c_{l,k}` (length `K`) for each `l in L_k`.
pub(crate) fn solve_team_reduced(stages: &[LocalStage], cluster: &[usize], k: usize, users: usize) -> Result<Vec<CVector>> {
    let (offsets, d) = solve_team_blocks(stages, cluster, k)?;
    let d = CVector::from_vec(d);
    // Pi_j c_j, embedded in C^K.
    let contrib: Vec<CVector> = cluster
        .iter()
        .enumerate()
        .map(|(c, &j)| {
            let uj = &stages[j].users;
            let dj = d.rows(offsets[c], uj.len());
            let local = &stages[j].pi * dj;
            let mut full = CVector::zeros(users);
            for (row, &i) in uj.iter().enumerate() {
                full[i] = local[row];
            }
            full
        })
        .collect();
    Ok(cluster
        .iter()
        .enumerate()
        .map(|(r, _)| {
            let mut c = CVector::zeros(users);
            c[k] = ONE;
            for (other, v) in contrib.iter().enumerate() {
                if other != r {
                    c -= v;
                }
            }
            c
        })
        .collect())
}

fn full_pi(stage: &LocalStage, users: usize) -> CMatrix {
    let mut pi = CMatrix::zeros(users, users);
    for (r, &i) in stage.users.iter().enumerate() {
        for (c, &j) in stage.users.iter().enumerate() {
            pi[(i, j)] = stage.pi[(r, c)];
        }
    }
    pi
}

/// Largest `||c_l + sum_{j != l} Pi_j c_j - e_k||_2` over the serving APs of `k`.
pub(crate) fn team_residual(stages: &[LocalStage], cluster: &[usize], k: usize, coeffs: &[CVector]) -> f64 {
    let users = coeffs.first().map_or(0, |c| c.len());
    let products: Vec<CVector> = cluster
        .iter()
        .zip(coeffs)
        .map(|(&j, c)| full_pi(&stages[j], users) * c)
        .collect();
    (0..cluster.len())
        .map(|r| {
            let mut res = coeffs[r].clone();
            res[k] -= ONE;
            for (other, v) in products.iter().enumerate() {
                if other != r {
                    res += v;
                }
            }
            res.norm()
        })
        .fold(0.0, f64::max)
}

fn realize_team(
    csi: &CsiView,
    stages: &[LocalStage],
    coefficients: &[Vec<Vec<Complex64>>],
) -> Result<RealizedBeamformers> {
    let support: Vec<Vec<usize>> = (0..csi.users).map(|k| csi.cluster(k).to_vec()).collect();
    let mut beams = RealizedBeamformers::zeros(csi.n_sim, csi.aps, csi.antennas, support)?;
    for k in 0..csi.users {
        for (s, &l) in csi.cluster(k).iter().enumerate() {
            let stage = &stages[l];
            let c = &coefficients[k][s];
            let local = CVector::from_iterator(stage.users.len(), stage.users.iter().map(|&i| c[i]));
            for n in 0..csi.n_sim {
                let v = &stage.stages[n] * &local;
                beams.block_mut(n, k, s).copy_from_slice(v.as_slice());
            }
        }
    }
    beams.check_finite()?;
    Ok(beams)
}

/// Local team MMSE design (Q = 1 gives the small-cells local MMSE).
pub fn team_mmse(csi: &CsiView, p: &PowerVector) -> Result<(BeamformerDesign, RealizedBeamformers)> {
    let stages = local_stages(csi, p.as_slice())?;
    let mut coefficients = Vec::with_capacity(csi.users);
    let mut worst = 0.0f64;
    for k in 0..csi.users {
        let cluster = csi.cluster(k);
        let coeffs = solve_team_reduced(&stages, cluster, k, csi.users)?;
        worst = worst.max(team_residual(&stages, cluster, k, &coeffs));
        coefficients.push(coeffs.iter().map(|c| c.as_slice().to_vec()).collect());
    }
    let beams = realize_team(csi, &stages, &coefficients)?;
    let scenario = if (0..csi.users).all(|k| csi.cluster(k).len() == 1) {
        Scenario::SmallCells
    } else {
        Scenario::DistributedCellFree
    };
    let design = BeamformerDesign {
        scenario,
        powers: p.clone(),
        error_scales: (0..csi.aps).map(|l| csi.error_scale(l, p.as_slice())).collect(),
        combiner: Combiner::LocalTeam { coefficients },
        lsfd: None,
        team_residual: worst,
    };
    Ok((design, beams))
}

/// Long-term parameters of the local team MMSE design.
pub fn team_mmse_design(csi: &CsiView, p: &PowerVector) -> Result<BeamformerDesign> {
    team_mmse(csi, p).map(|(d, _)| d)
}

/// `sqrt(p_k) Re E[hat h_k^H v_k] = Re sum_l (Pi_l c_{l,k})_k` per user for
/// the team design, i.e. `1 - MMSE_k` under the per-AP product measure.
pub(crate) fn team_mmse_gains(csi: &CsiView, p: &[f64]) -> Result<Vec<f64>> {
    let stages = local_stages_with(csi, p, false)?;
    (0..csi.users)
        .map(|k| {
            let cluster = csi.cluster(k);
            let (offsets, d) = solve_team_blocks(&stages, cluster, k)?;
            // (Pi_l c_{l,k})_k only involves c_{l,k}[U_l] = d_l
            Ok(cluster
                .iter()
                .zip(&offsets)
                .map(|(&l, &o)| {
                    let st = &stages[l];
                    let row = st.users.binary_search(&k).expect("serving AP knows the user");
                    (0..st.users.len())
                        .map(|col| (st.pi[(row, col)] * d[o + col]).re)
                        .sum::<f64>()
                })
                .sum())
        })
        .collect()
}

/// Users sharing a serving cluster.
struct ClusterGroup {
    aps: Vec<usize>,
    members: Vec<usize>,
}

fn cluster_groups(csi: &CsiView) -> Vec<ClusterGroup> {
    let mut groups: Vec<ClusterGroup> = Vec::new();
    for k in 0..csi.users {
        let cluster = csi.cluster(k);
        match groups.iter_mut().find(|g| g.aps == cluster) {
            Some(g) => g.members.push(k),
            None => groups.push(ClusterGroup {
                aps: cluster.to_vec(),
                members: vec![k],
            }),
        }
    }
    groups
}

/// AP pairs `(hi, lo)`, `hi >= lo`, that occur together in some cluster, with
/// the users known at both.
struct PairBlocks {
    pairs: Vec<(usize, usize, Vec<usize>)>,
    /// `index[hi * L + lo]`
    index: Vec<usize>,
}

impl PairBlocks {
    fn new(csi: &CsiView, groups: &[ClusterGroup]) -> Self {
        let aps = csi.aps;
        let mut index = vec![usize::MAX; aps * aps];
        let mut pairs = Vec::new();
        for g in groups {
            for (s, &hi) in g.aps.iter().enumerate() {
                for &lo in &g.aps[..=s] {
                    if index[hi * aps + lo] == usize::MAX {
                        index[hi * aps + lo] = pairs.len();
                        let common = csi
                            .served_by(hi)
                            .iter()
                            .copied()
                            .filter(|&i| csi.is_known(lo, i))
                            .collect();
                        pairs.push((hi, lo, common));
                    }
                }
            }
        }
        Self { pairs, index }
    }

    /// `sum_i p_i hat h_{hi,i} hat h_{lo,i}^H` for every pair at realization `n`
    /// (`N x N` column-major blocks).
    fn fill(&self, csi: &CsiView, n: usize, p: &[f64], out: &mut Vec<Complex64>) {
        let n_ant = csi.antennas;
        out.resize(self.pairs.len() * n_ant * n_ant, ZERO);
        // antenna-major copies so each entry is a contiguous dot over users
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for (b, (hi, lo, common)) in self.pairs.iter().enumerate() {
            let block = &mut out[b * n_ant * n_ant..(b + 1) * n_ant * n_ant];
            let m = common.len();
            xs.clear();
            ys.clear();
            xs.resize(n_ant * m, ZERO);
            ys.resize(n_ant * m, ZERO);
            for (u, &i) in common.iter().enumerate() {
                for (a, (x, y)) in csi.block(n, *hi, i).iter().zip(csi.block(n, *lo, i)).enumerate() {
                    xs[a * m + u] = *x;
                    ys[a * m + u] = y.conj() * p[i];
                }
            }
            for col in 0..n_ant {
                let yc = &ys[col * m..(col + 1) * m];
                for row in 0..n_ant {
                    let mut acc = ZERO;
                    for (x, y) in xs[row * m..(row + 1) * m].iter().zip(yc) {
                        acc += x * y;
                    }
                    block[row + col * n_ant] = acc;
                }
            }
        }
    }
}

/// Runs the centralized MMSE solve for every user and realization, handing
/// `(n, k, y)` to `visit` where `y = L^-1 hat h_{S,k} sqrt(p_k)` and
/// `L L^H = H_S P H_S^H + Sigma_S`. With `solve` the buffer holds
/// `v_{S,k}` instead.
fn for_each_centralized<F>(csi: &CsiView, p: &[f64], solve: bool, mut visit: F) -> Result<()>
where
    F: FnMut(usize, usize, &[Complex64]),
{
    if p.len() != csi.users {
        return Err(Error::DimensionMismatch {
            expected: csi.users,
            got: p.len(),
        });
    }
    let n_ant = csi.antennas;
    let nn = n_ant * n_ant;
    let sigmas: Vec<f64> = (0..csi.aps).map(|l| csi.error_scale(l, p)).collect();
    let groups = cluster_groups(csi);
    let pairs = PairBlocks::new(csi, &groups);
    let mut blocks = Vec::new();
    let mut gram = Vec::new();
    let mut x = Vec::new();
    for n in 0..csi.n_sim {
        pairs.fill(csi, n, p, &mut blocks);
        for g in &groups {
            let dim = g.aps.len() * n_ant;
            // every lower block is overwritten below
            gram.resize(dim * dim, ZERO);
            for (s, &hi) in g.aps.iter().enumerate() {
                for (t, &lo) in g.aps[..=s].iter().enumerate() {
                    let b = pairs.index[hi * csi.aps + lo];
                    let block = &blocks[b * nn..(b + 1) * nn];
                    for col in 0..n_ant {
                        let dst = s * n_ant + (t * n_ant + col) * dim;
                        gram[dst..dst + n_ant].copy_from_slice(&block[col * n_ant..(col + 1) * n_ant]);
                    }
                }
                for a in 0..n_ant {
                    let d = s * n_ant + a;
                    gram[d + d * dim] += sigmas[hi];
                }
            }
            if !cholesky_in_place(&mut gram, dim) {
                return Err(Error::Numerical(format!(
                    "centralized MMSE system of user {} is not positive definite",
                    g.members[0]
                )));
            }
            x.resize(dim, ZERO);
            for &k in &g.members {
                let sp = p[k].sqrt();
                for (s, &l) in g.aps.iter().enumerate() {
                    for (dst, z) in x[s * n_ant..(s + 1) * n_ant].iter_mut().zip(csi.block(n, l, k)) {
                        *dst = z * sp;
                    }
                }
                forward_in_place(&gram, dim, &mut x);
                if solve {
                    backward_in_place(&gram, dim, &mut x);
                }
                visit(n, k, &x);
            }
        }
    }
    Ok(())
}

/// Centralized MMSE on the serving antennas:
/// `v_k = (H_S P H_S^H + Sigma_S)^-1 h_{S,k} sqrt(p_k)` embedded in `C^M`.
pub fn centralized_mmse(csi: &CsiView, p: &PowerVector) -> Result<RealizedBeamformers> {
    let support: Vec<Vec<usize>> = (0..csi.users).map(|k| csi.cluster(k).to_vec()).collect();
    let mut beams = RealizedBeamformers::zeros(csi.n_sim, csi.aps, csi.antennas, support)?;
    let n_ant = csi.antennas;
    for_each_centralized(csi, p.as_slice(), true, |n, k, v| {
        for s in 0..v.len() / n_ant {
            beams
                .block_mut(n, k, s)
                .copy_from_slice(&v[s * n_ant..(s + 1) * n_ant]);
        }
    })?;
    beams.check_finite()?;
    Ok(beams)
}

/// `E[p_k hat h_{S,k}^H (H_S P H_S^H + Sigma_S)^-1 hat h_{S,k}]` per user, i.e.
/// `1 - MMSE_k` of the centralized design.
pub(crate) fn centralized_mmse_gains(csi: &CsiView, p: &[f64]) -> Result<Vec<f64>> {
    let mut acc = vec![0.0; csi.users];
    for_each_centralized(csi, p, false, |_, k, y| {
        acc[k] += y.iter().map(|z| z.norm_sqr()).sum::<f64>();
    })?;
    let scale = 1.0 / csi.n_sim as f64;
    Ok(acc.into_iter().map(|a| a * scale).collect())
}

/// Centralized MMSE together with its (stateless) design record.
pub fn centralized_mmse_design(csi: &CsiView, p: &PowerVector) -> Result<(BeamformerDesign, RealizedBeamformers)> {
    let beams = centralized_mmse(csi, p)?;
    let design = BeamformerDesign {
        scenario: Scenario::CentralizedCellFree,
        powers: p.clone(),
        error_scales: (0..csi.aps).map(|l| csi.error_scale(l, p.as_slice())).collect(),
        combiner: Combiner::CentralizedMmse,
        lsfd: None,
        team_residual: 0.0,
    };
    Ok((design, beams))
}

/// Maximum ratio combining on the serving blocks, `v_k = hat h_k`.
pub fn mrc(csi: &CsiView) -> RealizedBeamformers {
    let support: Vec<Vec<usize>> = (0..csi.users).map(|k| csi.cluster(k).to_vec()).collect();
    let mut beams = RealizedBeamformers::zeros(csi.n_sim, csi.aps, csi.antennas, support)
        .expect("clusters are sorted AP indices");
    for k in 0..csi.users {
        for (s, &l) in csi.cluster(k).iter().enumerate() {
            for n in 0..csi.n_sim {
                beams.block_mut(n, k, s).copy_from_slice(csi.block(n, l, k));
            }
        }
    }
    beams
}

/// MRC with a design record (powers are only recorded).
pub fn mrc_design(csi: &CsiView, p: &PowerVector) -> (BeamformerDesign, RealizedBeamformers) {
    let design = BeamformerDesign {
        scenario: Scenario::DistributedCellFree,
        powers: p.clone(),
        error_scales: (0..csi.aps).map(|l| csi.error_scale(l, p.as_slice())).collect(),
        combiner: Combiner::Mrc,
        lsfd: None,
        team_residual: 0.0,
    };
    (design, mrc(csi))
}

/// The MSE-optimal design of `scenario` at powers `p`.
pub fn scenario_design(csi: &CsiView, scenario: Scenario, p: &PowerVector) -> Result<(BeamformerDesign, RealizedBeamformers)> {
    match scenario {
        Scenario::SmallCells | Scenario::DistributedCellFree => {
            let (mut design, beams) = team_mmse(csi, p)?;
            design.scenario = scenario;
            Ok((design, beams))
        }
        Scenario::CentralizedCellFree => centralized_mmse_design(csi, p),
    }
}

/// UatF moments of a user's per-AP combined signal, as a function of the
/// per-AP weights `a`: `SINR(a) = p_k |b^H a|^2 / (a^H B a)`.
#[derive(Clone, Debug)]
pub struct LsfdMoments {
    /// `b_l = conj(E[h_{l,k}^H v_{l,k}])`.
    pub numerator: CVector,
    /// Interference-plus-noise quadratic form (Hermitian, PSD).
    pub denominator: CMatrix,
    pub power: f64,
}

impl LsfdMoments {
    pub fn sinr(&self, a: &CVector) -> f64 {
        let num = self.numerator.dotc(a).norm_sqr() * self.power;
        let den = a.dotc(&(&self.denominator * a)).re;
        num / den
    }
}

/// Rayleigh-quotient maximizer `a = B^-1 b`. Falls back to the pseudo-inverse
/// when `B` is singular.
pub fn lsfd_optimize(m: &LsfdMoments) -> Result<CVector> {
    let dim = m.numerator.len();
    if m.denominator.nrows() != dim || m.denominator.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: m.denominator.nrows(),
        });
    }
    if dim == 1 {
        return Ok(CVector::from_element(1, ONE));
    }
    if let Some(chol) = m.denominator.clone().cholesky() {
        let a = chol.solve(&m.numerator);
        if a.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Ok(a);
        }
    }
    warn!("LSFD denominator is singular; using the pseudo-inverse");
    let pinv = m
        .denominator
        .clone()
        .pseudo_inverse(1e-12)
        .map_err(|e| Error::Numerical(format!("LSFD pseudo-inverse failed: {e}")))?;
    Ok(pinv * &m.numerator)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{build_csi, ChannelBatch, NetworkInstance};
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn scalar_view(h: Complex64) -> CsiView {
        let batch = ChannelBatch::from_matrices(1, 1, &[CMatrix::from_element(1, 1, h)]).unwrap();
        CsiView::full(&batch)
    }

    #[test]
    fn scalar_local_stage_is_one_half() {
        let csi = scalar_view(c(1.0, 0.0));
        let p = PowerVector::uniform(1, 1.0).unwrap();
        let v = local_mmse_stage(&csi, &p, 0).unwrap();
        assert_relative_eq!(v[0][(0, 0)].re, 0.5, epsilon = 1e-15);
        assert_eq!(v[0][(0, 0)].im, 0.0);
    }

    #[test]
    fn idle_ap_has_zero_stage() {
        // AP 1 serves nobody (Q = 1, user 0 picks AP 0).
        let inst = NetworkInstance::from_gains(2, 2, 1, vec![2.0, 1.0], 1, Scenario::SmallCells).unwrap();
        let h = CMatrix::from_fn(4, 1, |r, _| c(r as f64 + 1.0, 0.5));
        let batch = ChannelBatch::from_matrices(2, 2, &[h]).unwrap();
        let csi = build_csi(&batch, &inst).unwrap();
        let p = PowerVector::uniform(1, 3.0).unwrap();
        let v = local_mmse_stage(&csi, &p, 1).unwrap();
        assert!(v[0].iter().all(|z| *z == ZERO));
    }

    #[test]
    fn local_stage_rejects_bad_dims() {
        let csi = scalar_view(c(1.0, 0.0));
        let p = PowerVector::uniform(2, 1.0).unwrap();
        assert!(local_mmse_stage(&csi, &p, 0).unwrap_err().is_invalid_argument());
    }

    #[test]
    fn scalar_team_system() {
        // c1 + c2/2 = 1, c2 + c1/2 = 1  =>  c1 = c2 = 2/3
        let half = CMatrix::from_element(1, 1, c(0.5, 0.0));
        let sol = solve_team_system_dense(&[half.clone(), half], &[0, 1], 0).unwrap();
        assert_relative_eq!(sol[0][0].re, 2.0 / 3.0, epsilon = 1e-14);
        assert_relative_eq!(sol[1][0].re, 2.0 / 3.0, epsilon = 1e-14);

        let stages: Vec<LocalStage> = (0..2)
            .map(|_| LocalStage {
                users: vec![0],
                stages: vec![],
                pi: CMatrix::from_element(1, 1, c(0.5, 0.0)),
            })
            .collect();
        let reduced = solve_team_reduced(&stages, &[0, 1], 0, 1).unwrap();
        assert_relative_eq!(reduced[0][0].re, 2.0 / 3.0, epsilon = 1e-14);
        assert_relative_eq!(reduced[1][0].re, 2.0 / 3.0, epsilon = 1e-14);
        assert!(team_residual(&stages, &[0, 1], 0, &reduced) < 1e-15);
    }

    #[test]
    fn zero_pi_gives_unit_coefficients() {
        let stages: Vec<LocalStage> = (0..3)
            .map(|_| LocalStage {
                users: vec![0, 1],
                stages: vec![],
                pi: CMatrix::zeros(2, 2),
            })
            .collect();
        let sol = solve_team_reduced(&stages, &[0, 2], 1, 2).unwrap();
        for c in sol {
            assert_eq!(c.as_slice(), &[ZERO, ONE]);
        }
    }

    #[test]
    fn scalar_centralized_mmse_is_one_half() {
        let csi = scalar_view(c(1.0, 0.0));
        let v = centralized_mmse(&csi, &PowerVector::uniform(1, 1.0).unwrap()).unwrap();
        assert_relative_eq!(v.vector(0, 0)[0].re, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn mrc_copies_masked_channel() {
        let inst = NetworkInstance::from_gains(1, 2, 2, vec![2.0, 1.0, 1.0, 2.0], 1, Scenario::SmallCells).unwrap();
        let h = CMatrix::from_fn(2, 2, |r, k| c(1.0 + r as f64, k as f64));
        let batch = ChannelBatch::from_matrices(2, 1, &[h]).unwrap();
        let csi = build_csi(&batch, &inst).unwrap();
        let v = mrc(&csi);
        // user 0 served by AP 0 only
        assert_eq!(v.vector(0, 0).as_slice(), &[c(1.0, 0.0), ZERO]);
        assert_eq!(v.vector(0, 1).as_slice(), &[ZERO, c(2.0, 1.0)]);
    }

    #[test]
    fn lsfd_single_ap_returns_one() {
        let m = LsfdMoments {
            numerator: CVector::from_element(1, c(0.3, 0.1)),
            denominator: CMatrix::from_element(1, 1, c(2.0, 0.0)),
            power: 1.0,
        };
        assert_eq!(lsfd_optimize(&m).unwrap()[0], ONE);
    }

    #[test]
    fn lsfd_diagonal_case() {
        let m = LsfdMoments {
            numerator: CVector::from_vec(vec![ONE, ZERO]),
            denominator: CMatrix::from_diagonal(&CVector::from_vec(vec![c(4.0, 0.0), c(1.0, 0.0)])),
            power: 1.0,
        };
        let a = lsfd_optimize(&m).unwrap();
        assert_relative_eq!(a[0].re, 0.25, epsilon = 1e-15);
        assert_eq!(a[1], ZERO);
    }

    #[test]
    fn lsfd_singular_denominator_uses_pseudo_inverse() {
        let m = LsfdMoments {
            numerator: CVector::from_vec(vec![ONE, ZERO]),
            denominator: CMatrix::from_diagonal(&CVector::from_vec(vec![c(2.0, 0.0), ZERO])),
            power: 1.0,
        };
        let a = lsfd_optimize(&m).unwrap();
        assert_relative_eq!(a[0].re, 0.5, epsilon = 1e-12);
        assert!(a[1].norm() < 1e-12);
    }

    #[test]
    fn from_vectors_detects_support() {
        let mut v = CVector::zeros(4);
        v[2] = c(1.0, 1.0);
        let beams = RealizedBeamformers::from_vectors(2, 2, &[vec![v.clone()]]).unwrap();
        assert_eq!(beams.support(0), &[1]);
        assert_eq!(beams.vector(0, 0), v);
    }
}
