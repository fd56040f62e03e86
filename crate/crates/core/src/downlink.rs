//! Downlink conjugate beamforming with channel hardening at the user.
//!
//! Cell `i` sends `sum_k D_ik hhat_ik^* u_ik` from its composite array, where
//! `D` is a diagonal power-control matrix: a full diagonal on the cBS block
//! and one scalar per eAP block. The user only knows the mean of its
//! effective gain, so everything else counts as interference.
//!
//! Two closed forms are provided. [`DlMode::Paper`] charges each eAP block
//! `d^2 beta alpha N_a`, the full variance of the effective gain including the
//! leakage through the estimation error. [`DlMode::Rigorous`] charges only the
//! variance of `d |hhat|^2`, `d^2 alpha^2 N_a`. The two agree on the cBS block
//! and differ by `sum_l d^2 N_a alpha (beta - alpha)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::{Dims, UserId};
use crate::error::{Error, Result};
use crate::propagation::BetaTable;
use crate::rng::RandomStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DlMode {
    #[default]
    Paper,
    Rigorous,
}

/// Power-control policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PowerPolicy {
    /// Each site spends its unit budget equally over the users of its cell.
    #[default]
    Uniform,
}

/// Diagonal power-control coefficients of every user.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerControl {
    dims: Dims,
    /// `U x N_b` cBS diagonal entries.
    cbs: Vec<f64>,
    /// `U x L` eAP scalars.
    eap: Vec<f64>,
}

impl PowerControl {
    pub fn from_parts(dims: Dims, cbs: Vec<f64>, eap: Vec<f64>) -> Result<Self> {
        if cbs.len() != dims.users() * dims.cbs_antennas || eap.len() != dims.users() * dims.eaps {
            return Err(Error::Dimension(format!(
                "power control needs {} cBS and {} eAP entries, got {} and {}",
                dims.users() * dims.cbs_antennas,
                dims.users() * dims.eaps,
                cbs.len(),
                eap.len()
            )));
        }
        if cbs.iter().chain(&eap).any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Domain("power-control entries must be finite and non-negative".into()));
        }
        Ok(Self { dims, cbs, eap })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    /// Diagonal of `D` on the cBS block.
    pub fn cbs_diag(&self, user: UserId) -> &[f64] {
        let n = self.dims.cbs_antennas;
        let u = self.dims.flat(user);
        &self.cbs[u * n..(u + 1) * n]
    }

    /// Scalar of eAP `l` in `1..=L`.
    pub fn eap(&self, user: UserId, l: usize) -> f64 {
        self.eap[self.dims.flat(user) * self.dims.eaps + l - 1]
    }

    /// Weight applied on composite antenna `a`.
    pub fn weight(&self, user: UserId, antenna: usize) -> f64 {
        let nb = self.dims.cbs_antennas;
        if antenna < nb {
            self.cbs_diag(user)[antenna]
        } else {
            self.eap(user, self.dims.site_of_antenna(antenna))
        }
    }

    fn trace(&self, user: UserId) -> f64 {
        self.cbs_diag(user).iter().sum()
    }

    fn trace_sq(&self, user: UserId) -> f64 {
        self.cbs_diag(user).iter().map(|v| v * v).sum()
    }

    /// Average transmit power of `site` in `cell`,
    /// `E|sum_k D hhat^* u|^2 = sum_k sum_a D_a^2 alpha_a`.
    pub fn site_load(&self, alpha: &BetaTable, cell: usize, site: usize) -> f64 {
        let dims = self.dims;
        dims.users_in(cell)
            .map(|u| dims.user(u))
            .map(|user| {
                let a = alpha.get(user, cell, site);
                if site == 0 {
                    a * self.trace_sq(user)
                } else {
                    let d = self.eap(user, site);
                    d * d * a * dims.eap_antennas as f64
                }
            })
            .sum()
    }
}

/// Power-control coefficients under `policy`.
///
/// Uniform: `D = I / sqrt(N_b sum_k alpha^{i0})` on the cBS and
/// `d = 1 / sqrt(N_a sum_k alpha^{il})` on each eAP, so every site meets its
/// unit average-power budget with equality.
pub fn dl_power_control(alpha: &BetaTable, policy: PowerPolicy) -> Result<PowerControl> {
    let dims = alpha.dims();
    if dims.users_per_cell == 0 {
        return Err(Error::Degenerate("no users to serve".into()));
    }
    let PowerPolicy::Uniform = policy;
    let mut cbs = Vec::with_capacity(dims.users() * dims.cbs_antennas);
    let mut eap = Vec::with_capacity(dims.users() * dims.eaps);
    let load =
        |cell: usize, site: usize| -> f64 { dims.users_in(cell).map(|u| alpha.get(dims.user(u), cell, site)).sum() };
    for cell in 0..dims.cells {
        let c0 = if dims.cbs_antennas > 0 { 1.0 / (dims.cbs_antennas as f64 * load(cell, 0)).sqrt() } else { 0.0 };
        let dl: Vec<f64> = (1..=dims.eaps).map(|l| 1.0 / (dims.eap_antennas as f64 * load(cell, l)).sqrt()).collect();
        for _ in dims.users_in(cell) {
            cbs.extend(std::iter::repeat_n(c0, dims.cbs_antennas));
            eap.extend_from_slice(&dl);
        }
    }
    if cbs.iter().chain(&eap).any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("a site has zero aggregate estimate variance".into()));
    }
    PowerControl::from_parts(dims, cbs, eap)
}

/// Closed-form pieces of the downlink SINR of one user.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct DownlinkTerms {
    /// `E[g]`, the mean effective gain.
    pub mean_gain: f64,
    /// Own-term variance charged by [`DlMode::Paper`].
    pub own_paper: f64,
    /// Own-term variance charged by [`DlMode::Rigorous`].
    pub own_rigorous: f64,
    /// Interference from the other users of the serving cell.
    pub j2: f64,
    /// Interference from every other cell.
    pub j3: f64,
    /// `sigma^2 / p_d`.
    pub noise: f64,
}

impl DownlinkTerms {
    pub fn own(&self, mode: DlMode) -> f64 {
        match mode {
            DlMode::Paper => self.own_paper,
            DlMode::Rigorous => self.own_rigorous,
        }
    }

    pub fn sinr(&self, mode: DlMode) -> f64 {
        let den = self.own(mode) + self.j2 + self.j3 + self.noise;
        if den > 0.0 {
            self.mean_gain * self.mean_gain / den
        } else {
            0.0
        }
    }

    /// `own_paper - own_rigorous`.
    pub fn gap(&self) -> f64 {
        self.own_paper - self.own_rigorous
    }
}

fn check(alpha: &BetaTable, beta: &BetaTable, pc: &PowerControl) -> Result<Dims> {
    let dims = beta.dims();
    if alpha.dims() != dims || pc.dims != dims {
        return Err(Error::Dimension("alpha, beta and power control disagree".into()));
    }
    Ok(dims)
}

/// Power received by `target` from the beam cell `cell` forms for `other`:
/// `sum_a D_a^2 alpha_a(other) beta_a(target)` over that cell's sites.
fn beam_leak(
    dims: Dims,
    alpha: &BetaTable,
    beta: &BetaTable,
    pc: &PowerControl,
    target: UserId,
    other: UserId,
    cell: usize,
) -> f64 {
    let na = dims.eap_antennas as f64;
    let mut s = alpha.get(other, cell, 0) * beta.get(target, cell, 0) * pc.trace_sq(other);
    for l in 1..=dims.eaps {
        let d = pc.eap(other, l);
        s += d * d * beta.get(target, cell, l) * alpha.get(other, cell, l) * na;
    }
    s
}

/// Closed-form downlink terms for `user`.
pub fn dl_terms(
    alpha: &BetaTable,
    beta: &BetaTable,
    pc: &PowerControl,
    noise_ratio: f64,
    user: UserId,
) -> Result<DownlinkTerms> {
    let dims = check(alpha, beta, pc)?;
    let c = user.cell;
    let na = dims.eap_antennas as f64;
    let a0 = alpha.get(user, c, 0);
    let mut t = DownlinkTerms {
        mean_gain: a0 * pc.trace(user),
        own_paper: a0 * beta.get(user, c, 0) * pc.trace_sq(user),
        own_rigorous: a0 * beta.get(user, c, 0) * pc.trace_sq(user),
        noise: noise_ratio,
        ..DownlinkTerms::default()
    };
    for l in 1..=dims.eaps {
        let (a, b, d) = (alpha.get(user, c, l), beta.get(user, c, l), pc.eap(user, l));
        t.mean_gain += d * a * na;
        t.own_paper += d * d * b * a * na;
        t.own_rigorous += d * d * a * a * na;
    }
    for other in dims.users_in(c).map(|u| dims.user(u)).filter(|o| *o != user) {
        t.j2 += beam_leak(dims, alpha, beta, pc, user, other, c);
    }
    for cell in (0..dims.cells).filter(|&i| i != c) {
        for other in dims.users_in(cell).map(|u| dims.user(u)) {
            t.j3 += beam_leak(dims, alpha, beta, pc, user, other, cell);
        }
    }
    Ok(t)
}

/// Closed-form downlink SINR of `user`.
pub fn dl_sinr_analytic(
    alpha: &BetaTable,
    beta: &BetaTable,
    pc: &PowerControl,
    noise_ratio: f64,
    user: UserId,
    mode: DlMode,
) -> Result<f64> {
    Ok(dl_terms(alpha, beta, pc, noise_ratio, user)?.sinr(mode))
}

/// `log2(1 + gamma)`.
pub fn dl_se(gamma: f64) -> f64 {
    (1.0 + gamma.max(0.0)).log2()
}

/// Empirical powers of the pieces of the received downlink signal.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct DownlinkDecomposition {
    /// Sample mean of the effective gain `g`.
    pub mean_gain: f64,
    /// Sample variance of `g`.
    pub own_total: f64,
    /// Variance of the cBS term plus `sum_l d |hhat_l|^2`.
    pub j1: f64,
    /// Power of `sum_l d htilde_l^T hhat_l^*`.
    pub leakage: f64,
    pub j2: f64,
    pub j3: f64,
    pub noise: f64,
}

/// Output of the block-level downlink simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmpiricalDownlink {
    /// `|E[g]|^2` over the sum of the empirical variance of `g` and the
    /// interference and noise powers.
    pub gamma: f64,
    /// `|E[y u^*]|^2 / (E|y|^2 - |E[y u^*]|^2)`, from the received samples only.
    pub gamma_soft: f64,
    pub terms: DownlinkDecomposition,
    /// Sample `E|hhat|^4 / (2 alpha^2)` pooled over the user's antennas.
    pub fourth_moment_ratio: f64,
    /// Largest `|E[u u'^*]|` between the user's symbol and any other.
    pub max_symbol_cross: f64,
}

/// Simulates `n_blocks` independent coherence blocks for `user`.
///
/// Each block redraws every estimate `hhat ~ CN(0, alpha)`, the user's own
/// estimation error `htilde ~ CN(0, beta - alpha)`, its channels towards other
/// cells `h ~ CN(0, beta)`, QPSK symbols for all users and noise, then forms
/// the received signal term by term.
pub fn dl_sinr_empirical(
    alpha: &BetaTable,
    beta: &BetaTable,
    pc: &PowerControl,
    noise_ratio: f64,
    user: UserId,
    n_blocks: usize,
    rng: &mut RandomStream,
) -> Result<EmpiricalDownlink> {
    let dims = check(alpha, beta, pc)?;
    if n_blocks == 0 {
        return Err(Error::Domain("n_blocks must be positive".into()));
    }
    let m = dims.antennas();
    let c = user.cell;
    let target = dims.flat(user);
    let users = dims.users();
    let nb = dims.cbs_antennas;

    let alpha_of = |u: usize, a: usize| {
        let who = dims.user(u);
        alpha.at_antenna(who, who.cell, a)
    };
    let est_sd: Vec<f64> = (0..users * m).map(|i| alpha_of(i / m, i % m).sqrt()).collect();
    let weight: Vec<f64> = (0..users * m).map(|i| pc.weight(dims.user(i / m), i % m)).collect();
    let err_sd: Vec<f64> =
        (0..m).map(|a| (beta.at_antenna(user, c, a) - alpha_of(target, a)).max(0.0).sqrt()).collect();
    let chan_sd: Vec<f64> = (0..dims.cells * m).map(|i| beta.at_antenna(user, i / m, i % m).sqrt()).collect();
    let noise_sd = noise_ratio.max(0.0).sqrt();

    let zero = Complex64::new(0.0, 0.0);
    let mut hhat = vec![zero; users * m];
    let mut h_other = vec![zero; dims.cells * m];
    let mut symbols = vec![zero; users];
    let mut own_full = vec![zero; m];

    let (mut sum_g, mut sum_g2) = (zero, 0.0);
    let (mut sum_j1, mut sum_j1_2) = (zero, 0.0);
    let mut p_leak = 0.0;
    let (mut p_j2, mut p_j3, mut p_noise) = (0.0, 0.0, 0.0);
    let (mut corr, mut p_y) = (zero, 0.0);
    let mut fourth = 0.0;
    let mut n_fourth = 0usize;
    let mut sym_cross = vec![zero; users];

    for _ in 0..n_blocks {
        for (z, sd) in hhat.iter_mut().zip(&est_sd) {
            *z = *sd * rng.complex_normal(1.0);
        }
        for (z, sd) in h_other.iter_mut().zip(&chan_sd) {
            *z = *sd * rng.complex_normal(1.0);
        }
        for s in symbols.iter_mut() {
            *s = rng.qpsk();
        }
        // Own channel towards the serving cell: hhat + htilde.
        let own_hat = &hhat[target * m..(target + 1) * m];
        let own_w = &weight[target * m..(target + 1) * m];
        let mut t_cbs = zero;
        let mut t_eap = zero;
        let mut leak = zero;
        for a in 0..m {
            let ht = own_hat[a];
            let e = err_sd[a] * rng.complex_normal(1.0);
            own_full[a] = ht + e;
            if a < nb {
                t_cbs += own_w[a] * (ht + e) * ht.conj();
            } else {
                t_eap += own_w[a] * ht.norm_sqr();
                leak += own_w[a] * e * ht.conj();
            }
            let var = alpha_of(target, a);
            if var > 0.0 {
                let r = ht.norm_sqr() / var;
                fourth += r * r / 2.0;
                n_fourth += 1;
            }
        }
        let j1 = t_cbs + t_eap;
        let g = j1 + leak;

        let mut j2 = zero;
        let mut j3 = zero;
        for u in (0..users).filter(|&u| u != target) {
            let cell = dims.user(u).cell;
            let w = &weight[u * m..(u + 1) * m];
            let est = &hhat[u * m..(u + 1) * m];
            let h = if cell == c { &own_full[..] } else { &h_other[cell * m..(cell + 1) * m] };
            let coeff: Complex64 = (0..m).map(|a| w[a] * h[a] * est[a].conj()).sum();
            if cell == c {
                j2 += coeff * symbols[u];
            } else {
                j3 += coeff * symbols[u];
            }
        }
        let noise = noise_sd * rng.complex_normal(1.0);
        let y = g * symbols[target] + j2 + j3 + noise;

        sum_g += g;
        sum_g2 += g.norm_sqr();
        sum_j1 += j1;
        sum_j1_2 += j1.norm_sqr();
        p_leak += leak.norm_sqr();
        p_j2 += j2.norm_sqr();
        p_j3 += j3.norm_sqr();
        p_noise += noise.norm_sqr();
        corr += y * symbols[target].conj();
        p_y += y.norm_sqr();
        for (acc, s) in sym_cross.iter_mut().zip(&symbols) {
            *acc += *s * symbols[target].conj();
        }
    }
    let n = n_blocks as f64;
    let mean_g = sum_g / n;
    let mean_j1 = sum_j1 / n;
    let terms = DownlinkDecomposition {
        mean_gain: mean_g.re,
        own_total: sum_g2 / n - mean_g.norm_sqr(),
        j1: sum_j1_2 / n - mean_j1.norm_sqr(),
        leakage: p_leak / n,
        j2: p_j2 / n,
        j3: p_j3 / n,
        noise: p_noise / n,
    };
    let g = corr / n;
    let residual = p_y / n - g.norm_sqr();
    let max_symbol_cross =
        sym_cross.iter().enumerate().filter(|(u, _)| *u != target).map(|(_, s)| (s / n).norm()).fold(0.0, f64::max);
    let den = terms.own_total + terms.j2 + terms.j3 + terms.noise;
    Ok(EmpiricalDownlink {
        gamma: if den > 0.0 { mean_g.norm_sqr() / den } else { f64::INFINITY },
        gamma_soft: if residual > 0.0 { g.norm_sqr() / residual } else { f64::INFINITY },
        terms,
        fourth_moment_ratio: fourth / n_fourth as f64,
        max_symbol_cross,
    })
}
