//! Uplink maximum-ratio combining.
//!
//! The cBS of cell `c` correlates its composite received vector with the
//! estimate `hhat_ck`. The soft estimate splits into the desired part
//! `sqrt(eta) |hhat|^2 x` plus four mutually uncorrelated terms:
//!
//! - `I1`: the user's own estimation error, `sqrt(eta) hhat^H htilde x`;
//! - `I2`: the other users of the cell;
//! - `I3`: the users of every other cell;
//! - `I4`: receiver noise scaled by `1/sqrt(p_u)`.
//!
//! Conditioning on the in-cell estimates, their powers sum to `hhat^H Xi hhat`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::config::{Dims, UserId};
use crate::error::{Error, Result};
use crate::estimation::EstimateSet;
use crate::propagation::BetaTable;
use crate::rng::RandomStream;

/// Diagonals of the block-diagonal estimation-error covariances `Theta` and
/// composite-channel correlations `R`.
///
/// `Theta_{ck}^c` carries `beta - alpha` of the user's own-cell pairs;
/// `R_{ik}^c` carries `beta` of user `(i, k)` towards the sites of cell `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceSet {
    dims: Dims,
    theta: Vec<f64>,
    r: Vec<f64>,
}

impl CovarianceSet {
    pub fn new(beta: &BetaTable, estimates: &EstimateSet) -> Result<Self> {
        let dims = beta.dims();
        if estimates.dims() != dims {
            return Err(Error::Dimension("beta and estimates disagree".into()));
        }
        let m = dims.antennas();
        let mut theta = Vec::with_capacity(dims.users() * m);
        let mut r = Vec::with_capacity(dims.users() * dims.cells * m);
        for u in 0..dims.users() {
            let user = dims.user(u);
            for a in 0..m {
                let site = dims.site_of_antenna(a);
                theta.push(beta.get(user, user.cell, site) - estimates.alpha(user, user.cell, site));
            }
            for cell in 0..dims.cells {
                r.extend((0..m).map(|a| beta.at_antenna(user, cell, a)));
            }
        }
        Ok(Self { dims, theta, r })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn theta_diag(&self, user: UserId) -> &[f64] {
        let m = self.dims.antennas();
        let u = self.dims.flat(user);
        &self.theta[u * m..(u + 1) * m]
    }

    pub fn r_diag(&self, user: UserId, cell: usize) -> &[f64] {
        let m = self.dims.antennas();
        let start = (self.dims.flat(user) * self.dims.cells + cell) * m;
        &self.r[start..start + m]
    }

    pub fn theta(&self, user: UserId) -> DMatrix<Complex64> {
        diag_matrix(self.theta_diag(user))
    }

    pub fn r(&self, user: UserId, cell: usize) -> DMatrix<Complex64> {
        diag_matrix(self.r_diag(user, cell))
    }
}

fn diag_matrix(d: &[f64]) -> DMatrix<Complex64> {
    DMatrix::from_fn(d.len(), d.len(), |i, j| if i == j { Complex64::new(d[i], 0.0) } else { Complex64::new(0.0, 0.0) })
}

/// Uplink power coefficients `eta` in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct UplinkPower {
    dims: Dims,
    eta: Vec<f64>,
}

impl UplinkPower {
    pub fn new(dims: Dims, eta: Vec<f64>) -> Result<Self> {
        if eta.len() != dims.users() {
            return Err(Error::Dimension(format!("{} eta values for {} users", eta.len(), dims.users())));
        }
        if let Some(bad) = eta.iter().find(|e| !(0.0..=1.0).contains(*e)) {
            return Err(Error::Domain(format!("power coefficient {bad} outside [0, 1]")));
        }
        Ok(Self { dims, eta })
    }

    /// Every user at full power.
    pub fn full(dims: Dims) -> Self {
        Self { dims, eta: vec![1.0; dims.users()] }
    }

    pub fn get(&self, user: UserId) -> f64 {
        self.eta[self.dims.flat(user)]
    }
}

/// Powers of the desired part and of `I1`..`I4`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct UplinkTerms {
    pub signal: f64,
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub i4: f64,
}

impl UplinkTerms {
    pub fn interference(&self) -> f64 {
        self.i1 + self.i2 + self.i3 + self.i4
    }

    pub fn sinr(&self) -> f64 {
        let den = self.interference();
        if den > 0.0 {
            self.signal / den
        } else {
            0.0
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.i1, self.i2, self.i3, self.i4]
    }
}

fn check_dims(estimates: &EstimateSet, cov: &CovarianceSet, eta: &UplinkPower) -> Result<Dims> {
    let dims = estimates.dims();
    if cov.dims != dims || eta.dims != dims {
        return Err(Error::Dimension("estimates, covariances and power coefficients disagree".into()));
    }
    Ok(dims)
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn weighted_norm(h: &[Complex64], w: &[f64]) -> f64 {
    h.iter().zip(w).map(|(x, w)| x.norm_sqr() * w).sum()
}

/// Interference-plus-noise matrix of `user`:
///
/// `Xi = sum_{k' != k} eta hhat hhat^H + sum_{k'} eta Theta + sum_{i != c} sum_{k'} eta R
///       + (sigma^2 / p_u) I`.
pub fn build_xi(
    estimates: &EstimateSet,
    cov: &CovarianceSet,
    eta: &UplinkPower,
    noise_ratio: f64,
    user: UserId,
) -> Result<DMatrix<Complex64>> {
    let dims = check_dims(estimates, cov, eta)?;
    let m = dims.antennas();
    let c = user.cell;
    let mut diag = vec![noise_ratio; m];
    let mut xi = DMatrix::<Complex64>::zeros(m, m);
    for other in dims.users_in(c).map(|u| dims.user(u)) {
        let e = eta.get(other);
        for (d, t) in diag.iter_mut().zip(cov.theta_diag(other)) {
            *d += e * t;
        }
        if other != user {
            let h = nalgebra::DVector::from_column_slice(estimates.hhat(other));
            xi += (&h * h.adjoint()) * Complex64::new(e, 0.0);
        }
    }
    for cell in (0..dims.cells).filter(|&i| i != c) {
        for other in dims.users_in(cell).map(|u| dims.user(u)) {
            let e = eta.get(other);
            for (d, r) in diag.iter_mut().zip(cov.r_diag(other, c)) {
                *d += e * r;
            }
        }
    }
    for (i, d) in diag.into_iter().enumerate() {
        xi[(i, i)] += d;
    }
    Ok(xi)
}

/// `gamma = eta |hhat|^4 / (hhat^H Xi hhat)`.
pub fn ul_sinr_analytic(hhat: &[Complex64], xi: &DMatrix<Complex64>, eta: f64) -> Result<f64> {
    if xi.nrows() != hhat.len() || xi.ncols() != hhat.len() {
        return Err(Error::Dimension(format!("Xi is {}x{}, hhat has {}", xi.nrows(), xi.ncols(), hhat.len())));
    }
    let h = nalgebra::DVector::from_column_slice(hhat);
    let den = (h.adjoint() * xi * &h)[(0, 0)].re;
    let norm2 = h.norm_squared();
    if eta == 0.0 || norm2 == 0.0 {
        return Ok(0.0);
    }
    if !(den > 0.0) || !den.is_finite() {
        return Err(Error::Numerical(format!("hhat^H Xi hhat = {den} is not positive")));
    }
    Ok(eta * norm2 * norm2 / den)
}

/// Closed-form term powers for `user`, evaluated without forming `Xi`.
pub fn ul_terms(
    estimates: &EstimateSet,
    cov: &CovarianceSet,
    eta: &UplinkPower,
    noise_ratio: f64,
    user: UserId,
) -> Result<UplinkTerms> {
    let dims = check_dims(estimates, cov, eta)?;
    let c = user.cell;
    let h = estimates.hhat(user);
    let norm2: f64 = h.iter().map(|z| z.norm_sqr()).sum();
    let e = eta.get(user);
    let mut t = UplinkTerms {
        signal: e * norm2 * norm2,
        i1: e * weighted_norm(h, cov.theta_diag(user)),
        i4: noise_ratio * norm2,
        ..UplinkTerms::default()
    };
    for other in dims.users_in(c).map(|u| dims.user(u)).filter(|o| *o != user) {
        t.i2 += eta.get(other) * (inner(h, estimates.hhat(other)).norm_sqr() + weighted_norm(h, cov.theta_diag(other)));
    }
    for cell in (0..dims.cells).filter(|&i| i != c) {
        for other in dims.users_in(cell).map(|u| dims.user(u)) {
            t.i3 += eta.get(other) * weighted_norm(h, cov.r_diag(other, c));
        }
    }
    Ok(t)
}

/// Closed-form uplink SINR of `user`.
pub fn ul_sinr(
    estimates: &EstimateSet,
    cov: &CovarianceSet,
    eta: &UplinkPower,
    noise_ratio: f64,
    user: UserId,
) -> Result<f64> {
    Ok(ul_terms(estimates, cov, eta, noise_ratio, user)?.sinr())
}

/// Output of the symbol-level uplink simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmpiricalUplink {
    /// Empirical signal power over the sum of empirical term powers.
    pub gamma: f64,
    /// SINR measured from the soft estimate alone: `|E[xhat x*]|^2 / Var(xhat)`.
    pub gamma_soft: f64,
    pub terms: UplinkTerms,
    /// Largest normalised cross-correlation `|E[Ii Ij*]| / sqrt(Pi Pj)`.
    pub max_cross_correlation: f64,
}

/// Symbol-level simulation of the MRC soft estimate for `user`.
///
/// The in-cell estimates stay fixed. Each symbol redraws the in-cell
/// estimation errors from `Theta`, the other-cell channels from `R`, unit
/// energy QPSK data for every user and receiver noise, then forms every term
/// of the soft estimate explicitly.
pub fn ul_sinr_empirical(
    estimates: &EstimateSet,
    cov: &CovarianceSet,
    eta: &UplinkPower,
    noise_ratio: f64,
    user: UserId,
    n_symbols: usize,
    rng: &mut RandomStream,
) -> Result<EmpiricalUplink> {
    let dims = check_dims(estimates, cov, eta)?;
    if n_symbols == 0 {
        return Err(Error::Domain("n_symbols must be positive".into()));
    }
    let c = user.cell;
    let m = dims.antennas();
    let h = estimates.hhat(user);
    let norm2: f64 = h.iter().map(|z| z.norm_sqr()).sum();
    let own_eta = eta.get(user).sqrt();

    struct Interferer {
        amp: f64,
        known: Complex64,
        std: Vec<f64>,
    }
    let in_cell: Vec<UserId> = dims.users_in(c).map(|u| dims.user(u)).filter(|o| *o != user).collect();
    let out_cell: Vec<UserId> = (0..dims.users()).map(|u| dims.user(u)).filter(|o| o.cell != c).collect();
    let sd = |v: &[f64]| v.iter().map(|x| x.max(0.0).sqrt()).collect::<Vec<_>>();
    let own_err_sd = sd(cov.theta_diag(user));
    let in_cell: Vec<Interferer> = in_cell
        .iter()
        .map(|o| Interferer {
            amp: eta.get(*o).sqrt(),
            known: inner(h, estimates.hhat(*o)),
            std: sd(cov.theta_diag(*o)),
        })
        .collect();
    let out_cell: Vec<Interferer> = out_cell
        .iter()
        .map(|o| Interferer { amp: eta.get(*o).sqrt(), known: Complex64::new(0.0, 0.0), std: sd(cov.r_diag(*o, c)) })
        .collect();

    // h^H z for z ~ CN(0, diag(std^2)), drawn antenna by antenna.
    let project = |rng: &mut RandomStream, std: &[f64]| -> Complex64 {
        (0..m).map(|a| h[a].conj() * (std[a] * rng.complex_normal(1.0))).sum()
    };
    let noise_sd = noise_ratio.max(0.0).sqrt();

    let mut power = [0.0f64; 4];
    let mut cross = [[Complex64::new(0.0, 0.0); 4]; 4];
    let mut signal = 0.0;
    let mut corr = Complex64::new(0.0, 0.0);
    let mut soft_power = 0.0;
    for _ in 0..n_symbols {
        let x = rng.qpsk();
        let desired = own_eta * norm2 * x;
        let i1 = own_eta * project(rng, &own_err_sd) * x;
        let mut i2 = Complex64::new(0.0, 0.0);
        for it in &in_cell {
            i2 += it.amp * (it.known + project(rng, &it.std)) * rng.qpsk();
        }
        let mut i3 = Complex64::new(0.0, 0.0);
        for it in &out_cell {
            i3 += it.amp * project(rng, &it.std) * rng.qpsk();
        }
        let i4: Complex64 = (0..m).map(|a| h[a].conj() * (noise_sd * rng.complex_normal(1.0))).sum();
        let terms = [i1, i2, i3, i4];
        for i in 0..4 {
            power[i] += terms[i].norm_sqr();
            for j in (i + 1)..4 {
                cross[i][j] += terms[i] * terms[j].conj();
            }
        }
        signal += desired.norm_sqr();
        let soft = desired + i1 + i2 + i3 + i4;
        corr += soft * x.conj();
        soft_power += soft.norm_sqr();
    }
    let n = n_symbols as f64;
    let terms =
        UplinkTerms { signal: signal / n, i1: power[0] / n, i2: power[1] / n, i3: power[2] / n, i4: power[3] / n };
    let mut max_cross: f64 = 0.0;
    for i in 0..4 {
        for j in (i + 1)..4 {
            if power[i] > 0.0 && power[j] > 0.0 {
                max_cross = max_cross.max(cross[i][j].norm() / (power[i] * power[j]).sqrt());
            }
        }
    }
    let g = corr / n;
    let residual = soft_power / n - g.norm_sqr();
    Ok(EmpiricalUplink {
        gamma: terms.sinr(),
        gamma_soft: if residual > 0.0 { g.norm_sqr() / residual } else { f64::INFINITY },
        terms,
        max_cross_correlation: max_cross,
    })
}

/// `(1 - tau_p / tau_c) log2(1 + gamma)`.
pub fn ul_se(gamma: f64, tau_p: usize, tau_c: usize) -> f64 {
    let prelog = 1.0 - tau_p as f64 / tau_c as f64;
    (prelog * (1.0 + gamma.max(0.0)).log2()).max(0.0)
}
