//! Pilot assignment and MMSE channel estimation.

use num_complex::Complex64;

use crate::config::{Dims, NetworkConfig, UserId};
use crate::error::{ConfigError, Error, Result};
use crate::propagation::{BetaTable, ChannelRealization};
use crate::rng::RandomStream;

/// Pilot index of every user.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PilotBook {
    dims: Dims,
    assignment: Vec<usize>,
}

impl PilotBook {
    pub fn pilot(&self, user: UserId) -> usize {
        self.assignment[self.dims.flat(user)]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }
}

/// User `k` of every cell gets pilot `k`, so pilots are orthogonal inside a
/// cell and reused across cells.
pub fn assign_pilots(config: &NetworkConfig) -> Result<PilotBook> {
    if config.users_per_cell > config.tau_p {
        return Err(
            ConfigError::new(format!("K_c ({}) exceeds tau_p ({})", config.users_per_cell, config.tau_p)).into()
        );
    }
    let dims = config.dims();
    let assignment = (0..dims.users()).map(|u| dims.user(u).k).collect();
    Ok(PilotBook { dims, assignment })
}

/// Per-antenna MMSE estimate variance `p beta^2 / (p beta + sigma^2)`.
pub fn mmse_alpha(p_u: f64, beta: f64, sigma_n2: f64) -> Result<f64> {
    if !(p_u > 0.0 && beta > 0.0 && sigma_n2 > 0.0) {
        return Err(Error::Domain(format!(
            "mmse_alpha needs positive inputs, got p_u={p_u}, beta={beta}, sigma2={sigma_n2}"
        )));
    }
    Ok(p_u * beta * beta / (p_u * beta + sigma_n2))
}

/// Serving-cell channel estimates and the estimate variance of every pair.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateSet {
    dims: Dims,
    /// `alpha` per (user, cell, site), same layout as [`BetaTable`].
    alpha: BetaTable,
    /// Estimate of each user's composite channel towards its own cell.
    hhat: Vec<Complex64>,
    /// `h - hhat` on the same support.
    htilde: Vec<Complex64>,
}

impl EstimateSet {
    /// Assemble from explicit parts; `hhat` and `htilde` hold one composite
    /// vector of length `M_c` per user.
    pub fn from_parts(alpha: BetaTable, hhat: Vec<Complex64>, htilde: Vec<Complex64>) -> Result<Self> {
        let dims = alpha.dims();
        let expected = dims.users() * dims.antennas();
        if hhat.len() != expected || htilde.len() != expected {
            return Err(Error::Dimension(format!(
                "estimates need {expected} entries, got {} and {}",
                hhat.len(),
                htilde.len()
            )));
        }
        Ok(Self { dims, alpha, hhat, htilde })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn alpha(&self, user: UserId, cell: usize, site: usize) -> f64 {
        self.alpha.get(user, cell, site)
    }

    pub fn alpha_table(&self) -> &BetaTable {
        &self.alpha
    }

    /// `hhat_{user}^{c}` for the user's own cell `c`.
    pub fn hhat(&self, user: UserId) -> &[Complex64] {
        let m = self.dims.antennas();
        let u = self.dims.flat(user);
        &self.hhat[u * m..(u + 1) * m]
    }

    pub fn htilde(&self, user: UserId) -> &[Complex64] {
        let m = self.dims.antennas();
        let u = self.dims.flat(user);
        &self.htilde[u * m..(u + 1) * m]
    }
}

/// Estimate variances for every pair without drawing any estimates.
pub fn alpha_table(beta: &BetaTable, pilot_power: f64, sigma_n2: f64) -> Result<BetaTable> {
    let dims = beta.dims();
    let mut err = None;
    let table = BetaTable::from_fn(dims, |user, cell, site| {
        mmse_alpha(pilot_power, beta.get(user, cell, site), sigma_n2).unwrap_or_else(|e| {
            err.get_or_insert(e);
            f64::NAN
        })
    });
    match err {
        Some(e) => Err(e),
        None => Ok(table),
    }
}

/// MMSE estimates of each user's serving-cell channel.
///
/// `hhat = (alpha / beta) (h + w)` with `w ~ CN(0, sigma^2 / p I)`, which makes
/// `hhat ~ CN(0, alpha)` and the error `h - hhat ~ CN(0, beta - alpha)`
/// independent of it. `p` is `p_u`, or `tau_p p_u` with `pilot_gain`.
pub fn estimate_channels(
    channels: &ChannelRealization,
    beta: &BetaTable,
    pilots: &PilotBook,
    config: &NetworkConfig,
    rng: &mut RandomStream,
) -> Result<EstimateSet> {
    let dims = config.dims();
    if channels.dims() != dims || beta.dims() != dims || pilots.dims != dims {
        return Err(Error::Dimension("channels, beta and pilots disagree with config".into()));
    }
    let sigma2 = config.noise_power()?;
    let p = config.pilot_power();
    let alpha = alpha_table(beta, p, sigma2)?;
    let noise_var = sigma2 / p;

    let m = dims.antennas();
    let mut hhat = Vec::with_capacity(dims.users() * m);
    let mut htilde = Vec::with_capacity(dims.users() * m);
    for u in 0..dims.users() {
        let user = dims.user(u);
        let h = channels.composite(user, user.cell);
        for (a, &ha) in h.iter().enumerate() {
            let site = dims.site_of_antenna(a);
            let scale = alpha.get(user, user.cell, site) / beta.get(user, user.cell, site);
            let est = scale * (ha + rng.complex_normal(noise_var));
            hhat.push(est);
            htilde.push(ha - est);
        }
    }
    EstimateSet::from_parts(alpha, hhat, htilde)
}
