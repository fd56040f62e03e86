//! Large-scale gains and small-scale channel draws.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::config::{Dims, FadingMode, NetworkConfig, PathLossModel, UserId};
use crate::error::{Error, Result};
use crate::rng::RandomStream;
use crate::topology::Topology;

/// Linear large-scale gain `beta` between every user and every site.
///
/// Indexed by (user, cell of the site, site), site 0 being the cBS.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaTable {
    dims: Dims,
    values: Vec<f64>,
}

impl BetaTable {
    pub fn from_fn(dims: Dims, mut f: impl FnMut(UserId, usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(dims.users() * dims.cells * dims.sites());
        for u in 0..dims.users() {
            for cell in 0..dims.cells {
                for site in 0..dims.sites() {
                    values.push(f(dims.user(u), cell, site));
                }
            }
        }
        Self { dims, values }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn get(&self, user: UserId, cell: usize, site: usize) -> f64 {
        self.values[self.index(self.dims.flat(user), cell, site)]
    }

    /// `beta` for the site that owns `antenna` of `cell`'s composite vector.
    pub fn at_antenna(&self, user: UserId, cell: usize, antenna: usize) -> f64 {
        self.get(user, cell, self.dims.site_of_antenna(antenna))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn index(&self, user: usize, cell: usize, site: usize) -> usize {
        (user * self.dims.cells + cell) * self.dims.sites() + site
    }
}

/// `beta = 10^((-PL(d) + Z) / 10)` for every (user, site) pair, with
/// independent `Z ~ N(0, sigma_sh^2)` dB drawn only beyond the far breakpoint.
pub fn large_scale(topology: &Topology, model: &PathLossModel, dims: Dims, rng: &mut RandomStream) -> BetaTable {
    BetaTable::from_fn(dims, |user, cell, site| {
        let d = topology.user(user.cell, user.k).distance(&topology.site(cell, site));
        let shadow =
            if model.shadowed(d) && model.shadow_sigma_db > 0.0 { model.shadow_sigma_db * rng.normal() } else { 0.0 };
        10f64.powf((-model.path_loss_db(d) + shadow) / 10.0)
    })
}

/// True channels of every user towards every cell's composite array.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    dims: Dims,
    h: Vec<Complex64>,
}

impl ChannelRealization {
    pub fn zeros(dims: Dims) -> Self {
        Self { dims, h: vec![Complex64::new(0.0, 0.0); dims.users() * dims.cells * dims.antennas()] }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    /// Composite vector `h_{user}^{cell}` of length `M_c`: cBS block, then eAPs.
    pub fn composite(&self, user: UserId, cell: usize) -> &[Complex64] {
        let r = self.range(user, cell);
        &self.h[r]
    }

    pub fn composite_mut(&mut self, user: UserId, cell: usize) -> &mut [Complex64] {
        let r = self.range(user, cell);
        &mut self.h[r]
    }

    /// Channel block between `user` and one site.
    pub fn block(&self, user: UserId, cell: usize, site: usize) -> &[Complex64] {
        &self.composite(user, cell)[self.dims.site_range(site)]
    }

    fn range(&self, user: UserId, cell: usize) -> std::ops::Range<usize> {
        let m = self.dims.antennas();
        let start = (self.dims.flat(user) * self.dims.cells + cell) * m;
        start..start + m
    }
}

/// Small-scale fading on top of `beta`.
///
/// In `iid` mode every antenna draws `CN(0, beta)` independently. In
/// `local_scattering` mode multi-antenna blocks draw `CN(0, beta R)` with `R`
/// the Gaussian local-scattering correlation of a half-wavelength ULA for a
/// uniformly random nominal angle and the configured angular spread.
pub fn draw_channels(beta: &BetaTable, config: &NetworkConfig, rng: &mut RandomStream) -> Result<ChannelRealization> {
    let dims = config.dims();
    if beta.dims() != dims {
        return Err(Error::Dimension(format!("beta table {:?} vs config {:?}", beta.dims(), dims)));
    }
    let spread = config.angular_spread_deg.to_radians();
    let mut out = ChannelRealization::zeros(dims);
    for u in 0..dims.users() {
        let user = dims.user(u);
        for cell in 0..dims.cells {
            for site in 0..dims.sites() {
                let range = dims.site_range(site);
                if range.is_empty() {
                    continue;
                }
                let b = beta.get(user, cell, site);
                let block = &mut out.composite_mut(user, cell)[range];
                match config.fading_mode {
                    FadingMode::LocalScattering if block.len() > 1 => {
                        let angle = rng.uniform_range(-std::f64::consts::PI, std::f64::consts::PI);
                        let root = hermitian_sqrt(&local_scattering_correlation(block.len(), angle, spread));
                        let z: Vec<Complex64> = (0..block.len()).map(|_| rng.complex_normal(1.0)).collect();
                        let s = b.sqrt();
                        for (i, h) in block.iter_mut().enumerate() {
                            *h = s * (0..z.len()).map(|j| root[(i, j)] * z[j]).sum::<Complex64>();
                        }
                    }
                    _ => block.iter_mut().for_each(|h| *h = rng.complex_normal(b)),
                }
            }
        }
    }
    Ok(out)
}

/// Gaussian local-scattering spatial correlation of an `n`-element ULA with
/// half-wavelength spacing, nominal angle `angle` and angular standard
/// deviation `spread` (radians):
///
/// `R[l,m] = exp(j pi (l-m) sin(angle)) exp(-spread^2/2 (pi (l-m) cos(angle))^2)`.
///
/// The diagonal is one, so `tr(R) = n`; at zero spread `R` is the steering
/// vector outer product.
pub fn local_scattering_correlation(n: usize, angle: f64, spread: f64) -> DMatrix<Complex64> {
    let pi = std::f64::consts::PI;
    DMatrix::from_fn(n, n, |l, m| {
        let dist = l as f64 - m as f64;
        let phase = Complex64::from_polar(1.0, pi * dist * angle.sin());
        phase * (-0.5 * spread * spread * (pi * dist * angle.cos()).powi(2)).exp()
    })
}

/// `R^{1/2}` of a Hermitian PSD matrix via its eigendecomposition; tiny
/// negative eigenvalues from rounding are clamped to zero.
pub fn hermitian_sqrt(r: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let eig = r.clone().symmetric_eigen();
    let sqrt_vals = eig.eigenvalues.map(|v| Complex64::new(v.max(0.0).sqrt(), 0.0));
    let v = &eig.eigenvectors;
    v * DMatrix::from_diagonal(&sqrt_vals) * v.adjoint()
}
