//! Blinding kernels: compounding the true profit distribution with a
//! participant's noisy view of its own profit.
//!
//! The kernel centered at true profit `x` is a Normal(x, sigma) truncated to
//! the grid and renormalized per center, so signals near the edges are not
//! mass-deficient. Gaussian factors are integrated exactly over each
//! quadrature cell, which keeps narrow kernels (sigma far below the cell
//! width) well defined.

use crate::distributions::std_normal_cdf;
use crate::error::{Error, Result};
use crate::grid::{Density, Grid, Kind, Layout, Tabulated};

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "blinding stddev must be positive and finite, got {sigma}"
        )));
    }
    Ok(())
}

/// Per-cell factors `f(x) / Z(x)` shared by [`blind`] and [`posterior`],
/// where `Z(x)` is the truncation mass of the kernel centered at `x`.
struct CompoundWeights {
    grid: Grid,
    sigma: f64,
    weights: Vec<f64>,
}

impl CompoundWeights {
    fn new<D: Density + ?Sized>(f: &D, sigma: f64, grid: &Grid) -> Self {
        let (lo, hi) = (grid.lower(), grid.upper());
        let weights = grid
            .cell_midpoints()
            .into_iter()
            .map(|x| {
                let p = f.density(x);
                if p == 0.0 {
                    return 0.0;
                }
                let z = std_normal_cdf((hi - x) / sigma) - std_normal_cdf((lo - x) / sigma);
                if z > 0.0 {
                    p / z
                } else {
                    0.0
                }
            })
            .collect();
        Self {
            grid: *grid,
            sigma,
            weights,
        }
    }

    /// Kernel mass that each quadrature cell (as the true-profit range)
    /// assigns to the point `signal`, i.e. the integral over the cell of
    /// `phi((signal - x) / sigma) / sigma`.
    fn cell_kernel(&self, signal: f64) -> Vec<f64> {
        let dq = self.grid.cell_width();
        let lower = self.grid.lower();
        let n = self.grid.cells();
        let edge_cdf: Vec<f64> = (0..=n)
            .map(|i| std_normal_cdf((signal - (lower + i as f64 * dq)) / self.sigma))
            .collect();
        edge_cdf.windows(2).map(|w| (w[0] - w[1]).max(0.0)).collect()
    }

    /// `∫ f(x) mu_x(signal) dx`.
    fn compound_at(&self, signal: f64) -> f64 {
        self.cell_kernel(signal)
            .iter()
            .zip(&self.weights)
            .map(|(k, w)| k * w)
            .sum()
    }
}

/// Compound density `g(psi) = ∫ f(x) mu_x(psi) dx`, tabulated at bin
/// midpoints and renormalized to unit mass.
pub fn blind<D: Density + ?Sized>(f: &D, sigma: f64, grid: &Grid) -> Result<Tabulated> {
    check_sigma(sigma)?;
    let cw = CompoundWeights::new(f, sigma, grid);
    let values = grid.midpoints().into_iter().map(|m| cw.compound_at(m)).collect();
    Tabulated::new(*grid, Layout::Midpoints, Kind::Density, values)?.normalized()
}

/// Belief over the true profit after observing `signal`: proportional to
/// `f(x) mu_x(signal)`, tabulated per quadrature cell.
pub fn posterior<D: Density + ?Sized>(f: &D, sigma: f64, signal: f64, grid: &Grid) -> Result<Tabulated> {
    check_sigma(sigma)?;
    if !grid.contains(signal) {
        return Err(Error::InvalidParameter(format!(
            "signal {signal} outside [{}, {}]",
            grid.lower(),
            grid.upper()
        )));
    }
    PosteriorFamily::new(f, sigma, grid).posterior(signal)
}

/// Posteriors for many signals under one `(f, sigma)` pair.
pub struct PosteriorFamily {
    inner: CompoundWeights,
}

impl PosteriorFamily {
    pub fn new<D: Density + ?Sized>(f: &D, sigma: f64, grid: &Grid) -> Self {
        Self {
            inner: CompoundWeights::new(f, sigma, grid),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.inner.grid
    }

    pub fn posterior(&self, signal: f64) -> Result<Tabulated> {
        let grid = self.inner.grid;
        let dq = grid.cell_width();
        let mut values: Vec<f64> = self
            .inner
            .cell_kernel(signal)
            .iter()
            .zip(&self.inner.weights)
            .map(|(k, w)| k * w / dq)
            .collect();
        let mass: f64 = values.iter().sum::<f64>() * dq;
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::ZeroMass(format!("posterior at signal {signal} has mass {mass}")));
        }
        for v in &mut values {
            *v /= mass;
        }
        Tabulated::new(grid, Layout::Cells, Kind::Density, values)
    }
}

/// The compounded densities used by the blinded game: `g` (bidder belief,
/// also the center's objective weight) and `h` (the center's budget weight).
#[derive(Debug, Clone)]
pub struct BlindedModel {
    pub mu_sigma: f64,
    pub w_sigma: f64,
    pub g: Tabulated,
    pub h: Tabulated,
}

impl BlindedModel {
    pub fn new<D: Density + ?Sized>(f: &D, mu_sigma: f64, w_sigma: f64, grid: &Grid) -> Result<Self> {
        let g = blind(f, mu_sigma, grid)?;
        let h = if w_sigma == mu_sigma {
            g.clone()
        } else {
            blind(f, w_sigma, grid)?
        };
        Ok(Self {
            mu_sigma,
            w_sigma,
            g,
            h,
        })
    }
}
