//! Models of the potential-profit distribution.
//!
//! Every [`DistributionSpec`] is a parametric (or histogram) family truncated
//! to a window and renormalized there. The experiments use the window
//! `[0, U]` of the grid.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::path::Path;

use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::grid::{Density, Grid};

/// Below this magnitude the GPD shape is treated as exactly zero
/// (exponential).
pub const GPD_EXPONENTIAL_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// Generalized Pareto with location, scale and shape.
    Gpd {
        location: f64,
        scale: f64,
        shape: f64,
    },
    /// Burr XII with shapes `c`, `k` and a scale.
    BurrXii {
        c: f64,
        k: f64,
        scale: f64,
    },
    Normal {
        mean: f64,
        stddev: f64,
    },
    /// Flat over the truncation window.
    Uniform,
    /// Piecewise-constant per-bin density.
    Empirical(Histogram),
}

impl Family {
    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match self {
            Family::Gpd { location, scale, shape } => {
                if !location.is_finite() || !shape.is_finite() {
                    return bad(format!("GPD location/shape must be finite ({location}, {shape})"));
                }
                if !(*scale > 0.0) || !scale.is_finite() {
                    return bad(format!("GPD scale must be positive, got {scale}"));
                }
            }
            Family::BurrXii { c, k, scale } => {
                if !(*c > 0.0 && *k > 0.0 && *scale > 0.0) || !(c.is_finite() && k.is_finite() && scale.is_finite()) {
                    return bad(format!("Burr XII parameters must be positive, got ({c}, {k}, {scale})"));
                }
            }
            Family::Normal { mean, stddev } => {
                if !mean.is_finite() || !(*stddev > 0.0) || !stddev.is_finite() {
                    return bad(format!(
                        "normal needs finite mean and positive stddev, got ({mean}, {stddev})"
                    ));
                }
            }
            Family::Uniform | Family::Empirical(_) => {}
        }
        Ok(())
    }

    fn raw_pdf(&self, x: f64, lo: f64, hi: f64) -> f64 {
        match self {
            Family::Gpd { location, scale, shape } => gpd_pdf(x, *location, *scale, *shape),
            Family::BurrXii { c, k, scale } => burr_pdf(x, *c, *k, *scale),
            Family::Normal { mean, stddev } => std_normal_pdf((x - mean) / stddev) / stddev,
            Family::Uniform => {
                if (lo..=hi).contains(&x) {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            Family::Empirical(h) => h.pdf(x),
        }
    }

    fn raw_cdf(&self, x: f64, lo: f64, hi: f64) -> f64 {
        match self {
            Family::Gpd { location, scale, shape } => gpd_cdf(x, *location, *scale, *shape),
            Family::BurrXii { c, k, scale } => burr_cdf(x, *c, *k, *scale),
            Family::Normal { mean, stddev } => std_normal_cdf((x - mean) / stddev),
            Family::Uniform => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            Family::Empirical(h) => h.cdf(x),
        }
    }
}

fn gpd_pdf(x: f64, location: f64, scale: f64, shape: f64) -> f64 {
    let z = (x - location) / scale;
    if z < 0.0 {
        return 0.0;
    }
    if shape.abs() < GPD_EXPONENTIAL_THRESHOLD {
        return (-z).exp() / scale;
    }
    let t = shape * z;
    if t <= -1.0 {
        return 0.0;
    }
    ((-1.0 / shape - 1.0) * t.ln_1p()).exp() / scale
}

fn gpd_cdf(x: f64, location: f64, scale: f64, shape: f64) -> f64 {
    let z = (x - location) / scale;
    if z <= 0.0 {
        return 0.0;
    }
    if shape.abs() < GPD_EXPONENTIAL_THRESHOLD {
        return -(-z).exp_m1();
    }
    let t = shape * z;
    if t <= -1.0 {
        return 1.0;
    }
    -((-1.0 / shape) * t.ln_1p()).exp_m1()
}

fn burr_pdf(x: f64, c: f64, k: f64, scale: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let u = x / scale;
    let uc = u.powf(c);
    (c * k / scale) * u.powf(c - 1.0) * ((-k - 1.0) * uc.ln_1p()).exp()
}

fn burr_cdf(x: f64, c: f64, k: f64, scale: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let uc = (x / scale).powf(c);
    -(-k * uc.ln_1p()).exp_m1()
}

pub(crate) fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

pub(crate) fn std_normal_cdf(z: f64) -> f64 {
    if z == f64::INFINITY {
        return 1.0;
    }
    if z == f64::NEG_INFINITY {
        return 0.0;
    }
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

/// Histogram density over the bins of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    grid: Grid,
    densities: Vec<f64>,
    cumulative: Vec<f64>,
}

impl Histogram {
    /// `masses` are per-bin probabilities; they are rescaled to sum to one.
    pub fn from_masses(grid: Grid, masses: &[f64]) -> Result<Self> {
        if masses.len() != grid.bins() {
            return Err(Error::InvalidParameter(format!(
                "expected {} bin masses, got {}",
                grid.bins(),
                masses.len()
            )));
        }
        if masses.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::InvalidParameter(
                "bin masses must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = masses.iter().sum();
        if !(total > 0.0) {
            return Err(Error::ZeroMass("histogram has no mass".into()));
        }
        let w = grid.width();
        let densities = masses.iter().map(|m| m / total / w).collect();
        let mut cumulative = Vec::with_capacity(masses.len() + 1);
        let mut acc = 0.0;
        cumulative.push(0.0);
        for m in masses {
            acc += m / total;
            cumulative.push(acc);
        }
        Ok(Self {
            grid,
            densities,
            cumulative,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn densities(&self) -> &[f64] {
        &self.densities
    }

    fn pdf(&self, x: f64) -> f64 {
        match self.grid.bin_of(x) {
            Some(b) => self.densities[b],
            None => 0.0,
        }
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= self.grid.lower() {
            return 0.0;
        }
        if x >= self.grid.upper() {
            return 1.0;
        }
        let b = self.grid.bin_of(x).expect("inside grid");
        let frac = (x - self.grid.bin_lower(b)) / self.grid.width();
        self.cumulative[b] + frac * (self.cumulative[b + 1] - self.cumulative[b])
    }
}

/// A distribution family truncated to `[lo, hi]` and renormalized.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionSpec {
    family: Family,
    lo: f64,
    hi: f64,
    cdf_lo: f64,
    mass: f64,
}

impl DistributionSpec {
    pub fn truncated(family: Family, lo: f64, hi: f64) -> Result<Self> {
        family.validate()?;
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(Error::InvalidParameter(format!(
                "truncation window [{lo}, {hi}] is empty"
            )));
        }
        if matches!(family, Family::Uniform) && !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::InvalidParameter("uniform needs a finite window".into()));
        }
        let cdf_lo = family.raw_cdf(lo, lo, hi);
        let mass = family.raw_cdf(hi, lo, hi) - cdf_lo;
        if !(mass > 0.0) {
            return Err(Error::ZeroMass(format!("window [{lo}, {hi}] carries no probability")));
        }
        Ok(Self {
            family,
            lo,
            hi,
            cdf_lo,
            mass,
        })
    }

    /// Truncated to the grid's range.
    pub fn on_grid(family: Family, grid: &Grid) -> Result<Self> {
        Self::truncated(family, grid.lower(), grid.upper())
    }

    /// The family on its natural support.
    pub fn untruncated(family: Family) -> Result<Self> {
        Self::truncated(family, f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    /// Probability the untruncated family assigns to the window.
    pub fn window_mass(&self) -> f64 {
        self.mass
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < self.lo || x > self.hi {
            return 0.0;
        }
        self.family.raw_pdf(x, self.lo, self.hi) / self.mass
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.lo {
            return 0.0;
        }
        if x >= self.hi {
            return 1.0;
        }
        ((self.family.raw_cdf(x, self.lo, self.hi) - self.cdf_lo) / self.mass).clamp(0.0, 1.0)
    }

    /// Upper end of the family's support, before truncation.
    pub fn support_upper(&self) -> f64 {
        match &self.family {
            Family::Gpd { location, scale, shape } if *shape < -GPD_EXPONENTIAL_THRESHOLD => location - scale / shape,
            Family::Uniform => self.hi,
            Family::Empirical(h) => h.grid().upper(),
            _ => f64::INFINITY,
        }
    }

    /// Mean over the grid window, `b F(b) - a F(a) - ∫ F`, which stays
    /// accurate when the density is narrower than a quadrature cell.
    pub fn mean(&self, grid: &Grid) -> f64 {
        let (a, b) = (grid.lower(), grid.upper());
        b * self.cdf(b) - a * self.cdf(a) - grid.integrate_all(|x| self.cdf(x))
    }
}

impl Density for DistributionSpec {
    fn density(&self, x: f64) -> f64 {
        self.pdf(x)
    }

    /// Exact bin masses from CDF differences.
    fn bin_masses(&self, grid: &Grid) -> Vec<f64> {
        let cdf: Vec<f64> = grid.edges().into_iter().map(|e| self.cdf(e)).collect();
        cdf.windows(2).map(|w| (w[1] - w[0]).max(0.0)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct EmpiricalFit {
    pub spec: DistributionSpec,
    /// Samples outside the grid range that were discarded.
    pub dropped: usize,
}

/// Histogram of `samples` on the bins of `grid`, renormalized over the grid.
pub fn fit_empirical(samples: &[f64], grid: &Grid) -> Result<EmpiricalFit> {
    let mut counts = vec![0.0; grid.bins()];
    let mut dropped = 0;
    for &x in samples {
        match grid.bin_of(x) {
            Some(b) if x.is_finite() => counts[b] += 1.0,
            _ => dropped += 1,
        }
    }
    if dropped == samples.len() {
        return Err(Error::NoSamplesInRange {
            lower: grid.lower(),
            upper: grid.upper(),
            dropped,
        });
    }
    let hist = Histogram::from_masses(*grid, &counts)?;
    let spec = DistributionSpec::on_grid(Family::Empirical(hist), grid)?;
    Ok(EmpiricalFit { spec, dropped })
}

/// Reads one real per line; blank lines and `#` comments are skipped.
pub fn read_samples(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path.as_ref())?;
    parse_samples(&text)
}

pub fn parse_samples(text: &str) -> Result<Vec<f64>> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(i, l)| {
            l.parse::<f64>()
                .map_err(|e| Error::Config(format!("line {}: bad sample {l:?}: {e}", i + 1)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gpd(shape: f64) -> Family {
        Family::Gpd {
            location: 0.0,
            scale: 1.0,
            shape,
        }
    }

    #[test]
    fn exponential_special_case() {
        let d = DistributionSpec::untruncated(gpd(0.0)).unwrap();
        assert!((d.pdf(0.0) - 1.0).abs() < 1e-15);
        assert!((d.cdf(2f64.ln()) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn negative_shape_has_finite_support() {
        let d = DistributionSpec::untruncated(gpd(-0.1)).unwrap();
        assert!((d.support_upper() - 10.0).abs() < 1e-12);
        assert_eq!(d.pdf(10.5), 0.0);
        assert!(d.pdf(9.9) > 0.0);
        assert!((d.cdf(10.0) - 1.0).abs() < 1e-15);
        assert!(d.cdf(9.0) < 1.0);
    }

    #[test]
    fn truncated_cdf_hits_endpoints() {
        let g = Grid::standard();
        for fam in [
            gpd(1.0),
            gpd(-0.1),
            gpd(0.01),
            Family::BurrXii {
                c: 2.0,
                k: 1.0,
                scale: 1.0,
            },
            Family::Normal { mean: 3.0, stddev: 2.0 },
            Family::Uniform,
        ] {
            let d = DistributionSpec::on_grid(fam, &g).unwrap();
            assert_eq!(d.cdf(0.0), 0.0);
            assert!((d.cdf(10.0) - 1.0).abs() < 1e-9);
            assert!((g.integrate_all(|x| d.pdf(x)) - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn uniform_quartile() {
        let d = DistributionSpec::truncated(Family::Uniform, 0.0, 10.0).unwrap();
        assert!((d.cdf(2.5) - 0.25).abs() < 1e-15);
        assert!((d.mean(&Grid::standard()) - 5.0).abs() < 1e-6);
    }

    #[test]
    fn burr_median() {
        let d = DistributionSpec::untruncated(Family::BurrXii {
            c: 2.0,
            k: 1.0,
            scale: 1.0,
        })
        .unwrap();
        assert!((d.cdf(1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn truncated_exponential_mean() {
        let g = Grid::standard();
        let d = DistributionSpec::on_grid(gpd(0.0), &g).unwrap();
        let e10 = (-10f64).exp();
        let expected = (1.0 - 11.0 * e10) / (1.0 - e10);
        assert!((d.mean(&g) - expected).abs() < 1e-6);
    }

    #[test]
    fn narrow_normal_mean() {
        let g = Grid::standard();
        let d = DistributionSpec::on_grid(
            Family::Normal {
                mean: 3.0,
                stddev: 1e-4,
            },
            &g,
        )
        .unwrap();
        assert!((d.mean(&g) - 3.0).abs() < 1e-3);
    }

    #[test]
    fn rejects_bad_parameters() {
        let g = Grid::standard();
        assert!(DistributionSpec::on_grid(
            Family::Gpd {
                location: 0.0,
                scale: 0.0,
                shape: 1.0
            },
            &g
        )
        .is_err());
        assert!(DistributionSpec::on_grid(
            Family::Normal {
                mean: 0.0,
                stddev: -1.0
            },
            &g
        )
        .is_err());
        assert!(DistributionSpec::on_grid(
            Family::BurrXii {
                c: 0.0,
                k: 1.0,
                scale: 1.0
            },
            &g
        )
        .is_err());
        // window entirely past the GPD support
        assert!(matches!(
            DistributionSpec::truncated(gpd(-0.5), 3.0, 4.0),
            Err(Error::ZeroMass(_))
        ));
        assert!(DistributionSpec::untruncated(Family::Uniform).is_err());
    }

    #[test]
    fn empirical_point_mass() {
        let g = Grid::standard();
        let fit = fit_empirical(&[5.0; 20], &g).unwrap();
        assert_eq!(fit.dropped, 0);
        let masses = fit.spec.bin_masses(&g);
        let b = g.bin_of(5.0).unwrap();
        assert!((masses[b] - 1.0).abs() < 1e-12);
        assert!((fit.spec.mean(&g) - (g.midpoint(b))).abs() < 1e-9);
    }

    #[test]
    fn empirical_drops_out_of_range() {
        let g = Grid::standard();
        let fit = fit_empirical(&[1.0, 2.0, -1.0, 11.0, f64::NAN], &g).unwrap();
        assert_eq!(fit.dropped, 3);
        assert!(matches!(fit_empirical(&[], &g), Err(Error::NoSamplesInRange { .. })));
        assert!(matches!(
            fit_empirical(&[-4.0, 12.0], &g),
            Err(Error::NoSamplesInRange { dropped: 2, .. })
        ));
    }

    #[test]
    fn parses_sample_text() {
        let v = parse_samples("1.5\n\n# comment\n  2\n").unwrap();
        assert_eq!(v, vec![1.5, 2.0]);
        assert!(parse_samples("1.5\nabc\n").is_err());
    }
}
