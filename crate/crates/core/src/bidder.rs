//! Bidder best responses.
//!
//! A bidder with potential profit `psi` who shades by `s` either still wins
//! and regrets the payment `r(psi - s)`, or loses and regrets the whole
//! `psi`. Best responses minimize that regret in expectation over the
//! bidder's belief about `psi`.

use rayon::prelude::*;

use crate::blinding::{blind, PosteriorFamily};
use crate::brent;
use crate::center::PaymentRule;
use crate::error::{Error, Result};
use crate::grid::{Density, Grid, Kind, Layout, Tabulated};

/// Minima whose values are within this relative distance of the best are
/// considered tied; the smallest shade among them wins.
pub const TIE_TOLERANCE: f64 = 1e-9;

const BRENT_XTOL: f64 = 1e-10;
const BRENT_MAX_ITER: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub enum Strategy {
    /// The same shade at every profit level.
    Constant(f64),
    /// Shade as a function of the (blinded) profit signal, on bin midpoints.
    Functional(Tabulated),
}

impl Strategy {
    pub fn truthful() -> Self {
        Strategy::Constant(0.0)
    }

    pub fn constant(shade: f64) -> Result<Self> {
        if !(shade >= 0.0) || !shade.is_finite() {
            return Err(Error::InvalidParameter(format!("shade must be >= 0, got {shade}")));
        }
        Ok(Strategy::Constant(shade))
    }

    pub fn functional(tab: Tabulated) -> Result<Self> {
        if tab.layout() != Layout::Midpoints {
            return Err(Error::InvalidParameter(
                "functional strategies live on bin midpoints".into(),
            ));
        }
        let upper = tab.grid().upper() - tab.grid().lower();
        if let Some(v) = tab.values().iter().find(|v| !(**v >= 0.0 && **v <= upper)) {
            return Err(Error::InvalidParameter(format!("shade {v} outside [0, {upper}]")));
        }
        let tab = if tab.kind() == Kind::Strategy {
            tab
        } else {
            Tabulated::new(*tab.grid(), Layout::Midpoints, Kind::Strategy, tab.values().to_vec())?
        };
        Ok(Strategy::Functional(tab))
    }

    pub fn shade_at(&self, psi: f64) -> f64 {
        match self {
            Strategy::Constant(s) => *s,
            Strategy::Functional(tab) => tab.eval(psi),
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Strategy::Constant(s) => Some(*s),
            Strategy::Functional(_) => None,
        }
    }

    /// Shade at every bin midpoint.
    pub fn node_values(&self, grid: &Grid) -> Vec<f64> {
        grid.midpoints().into_iter().map(|m| self.shade_at(m)).collect()
    }

    pub fn to_tabulated(&self, grid: &Grid) -> Tabulated {
        Tabulated::new(*grid, Layout::Midpoints, Kind::Strategy, self.node_values(grid)).expect("shades are finite")
    }

    pub fn sup_distance(&self, other: &Strategy, grid: &Grid) -> f64 {
        match (self, other) {
            (Strategy::Constant(a), Strategy::Constant(b)) => (a - b).abs(),
            _ => self
                .node_values(grid)
                .iter()
                .zip(other.node_values(grid))
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        }
    }

    /// `(1 - alpha) * self + alpha * other`.
    pub fn damp(&self, other: &Strategy, alpha: f64, grid: &Grid) -> Strategy {
        match (self, other) {
            (Strategy::Constant(a), Strategy::Constant(b)) => {
                Strategy::Constant(((1.0 - alpha) * a + alpha * b).max(0.0))
            }
            _ => {
                let values = self
                    .node_values(grid)
                    .iter()
                    .zip(other.node_values(grid))
                    .map(|(a, b)| ((1.0 - alpha) * a + alpha * b).max(0.0))
                    .collect();
                Strategy::Functional(
                    Tabulated::new(*grid, Layout::Midpoints, Kind::Strategy, values).expect("finite shades"),
                )
            }
        }
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W, grid: &Grid) -> Result<()> {
        self.to_tabulated(grid).write_csv(writer, "shade")
    }
}

/// Expected retained regret as a function of a constant shade, for one
/// belief and one rule. The belief is sampled once on the quadrature cells.
#[derive(Debug, Clone)]
pub struct ShadeProblem<'a> {
    rule: &'a PaymentRule,
    grid: Grid,
    points: Vec<f64>,
    weights: Vec<f64>,
}

/// A minimizing shade and the regret it leaves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShadeChoice {
    pub shade: f64,
    pub regret: f64,
}

impl<'a> ShadeProblem<'a> {
    pub fn new<D: Density + ?Sized>(rule: &'a PaymentRule, belief: &D, grid: &Grid) -> Self {
        Self::from_cell_density(rule, &belief.on_cells(grid), grid)
    }

    fn from_cell_density(rule: &'a PaymentRule, density: &[f64], grid: &Grid) -> Self {
        let dq = grid.cell_width();
        let (points, weights) = grid
            .cell_midpoints()
            .into_iter()
            .zip(density)
            .filter(|(_, d)| **d > 0.0)
            .map(|(x, d)| (x, d * dq))
            .unzip();
        Self {
            rule,
            grid: *grid,
            points,
            weights,
        }
    }

    /// `∫ (1[psi >= s] r(psi - s) + 1[psi < s] psi) belief(psi) dpsi`.
    ///
    /// The belief is constant on each cell; the cell holding the shade is
    /// split there, so the objective is continuous in `s`.
    pub fn objective(&self, shade: f64) -> f64 {
        let half = 0.5 * self.grid.cell_width();
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&psi, &w)| {
                let (a, b) = (psi - half, psi + half);
                if b <= shade {
                    w * psi
                } else if a >= shade {
                    w * self.rule_mean(a - shade, b - shade)
                } else {
                    let lost = (shade - a) / (b - a);
                    w * (lost * 0.5 * (a + shade) + (1.0 - lost) * self.rule_mean(0.0, b - shade))
                }
            })
            .sum()
    }

    /// Mean of the rule over `[x0, x1]`, exact for the piecewise-linear
    /// interpolant. The interval is narrower than a bin, so at most one
    /// node falls inside it.
    fn rule_mean(&self, x0: f64, x1: f64) -> f64 {
        let h = self.grid.width();
        let lower = self.grid.lower();
        let n = self.grid.bins();
        let k = ((x0 - lower) / h - 0.5).floor() + 1.0;
        if k >= 0.0 && (k as usize) < n {
            let m = lower + (k + 0.5) * h;
            if m > x0 && m < x1 {
                let left = (m - x0) * self.rule.eval(0.5 * (x0 + m));
                let right = (x1 - m) * self.rule.eval(0.5 * (m + x1));
                return (left + right) / (x1 - x0);
            }
        }
        self.rule.eval(0.5 * (x0 + x1))
    }

    /// Lower bound on [`Self::objective`] over shades in `[lo, hi]`, taking
    /// the best case separately for every cell.
    pub fn lower_bound(&self, lo: f64, hi: f64) -> f64 {
        let half = 0.5 * self.grid.cell_width();
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&psi, &w)| {
                let (a, b) = (psi - half, psi + half);
                let v = if b <= lo {
                    psi
                } else if a >= hi {
                    self.rule.min_over(psi - hi, psi - lo)
                } else {
                    a.max(0.0).min(self.rule.min_over(0.0, (b - lo).max(0.0)))
                };
                w * v
            })
            .sum()
    }

    /// Regret of a truthful report.
    pub fn truthful(&self) -> f64 {
        self.objective(0.0)
    }

    /// Grid scan at bin-width spacing over `[0, U]`, Brent refinement around
    /// every local minimum of the scan, then the smallest shade among the
    /// (near-)tied best minima.
    pub fn best_response(&self) -> ShadeChoice {
        let h = self.grid.width();
        let span = self.grid.upper() - self.grid.lower();
        let n = self.grid.bins();
        let candidates: Vec<f64> = (0..=n).map(|j| if j == n { span } else { j as f64 * h }).collect();
        let values: Vec<f64> = candidates.iter().map(|&s| self.objective(s)).collect();

        let mut local: Vec<usize> = (0..=n)
            .filter(|&j| {
                let left = if j > 0 { values[j - 1] } else { f64::INFINITY };
                let right = if j < n { values[j + 1] } else { f64::INFINITY };
                values[j] <= left && values[j] <= right
            })
            .collect();
        local.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));

        // Brackets whose lower bound cannot reach the running best are not
        // refined; they could not enter the tie set anyway.
        let mut running = values.iter().copied().fold(f64::INFINITY, f64::min);
        let mut minima = Vec::with_capacity(local.len());
        for j in local {
            let lo = candidates[j.saturating_sub(1)];
            let hi = candidates[(j + 1).min(n)];
            let mut choice = ShadeChoice {
                shade: candidates[j],
                regret: values[j],
            };
            if self.lower_bound(lo, hi) <= running + TIE_TOLERANCE * (1.0 + running.abs()) {
                let refined = brent::minimize(|s| self.objective(s), lo, hi, BRENT_XTOL, BRENT_MAX_ITER);
                if refined.value < values[j] {
                    choice = ShadeChoice {
                        shade: refined.x,
                        regret: refined.value,
                    };
                }
                running = running.min(choice.regret);
            }
            minima.push(choice);
        }

        let best = minima.iter().map(|m| m.regret).fold(f64::INFINITY, f64::min);
        let tol = TIE_TOLERANCE * (1.0 + best.abs());
        minima
            .into_iter()
            .filter(|m| m.regret <= best + tol)
            .min_by(|a, b| a.shade.abs().total_cmp(&b.shade.abs()))
            .expect("the scan always has a minimum")
    }
}

pub fn shade_objective<D: Density + ?Sized>(shade: f64, rule: &PaymentRule, belief: &D, grid: &Grid) -> f64 {
    ShadeProblem::new(rule, belief, grid).objective(shade)
}

pub fn best_response_constant<D: Density + ?Sized>(rule: &PaymentRule, belief: &D, grid: &Grid) -> f64 {
    ShadeProblem::new(rule, belief, grid).best_response().shade
}

/// Posterior beliefs for every blinded signal at a bin midpoint, together
/// with how often each signal occurs (bin masses of the compound density).
pub struct SignalBeliefs {
    grid: Grid,
    signals: Vec<f64>,
    signal_weights: Vec<f64>,
    beliefs: Vec<Vec<f64>>,
}

impl SignalBeliefs {
    pub fn new<D: Density + ?Sized>(f: &D, mu_sigma: f64, grid: &Grid) -> Result<Self> {
        let g = blind(f, mu_sigma, grid)?;
        let family = PosteriorFamily::new(f, mu_sigma, grid);
        let signals = grid.midpoints();
        let beliefs = signals
            .par_iter()
            .map(|&s| family.posterior(s).map(|p| p.values().to_vec()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            grid: *grid,
            signals,
            signal_weights: g.bin_masses(grid),
            beliefs,
        })
    }

    pub fn signals(&self) -> &[f64] {
        &self.signals
    }

    pub fn signal_weights(&self) -> &[f64] {
        &self.signal_weights
    }

    fn problem<'a>(&self, rule: &'a PaymentRule, i: usize) -> ShadeProblem<'a> {
        ShadeProblem::from_cell_density(rule, &self.beliefs[i], &self.grid)
    }

    /// Best shade for each signal.
    pub fn best_responses(&self, rule: &PaymentRule) -> Vec<ShadeChoice> {
        (0..self.signals.len())
            .into_par_iter()
            .map(|i| self.problem(rule, i).best_response())
            .collect()
    }

    pub fn best_response(&self, rule: &PaymentRule) -> Strategy {
        let values = self.best_responses(rule).iter().map(|c| c.shade).collect();
        Strategy::Functional(
            Tabulated::new(self.grid, Layout::Midpoints, Kind::Strategy, values).expect("finite shades"),
        )
    }

    /// Expected regret, averaged over signals, of playing `strategy`.
    pub fn expected_regret(&self, rule: &PaymentRule, strategy: &Strategy) -> f64 {
        (0..self.signals.len())
            .into_par_iter()
            .map(|i| self.signal_weights[i] * self.problem(rule, i).objective(strategy.shade_at(self.signals[i])))
            .collect::<Vec<_>>()
            .iter()
            .sum()
    }

    pub fn blinded_regret(&self, rule: &PaymentRule) -> BlindedRegret {
        let per_signal: Vec<(f64, f64)> = (0..self.signals.len())
            .into_par_iter()
            .map(|i| {
                let p = self.problem(rule, i);
                (p.truthful(), p.best_response().regret)
            })
            .collect();
        let truthful = per_signal
            .iter()
            .zip(&self.signal_weights)
            .map(|((t, _), w)| t * w)
            .sum();
        let best = per_signal
            .iter()
            .zip(&self.signal_weights)
            .map(|((_, b), w)| b * w)
            .sum();
        BlindedRegret {
            truthful,
            best_response: best,
            deviation_incentive: truthful - best,
        }
    }
}

/// Functional best response: one constant-shade problem per blinded signal,
/// each against the posterior for that signal.
pub fn best_response_functional<D: Density + ?Sized>(
    rule: &PaymentRule,
    f: &D,
    mu_sigma: f64,
    grid: &Grid,
) -> Result<Strategy> {
    Ok(SignalBeliefs::new(f, mu_sigma, grid)?.best_response(rule))
}

/// Expected regret under blinding, truthful versus best responding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlindedRegret {
    /// Signal-averaged regret of reporting truthfully.
    pub truthful: f64,
    /// Signal-averaged regret under the per-signal best response.
    pub best_response: f64,
    /// What the bidder gains by best responding.
    pub deviation_incentive: f64,
}

pub fn blinded_regret_di<D: Density + ?Sized>(rule: &PaymentRule, f: &D, mu_sigma: f64, grid: &Grid) -> Result<f64> {
    Ok(SignalBeliefs::new(f, mu_sigma, grid)?
        .blinded_regret(rule)
        .deviation_incentive)
}
