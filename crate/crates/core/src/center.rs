//! The center's best response.
//!
//! Discretized, the center picks one payment level `r_b` per bin to minimize
//! expected regret at truth `Σ c_b r_b` subject to collecting the budget
//! under the bidder's shading, `Σ w_b r_b ≥ k`, and the envelope
//! `0 ≤ r_b ≤ midpoint(b)`. With a single linear constraint and box bounds
//! this is a continuous knapsack: filling bins in decreasing order of
//! `w_b / c_b` is optimal, and at most one bin ends strictly inside its
//! bounds.

use crate::bidder::Strategy;
use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::grid::{node_coordinate, Density, Grid, Kind, Layout, Tabulated};

/// Payment above the critical value, one value per bin midpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct PaymentRule {
    tab: Tabulated,
}

impl PaymentRule {
    /// Fails unless `0 ≤ r_b ≤ midpoint(b)` for every bin.
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        let tab = Tabulated::new(grid, Layout::Midpoints, Kind::Rule, values)?;
        Self::from_tabulated(tab)
    }

    pub fn from_tabulated(tab: Tabulated) -> Result<Self> {
        if tab.layout() != Layout::Midpoints {
            return Err(Error::InvalidParameter("payment rules live on bin midpoints".into()));
        }
        let grid = *tab.grid();
        for (b, &r) in tab.values().iter().enumerate() {
            let cap = grid.midpoint(b);
            if !(0.0..=cap).contains(&r) {
                return Err(Error::InvalidParameter(format!(
                    "payment {r} at psi = {cap} violates 0 <= r <= psi"
                )));
            }
        }
        let tab = if tab.kind() == Kind::Rule {
            tab
        } else {
            Tabulated::new(grid, Layout::Midpoints, Kind::Rule, tab.values().to_vec())?
        };
        Ok(Self { tab })
    }

    /// Clamps `f` into the envelope at every midpoint.
    pub fn from_fn<F: Fn(f64) -> f64>(grid: Grid, f: F) -> Self {
        let values = grid.midpoints().into_iter().map(|m| f(m).clamp(0.0, m)).collect();
        Self::new(grid, values).expect("clamped values are inside the envelope")
    }

    /// The VCG rule: nothing charged above the critical value.
    pub fn vcg(grid: Grid) -> Self {
        Self::from_fn(grid, |_| 0.0)
    }

    /// Charges the whole potential profit, `r(psi) = psi`.
    pub fn zero_discount(grid: Grid) -> Self {
        Self::from_fn(grid, |x| x)
    }

    pub fn grid(&self) -> &Grid {
        self.tab.grid()
    }

    pub fn values(&self) -> &[f64] {
        self.tab.values()
    }

    pub fn tabulated(&self) -> &Tabulated {
        &self.tab
    }

    pub fn eval(&self, psi: f64) -> f64 {
        self.tab.eval(psi)
    }

    /// Smallest value of the interpolated rule on `[a, b]`.
    pub fn min_over(&self, a: f64, b: f64) -> f64 {
        let grid = self.grid();
        let n = grid.bins();
        let (first, h) = (grid.midpoint(0), grid.width());
        let mut m = self.eval(a).min(self.eval(b));
        let lo = ((a - first) / h).ceil().max(0.0);
        let hi = ((b - first) / h).floor().min((n - 1) as f64);
        if lo <= hi {
            for k in lo as usize..=hi as usize {
                m = m.min(self.values()[k]);
            }
        }
        m
    }

    /// Total payment `v_C + r(psi)` for a report with potential profit `psi`
    /// above the critical value `v_C`.
    pub fn payment(&self, critical_value: f64, psi: f64) -> f64 {
        critical_value + self.eval(psi)
    }

    /// Expected regret of a truthful bidder, `∫ r(psi) f(psi) dpsi`.
    pub fn regret_at_truth<D: Density + ?Sized>(&self, f: &D) -> f64 {
        self.grid().integrate_all(|x| self.eval(x) * f.density(x))
    }

    /// Largest payment above the critical value.
    pub fn worst_case_regret(&self) -> f64 {
        self.values().iter().copied().fold(0.0, f64::max)
    }

    /// Bins strictly between the bounds, with slack `tol`.
    pub fn interior_bins(&self, tol: f64) -> Vec<usize> {
        let grid = self.grid();
        self.values()
            .iter()
            .enumerate()
            .filter(|(b, r)| **r > tol && **r < grid.midpoint(*b) - tol)
            .map(|(b, _)| b)
            .collect()
    }

    /// Bins charging their full potential profit (within `tol`).
    pub fn charged_bins(&self, tol: f64) -> Vec<bool> {
        let grid = self.grid();
        self.values()
            .iter()
            .enumerate()
            .map(|(b, r)| *r >= grid.midpoint(b) - tol)
            .collect()
    }

    pub fn sup_distance(&self, other: &PaymentRule) -> f64 {
        self.values()
            .iter()
            .zip(other.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `(1 - alpha) * self + alpha * other`, kept inside the envelope.
    pub fn damp(&self, other: &PaymentRule, alpha: f64) -> PaymentRule {
        let grid = *self.grid();
        let values = self
            .values()
            .iter()
            .zip(other.values())
            .enumerate()
            .map(|(b, (a, o))| ((1.0 - alpha) * a + alpha * o).clamp(0.0, grid.midpoint(b)))
            .collect();
        PaymentRule::new(grid, values).expect("convex combination stays in the envelope")
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        self.tab.write_csv(writer, "payment_above_critical")
    }

    pub fn read_csv<R: std::io::Read>(reader: R, grid: Grid) -> Result<Self> {
        Self::from_tabulated(Tabulated::read_csv(reader, grid, Kind::Rule)?)
    }
}

/// The amount the rule has to collect: `k = gamma * k_vcg`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    pub gamma: f64,
    pub k_vcg: f64,
    pub k: f64,
}

impl Budget {
    pub fn new(gamma: f64, k_vcg: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::InvalidParameter(format!("gamma {gamma} outside [0, 1]")));
        }
        if !(k_vcg > 0.0) || !k_vcg.is_finite() {
            return Err(Error::InvalidParameter(format!("k_vcg must be positive, got {k_vcg}")));
        }
        Ok(Self {
            gamma,
            k_vcg,
            k: gamma * k_vcg,
        })
    }

    pub fn for_distribution<D: Density + ?Sized>(gamma: f64, f: &D, grid: &Grid) -> Result<Self> {
        Self::new(gamma, k_vcg(f, grid))
    }
}

/// Total VCG surplus `∫ psi f(psi) dpsi`.
pub fn k_vcg<D: Density + ?Sized>(f: &D, grid: &Grid) -> f64 {
    grid.integrate_all(|x| x * f.density(x))
}

/// Budget weight of each rule node.
///
/// Bin `b` carries `masses[b]` of true profit at its midpoint; the bidder
/// there reports `midpoint(b) - s(midpoint(b))`, and that position is
/// scattered onto the two neighbouring rule nodes with linear-interpolation
/// weights. Reports below zero lose and pay nothing; reports past the last
/// node clamp to it.
pub fn constraint_weights(strategy: &Strategy, masses: &[f64], grid: &Grid) -> Vec<f64> {
    assert_eq!(masses.len(), grid.bins(), "one mass per bin");
    let n = grid.bins();
    let first = grid.midpoint(0);
    let step = grid.width();
    let mut w = vec![0.0; n];
    for (b, &m) in masses.iter().enumerate() {
        if m == 0.0 {
            continue;
        }
        let psi = grid.midpoint(b);
        let report = psi - strategy.shade_at(psi);
        if report < 0.0 {
            continue;
        }
        let t = node_coordinate(first, step, report);
        if t <= 0.0 {
            w[0] += m;
        } else if t >= (n - 1) as f64 {
            w[n - 1] += m;
        } else {
            let i = t.floor() as usize;
            let a = t - i as f64;
            w[i] += m * (1.0 - a);
            if a > 0.0 {
                w[i + 1] += m * a;
            }
        }
    }
    w
}

/// The discretized center program `min c·r  s.t.  w·r ≥ k, 0 ≤ r ≤ cap`.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterLp {
    pub costs: Vec<f64>,
    pub weights: Vec<f64>,
    pub caps: Vec<f64>,
}

impl CenterLp {
    pub fn new(costs: Vec<f64>, weights: Vec<f64>, caps: Vec<f64>) -> Self {
        assert!(
            costs.len() == weights.len() && weights.len() == caps.len(),
            "LP vectors must have equal length"
        );
        Self { costs, weights, caps }
    }

    pub fn objective(&self, r: &[f64]) -> f64 {
        self.costs.iter().zip(r).map(|(c, r)| c * r).sum()
    }

    pub fn collected(&self, r: &[f64]) -> f64 {
        self.weights.iter().zip(r).map(|(w, r)| w * r).sum()
    }

    pub fn max_collectible(&self) -> f64 {
        self.weights.iter().zip(&self.caps).map(|(w, c)| w * c).sum()
    }

    /// `w_b / c_b`; infinite where only the constraint sees the bin, zero
    /// where the constraint does not.
    pub fn ratios(&self) -> Vec<f64> {
        self.costs
            .iter()
            .zip(&self.weights)
            .map(|(&c, &w)| ratio(w, c))
            .collect()
    }

    /// Fill order: decreasing ratio, lower index first among exact ties.
    /// Bins the constraint cannot see are left out.
    pub fn greedy_order(&self) -> Vec<usize> {
        let ratios = self.ratios();
        let order: Vec<usize> = (0..ratios.len())
            .filter(|&b| self.weights[b] > 0.0 && self.caps[b] > 0.0)
            .collect();
        descending_order(&ratios, order)
    }

    fn check_feasible(&self, k: f64) -> Result<()> {
        let max = self.max_collectible();
        if k > max * (1.0 + 1e-12) {
            return Err(Error::Infeasible {
                required: k,
                max_collectible: max,
            });
        }
        Ok(())
    }

    /// Fills bins to their caps in `order` until `k` is collected; the last
    /// bin touched is set fractionally so the budget binds.
    pub fn fill_in_order(&self, order: &[usize], k: f64) -> Result<Vec<f64>> {
        let mut r = vec![0.0; self.costs.len()];
        if k <= 0.0 {
            return Ok(r);
        }
        self.check_feasible(k)?;
        let mut remaining = k;
        for &b in order {
            if remaining <= 0.0 {
                break;
            }
            let w = self.weights[b];
            if w <= 0.0 {
                continue;
            }
            let level = self.caps[b].min(remaining / w);
            r[b] = level;
            remaining -= level * w;
        }
        Ok(r)
    }

    pub fn solve(&self, k: f64) -> Result<Vec<f64>> {
        self.fill_in_order(&self.greedy_order(), k)
    }
}

/// Ratios this close (relative) are treated as equal, so rounding noise in
/// the masses cannot reorder bins that are tied in exact arithmetic.
pub const RATIO_TIE_TOLERANCE: f64 = 1e-6;

/// Sorts `bins` by decreasing ratio; runs of ratios within
/// [`RATIO_TIE_TOLERANCE`] of the run's leading ratio are ordered by index.
pub fn descending_order(ratios: &[f64], mut bins: Vec<usize>) -> Vec<usize> {
    bins.sort_by(|&a, &b| ratios[b].total_cmp(&ratios[a]).then(a.cmp(&b)));
    let mut start = 0;
    while start < bins.len() {
        let lead = ratios[bins[start]];
        let mut end = start + 1;
        while end < bins.len() && tied(lead, ratios[bins[end]]) {
            end += 1;
        }
        bins[start..end].sort_unstable();
        start = end;
    }
    bins
}

fn tied(lead: f64, r: f64) -> bool {
    if lead.is_infinite() || r.is_infinite() {
        return lead == r;
    }
    lead - r <= RATIO_TIE_TOLERANCE * lead.abs()
}

pub(crate) fn ratio(w: f64, c: f64) -> f64 {
    if w <= 0.0 {
        0.0
    } else if c <= 0.0 {
        f64::INFINITY
    } else {
        w / c
    }
}

/// Builds the LP for a given strategy: costs are the objective density's bin
/// masses, weights come from [`constraint_weights`] on the constraint
/// density.
pub fn center_lp<D1, D2>(objective: &D1, constraint: &D2, strategy: &Strategy, grid: &Grid) -> CenterLp
where
    D1: Density + ?Sized,
    D2: Density + ?Sized,
{
    let costs = objective.bin_masses(grid);
    let masses = constraint.bin_masses(grid);
    let weights = constraint_weights(strategy, &masses, grid);
    CenterLp::new(costs, weights, grid.midpoints())
}

/// Rule minimizing expected regret at truth under `objective` while
/// collecting `budget.k` from bidders distributed as `constraint` who play
/// `strategy`.
pub fn solve_center<D1, D2>(
    objective: &D1,
    constraint: &D2,
    strategy: &Strategy,
    budget: &Budget,
    grid: &Grid,
) -> Result<PaymentRule>
where
    D1: Density + ?Sized,
    D2: Density + ?Sized,
{
    let lp = center_lp(objective, constraint, strategy, grid);
    PaymentRule::new(*grid, lp.solve(budget.k)?)
}

#[derive(Debug, Clone)]
pub struct RatioSolution {
    pub rule: PaymentRule,
    /// Per-bin ratio that set the fill order.
    pub ratios: Vec<f64>,
    pub order: Vec<usize>,
}

/// Greedy ratio method for a constant shade.
///
/// Each rule node `b` is scored by how much budget a unit payment there
/// raises relative to the regret it costs a truthful bidder. The budget
/// contribution is assembled per node from the interpolation hat function
/// of that node evaluated at every shaded report, so it tracks
/// `f(psi + s) / f(psi)`. Nodes are filled in decreasing score, each up to
/// its cap, and the remaining budget is reduced by what the node collects.
pub fn solve_center_ratio(
    f: &DistributionSpec,
    strategy: &Strategy,
    budget: &Budget,
    grid: &Grid,
) -> Result<RatioSolution> {
    let shade = match strategy {
        Strategy::Constant(s) => *s,
        Strategy::Functional(_) => {
            return Err(Error::InvalidParameter(
                "the ratio method needs a constant shade".into(),
            ))
        }
    };
    let masses = f.bin_masses(grid);
    let n = grid.bins();
    let collected_per_unit: Vec<f64> = (0..n)
        .map(|node| {
            masses
                .iter()
                .enumerate()
                .map(|(src, m)| m * hat(grid, node, grid.midpoint(src) - shade))
                .sum()
        })
        .collect();
    let ratios: Vec<f64> = collected_per_unit
        .iter()
        .zip(&masses)
        .map(|(&w, &c)| ratio(w, c))
        .collect();

    let order = descending_order(&ratios, (0..n).filter(|&b| collected_per_unit[b] > 0.0).collect());

    let max: f64 = (0..n).map(|b| collected_per_unit[b] * grid.midpoint(b)).sum();
    if budget.k > max * (1.0 + 1e-12) {
        return Err(Error::Infeasible {
            required: budget.k,
            max_collectible: max,
        });
    }
    let mut r = vec![0.0; n];
    let mut k = budget.k;
    for &b in &order {
        if k <= 0.0 {
            break;
        }
        let z = k / collected_per_unit[b];
        r[b] = grid.midpoint(b).min(z);
        k -= r[b] * collected_per_unit[b];
    }
    Ok(RatioSolution {
        rule: PaymentRule::new(*grid, r)?,
        ratios,
        order,
    })
}

/// Linear-interpolation basis function of rule node `node` at `x`, with the
/// end nodes extended flat and nothing below zero.
fn hat(grid: &Grid, node: usize, x: f64) -> f64 {
    if x < grid.lower() {
        return 0.0;
    }
    let n = grid.bins();
    let m = grid.midpoint(node);
    let h = grid.width();
    if (node == 0 && x <= m) || (node == n - 1 && x >= m) {
        return 1.0;
    }
    (1.0 - (x - m).abs() / h).max(0.0)
}

/// Bin-averaged `f(psi + s) / f(psi)`: density of the true profit that
/// reports into `psi` under shade `s`, relative to the density at `psi`.
pub fn ratio_curve(f: &DistributionSpec, shade: f64, grid: &Grid) -> Vec<f64> {
    (0..grid.bins())
        .map(|b| {
            let avg = grid.integrate(
                |x| {
                    let base = f.pdf(x);
                    if base > 0.0 {
                        f.pdf(x + shade) / base
                    } else {
                        0.0
                    }
                },
                grid.bin_lower(b),
                grid.bin_upper(b),
            );
            avg / grid.width()
        })
        .collect()
}
