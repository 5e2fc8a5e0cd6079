//! Closed-form reference rules, calibrated to collect the budget, and rule
//! diagnostics.

use serde::{Deserialize, Serialize};

use crate::bidder::{best_response_constant, SignalBeliefs, Strategy};
use crate::center::{center_lp, Budget, CenterLp, PaymentRule};
use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleFamily {
    /// `r = 0`.
    Vcg,
    /// `r(psi) = min(psi, C)`.
    Threshold,
    /// `r = 0` below the cutoff, `r = psi` above: surplus goes to bidders
    /// with small potential profit.
    Small,
    /// `r = psi` below the cutoff, `r = 0` above: surplus goes to bidders
    /// with large potential profit.
    Large,
}

impl RuleFamily {
    pub const ALL: [RuleFamily; 4] = [
        RuleFamily::Vcg,
        RuleFamily::Threshold,
        RuleFamily::Small,
        RuleFamily::Large,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RuleFamily::Vcg => "vcg",
            RuleFamily::Threshold => "threshold",
            RuleFamily::Small => "small",
            RuleFamily::Large => "large",
        }
    }

    /// Parameter value giving `r = 0`.
    fn zero_parameter(self, grid: &Grid) -> f64 {
        match self {
            RuleFamily::Small => grid.upper(),
            _ => grid.lower(),
        }
    }

    /// Parameter value charging as much as the family can.
    fn full_parameter(self, grid: &Grid) -> f64 {
        match self {
            RuleFamily::Small => grid.lower(),
            RuleFamily::Vcg => grid.lower(),
            _ => grid.upper(),
        }
    }
}

/// Tabulates `family` at `parameter` (the cap `C` for Threshold, the cutoff
/// for Small and Large; ignored for VCG).
///
/// The bin containing a cutoff is charged in proportion to the part of the
/// bin on the charging side, so the collected budget moves continuously with
/// the cutoff.
pub fn realize(family: RuleFamily, parameter: f64, grid: &Grid) -> PaymentRule {
    let h = grid.width();
    let values = (0..grid.bins())
        .map(|b| {
            let m = grid.midpoint(b);
            match family {
                RuleFamily::Vcg => 0.0,
                RuleFamily::Threshold => m.min(parameter.max(0.0)),
                RuleFamily::Small => m * ((grid.bin_upper(b) - parameter) / h).clamp(0.0, 1.0),
                RuleFamily::Large => m * ((parameter - grid.bin_lower(b)) / h).clamp(0.0, 1.0),
            }
        })
        .collect();
    PaymentRule::new(*grid, values).expect("reference rules stay in the envelope")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceRule {
    pub family: RuleFamily,
    pub parameter: f64,
    pub rule: PaymentRule,
}

/// Relative accuracy of the calibrated budget.
pub const CALIBRATION_TOLERANCE: f64 = 1e-6;

/// Finds the family parameter at which the rule collects `budget.k` from
/// bidders distributed as `f` playing `strategy`.
pub fn calibrate(
    family: RuleFamily,
    f: &DistributionSpec,
    strategy: &Strategy,
    budget: &Budget,
    grid: &Grid,
) -> Result<ReferenceRule> {
    let lp = center_lp(f, f, strategy, grid);
    calibrate_against(family, &lp, budget.k, grid)
}

/// As [`calibrate`], against an already assembled budget constraint.
pub fn calibrate_against(family: RuleFamily, lp: &CenterLp, k: f64, grid: &Grid) -> Result<ReferenceRule> {
    let collected = |p: f64| lp.collected(realize(family, p, grid).values());
    let zero = family.zero_parameter(grid);
    if k <= 0.0 {
        return Ok(ReferenceRule {
            family,
            parameter: zero,
            rule: realize(family, zero, grid),
        });
    }
    if family == RuleFamily::Vcg {
        return Err(Error::Infeasible {
            required: k,
            max_collectible: 0.0,
        });
    }
    let full = family.full_parameter(grid);
    let max = collected(full);
    if max < k * (1.0 - CALIBRATION_TOLERANCE) {
        return Err(Error::Infeasible {
            required: k,
            max_collectible: max,
        });
    }
    // `lo` collects too little, `hi` enough
    let (mut lo, mut hi) = (zero, full);
    let mut best = full;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let got = collected(mid);
        if (got - k).abs() <= CALIBRATION_TOLERANCE * k {
            best = mid;
            break;
        }
        if got < k {
            lo = mid;
        } else {
            hi = mid;
        }
        best = hi;
    }
    Ok(ReferenceRule {
        family,
        parameter: best,
        rule: realize(family, best, grid),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `∫ r(psi) f(psi) dpsi`.
    pub regret_at_truth: f64,
    /// `max r(psi)`.
    pub worst_case_regret: f64,
    /// Gain from best responding under blinding with `mu_sigma`.
    pub deviation_incentive: f64,
    /// Budget raised from bidders playing the supplied strategy.
    pub budget_collected: f64,
    /// Constant shade a bidder who knows `f` would choose.
    pub best_response_shade: f64,
}

pub fn diagnose(
    rule: &PaymentRule,
    f: &DistributionSpec,
    mu_sigma: f64,
    strategy: &Strategy,
    grid: &Grid,
) -> Result<Diagnostics> {
    let beliefs = SignalBeliefs::new(f, mu_sigma, grid)?;
    Ok(Diagnostics {
        regret_at_truth: rule.regret_at_truth(f),
        worst_case_regret: rule.worst_case_regret(),
        deviation_incentive: beliefs.blinded_regret(rule).deviation_incentive,
        budget_collected: center_lp(f, f, strategy, grid).collected(rule.values()),
        best_response_shade: best_response_constant(rule, f, grid),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::center::k_vcg;
    use crate::distributions::Family;

    fn gpd(shape: f64, grid: &Grid) -> DistributionSpec {
        DistributionSpec::on_grid(
            Family::Gpd {
                location: 0.0,
                scale: 1.0,
                shape,
            },
            grid,
        )
        .unwrap()
    }

    #[test]
    fn shapes() {
        let grid = Grid::standard();
        let small = realize(RuleFamily::Small, 4.0, &grid);
        let large = realize(RuleFamily::Large, 4.0, &grid);
        let thr = realize(RuleFamily::Threshold, 4.0, &grid);
        for (b, m) in grid.midpoints().into_iter().enumerate() {
            assert!((small.values()[b] - if m > 4.0 { m } else { 0.0 }).abs() < 1e-12);
            assert!((large.values()[b] - if m < 4.0 { m } else { 0.0 }).abs() < 1e-12);
            assert_eq!(thr.values()[b], m.min(4.0));
        }
        assert!(thr.interior_bins(1e-12).len() > 1);
        // a cutoff inside a bin charges that bin fractionally
        let half = realize(RuleFamily::Small, 4.1, &grid);
        assert!((half.values()[20] - 0.5 * grid.midpoint(20)).abs() < 1e-12);
    }

    #[test]
    fn calibration_hits_budget() {
        let grid = Grid::standard();
        let f = gpd(1.0, &grid);
        let budget = Budget::for_distribution(0.3, &f, &grid).unwrap();
        let s = Strategy::Constant(0.2);
        let lp = center_lp(&f, &f, &s, &grid);
        for family in [RuleFamily::Threshold, RuleFamily::Small, RuleFamily::Large] {
            let r = calibrate(family, &f, &s, &budget, &grid).unwrap();
            let got = lp.collected(r.rule.values());
            assert!((got - budget.k).abs() <= 1e-6 * budget.k, "{family:?}: {got}");
        }
    }

    #[test]
    fn zero_budget_is_vcg() {
        let grid = Grid::standard();
        let f = gpd(1.0, &grid);
        let budget = Budget::new(0.0, k_vcg(&f, &grid)).unwrap();
        for family in RuleFamily::ALL {
            let r = calibrate(family, &f, &Strategy::truthful(), &budget, &grid).unwrap();
            assert_eq!(r.rule, PaymentRule::vcg(grid), "{family:?}");
        }
    }

    #[test]
    fn infeasible_calibration() {
        let grid = Grid::standard();
        let f = gpd(1.0, &grid);
        let budget = Budget::for_distribution(0.9, &f, &grid).unwrap();
        let s = Strategy::Constant(1.0);
        assert!(calibrate(RuleFamily::Small, &f, &s, &budget, &grid).is_err());
        let budget = Budget::for_distribution(0.2, &f, &grid).unwrap();
        assert!(calibrate(RuleFamily::Vcg, &f, &Strategy::truthful(), &budget, &grid).is_err());
    }

    #[test]
    fn vcg_diagnostics_are_zero() {
        let grid = Grid::new(0.0, 10.0, 50, 20).unwrap();
        let f = gpd(1.0, &grid);
        let d = diagnose(&PaymentRule::vcg(grid), &f, 5.0, &Strategy::truthful(), &grid).unwrap();
        assert_eq!(d.regret_at_truth, 0.0);
        assert_eq!(d.worst_case_regret, 0.0);
        assert_eq!(d.deviation_incentive, 0.0);
        assert_eq!(d.budget_collected, 0.0);
        assert_eq!(d.best_response_shade, 0.0);
    }

    #[test]
    fn threshold_worst_case_is_cap() {
        let grid = Grid::new(0.0, 10.0, 50, 20).unwrap();
        let f = gpd(1.0, &grid);
        let rule = realize(RuleFamily::Threshold, 1.7, &grid);
        let d = diagnose(&rule, &f, 5.0, &Strategy::truthful(), &grid).unwrap();
        assert_eq!(d.worst_case_regret, 1.7);
    }
}
