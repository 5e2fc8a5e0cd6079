//! Damped iterated best response between the center and the bidder.
//!
//! Each round the center solves against the running average of the bidder's
//! strategies, the bidder best-responds to that rule, and both running
//! averages move toward the new responses by the current step `alpha`. The
//! step shrinks by `alpha_decay` whenever the averaged strategy starts to
//! oscillate, or when the averaged rule does once the strategy has settled.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::bidder::{best_response_constant, ShadeProblem, SignalBeliefs, Strategy};
use crate::blinding::BlindedModel;
use crate::center::{constraint_weights, k_vcg, Budget, CenterLp, PaymentRule};
use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::grid::{Density, Grid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Mode {
    /// Bidder and center both know `f`; the bidder picks one constant shade.
    ExAnte,
    /// The bidder sees its profit through Normal(0, mu_sigma) noise and
    /// shades per signal; the center weighs the budget through w_sigma.
    Blinded { mu_sigma: f64, w_sigma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumConfig {
    pub mode: Mode,
    pub gamma: f64,
    pub alpha: f64,
    pub alpha_decay: f64,
    pub max_rounds: usize,
    pub tolerance: f64,
}

impl Default for EquilibriumConfig {
    fn default() -> Self {
        Self {
            mode: Mode::ExAnte,
            gamma: 0.5,
            alpha: 0.5,
            alpha_decay: 0.6,
            max_rounds: 50,
            tolerance: 1e-3,
        }
    }
}

impl EquilibriumConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha must be in (0, 1], got {}", self.alpha));
        }
        if !(self.alpha_decay > 0.0 && self.alpha_decay <= 1.0) {
            return bad(format!("alpha_decay must be in (0, 1], got {}", self.alpha_decay));
        }
        if self.max_rounds < 1 {
            return bad("max_rounds must be at least 1".into());
        }
        if !(self.tolerance > 0.0) {
            return bad(format!("tolerance must be positive, got {}", self.tolerance));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad(format!("gamma must be in [0, 1], got {}", self.gamma));
        }
        if let Mode::Blinded { mu_sigma, w_sigma } = self.mode {
            if !(mu_sigma > 0.0 && mu_sigma.is_finite() && w_sigma > 0.0 && w_sigma.is_finite()) {
                return bad(format!(
                    "blinding stddevs must be positive, got mu_sigma = {mu_sigma}, w_sigma = {w_sigma}"
                ));
            }
        }
        Ok(())
    }
}

enum BidderModel {
    ExAnte,
    Blinded(SignalBeliefs),
}

/// Both players' best-response maps for one instance.
pub struct MetaGame {
    grid: Grid,
    f: DistributionSpec,
    mode: Mode,
    budget: Budget,
    costs: Vec<f64>,
    masses: Vec<f64>,
    bidder: BidderModel,
}

impl MetaGame {
    pub fn new(f: &DistributionSpec, mode: Mode, gamma: f64, grid: &Grid) -> Result<Self> {
        let budget = Budget::new(gamma, k_vcg(f, grid))?;
        let (costs, masses, bidder) = match mode {
            Mode::ExAnte => {
                let m = f.bin_masses(grid);
                (m.clone(), m, BidderModel::ExAnte)
            }
            Mode::Blinded { mu_sigma, w_sigma } => {
                let model = BlindedModel::new(f, mu_sigma, w_sigma, grid)?;
                (
                    model.g.bin_masses(grid),
                    model.h.bin_masses(grid),
                    BidderModel::Blinded(SignalBeliefs::new(f, mu_sigma, grid)?),
                )
            }
        };
        Ok(Self {
            grid: *grid,
            f: f.clone(),
            mode,
            budget,
            costs,
            masses,
            bidder,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn budget(&self) -> &Budget {
        &self.budget
    }

    pub fn center_lp(&self, strategy: &Strategy) -> CenterLp {
        let weights = constraint_weights(strategy, &self.masses, &self.grid);
        CenterLp::new(self.costs.clone(), weights, self.grid.midpoints())
    }

    pub fn center_response(&self, strategy: &Strategy) -> Result<PaymentRule> {
        let lp = self.center_lp(strategy);
        PaymentRule::new(self.grid, lp.solve(self.budget.k)?)
    }

    /// Budget the rule raises when bidders play `strategy`.
    pub fn collected(&self, rule: &PaymentRule, strategy: &Strategy) -> f64 {
        self.center_lp(strategy).collected(rule.values())
    }

    /// Regret at truth as the center measures it.
    pub fn center_objective(&self, rule: &PaymentRule) -> f64 {
        self.costs.iter().zip(rule.values()).map(|(c, r)| c * r).sum()
    }

    pub fn bidder_response(&self, rule: &PaymentRule) -> Strategy {
        match &self.bidder {
            BidderModel::ExAnte => Strategy::Constant(best_response_constant(rule, &self.f, &self.grid)),
            BidderModel::Blinded(beliefs) => beliefs.best_response(rule),
        }
    }

    /// Bidder's expected regret playing `strategy` against `rule`.
    pub fn bidder_regret(&self, rule: &PaymentRule, strategy: &Strategy) -> f64 {
        match &self.bidder {
            BidderModel::ExAnte => {
                let shade = strategy.shade_at(self.grid.midpoint(0));
                ShadeProblem::new(rule, &self.f, &self.grid).objective(shade)
            }
            BidderModel::Blinded(beliefs) => beliefs.expected_regret(rule, strategy),
        }
    }

    /// What the bidder gains by best responding instead of reporting
    /// truthfully.
    pub fn deviation_incentive(&self, rule: &PaymentRule) -> f64 {
        match &self.bidder {
            BidderModel::ExAnte => {
                let p = ShadeProblem::new(rule, &self.f, &self.grid);
                p.truthful() - p.best_response().regret
            }
            BidderModel::Blinded(beliefs) => beliefs.blinded_regret(rule).deviation_incentive,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Round {
    /// The center's response this round.
    pub rule: PaymentRule,
    /// The bidder's response to `rule`.
    pub strategy: Strategy,
    pub alpha: f64,
    /// Sup-norm change of the averaged rule.
    pub rule_delta: f64,
    /// Sup-norm change of the averaged strategy.
    pub shade_delta: f64,
}

#[derive(Debug, Clone)]
pub struct EquilibriumTrace {
    pub config: EquilibriumConfig,
    pub budget: Budget,
    pub rounds: Vec<Round>,
    pub converged: bool,
    /// Center's response to the final strategy.
    pub rule: PaymentRule,
    /// Averaged bidder strategy.
    pub strategy: Strategy,
    /// Averaged center rule.
    pub averaged_rule: PaymentRule,
    /// Budget `rule` collects under `strategy`.
    pub collected: f64,
    /// Bidder gain from re-optimizing against `rule`; near zero at a mutual
    /// best response.
    pub bidder_gap: f64,
    pub deviation_incentive: f64,
}

impl EquilibriumTrace {
    /// The constant shade, in ex-ante mode.
    pub fn shade(&self) -> Option<f64> {
        self.strategy.as_constant()
    }

    pub fn report(&self) -> String {
        let mut out = String::new();
        let c = &self.config;
        let _ = writeln!(out, "mode: {}", mode_label(&c.mode));
        let _ = writeln!(
            out,
            "gamma: {}  k_vcg: {:.6}  k: {:.6}",
            c.gamma, self.budget.k_vcg, self.budget.k
        );
        let _ = writeln!(
            out,
            "alpha: {}  alpha_decay: {}  tolerance: {}  max_rounds: {}",
            c.alpha, c.alpha_decay, c.tolerance, c.max_rounds
        );
        let _ = writeln!(out, "rounds: {}  converged: {}", self.rounds.len(), self.converged);
        let _ = writeln!(out, "round  alpha      rule_delta    shade_delta");
        for (i, r) in self.rounds.iter().enumerate() {
            let _ = writeln!(
                out,
                "{:>5}  {:<9.6}  {:<12.6e}  {:<12.6e}",
                i + 1,
                r.alpha,
                r.rule_delta,
                r.shade_delta
            );
        }
        match self.shade() {
            Some(s) => {
                let _ = writeln!(out, "shade: {s:.6}");
            }
            None => {
                let grid = self.rule.grid();
                let nodes = self.strategy.node_values(grid);
                let _ = writeln!(
                    out,
                    "shade range: [{:.6}, {:.6}]",
                    nodes.iter().copied().fold(f64::INFINITY, f64::min),
                    nodes.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                );
            }
        }
        let _ = writeln!(out, "deviation incentive: {:.6e}", self.deviation_incentive);
        let _ = writeln!(out, "budget collected: {:.6}", self.collected);
        let _ = writeln!(out, "bidder gap: {:.6e}", self.bidder_gap);
        out
    }
}

pub(crate) fn mode_label(mode: &Mode) -> String {
    match mode {
        Mode::ExAnte => "ex-ante".into(),
        Mode::Blinded { mu_sigma, w_sigma } => format!("blinded (mu_sigma {mu_sigma}, w_sigma {w_sigma})"),
    }
}

pub fn find_equilibrium(f: &DistributionSpec, config: &EquilibriumConfig, grid: &Grid) -> Result<EquilibriumTrace> {
    config.validate()?;
    let game = MetaGame::new(f, config.mode, config.gamma, grid)?;
    run(&game, config)
}

/// The round loop on a prepared game.
pub fn run(game: &MetaGame, config: &EquilibriumConfig) -> Result<EquilibriumTrace> {
    config.validate()?;
    let grid = *game.grid();
    let mut avg_rule = PaymentRule::vcg(grid);
    let mut avg_strategy = Strategy::truthful();
    let mut alpha = config.alpha;
    let mut rounds = Vec::with_capacity(config.max_rounds);
    let mut converged = false;
    let mut last = (f64::INFINITY, f64::INFINITY);

    for round in 1..=config.max_rounds {
        let rule = game.center_response(&avg_strategy).map_err(|e| match e {
            Error::Infeasible {
                required,
                max_collectible,
            } => Error::InfeasibleInRound {
                round,
                required,
                max_collectible,
            },
            e => e,
        })?;
        let strategy = game.bidder_response(&rule);
        let next_rule = avg_rule.damp(&rule, alpha);
        let next_strategy = avg_strategy.damp(&strategy, alpha, &grid);
        let rule_delta = next_rule.sup_distance(&avg_rule);
        let shade_delta = next_strategy.sup_distance(&avg_strategy, &grid);
        avg_rule = next_rule;
        avg_strategy = next_strategy;
        rounds.push(Round {
            rule,
            strategy,
            alpha,
            rule_delta,
            shade_delta,
        });
        if rule_delta <= config.tolerance && shade_delta <= config.tolerance {
            converged = true;
            break;
        }
        // The center's response is a function of the averaged strategy, so a
        // growing rule delta only signals a cycle once the strategy settled.
        let settled = shade_delta <= config.tolerance;
        if shade_delta > last.1 || (settled && rule_delta > last.0) {
            alpha *= config.alpha_decay;
        }
        last = (rule_delta, shade_delta);
    }

    let rule = game.center_response(&avg_strategy)?;
    let response = game.bidder_response(&rule);
    let bidder_gap = (game.bidder_regret(&rule, &avg_strategy) - game.bidder_regret(&rule, &response)).max(0.0);
    Ok(EquilibriumTrace {
        config: *config,
        budget: *game.budget(),
        rounds,
        converged,
        collected: game.collected(&rule, &avg_strategy),
        deviation_incentive: game.deviation_incentive(&rule),
        rule,
        strategy: avg_strategy,
        averaged_rule: avg_rule,
        bidder_gap,
    })
}
