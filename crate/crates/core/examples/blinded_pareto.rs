//! Blinded equilibrium: bidders see their profit through Normal noise and
//! shade per signal. Writes the usual artifacts, including the payment
//! surface, to `out/blinded-pareto-<sigma>`.
//!
//! `cargo run --release --example blinded_pareto [sigma]`

use payrule::experiment::{preset, run_experiment, PresetOptions};

fn main() -> payrule::Result<()> {
    let sigma: f64 = std::env::args().nth(1).map_or(10.0, |a| a.parse().expect("sigma"));
    let opts = PresetOptions {
        sigma: Some(sigma),
        output_dir: Some(format!("out/blinded-pareto-{sigma}").into()),
        ..Default::default()
    };
    let config = preset("blinded-pareto", &opts)?;
    let outcome = run_experiment(&config)?;
    print!("{}", outcome.trace.report());

    let psi = outcome.trace.rule.grid().midpoints();
    let mean_gap = outcome
        .summary
        .shade_nodes
        .iter()
        .zip(&psi)
        .map(|(s, p)| (s - p).abs())
        .sum::<f64>()
        / psi.len() as f64;
    println!("mean |s - psi|: {mean_gap:.4}");
    println!("artifacts in {}", config.output_dir.display());
    Ok(())
}
