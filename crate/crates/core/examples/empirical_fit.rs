//! Fits a histogram to sampled profits and solves against it, next to the
//! same solve on the generating density.

use std::io::Write;

use payrule::distributions::{fit_empirical, parse_samples, DistributionSpec, Family};
use payrule::equilibrium::{find_equilibrium, EquilibriumConfig};
use payrule::grid::Grid;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> payrule::Result<()> {
    let grid = Grid::standard();
    let family = Family::Gpd {
        location: 0.0,
        scale: 1.0,
        shape: 0.5,
    };
    // inverse-cdf GPD draws
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut text = Vec::new();
    for _ in 0..20_000 {
        let u: f64 = rng.gen();
        writeln!(text, "{}", ((1.0 - u).powf(-0.5) - 1.0) / 0.5)?;
    }
    let samples = parse_samples(std::str::from_utf8(&text).unwrap())?;
    let fit = fit_empirical(&samples, &grid)?;
    println!("{} samples, {} beyond the grid dropped", samples.len(), fit.dropped);

    let config = EquilibriumConfig {
        gamma: 0.25,
        ..Default::default()
    };
    // a histogram is flat inside each bin, so small shades buy less than
    // under the smooth density and the equilibrium shade comes out lower
    let exact = DistributionSpec::on_grid(family, &grid)?;
    for (label, f) in [("empirical", &fit.spec), ("exact", &exact)] {
        let t = find_equilibrium(f, &config, &grid)?;
        println!(
            "{label:<9}  s* = {:.4}  k = {:.4}  rounds {}",
            t.shade().unwrap(),
            t.budget.k,
            t.rounds.len()
        );
    }
    Ok(())
}
