//! Estimate cell measures on the Sinai table and fit the tail of the return time.

use billiard_lab::geometry::{build_table, TableSpec};
use billiard_lab::induced::{ReducedSpaceRule, DEFAULT_CAP};
use billiard_lab::stats::{estimate_cell_measures, fit_power_law};

fn main() {
    let k: u64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(1_000_000);
    let t = build_table(TableSpec::sinai(1.0, 0.25)).unwrap();
    let rule = ReducedSpaceRule::for_table(&t);
    let stats = estimate_cell_measures(&t, &rule, k, DEFAULT_CAP, 1, None).unwrap();

    let (p, se) = stats.counters.acceptance();
    println!("acceptance {p:.5} ± {se:.5}, mean return {:.4} ± {:.4}", stats.mean_return.mean, stats.mean_return.stderr);
    println!("{} cells, n0 = {}", stats.cells.len(), stats.n0);
    for (n, tail, stderr) in stats.tail_series().into_iter().take(12) {
        println!("  mu(R >= {n:>3}) = {tail:.3e} ± {stderr:.1e}");
    }
    match stats.deep_decade(25) {
        Some(window) => {
            let fit = fit_power_law(&stats.tail_series(), Some(window)).unwrap();
            println!("tail exponent {:.3} on n in [{}, {}], R^2 {:.3}", fit.exponent, fit.n_min, fit.n_max, fit.r_squared);
        }
        None => println!("not enough deep cells for a tail fit; raise K"),
    }
}
