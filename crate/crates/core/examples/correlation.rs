//! Correlations of the truncated return time under the induced stadium map.

use billiard_lab::geometry::{build_table, TableSpec};
use billiard_lab::induced::{ReducedSpaceRule, DEFAULT_CAP};
use billiard_lab::observables::Observable;
use billiard_lab::stats::estimate_correlation;

fn main() {
    let t = build_table(TableSpec::stadium(1.0, 2.0)).unwrap();
    let rule = ReducedSpaceRule::for_table(&t);
    let f = Observable::TruncatedReturnTime { cap: 100 };
    let e = estimate_correlation(&t, &rule, &f, &f, 20, 200_000, DEFAULT_CAP, 1).unwrap();
    for l in &e.lags {
        println!("{:>3} {:+.5e} ± {:.1e}", l.lag, l.cov, l.stderr);
    }
    println!("noise floor {:.2e}, first lag below 3 sigma: {:?}", e.noise_floor, e.first_sub_noise_lag());
    match e.fit {
        Some(fit) => println!(
            "theta {:.3} [{:.3}, {:.3}] on lags {}..{}",
            fit.theta, fit.ci_low, fit.ci_high, fit.window.0, fit.window.1
        ),
        None => println!("no exponential fit: {:?}", e.fit_error),
    }
}
