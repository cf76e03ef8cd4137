//! Growth-lemma diagnostics on the Sinai table: one-step sums and the Z proxy.

use billiard_lab::diagnostics::{expansion_factors, expansion_sweep, lambda_hat, sample_points, z_sequence};
use billiard_lab::geometry::{build_table, TableSpec};
use billiard_lab::induced::ReducedSpaceRule;

fn main() {
    let t = build_table(TableSpec::sinai(1.0, 0.25)).unwrap();
    let rule = ReducedSpaceRule::for_table(&t);
    let cap = 10_000;

    for delta in [1e-2, 1e-3, 1e-4] {
        let (s, _) = expansion_sweep(&t, &rule, delta, 300, 7, cap).unwrap();
        println!("delta {delta:.0e}: sup {:.4}, median {:.4}, {} of {} cut", s.sup, s.median, s.cut_curves, s.sums.len());
    }

    let pts = sample_points(&t, &rule, 2000, 3).unwrap();
    let lam = lambda_hat(&expansion_factors(&t, &rule, &pts, cap)).unwrap();
    println!("typical expansion {lam:.3}");
    for (k, z) in z_sequence(&t, &rule, &pts, 6, 5, lam, 0.5, cap).unwrap().iter().enumerate() {
        println!("Z after {k} iterates: {:.4} ({} used, {} divergent)", z.value, z.used, z.divergent);
    }
}
