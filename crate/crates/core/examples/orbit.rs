//! Follow a billiard orbit on the Sinai table and check time reversal.

use billiard_lab::dynamics::{billiard_map, involution, position_velocity, singularity_distance, PhasePoint};
use billiard_lab::geometry::{build_table, TableSpec};

fn main() {
    let t = build_table(TableSpec::sinai(1.0, 0.25)).unwrap();
    let start = PhasePoint::new(0, 0.3, 0.4);
    let mut x = start;
    println!("{:>4} {:>4} {:>10} {:>10} {:>10} {:>10}", "k", "comp", "r", "phi", "tau", "dist");
    for k in 0..20 {
        let (y, tau) = billiard_map(&t, x).expect("regular orbit");
        println!(
            "{k:>4} {:>4} {:>10.6} {:>10.6} {:>10.6} {:>10.2e}",
            y.component,
            y.r,
            y.phi,
            tau,
            singularity_distance(&t, y)
        );
        x = y;
    }

    // Undo the orbit with F^{-1} = ι F ι.
    let mut back = x;
    for _ in 0..20 {
        back = involution(billiard_map(&t, involution(back)).unwrap().0);
    }
    let (p0, _) = position_velocity(&t, start).unwrap();
    let (p1, _) = position_velocity(&t, back).unwrap();
    println!("returned to start within {:.2e}", (p1 - p0).norm());
}
