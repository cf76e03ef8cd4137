//! First returns to the reduced space and the cell each return lands in.

use billiard_lab::dynamics::PhasePoint;
use billiard_lab::geometry::{build_table, TableSpec};
use billiard_lab::induced::{first_return, induced_orbit, CellDictionary, ReducedSpaceRule, DEFAULT_CAP};
use billiard_lab::observables::Observable;

fn main() {
    let t = build_table(TableSpec::stadium(1.0, 2.0)).unwrap();
    let rule = ReducedSpaceRule::for_table(&t);

    let apex = PhasePoint::new(3, 0.5 * std::f64::consts::PI, 0.0);
    let s = first_return(&t, &rule, apex, 10).unwrap();
    println!("axial orbit: R = {}, free path {:.3}", s.return_time, s.tau_sum);

    let x = PhasePoint::new(3, 1.2, 0.9);
    let mut dict = CellDictionary::new();
    for step in induced_orbit(&t, &rule, x, 15, DEFAULT_CAP).steps {
        let cell = dict.cell_index(&step);
        let free = Observable::FreePath.evaluate(&t, &rule, &step).unwrap();
        println!(
            "comp {} r {:.4} phi {:+.4}  R {:>3}  cell ({}, {})  free path {:.3}",
            step.start.component, step.start.r, step.start.phi, step.return_time, cell.n, cell.j, free
        );
    }
}
