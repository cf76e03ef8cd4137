//! Build each table family and print its boundary components and junctions.

use billiard_lab::geometry::{build_table, TableSpec};

fn main() {
    let specs = [
        TableSpec::sinai(1.0, 0.25),
        TableSpec::stadium(1.0, 2.0),
        TableSpec::cusp([1.0, 1.0, 1.0]),
        TableSpec::flat_point(4.0),
    ];
    for spec in specs {
        let t = build_table(spec).expect("valid table");
        println!(
            "{}: perimeter {:.6}, diameter {:.4}, rule {:?}",
            t.spec.family_name(),
            t.total_length(),
            t.diameter(),
            t.membership
        );
        for (id, c) in t.components().iter().enumerate() {
            println!(
                "  [{id}] {:<12} {:?} {:?} length {:.6}{}",
                c.label,
                c.kind(),
                c.class,
                c.length,
                if c.closed { " (closed)" } else { "" }
            );
        }
        for j in t.junctions() {
            println!("  junction {} -> {} at ({:.3}, {:.3}) {:?}", j.from, j.to, j.point.x, j.point.y, j.kind);
        }
    }

    match build_table(TableSpec::sinai(1.0, 0.6)) {
        Ok(_) => println!("oversized obstacle accepted?"),
        Err(e) => println!("rejected: {e}"),
    }
}
