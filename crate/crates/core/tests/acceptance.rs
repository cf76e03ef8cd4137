//! Acceptance run: one line per criterion, nonzero exit status if any fails.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI, SQRT_2};
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use billiard_lab::cli::{parse_config, run, Command};
use billiard_lab::diagnostics::{
    expansion_sweep, one_step_expansion_sum, z_function_proxy, CurvePiece, UnstableCurveSample,
};
use billiard_lab::dynamics::{
    billiard_map, involution, next_collision, reflect, singularity_distance, DynamicsError, PhasePoint,
};
use billiard_lab::geometry::{build_table, GeometryError, Shape, TableGeometry, TableSpec, Vec2};
use billiard_lab::induced::{
    first_return, in_reduced_space, induced_orbit, CellDictionary, CellIndex, InducedError, ReducedSpaceRule,
    DEFAULT_CAP,
};
use billiard_lab::observables::{Observable, PhaseFunction, SumRange};
use billiard_lab::par::{sample_rng, with_workers};
use billiard_lab::stats::{
    birkhoff_full, direct_full, direct_induced, dominant_diameters, estimate_cell_diameters,
    estimate_cell_measures, estimate_correlation, fit_exponential_rate, fit_power_law, phi_from_uniform,
    sample_batch, sample_full_phase, CellStats, CloudOptions, CorrelationEstimate,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn table(spec: TableSpec) -> (TableGeometry, ReducedSpaceRule) {
    let t = build_table(spec).unwrap();
    let r = ReducedSpaceRule::for_table(&t);
    (t, r)
}

fn tail_exponent(stats: &CellStats) -> Result<(f64, (f64, f64)), String> {
    let window = stats.deep_decade(25).ok_or("no deep decade")?;
    let fit = fit_power_law(&stats.tail_series(), Some(window)).map_err(|e| e.to_string())?;
    Ok((fit.exponent, (fit.n_min, fit.n_max)))
}

fn measure_invariance() -> Outcome {
    let (t, _) = table(TableSpec::sinai(1.0, 0.25));
    let fs = [PhaseFunction::CosPhi, PhaseFunction::CosR];
    let start = Instant::now();
    let (orbit, direct) = with_workers(1, || (birkhoff_full(&t, &fs, 10_000_000, 50, 1), direct_full(&t, &fs, 10_000_000, 2)));
    let secs = start.elapsed().as_secs_f64();
    let z: Vec<f64> = orbit.averages.iter().zip(&direct).map(|(a, b)| a.z_score(b)).collect();
    outcome(
        z.iter().all(|z| *z < 3.0) && secs < 300.0,
        format!(
            "cos phi {:.6} vs {:.6} (z {:.2}), cos r {:.6} vs {:.6} (z {:.2}), {secs:.0} s single worker",
            orbit.averages[0].mean, direct[0].mean, z[0], orbit.averages[1].mean, direct[1].mean, z[1]
        ),
    )
}

fn kac() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for spec in [TableSpec::sinai(1.0, 0.25), TableSpec::stadium(1.0, 2.0), TableSpec::cusp([1.0, 1.0, 1.0])] {
        let name = spec.family_name();
        let sinai = matches!(spec, TableSpec::SemiDispersingSquare { .. });
        let (t, rule) = table(spec);
        let stats = estimate_cell_measures(&t, &rule, 1_000_000, DEFAULT_CAP, 1, None).unwrap();
        let (p, se) = stats.counters.acceptance();
        let inv = 1.0 / p;
        let mean = stats.mean_return.mean;
        if sinai {
            let oracle = (4.0 + FRAC_PI_2) / FRAC_PI_2;
            let rel = (mean / oracle - 1.0).abs();
            pass &= rel < 0.01;
            parts.push(format!("{name} E[R] {mean:.4} vs {oracle:.4} ({:.2}%)", 100.0 * rel));
        } else {
            let z = (mean - inv).abs() / stats.mean_return.stderr.hypot(se / (p * p));
            pass &= z < 3.0;
            parts.push(format!("{name} E[R] {mean:.4} vs 1/mu(M) {inv:.4} (z {z:.2})"));
        }
    }
    outcome(pass, parts.join(", "))
}

fn with_clouds(spec: TableSpec, k: u64) -> (TableGeometry, CellStats) {
    let (t, rule) = table(spec);
    let stats = estimate_cell_measures(&t, &rule, k, DEFAULT_CAP, 1, Some(CloudOptions { per_cell: 4000, max_n: 400 })).unwrap();
    (t, stats)
}

fn cell_law(sinai: &CellStats, stadium: &CellStats, secs: f64) -> Outcome {
    let mut pass = secs < 1800.0;
    let mut parts = Vec::new();
    for (name, stats) in [("sinai", sinai), ("stadium", stadium)] {
        match tail_exponent(stats) {
            Ok((e, (lo, hi))) => {
                pass &= (1.7..=2.3).contains(&e) && hi >= 10.0 * lo;
                parts.push(format!("{name} tail exponent {e:.3} over n in [{lo}, {hi}]"));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{name}: {e}"));
            }
        }
    }
    parts.push(format!("{secs:.0} s"));
    outcome(pass, parts.join(", "))
}

fn flat_point_law() -> Outcome {
    let (t, rule) = table(TableSpec::flat_point(4.0));
    let stats = estimate_cell_measures(&t, &rule, 30_000_000, DEFAULT_CAP, 1, None).unwrap();
    let target = 3.0 + 4.0 / (4.0 - 2.0);
    let Some(window) = stats.deep_decade(25) else {
        return outcome(false, "no deep decade".into());
    };
    match fit_power_law(&stats.level_series(), Some(window)) {
        Ok(f) => outcome(
            (f.exponent - target).abs() <= 0.7,
            format!("level exponent {:.3} vs {target} over n in [{}, {}]", f.exponent, f.n_min, f.n_max),
        ),
        Err(e) => outcome(false, e.to_string()),
    }
}

fn stadium_diameters(t: &TableGeometry, stats: &CellStats) -> Outcome {
    let dominant: Vec<_> = dominant_diameters(&estimate_cell_diameters(t, stats))
        .into_iter()
        .filter(|d| d.index.n >= 4)
        .collect();
    let major: Vec<(f64, f64, f64)> = dominant.iter().map(|d| (d.m as f64, d.image.major, 0.0)).collect();
    let minor: Vec<(f64, f64, f64)> = dominant.iter().map(|d| (d.m as f64, d.image.minor, 0.0)).collect();
    match (fit_power_law(&major, None), fit_power_law(&minor, None)) {
        (Ok(u), Ok(s)) => outcome(
            (0.7..=1.3).contains(&u.exponent) && (1.6..=2.4).contains(&s.exponent),
            format!(
                "unstable {:.3}, stable {:.3} over m in [{}, {}]",
                u.exponent, s.exponent, u.n_min, u.n_max
            ),
        ),
        (u, s) => outcome(false, format!("{:?} / {:?}", u.err(), s.err())),
    }
}

fn decay_check(name: &str, e: &CorrelationEstimate) -> (bool, String) {
    let sub = e.first_sub_noise_lag();
    let r2 = e.fit.map(|f| f.r_squared);
    let pass = sub.is_some_and(|n| n <= 30) && r2.is_some_and(|r| r >= 0.9);
    let fit = match (&e.fit, &e.fit_error) {
        (Some(f), _) => format!("theta {:.3}, R^2 {:.3} on lags {}..{}", f.theta, f.r_squared, f.window.0, f.window.1),
        (None, Some(err)) => format!("no fit ({err})"),
        (None, None) => "no fit".into(),
    };
    (pass, format!("{name}: below 3 sigma at n = {sub:?}, {fit}"))
}

fn correlation_decay() -> Outcome {
    let (t, rule) = table(TableSpec::sinai(1.0, 0.25));
    let r = Observable::ReturnTime;
    let sinai = estimate_correlation(&t, &rule, &r, &r, 30, 1_000_000, DEFAULT_CAP, 1).unwrap();
    let (t, rule) = table(TableSpec::stadium(1.0, 2.0));
    let f = Observable::TruncatedReturnTime { cap: 100 };
    let stadium = estimate_correlation(&t, &rule, &f, &f, 30, 1_000_000, DEFAULT_CAP, 1).unwrap();
    let (a, da) = decay_check("sinai R", &sinai);
    let (b, db) = decay_check("stadium R_trunc(100)", &stadium);
    outcome(a && b, format!("{da}; {db}"))
}

fn one_step_expansion() -> Outcome {
    let (t, rule) = table(TableSpec::sinai(1.0, 0.25));
    match expansion_sweep(&t, &rule, 1e-3, 1000, 1, 10_000) {
        Ok((s, _)) => outcome(
            s.sup < 1.0 && s.sums.len() >= 1000,
            format!("sup {:.4} over {} curves (median {:.4}, {} cut)", s.sup, s.sums.len(), s.median, s.cut_curves),
        ),
        Err(e) => outcome(false, e.to_string()),
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

/// The operation examples with closed-form or constructed answers.
fn examples() -> Vec<(&'static str, bool)> {
    let (sq, sq_rule) = table(TableSpec::sinai(1.0, 0.25));
    let (st, st_rule) = table(TableSpec::stadium(1.0, 2.0));
    let flat = build_table(TableSpec::flat_point(4.0)).unwrap();
    let top = PhasePoint::new(4, 1.5 * PI * 0.25, 0.0);
    let apex = PhasePoint::new(3, 0.5 * PI, 0.0);
    let up = Vec2::new(0.0, 1.0);
    let mut v = Vec::new();

    v.push(("sinai perimeter", close(sq.total_length(), 4.0 + 0.5 * PI, 1e-12) && sq.len() == 5));
    v.push(("stadium perimeter", close(st.total_length(), 2.0 * PI + 4.0, 1e-12) && st.len() == 4));
    v.push(("oversized obstacle", matches!(build_table(TableSpec::sinai(1.0, 0.6)), Err(GeometryError::InvalidGeometry(_)))));
    let f = st.point_normal_curvature(3, 0.5 * PI).unwrap();
    v.push(("stadium arc frame", (f.normal - Vec2::new(1.0, 0.0)).norm() < 1e-12 && close(f.curvature, 1.0, 1e-12)));
    let f = sq.point_normal_curvature(0, 0.5).unwrap();
    v.push(("square wall frame", (f.normal - up).norm() < 1e-15 && f.curvature == 0.0));
    v.push((
        "flat point curvature",
        flat.components().iter().enumerate().any(|(id, c)| match &c.shape {
            Shape::Flat(curve) => flat.frame(id, curve.flat_point_r()).curvature == 0.0,
            _ => false,
        }),
    ));

    v.push(("head-on reflection", reflect(Vec2::new(0.0, -1.0), up).is_ok_and(|d| d == up)));
    v.push((
        "oblique reflection",
        reflect(Vec2::new(FRAC_1_SQRT_2, -FRAC_1_SQRT_2), up)
            .is_ok_and(|d| (d - Vec2::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2)).norm() < 1e-15),
    ));
    v.push(("grazing reflection", matches!(reflect(Vec2::new(1.0, 0.0), up), Err(DynamicsError::NotIncoming(_)))));
    let hit_top = next_collision(&sq, Vec2::new(0.5, 0.75), up, None).unwrap();
    v.push(("ray to top wall", (hit_top.end - Vec2::new(0.5, 1.0)).norm() < 1e-14 && close(hit_top.tau, 0.25, 1e-14)));
    let hit_obs = next_collision(&sq, Vec2::new(0.5, 1.0), Vec2::new(0.0, -1.0), Some(2)).unwrap();
    v.push((
        "ray to obstacle",
        (hit_obs.end - Vec2::new(0.5, 0.75)).norm() < 1e-14 && close(hit_obs.tau, 0.25, 1e-14) && hit_obs.next.phi.abs() < 1e-14,
    ));
    let chord = next_collision(&st, Vec2::new(-2.0, 0.0), Vec2::new(1.0, 0.0), Some(3)).unwrap();
    v.push(("stadium axial chord", (chord.end - Vec2::new(2.0, 0.0)).norm() < 1e-14 && close(chord.tau, 4.0, 1e-14)));
    let (y, _) = billiard_map(&sq, top).unwrap();
    v.push(("vertical bounce", y.component == 2 && close(y.r, 0.5, 1e-12) && y.phi.abs() < 1e-12));
    let (y, _) = billiard_map(&st, apex).unwrap();
    v.push(("apex to apex", y.component == 1 && close(y.r, 0.5 * PI, 1e-12) && y.phi.abs() < 1e-12));
    let x = PhasePoint::new(1, 0.4, 0.3);
    v.push(("involution", involution(x).phi == -0.3 && involution(involution(x)) == x));
    v.push(("involution fixed point", involution(PhasePoint::new(1, 0.4, 0.0)) == PhasePoint::new(1, 0.4, 0.0)));
    v.push(("near-grazing distance", close(singularity_distance(&sq, PhasePoint::new(4, 1.5 * PI * 0.25, FRAC_PI_2 - 1e-4)), 1e-4, 1e-12)));
    v.push(("mid-wall distance", close(singularity_distance(&sq, PhasePoint::new(0, 0.5, 0.0)), 0.5, 1e-12)));
    v.push(("junction distance", singularity_distance(&sq, PhasePoint::new(1, 0.0, 0.2)) == 0.0));

    v.push(("obstacle membership", in_reduced_space(&sq, &sq_rule, top).unwrap()));
    v.push(("wall membership", !in_reduced_space(&sq, &sq_rule, PhasePoint::new(0, 0.5, 0.0)).unwrap()));
    let (y, _) = billiard_map(&st, PhasePoint::new(1, 0.5 * PI, 1.3)).unwrap();
    v.push(("repeated arc collision", y.component == 1 && !in_reduced_space(&st, &st_rule, y).unwrap()));
    let step = first_return(&sq, &sq_rule, top, 10).unwrap();
    v.push(("vertical return time", step.return_time == 2));
    v.push(("axial return time", first_return(&st, &st_rule, apex, 10).is_ok_and(|s| s.return_time == 1)));
    v.push(("cap below return", matches!(first_return(&sq, &sq_rule, top, 1), Err(InducedError::NoReturnWithinCap { cap: 1 }))));
    let rs: Vec<u64> = induced_orbit(&sq, &sq_rule, top, 3, 10).steps.iter().map(|s| s.return_time).collect();
    v.push(("vertical orbit", rs == [2, 2, 2]));
    v.push(("empty orbit", induced_orbit(&sq, &sq_rule, top, 0, 10).steps.is_empty()));
    let mut dict = CellDictionary::new();
    let a = dict.cell_index(&step);
    let bottom = first_return(&sq, &sq_rule, PhasePoint::new(4, 0.5 * PI * 0.25, 0.0), 10).unwrap();
    let b = dict.cell_index(&bottom);
    v.push(("cell indices", a == CellIndex { n: 2, j: 1 } && dict.cell_index(&step) == a && b.n == 2 && b.j != a.j));

    let eval = |o: Observable| o.evaluate(&sq, &sq_rule, &step).unwrap();
    v.push(("R on vertical step", eval(Observable::ReturnTime) == 2.0));
    v.push(("truncated R", eval(Observable::TruncatedReturnTime { cap: 1 }) == 1.0));
    v.push(("induced sum of ones", eval(Observable::InducedSum { fhat: PhaseFunction::Const(1.0), range: SumRange::Inclusive }) == 3.0));
    v.push(("induced sum of zeros", eval(Observable::InducedSum { fhat: PhaseFunction::Const(0.0), range: SumRange::Inclusive }) == 0.0));
    v.push(("induced sum of cos phi", close(eval(Observable::InducedSum { fhat: PhaseFunction::CosPhi, range: SumRange::Inclusive }), 3.0, 1e-12)));
    v.push(("free path", close(eval(Observable::FreePath), 0.5, 1e-12)));
    let axial = first_return(&st, &st_rule, apex, 10).unwrap();
    v.push(("axial free path", close(Observable::FreePath.evaluate(&st, &st_rule, &axial).unwrap(), 4.0, 1e-12)));

    v.push(("phi median", phi_from_uniform(0.5) == 0.0));
    v.push(("phi endpoint", close(phi_from_uniform(1.0 - 1e-16), FRAC_PI_2, 1e-7)));
    let batch = sample_batch(&sq, &sq_rule, 1, 1_000_000).unwrap();
    let (p, se) = batch.counters.acceptance();
    v.push(("obstacle acceptance", (p - 0.5 * PI / sq.total_length()).abs() < 3.0 * se));
    let sin: Vec<f64> = (0..1_000_000).map(|i| sample_full_phase(&sq, &mut sample_rng(3, i)).phi.sin()).collect();
    let mean = sin.iter().sum::<f64>() / sin.len() as f64;
    let sd = (sin.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / sin.len() as f64).sqrt() / 1000.0;
    v.push(("mean sin phi", mean.abs() < 3.0 * sd));

    let cube: Vec<(f64, f64, f64)> = (2..=64).map(|n| (n as f64, (n as f64).powi(-3), 0.0)).collect();
    v.push(("cubic law", fit_power_law(&cube, None).is_ok_and(|f| close(f.exponent, 3.0, 1e-6))));
    let flat_law: Vec<(f64, f64, f64)> = (2..=64).map(|n| (n as f64, 0.3, 0.0)).collect();
    v.push(("constant law", fit_power_law(&flat_law, None).is_ok_and(|f| f.exponent.abs() < 1e-9)));
    let alt: Vec<f64> = (0..20).map(|n| 0.5 * (-0.8f64).powi(n)).collect();
    v.push(("alternating decay", fit_exponential_rate(&alt, &[0.0; 20], Some((1, 19))).is_ok_and(|f| close(f.theta, 0.8, 1e-6))));

    let piece = |pre: f64, img: f64| CurvePiece { t_start: 0.0, t_end: pre, preimage_length: pre, image_length: img, points: 3 };
    let curve = |length: f64, pieces: Vec<CurvePiece>| UnstableCurveSample {
        center: top,
        component: 4,
        direction: (1.0, 0.0),
        points: vec![],
        length,
        pieces,
        center_piece: Some(0),
    };
    v.push(("uncut one-step sum", close(one_step_expansion_sum(&curve(1e-3, vec![piece(1e-3, 2e-3)])), 0.5, 1e-15)));
    v.push(("cut one-step sum", close(one_step_expansion_sum(&curve(2e-3, vec![piece(1e-3, 2e-3), piece(1e-3, 2e-3)])), 1.0, 1e-15)));
    v.push(("constant Z family", z_function_proxy(&[(0.5, 1.0); 10], 1.0).is_ok_and(|z| close(z.value, 2.0, 1e-15))));
    v.push((
        "zero weights in Z",
        z_function_proxy(&[(0.5, 1.0), (1e-9, 0.0)], 1.0).is_ok_and(|z| close(z.value, 2.0, 1e-15)),
    ));

    let minimal = parse_config("[table]\nfamily = \"sinai\"\nrho = 0.25\n[sampling]\nseed = 3\nk = 1000\n");
    v.push(("minimal config", minimal.is_ok_and(|c| c.sampling.cap > 0 && c.sampling.n_max > 0)));
    let bad = parse_config("[table]\nfamily = \"sinai\"\nrho = -1.0\n").unwrap_err();
    v.push(("negative rho", bad.issues.iter().any(|i| i.path == "table.rho")));
    let typo = parse_config("[tabel]\nfamily = \"sinai\"\n").unwrap_err();
    v.push(("unknown section", typo.issues.iter().any(|i| i.message.contains("table"))));
    v
}

fn checksums(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().is_some_and(|n| n != "manifest.json"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

fn oracle_suite() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;

    let ex = examples();
    let failed: Vec<&str> = ex.iter().filter(|e| !e.1).map(|e| e.0).collect();
    pass &= failed.is_empty();
    parts.push(if failed.is_empty() { format!("{} examples", ex.len()) } else { format!("examples failed: {failed:?}") });

    let (sq, _) = table(TableSpec::sinai(1.0, 0.25));
    let mut worst: f64 = 0.0;
    for i in 0..100_000 {
        let x = sample_full_phase(&sq, &mut sample_rng(17, i));
        let Ok((y, _)) = billiard_map(&sq, x) else { continue };
        let Ok((z, _)) = billiard_map(&sq, involution(y)) else { continue };
        let z = involution(z);
        let c = &sq.components()[x.component];
        let mut dr = (z.r - x.r).abs();
        if c.closed {
            dr = dr.min(c.length - dr);
        }
        let e = if z.component == x.component { dr.max((z.phi - x.phi).abs()) } else { f64::INFINITY };
        worst = worst.max(e);
    }
    pass &= worst < 1e-9;
    parts.push(format!("reversal error {worst:.1e}"));

    let text = "[table]\nfamily = \"sinai\"\nrho = 0.25\n[sampling]\nseed = 5\nk = 20000\nn_max = 20\n[cells]\nper_cell = 500\n";
    let mut same = true;
    for command in [Command::Corr, Command::Cells] {
        let runs: Vec<_> = [1, 2, 4]
            .iter()
            .map(|&w| {
                let dir = tempfile::tempdir().unwrap();
                let mut cfg = parse_config(text).unwrap();
                cfg.output.dir = dir.path().to_path_buf();
                run(command, &cfg, w).unwrap();
                (checksums(dir.path()), dir)
            })
            .collect();
        same &= runs.windows(2).all(|w| w[0].0 == w[1].0);
    }
    pass &= same;
    parts.push(format!("worker-count determinism {}", if same { "ok" } else { "broken" }));

    let (sq, rule) = table(TableSpec::sinai(1.0, 0.25));
    let f = Observable::Phase(PhaseFunction::CosPhi);
    let (a, _) = direct_induced(&sq, &rule, &f, 200_000, DEFAULT_CAP, 8).unwrap();
    let (b, _) = direct_induced(&sq, &rule, &f, 400_000, DEFAULT_CAP, 8).unwrap();
    let ratio = a.stderr / b.stderr;
    let scaling = (ratio / SQRT_2 - 1.0).abs() < 0.2;
    pass &= scaling;
    parts.push(format!("stderr ratio {ratio:.3} on doubling K"));

    let geometric: Vec<f64> = (0..30).map(|n| 0.5 * 0.8f64.powi(n)).collect();
    let theta = fit_exponential_rate(&geometric, &[0.0; 30], Some((1, 29))).map(|f| f.theta);
    let cube: Vec<(f64, f64, f64)> = (2..=64).map(|n| (n as f64, (n as f64).powi(-3), 0.0)).collect();
    let exponent = fit_power_law(&cube, None).map(|f| f.exponent);
    let fits = theta.as_ref().is_ok_and(|t| close(*t, 0.8, 1e-6)) && exponent.as_ref().is_ok_and(|e| close(*e, 3.0, 1e-6));
    pass &= fits;
    parts.push(format!("synthetic theta {:.9}, exponent {:.9}", theta.unwrap_or(f64::NAN), exponent.unwrap_or(f64::NAN)));
    outcome(pass, parts.join(", "))
}

fn report(number: usize, name: &str, o: &Outcome) {
    println!("criterion {number} {:<4} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
}

fn main() -> ExitCode {
    let mut all = true;
    let mut check = |number: usize, name: &str, o: Outcome| {
        report(number, name, &o);
        all &= o.pass;
    };
    check(1, "measure invariance", measure_invariance());
    check(2, "Kac's formula", kac());
    let start = Instant::now();
    let (_, sinai) = with_clouds(TableSpec::sinai(1.0, 0.25), 10_000_000);
    let (stadium_table, stadium) = with_clouds(TableSpec::stadium(1.0, 2.0), 10_000_000);
    check(3, "cell law", cell_law(&sinai, &stadium, start.elapsed().as_secs_f64()));
    check(4, "flat-point law", flat_point_law());
    check(5, "stadium diameters", stadium_diameters(&stadium_table, &stadium));
    drop((sinai, stadium));
    check(6, "correlation decay", correlation_decay());
    check(7, "one-step expansion", one_step_expansion());
    check(8, "oracle and property suite", oracle_suite());
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
