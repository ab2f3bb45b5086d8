//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on failure.

mod common;

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wallscale::bounds::{audit_ensemble, AuditConfig};
use wallscale::cli::audit_verdict;
use wallscale::constructions::{build_bloch, build_neel};
use wallscale::energy::{energy_gradient, solve_stray_field, total_energy, EnergyModel};
use wallscale::minimize::{relax, RelaxOptions, RelaxReport};
use wallscale::sweep::{find_crossover_with, fit_series, run_sweep, PointStatus, SweepConfig, SweepPoint};
use wallscale::{MagnetizationField, MaterialParams, StripGrid};

const ORACLE_REL_TOL: f64 = 1e-3;
const RECIPROCITY_TOL: f64 = 1e-10;
const ORACLE_MAX_SECS: u64 = 5;

const GRAD_REL_TOL: f64 = 1e-5;
const GRAD_DIRECTIONS: usize = 20;
const GRAD_FD_STEP: f64 = 1e-5;
const GRAD_MAX_SECS: u64 = 10;

const NEEL_Q: [f64; 3] = [1e-2, 1e-3, 1e-4];
const NEEL_T_OVER_D: f64 = 1.0;
const NEEL_BAND: f64 = 3.0;
const NEEL_SLOPE: f64 = 1.0;
const NEEL_SLOPE_TOL: f64 = 0.25;
const NEEL_MAX_SECS: u64 = 600;

const BLOCH_Q: f64 = 1e-3;
const BLOCH_T_OVER_D: [f64; 4] = [6.0, 8.0, 10.0, 12.0];
const BLOCH_BAND: f64 = 3.0;
const BLOCH_STRAY_FRACTION: f64 = 0.05;
const BLOCH_MAX_SECS: u64 = 600;

const CROSSOVER_Q: [f64; 2] = [1e-3, 1e-4];
const CROSSOVER_BRACKET: (f64, f64) = (4.0, 16.0);
const CROSSOVER_REL_WIDTH: f64 = 0.05;
const CROSSOVER_FACTOR: f64 = 4.0;
const CROSSOVER_MAX_SECS: u64 = 1800;

/// Remaining `t/d` of the standard sweep not already covered above.
const EXTRA_SWEEP_T_OVER_D: [f64; 2] = [2.0, 4.0];
const LOWER_BOUND_BAND: f64 = 10.0;

const UNIT_TOL: f64 = 1e-12;

struct Line {
    ok: bool,
    text: String,
}

fn line(ok: bool, text: String) -> Line {
    Line { ok, text }
}

fn within(elapsed: Duration, secs: u64) -> bool {
    elapsed <= Duration::from_secs(secs)
}

fn sine_m3_field(grid: StripGrid, eps: f64, modes: f64) -> MagnetizationField {
    let k0 = PI * modes / grid.half_width();
    let mut values = vec![[0.0; 3]; grid.len()];
    for r in 0..grid.n3() {
        for i in 0..grid.n1() {
            let m3 = eps * (k0 * grid.x1(i)).sin();
            values[grid.idx(i, r)] = [0.0, (1.0 - m3 * m3).sqrt(), m3];
        }
    }
    MagnetizationField::from_values(grid, values).unwrap()
}

fn criterion_1() -> Line {
    let start = Instant::now();
    let (t, modes) = (1.0, 1.0);
    let g = StripGrid::new(5.0 * t, t, 32, 8).unwrap();
    let f = sine_m3_field(g, 0.2, modes);
    let sol = solve_stray_field(&f).unwrap();
    let n = g.n1() - 1;
    let row = |r: usize| -> Vec<f64> { (0..n).map(|i| f.at(i, r)[2]).collect() };
    let m = 1024;
    let top = common::trig_resample(&row(g.n3() - 1), m);
    let bot: Vec<f64> = common::trig_resample(&row(0), m).into_iter().map(|v| -v).collect();
    let oracle = common::line_charge_energy(&[(0.5 * t, top), (-0.5 * t, bot)], 2.0 * g.half_width());
    let rel = (sol.dirichlet_energy - oracle).abs() / oracle;
    let recip = sol.reciprocity_defect();
    let el = start.elapsed();
    line(
        rel <= ORACLE_REL_TOL && recip <= RECIPROCITY_TOL && within(el, ORACLE_MAX_SECS),
        format!(
            "stray oracle: rel err {rel:.3e} (<= {ORACLE_REL_TOL:e}), reciprocity {recip:.3e} (<= {RECIPROCITY_TOL:e}), {:.2?}",
            el
        ),
    )
}

fn random_admissible(grid: StripGrid, seed: u64) -> MagnetizationField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<[f64; 3]> = (0..grid.len())
        .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
        .collect();
    let (l, h1, h3, t) = (grid.half_width(), grid.h1(), grid.h3(), grid.thickness());
    MagnetizationField::from_fn(grid, |x1, x3| {
        let i = ((x1 + l) / h1).round() as usize;
        let r = ((x3 + 0.5 * t) / h3).round() as usize;
        raw[grid.idx(i, r)]
    })
    .unwrap()
}

fn criterion_2() -> Line {
    let start = Instant::now();
    let g = StripGrid::new(5.0, 1.0, 32, 8).unwrap();
    let p = MaterialParams::new(0.7, 1e-2, 1.0).unwrap();
    let f = random_admissible(g, 11);
    let grad = energy_gradient(&f, &p).unwrap();
    let mut model = EnergyModel::new(g, p).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst: f64 = 0.0;
    for _ in 0..GRAD_DIRECTIONS {
        let mut v = vec![[0.0; 3]; g.len()];
        for r in 0..g.n3() {
            for i in 1..g.n1() - 1 {
                let k = g.idx(i, r);
                let m = f.values()[k];
                let mut d = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
                let s = d[0] * m[0] + d[1] * m[1] + d[2] * m[2];
                for c in 0..3 {
                    d[c] -= s * m[c];
                }
                v[k] = d;
            }
        }
        let shift = |sgn: f64| -> Vec<[f64; 3]> {
            f.values()
                .iter()
                .zip(&v)
                .map(|(m, d)| {
                    [
                        m[0] + sgn * GRAD_FD_STEP * d[0],
                        m[1] + sgn * GRAD_FD_STEP * d[1],
                        m[2] + sgn * GRAD_FD_STEP * d[2],
                    ]
                })
                .collect()
        };
        let ep = model.evaluate(&shift(1.0)).unwrap().total;
        let em = model.evaluate(&shift(-1.0)).unwrap().total;
        let fd = (ep - em) / (2.0 * GRAD_FD_STEP);
        let an = grad.dot(&v);
        worst = worst.max((an - fd).abs() / fd.abs());
    }
    let el = start.elapsed();
    line(
        worst <= GRAD_REL_TOL && within(el, GRAD_MAX_SECS),
        format!("gradient check: worst rel err {worst:.3e} over {GRAD_DIRECTIONS} directions (<= {GRAD_REL_TOL:e}), {el:.2?}"),
    )
}

fn ok_points(points: &[SweepPoint]) -> Vec<&SweepPoint> {
    points.iter().filter(|p| p.status == PointStatus::Ok).collect()
}

fn criterion_3(points: &[SweepPoint], el: Duration) -> Line {
    let pts = ok_points(points);
    if pts.len() != NEEL_Q.len() {
        return line(false, format!("neel scaling: only {} of {} points ran", pts.len(), NEEL_Q.len()));
    }
    let e: Vec<f64> = pts.iter().map(|p| p.e_neel).collect();
    let pred: Vec<f64> = pts.iter().map(|p| p.pred_thin).collect();
    let fit = fit_series(&e, &pred).unwrap();
    let slope = fit.slope.unwrap_or(f64::NAN);
    let ratios: Vec<String> = e.iter().zip(&pred).map(|(a, b)| format!("{:.3}", a / b)).collect();
    line(
        fit.spread() <= NEEL_BAND && (slope - NEEL_SLOPE).abs() <= NEEL_SLOPE_TOL && within(el, NEEL_MAX_SECS),
        format!(
            "neel scaling: E/pred = [{}], band x{:.3} (<= {NEEL_BAND}), slope {slope:.3} ({NEEL_SLOPE} +- {NEEL_SLOPE_TOL}), {el:.1?}",
            ratios.join(", "),
            fit.spread()
        ),
    )
}

fn criterion_4(points: &[SweepPoint], el: Duration) -> Line {
    let pts = ok_points(points);
    if pts.len() != BLOCH_T_OVER_D.len() {
        return line(false, format!("bloch flatness: only {} of {} points ran", pts.len(), BLOCH_T_OVER_D.len()));
    }
    let e: Vec<f64> = pts.iter().map(|p| p.e_bloch).collect();
    let lo = e.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = e.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let stray = pts.iter().map(|p| p.bloch_stray_fraction).fold(0.0f64, f64::max);
    let es: Vec<String> = e.iter().map(|v| format!("{v:.3}")).collect();
    line(
        hi / lo <= BLOCH_BAND && stray <= BLOCH_STRAY_FRACTION && within(el, BLOCH_MAX_SECS),
        format!(
            "bloch flatness: E/d^2 = [{}], band x{:.3} (<= {BLOCH_BAND}), construction stray fraction {stray:.3e} (<= {BLOCH_STRAY_FRACTION}), {el:.1?}",
            es.join(", "),
            hi / lo
        ),
    )
}

fn criterion_5() -> Line {
    let start = Instant::now();
    let cfg = SweepConfig::default();
    let mut parts = Vec::new();
    let mut ok = true;
    let mut stars = Vec::new();
    for &q in &CROSSOVER_Q {
        match find_crossover_with(q, CROSSOVER_BRACKET, &cfg, CROSSOVER_REL_WIDTH) {
            Ok(r) => {
                let within_factor = r.ratio <= CROSSOVER_FACTOR && r.ratio >= 1.0 / CROSSOVER_FACTOR;
                ok &= within_factor;
                parts.push(format!(
                    "Q={q:e}: t*/d {:.3} vs {:.3} (x{:.2}, {} probes)",
                    r.t_star_over_d,
                    r.predicted,
                    r.ratio,
                    r.probes.len()
                ));
                stars.push(r.t_star_over_d);
            }
            Err(e) => {
                ok = false;
                parts.push(format!("Q={q:e}: {e}"));
            }
        }
    }
    let ordered = stars.len() == 2 && stars[1] > stars[0];
    let el = start.elapsed();
    line(
        ok && ordered && within(el, CROSSOVER_MAX_SECS),
        format!(
            "crossover: {}; ordered {ordered}; factor <= {CROSSOVER_FACTOR}, {el:.1?}",
            parts.join("; ")
        ),
    )
}

fn criterion_6(points: &[SweepPoint]) -> Line {
    let pts = ok_points(points);
    let lb: Vec<f64> = pts.iter().map(|p| p.lb_ratio).collect();
    let lo = lb.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = lb.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    line(
        pts.len() == points.len() && !pts.is_empty() && hi / lo <= LOWER_BOUND_BAND,
        format!(
            "lower-bound ratio: {} of {} points, range [{lo:.3e}, {hi:.3e}], band x{:.3} (<= {LOWER_BOUND_BAND})",
            pts.len(),
            points.len(),
            hi / lo
        ),
    )
}

fn criterion_7() -> Line {
    let start = Instant::now();
    let cfg = AuditConfig::default();
    let (coarse, fine) = match (audit_ensemble(&cfg, 0), audit_ensemble(&cfg, 1)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return line(false, format!("lemma audit: {e}")),
    };
    let verdict = audit_verdict(&coarse, &fine);
    let failed: Vec<&str> = verdict.iter().filter(|(_, ok)| !ok).map(|(m, _)| m.as_str()).collect();
    let summary = format!(
        "max l2 {:.3e}/{:.3e}, l1 {:.3e}/{:.3e}, poincare {:.3e}/{:.3e} over {} + {} reports",
        coarse.max.l2,
        fine.max.l2,
        coarse.max.l1,
        fine.max.l1,
        coarse.max.poincare,
        fine.max.poincare,
        coarse.reports.len(),
        fine.reports.len()
    );
    let el = start.elapsed();
    if failed.is_empty() {
        line(true, format!("lemma audit: {summary}, {el:.1?}"))
    } else {
        line(false, format!("lemma audit: {summary}; failed: {}", failed.join("; ")))
    }
}

fn unit_residual(f: &MagnetizationField) -> f64 {
    f.values()
        .iter()
        .map(|v| ((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt() - 1.0).abs())
        .fold(0.0, f64::max)
}

fn same_run(a: &(MagnetizationField, RelaxReport), b: &(MagnetizationField, RelaxReport)) -> bool {
    let bits = |f: &MagnetizationField| -> Vec<u64> { f.values().iter().flatten().map(|x| x.to_bits()).collect() };
    let trace = |r: &RelaxReport| -> Vec<u64> { r.energy_trace().iter().map(|x| x.to_bits()).collect() };
    bits(&a.0) == bits(&b.0) && trace(&a.1) == trace(&b.1) && a.1.iterations == b.1.iterations
}

fn criterion_8() -> Line {
    let start = Instant::now();
    let opts = RelaxOptions {
        max_iters: 300,
        ..RelaxOptions::default()
    };
    let p = MaterialParams::from_ratio(1e-2, 2.0).unwrap();
    let policy = wallscale::sweep::GridPolicy::default();
    let mut inputs = Vec::new();
    let bg = policy.bloch_grid(&p, 0.1).unwrap();
    inputs.push(("bloch", build_bloch(&bg, &p, &Default::default()).unwrap().value));
    let ng = policy.neel_grid(&p).unwrap();
    inputs.push(("neel", build_neel(&ng, &p).unwrap().value));
    let rg = StripGrid::new(5.0 * p.t(), p.t(), 32, 8).unwrap();
    inputs.push(("random", random_admissible(rg, 7)));
    let mut ok = true;
    let mut notes = Vec::new();
    for (name, f) in &inputs {
        let a = relax(f, &p, &opts).unwrap();
        let b = relax(f, &p, &opts).unwrap();
        let mono = a.1.is_monotone();
        let unit = unit_residual(&a.0);
        let det = same_run(&a, &b);
        ok &= mono && unit <= UNIT_TOL && det;
        let e0 = total_energy(f, &p).unwrap().total;
        notes.push(format!(
            "{name}: {} its, E {e0:.4} -> {:.4}, monotone {mono}, ||m|-1| {unit:.1e}, deterministic {det}",
            a.1.iterations, a.1.final_energy.total
        ));
    }
    line(
        ok,
        format!("minimizer contract: {} (|m| tol {UNIT_TOL:e}), {:.1?}", notes.join("; "), start.elapsed()),
    )
}

fn sweep_of(q_values: &[f64], t_over_d: &[f64]) -> (Vec<SweepPoint>, Duration) {
    let start = Instant::now();
    let cfg = SweepConfig {
        q_values: q_values.to_vec(),
        t_over_d: t_over_d.to_vec(),
        ..SweepConfig::default()
    };
    (run_sweep(&cfg).points, start.elapsed())
}

fn main() {
    let mut lines = Vec::new();
    let mut emit = |k: usize, l: Line| {
        println!("criterion {k}: {} {}", if l.ok { "PASS" } else { "FAIL" }, l.text);
        lines.push(l.ok);
    };
    emit(1, criterion_1());
    emit(2, criterion_2());
    let (neel_pts, neel_el) = sweep_of(&NEEL_Q, &[NEEL_T_OVER_D]);
    emit(3, criterion_3(&neel_pts, neel_el));
    let (bloch_pts, bloch_el) = sweep_of(&[BLOCH_Q], &BLOCH_T_OVER_D);
    emit(4, criterion_4(&bloch_pts, bloch_el));
    emit(5, criterion_5());
    let (extra, _) = sweep_of(&NEEL_Q, &EXTRA_SWEEP_T_OVER_D);
    let mut all = neel_pts;
    all.extend(bloch_pts);
    all.extend(extra);
    emit(6, criterion_6(&all));
    emit(7, criterion_7());
    emit(8, criterion_8());
    let passed = lines.iter().filter(|ok| **ok).count();
    println!("acceptance: {passed}/{} criteria passed", lines.len());
    if passed != lines.len() {
        std::process::exit(1);
    }
}
