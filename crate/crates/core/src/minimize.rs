//! Sphere-constrained descent on the discrete energy.
//!
//! Each iteration steps along the negative tangent gradient divided by the
//! nodal quadrature weights (a lumped-mass preconditioner, so the direction
//! approximates the continuum `L^2` gradient), renormalizes every node,
//! restores the end columns and accepts the step by Armijo backtracking. The
//! trial step is the Barzilai-Borwein length of the previous pair of iterates.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy::{project_tangent, EnergyBreakdown, EnergyModel};
use crate::error::{Result, WallError};
use crate::fields::{enforce_clamp, norm, MagnetizationField, MaterialParams, StripGrid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RelaxOptions {
    pub max_iters: usize,
    /// Sup-norm of the preconditioned tangent gradient, reduced units.
    pub grad_tol: f64,
    /// Trial step of the first iteration, reduced units.
    pub initial_step: f64,
    pub armijo_factor: f64,
    pub armijo_c: f64,
    /// Backtracking below `stall_ratio` times the trial step ends the run.
    pub stall_ratio: f64,
    pub probe_seed: u64,
    pub probe_directions: usize,
    pub constraint: Constraint,
}

/// Admissible class the descent is restricted to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    #[default]
    Free,
    /// In-plane (`m3 = 0`) and independent of `x3`, the class of Neel walls.
    NeelClass,
}

impl Default for RelaxOptions {
    fn default() -> Self {
        Self {
            max_iters: 5000,
            grad_tol: 1e-8,
            initial_step: 1e-2,
            armijo_factor: 0.5,
            armijo_c: 1e-4,
            stall_ratio: 1e-14,
            probe_seed: 0x5eed,
            probe_directions: 5,
            constraint: Constraint::Free,
        }
    }
}

impl RelaxOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("grad_tol", self.grad_tol),
            ("initial_step", self.initial_step),
            ("stall_ratio", self.stall_ratio),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(WallError::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_iters == 0 {
            return Err(WallError::InvalidParameter("max_iters must be positive".into()));
        }
        if !(self.armijo_factor > 0.0 && self.armijo_factor < 1.0) {
            return Err(WallError::InvalidParameter(format!(
                "armijo_factor must lie in (0, 1), got {}",
                self.armijo_factor
            )));
        }
        if !(self.armijo_c > 0.0 && self.armijo_c <= 0.5) {
            return Err(WallError::InvalidParameter(format!(
                "armijo_c must lie in (0, 1/2], got {}",
                self.armijo_c
            )));
        }
        Ok(())
    }
}

/// One trace line; energies in length^2, `grad_norm` in reduced units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub exchange: f64,
    pub anisotropy: f64,
    pub stray: f64,
    pub total: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIters,
    Stalled,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Termination::Converged => "converged",
            Termination::MaxIters => "max_iters",
            Termination::Stalled => "stalled",
        })
    }
}

/// Central-difference slopes along seeded random tangent directions at the output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescentProbe {
    pub seed: u64,
    /// Directional derivatives (reduced units) per direction of unit weighted norm.
    pub slopes: Vec<f64>,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxReport {
    pub iterations: usize,
    pub trace: Vec<TraceRow>,
    pub final_grad_norm: f64,
    pub termination: Termination,
    pub initial_energy: EnergyBreakdown,
    pub final_energy: EnergyBreakdown,
    pub probe: Option<DescentProbe>,
}

impl RelaxReport {
    pub fn energy_trace(&self) -> Vec<f64> {
        self.trace.iter().map(|r| r.total).collect()
    }

    pub fn is_monotone(&self) -> bool {
        self.trace.windows(2).all(|w| w[1].total <= w[0].total)
    }

    pub fn write_trace_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "iter,exchange,anisotropy,stray,total,grad_norm")?;
        for r in &self.trace {
            writeln!(
                out,
                "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                r.iter, r.exchange, r.anisotropy, r.stray, r.total, r.grad_norm
            )?;
        }
        Ok(())
    }
}

fn weights(grid: &StripGrid) -> Vec<f64> {
    let mut w = Vec::with_capacity(grid.len());
    for r in 0..grid.n3() {
        for i in 0..grid.n1() {
            w.push(grid.w1_hat(i) * grid.w3_hat(r));
        }
    }
    w
}

/// Direction `-P^{-1} g` (stored as `P^{-1} g`) and its sup-norm and `<g, P^{-1} g>`.
fn precondition(grad: &[[f64; 3]], w: &[f64], dir: &mut [[f64; 3]]) -> (f64, f64) {
    let mut sup = 0.0f64;
    let mut gp = 0.0;
    for ((g, wi), d) in grad.iter().zip(w).zip(dir.iter_mut()) {
        for c in 0..3 {
            d[c] = g[c] / wi;
            gp += g[c] * d[c];
        }
        sup = sup.max(norm(*d));
    }
    (sup, gp)
}

fn retract(grid: &StripGrid, base: &[[f64; 3]], dir: &[[f64; 3]], step: f64, out: &mut [[f64; 3]]) {
    for ((m, d), o) in base.iter().zip(dir).zip(out.iter_mut()) {
        let v = [m[0] - step * d[0], m[1] - step * d[1], m[2] - step * d[2]];
        let n = norm(v);
        *o = [v[0] / n, v[1] / n, v[2] / n];
    }
    enforce_clamp(grid, out);
}

fn in_neel_class(grid: &StripGrid, m: &[[f64; 3]]) -> bool {
    (0..grid.n3()).all(|r| (0..grid.n1()).all(|i| {
        let v = m[grid.idx(i, r)];
        v[2] == 0.0 && v == m[grid.idx(i, 0)]
    }))
}

/// Replaces a tangent gradient by the gradient of the energy restricted to
/// the Neel class: column sums distributed by the `x3` weights, so that the
/// preconditioned direction is constant along each column.
fn restrict_gradient(grid: &StripGrid, g: &mut [[f64; 3]]) {
    let wsum: f64 = (0..grid.n3()).map(|r| grid.w3_hat(r)).sum();
    for i in 0..grid.n1() {
        let mut col = [0.0; 2];
        for r in 0..grid.n3() {
            let v = g[grid.idx(i, r)];
            col[0] += v[0];
            col[1] += v[1];
        }
        for r in 0..grid.n3() {
            let s = grid.w3_hat(r) / wsum;
            g[grid.idx(i, r)] = [s * col[0], s * col[1], 0.0];
        }
    }
}

/// Projects a displacement onto the Neel class: column means, no `m3`.
fn restrict_direction(grid: &StripGrid, v: &mut [[f64; 3]]) {
    let n3 = grid.n3() as f64;
    for i in 0..grid.n1() {
        let mut col = [0.0; 2];
        for r in 0..grid.n3() {
            let d = v[grid.idx(i, r)];
            col[0] += d[0] / n3;
            col[1] += d[1] / n3;
        }
        for r in 0..grid.n3() {
            v[grid.idx(i, r)] = [col[0], col[1], 0.0];
        }
    }
}

fn tangent_gradient(grid: &StripGrid, m: &[[f64; 3]], g: &mut [[f64; 3]], constraint: Constraint) {
    project_tangent(grid, m, g);
    if constraint == Constraint::NeelClass {
        restrict_gradient(grid, g);
    }
}

fn row(iter: usize, e: &EnergyBreakdown, t2: f64, grad_norm: f64) -> TraceRow {
    TraceRow {
        iter,
        exchange: e.exchange * t2,
        anisotropy: e.anisotropy * t2,
        stray: e.stray * t2,
        total: e.total * t2,
        grad_norm,
    }
}

/// Relaxes an admissible field; the output satisfies `E(out) <= E(in)`.
pub fn relax(
    field: &MagnetizationField,
    params: &MaterialParams,
    opts: &RelaxOptions,
) -> Result<(MagnetizationField, RelaxReport)> {
    opts.validate()?;
    let adm = field.validate_admissible();
    if !adm.passed {
        return Err(WallError::NotAdmissible(adm.to_string()));
    }
    let grid = *field.grid();
    if opts.constraint == Constraint::NeelClass && !in_neel_class(&grid, field.values()) {
        return Err(WallError::NotAdmissible(
            "neel_class relaxation needs an in-plane field independent of x3".into(),
        ));
    }
    let mut model = EnergyModel::new(grid, *params)?;
    let t2 = params.t().powi(2);
    let w = weights(&grid);
    let n = grid.len();

    let mut m = field.values().to_vec();
    let mut g = vec![[0.0; 3]; n];
    let mut p = vec![[0.0; 3]; n];
    let mut m_try = vec![[0.0; 3]; n];
    let mut g_try = vec![[0.0; 3]; n];
    let mut p_try = vec![[0.0; 3]; n];

    let mut e = model.energy_grad_hat(&m, &mut g);
    tangent_gradient(&grid, &m, &mut g, opts.constraint);
    let (mut sup, mut gp) = precondition(&g, &w, &mut p);
    let initial = e.scaled(t2);
    let mut trace = vec![row(0, &e, t2, sup)];
    if !e.total.is_finite() {
        return Err(WallError::RelaxAborted { iteration: 0, trace: Box::new(trace) });
    }

    let mut step = opts.initial_step;
    let mut termination = Termination::MaxIters;
    let mut iterations = 0;
    for it in 1..=opts.max_iters {
        if sup <= opts.grad_tol {
            termination = Termination::Converged;
            break;
        }
        let trial = step;
        let mut alpha = trial;
        let accepted = loop {
            retract(&grid, &m, &p, alpha, &mut m_try);
            let e_try = model.energy_grad_hat(&m_try, &mut g_try);
            if !e_try.total.is_finite() {
                return Err(WallError::RelaxAborted { iteration: it, trace: Box::new(trace) });
            }
            if e_try.total <= e.total - opts.armijo_c * alpha * gp && e_try.total < e.total {
                break Some(e_try);
            }
            alpha *= opts.armijo_factor;
            if alpha < opts.stall_ratio * trial {
                break None;
            }
        };
        let Some(e_new) = accepted else {
            termination = Termination::Stalled;
            break;
        };
        tangent_gradient(&grid, &m_try, &mut g_try, opts.constraint);
        let (sup_new, gp_new) = precondition(&g_try, &w, &mut p_try);
        // Barzilai-Borwein length in the weighted inner product
        let (mut ss, mut sy) = (0.0, 0.0);
        for k in 0..n {
            for c in 0..3 {
                let s = m_try[k][c] - m[k][c];
                let y = p_try[k][c] - p[k][c];
                ss += w[k] * s * s;
                sy += w[k] * s * y;
            }
        }
        step = if sy > 0.0 { (ss / sy).min(1e3 * alpha) } else { 2.0 * alpha };
        std::mem::swap(&mut m, &mut m_try);
        std::mem::swap(&mut g, &mut g_try);
        std::mem::swap(&mut p, &mut p_try);
        e = e_new;
        sup = sup_new;
        gp = gp_new;
        iterations = it;
        trace.push(row(it, &e, t2, sup));
    }
    if termination == Termination::MaxIters && sup <= opts.grad_tol {
        termination = Termination::Converged;
    }

    let probe = if termination == Termination::Converged {
        Some(descent_probe(&mut model, &grid, &m, &w, opts, sup))
    } else {
        None
    };
    let out = MagnetizationField::from_values(grid, m)?;
    Ok((
        out,
        RelaxReport {
            iterations,
            trace,
            final_grad_norm: sup,
            termination,
            initial_energy: initial,
            final_energy: e.scaled(t2),
            probe,
        },
    ))
}

fn descent_probe(
    model: &mut EnergyModel,
    grid: &StripGrid,
    m: &[[f64; 3]],
    w: &[f64],
    opts: &RelaxOptions,
    sup: f64,
) -> DescentProbe {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.probe_seed);
    let eps = 1e-6;
    let mut slopes = Vec::with_capacity(opts.probe_directions);
    let mut tolerance = 0.0f64;
    let mut plus = vec![[0.0; 3]; m.len()];
    let mut minus = vec![[0.0; 3]; m.len()];
    for _ in 0..opts.probe_directions {
        let mut v: Vec<[f64; 3]> = (0..m.len())
            .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
            .collect();
        project_tangent(grid, m, &mut v);
        if opts.constraint == Constraint::NeelClass {
            restrict_direction(grid, &mut v);
        }
        let wn: f64 = v.iter().zip(w).map(|(d, wi)| wi * (d[0] * d[0] + d[1] * d[1] + d[2] * d[2])).sum();
        let scale = 1.0 / wn.sqrt().max(f64::MIN_POSITIVE);
        v.iter_mut().for_each(|d| d.iter_mut().for_each(|c| *c *= scale));
        // |<g, v>| <= sup |P^{-1} g| * sum w |v|
        let l1: f64 = v.iter().zip(w).map(|(d, wi)| wi * norm(*d)).sum();
        retract(grid, m, &v, -eps, &mut plus);
        retract(grid, m, &v, eps, &mut minus);
        let ep = model.energy_hat(&plus).total;
        let em = model.energy_hat(&minus).total;
        let slope = (ep - em) / (2.0 * eps);
        let round_off = 1e-9 * (ep.abs() + em.abs()) / eps;
        tolerance = tolerance.max(sup * l1 + round_off);
        slopes.push(slope);
    }
    let passed = slopes.iter().all(|s| s.abs() <= tolerance);
    DescentProbe { seed: opts.probe_seed, slopes, tolerance, passed }
}

#[derive(Debug, Clone)]
pub struct BestOf {
    pub field: MagnetizationField,
    pub energy: EnergyBreakdown,
    pub provenance: String,
    pub reports: Vec<(String, RelaxReport)>,
}

/// Relaxes every tagged initializer and keeps the lowest total; ties go to the first.
pub fn best_of(
    initializers: &[(String, MagnetizationField)],
    params: &MaterialParams,
    opts: &RelaxOptions,
) -> Result<BestOf> {
    if initializers.is_empty() {
        return Err(WallError::InvalidParameter("best_of needs at least one initializer".into()));
    }
    let mut best: Option<(MagnetizationField, EnergyBreakdown, String)> = None;
    let mut reports = Vec::with_capacity(initializers.len());
    for (tag, init) in initializers {
        let (out, report) = relax(init, params, opts)?;
        let e = report.final_energy.clone();
        if best.as_ref().map_or(true, |b| e.total < b.1.total) {
            best = Some((out, e, tag.clone()));
        }
        reports.push((tag.clone(), report));
    }
    let (field, energy, provenance) = best.expect("non-empty");
    Ok(BestOf { field, energy, provenance, reports })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{build_bloch, build_neel, ConstructionOptions};
    use crate::energy::total_energy;
    use crate::fields::is_unit;

    fn quick() -> RelaxOptions {
        RelaxOptions { max_iters: 200, ..Default::default() }
    }

    fn rough_wall(grid: StripGrid) -> MagnetizationField {
        MagnetizationField::from_fn(grid, |x1, x3| {
            let s = x1 / grid.thickness();
            [(-s * s).exp() * (1.0 + x3), (3.0 * s).tanh(), 0.3 * (-s * s).exp() * (7.0 * x3).sin()]
        })
        .unwrap()
    }

    #[test]
    fn options_validation() {
        assert!(RelaxOptions::default().validate().is_ok());
        assert!(RelaxOptions { armijo_c: 0.6, ..Default::default() }.validate().is_err());
        assert!(RelaxOptions { armijo_factor: 1.0, ..Default::default() }.validate().is_err());
        assert!(RelaxOptions { grad_tol: 0.0, ..Default::default() }.validate().is_err());
        assert!(RelaxOptions { max_iters: 0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn descent_is_monotone_feasible_and_deterministic() {
        let g = StripGrid::new(4.0, 1.0, 41, 9).unwrap();
        let p = MaterialParams::new(0.5, 1e-2, 1.0).unwrap();
        let f = rough_wall(g);
        let (a, ra) = relax(&f, &p, &quick()).unwrap();
        let (b, rb) = relax(&f, &p, &quick()).unwrap();
        assert_eq!(a.values(), b.values());
        assert_eq!(ra.trace, rb.trace);
        assert!(ra.trace.windows(2).all(|w| w[1].total < w[0].total));
        assert!(a.values().iter().all(|v| is_unit(*v)));
        assert!(a.validate_admissible().passed);
        assert!(ra.final_energy.total < 0.8 * ra.initial_energy.total);
        let direct = total_energy(&a, &p).unwrap().total;
        assert!((direct - ra.final_energy.total).abs() <= 1e-12 * direct);
    }

    #[test]
    fn relaxed_input_needs_no_further_steps() {
        let g = StripGrid::new(3.0, 1.0, 25, 5).unwrap();
        let p = MaterialParams::new(0.6, 5e-2, 1.0).unwrap();
        let opts = RelaxOptions { grad_tol: 1e-6, max_iters: 20000, ..Default::default() };
        let (once, _) = relax(&rough_wall(g), &p, &opts).unwrap();
        let (twice, r) = relax(&once, &p, &opts).unwrap();
        assert_eq!(r.termination, Termination::Converged);
        assert_eq!(r.iterations, 0);
        assert_eq!(twice.values(), once.values());
    }

    #[test]
    fn converged_run_passes_descent_probe() {
        let g = StripGrid::new(3.0, 1.0, 25, 5).unwrap();
        let p = MaterialParams::new(0.6, 5e-2, 1.0).unwrap();
        let opts = RelaxOptions { grad_tol: 1e-6, max_iters: 20000, ..Default::default() };
        let (_, r) = relax(&rough_wall(g), &p, &opts).unwrap();
        assert_eq!(r.termination, Termination::Converged, "{:?}", r.trace.last());
        assert!(r.final_grad_norm <= 1e-6);
        let probe = r.probe.unwrap();
        assert_eq!(probe.slopes.len(), 5);
        assert!(probe.passed, "{probe:?}");
    }

    #[test]
    fn neel_class_stays_in_plane_and_column_constant() {
        let p = MaterialParams::from_ratio(1e-2, 2.0).unwrap();
        let g = StripGrid::new(40.0, 2.0, 401, 5).unwrap();
        let f = build_neel(&g, &p).unwrap().value;
        let opts = RelaxOptions { max_iters: 300, grad_tol: 1e-6, constraint: Constraint::NeelClass, ..Default::default() };
        let (out, r) = relax(&f, &p, &opts).unwrap();
        assert!(r.is_monotone() && r.final_energy.total < r.initial_energy.total);
        assert!(in_neel_class(&g, out.values()));
        if let Some(probe) = &r.probe {
            assert!(probe.passed, "{probe:?}");
        }
        let free = relax(&f, &p, &RelaxOptions { max_iters: 300, ..Default::default() }).unwrap().1;
        assert!(free.final_energy.total <= r.final_energy.total * (1.0 + 1e-9));
        let rough = rough_wall(StripGrid::new(4.0, 1.0, 41, 9).unwrap());
        assert!(matches!(relax(&rough, &p, &opts), Err(WallError::NotAdmissible(_))));
    }

    #[test]
    fn max_iters_is_reported() {
        let g = StripGrid::new(4.0, 1.0, 41, 9).unwrap();
        let p = MaterialParams::new(0.5, 1e-2, 1.0).unwrap();
        let (_, r) = relax(&rough_wall(g), &p, &RelaxOptions { max_iters: 3, ..Default::default() }).unwrap();
        assert_eq!(r.termination, Termination::MaxIters);
        assert_eq!(r.trace.len(), 4);
        let mut csv = Vec::new();
        r.write_trace_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("iter,exchange,anisotropy,stray,total,grad_norm\n"));
        assert_eq!(text.lines().count(), 5);
    }

    #[test]
    fn inadmissible_input_rejected() {
        let g = StripGrid::new(4.0, 1.0, 20, 4).unwrap();
        let p = MaterialParams::new(0.5, 1e-2, 1.0).unwrap();
        let f = MagnetizationField::make_uniform(g, [1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(relax(&f, &p, &quick()), Err(WallError::NotAdmissible(_))));
    }

    #[test]
    fn best_of_single_and_pair() {
        let p = MaterialParams::from_ratio(1e-2, 1.0).unwrap();
        let g = StripGrid::new(50.0, 1.0, 401, 3).unwrap();
        let neel = build_neel(&g, &p).unwrap().value;
        let single = best_of(&[("neel".into(), neel.clone())], &p, &quick()).unwrap();
        assert_eq!(single.provenance, "neel");
        let gb = StripGrid::new(5.0, 1.0, 241, 49).unwrap();
        let bloch = build_bloch(&gb, &p, &ConstructionOptions::default()).unwrap().value;
        let pair = best_of(&[("neel".into(), neel), ("bloch".into(), bloch)], &p, &quick()).unwrap();
        assert_eq!(pair.reports.len(), 2);
        assert_eq!(pair.provenance, "neel");
        assert!(best_of(&[], &p, &quick()).is_err());
    }
}
