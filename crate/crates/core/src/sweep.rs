//! Parameter study over `(Q, t/d)`: both walls relaxed at every point,
//! compared with the thick (`d^2`) and thin (`t^2 / ln(t^2/(Q d^2))`) branches.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::bounds::{lemma_l1_ratio, lemma_l2_ratio, lower_bound_ratio};
use crate::constructions::{build_bloch, build_neel, ConstructionOptions};
use crate::energy::total_energy;
use crate::error::{Result, WallError};
use crate::fields::{MaterialParams, StripGrid};
use crate::minimize::{relax, Constraint, RelaxOptions, RelaxReport};

/// Grid choice per wall type; lengths in units of `t` unless noted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridPolicy {
    /// Bloch spacing `h <= (d/t) / cells_per_d`, also `h <= delta / 4`.
    pub cells_per_d: f64,
    pub bloch_half_width: f64,
    /// Neel half width `max(neel_min_half_width, neel_tail / Q)`.
    pub neel_tail: f64,
    pub neel_min_half_width: f64,
    /// Neel spacing `h <= min(d/t, (d/t)^2) / neel_cells_per_core`.
    pub neel_cells_per_core: f64,
    pub neel_n3: usize,
    pub max_n1: usize,
}

impl Default for GridPolicy {
    fn default() -> Self {
        Self {
            cells_per_d: 8.0,
            bloch_half_width: 5.0,
            neel_tail: 2.0,
            neel_min_half_width: 5.0,
            neel_cells_per_core: 4.0,
            neel_n3: 3,
            max_n1: (1 << 18) + 1,
        }
    }
}

fn smooth_intervals(min: usize) -> usize {
    // 2^a 3^b 5^c intervals keep the periodic transform fast
    let mut n = min.max(4);
    loop {
        let mut m = n;
        for p in [2, 3, 5] {
            while m % p == 0 {
                m /= p;
            }
        }
        if m == 1 {
            return n;
        }
        n += 1;
    }
}

impl GridPolicy {
    pub fn bloch_grid(&self, params: &MaterialParams, delta: f64) -> Result<StripGrid> {
        let h = (params.d_hat() / self.cells_per_d).min(0.25 * delta);
        let n3 = (1.0 / h).ceil() as usize + 1;
        let cells = smooth_intervals((2.0 * self.bloch_half_width / h).ceil() as usize);
        let n1 = (cells + 1).min(self.max_n1);
        StripGrid::new(self.bloch_half_width * params.t(), params.t(), n1, n3)
    }

    pub fn neel_grid(&self, params: &MaterialParams) -> Result<StripGrid> {
        let half = self.neel_min_half_width.max(self.neel_tail / params.q());
        let core = params.d_hat().min(params.d_hat().powi(2));
        let h = core / self.neel_cells_per_core;
        let cells = smooth_intervals((2.0 * half / h).ceil() as usize);
        let n1 = if cells + 1 > self.max_n1 {
            // largest smooth size within the cap
            let mut c = self.max_n1 - 1;
            while smooth_intervals(c) != c {
                c -= 1;
            }
            c + 1
        } else {
            cells + 1
        };
        StripGrid::new(half * params.t(), params.t(), n1, self.neel_n3)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub q_values: Vec<f64>,
    pub t_over_d: Vec<f64>,
    pub grid: GridPolicy,
    pub construction: ConstructionOptions,
    pub relax_bloch: RelaxOptions,
    pub relax_neel: RelaxOptions,
    /// Points must satisfy `Q <= q_max` and `margin Q <= (t/d)^2 <= 1 / (margin Q)`.
    pub q_max: f64,
    pub regime_margin: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            q_values: vec![1e-2, 1e-3, 1e-4],
            t_over_d: vec![1.0, 2.0, 4.0, 6.0],
            grid: GridPolicy::default(),
            construction: ConstructionOptions::default(),
            relax_bloch: RelaxOptions {
                max_iters: 1000,
                ..RelaxOptions::default()
            },
            relax_neel: RelaxOptions {
                max_iters: 500,
                constraint: Constraint::NeelClass,
                ..RelaxOptions::default()
            },
            q_max: 0.01,
            regime_margin: 2.0,
        }
    }
}

impl SweepConfig {
    pub fn in_regime(&self, q: f64, t_over_d: f64) -> bool {
        let r2 = t_over_d * t_over_d;
        q > 0.0 && q <= self.q_max && r2 >= self.regime_margin * q && r2 * self.regime_margin * q <= 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Winner {
    Bloch,
    Neel,
}

impl std::fmt::Display for Winner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Winner::Bloch => "bloch",
            Winner::Neel => "neel",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointStatus {
    Ok,
    SkippedRegime,
    Failed,
}

impl std::fmt::Display for PointStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PointStatus::Ok => "ok",
            PointStatus::SkippedRegime => "skipped_regime",
            PointStatus::Failed => "failed",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub n1: usize,
    pub n3: usize,
    pub l_over_t: f64,
}

impl From<&StripGrid> for GridSummary {
    fn from(g: &StripGrid) -> Self {
        Self {
            n1: g.n1(),
            n3: g.n3(),
            l_over_t: g.half_width() / g.thickness(),
        }
    }
}

/// One sweep point (`d = 1`); energies are `NaN` when the point did not run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub q: f64,
    pub t_over_d: f64,
    pub e_bloch: f64,
    pub e_neel: f64,
    pub e_min: f64,
    pub winner: Option<Winner>,
    pub pred_thick: f64,
    pub pred_thin: f64,
    pub ratio_thick: f64,
    pub ratio_thin: f64,
    pub l2_ratio: f64,
    pub l1_ratio: f64,
    pub lb_ratio: f64,
    pub iters_bloch: usize,
    pub iters_neel: usize,
    pub status: PointStatus,
    pub message: String,
    pub bloch_grid: Option<GridSummary>,
    pub neel_grid: Option<GridSummary>,
    /// Stray fraction of the Bloch construction before relaxation.
    pub bloch_stray_fraction: f64,
}

impl SweepPoint {
    fn empty(q: f64, t_over_d: f64, status: PointStatus, message: String) -> Self {
        let r2 = t_over_d * t_over_d;
        let log = (r2 / q).ln();
        Self {
            q,
            t_over_d,
            e_bloch: f64::NAN,
            e_neel: f64::NAN,
            e_min: f64::NAN,
            winner: None,
            pred_thick: 1.0,
            pred_thin: if log > 0.0 { r2 / log } else { f64::NAN },
            ratio_thick: f64::NAN,
            ratio_thin: f64::NAN,
            l2_ratio: f64::NAN,
            l1_ratio: f64::NAN,
            lb_ratio: f64::NAN,
            iters_bloch: 0,
            iters_neel: 0,
            status,
            message,
            bloch_grid: None,
            neel_grid: None,
            bloch_stray_fraction: f64::NAN,
        }
    }

    /// Grid of the winning wall (Bloch if no winner).
    pub fn winner_grid(&self) -> Option<GridSummary> {
        match self.winner {
            Some(Winner::Neel) => self.neel_grid,
            _ => self.bloch_grid,
        }
    }
}

/// Relaxed energies of both walls at one `(Q, t/d)`.
#[derive(Debug, Clone)]
pub struct PairEvaluation {
    pub params: MaterialParams,
    pub bloch: (crate::fields::MagnetizationField, RelaxReport),
    pub neel: (crate::fields::MagnetizationField, RelaxReport),
    pub bloch_grid: StripGrid,
    pub neel_grid: StripGrid,
    pub bloch_stray_fraction: f64,
    pub warnings: Vec<String>,
}

/// Builds both initializers from scratch on their own grids and relaxes them.
pub fn evaluate_pair(q: f64, t_over_d: f64, cfg: &SweepConfig) -> Result<PairEvaluation> {
    let params = MaterialParams::from_ratio(q, t_over_d)?;
    let bloch_grid = cfg.grid.bloch_grid(&params, cfg.construction.delta)?;
    let neel_grid = cfg.grid.neel_grid(&params)?;
    let bloch0 = build_bloch(&bloch_grid, &params, &cfg.construction)?;
    let neel0 = build_neel(&neel_grid, &params)?;
    let bloch_stray_fraction = total_energy(&bloch0.value, &params)?.stray_fraction();
    let bloch = relax(&bloch0.value, &params, &cfg.relax_bloch)?;
    let neel = relax(&neel0.value, &params, &cfg.relax_neel)?;
    let mut warnings = bloch0.warnings;
    warnings.extend(neel0.warnings);
    Ok(PairEvaluation {
        params,
        bloch,
        neel,
        bloch_grid,
        neel_grid,
        bloch_stray_fraction,
        warnings,
    })
}

fn run_point(q: f64, t_over_d: f64, cfg: &SweepConfig) -> SweepPoint {
    if !cfg.in_regime(q, t_over_d) {
        return SweepPoint::empty(
            q,
            t_over_d,
            PointStatus::SkippedRegime,
            format!("Q = {q}, t/d = {t_over_d} outside the sweep regime"),
        );
    }
    let pair = match evaluate_pair(q, t_over_d, cfg) {
        Ok(p) => p,
        Err(e) => return SweepPoint::empty(q, t_over_d, PointStatus::Failed, e.to_string()),
    };
    let mut pt = SweepPoint::empty(q, t_over_d, PointStatus::Ok, pair.warnings.join("; "));
    let (eb, en) = (pair.bloch.1.final_energy.total, pair.neel.1.final_energy.total);
    pt.e_bloch = eb;
    pt.e_neel = en;
    let (winner, field) = if eb < en {
        (Winner::Bloch, &pair.bloch.0)
    } else {
        (Winner::Neel, &pair.neel.0)
    };
    pt.e_min = eb.min(en);
    pt.winner = Some(winner);
    pt.ratio_thick = pt.e_min / pt.pred_thick;
    pt.ratio_thin = pt.e_min / pt.pred_thin;
    pt.iters_bloch = pair.bloch.1.iterations;
    pt.iters_neel = pair.neel.1.iterations;
    pt.bloch_grid = Some(GridSummary::from(&pair.bloch_grid));
    pt.neel_grid = Some(GridSummary::from(&pair.neel_grid));
    pt.bloch_stray_fraction = pair.bloch_stray_fraction;
    let ratios = (|| -> Result<(f64, f64, f64)> {
        Ok((
            lemma_l2_ratio(field, &pair.params)?.ratio,
            lemma_l1_ratio(field, &pair.params)?.ratio,
            lower_bound_ratio(field, &pair.params)?.ratio,
        ))
    })();
    match ratios {
        Ok((l2, l1, lb)) => {
            pt.l2_ratio = l2;
            pt.l1_ratio = l1;
            pt.lb_ratio = lb;
        }
        Err(e) => {
            pt.status = PointStatus::Failed;
            pt.message = e.to_string();
        }
    }
    pt
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub points: Vec<SweepPoint>,
}

pub const CSV_COLUMNS: [&str; 18] = [
    "Q", "t_over_d", "E_bloch", "E_neel", "E_min", "winner", "pred_thick", "pred_thin",
    "ratio_thick", "ratio_thin", "l2_ratio", "l1_ratio", "lb_ratio", "n1", "n3", "L_over_t",
    "iters_bloch", "iters_neel",
];

pub const CSV_EXTRA_COLUMNS: [&str; 8] = [
    "status", "n1_bloch", "n3_bloch", "L_over_t_bloch", "n1_neel", "n3_neel", "L_over_t_neel",
    "bloch_stray_fraction",
];

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.10e}")
    } else {
        "nan".into()
    }
}

fn grid_cols(g: Option<GridSummary>) -> [String; 3] {
    match g {
        Some(g) => [g.n1.to_string(), g.n3.to_string(), num(g.l_over_t)],
        None => ["".into(), "".into(), "".into()],
    }
}

impl SweepTable {
    pub fn ok_points(&self) -> impl Iterator<Item = &SweepPoint> {
        self.points.iter().filter(|p| p.status == PointStatus::Ok)
    }

    /// Header plus one row per point; the spec'd columns first, then the extras.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let header: Vec<&str> = CSV_COLUMNS.iter().chain(CSV_EXTRA_COLUMNS.iter()).copied().collect();
        writeln!(out, "{}", header.join(","))?;
        for p in &self.points {
            let w = grid_cols(p.winner_grid());
            let b = grid_cols(p.bloch_grid);
            let n = grid_cols(p.neel_grid);
            let row = [
                num(p.q),
                num(p.t_over_d),
                num(p.e_bloch),
                num(p.e_neel),
                num(p.e_min),
                p.winner.map(|w| w.to_string()).unwrap_or_default(),
                num(p.pred_thick),
                num(p.pred_thin),
                num(p.ratio_thick),
                num(p.ratio_thin),
                num(p.l2_ratio),
                num(p.l1_ratio),
                num(p.lb_ratio),
                w[0].clone(),
                w[1].clone(),
                w[2].clone(),
                p.iters_bloch.to_string(),
                p.iters_neel.to_string(),
                p.status.to_string(),
                b[0].clone(),
                b[1].clone(),
                b[2].clone(),
                n[0].clone(),
                n[1].clone(),
                n[2].clone(),
                num(p.bloch_stray_fraction),
            ];
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Points in `(Q, t/d)` order of the config lists; failures are recorded, not raised.
pub fn run_sweep(cfg: &SweepConfig) -> SweepTable {
    let mut points = Vec::with_capacity(cfg.q_values.len() * cfg.t_over_d.len());
    for &q in &cfg.q_values {
        for &td in &cfg.t_over_d {
            points.push(run_point(q, td, cfg));
        }
    }
    SweepTable { points }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossoverProbe {
    pub t_over_d: f64,
    pub e_bloch: f64,
    pub e_neel: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossoverResult {
    pub q: f64,
    pub t_star_over_d: f64,
    /// `sqrt(ln(1/Q))`
    pub predicted: f64,
    pub ratio: f64,
    pub bracket: (f64, f64),
    pub probes: Vec<CrossoverProbe>,
}

/// Bisection on `E_bloch - E_neel` to relative bracket width `rel_width`.
pub fn find_crossover_with(
    q: f64,
    bracket: (f64, f64),
    cfg: &SweepConfig,
    rel_width: f64,
) -> Result<CrossoverResult> {
    let (mut a, mut b) = bracket;
    if !(a > 0.0 && b > a) {
        return Err(WallError::InvalidParameter(format!(
            "crossover bracket must satisfy 0 < a < b, got [{a}, {b}]"
        )));
    }
    let mut probes = Vec::new();
    let mut diff = |td: f64| -> Result<f64> {
        let pair = evaluate_pair(q, td, cfg)?;
        let (eb, en) = (pair.bloch.1.final_energy.total, pair.neel.1.final_energy.total);
        probes.push(CrossoverProbe {
            t_over_d: td,
            e_bloch: eb,
            e_neel: en,
        });
        Ok(eb - en)
    };
    let mut fa = diff(a)?;
    let fb = diff(b)?;
    if fa * fb > 0.0 || fa == fb {
        return Err(WallError::NoSignChange { a, b, fa, fb });
    }
    while (b - a) / a > rel_width {
        let m = 0.5 * (a + b);
        let fm = diff(m)?;
        if fm == 0.0 {
            a = m;
            b = m;
            break;
        }
        if fm * fa < 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    let t_star = 0.5 * (a + b);
    let predicted = (1.0 / q).ln().sqrt();
    Ok(CrossoverResult {
        q,
        t_star_over_d: t_star,
        predicted,
        ratio: t_star / predicted,
        bracket: (a, b),
        probes,
    })
}

pub fn find_crossover(q: f64, bracket: (f64, f64), cfg: &SweepConfig) -> Result<CrossoverResult> {
    find_crossover_with(q, bracket, cfg, 0.02)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchFit {
    pub points: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub geo_mean_ratio: f64,
    /// Least-squares slope of `ln E` against `ln prediction`; `None` if the
    /// prediction does not vary (the thick branch at fixed `d`).
    pub slope: Option<f64>,
}

impl BranchFit {
    pub fn spread(&self) -> f64 {
        self.max_ratio / self.min_ratio
    }
}

pub fn fit_series(energy: &[f64], prediction: &[f64]) -> Result<BranchFit> {
    if energy.len() != prediction.len() || energy.len() < 3 {
        return Err(WallError::InsufficientData(format!(
            "need at least 3 matched points, got {} energies and {} predictions",
            energy.len(),
            prediction.len()
        )));
    }
    let n = energy.len() as f64;
    let ratios: Vec<f64> = energy.iter().zip(prediction).map(|(e, p)| e / p).collect();
    let min_ratio = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_ratio = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let geo_mean_ratio = (ratios.iter().map(|r| r.ln()).sum::<f64>() / n).exp();
    let xs: Vec<f64> = prediction.iter().map(|p| p.ln()).collect();
    let ys: Vec<f64> = energy.iter().map(|e| e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 1e-12 * n { Some(sxy / sxx) } else { None };
    Ok(BranchFit {
        points: energy.len(),
        min_ratio,
        max_ratio,
        geo_mean_ratio,
        slope,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub thin: Option<BranchFit>,
    pub thick: Option<BranchFit>,
}

/// Fits every branch (by winner) that has at least three points.
pub fn fit_scaling(table: &SweepTable) -> Result<ScalingReport> {
    let pick = |w: Winner, thin: bool| -> (Vec<f64>, Vec<f64>) {
        table
            .ok_points()
            .filter(|p| p.winner == Some(w))
            .map(|p| (p.e_min, if thin { p.pred_thin } else { p.pred_thick }))
            .unzip()
    };
    let (en, pn) = pick(Winner::Neel, true);
    let (eb, pb) = pick(Winner::Bloch, false);
    let thin = fit_series(&en, &pn).ok();
    let thick = fit_series(&eb, &pb).ok();
    if thin.is_none() && thick.is_none() {
        return Err(WallError::InsufficientData(format!(
            "no branch has 3 points ({} neel, {} bloch winners)",
            en.len(),
            eb.len()
        )));
    }
    Ok(ScalingReport { thin, thick })
}

/// Interval of `c` for which `winner = bloch` iff `pred_thick <= c pred_thin`
/// holds at every point, if any.
pub fn branch_consistency(table: &SweepTable) -> Option<(f64, f64)> {
    let mut lo: f64 = 0.0;
    let mut hi = f64::INFINITY;
    for p in table.ok_points() {
        let r = p.pred_thick / p.pred_thin;
        match p.winner {
            Some(Winner::Bloch) => lo = lo.max(r),
            Some(Winner::Neel) => hi = hi.min(r),
            None => {}
        }
    }
    (lo < hi).then_some((lo, hi))
}
