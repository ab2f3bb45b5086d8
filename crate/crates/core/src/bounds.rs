//! Lower-bound inequalities evaluated as ratios `lhs / rhs`, without their
//! universal constants, and the ensemble audit that calibrates those constants.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constructions::{build_bloch, lift_profile, build_neel_profile, ConstructionOptions};
use crate::energy::total_energy;
use crate::error::{Result, WallError};
use crate::fields::{MagnetizationField, MaterialParams, StripGrid};
use crate::minimize::{relax, RelaxOptions};
use crate::sweep::GridPolicy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lemma {
    /// `int m3^2 <~ (1 + (t/d)^2) E`
    NormalComponent,
    /// `sup mbar1^2 <~ (ln(t^2/(Q d^2))/t^2 + 1/d^2) E`
    AverageInPlane,
    /// square around the wall centre: `int (m_i - mbar_i(xi))^2 <~ (t/d)^2 E`
    Poincare(usize),
    /// `1 <~ (ln(t^2/(Q d^2))/t^2 + 1/d^2) E`
    LowerBound,
}

impl std::fmt::Display for Lemma {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Lemma::NormalComponent => f.write_str("l2"),
            Lemma::AverageInPlane => f.write_str("l1"),
            Lemma::Poincare(c) => write!(f, "poincare_m{c}"),
            Lemma::LowerBound => f.write_str("lower_bound"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub lemma: Lemma,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub provenance: String,
    pub params: MaterialParams,
}

impl BoundReport {
    fn new(lemma: Lemma, lhs: f64, rhs: f64, params: &MaterialParams) -> Self {
        let ratio = if lhs == 0.0 { 0.0 } else { lhs / rhs };
        Self {
            lemma,
            lhs,
            rhs,
            ratio,
            provenance: String::new(),
            params: *params,
        }
    }

    pub fn with_provenance(mut self, tag: impl Into<String>) -> Self {
        self.provenance = tag.into();
        self
    }
}

/// Empirical constants from [`audit_ensemble`] with [`AuditConfig::default`]
/// at refinement levels 0 and 1. Measured maxima: l2 0.112 / 0.123,
/// l1 0.201 / 0.200, Poincare 0.0443 / 0.0443; shipped values are 1.5x the
/// larger one, rounded up.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub l2: f64,
    pub l1: f64,
    pub poincare: f64,
}

pub const CALIBRATION: Calibration = Calibration {
    l2: 0.2,
    l1: 0.31,
    poincare: 0.07,
};

fn check_admissible(field: &MagnetizationField) -> Result<()> {
    let rep = field.validate_admissible();
    if rep.passed {
        Ok(())
    } else {
        Err(WallError::NotAdmissible(rep.to_string()))
    }
}

fn hypothesis(params: &MaterialParams) -> Result<f64> {
    let log = params.log_ratio();
    if !(log > 0.0) {
        return Err(WallError::OutsideHypothesis(format!(
            "t^2/(Q d^2) = {:.4} <= 1",
            log.exp()
        )));
    }
    Ok(log)
}

/// `ln(t^2/(Q d^2))/t^2 + 1/d^2`.
pub fn lower_bound_weight(params: &MaterialParams) -> Result<f64> {
    let log = hypothesis(params)?;
    Ok(log / params.t().powi(2) + 1.0 / params.d().powi(2))
}

pub fn lemma_l2_ratio(field: &MagnetizationField, params: &MaterialParams) -> Result<BoundReport> {
    check_admissible(field)?;
    let e = total_energy(field, params)?.total;
    let g = field.grid();
    let t2 = g.thickness().powi(2);
    let mut lhs = 0.0;
    for r in 0..g.n3() {
        for i in 0..g.n1() {
            let m3 = field.at(i, r)[2];
            lhs += g.w1_hat(i) * g.w3_hat(r) * m3 * m3;
        }
    }
    lhs *= t2;
    let rhs = (1.0 + params.t_over_d().powi(2)) * e;
    Ok(BoundReport::new(Lemma::NormalComponent, lhs, rhs, params))
}

/// The sup is taken over grid nodes, a lower bound on the continuum sup.
pub fn lemma_l1_ratio(field: &MagnetizationField, params: &MaterialParams) -> Result<BoundReport> {
    let weight = lower_bound_weight(params)?;
    check_admissible(field)?;
    let e = total_energy(field, params)?.total;
    let lhs = field
        .vertical_average(1)?
        .iter()
        .map(|v| v * v)
        .fold(0.0, f64::max);
    Ok(BoundReport::new(Lemma::AverageInPlane, lhs, weight * e, params))
}

fn interp(values: &[f64], grid: &StripGrid, x: f64) -> f64 {
    let pos = (x + grid.half_width()) / grid.h1();
    let i = (pos.floor() as isize).clamp(0, grid.n1() as isize - 2) as usize;
    let s = pos - i as f64;
    values[i] * (1.0 - s) + values[i + 1] * s
}

/// First sign change of `mbar2` from the left, located by linear interpolation.
pub fn wall_centre(field: &MagnetizationField) -> Result<f64> {
    let g = field.grid();
    let avg = field.vertical_average(2)?;
    for i in 0..g.n1() - 1 {
        let (a, b) = (avg[i], avg[i + 1]);
        if a == 0.0 {
            return Ok(g.x1(i));
        }
        if a * b < 0.0 {
            let s = a / (a - b);
            return Ok(g.x1(i) + s * g.h1());
        }
    }
    Err(WallError::InvalidParameter(
        "vertical average of m2 does not change sign: the field is not a wall".into(),
    ))
}

pub fn poincare_ratio(
    field: &MagnetizationField,
    params: &MaterialParams,
    component: usize,
) -> Result<BoundReport> {
    if !(1..=3).contains(&component) {
        return Err(WallError::InvalidParameter(format!(
            "component must be 1, 2 or 3, got {component}"
        )));
    }
    check_admissible(field)?;
    let g = field.grid();
    let t = g.thickness();
    let xi = wall_centre(field)?;
    if xi - 0.5 * t < -g.half_width() || xi + 0.5 * t > g.half_width() {
        return Err(WallError::GridMismatch(format!(
            "square of side t around the wall centre {xi:.4} leaves [-L, L]"
        )));
    }
    let e = total_energy(field, params)?.total;
    let avg = field.vertical_average(component)?;
    let mean = interp(&avg, g, xi);
    // sample the square at the grid's x1 spacing, offset to the centre
    let cells = ((t / g.h1()).round() as usize).max(16);
    let hs = t / cells as f64;
    let mut row = vec![0.0; g.n1()];
    let mut lhs = 0.0;
    for r in 0..g.n3() {
        for (i, v) in row.iter_mut().enumerate() {
            *v = field.at(i, r)[component - 1];
        }
        let mut s = 0.0;
        for k in 0..=cells {
            let w = if k == 0 || k == cells { 0.5 } else { 1.0 };
            let v = interp(&row, g, xi - 0.5 * t + k as f64 * hs) - mean;
            s += w * v * v;
        }
        lhs += g.w3_hat(r) * t * s * hs;
    }
    let rhs = params.t_over_d().powi(2) * e;
    Ok(BoundReport::new(Lemma::Poincare(component), lhs, rhs, params))
}

pub fn lower_bound_ratio(field: &MagnetizationField, params: &MaterialParams) -> Result<BoundReport> {
    let weight = lower_bound_weight(params)?;
    check_admissible(field)?;
    let e = total_energy(field, params)?.total;
    Ok(BoundReport::new(Lemma::LowerBound, 1.0, weight * e, params))
}

/// All audited reports of one field: l2, l1, Poincare for each component.
pub fn lemma_reports(field: &MagnetizationField, params: &MaterialParams, tag: &str) -> Result<Vec<BoundReport>> {
    let mut out = vec![
        lemma_l2_ratio(field, params)?.with_provenance(tag),
        lemma_l1_ratio(field, params)?.with_provenance(tag),
    ];
    for c in 1..=3 {
        out.push(poincare_ratio(field, params, c)?.with_provenance(tag));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AuditConfig {
    pub q: f64,
    pub t_over_d: f64,
    pub grid: GridPolicy,
    pub perturbations: usize,
    pub seed: u64,
    pub relax: RelaxOptions,
    pub construction: ConstructionOptions,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            q: 1e-2,
            t_over_d: 2.0,
            grid: GridPolicy::default(),
            perturbations: 100,
            seed: 20240917,
            relax: RelaxOptions {
                max_iters: 1500,
                ..RelaxOptions::default()
            },
            construction: ConstructionOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxRatios {
    pub l2: f64,
    pub l1: f64,
    pub poincare: f64,
}

impl MaxRatios {
    fn absorb(&mut self, r: &BoundReport) {
        let slot = match r.lemma {
            Lemma::NormalComponent => &mut self.l2,
            Lemma::AverageInPlane => &mut self.l1,
            Lemma::Poincare(_) => &mut self.poincare,
            Lemma::LowerBound => return,
        };
        *slot = slot.max(r.ratio);
    }
}

#[derive(Debug, Clone)]
pub struct EnsembleAudit {
    pub bloch_grid: StripGrid,
    pub neel_grid: StripGrid,
    pub reports: Vec<BoundReport>,
    pub max: MaxRatios,
    /// Perturbed fields whose `mbar2` lost its sign change.
    pub skipped: usize,
}

/// Smooth seeded perturbation, a function of position so that it resamples
/// identically on refined grids.
#[derive(Debug, Clone)]
struct Perturbation {
    amp: [[f64; 3]; 4],
    freq: [(f64, f64); 4],
    phase: [f64; 4],
    width: f64,
}

impl Perturbation {
    fn draw(rng: &mut ChaCha8Rng) -> Self {
        let scale = rng.gen_range(0.05..0.6);
        let mut amp = [[0.0; 3]; 4];
        let mut freq = [(0.0, 0.0); 4];
        let mut phase = [0.0; 4];
        for j in 0..4 {
            for c in 0..3 {
                amp[j][c] = scale * rng.gen_range(-1.0..1.0);
            }
            freq[j] = (rng.gen_range(0.0..3.0), rng.gen_range(0.0..2.0));
            phase[j] = rng.gen_range(0.0..std::f64::consts::TAU);
        }
        Self {
            amp,
            freq,
            phase,
            width: rng.gen_range(0.3..1.5),
        }
    }

    fn at(&self, x1: f64, x3: f64) -> [f64; 3] {
        let env = (-(x1 / self.width).powi(2)).exp();
        let mut v = [0.0; 3];
        for j in 0..4 {
            let (a, b) = self.freq[j];
            let wave = (std::f64::consts::PI * (a * x1 + b * x3) + self.phase[j]).cos();
            for c in 0..3 {
                v[c] += env * self.amp[j][c] * wave;
            }
        }
        v
    }
}

fn perturbed(base: &MagnetizationField, p: &Perturbation) -> Result<MagnetizationField> {
    let g = *base.grid();
    let t = g.thickness();
    let mut values = Vec::with_capacity(g.len());
    for r in 0..g.n3() {
        for i in 0..g.n1() {
            let m = base.at(i, r);
            let d = p.at(g.x1(i) / t, g.x3(r) / t);
            values.push([m[0] + d[0], m[1] + d[1], m[2] + d[2]]);
        }
    }
    let mut f = MagnetizationField::from_values(g, values)?;
    f.normalize()?;
    f.enforce_clamp();
    Ok(f)
}

/// Both constructions on their own grids (each refined `refine` times), their
/// relaxations, and `perturbations` seeded perturbations alternating between them.
pub fn audit_ensemble(cfg: &AuditConfig, refine: u32) -> Result<EnsembleAudit> {
    let params = MaterialParams::from_ratio(cfg.q, cfg.t_over_d)?;
    let mut bloch_grid = cfg.grid.bloch_grid(&params, cfg.construction.delta)?;
    let mut neel_grid = cfg.grid.neel_grid(&params)?;
    for _ in 0..refine {
        bloch_grid = bloch_grid.refined();
        neel_grid = neel_grid.refined();
    }
    let bloch = build_bloch(&bloch_grid, &params, &cfg.construction)?.value;
    let profile = build_neel_profile(&params, neel_grid.half_width(), neel_grid.n1())?.value;
    let neel = lift_profile(&profile, &neel_grid)?;
    let (bloch_relaxed, _) = relax(&bloch, &params, &cfg.relax)?;
    let (neel_relaxed, _) = relax(&neel, &params, &cfg.relax)?;
    let mut reports = Vec::new();
    for (tag, f) in [
        ("bloch", &bloch),
        ("neel", &neel),
        ("bloch_relaxed", &bloch_relaxed),
        ("neel_relaxed", &neel_relaxed),
    ] {
        reports.extend(lemma_reports(f, &params, tag)?);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut skipped = 0;
    for k in 0..cfg.perturbations {
        let p = Perturbation::draw(&mut rng);
        let (tag, base) = if k % 2 == 0 { ("bloch", &bloch) } else { ("neel", &neel) };
        let f = perturbed(base, &p)?;
        // a perturbation may destroy the sign change of mbar2; those are not walls
        if wall_centre(&f).is_err() {
            skipped += 1;
            continue;
        }
        reports.extend(lemma_reports(&f, &params, &format!("{tag}+perturbation{k}"))?);
    }
    let mut max = MaxRatios {
        l2: 0.0,
        l1: 0.0,
        poincare: 0.0,
    };
    for r in &reports {
        max.absorb(r);
    }
    Ok(EnsembleAudit {
        bloch_grid,
        neel_grid,
        reports,
        max,
        skipped,
    })
}
