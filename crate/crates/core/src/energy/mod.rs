//! Specific wall energy: exchange, anisotropy and the nonlocal stray-field term.
//!
//! Discretization (thickness units internally, reported in length^2):
//! - exchange: edge differences `|m_{i+1} - m_i|^2 / h` weighted by the
//!   trapezoid weight of the transverse direction;
//! - anisotropy: trapezoid rule for `Q (m1^2 + m3^2)`;
//! - stray field: see [`stray`].
//!
//! The discrete energy is a quadratic form in the node values, so
//! [`energy_gradient`] is exact and matches central differences to round-off.

mod stray;

use num_complex::Complex64;

use crate::error::{Result, WallError};
use crate::fields::{MagnetizationField, MaterialParams, StripGrid};
use stray::{ModeRecord, StrayOperator};

/// Energy terms in units of length^2.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyBreakdown {
    pub exchange: f64,
    pub anisotropy: f64,
    pub stray: f64,
    pub total: f64,
    pub diagnostics: Option<StrayDiagnostics>,
}

impl EnergyBreakdown {
    fn from_parts(exchange: f64, anisotropy: f64, stray: f64) -> Self {
        Self {
            exchange,
            anisotropy,
            stray,
            total: exchange + anisotropy + stray,
            diagnostics: None,
        }
    }

    pub fn stray_fraction(&self) -> f64 {
        if self.total > 0.0 {
            self.stray / self.total
        } else {
            0.0
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            exchange: self.exchange * factor,
            anisotropy: self.anisotropy * factor,
            stray: self.stray * factor,
            total: self.total * factor,
            diagnostics: self.diagnostics,
        }
    }
}

/// Optional report attached by [`total_energy`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StrayDiagnostics {
    /// Largest mismatch of `(m1, m3)` between the `x1 = +L` column and its
    /// periodic image at `x1 = -L`; zero for clamped fields.
    pub wrap_residual: f64,
    /// `|sum_a b_a(k = 0)|`, the net charge of the zero mode.
    pub zero_mode_mass: f64,
    /// `|Dirichlet - pairing| / max(Dirichlet, tiny)`.
    pub reciprocity_defect: f64,
}

/// Per-wavenumber potential and the Dirichlet energy of the stray field.
#[derive(Debug, Clone)]
pub struct StrayFieldSolution {
    /// Non-negative wavenumbers of the periodic `x1` transform (1/length).
    pub wavenumbers: Vec<f64>,
    /// `u_hat(k, x3_r)` on the `x3` nodes, thickness units, one entry per wavenumber.
    pub modes: Vec<Vec<Complex64>>,
    /// `int_{R^2} |grad u|^2`, length^2.
    pub dirichlet_energy: f64,
    /// `int_Omega m . grad u`, length^2.
    pub pairing_energy: f64,
    pub wrap_residual: f64,
    pub zero_mode_mass: f64,
}

impl StrayFieldSolution {
    pub fn reciprocity_defect(&self) -> f64 {
        let scale = self.dirichlet_energy.abs().max(f64::MIN_POSITIVE);
        (self.dirichlet_energy - self.pairing_energy).abs() / scale
    }
}

/// Tangent vector per node, as returned by [`energy_gradient`].
#[derive(Debug, Clone, PartialEq)]
pub struct TangentField {
    grid: StripGrid,
    values: Vec<[f64; 3]>,
}

impl TangentField {
    pub fn grid(&self) -> &StripGrid {
        &self.grid
    }

    pub fn values(&self) -> &[[f64; 3]] {
        &self.values
    }

    pub fn dot(&self, other: &[[f64; 3]]) -> f64 {
        self.values
            .iter()
            .zip(other)
            .map(|(a, b)| a[0] * b[0] + a[1] * b[1] + a[2] * b[2])
            .sum()
    }

    pub fn max_norm(&self) -> f64 {
        self.values
            .iter()
            .map(|v| crate::fields::norm(*v))
            .fold(0.0, f64::max)
    }
}

/// Reusable evaluator for one grid and parameter set; holds FFT plans and scratch.
pub struct EnergyModel {
    grid: StripGrid,
    params: MaterialParams,
    stray: StrayOperator,
}

impl EnergyModel {
    pub fn new(grid: StripGrid, params: MaterialParams) -> Result<Self> {
        grid.check_thickness(&params)?;
        Ok(Self {
            stray: StrayOperator::new(&grid),
            grid,
            params,
        })
    }

    pub fn grid(&self) -> &StripGrid {
        &self.grid
    }

    pub fn params(&self) -> &MaterialParams {
        &self.params
    }

    fn check(&self, values: &[[f64; 3]]) -> Result<()> {
        if values.len() != self.grid.len() {
            return Err(WallError::GridMismatch(format!(
                "expected {} values, got {}",
                self.grid.len(),
                values.len()
            )));
        }
        Ok(())
    }

    /// Reduced (thickness-unit) energy; multiply by `t^2` for length^2.
    pub(crate) fn energy_hat(&mut self, values: &[[f64; 3]]) -> EnergyBreakdown {
        let ex = exchange_hat(&self.grid, &self.params, values, None);
        let an = anisotropy_hat(&self.grid, &self.params, values, None);
        let st = self.stray.evaluate(values, None, None).energy;
        EnergyBreakdown::from_parts(ex, an, st)
    }

    /// Reduced energy and its raw (ambient) gradient with respect to node values.
    pub(crate) fn energy_grad_hat(
        &mut self,
        values: &[[f64; 3]],
        grad: &mut [[f64; 3]],
    ) -> EnergyBreakdown {
        for g in grad.iter_mut() {
            *g = [0.0; 3];
        }
        let ex = exchange_hat(&self.grid, &self.params, values, Some(grad));
        let an = anisotropy_hat(&self.grid, &self.params, values, Some(grad));
        let st = self.stray.evaluate(values, Some(grad), None).energy;
        EnergyBreakdown::from_parts(ex, an, st)
    }

    pub fn evaluate(&mut self, values: &[[f64; 3]]) -> Result<EnergyBreakdown> {
        self.check(values)?;
        let t2 = self.params.t().powi(2);
        Ok(self.energy_hat(values).scaled(t2))
    }

    /// Energy and the raw gradient `dE/dm` (length^2 per node), not projected.
    pub fn evaluate_with_gradient(
        &mut self,
        values: &[[f64; 3]],
        grad: &mut [[f64; 3]],
    ) -> Result<EnergyBreakdown> {
        self.check(values)?;
        self.check(grad)?;
        let t2 = self.params.t().powi(2);
        let e = self.energy_grad_hat(values, grad);
        for g in grad.iter_mut() {
            for c in g.iter_mut() {
                *c *= t2;
            }
        }
        Ok(e.scaled(t2))
    }

    pub fn stray_solution(&mut self, values: &[[f64; 3]]) -> Result<StrayFieldSolution> {
        self.check(values)?;
        let mut modes: Vec<ModeRecord> = Vec::new();
        let eval = self.stray.evaluate(values, None, Some(&mut modes));
        let t = self.params.t();
        let g = &self.grid;
        let mut wrap = 0.0f64;
        for r in 0..g.n3() {
            let a = values[g.idx(0, r)];
            let b = values[g.idx(g.n1() - 1, r)];
            wrap = wrap.max((a[0] - b[0]).abs()).max((a[2] - b[2]).abs());
        }
        Ok(StrayFieldSolution {
            wavenumbers: modes.iter().map(|m| m.k / t).collect(),
            modes: modes.into_iter().map(|m| m.u).collect(),
            dirichlet_energy: eval.dirichlet * t * t,
            pairing_energy: eval.energy * t * t,
            wrap_residual: wrap,
            zero_mode_mass: eval.zero_mode_mass,
        })
    }
}

/// Reduced exchange `d_hat^2 * sum over edges`; optionally accumulates its gradient.
fn exchange_hat(
    grid: &StripGrid,
    params: &MaterialParams,
    values: &[[f64; 3]],
    mut grad: Option<&mut [[f64; 3]]>,
) -> f64 {
    let d2 = params.d_hat().powi(2);
    let (n1, n3) = (grid.n1(), grid.n3());
    let (h1, h3) = (grid.h1_hat(), grid.h3_hat());
    let mut e = 0.0;
    for r in 0..n3 {
        let w = d2 * grid.w3_hat(r) / h1;
        for i in 0..n1 - 1 {
            let (a, b) = (grid.idx(i, r), grid.idx(i + 1, r));
            e += w * edge(values, a, b, grad.as_deref_mut(), w);
        }
    }
    for r in 0..n3 - 1 {
        for i in 0..n1 {
            let w = d2 * grid.w1_hat(i) / h3;
            let (a, b) = (grid.idx(i, r), grid.idx(i, r + 1));
            e += w * edge(values, a, b, grad.as_deref_mut(), w);
        }
    }
    e
}

#[inline]
fn edge(values: &[[f64; 3]], a: usize, b: usize, grad: Option<&mut [[f64; 3]]>, w: f64) -> f64 {
    let (va, vb) = (values[a], values[b]);
    let d = [vb[0] - va[0], vb[1] - va[1], vb[2] - va[2]];
    if let Some(g) = grad {
        for c in 0..3 {
            g[b][c] += 2.0 * w * d[c];
            g[a][c] -= 2.0 * w * d[c];
        }
    }
    d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
}

fn anisotropy_hat(
    grid: &StripGrid,
    params: &MaterialParams,
    values: &[[f64; 3]],
    mut grad: Option<&mut [[f64; 3]]>,
) -> f64 {
    let q = params.q();
    let mut e = 0.0;
    for r in 0..grid.n3() {
        let w3 = grid.w3_hat(r);
        for i in 0..grid.n1() {
            let w = q * w3 * grid.w1_hat(i);
            let k = grid.idx(i, r);
            let v = values[k];
            e += w * (v[0] * v[0] + v[2] * v[2]);
            if let Some(g) = grad.as_deref_mut() {
                g[k][0] += 2.0 * w * v[0];
                g[k][2] += 2.0 * w * v[2];
            }
        }
    }
    e
}

pub fn exchange_energy(field: &MagnetizationField, params: &MaterialParams) -> Result<f64> {
    field.grid().check_thickness(params)?;
    Ok(exchange_hat(field.grid(), params, field.values(), None) * params.t().powi(2))
}

pub fn anisotropy_energy(field: &MagnetizationField, params: &MaterialParams) -> Result<f64> {
    field.grid().check_thickness(params)?;
    Ok(anisotropy_hat(field.grid(), params, field.values(), None) * params.t().powi(2))
}

/// Solves the stray-field problem for `field`; rejects non-finite values.
pub fn solve_stray_field(field: &MagnetizationField) -> Result<StrayFieldSolution> {
    check_finite(field)?;
    let g = *field.grid();
    // the stray problem does not depend on d or Q
    let params = MaterialParams::new(1.0, 1.0, g.thickness())?;
    EnergyModel::new(g, params)?.stray_solution(field.values())
}

fn check_finite(field: &MagnetizationField) -> Result<()> {
    let g = field.grid();
    if let Some(k) = field
        .values()
        .iter()
        .position(|v| v.iter().any(|c| !c.is_finite()))
    {
        return Err(WallError::NonFiniteField {
            i1: k % g.n1(),
            i3: k / g.n1(),
        });
    }
    Ok(())
}

/// All three terms plus stray-field diagnostics.
pub fn total_energy(field: &MagnetizationField, params: &MaterialParams) -> Result<EnergyBreakdown> {
    check_finite(field)?;
    let mut model = EnergyModel::new(*field.grid(), *params)?;
    let sol = model.stray_solution(field.values())?;
    let t2 = params.t().powi(2);
    let ex = exchange_hat(field.grid(), params, field.values(), None) * t2;
    let an = anisotropy_hat(field.grid(), params, field.values(), None) * t2;
    let mut e = EnergyBreakdown::from_parts(ex, an, sol.pairing_energy);
    e.diagnostics = Some(StrayDiagnostics {
        wrap_residual: sol.wrap_residual,
        zero_mode_mass: sol.zero_mode_mass,
        reciprocity_defect: sol.reciprocity_defect(),
    });
    if !e.total.is_finite() {
        return Err(WallError::NonFiniteField { i1: 0, i3: 0 });
    }
    Ok(e)
}

/// Projects a raw gradient onto the tangent planes and zeroes the clamped columns.
pub(crate) fn project_tangent(grid: &StripGrid, values: &[[f64; 3]], grad: &mut [[f64; 3]]) {
    for (g, m) in grad.iter_mut().zip(values) {
        let p = g[0] * m[0] + g[1] * m[1] + g[2] * m[2];
        for c in 0..3 {
            g[c] -= p * m[c];
        }
    }
    for r in 0..grid.n3() {
        grad[grid.idx(0, r)] = [0.0; 3];
        grad[grid.idx(grid.n1() - 1, r)] = [0.0; 3];
    }
}

/// Tangent-projected gradient of the discrete total energy (length^2 per node).
pub fn energy_gradient(field: &MagnetizationField, params: &MaterialParams) -> Result<TangentField> {
    check_finite(field)?;
    let mut model = EnergyModel::new(*field.grid(), *params)?;
    let mut grad = vec![[0.0; 3]; field.grid().len()];
    model.evaluate_with_gradient(field.values(), &mut grad)?;
    project_tangent(field.grid(), field.values(), &mut grad);
    Ok(TangentField {
        grid: *field.grid(),
        values: grad,
    })
}

#[cfg(test)]
mod tests;
