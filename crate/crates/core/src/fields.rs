//! Material parameters, the truncated strip grid and sphere-valued
//! magnetization fields carrying the wall boundary conditions.
//!
//! Lengths are dimensional in the public API. Numerical kernels work in units
//! of the film thickness `t`; the `*_hat` accessors return those reduced
//! quantities.

use serde::{Deserialize, Serialize};

use crate::error::{Result, WallError};

/// Tolerance on `| |m| - 1 |` for an admissible field.
pub const NORM_TOL: f64 = 1e-12;
/// Tolerance on the boundary clamp residual.
pub const CLAMP_TOL: f64 = 1e-9;
/// Default upper bound on `Q` for the soft-material regime check.
pub const DEFAULT_Q_MAX: f64 = 0.05;

pub const LEFT_STATE: [f64; 3] = [0.0, -1.0, 0.0];
pub const RIGHT_STATE: [f64; 3] = [0.0, 1.0, 0.0];

/// Exchange length `d`, quality factor `Q` and film thickness `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    d: f64,
    q: f64,
    t: f64,
}

impl MaterialParams {
    pub fn new(d: f64, q: f64, t: f64) -> Result<Self> {
        for (name, v) in [("d", d), ("Q", q), ("t", t)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(WallError::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(Self { d, q, t })
    }

    /// Parameters with `d = 1`, so that `t` is measured in exchange lengths.
    pub fn from_ratio(q: f64, t_over_d: f64) -> Result<Self> {
        Self::new(1.0, q, t_over_d)
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn t_over_d(&self) -> f64 {
        self.t / self.d
    }

    /// `d / t`, the exchange length in thickness units.
    pub fn d_hat(&self) -> f64 {
        self.d / self.t
    }

    /// `ln(t^2 / (Q d^2))`; positive exactly when `(t/d)^2 > Q`.
    pub fn log_ratio(&self) -> f64 {
        (self.t_over_d().powi(2) / self.q).ln()
    }

    pub fn in_soft_regime(&self) -> bool {
        self.in_soft_regime_with(DEFAULT_Q_MAX)
    }

    /// `Q < q_max` and `Q < (t/d)^2 < 1/Q`.
    pub fn in_soft_regime_with(&self, q_max: f64) -> bool {
        let r2 = self.t_over_d().powi(2);
        self.q < q_max && self.q < r2 && r2 < 1.0 / self.q
    }
}

/// Uniform collocated grid on `[-L, L] x [-t/2, t/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripGrid {
    half_width: f64,
    thickness: f64,
    n1: usize,
    n3: usize,
}

impl StripGrid {
    pub fn new(half_width: f64, thickness: f64, n1: usize, n3: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(WallError::InvalidGrid(format!(
                "half width must be positive, got {half_width}"
            )));
        }
        if !(thickness.is_finite() && thickness > 0.0) {
            return Err(WallError::InvalidGrid(format!(
                "thickness must be positive, got {thickness}"
            )));
        }
        if n1 < 4 {
            return Err(WallError::InvalidGrid(format!("n1 must be >= 4, got {n1}")));
        }
        if n3 < 2 {
            return Err(WallError::InvalidGrid(format!("n3 must be >= 2, got {n3}")));
        }
        Ok(Self {
            half_width,
            thickness,
            n1,
            n3,
        })
    }

    /// Same extent, node counts `2 n - 1` in both directions (spacings halved).
    pub fn refined(&self) -> Self {
        Self {
            n1: 2 * self.n1 - 1,
            n3: 2 * self.n3 - 1,
            ..*self
        }
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn thickness(&self) -> f64 {
        self.thickness
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n3(&self) -> usize {
        self.n3
    }

    pub fn len(&self) -> usize {
        self.n1 * self.n3
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn h1(&self) -> f64 {
        2.0 * self.half_width / (self.n1 - 1) as f64
    }

    pub fn h3(&self) -> f64 {
        self.thickness / (self.n3 - 1) as f64
    }

    pub fn x1(&self, i: usize) -> f64 {
        if i == self.n1 - 1 {
            self.half_width
        } else {
            -self.half_width + i as f64 * self.h1()
        }
    }

    pub fn x3(&self, r: usize) -> f64 {
        if r == self.n3 - 1 {
            0.5 * self.thickness
        } else {
            -0.5 * self.thickness + r as f64 * self.h3()
        }
    }

    pub fn half_width_hat(&self) -> f64 {
        self.half_width / self.thickness
    }

    pub fn h1_hat(&self) -> f64 {
        self.h1() / self.thickness
    }

    pub fn h3_hat(&self) -> f64 {
        1.0 / (self.n3 - 1) as f64
    }

    /// Trapezoid weight of column `i` in thickness units.
    pub fn w1_hat(&self, i: usize) -> f64 {
        let h = self.h1_hat();
        if i == 0 || i == self.n1 - 1 {
            0.5 * h
        } else {
            h
        }
    }

    /// Trapezoid weight of row `r` in thickness units; the weights sum to 1.
    pub fn w3_hat(&self, r: usize) -> f64 {
        let h = self.h3_hat();
        if r == 0 || r == self.n3 - 1 {
            0.5 * h
        } else {
            h
        }
    }

    #[inline]
    pub fn idx(&self, i1: usize, i3: usize) -> usize {
        i3 * self.n1 + i1
    }

    /// Strip area `2 L t`.
    pub fn area(&self) -> f64 {
        2.0 * self.half_width * self.thickness
    }

    pub fn same_shape(&self, other: &StripGrid) -> bool {
        self.n1 == other.n1
            && self.n3 == other.n3
            && rel_close(self.half_width, other.half_width)
            && rel_close(self.thickness, other.thickness)
    }

    pub(crate) fn check_thickness(&self, params: &MaterialParams) -> Result<()> {
        if rel_close(self.thickness, params.t()) {
            Ok(())
        } else {
            Err(WallError::GridMismatch(format!(
                "grid thickness {} differs from material t = {}",
                self.thickness,
                params.t()
            )))
        }
    }
}

fn rel_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

/// Unit-vector field on a [`StripGrid`], row-major with `x3` outer and `x1` inner.
#[derive(Debug, Clone, PartialEq)]
pub struct MagnetizationField {
    grid: StripGrid,
    values: Vec<[f64; 3]>,
}

/// Outcome of [`MagnetizationField::validate_admissible`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibilityReport {
    pub max_norm_residual: f64,
    pub left_clamp_residual: f64,
    pub right_clamp_residual: f64,
    pub passed: bool,
}

impl AdmissibilityReport {
    pub fn clamp_residual(&self) -> f64 {
        self.left_clamp_residual.max(self.right_clamp_residual)
    }
}

impl std::fmt::Display for AdmissibilityReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} (norm residual {:.3e}, clamp residual left {:.3e} right {:.3e})",
            if self.passed { "admissible" } else { "NOT admissible" },
            self.max_norm_residual,
            self.left_clamp_residual,
            self.right_clamp_residual
        )
    }
}

pub fn is_unit(v: [f64; 3]) -> bool {
    v.iter().all(|c| c.is_finite()) && (norm(v) - 1.0).abs() <= NORM_TOL
}

#[inline]
pub(crate) fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

impl MagnetizationField {
    /// Every node set to `v`. Only `v = (0, +-1, 0)` gives a clamp-consistent field.
    pub fn make_uniform(grid: StripGrid, v: [f64; 3]) -> Result<Self> {
        if !is_unit(v) {
            return Err(WallError::NonUnitVector(v));
        }
        Ok(Self {
            values: vec![v; grid.len()],
            grid,
        })
    }

    /// Raw node values, checked for length and finiteness only.
    pub fn from_values(grid: StripGrid, values: Vec<[f64; 3]>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(WallError::GridMismatch(format!(
                "expected {} node values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| v.iter().any(|c| !c.is_finite())) {
            return Err(WallError::NonFiniteField {
                i1: k % grid.n1(),
                i3: k / grid.n1(),
            });
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(x1, x3)` (dimensional coordinates), normalizes every node and
    /// clamps the end columns.
    pub fn from_fn(grid: StripGrid, f: impl Fn(f64, f64) -> [f64; 3]) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len());
        for r in 0..grid.n3() {
            let x3 = grid.x3(r);
            for i in 0..grid.n1() {
                values.push(f(grid.x1(i), x3));
            }
        }
        let mut field = Self::from_values(grid, values)?;
        field.normalize()?;
        field.enforce_clamp();
        Ok(field)
    }

    pub fn grid(&self) -> &StripGrid {
        &self.grid
    }

    pub fn values(&self) -> &[[f64; 3]] {
        &self.values
    }

    pub fn into_values(self) -> Vec<[f64; 3]> {
        self.values
    }

    pub fn at(&self, i1: usize, i3: usize) -> [f64; 3] {
        self.values[self.grid.idx(i1, i3)]
    }

    pub(crate) fn normalize(&mut self) -> Result<()> {
        let n1 = self.grid.n1();
        for (k, v) in self.values.iter_mut().enumerate() {
            let n = norm(*v);
            if !(n.is_finite() && n > 0.0) {
                return Err(WallError::NonFiniteField {
                    i1: k % n1,
                    i3: k / n1,
                });
            }
            for c in v.iter_mut() {
                *c /= n;
            }
        }
        Ok(())
    }

    pub(crate) fn enforce_clamp(&mut self) {
        enforce_clamp(&self.grid, &mut self.values);
    }

    /// Norm and boundary-clamp residuals against [`NORM_TOL`] and [`CLAMP_TOL`].
    pub fn validate_admissible(&self) -> AdmissibilityReport {
        let g = &self.grid;
        let max_norm_residual = self
            .values
            .iter()
            .map(|v| (norm(*v) - 1.0).abs())
            .fold(0.0, f64::max);
        let clamp = |i: usize, target: [f64; 3]| {
            (0..g.n3())
                .map(|r| {
                    let v = self.at(i, r);
                    (0..3).map(|c| (v[c] - target[c]).abs()).fold(0.0, f64::max)
                })
                .fold(0.0, f64::max)
        };
        let left_clamp_residual = clamp(0, LEFT_STATE);
        let right_clamp_residual = clamp(g.n1() - 1, RIGHT_STATE);
        AdmissibilityReport {
            max_norm_residual,
            left_clamp_residual,
            right_clamp_residual,
            passed: max_norm_residual <= NORM_TOL
                && left_clamp_residual <= CLAMP_TOL
                && right_clamp_residual <= CLAMP_TOL,
        }
    }

    /// `(1/t) * trapezoid integral` of component `component` (1-based) over `x3`, per column.
    pub fn vertical_average(&self, component: usize) -> Result<Vec<f64>> {
        if !(1..=3).contains(&component) {
            return Err(WallError::InvalidParameter(format!(
                "component must be 1, 2 or 3, got {component}"
            )));
        }
        let c = component - 1;
        let g = &self.grid;
        let mut avg = vec![0.0; g.n1()];
        for r in 0..g.n3() {
            let w = g.w3_hat(r);
            let row = &self.values[r * g.n1()..(r + 1) * g.n1()];
            for (a, v) in avg.iter_mut().zip(row) {
                *a += w * v[c];
            }
        }
        Ok(avg)
    }

    /// `x1 -> -x1` together with `m1 -> -m1`, `m2 -> -m2`; maps walls to walls.
    pub fn reflected(&self) -> Self {
        let g = self.grid;
        let mut values = vec![[0.0; 3]; g.len()];
        for r in 0..g.n3() {
            for i in 0..g.n1() {
                let v = self.at(g.n1() - 1 - i, r);
                values[g.idx(i, r)] = [-v[0], -v[1], v[2]];
            }
        }
        Self { grid: g, values }
    }

    /// Cyclic shift by `k` columns towards `+x1`, refilling the vacated columns
    /// with the left end state; the right clamp is re-imposed.
    pub fn shifted(&self, k: usize) -> Self {
        let g = self.grid;
        let mut values = vec![LEFT_STATE; g.len()];
        for r in 0..g.n3() {
            for i in k..g.n1() {
                values[g.idx(i, r)] = self.at(i - k, r);
            }
        }
        let mut out = Self { grid: g, values };
        out.enforce_clamp();
        out
    }
}

pub(crate) fn enforce_clamp(grid: &StripGrid, values: &mut [[f64; 3]]) {
    for r in 0..grid.n3() {
        values[grid.idx(0, r)] = LEFT_STATE;
        values[grid.idx(grid.n1() - 1, r)] = RIGHT_STATE;
    }
}

/// Angle profile `theta(x1)` on `n1` uniform samples of `[-L, L]`; the induced
/// in-plane field is `(cos theta, sin theta, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile1D {
    half_width: f64,
    theta: Vec<f64>,
}

impl Profile1D {
    pub fn new(half_width: f64, theta: Vec<f64>) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(WallError::InvalidGrid(format!(
                "half width must be positive, got {half_width}"
            )));
        }
        if theta.len() < 4 {
            return Err(WallError::InvalidGrid(format!(
                "profile needs at least 4 samples, got {}",
                theta.len()
            )));
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(WallError::InvalidParameter("non-finite angle".into()));
        }
        Ok(Self { half_width, theta })
    }

    pub fn from_fn(half_width: f64, n1: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let h = 2.0 * half_width / (n1.max(2) - 1) as f64;
        let theta = (0..n1).map(|i| f(-half_width + i as f64 * h)).collect();
        Self::new(half_width, theta)
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn h(&self) -> f64 {
        2.0 * self.half_width / (self.theta.len() - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.h()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn m1(&self) -> Vec<f64> {
        self.theta.iter().map(|t| t.cos()).collect()
    }

    /// Whether `theta(-L) = -pi/2` and `theta(L) = pi/2`.
    pub fn is_clamped(&self) -> bool {
        let half_pi = std::f64::consts::FRAC_PI_2;
        (self.theta[0] + half_pi).abs() <= CLAMP_TOL
            && (self.theta[self.theta.len() - 1] - half_pi).abs() <= CLAMP_TOL
    }
}
