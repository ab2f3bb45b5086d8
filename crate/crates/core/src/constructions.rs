//! The two competitor walls: the asymmetric Bloch wall built from a stream
//! function, and the logarithmic Neel profile with its reduced 1D energy.
//!
//! Bloch stream function (thickness units, `r = |x|`):
//!
//! ```text
//! psi(x) = F(r) w(x1),   F'(r) = -tau(r / delta) f'(1/2 - r)
//! ```
//!
//! `f` flattens the cone `1/2 - r` at its rim (`f(s) = 0` for `s <= delta/2`,
//! `f' = 1` for `s >= delta`) and `tau` flattens its tip, so that the vortex
//! core carries `m2 = -1` instead of a point singularity. Between the two
//! flattened zones `|grad psi| = 1`, which contains the half ellipse
//! `4 x1^2 + x3^2 = 1/4` away from its endpoints.

use std::f64::consts::{FRAC_PI_2, PI};

use rustfft::FftPlanner;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::energy::EnergyBreakdown;
use crate::error::{Result, WallError};
use crate::fields::{MagnetizationField, MaterialParams, Profile1D, StripGrid};

pub const DEFAULT_DELTA: f64 = 0.1;
/// `|grad psi|^2 >= 1 - CORE_TOL` counts as covered on the curve.
pub const CORE_TOL: f64 = 0.05;
const GAMMA_SAMPLES: usize = 201;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConstructionOptions {
    /// Flattening width of the cone rim and tip, thickness units, in `(0, 0.2)`.
    pub delta: f64,
    /// Width of the `m2` sign transition across the curve, thickness units.
    /// `None` uses `max(h, d/t)`.
    pub mollify_width: Option<f64>,
}

impl Default for ConstructionOptions {
    fn default() -> Self {
        Self {
            delta: DEFAULT_DELTA,
            mollify_width: None,
        }
    }
}

/// A constructed field together with non-fatal hypothesis warnings.
#[derive(Debug, Clone)]
pub struct Built<T> {
    pub value: T,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct BlochStream {
    pub grid: StripGrid,
    pub delta: f64,
    /// `psi` per node (thickness units).
    pub psi: Vec<f64>,
    /// `(d psi/d x1, d psi/d x3)` per node.
    pub grad: Vec<[f64; 2]>,
    /// Polyline of the sign-change curve, `(x1, x3)` in thickness units.
    pub gamma: Vec<[f64; 2]>,
    /// `|grad psi|^2` at the polyline points.
    pub gamma_grad_sq: Vec<f64>,
    /// Fraction of polyline points with `|grad psi|^2 >= 1 - CORE_TOL`.
    pub core_coverage: f64,
    /// Factor `(1 + eta)^-1 <= 1` applied if the product with the cutoff exceeded `|grad psi| = 1`.
    pub rescale: f64,
}

impl BlochStream {
    pub fn max_grad_sq(&self) -> f64 {
        self.grad
            .iter()
            .map(|g| g[0] * g[0] + g[1] * g[1])
            .fold(0.0, f64::max)
    }
}

#[inline]
fn smoothstep(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u * u * (3.0 - 2.0 * u)
}

#[inline]
fn smoothstep_integral(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u * u * u - 0.5 * u * u * u * u
}

/// Rim flattening `f_delta` and its derivative.
fn flatten(s: f64, delta: f64) -> (f64, f64) {
    let a = 0.5 * delta;
    if s <= a {
        (0.0, 0.0)
    } else if s < delta {
        let u = (s - a) / a;
        (a * smoothstep_integral(u), smoothstep(u))
    } else {
        (s - 0.75 * delta, 1.0)
    }
}

/// Radial profile `F(r)` and `F'(r)`.
fn radial(r: f64, delta: f64) -> (f64, f64) {
    if r >= 0.5 - delta {
        let (f, fp) = flatten(0.5 - r, delta);
        (f, -fp)
    } else if r >= delta {
        (0.5 - 0.75 * delta - r, -1.0)
    } else {
        let u = r / delta;
        let at_delta = 0.5 - 1.75 * delta;
        (
            at_delta + delta * (0.5 - smoothstep_integral(u)),
            -smoothstep(u),
        )
    }
}

/// Cutoff `w(x1)`: 1 for `|x1| <= 1/2`, 0 for `|x1| >= 1`.
fn cutoff(x1: f64) -> (f64, f64) {
    let a = x1.abs();
    if a <= 0.5 {
        (1.0, 0.0)
    } else if a >= 1.0 {
        (0.0, 0.0)
    } else {
        let u = (a - 0.5) / 0.5;
        let s = u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
        let ds = 30.0 * u * u * (1.0 - u) * (1.0 - u) / 0.5;
        (1.0 - s, -ds * x1.signum())
    }
}

fn stream_at(x1: f64, x3: f64, delta: f64) -> (f64, [f64; 2]) {
    let r = (x1 * x1 + x3 * x3).sqrt();
    let (f, fp) = radial(r, delta);
    let (w, wp) = cutoff(x1);
    let (e1, e3) = if r > 0.0 { (x1 / r, x3 / r) } else { (0.0, 0.0) };
    (f * w, [fp * e1 * w + f * wp, fp * e3 * w])
}

/// `x1` coordinate of the curve at height `x3`.
fn gamma_x1(x3: f64) -> f64 {
    0.5 * (0.25 - x3 * x3).max(0.0).sqrt()
}

pub fn build_bloch_stream(grid: &StripGrid, delta: f64) -> Result<BlochStream> {
    if !(delta > 0.0 && delta < 0.2) {
        return Err(WallError::InvalidParameter(format!(
            "core smoothing delta must lie in (0, 0.2), got {delta}"
        )));
    }
    let h = grid.h1_hat().max(grid.h3_hat());
    if h > 0.5 * delta {
        return Err(WallError::Construction(format!(
            "grid too coarse to resolve the Bloch core: h/t = {h:.4} > delta/2 = {:.4}",
            0.5 * delta
        )));
    }
    let t = grid.thickness();
    let mut psi = Vec::with_capacity(grid.len());
    let mut grad = Vec::with_capacity(grid.len());
    for r in 0..grid.n3() {
        let x3 = grid.x3(r) / t;
        for i in 0..grid.n1() {
            let (p, g) = stream_at(grid.x1(i) / t, x3, delta);
            psi.push(p);
            grad.push(g);
        }
    }
    let max = grad
        .iter()
        .map(|g| (g[0] * g[0] + g[1] * g[1]).sqrt())
        .fold(0.0, f64::max);
    let rescale = if max > 1.0 + 1e-12 { 1.0 / max } else { 1.0 };
    if rescale < 1.0 {
        psi.iter_mut().for_each(|p| *p *= rescale);
        grad.iter_mut().for_each(|g| {
            g[0] *= rescale;
            g[1] *= rescale;
        });
    }
    let gamma: Vec<[f64; 2]> = (0..GAMMA_SAMPLES)
        .map(|k| {
            let x3 = -0.5 + k as f64 / (GAMMA_SAMPLES - 1) as f64;
            [gamma_x1(x3), x3]
        })
        .collect();
    let gamma_grad_sq: Vec<f64> = gamma
        .iter()
        .map(|p| {
            let (_, g) = stream_at(p[0], p[1], delta);
            rescale * rescale * (g[0] * g[0] + g[1] * g[1])
        })
        .collect();
    let covered = gamma_grad_sq.iter().filter(|g| **g >= 1.0 - CORE_TOL).count();
    let core_coverage = covered as f64 / GAMMA_SAMPLES as f64;
    if core_coverage < 0.5 {
        let min = gamma_grad_sq.iter().cloned().fold(f64::INFINITY, f64::min);
        return Err(WallError::Construction(format!(
            "delta = {delta} leaves only {:.0}% of the curve with |grad psi|^2 >= {}; min on curve {min:.3}",
            100.0 * core_coverage,
            1.0 - CORE_TOL
        )));
    }
    Ok(BlochStream {
        grid: *grid,
        delta,
        psi,
        grad,
        gamma,
        gamma_grad_sq,
        core_coverage,
        rescale,
    })
}

/// Asymmetric Bloch wall `(m1, m3) = (-d3 psi, d1 psi)`, `m2 = -+sqrt(1 - |grad psi|^2)`
/// left/right of the curve, with a `tanh` sign transition.
pub fn build_bloch(
    grid: &StripGrid,
    params: &MaterialParams,
    opts: &ConstructionOptions,
) -> Result<Built<MagnetizationField>> {
    let mut warnings = Vec::new();
    if params.t_over_d().powi(2) * params.q() > 0.1 {
        warnings.push(format!(
            "(t/d)^2 = {:.3} is not small against 1/Q = {:.3}",
            params.t_over_d().powi(2),
            1.0 / params.q()
        ));
    }
    let stream = build_bloch_stream(grid, opts.delta)?;
    let h = grid.h1_hat().max(grid.h3_hat());
    let width = opts.mollify_width.unwrap_or(h.max(params.d_hat()));
    if !(width > 0.0) {
        return Err(WallError::InvalidParameter(format!(
            "mollification width must be positive, got {width}"
        )));
    }
    let t = grid.thickness();
    let mut values = Vec::with_capacity(grid.len());
    for r in 0..grid.n3() {
        let x3 = grid.x3(r) / t;
        for i in 0..grid.n1() {
            let x1 = grid.x1(i) / t;
            let g = stream.grad[grid.idx(i, r)];
            let g2 = g[0] * g[0] + g[1] * g[1];
            let sign = ((x1 - gamma_x1(x3)) / width).tanh();
            let raw = [-g[1], sign * (1.0 - g2).max(0.0).sqrt(), g[0]];
            let n = crate::fields::norm(raw);
            // endpoints of the curve: both the in-plane part and m2 vanish
            let v = if n < 0.5 {
                let cap = x3.signum();
                [raw[0] + (0.5 - n) * cap, raw[1], raw[2]]
            } else {
                raw
            };
            values.push(v);
        }
    }
    let mut field = MagnetizationField::from_values(*grid, values)?;
    field.normalize()?;
    field.enforce_clamp();
    Ok(Built {
        value: field,
        warnings,
    })
}

/// `m1(x1) = ln sqrt(min{(Q|x|/t)^2 + (Q d^2/t^2)^2, 1}) / ln(Q d^2 / t^2)`.
pub fn neel_m1(x1: f64, params: &MaterialParams) -> f64 {
    let (q, d, t) = (params.q(), params.d(), params.t());
    let inner = q * d * d / (t * t);
    let arg = ((q * x1.abs() / t).powi(2) + inner * inner).min(1.0);
    (0.5 * arg.ln() / inner.ln()).clamp(0.0, 1.0)
}

/// Logarithmic Neel profile on `n1` samples of `[-L, L]`.
pub fn build_neel_profile(
    params: &MaterialParams,
    half_width: f64,
    n1: usize,
) -> Result<Built<Profile1D>> {
    let ratio = params.t_over_d().powi(2) / params.q();
    if ratio <= 1.0 {
        return Err(WallError::OutsideHypothesis(format!(
            "t^2/(Q d^2) = {ratio:.4} <= 1: the logarithmic profile is undefined"
        )));
    }
    let mut warnings = Vec::new();
    if ratio < 10.0 {
        warnings.push(format!("t^2/(Q d^2) = {ratio:.3} is not large"));
    }
    let tail = params.t() / params.q();
    let mut profile = Profile1D::from_fn(half_width, n1, |x| {
        if x == 0.0 {
            0.0
        } else {
            x.signum() * neel_m1(x, params).acos()
        }
    })?;
    if half_width < tail {
        let missing = truncated_tail_anisotropy(params, half_width, tail);
        warnings.push(format!(
            "L = {half_width:.4e} is shorter than the wall tail t/Q = {tail:.4e}; \
             estimated truncated tail energy {missing:.4e}"
        ));
        let mut theta = profile.theta().to_vec();
        theta[0] = -FRAC_PI_2;
        *theta.last_mut().unwrap() = FRAC_PI_2;
        profile = Profile1D::new(half_width, theta)?;
    }
    Ok(Built {
        value: profile,
        warnings,
    })
}

/// `2 Q t int_L^{t/Q} m1^2 dx1`, the anisotropy carried by the cut-off tail.
fn truncated_tail_anisotropy(params: &MaterialParams, from: f64, to: f64) -> f64 {
    let n = 2000;
    let h = (to - from) / n as f64;
    let mut s = 0.0;
    for k in 0..=n {
        let w = if k == 0 || k == n { 0.5 } else { 1.0 };
        s += w * neel_m1(from + k as f64 * h, params).powi(2);
    }
    2.0 * params.q() * params.t() * s * h
}

/// `(cos theta, sin theta, 0)`, independent of `x3`.
pub fn lift_profile(profile: &Profile1D, grid: &StripGrid) -> Result<MagnetizationField> {
    if profile.len() != grid.n1()
        || (profile.half_width() - grid.half_width()).abs() > 1e-12 * grid.half_width()
    {
        return Err(WallError::GridMismatch(format!(
            "profile has {} samples on [-{}, {}], grid has {} on [-{}, {}]",
            profile.len(),
            profile.half_width(),
            profile.half_width(),
            grid.n1(),
            grid.half_width(),
            grid.half_width()
        )));
    }
    let row: Vec<[f64; 3]> = profile
        .theta()
        .iter()
        .map(|t| [t.cos(), t.sin(), 0.0])
        .collect();
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.n3() {
        values.extend_from_slice(&row);
    }
    let mut field = MagnetizationField::from_values(*grid, values)?;
    if profile.is_clamped() {
        field.enforce_clamp();
    }
    Ok(field)
}

/// Neel initializer on `grid`: profile sampled at the grid columns, then lifted.
pub fn build_neel(grid: &StripGrid, params: &MaterialParams) -> Result<Built<MagnetizationField>> {
    let Built { value, warnings } = build_neel_profile(params, grid.half_width(), grid.n1())?;
    Ok(Built {
        value: lift_profile(&value, grid)?,
        warnings,
    })
}

/// Two-sided harmonic-extension energy `2 sum |k| |f_hat|^2 / P` of periodic
/// samples `f` (spacing `h`, last sample excluded by the caller).
pub fn harmonic_extension_energy(samples: &[f64], h: f64) -> f64 {
    let n = samples.len();
    let mut buf: Vec<Complex64> = samples.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let period = h * n as f64;
    let mut e = 0.0;
    for (q, z) in buf.iter().enumerate() {
        let j = if 2 * q <= n { q as f64 } else { q as f64 - n as f64 };
        let k = 2.0 * PI * j.abs() / period;
        e += k * (z * h).norm_sqr();
    }
    2.0 * e / period
}

/// Reduced Neel energy: `t^2 { d_hat^2 int theta'^2 + Q int cos^2 theta + N(cos theta) }`
/// with lengths in units of `t`. Exchange uses the chord `|m_{i+1} - m_i|^2`,
/// matching the 2D evaluation of the lifted field.
pub fn reduced_neel_energy(profile: &Profile1D, params: &MaterialParams) -> EnergyBreakdown {
    let t = params.t();
    let h = profile.h() / t;
    let theta = profile.theta();
    let n = theta.len();
    let exchange: f64 = theta
        .windows(2)
        .map(|w| 2.0 - 2.0 * (w[1] - w[0]).cos())
        .sum::<f64>()
        * params.d_hat().powi(2)
        / h;
    let m1 = profile.m1();
    let anisotropy: f64 = m1
        .iter()
        .enumerate()
        .map(|(i, c)| if i == 0 || i == n - 1 { 0.5 } else { 1.0 } * c * c)
        .sum::<f64>()
        * params.q()
        * h;
    let stray = harmonic_extension_energy(&m1[..n - 1], h);
    let t2 = t * t;
    EnergyBreakdown {
        exchange: exchange * t2,
        anisotropy: anisotropy * t2,
        stray: stray * t2,
        total: (exchange + anisotropy + stray) * t2,
        diagnostics: None,
    }
}
