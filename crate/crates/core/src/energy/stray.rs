//! Stray-field energy by a per-wavenumber solve.
//!
//! Along `x1` the in-plane and normal components are expanded in the periodic
//! discrete Fourier basis of `[-L, L)`. For clamped fields `m1 = m3 = 0` at both
//! ends, so the charge is jump-free under periodic extension; `m2` carries no
//! charge and its end states never enter. The image period is `2L`.
//!
//! For every wavenumber `k` the potential solves `-u'' + k^2 u = rho` on the
//! whole `x3` line. Inside the strip `u` is approximated by piecewise-linear
//! elements on the `x3` nodes; outside, the decaying solution `exp(-|k| s)` is
//! exact and enters as the boundary term `|k| u(+-1/2)^2`. The magnetization is
//! interpolated with the same elements, so the load is
//!
//! ```text
//! b_a = -i k (M m1)_a + (D m3)_a,     D_aj = int phi_j phi_a'
//! ```
//!
//! which contains both the volume charge and the face charges `+-m3`. The mode
//! energy is `b^H A^{-1} b`, a Galerkin quantity, so the Dirichlet energy and
//! the charge-potential pairing coincide up to round-off.
//!
//! All quantities here are in thickness units (`t = 1`).

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::fields::StripGrid;

pub(crate) struct StrayOperator {
    n3: usize,
    n_per: usize,
    h1: f64,
    h3: f64,
    period: f64,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// `n3 * n_per` row spectra of `m1 + i m3`, later reused for the gradient.
    spec: Vec<Complex64>,
    scratch: Vec<Complex64>,
    b: Vec<Complex64>,
    u: Vec<Complex64>,
    mu: Vec<Complex64>,
    s: Vec<Complex64>,
    diag: Vec<f64>,
    cp: Vec<f64>,
}

/// Per-mode output of a full solve.
pub(crate) struct ModeRecord {
    pub k: f64,
    pub u: Vec<Complex64>,
}

pub(crate) struct StrayEval {
    pub energy: f64,
    pub dirichlet: f64,
    pub zero_mode_mass: f64,
}

impl StrayOperator {
    pub(crate) fn new(grid: &StripGrid) -> Self {
        let n_per = grid.n1() - 1;
        let n3 = grid.n3();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n_per);
        let inv = planner.plan_fft_inverse(n_per);
        let scratch_len = fwd
            .get_inplace_scratch_len()
            .max(inv.get_inplace_scratch_len());
        let h1 = grid.h1_hat();
        Self {
            n3,
            n_per,
            h1,
            h3: grid.h3_hat(),
            period: h1 * n_per as f64,
            fwd,
            inv,
            spec: vec![Complex64::new(0.0, 0.0); n3 * n_per],
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            b: vec![Complex64::new(0.0, 0.0); n3],
            u: vec![Complex64::new(0.0, 0.0); n3],
            mu: vec![Complex64::new(0.0, 0.0); n3],
            s: vec![Complex64::new(0.0, 0.0); n3],
            diag: vec![0.0; n3],
            cp: vec![0.0; n3],
        }
    }

    pub(crate) fn wavenumber(&self, n: usize) -> f64 {
        let nn = self.n_per;
        let j = if 2 * n <= nn {
            n as f64
        } else {
            n as f64 - nn as f64
        };
        2.0 * std::f64::consts::PI * j / self.period
    }

    fn load_spectra(&mut self, values: &[[f64; 3]]) {
        let n1 = self.n_per + 1;
        for r in 0..self.n3 {
            let row = &mut self.spec[r * self.n_per..(r + 1) * self.n_per];
            for (j, z) in row.iter_mut().enumerate() {
                let v = values[r * n1 + j];
                *z = Complex64::new(v[0], v[2]);
            }
            self.fwd.process_with_scratch(row, &mut self.scratch);
        }
    }

    /// Separates `m1` and `m3` spectra (times `h1`) at mode `n` into `s` (m1) and `mu` (m3).
    fn split_mode(&mut self, n: usize) {
        let nn = self.n_per;
        let nm = (nn - n) % nn;
        let h1 = self.h1;
        for r in 0..self.n3 {
            let z = self.spec[r * nn + n];
            let zc = self.spec[r * nn + nm].conj();
            self.s[r] = (z + zc) * 0.5 * h1;
            self.mu[r] = (z - zc) * Complex64::new(0.0, -0.5) * h1;
        }
    }

    fn assemble_load(&mut self, k: f64) {
        let n = self.n3;
        let h = self.h3;
        let m1 = &self.s;
        let m3 = &self.mu;
        let ik = Complex64::new(0.0, -k);
        for a in 0..n {
            // mass product
            let (ma, ml, mr) = (
                if a == 0 || a == n - 1 { h / 3.0 } else { 2.0 * h / 3.0 },
                h / 6.0,
                h / 6.0,
            );
            let mut mass = m1[a] * ma;
            if a > 0 {
                mass += m1[a - 1] * ml;
            }
            if a + 1 < n {
                mass += m1[a + 1] * mr;
            }
            let mut d = Complex64::new(0.0, 0.0);
            if a > 0 {
                d += m3[a - 1] * 0.5;
            }
            if a + 1 < n {
                d -= m3[a + 1] * 0.5;
            }
            if a == 0 {
                d -= m3[a] * 0.5;
            }
            if a == n - 1 {
                d += m3[a] * 0.5;
            }
            self.b[a] = ik * mass + d;
        }
    }

    /// Solves `A(k) u = b` into `self.u`; for `k = 0` node 0 is grounded.
    fn solve_mode(&mut self, k: f64) {
        let n = self.n3;
        let h = self.h3;
        let ak = k.abs();
        let off = -1.0 / h + k * k * h / 6.0;
        for a in 0..n {
            let end = a == 0 || a == n - 1;
            self.diag[a] = if end { 1.0 / h } else { 2.0 / h }
                + k * k * if end { h / 3.0 } else { 2.0 * h / 3.0 }
                + if end { ak } else { 0.0 };
        }
        let start = if ak == 0.0 { 1 } else { 0 };
        for a in 0..n {
            self.u[a] = self.b[a];
        }
        if start == 1 {
            self.u[0] = Complex64::new(0.0, 0.0);
        }
        // Thomas elimination on rows start..n
        let mut prev_c = 0.0;
        for a in start..n {
            let denom = if a == start {
                self.diag[a]
            } else {
                self.diag[a] - off * prev_c
            };
            let c = off / denom;
            self.cp[a] = c;
            let carry = if a == start {
                Complex64::new(0.0, 0.0)
            } else {
                self.u[a - 1] * off
            };
            self.u[a] = (self.u[a] - carry) / denom;
            prev_c = c;
        }
        for a in (start..n - 1).rev() {
            let next = self.u[a + 1];
            self.u[a] -= next * self.cp[a];
        }
    }

    /// `u^H (K + k^2 M) u + |k| (|u_0|^2 + |u_top|^2)`.
    fn dirichlet_form(&self, k: f64) -> f64 {
        let n = self.n3;
        let h = self.h3;
        let u = &self.u;
        let mut grad = 0.0;
        let mut mass = 0.0;
        for e in 0..n - 1 {
            let du = u[e + 1] - u[e];
            grad += du.norm_sqr() / h;
            // exact integral of |u|^2 over a linear element
            mass += h / 3.0 * (u[e].norm_sqr() + u[e + 1].norm_sqr() + (u[e].conj() * u[e + 1]).re);
        }
        grad + k * k * mass + k.abs() * (u[0].norm_sqr() + u[n - 1].norm_sqr())
    }

    fn pairing(&self) -> f64 {
        self.b
            .iter()
            .zip(&self.u)
            .map(|(b, u)| (b.conj() * u).re)
            .sum()
    }

    /// Reduced stray energy; when `grad` is given, adds `dE/dm1`, `dE/dm3` into it.
    pub(crate) fn evaluate(
        &mut self,
        values: &[[f64; 3]],
        mut grad: Option<&mut [[f64; 3]]>,
        mut modes: Option<&mut Vec<ModeRecord>>,
    ) -> StrayEval {
        self.load_spectra(values);
        let nn = self.n_per;
        let half = nn / 2;
        let mut energy = 0.0;
        let mut dirichlet = 0.0;
        let mut zero_mode_mass = 0.0;
        let want_grad = grad.is_some();
        let mut g_spec: Vec<Complex64> = if want_grad {
            vec![Complex64::new(0.0, 0.0); self.n3 * nn]
        } else {
            Vec::new()
        };
        for n in 0..=half {
            let k = self.wavenumber(n);
            let nyquist = nn % 2 == 0 && n == half;
            let weight = if n == 0 || nyquist { 1.0 } else { 2.0 };
            self.split_mode(n);
            self.assemble_load(k);
            if n == 0 {
                zero_mode_mass = self.b.iter().map(|b| b.re).sum::<f64>().abs();
            }
            self.solve_mode(k);
            energy += weight * self.pairing();
            if modes.is_some() {
                dirichlet += weight * self.dirichlet_form(k);
            }
            if let Some(list) = modes.as_deref_mut() {
                list.push(ModeRecord {
                    k,
                    u: self.u.clone(),
                });
            }
            if want_grad {
                self.mode_gradient(n, k, nyquist, &mut g_spec);
            }
        }
        let energy = energy / self.period;
        let dirichlet = dirichlet / self.period;
        if let Some(g) = grad.as_deref_mut() {
            self.apply_gradient(&mut g_spec, g);
        }
        StrayEval {
            energy,
            dirichlet,
            zero_mode_mass,
        }
    }

    /// Stores `i k M u + i D^T u` (combined `m1 + i m3` channel) at `n` and `N - n`.
    fn mode_gradient(&mut self, n: usize, k: f64, nyquist: bool, g_spec: &mut [Complex64]) {
        let nn = self.n_per;
        let n3 = self.n3;
        let h = self.h3;
        let u = &self.u;
        for r in 0..n3 {
            let end = r == 0 || r == n3 - 1;
            let mut mu = u[r] * if end { h / 3.0 } else { 2.0 * h / 3.0 };
            if r > 0 {
                mu += u[r - 1] * (h / 6.0);
            }
            if r + 1 < n3 {
                mu += u[r + 1] * (h / 6.0);
            }
            let mut g1 = Complex64::new(0.0, k) * mu;
            // (D^T u)_r
            let mut g3 = Complex64::new(0.0, 0.0);
            if r + 1 < n3 {
                g3 += u[r + 1] * 0.5;
            }
            if r > 0 {
                g3 -= u[r - 1] * 0.5;
            }
            if r == 0 {
                g3 -= u[r] * 0.5;
            }
            if r == n3 - 1 {
                g3 += u[r] * 0.5;
            }
            if n == 0 || nyquist {
                g1 = Complex64::new(g1.re, 0.0);
                g3 = Complex64::new(g3.re, 0.0);
            }
            let z = g1 + Complex64::new(0.0, 1.0) * g3;
            g_spec[r * nn + n] = z;
            if n != 0 && !nyquist {
                let zm = g1.conj() + Complex64::new(0.0, 1.0) * g3.conj();
                g_spec[r * nn + nn - n] = zm;
            }
        }
    }

    fn apply_gradient(&mut self, g_spec: &mut [Complex64], grad: &mut [[f64; 3]]) {
        let nn = self.n_per;
        let n1 = nn + 1;
        let scale = 2.0 / nn as f64;
        for r in 0..self.n3 {
            let row = &mut g_spec[r * nn..(r + 1) * nn];
            self.inv.process_with_scratch(row, &mut self.scratch);
            for (j, z) in row.iter().enumerate() {
                let g = &mut grad[r * n1 + j];
                g[0] += scale * z.re;
                g[2] += scale * z.im;
            }
        }
    }
}
