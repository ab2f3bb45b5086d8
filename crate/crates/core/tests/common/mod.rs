//! Test-only oracles, independent of the library's spectral machinery.

#![allow(dead_code)]

use std::f64::consts::PI;

/// Trigonometric interpolant of periodic samples `f_j = f(x0 + j P / N)`,
/// evaluated by a direct (non-FFT) Fourier sum at `m` equispaced points.
pub fn trig_resample(samples: &[f64], m: usize) -> Vec<f64> {
    let n = samples.len();
    let mut coef = Vec::new();
    let top = n / 2;
    for q in 0..=top {
        let (mut re, mut im) = (0.0, 0.0);
        for (j, f) in samples.iter().enumerate() {
            let a = -2.0 * PI * (q * j) as f64 / n as f64;
            re += f * a.cos();
            im += f * a.sin();
        }
        let w = if q == 0 || (n % 2 == 0 && q == top) { 1.0 } else { 2.0 };
        coef.push((w * re / n as f64, w * im / n as f64));
    }
    (0..m)
        .map(|p| {
            let s = p as f64 * n as f64 / m as f64;
            coef.iter()
                .enumerate()
                .map(|(q, (re, im))| {
                    let a = 2.0 * PI * q as f64 * s / n as f64;
                    re * a.cos() - im * a.sin()
                })
                .sum()
        })
        .collect()
}

/// Periodic image sum of the 2D log kernel `-(1/2 pi) ln |x|`, period `p` in x1.
pub fn periodic_log_kernel(dx: f64, dz: f64, p: f64) -> f64 {
    let a = 2.0 * PI / p;
    -(1.0 / (4.0 * PI)) * (2.0 * ((a * dz).cosh() - (a * dx).cos())).ln()
}

/// Energy `sum_ab int int s_a(x) G(x - y, z_a - z_b) s_b(y)` of line charges
/// sampled at `m` equispaced points of one period. On a single line the
/// logarithmic singularity is removed by subtracting `s(x)`, using that the
/// periodic kernel integrates to zero over a period.
pub fn line_charge_energy(lines: &[(f64, Vec<f64>)], p: f64) -> f64 {
    let m = lines[0].1.len();
    let h = p / m as f64;
    let mut e = 0.0;
    for (za, sa) in lines {
        for (zb, sb) in lines {
            let dz = za - zb;
            for i in 0..m {
                let mut u = 0.0;
                for j in 0..m {
                    if dz == 0.0 {
                        if i != j {
                            let g = periodic_log_kernel((i as f64 - j as f64) * h, 0.0, p);
                            u += g * (sb[j] - sb[i]);
                        }
                    } else {
                        u += periodic_log_kernel((i as f64 - j as f64) * h, dz, p) * sb[j];
                    }
                }
                e += sa[i] * u * h * h;
            }
        }
    }
    e
}
