//! Disks that wrap a prescribed fraction of the circle into a ball.
//!
//! The disk is h(t) = a + (x - a) exp(g(t)) with g(0) = 0, so h(0) = x and
//! |h - a| = |x - a| exp(Re g) on the circle. Re g is chosen as
//! H - (H - L) q, where q is the Beurling-Selberg trigonometric majorant of
//! an arc I of degree k: q >= 1 on I and q >= 0 elsewhere. On I the disk is
//! then inside the ball of radius r_in around a, everywhere it stays inside
//! the ball of radius r_out, and zero mean of Re g fixes
//! |I| = H / (H - L) - 1 / (k + 1).

use std::f64::consts::PI;

use crate::cvec::{CVec, C64};
use crate::disk::AnalyticDisk;

/// Fourier coefficients q_0..q_k of the degree-k Selberg majorant of the
/// arc [alpha, beta] of R/Z (lengths in turns).
pub fn selberg_majorant(alpha: f64, beta: f64, k: usize) -> Vec<C64> {
    let nn = (k + 1) as f64;
    let f = |u: f64| PI * u * (1.0 - u) / (PI * u).tan() + u;
    // Vaaler's polynomial approximating the sawtooth
    let vaaler = |y: f64| -> f64 {
        (1..=k)
            .map(|n| {
                let n = n as f64;
                -f(n / nn) * (2.0 * PI * n * y).sin() / (PI * n)
            })
            .sum()
    };
    let fejer = |y: f64| -> f64 {
        1.0 + 2.0 * (1..=k).map(|n| (1.0 - n as f64 / nn) * (2.0 * PI * n as f64 * y).cos()).sum::<f64>()
    };
    let q = |y: f64| {
        (beta - alpha) + vaaler(y - beta) - vaaler(y - alpha) + (fejer(y - beta) + fejer(y - alpha)) / (2.0 * nn)
    };
    // exact DFT of a degree-k trigonometric polynomial
    let m = 4 * (k + 1);
    let samples: Vec<f64> = (0..m).map(|j| q(j as f64 / m as f64)).collect();
    (0..=k)
        .map(|n| {
            samples.iter().enumerate().map(|(j, v)| v * C64::cis(-2.0 * PI * (n * j) as f64 / m as f64)).sum::<C64>()
                / m as f64
        })
        .collect()
}

/// Taylor coefficients of exp(g) for g(t) = sum_{j=1}^{k} g_j t^j (g[0]
/// ignored), stopping once the last k + 1 coefficients are below `tol`
/// relative to the largest seen, or at `max_degree` (then None).
pub fn exp_series(g: &[C64], tol: f64, max_degree: usize) -> Option<Vec<C64>> {
    let k = g.len() - 1;
    let mut e = vec![C64::new(1.0, 0.0)];
    let mut peak: f64 = 1.0;
    let mut quiet = 0;
    for n in 1..=max_degree {
        let mut acc = C64::new(0.0, 0.0);
        for j in 1..=k.min(n) {
            acc += g[j] * e[n - j] * j as f64;
        }
        let v = acc / n as f64;
        peak = peak.max(v.norm());
        e.push(v);
        if n > k && v.norm() < tol * peak {
            quiet += 1;
            if quiet > k {
                while e.last().is_some_and(|c| c.norm() < tol * peak * 1e-3) {
                    e.pop();
                }
                return Some(e);
            }
        } else {
            quiet = 0;
        }
    }
    None
}

#[derive(Clone, Copy, Debug)]
pub struct LiftSpec {
    /// Degree of the majorant.
    pub order: usize,
    /// Safety margin in log-radius at both the inner and outer ball.
    pub margin: f64,
    pub max_degree: usize,
}

impl Default for LiftSpec {
    fn default() -> Self {
        LiftSpec { order: 64, margin: 2e-3, max_degree: 1024 }
    }
}

/// Disk centered at x that spends about H / (H - L) - 1/(k+1) of the circle
/// inside B(a, r_in) and never leaves B(a, r_out), both measured in the
/// complex line through a and x. None if x is not strictly between the
/// two radii or the series does not settle within the degree cap.
pub fn lift_disk(x: &CVec, a: &CVec, r_in: f64, r_out: f64, spec: LiftSpec) -> Option<AnalyticDisk> {
    let v = x.sub(a).ok()?;
    let s = v.norm();
    if !(s > 0.0) || !(r_in < s) || !(s < r_out) {
        return None;
    }
    let high = (r_out / s).ln() - spec.margin;
    let low = (r_in / s).ln() - spec.margin;
    if high <= 0.0 {
        return None;
    }
    let k = spec.order.max(1);
    let arc = high / (high - low) - 1.0 / (k as f64 + 1.0);
    if arc <= 0.0 {
        return None;
    }
    let q = selberg_majorant(-0.5 * arc, 0.5 * arc, k);
    let mut g = vec![C64::new(0.0, 0.0); k + 1];
    for n in 1..=k {
        g[n] = q[n] * (-2.0 * (high - low));
    }
    let e = exp_series(&g, 1e-14, spec.max_degree)?;
    let coeffs = v.iter().map(|vk| e[1..].iter().map(|c| c * vk).collect()).collect();
    AnalyticDisk::new(x.clone(), coeffs).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval_q(q: &[C64], y: f64) -> f64 {
        q[0].re
            + 2.0
                * q[1..].iter().enumerate().map(|(j, c)| (c * C64::cis(2.0 * PI * (j + 1) as f64 * y)).re).sum::<f64>()
    }

    #[test]
    fn majorant_dominates_the_arc_indicator() {
        let (alpha, beta, k) = (-0.15, 0.2, 24);
        let q = selberg_majorant(alpha, beta, k);
        assert!((q[0].re - (beta - alpha + 1.0 / (k as f64 + 1.0))).abs() < 1e-12);
        for j in 0..2000 {
            let y = j as f64 / 2000.0 - 0.5;
            let ind = if (alpha..=beta).contains(&y) { 1.0 } else { 0.0 };
            assert!(eval_q(&q, y) >= ind - 1e-12, "y = {y}");
        }
    }

    #[test]
    fn exp_series_matches_exp() {
        let g = vec![C64::new(0.0, 0.0), C64::new(0.3, -0.2), C64::new(0.0, 0.5)];
        let e = exp_series(&g, 1e-15, 200).unwrap();
        let t = C64::cis(0.7);
        let direct = (g[1] * t + g[2] * t * t).exp();
        let series: C64 = e.iter().rev().fold(C64::new(0.0, 0.0), |acc, c| acc * t + c);
        assert!((direct - series).norm() < 1e-13);
    }
}
