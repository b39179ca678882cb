//! One-dimensional test functions with exact derivatives.
//!
//! Templates are products of the bump `exp(−1/(1 − s²))` with a trigonometric
//! modulation. Derivatives come from truncated Taylor series (jets), so the
//! `C^q` normalization never differentiates numerically.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::quadrature::legendre_rule;

/// `∫_{−1}^{1} exp(−1/(1 − s²)) ds`.
pub const BUMP_MASS: f64 = 0.443_993_816_168_079_4;

/// Sample count used by [`cr_norm`].
pub const CR_SAMPLES: usize = 1 << 14;

/// Gauss–Legendre order for the mollifier convolution.
pub const MOLLIFIER_ORDER: usize = 320;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A smooth function of one real variable, supported in `support()`.
pub trait Profile: Send + Sync {
    fn support(&self) -> (f64, f64);

    /// `[f(t), f′(t), …, f⁽ᵒʳᵈᵉʳ⁾(t)]`.
    fn derivatives(&self, t: f64, order: usize) -> Vec<Complex64>;

    fn value(&self, t: f64) -> Complex64 {
        self.derivatives(t, 0)[0]
    }
}

pub type SharedProfile = Arc<dyn Profile>;

impl<P: Profile + ?Sized> Profile for Arc<P> {
    fn support(&self) -> (f64, f64) {
        (**self).support()
    }
    fn derivatives(&self, t: f64, order: usize) -> Vec<Complex64> {
        (**self).derivatives(t, order)
    }
}

impl<P: Profile + ?Sized> Profile for &P {
    fn support(&self) -> (f64, f64) {
        (**self).support()
    }
    fn derivatives(&self, t: f64, order: usize) -> Vec<Complex64> {
        (**self).derivatives(t, order)
    }
}

fn jet_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    (0..a.len())
        .map(|k| (0..=k).map(|j| a[j] * b[k - j]).sum())
        .collect()
}

fn jet_recip(u: &[f64]) -> Vec<f64> {
    let mut r = vec![0.0; u.len()];
    r[0] = 1.0 / u[0];
    for k in 1..u.len() {
        let s: f64 = (1..=k).map(|j| u[j] * r[k - j]).sum();
        r[k] = -s * r[0];
    }
    r
}

fn jet_exp(g: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; g.len()];
    e[0] = g[0].exp();
    for k in 1..g.len() {
        let s: f64 = (1..=k).map(|j| j as f64 * g[j] * e[k - j]).sum();
        e[k] = s / k as f64;
    }
    e
}

/// Taylor coefficients of `exp(−1/(1 − s²))` at `s`, through `s^order`.
pub fn bump_jet(s: f64, order: usize) -> Vec<f64> {
    let n = order + 1;
    let u0 = 1.0 - s * s;
    // below this the whole jet is under 1e-250
    if u0 <= 1.0 / 600.0 {
        return vec![0.0; n];
    }
    let mut u = vec![0.0; n];
    u[0] = u0;
    if n > 1 {
        u[1] = -2.0 * s;
    }
    if n > 2 {
        u[2] = -1.0;
    }
    let g: Vec<f64> = jet_recip(&u).into_iter().map(|v| -v).collect();
    jet_exp(&g)
}

/// Taylor coefficients of `cos(ω t + φ)` at `t`.
fn cos_jet(omega: f64, phase: f64, t: f64, order: usize) -> Vec<f64> {
    let (sin, cos) = (omega * t + phase).sin_cos();
    let cycle = [cos, -sin, -cos, sin];
    let mut coeff = 1.0;
    (0..=order)
        .map(|k| {
            if k > 0 {
                coeff *= omega / k as f64;
            }
            coeff * cycle[k % 4]
        })
        .collect()
}

fn taylor_to_derivatives(c: &[f64], scale: f64) -> Vec<Complex64> {
    let mut fact = 1.0;
    c.iter()
        .enumerate()
        .map(|(k, v)| {
            if k > 0 {
                fact *= k as f64;
            }
            Complex64::new(v * fact * scale.powi(k as i32), 0.0)
        })
        .collect()
}

/// `scale · B(t/δ) · cos(ω t + φ)` with `B(s) = exp(−1/(1 − s²))`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestFunction {
    pub delta: f64,
    pub scale: f64,
    pub omega: f64,
    pub phase: f64,
}

impl TestFunction {
    pub fn new(delta: f64, omega: f64, phase: f64) -> Self {
        Self {
            delta,
            scale: 1.0,
            omega,
            phase,
        }
    }

    /// Template `i` of the standard family: frequencies `⌊(i+1)/2⌋·π/δ`,
    /// alternating cosine and sine.
    pub fn template(delta: f64, i: usize) -> Self {
        let omega = i.div_ceil(2) as f64 * PI / delta;
        let phase = if i.is_multiple_of(2) { 0.0 } else { -FRAC_PI_2 };
        Self::new(delta, omega, phase)
    }

    /// Rescaled so that the certified upper bound of `‖·‖_{C^q}` equals one.
    pub fn normalized(&self, q: usize) -> Self {
        let unit = Self {
            scale: 1.0,
            ..self.clone()
        };
        let norm = cr_norm(&unit, q).upper;
        Self {
            scale: 1.0 / norm,
            ..unit
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            scale: self.scale * s,
            ..self.clone()
        }
    }
}

impl Profile for TestFunction {
    fn support(&self) -> (f64, f64) {
        (-self.delta, self.delta)
    }

    fn derivatives(&self, t: f64, order: usize) -> Vec<Complex64> {
        let s = t / self.delta;
        if s.abs() >= 1.0 {
            return vec![ZERO; order + 1];
        }
        // bump jet in s, rescaled to t: coefficient k picks up δ^{-k}
        let mut bump = bump_jet(s, order);
        let inv = 1.0 / self.delta;
        let mut p = 1.0;
        for c in bump.iter_mut() {
            *c *= p;
            p *= inv;
        }
        let wave = cos_jet(self.omega, self.phase, t, order);
        taylor_to_derivatives(&jet_mul(&bump, &wave), 1.0)
            .into_iter()
            .map(|v| v * self.scale)
            .collect()
    }
}

/// Any closure `(t, order) ↦ derivatives` on a fixed interval.
pub struct FnProfile<F> {
    pub support: (f64, f64),
    pub f: F,
}

impl<F> Profile for FnProfile<F>
where
    F: Fn(f64, usize) -> Vec<Complex64> + Send + Sync,
{
    fn support(&self) -> (f64, f64) {
        self.support
    }
    fn derivatives(&self, t: f64, order: usize) -> Vec<Complex64> {
        (self.f)(t, order)
    }
}

fn binomial_row(n: usize) -> Vec<f64> {
    let mut row = vec![1.0; n + 1];
    for k in 1..n {
        row[k] = row[k - 1] * (n - k + 1) as f64 / k as f64;
    }
    row
}

fn leibniz(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    (0..a.len())
        .map(|n| {
            let c = binomial_row(n);
            (0..=n).map(|k| a[k] * b[n - k] * c[k]).sum()
        })
        .collect()
}

/// `e^{i(c + a t)} · f(t)`.
pub struct Modulated<P> {
    pub inner: P,
    pub c: f64,
    pub a: f64,
}

impl<P: Profile> Profile for Modulated<P> {
    fn support(&self) -> (f64, f64) {
        self.inner.support()
    }
    fn derivatives(&self, t: f64, order: usize) -> Vec<Complex64> {
        let f = self.inner.derivatives(t, order);
        let e = Complex64::cis(self.c + self.a * t);
        let ia = Complex64::new(0.0, self.a);
        let wave: Vec<Complex64> = (0..=order).map(|k| ia.powu(k as u32) * e).collect();
        leibniz(&f, &wave)
    }
}

/// `f(t − b)`.
pub struct Shifted<P> {
    pub inner: P,
    pub b: f64,
}

impl<P: Profile> Profile for Shifted<P> {
    fn support(&self) -> (f64, f64) {
        let (a, b) = self.inner.support();
        (a + self.b, b + self.b)
    }
    fn derivatives(&self, t: f64, order: usize) -> Vec<Complex64> {
        self.inner.derivatives(t - self.b, order)
    }
}

/// `f(t / s)` for `s > 0`.
pub struct Dilated<P> {
    pub inner: P,
    pub s: f64,
}

impl<P: Profile> Profile for Dilated<P> {
    fn support(&self) -> (f64, f64) {
        let (a, b) = self.inner.support();
        (a * self.s, b * self.s)
    }
    fn derivatives(&self, t: f64, order: usize) -> Vec<Complex64> {
        let inv = 1.0 / self.s;
        self.inner
            .derivatives(t * inv, order)
            .into_iter()
            .enumerate()
            .map(|(k, v)| v * inv.powi(k as i32))
            .collect()
    }
}

/// `f′`.
pub struct Derived<P> {
    pub inner: P,
}

impl<P: Profile> Profile for Derived<P> {
    fn support(&self) -> (f64, f64) {
        self.inner.support()
    }
    fn derivatives(&self, t: f64, order: usize) -> Vec<Complex64> {
        self.inner.derivatives(t, order + 1).split_off(1)
    }
}

/// `f − g`.
pub struct Difference<P, Q> {
    pub f: P,
    pub g: Q,
}

impl<P: Profile, Q: Profile> Profile for Difference<P, Q> {
    fn support(&self) -> (f64, f64) {
        let (a, b) = self.f.support();
        let (c, d) = self.g.support();
        (a.min(c), b.max(d))
    }
    fn derivatives(&self, t: f64, order: usize) -> Vec<Complex64> {
        let f = self.f.derivatives(t, order);
        let g = self.g.derivatives(t, order);
        f.iter().zip(&g).map(|(x, y)| x - y).collect()
    }
}

/// `f · g`, by the Leibniz rule.
pub struct Product<P, Q> {
    pub f: P,
    pub g: Q,
}

impl<P: Profile, Q: Profile> Profile for Product<P, Q> {
    fn support(&self) -> (f64, f64) {
        let (a, b) = self.f.support();
        let (c, d) = self.g.support();
        (a.max(c), b.min(d).max(a.max(c)))
    }
    fn derivatives(&self, t: f64, order: usize) -> Vec<Complex64> {
        leibniz(&self.f.derivatives(t, order), &self.g.derivatives(t, order))
    }
}

/// The standard mollifier `ρ(z) = exp(−1/(1 − z²)) / BUMP_MASS` on `|z| < 1`.
pub fn mollifier(z: f64) -> f64 {
    if z.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - z * z)).exp() / BUMP_MASS
    }
}

/// `ρ_ε ⋆ f`; derivatives are `∫ ρ(z) f⁽ʲ⁾(t − εz) dz`.
pub struct Mollified<P> {
    pub inner: P,
    pub eps: f64,
}

impl<P: Profile> Profile for Mollified<P> {
    fn support(&self) -> (f64, f64) {
        let (a, b) = self.inner.support();
        (a - self.eps, b + self.eps)
    }
    fn derivatives(&self, t: f64, order: usize) -> Vec<Complex64> {
        let mut out = vec![ZERO; order + 1];
        for &(z, w) in legendre_rule(MOLLIFIER_ORDER).iter() {
            let weight = w * mollifier(z);
            if weight == 0.0 {
                continue;
            }
            for (o, d) in out.iter_mut().zip(self.inner.derivatives(t - self.eps * z, order)) {
                *o += d * weight;
            }
        }
        out
    }
}

/// Piece `i` of the `δ`-periodic partition of unity
/// `ψ_i(t) = B((t − iδ)/δ) / Σ_j B((t − jδ)/δ)`; `Σ_i ψ_i ≡ 1` on `ℝ`.
#[derive(Clone, Debug)]
pub struct PartitionWindow {
    pub delta: f64,
    pub index: i64,
}

impl Profile for PartitionWindow {
    fn support(&self) -> (f64, f64) {
        let c = self.index as f64 * self.delta;
        (c - self.delta, c + self.delta)
    }

    fn derivatives(&self, t: f64, order: usize) -> Vec<Complex64> {
        let scaled = |j: i64| {
            let mut jet = bump_jet((t - j as f64 * self.delta) / self.delta, order);
            let mut p = 1.0;
            for c in jet.iter_mut() {
                *c *= p;
                p /= self.delta;
            }
            jet
        };
        let num = scaled(self.index);
        if num[0] == 0.0 && num.iter().all(|v| *v == 0.0) {
            return vec![ZERO; order + 1];
        }
        let centre = (t / self.delta).round() as i64;
        let mut den = vec![0.0; order + 1];
        for j in centre - 2..=centre + 2 {
            for (d, v) in den.iter_mut().zip(scaled(j)) {
                *d += v;
            }
        }
        taylor_to_derivatives(&jet_mul(&num, &jet_recip(&den)), 1.0)
    }
}

/// `‖f‖_{C^r} = sup_{k ≤ r} 2^{r−k} |f⁽ᵏ⁾|_∞` from dense sampling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CrNorm {
    pub order: usize,
    /// Largest weighted sample.
    pub value: f64,
    /// `value` plus the sampling slack `h²/8 · (|f⁽ᵏ⁺²⁾| + |f⁽ᵏ⁺¹⁾|²/|f⁽ᵏ⁾|)`,
    /// which bounds how far `|f⁽ᵏ⁾|` can rise between samples `h` apart.
    pub upper: f64,
}

/// Per-order sample maxima of `|f⁽ᵏ⁾|`, `k ≤ order`, over
/// `CR_SAMPLES + 1` equispaced points of the support.
pub fn sampled_maxima(f: &dyn Profile, order: usize) -> (Vec<f64>, f64) {
    let (a, b) = f.support();
    let h = (b - a) / CR_SAMPLES as f64;
    let maxima = (0..=CR_SAMPLES)
        .into_par_iter()
        .map(|i| {
            f.derivatives(a + h * i as f64, order)
                .iter()
                .map(|v| v.norm())
                .collect::<Vec<f64>>()
        })
        .reduce(
            || vec![0.0; order + 1],
            |x, y| x.iter().zip(&y).map(|(p, q)| p.max(*q)).collect(),
        );
    (maxima, h)
}

pub fn cr_norm(f: &dyn Profile, r: usize) -> CrNorm {
    let (m, h) = sampled_maxima(f, r + 2);
    cr_norm_from_maxima(&m, h, r)
}

/// [`cr_norm`] from precomputed maxima (needs orders through `r + 2`).
pub fn cr_norm_from_maxima(m: &[f64], h: f64, r: usize) -> CrNorm {
    let (mut value, mut upper) = (0.0_f64, 0.0_f64);
    for k in 0..=r {
        let weight = 2f64.powi((r - k) as i32);
        let slack = if m[k] > 0.0 {
            h * h / 8.0 * (m[k + 2] + m[k + 1] * m[k + 1] / m[k])
        } else {
            0.5 * h * m[k + 1]
        };
        value = value.max(weight * m[k]);
        upper = upper.max(weight * (m[k] + slack));
    }
    CrNorm {
        order: r,
        value,
        upper,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate_fixed;
    use proptest::prelude::*;

    fn finite_difference(f: &dyn Profile, t: f64, k: usize) -> Complex64 {
        let h = 1e-5;
        (f.derivatives(t + h, k)[k] - f.derivatives(t - h, k)[k]) / (2.0 * h)
    }

    #[test]
    fn bump_mass_matches_quadrature() {
        let f = |z: f64| Complex64::new((-1.0 / (1.0 - z * z)).exp(), 0.0);
        let v = integrate_fixed(&f, -1.0, 1.0, MOLLIFIER_ORDER);
        assert!((v.re - BUMP_MASS).abs() < 1e-13);
        let rho = |z: f64| Complex64::new(mollifier(z), 0.0);
        assert!((integrate_fixed(&rho, -1.0, 1.0, MOLLIFIER_ORDER).re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn jets_agree_with_finite_differences() {
        let eta = TestFunction::template(0.1, 5);
        for &t in &[-0.07, -0.02, 0.0, 0.031, 0.09] {
            let d = eta.derivatives(t, 5);
            for k in 0..5 {
                let fd = finite_difference(&eta, t, k);
                assert!((fd - d[k + 1]).norm() <= 1e-5 * d[k + 1].norm().max(1.0), "t={t} k={k}");
            }
        }
    }

    #[test]
    fn closed_form_bump_derivative() {
        // B′(s) = −2s/(1 − s²)² B(s)
        let s = 0.4;
        let jet = bump_jet(s, 1);
        let b = (-1.0 / (1.0 - s * s)).exp();
        assert!((jet[0] - b).abs() < 1e-16);
        assert!((jet[1] + 2.0 * s / (1.0 - s * s).powi(2) * b).abs() < 1e-15);
    }

    #[test]
    fn cr_norm_of_sine_and_constants() {
        let sine = FnProfile {
            support: (0.0, 2.0 * PI),
            f: |t: f64, order: usize| {
                (0..=order)
                    .map(|k| Complex64::new((t + k as f64 * FRAC_PI_2).sin(), 0.0))
                    .collect()
            },
        };
        let n = cr_norm(&sine, 1);
        assert!((n.value - 2.0).abs() < 1e-7);
        assert!(n.upper >= 2.0 && n.upper < 2.0 + 1e-6);
        let c = FnProfile {
            support: (-1.0, 1.0),
            f: |_t: f64, order: usize| {
                let mut v = vec![Complex64::new(0.0, 0.0); order + 1];
                v[0] = Complex64::new(-1.5, 0.0);
                v
            },
        };
        for r in 0..4 {
            let n = cr_norm(&c, r);
            assert_eq!(n.value, 2f64.powi(r as i32) * 1.5);
        }
    }

    #[test]
    fn normalization_reaches_unit_norm() {
        for i in 0..8 {
            for q in 1..=3 {
                let eta = TestFunction::template(0.1, i).normalized(q);
                let n = cr_norm(&eta, q);
                assert!(n.upper <= 1.0 + 1e-12 && n.value > 0.99, "i={i} q={q} {n:?}");
            }
        }
    }

    #[test]
    fn mollifier_quadrature_is_converged() {
        let eta = TestFunction::template(0.1, 3).normalized(2);
        let fine = |t: f64, order: usize, nodes: usize| {
            let mut out = vec![ZERO; order + 1];
            for &(z, w) in legendre_rule(nodes).iter() {
                for (o, d) in out.iter_mut().zip(eta.derivatives(t - 0.025 * z, order)) {
                    *o += d * w * mollifier(z);
                }
            }
            out
        };
        let m = Mollified { inner: &eta, eps: 0.025 };
        for &t in &[-0.11, -0.1, -0.05, 0.0, 0.07, 0.09] {
            let a = m.derivatives(t, 4);
            let b = fine(t, 4, 1280);
            for k in 0..=4 {
                assert!((a[k] - b[k]).norm() <= 1e-10 * b[k].norm().max(1.0), "t={t} k={k} {} {}", a[k], b[k]);
            }
        }
    }

    #[test]
    fn partition_windows_sum_to_one() {
        for &t in &[-0.33, -0.1, 0.0, 0.049, 0.25] {
            let total: Vec<Complex64> = (-6..=6)
                .map(|i| PartitionWindow { delta: 0.1, index: i }.derivatives(t, 3))
                .fold(vec![ZERO; 4], |acc, d| acc.iter().zip(&d).map(|(a, b)| a + b).collect());
            assert!((total[0] - 1.0).norm() < 1e-14);
            for v in &total[1..] {
                assert!(v.norm() < 1e-8, "t={t} {v}");
            }
        }
    }

    #[test]
    fn wrappers_match_direct_formulas() {
        let eta = TestFunction::template(0.1, 2);
        let t = 0.03;
        let m = Modulated { inner: &eta, c: 0.4, a: 3.0 };
        let direct = eta.value(t) * Complex64::cis(0.4 + 3.0 * t);
        assert!((m.value(t) - direct).norm() < 1e-15);
        let fd = finite_difference(&m, t, 0);
        assert!((fd - m.derivatives(t, 1)[1]).norm() < 1e-6);
        let d = Dilated { inner: &eta, s: 2.0 };
        assert!((d.derivatives(0.06, 1)[1] - eta.derivatives(0.03, 1)[1] * 0.5).norm() < 1e-12);
        let dv = Derived { inner: &eta };
        assert_eq!(dv.value(t), eta.derivatives(t, 1)[1]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn cr_norm_is_submultiplicative(i in 0usize..8, j in 0usize..8, r in 0usize..3, s in 0.02f64..0.1) {
            let f = TestFunction::template(0.1, i);
            let g = TestFunction::template(s, j);
            let prod = Product { f: &f, g: &g };
            let lhs = cr_norm(&prod, r).value;
            let rhs = cr_norm(&f, r).upper * cr_norm(&g, r).upper;
            prop_assert!(lhs <= rhs * (1.0 + 1e-12));
        }
    }
}
