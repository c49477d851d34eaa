//! Radial kernel profiles supported in `[0, 1)` and the natural kernel pair.
//!
//! A profile is a function of the normalized distance `t = |x| / ε`. All
//! profiles vanish identically for `t ≥ 1`. Normalization constants are left
//! out: every estimator in this crate is a ratio of kernel sums, in which
//! they cancel.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::quadrature;

/// One-dimensional radial profile with derivative access.
#[derive(Clone)]
pub enum KernelProfile {
    /// `exp(−1 / (1 − t²))`.
    Bump,
    /// `1 − t`.
    Tent,
    /// Indicator of `[0, 1)`.
    Box,
    /// `ξ(s) = −s ρ′(s) / n`, the mass kernel paired with `ρ`.
    NaturalXi { rho: Box<KernelProfile>, n: usize },
    /// User-supplied profile, evaluated only on `[0, 1)`.
    Custom { name: &'static str, eval: fn(f64) -> f64, deriv: fn(f64) -> f64 },
}

impl fmt::Debug for KernelProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Bump => f.write_str("Bump"),
            Self::Tent => f.write_str("Tent"),
            Self::Box => f.write_str("Box"),
            Self::NaturalXi { rho, n } => write!(f, "NaturalXi({rho:?}, n = {n})"),
            Self::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

impl KernelProfile {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "bump" => Ok(Self::Bump),
            "tent" => Ok(Self::Tent),
            "box" => Ok(Self::Box),
            other => Err(Error::InvalidProfile(format!("unknown kernel `{other}`"))),
        }
    }

    pub fn support_radius(&self) -> f64 {
        1.0
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        if !(0.0..1.0).contains(&t) {
            return 0.0;
        }
        match self {
            Self::Bump => (-1.0 / (1.0 - t * t)).exp(),
            Self::Tent => 1.0 - t,
            Self::Box => 1.0,
            Self::NaturalXi { rho, n } => -t * rho.deriv(t) / *n as f64,
            Self::Custom { eval, .. } => eval(t),
        }
    }

    #[inline]
    pub fn deriv(&self, t: f64) -> f64 {
        if !(0.0..1.0).contains(&t) {
            return 0.0;
        }
        match self {
            Self::Bump => {
                let s = 1.0 - t * t;
                -2.0 * t / (s * s) * (-1.0 / s).exp()
            }
            Self::Tent => -1.0,
            Self::Box => 0.0,
            Self::NaturalXi { rho, n } => -(rho.deriv(t) + t * rho.second_deriv(t)) / *n as f64,
            Self::Custom { deriv, .. } => deriv(t),
        }
    }

    fn second_deriv(&self, t: f64) -> f64 {
        if !(0.0..1.0).contains(&t) {
            return 0.0;
        }
        match self {
            Self::Bump => {
                let s = 1.0 - t * t;
                let g = (-1.0 / s).exp();
                // d/dt [−2t s⁻² g]
                let dg = -2.0 * t / (s * s) * g;
                -2.0 / (s * s) * g - 8.0 * t * t / (s * s * s) * g - 2.0 * t / (s * s) * dg
            }
            Self::Tent | Self::Box => 0.0,
            Self::NaturalXi { .. } | Self::Custom { .. } => {
                let h = 1e-6;
                let lo = (t - h).max(0.0);
                let hi = (t + h).min(1.0 - 1e-15);
                (self.deriv(hi) - self.deriv(lo)) / (hi - lo)
            }
        }
    }
}

/// Default variation kernel `ρ(t) = exp(−1 / (1 − t²))`.
pub fn default_rho() -> KernelProfile {
    KernelProfile::Bump
}

/// Mass kernel `ξ(s) = −s ρ′(s) / n` of the natural kernel pair. Rejects
/// profiles with a positive derivative anywhere on a 1000-point grid.
pub fn xi_from_nkp(rho: &KernelProfile, n: usize) -> Result<KernelProfile> {
    if n == 0 {
        return Err(Error::InvalidProfile("ambient dimension must be positive".into()));
    }
    const GRID: usize = 1000;
    for step in 0..GRID {
        let t = step as f64 / GRID as f64;
        let d = rho.deriv(t);
        if d > 1e-14 || !d.is_finite() {
            return Err(Error::InvalidProfile(format!("profile {rho:?} is not decreasing near t = {t}")));
        }
    }
    Ok(KernelProfile::NaturalXi { rho: Box::new(rho.clone()), n })
}

/// Volume of the unit ball of `R^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / d as f64 * unit_ball_volume(d - 2),
    }
}

/// `d ω_d ∫₀¹ ρ(r) r^{d−1} dr`, the mass of `ρ(|x|)` over `R^d`.
pub fn kernel_constants(profile: &KernelProfile, d: usize) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidInput("dimension must be at least 1".into()));
    }
    let exponent = (d - 1) as i32;
    // The bump is flat-zero near 1; splitting there keeps the adaptive
    // scheme from wasting subdivisions on the tail.
    let integrand = |r: f64| profile.eval(r) * r.powi(exponent);
    let inner = quadrature::integrate(integrand, 0.0, 0.5, 1e-12)?;
    let outer = quadrature::integrate(integrand, 0.5, 1.0, 1e-12)?;
    Ok(d as f64 * unit_ball_volume(d) * (inner + outer))
}

/// Variation kernel `ρ`, mass kernel `ξ`, plane-averaging kernel `η` and the
/// constants `C_ρ`, `C_ξ` for `d`-varifolds in `R^n`.
#[derive(Debug, Clone)]
pub struct KernelPair {
    pub rho: KernelProfile,
    pub xi: KernelProfile,
    pub eta: KernelProfile,
    pub c_rho: f64,
    pub c_xi: f64,
    d: usize,
    n: usize,
}

impl KernelPair {
    /// Natural kernel pair built from `rho`, with `η := ρ`.
    pub fn natural(rho: KernelProfile, d: usize, n: usize) -> Result<Self> {
        let xi = xi_from_nkp(&rho, n)?;
        let eta = rho.clone();
        Self::new(rho, xi, eta, d, n)
    }

    /// Natural pair on the bump profile.
    pub fn default_for(d: usize, n: usize) -> Result<Self> {
        Self::natural(default_rho(), d, n)
    }

    pub fn new(rho: KernelProfile, xi: KernelProfile, eta: KernelProfile, d: usize, n: usize) -> Result<Self> {
        if d == 0 || d > n {
            return Err(Error::InvalidInput(format!("need 1 <= d <= n, got d = {d}, n = {n}")));
        }
        let c_rho = kernel_constants(&rho, d)?;
        let c_xi = kernel_constants(&xi, d)?;
        if !(c_rho > 0.0 && c_xi > 0.0) {
            return Err(Error::InvalidProfile(format!(
                "kernel constants must be positive (C_rho = {c_rho}, C_xi = {c_xi})"
            )));
        }
        Ok(Self { rho, xi, eta, c_rho, c_xi, d, n })
    }

    /// `C_ξ / C_ρ`; equals `d / n` for a natural pair.
    pub fn ratio(&self) -> f64 {
        self.c_xi / self.c_rho
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.d, self.n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, steps: usize) -> f64 {
        let h = (b - a) / steps as f64;
        let inner: f64 = (1..steps).map(|i| f(a + i as f64 * h)).sum();
        h * (0.5 * (f(a) + f(b)) + inner)
    }

    #[test]
    fn bump_values() {
        let rho = default_rho();
        assert_eq!(rho.eval(1.0), 0.0);
        assert_eq!(rho.eval(1.5), 0.0);
        assert_eq!(rho.deriv(0.0), 0.0);
        assert!((rho.eval(0.5) - (-4.0_f64 / 3.0).exp()).abs() < 1e-16);
    }

    #[test]
    fn bump_derivatives_match_finite_differences() {
        let rho = default_rho();
        for &t in &[0.1, 0.3, 0.5, 0.7, 0.9] {
            let h = 1e-6;
            let fd = (rho.eval(t + h) - rho.eval(t - h)) / (2.0 * h);
            assert!((fd - rho.deriv(t)).abs() < 1e-8, "t = {t}");
            let fd2 = (rho.deriv(t + h) - rho.deriv(t - h)) / (2.0 * h);
            assert!((fd2 - rho.second_deriv(t)).abs() < 1e-6 * fd2.abs().max(1.0), "t = {t}");
        }
    }

    #[test]
    fn natural_xi_values() {
        let xi = xi_from_nkp(&default_rho(), 3).unwrap();
        assert_eq!(xi.eval(0.0), 0.0);
        assert_eq!(xi.eval(1.0), 0.0);
        let expected = 0.5 * (2.0 * 0.5 / (0.75 * 0.75)) * (-4.0_f64 / 3.0).exp() / 3.0;
        assert!((xi.eval(0.5) - expected).abs() < 1e-16);
        for step in 0..100 {
            assert!(xi.eval(step as f64 / 100.0) >= 0.0);
        }
    }

    #[test]
    fn increasing_profile_rejected() {
        let up = KernelProfile::Custom { name: "ramp", eval: |t| t, deriv: |_| 1.0 };
        assert!(matches!(xi_from_nkp(&up, 2), Err(Error::InvalidProfile(_))));
    }

    #[test]
    fn closed_form_constants() {
        let c = kernel_constants(&KernelProfile::Box, 2).unwrap();
        assert!((c - PI).abs() < 1e-12);
        let c = kernel_constants(&KernelProfile::Tent, 1).unwrap();
        assert!((c - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bump_constant_matches_trapezoid() {
        let rho = default_rho();
        let c = kernel_constants(&rho, 2).unwrap();
        let reference = 2.0 * PI * trapezoid(|r| rho.eval(r) * r, 0.0, 1.0, 200_000);
        assert!((c - reference).abs() < 1e-8 * reference);
    }

    #[test]
    fn natural_pair_ratio_is_d_over_n() {
        for (d, n) in [(1, 2), (2, 3), (1, 3), (3, 5), (2, 2)] {
            for rho in [KernelProfile::Bump, KernelProfile::Tent] {
                let pair = KernelPair::natural(rho, d, n).unwrap();
                let expected = d as f64 / n as f64;
                assert!((pair.ratio() - expected).abs() < 1e-6, "d = {d}, n = {n}");
            }
        }
    }

    #[test]
    fn unit_ball_volumes() {
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-15);
    }

    #[test]
    fn box_profile_cannot_form_natural_pair() {
        assert!(matches!(KernelPair::natural(KernelProfile::Box, 2, 3), Err(Error::InvalidProfile(_))));
    }
}
