//! Large-`|ρ|` expansions: two-term asymptotics of the fundamental solutions,
//! the finite parts of the asymptotic characteristic equations, and the
//! eigenvalue approximations they imply. These serve as Newton seeds and as
//! independent cross-checks of the shooting route; they are never returned as
//! eigenvalues themselves.

use num_complex::Complex64;

use crate::model::Params;
use crate::spectral::Branch;

/// Fourth root of unity `ω_r = i^r` attached to fundamental solution `r ∈ 1..=4`.
pub fn omega(r: usize) -> Complex64 {
    match r % 4 {
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        3 => Complex64::new(0.0, -1.0),
        _ => Complex64::new(1.0, 0.0),
    }
}

/// The expansion coefficient `β²η²/2 + γ − η²` that shifts both the
/// characteristic roots and the eigenvalue imaginary parts.
pub fn curvature_constant(p: &Params) -> f64 {
    0.5 * p.beta * p.beta * p.eta * p.eta + p.tension()
}

/// Correction profiles entering the two-term expansion at position `s`.
#[derive(Debug, Clone, Copy)]
pub struct AsymptoticTerms {
    pub omega: Complex64,
    /// `Φ_r(s)`; vanishes at `s = 0`.
    pub phi: Complex64,
    /// `Φ_{r1}(s)`; vanishes at `s = 0`.
    pub phi1: Complex64,
    /// `Φ_r'(s)`, needed for derivative orders `m ≥ 1`.
    pub phi_prime: Complex64,
}

/// Evaluates the correction profiles for solution index `r ∈ 1..=4`.
pub fn asymptotic_terms(s: f64, r: usize, p: &Params) -> AsymptoticTerms {
    terms_with_gyro(s, r, p, 1.0)
}

/// Correction profiles for the adjoint equation, which carries the opposite
/// gyroscopic sign. Only the drift rate flips; the coefficient of `Φ_{r1}`
/// is even in `βη` and survives unchanged.
pub fn adjoint_asymptotic_terms(s: f64, r: usize, p: &Params) -> AsymptoticTerms {
    terms_with_gyro(s, r, p, -1.0)
}

fn terms_with_gyro(s: f64, r: usize, p: &Params, gyro: f64) -> AsymptoticTerms {
    assert!((1..=4).contains(&r));
    let sign = if r % 2 == 1 { 1.0 } else { -1.0 };
    let half_rate = Complex64::new(0.0, gyro * sign * 0.5 * p.beta * p.eta);
    let envelope = (half_rate * s).exp();
    let minus_i_pow_r = omega(r).conj(); // (−i)^r
    AsymptoticTerms {
        omega: omega(r),
        phi: envelope - 1.0,
        phi1: 0.25 * minus_i_pow_r * curvature_constant(p) * s * envelope,
        phi_prime: half_rate * envelope,
    }
}

/// Two-term asymptotic value of `φ_r^{(m)}(ρ, s)`:
///
/// ```text
/// (ω_r ρ)^m e^{ω_r ρ s} [ 1 + Φ_r(s) + (ω_r Φ_r1(s) + m Φ_r'(s)) / (ω_r ρ) ]
/// ```
///
/// Intended for `|ρ| ≥ 5`; the neglected remainder is `O(ρ⁻²)` uniformly on
/// the edge for `ρ` in the closed sector `0 ≤ arg ρ ≤ π/4`.
pub fn asymptotic_solution(rho: Complex64, s: f64, r: usize, m: usize, p: &Params) -> Complex64 {
    solution_from_terms(rho, s, m, asymptotic_terms(s, r, p))
}

/// Two-term asymptotic value for the adjoint equation; same structure as
/// [`asymptotic_solution`] with the gyroscopic drift reversed.
pub fn adjoint_asymptotic_solution(
    rho: Complex64,
    s: f64,
    r: usize,
    m: usize,
    p: &Params,
) -> Complex64 {
    solution_from_terms(rho, s, m, adjoint_asymptotic_terms(s, r, p))
}

fn solution_from_terms(rho: Complex64, s: f64, m: usize, terms: AsymptoticTerms) -> Complex64 {
    assert!(m <= 3);
    let wr = terms.omega * rho;
    let bracket = Complex64::new(1.0, 0.0)
        + terms.phi
        + (terms.omega * terms.phi1 + m as f64 * terms.phi_prime) / wr;
    wr.powu(m as u32) * (wr * s).exp() * bracket
}

/// Asymptotic eigenvalue approximation.
#[derive(Debug, Clone, Copy)]
pub struct AsymptoticEigenvalue {
    pub value: Complex64,
    /// True when `κ = 0`, where only the purely imaginary leading term is
    /// available and the real part is exactly zero at this order.
    pub leading_only: bool,
}

/// Abscissa `τ_n` of the `n`-th asymptotic root: `(n+1/2)π` on the first
/// branch, `(n+1/4)π` on the second.
pub fn tau(n: usize, branch: Branch) -> f64 {
    let offset = match branch {
        Branch::One => 0.5,
        Branch::Two => 0.25,
    };
    (n as f64 + offset) * std::f64::consts::PI
}

/// Asymptotic eigenvalue `−m/κ + i(τ_n² + C/2)` with `m = 1` on the first
/// branch and `m = 2` on the second; for `κ = 0` the real part is zero and
/// the result is flagged as leading-order only.
pub fn asymptotic_eigenvalue(n: usize, branch: Branch, p: &Params) -> AsymptoticEigenvalue {
    let t = tau(n, branch);
    let im = t * t + 0.5 * curvature_constant(p);
    if p.kappa > 0.0 {
        let re = match branch {
            Branch::One => -1.0 / p.kappa,
            Branch::Two => -2.0 / p.kappa,
        };
        AsymptoticEigenvalue { value: Complex64::new(re, im), leading_only: false }
    } else {
        AsymptoticEigenvalue { value: Complex64::new(0.0, im), leading_only: true }
    }
}

/// First-order root shift `z_n`, so that `ρ_n ≈ τ_n + z_n`.
pub fn rho_shift(n: usize, branch: Branch, p: &Params) -> Complex64 {
    let t = tau(n, branch);
    let c = curvature_constant(p);
    match branch {
        Branch::One => {
            let re = c / (4.0 * t);
            let im = if p.kappa > 0.0 { 1.0 / (2.0 * p.kappa * t) } else { 0.0 };
            Complex64::new(re, im)
        }
        Branch::Two => {
            let re = c / (4.0 * t);
            let im = if p.kappa > 0.0 { 1.0 / (p.kappa * t) } else { 0.0 };
            Complex64::new(re, im)
        }
    }
}

/// Seed for the Newton search in `ρ`: `τ_n + z_n`.
pub fn rho_seed(n: usize, branch: Branch, p: &Params) -> Complex64 {
    Complex64::new(tau(n, branch), 0.0) + rho_shift(n, branch, p)
}

/// Finite part of the asymptotic characteristic equation.
///
/// First branch: `cos ρ + C (sin ρ + cos ρ)/(4ρ) − i (cos ρ − sin ρ)/(2κρ)`.
/// Second branch: `cos(ρ+π/4) + C √2 cos ρ/(4ρ) + i √2 sin ρ/(κρ)`.
/// For `κ = 0` the feedback term is absent from the expansion and is dropped.
pub fn asymptotic_char_residual(rho: Complex64, branch: Branch, p: &Params) -> Complex64 {
    let c = curvature_constant(p);
    let i = Complex64::new(0.0, 1.0);
    match branch {
        Branch::One => {
            let mut value = rho.cos() + c * (rho.sin() + rho.cos()) / (4.0 * rho);
            if p.kappa > 0.0 {
                value -= i * (rho.cos() - rho.sin()) / (2.0 * p.kappa * rho);
            }
            value
        }
        Branch::Two => {
            let shifted = rho + std::f64::consts::FRAC_PI_4;
            let mut value =
                shifted.cos() + c * std::f64::consts::SQRT_2 * rho.cos() / (4.0 * rho);
            if p.kappa > 0.0 {
                value += i * std::f64::consts::SQRT_2 * rho.sin() / (p.kappa * rho);
            }
            value
        }
    }
}
