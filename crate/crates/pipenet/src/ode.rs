//! Fundamental systems of the spectral ODE on a single edge.
//!
//! For a spectral point `λ = iρ²` the displacement profile on an edge obeys
//!
//! ```text
//! φ'''' − (γ−η²) φ'' + 2λβη φ' + λ² φ = 0,
//! ```
//!
//! and the adjoint problem flips the sign of the first-order term:
//!
//! ```text
//! ψ'''' − (γ−η²) ψ'' − 2μβη ψ' + μ² ψ = 0.
//! ```
//!
//! Two fundamental systems are available. [`integrate_fundamental_system`]
//! integrates the four canonical columns `φ_r^{(m)}(0) = δ_{m,r−1}` as a
//! first-order system with an adaptive Runge–Kutta 5(4) scheme; each column
//! is rescaled by its largest recorded magnitude and the factors are kept so
//! sampled solutions can be de-normalized. [`modal_fundamental_system`]
//! exploits that the coefficients are constant: the columns are the exact
//! exponentials `e^{μ_j s}` with `μ_j` the roots of the characteristic
//! quartic, each divided by its growth over the edge. Canonical columns are
//! combinations of all four exponentials, so their endpoint data lose every
//! digit to cancellation once `e^{|Re μ|}` passes `1/ε`; the exponential
//! columns keep machine precision at any `|ρ|`, at the price of a basis
//! change (a Vandermonde factor in the `μ_j`) that determinant consumers
//! must divide back out.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{EdgeGrid, Params};
use crate::numerics::{self, CompanionSystem, FundamentalColumns, OdeOptions};

/// A point `λ` of the spectral plane together with `ρ`, the variable the
/// root search works in, such that `λ = iρ²`.
///
/// For `Im λ ≥ 0` the principal square root places `ρ` in the closed sector
/// `0 ≤ arg ρ ≤ π/4` whenever `Re λ ≤ 0`; points with `Im λ < 0` are reached
/// through conjugation symmetry rather than by integrating in reflected
/// sectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPoint {
    pub lambda: Complex64,
    pub rho: Complex64,
}

impl SpectralPoint {
    pub fn from_lambda(lambda: Complex64) -> Self {
        let rho = (lambda * Complex64::new(0.0, -1.0)).sqrt();
        Self { lambda, rho }
    }

    pub fn from_rho(rho: Complex64) -> Self {
        Self { lambda: Complex64::new(0.0, 1.0) * rho * rho, rho }
    }

    /// `|iρ² − λ|` relative to `1 + |λ|`; zero up to roundoff by construction.
    pub fn consistency(&self) -> f64 {
        (Complex64::new(0.0, 1.0) * self.rho * self.rho - self.lambda).norm()
            / (1.0 + self.lambda.norm())
    }
}

/// Endpoint (and optionally dense) data of the four fundamental solutions.
///
/// `at_zero[m][r]` and `at_one[m][r]` hold `φ_{r+1}^{(m)}` at `s = 0` and
/// `s = 1`, divided by the column factor `scale[r]`. Dense trajectories, when
/// requested, are stored per grid node as `[column][order]`, scaled the same
/// way. Coefficient vectors fed to [`sample_solution`] always refer to the
/// columns of the data at hand; `exponents` records which basis that is
/// (`None` for the canonical initial-value columns, the characteristic roots
/// for exponential columns).
#[derive(Debug, Clone)]
pub struct FundamentalData {
    pub point: SpectralPoint,
    pub adjoint: bool,
    pub at_zero: [[Complex64; 4]; 4],
    pub at_one: [[Complex64; 4]; 4],
    pub trajectories: Option<Vec<FundamentalColumns>>,
    pub grid: Option<EdgeGrid>,
    pub scale: [f64; 4],
    pub exponents: Option<[Complex64; 4]>,
}

/// Companion-system coefficient row for the direct or adjoint equation.
fn companion(sp: &SpectralPoint, p: &Params, adjoint: bool) -> CompanionSystem {
    let q = Complex64::new(p.tension(), 0.0);
    let lambda = sp.lambda;
    let gyro = 2.0 * p.beta * p.eta * lambda;
    let first_order = if adjoint { gyro } else { -gyro };
    CompanionSystem { row: [-lambda * lambda, first_order, q] }
}

/// Integrates the four canonical fundamental solutions across the edge.
///
/// With `grid = Some(..)` the full trajectories at the grid nodes are kept
/// for later sampling; otherwise only the endpoint data are stored.
pub fn integrate_fundamental_system(
    sp: &SpectralPoint,
    p: &Params,
    adjoint: bool,
    grid: Option<&EdgeGrid>,
) -> Result<FundamentalData> {
    let system = companion(sp, p, adjoint);
    let mut u0 = [[Complex64::new(0.0, 0.0); 4]; 4];
    for (r, col) in u0.iter_mut().enumerate() {
        col[r] = Complex64::new(1.0, 0.0);
    }
    let endpoints = [0.0, 1.0];
    let nodes: &[f64] = match grid {
        Some(g) => &g.nodes,
        None => &endpoints,
    };
    let states = numerics::integrate_linear_system(&system, u0, nodes, &OdeOptions::default())?;

    let mut scale = [0.0f64; 4];
    for state in &states {
        for (r, col) in state.iter().enumerate() {
            for entry in col {
                scale[r] = scale[r].max(entry.norm());
            }
        }
    }
    for s in &mut scale {
        if *s == 0.0 {
            *s = 1.0;
        }
    }

    let rescale = |state: &FundamentalColumns| -> [[Complex64; 4]; 4] {
        let mut out = [[Complex64::new(0.0, 0.0); 4]; 4];
        for (m, row) in out.iter_mut().enumerate() {
            for (r, entry) in row.iter_mut().enumerate() {
                *entry = state[r][m] / scale[r];
            }
        }
        out
    };
    let at_zero = rescale(&states[0]);
    let at_one = rescale(states.last().unwrap());
    let trajectories = grid.map(|_| {
        states
            .iter()
            .map(|state| {
                let mut scaled = *state;
                for (r, col) in scaled.iter_mut().enumerate() {
                    for entry in col.iter_mut() {
                        *entry /= scale[r];
                    }
                }
                scaled
            })
            .collect()
    });

    Ok(FundamentalData {
        point: *sp,
        adjoint,
        at_zero,
        at_one,
        trajectories,
        grid: grid.cloned(),
        scale,
        exponents: None,
    })
}

/// The four characteristic exponents of the edge equation at `sp`: roots of
/// `μ⁴ − (γ−η²)μ² ± 2λβη μ + λ² = 0` (lower sign for the adjoint), sorted by
/// real then imaginary part.
///
/// Fails with a degeneracy error when two exponents nearly coincide (within
/// `1e−8` relative to the largest), which happens only on the discriminant
/// set of the quartic; for the reference parameters the closest approach over
/// the spectral search region is `O(1)` apart from `λ = 0` itself.
pub fn characteristic_roots(
    sp: &SpectralPoint,
    p: &Params,
    adjoint: bool,
) -> Result<[Complex64; 4]> {
    let lambda = sp.lambda;
    let gyro = 2.0 * p.beta * p.eta * lambda;
    let coeffs = [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(-p.tension(), 0.0),
        if adjoint { -gyro } else { gyro },
        lambda * lambda,
    ];
    let mut mus = numerics::quartic_roots(&coeffs);
    mus.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
    let largest = mus.iter().map(|m| m.norm()).fold(0.0, f64::max);
    for i in 0..4 {
        for j in i + 1..4 {
            if (mus[i] - mus[j]).norm() < 1e-8 * (1.0 + largest) {
                return Err(Error::SingularSystem("characteristic exponents nearly coincide"));
            }
        }
    }
    Ok(mus)
}

/// Exact fundamental system with exponential columns `e^{μ_j s}`.
///
/// Column `j` is scaled by `e^{−max(0, Re μ_j)}`, its largest modulus over
/// the edge, so entries never overflow and endpoint data stay `O(|μ|^m)`. The
/// layout matches [`integrate_fundamental_system`] and the data slot into the
/// same consumers; only the meaning of coefficient vectors changes with the
/// basis, as recorded in `exponents`. Unlike the canonical columns these are
/// not individually bounded away from dependence: their Gram determinant is
/// the Vandermonde in the `μ_j`, which the degeneracy check keeps nonzero.
pub fn modal_fundamental_system(
    sp: &SpectralPoint,
    p: &Params,
    adjoint: bool,
    grid: Option<&EdgeGrid>,
) -> Result<FundamentalData> {
    let mus = characteristic_roots(sp, p, adjoint)?;
    let growth: [f64; 4] = std::array::from_fn(|j| mus[j].re.max(0.0));
    let column = |j: usize, s: f64| -> [Complex64; 4] {
        let envelope = (mus[j] * s - growth[j]).exp();
        let mut out = [envelope; 4];
        for m in 1..4 {
            out[m] = out[m - 1] * mus[j];
        }
        out
    };
    let endpoint = |s: f64| -> [[Complex64; 4]; 4] {
        let mut out = [[Complex64::new(0.0, 0.0); 4]; 4];
        for j in 0..4 {
            let col = column(j, s);
            for m in 0..4 {
                out[m][j] = col[m];
            }
        }
        out
    };
    let trajectories = grid.map(|g| {
        g.nodes
            .iter()
            .map(|&s| {
                let mut state = [[Complex64::new(0.0, 0.0); 4]; 4];
                for (j, slot) in state.iter_mut().enumerate() {
                    *slot = column(j, s);
                }
                state
            })
            .collect()
    });
    Ok(FundamentalData {
        point: *sp,
        adjoint,
        at_zero: endpoint(0.0),
        at_one: endpoint(1.0),
        trajectories,
        grid: grid.cloned(),
        scale: std::array::from_fn(|j| growth[j].exp()),
        exponents: Some(mus),
    })
}

/// Reconstructs `φ, φ′, φ″, φ‴` on the grid from null-vector coefficients,
/// de-normalized by the recorded column factors: `φ = Σ_r a_r φ_{r+1}`.
pub fn sample_solution(
    coeffs: &[Complex64; 4],
    fd: &FundamentalData,
) -> Result<[Vec<Complex64>; 4]> {
    let trajectories = fd.trajectories.as_ref().ok_or(Error::MissingTrajectories)?;
    let n = trajectories.len();
    let mut out = [vec![], vec![], vec![], vec![]];
    for arr in &mut out {
        arr.reserve(n);
    }
    for state in trajectories {
        for (m, arr) in out.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for r in 0..4 {
                acc += coeffs[r] * state[r][m] * fd.scale[r];
            }
            arr.push(acc);
        }
    }
    Ok(out)
}
