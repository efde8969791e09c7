//! Physical parameters, the per-edge grid, network states on the star graph,
//! and the energy inner product that all stability statements are measured in.
//!
//! The network has three identical unit-length edges joined at an inner
//! vertex (`s = 0` on every edge) and pinned at the outer ends (`s = 1`).
//! A state pairs a displacement `w_k` with a velocity `v_k` on each edge;
//! admissible displacements vanish at the outer ends and agree at the vertex.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, ParamViolation, Result};
use crate::numerics;

/// Tolerance scale for the vertex continuity and pinned-end checks performed
/// when a state is constructed: absolute slack `1e-10 · (1 + max |w|)`.
pub const VERTEX_TOL: f64 = 1e-10;

/// Model parameters of the pipe network.
///
/// `alpha` is the rotational stiffness at the vertex, `kappa` the feedback
/// gain acting on the vertex slope velocity, `beta` the fluid-to-total mass
/// ratio, `eta` the flow speed, and `gamma` the tension coefficient. The
/// effective tension `gamma - eta^2` must be positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub alpha: f64,
    pub kappa: f64,
    pub beta: f64,
    pub eta: f64,
    pub gamma: f64,
}

impl Params {
    /// Reference parameter set used throughout the examples and tests.
    pub fn reference() -> Self {
        Self { alpha: 0.5, kappa: 1.0, beta: 0.5, eta: 1.0, gamma: 2.0 }
    }

    /// Effective tension `gamma - eta^2`; positive for valid parameters.
    pub fn tension(&self) -> f64 {
        self.gamma - self.eta * self.eta
    }

    /// Checks every constraint and returns the full list of violations.
    pub fn validate(&self) -> Vec<ParamViolation> {
        let mut violations = Vec::new();
        for (value, name) in [
            (self.alpha, "alpha"),
            (self.kappa, "kappa"),
            (self.beta, "beta"),
            (self.eta, "eta"),
            (self.gamma, "gamma"),
        ] {
            if !value.is_finite() {
                violations.push(ParamViolation::NonFinite(name));
            }
        }
        if !violations.is_empty() {
            return violations;
        }
        if self.alpha < 0.0 {
            violations.push(ParamViolation::AlphaNegative(self.alpha));
        }
        if self.kappa < 0.0 {
            violations.push(ParamViolation::KappaNegative(self.kappa));
        }
        if self.beta <= 0.0 || self.beta >= 1.0 {
            violations.push(ParamViolation::BetaOutOfRange(self.beta));
        }
        if self.eta < 0.0 {
            violations.push(ParamViolation::EtaNegative(self.eta));
        }
        if self.gamma <= 0.0 {
            violations.push(ParamViolation::GammaNotPositive(self.gamma));
        } else if self.gamma <= self.eta * self.eta {
            violations.push(ParamViolation::TensionNonpositive { gamma: self.gamma, eta: self.eta });
        }
        violations
    }

    /// Returns the parameters unchanged if valid, otherwise the violation list.
    pub fn validated(self) -> Result<Self> {
        let violations = self.validate();
        if violations.is_empty() {
            Ok(self)
        } else {
            Err(Error::InvalidParams(violations))
        }
    }
}

/// Checks every parameter constraint; empty result means the set is admissible.
pub fn validate_params(p: &Params) -> Vec<ParamViolation> {
    p.validate()
}

/// Uniform grid on a single edge `s ∈ [0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeGrid {
    pub n_points: usize,
    pub h: f64,
    pub nodes: Vec<f64>,
}

impl EdgeGrid {
    /// Minimum node count; the quadrature and stencils need this much room.
    pub const MIN_POINTS: usize = 9;

    pub fn new(n_points: usize) -> Result<Self> {
        if n_points < Self::MIN_POINTS {
            return Err(Error::GridTooCoarse { got: n_points, min: Self::MIN_POINTS });
        }
        let h = 1.0 / (n_points - 1) as f64;
        let nodes = (0..n_points).map(|i| i as f64 * h).collect();
        Ok(Self { n_points, h, nodes })
    }
}

/// State of the network: displacement and velocity samples on each edge.
///
/// Construction checks the pinned ends `w_k(1) = 0` and the vertex
/// continuity `w_1(0) = w_2(0) = w_3(0)` to within
/// `VERTEX_TOL · (1 + max |w|)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub grid: EdgeGrid,
    pub w: [Vec<Complex64>; 3],
    pub v: [Vec<Complex64>; 3],
}

impl NetworkState {
    pub fn new(grid: EdgeGrid, w: [Vec<Complex64>; 3], v: [Vec<Complex64>; 3]) -> Result<Self> {
        for arr in w.iter().chain(v.iter()) {
            if arr.len() != grid.n_points {
                return Err(Error::ShapeMismatch { got: arr.len(), expected: grid.n_points });
            }
        }
        let state = Self { grid, w, v };
        state.check_vertex_conditions()?;
        Ok(state)
    }

    fn check_vertex_conditions(&self) -> Result<()> {
        let scale = VERTEX_TOL * (1.0 + self.max_abs_w());
        for (k, wk) in self.w.iter().enumerate() {
            let end = wk[wk.len() - 1].norm();
            if end > scale {
                return Err(Error::VertexConditions(format!(
                    "|w_{}(1)| = {end:.3e} exceeds the pinned-end tolerance {scale:.3e}",
                    k + 1
                )));
            }
        }
        for k in 1..3 {
            let gap = (self.w[k][0] - self.w[0][0]).norm();
            if gap > scale {
                return Err(Error::VertexConditions(format!(
                    "|w_{}(0) - w_1(0)| = {gap:.3e} exceeds the continuity tolerance {scale:.3e}",
                    k + 1
                )));
            }
        }
        Ok(())
    }

    pub fn zeros(grid: EdgeGrid) -> Self {
        let zero = vec![Complex64::new(0.0, 0.0); grid.n_points];
        Self { grid, w: [zero.clone(), zero.clone(), zero.clone()], v: [zero.clone(), zero.clone(), zero] }
    }

    /// Largest displacement magnitude over all edges and nodes.
    pub fn max_abs_w(&self) -> f64 {
        self.w.iter().flat_map(|e| e.iter()).map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest magnitude over displacements and velocities.
    pub fn max_abs(&self) -> f64 {
        self.v
            .iter()
            .flat_map(|e| e.iter())
            .map(|z| z.norm())
            .fold(self.max_abs_w(), f64::max)
    }

    /// Common displacement value at the inner vertex.
    pub fn vertex_value(&self) -> Complex64 {
        self.w[0][0]
    }

    /// Componentwise complex conjugate.
    pub fn conj(&self) -> Self {
        let map = |arrs: &[Vec<Complex64>; 3]| -> [Vec<Complex64>; 3] {
            [
                arrs[0].iter().map(|z| z.conj()).collect(),
                arrs[1].iter().map(|z| z.conj()).collect(),
                arrs[2].iter().map(|z| z.conj()).collect(),
            ]
        };
        Self { grid: self.grid.clone(), w: map(&self.w), v: map(&self.v) }
    }

    /// Real part of the state.
    pub fn real_part(&self) -> Self {
        let map = |arrs: &[Vec<Complex64>; 3]| -> [Vec<Complex64>; 3] {
            [
                arrs[0].iter().map(|z| Complex64::new(z.re, 0.0)).collect(),
                arrs[1].iter().map(|z| Complex64::new(z.re, 0.0)).collect(),
                arrs[2].iter().map(|z| Complex64::new(z.re, 0.0)).collect(),
            ]
        };
        Self { grid: self.grid.clone(), w: map(&self.w), v: map(&self.v) }
    }

    /// Scales both components by a complex factor.
    pub fn scaled(&self, factor: Complex64) -> Self {
        let map = |arrs: &[Vec<Complex64>; 3]| -> [Vec<Complex64>; 3] {
            [
                arrs[0].iter().map(|z| factor * z).collect(),
                arrs[1].iter().map(|z| factor * z).collect(),
                arrs[2].iter().map(|z| factor * z).collect(),
            ]
        };
        Self { grid: self.grid.clone(), w: map(&self.w), v: map(&self.v) }
    }

    /// `self + factor · other`; the grids must match.
    pub fn axpy(&self, factor: Complex64, other: &Self) -> Result<Self> {
        if self.grid.n_points != other.grid.n_points {
            return Err(Error::GridMismatch);
        }
        let mut out = self.clone();
        for k in 0..3 {
            for i in 0..self.grid.n_points {
                out.w[k][i] += factor * other.w[k][i];
                out.v[k][i] += factor * other.v[k][i];
            }
        }
        Ok(out)
    }
}

/// Value of the energy inner product, Hermitian in its two states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyValue {
    pub value: Complex64,
}

impl EnergyValue {
    /// Real part; exact for norm-squared evaluations.
    pub fn re(&self) -> f64 {
        self.value.re
    }
}

/// Energy inner product
/// `(x, y) = Σ_k [∫ w″ conj(ŵ″) + (γ−η²) ∫ w′ conj(ŵ′) + α w′(0) conj(ŵ′(0))] + Σ_k ∫ v conj(v̂)`,
/// with derivatives from 4th-order finite differences and integrals by
/// composite Simpson quadrature. Conjugate-symmetric: `(x,y) = conj((y,x))`.
pub fn energy_inner_product(x: &NetworkState, y: &NetworkState, p: &Params) -> Result<EnergyValue> {
    if x.grid.n_points != y.grid.n_points {
        return Err(Error::GridMismatch);
    }
    let h = x.grid.h;
    let q = p.tension();
    let weights = numerics::simpson_weights(x.grid.n_points, h);
    let mut total = Complex64::new(0.0, 0.0);
    for k in 0..3 {
        let xw1 = numerics::derivative(&x.w[k], h, 1);
        let yw1 = numerics::derivative(&y.w[k], h, 1);
        let xw2 = numerics::derivative(&x.w[k], h, 2);
        let yw2 = numerics::derivative(&y.w[k], h, 2);
        let mut edge = Complex64::new(0.0, 0.0);
        for i in 0..x.grid.n_points {
            edge += weights[i]
                * (xw2[i] * yw2[i].conj() + q * xw1[i] * yw1[i].conj() + x.v[k][i] * y.v[k][i].conj());
        }
        edge += p.alpha * xw1[0] * yw1[0].conj();
        total += edge;
    }
    Ok(EnergyValue { value: total })
}

/// Squared energy norm `(x, x)`; real and nonnegative.
pub fn energy_norm_squared(x: &NetworkState, p: &Params) -> Result<f64> {
    let ip = energy_inner_product(x, x, p)?;
    debug_assert!(ip.value.im.abs() <= 1e-9 * (1.0 + ip.value.re.abs()));
    Ok(ip.value.re)
}
