#![allow(dead_code)]

//! Shared fixtures for the integration tests: an independent fixed-step
//! RK4 integrator for the spectral ODE and frozen eigenvalue tables for the
//! reference parameter set.

use num_complex::Complex64;
use pipenet::model::Params;

/// Classical fixed-step RK4 for the companion system of the spectral ODE,
/// written out by hand so it shares no code with the library integrator.
///
/// Returns the raw (unscaled) endpoint matrix `out[m][r] = φ_{r+1}^{(m)}(1)`
/// for the four canonical initial-value columns.
pub fn rk4_endpoint(
    lambda: Complex64,
    p: &Params,
    adjoint: bool,
    n_steps: usize,
) -> [[Complex64; 4]; 4] {
    let q = Complex64::new(p.tension(), 0.0);
    let gyro = 2.0 * p.beta * p.eta * lambda;
    let first = if adjoint { gyro } else { -gyro };
    let rhs = |y: &[Complex64; 4]| -> [Complex64; 4] {
        [y[1], y[2], y[3], -lambda * lambda * y[0] + first * y[1] + q * y[2]]
    };
    let h = 1.0 / n_steps as f64;
    let mut out = [[Complex64::new(0.0, 0.0); 4]; 4];
    for r in 0..4 {
        let mut y = [Complex64::new(0.0, 0.0); 4];
        y[r] = Complex64::new(1.0, 0.0);
        for _ in 0..n_steps {
            let k1 = rhs(&y);
            let y2: [Complex64; 4] = std::array::from_fn(|i| y[i] + 0.5 * h * k1[i]);
            let k2 = rhs(&y2);
            let y3: [Complex64; 4] = std::array::from_fn(|i| y[i] + 0.5 * h * k2[i]);
            let k3 = rhs(&y3);
            let y4: [Complex64; 4] = std::array::from_fn(|i| y[i] + h * k3[i]);
            let k4 = rhs(&y4);
            for i in 0..4 {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        for m in 0..4 {
            out[m][r] = y[m];
        }
    }
    out
}

/// Eigenvalues with `Im λ ≥ 0` at the reference parameters
/// `(α, κ, β, η, γ) = (0.5, 1, 0.5, 1, 2)`, first branch, ordered by
/// imaginary part. Computed by the determinant search and confirmed against
/// an independent adaptive integration of the fundamental system.
pub const BRANCH1_REFERENCE: &[(f64, f64)] = &[
    (-1.615227425332, 0.0),
    (-0.567347722706, 2.527335115951),
    (-0.941374475613, 22.617861573564),
    (-0.978625492065, 62.161181526899),
    (-0.988975301814, 121.404820258227),
    (-0.993299801807, 200.375648363712),
    (-0.995502726039, 299.080425813209),
    (-0.996774594006, 417.521646247417),
    (-0.997574550253, 555.700442898895),
    (-0.998110091734, 713.617404631506),
    (-0.998486072282, 891.272867645174),
    (-0.998760100281, 1088.667037812250),
    (-0.998965955465, 1305.800048228161),
    (-0.999124506096, 1542.671988742347),
];

/// Second-branch analogue of [`BRANCH1_REFERENCE`].
pub const BRANCH2_REFERENCE: &[(f64, f64)] = &[
    (-3.961249105184, 0.0),
    (-1.891223452559, 15.231710477865),
    (-1.960422099069, 50.127058784984),
    (-1.979722518045, 104.533476451490),
    (-1.987706909789, 178.620856481286),
    (-1.991762326956, 272.422453450684),
    (-1.994098994892, 385.950319888107),
    (-1.995566532971, 519.209820330461),
    (-1.996547895947, 672.203713282337),
    (-1.997236251506, 844.933562589258),
    (-1.997737580575, 1037.400321137141),
    (-1.998113956789, 1249.604602697317),
    (-1.998403691213, 1481.546820465197),
];

/// Imaginary parts of the first-branch eigenvalues at `κ = 0` (all real
/// parts vanish), same parameters otherwise.
pub const BRANCH1_KAPPA0_IM: &[f64] = &[
    1.977769422237490,
    17.17785509550124,
    51.66110267249202,
    105.9108740392157,
    179.9122139474343,
    273.6596870066489,
    387.1503623988257,
    520.3827402340040,
    673.3559807368758,
];

/// Second-branch analogue of [`BRANCH1_KAPPA0_IM`].
pub const BRANCH2_KAPPA0_IM: &[f64] = &[
    10.76926095591549,
    40.47011405043285,
    89.84383777346076,
    158.9432646718895,
    247.7767462271978,
    356.3469684216317,
    484.6550310749103,
    632.7014666573784,
];

/// Reference parameters with the vertex damping removed.
pub fn params_kappa0() -> Params {
    Params { kappa: 0.0, ..Params::reference() }
}
