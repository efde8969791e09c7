//! Shared numerical kernels: finite-difference differentiation on uniform
//! grids, Simpson-type quadrature (definite and cumulative), an adaptive
//! Runge–Kutta 5(4) integrator for small constant-coefficient complex linear
//! systems, complex Hermitian Jacobi eigensolves, a one-sided Jacobi SVD for
//! rank probes, a quartic root solver, complex Newton iteration, and a
//! winding-number counter.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Finite-difference weights on arbitrary nodes (Fornberg's recursion).
///
/// Returns `weights[d][j]`: the coefficient of `f(nodes[j])` in the
/// approximation of the `d`-th derivative at `x0`, for `d = 0..=max_order`.
pub fn fd_weights(nodes: &[f64], x0: f64, max_order: usize) -> Vec<Vec<f64>> {
    let n = nodes.len();
    assert!(n > max_order, "need more nodes than the derivative order");
    let mut c = vec![vec![0.0; n]; max_order + 1];
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(max_order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Differentiates grid values to 4th-order accuracy (orders 1 and 2) or with a
/// 9-point moving window (order 3 and 4; 4th-order accurate in the interior,
/// lower reliability within four nodes of either end due to roundoff in the
/// one-sided stencils).
pub fn derivative(values: &[Complex64], h: f64, order: usize) -> Vec<Complex64> {
    assert!((1..=4).contains(&order));
    let width = match order {
        1 => 5,
        2 => 6,
        _ => 9,
    };
    let n = values.len();
    assert!(n >= width, "grid too short for the stencil");
    let offsets: Vec<f64> = (0..width).map(|j| j as f64 * h).collect();
    // One weight row per possible position of the evaluation node in the window.
    let tables: Vec<Vec<f64>> = (0..width)
        .map(|pos| fd_weights(&offsets, pos as f64 * h, order).swap_remove(order))
        .collect();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..n {
        let start = i.saturating_sub(width / 2).min(n - width);
        let weights = &tables[i - start];
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..width {
            acc += weights[j] * values[start + j];
        }
        out[i] = acc;
    }
    out
}

/// Composite Simpson weights for `n` uniformly spaced values (spacing `h`).
///
/// With an odd interval count the final three intervals use the 3/8 rule, so
/// any `n >= 4` integrates at 4th order.
pub fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    assert!(n >= 4, "quadrature needs at least 4 nodes");
    let mut w = vec![0.0; n];
    let intervals = n - 1;
    let simpson_end = if intervals % 2 == 0 { n - 1 } else { n - 4 };
    let mut i = 0;
    while i + 2 <= simpson_end {
        w[i] += h / 3.0;
        w[i + 1] += 4.0 * h / 3.0;
        w[i + 2] += h / 3.0;
        i += 2;
    }
    if intervals % 2 != 0 {
        let c = 3.0 * h / 8.0;
        w[n - 4] += c;
        w[n - 3] += 3.0 * c;
        w[n - 2] += 3.0 * c;
        w[n - 1] += c;
    }
    w
}

/// Definite integral of complex grid values by composite Simpson quadrature.
pub fn integrate(values: &[Complex64], h: f64) -> Complex64 {
    let w = simpson_weights(values.len(), h);
    values
        .iter()
        .zip(&w)
        .fold(Complex64::new(0.0, 0.0), |acc, (v, wi)| acc + wi * v)
}

/// Definite integral of real grid values by composite Simpson quadrature.
pub fn integrate_real(values: &[f64], h: f64) -> f64 {
    let w = simpson_weights(values.len(), h);
    values.iter().zip(&w).map(|(v, wi)| v * wi).sum()
}

/// Cumulative integral from the left end: `out[i] = ∫_{s_0}^{s_i} f`.
///
/// Interior intervals are integrated with a quintic through the six
/// neighbouring nodes; the two panels at each end use seven nodes with the
/// extra freedom spent matching the interior rule's h⁷ error constant
/// exactly. The accumulated error is then a smooth O(h⁶) function of
/// position with no endpoint defect, so downstream finite differences of any
/// order converge at their own rate; a boundary panel with a mismatched
/// constant would surface as O(h³) boundary error in a fourth derivative.
pub fn cumulative_integral(values: &[Complex64], h: f64) -> Vec<Complex64> {
    let n = values.len();
    assert!(n >= 7, "cumulative quadrature needs at least 7 nodes");
    let f = values;
    let c = h / 1440.0;
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..n - 1 {
        let panel = if i == 0 {
            c * (459.0 * f[0] + 1523.0 * f[1] - 1038.0 * f[2] + 802.0 * f[3] - 413.0 * f[4]
                + 123.0 * f[5]
                - 16.0 * f[6])
        } else if i == 1 {
            c * (-16.0 * f[0] + 571.0 * f[1] + 1187.0 * f[2] - 478.0 * f[3] + 242.0 * f[4]
                - 77.0 * f[5]
                + 11.0 * f[6])
        } else if i + 3 <= n - 1 {
            c * (11.0 * f[i - 2] - 93.0 * f[i - 1] + 802.0 * f[i] + 802.0 * f[i + 1]
                - 93.0 * f[i + 2]
                + 11.0 * f[i + 3])
        } else if i == n - 3 {
            c * (11.0 * f[n - 7] - 77.0 * f[n - 6] + 242.0 * f[n - 5] - 478.0 * f[n - 4]
                + 1187.0 * f[n - 3]
                + 571.0 * f[n - 2]
                - 16.0 * f[n - 1])
        } else {
            c * (-16.0 * f[n - 7] + 123.0 * f[n - 6] - 413.0 * f[n - 5] + 802.0 * f[n - 4]
                - 1038.0 * f[n - 3]
                + 1523.0 * f[n - 2]
                + 459.0 * f[n - 1])
        };
        out[i + 1] = out[i] + panel;
    }
    out
}

/// Cumulative integral toward the right end: `out[i] = ∫_{s_i}^{s_{n-1}} f`.
pub fn cumulative_integral_from_right(values: &[Complex64], h: f64) -> Vec<Complex64> {
    let reversed: Vec<Complex64> = values.iter().rev().copied().collect();
    let mut cum = cumulative_integral(&reversed, h);
    cum.reverse();
    cum
}

/// State of the 4-dimensional first-order system: four solution columns, each
/// holding derivative orders 0..=3. Indexed `[column][order]`.
pub type FundamentalColumns = [[Complex64; 4]; 4];

/// Companion matrix of `u'''' = row · (u, u', u'', u''')`; the integrator
/// advances all four columns through the same steps.
#[derive(Debug, Clone, Copy)]
pub struct CompanionSystem {
    /// Coefficients `(a0, a1, a2)` in `u'''' = a0·u + a1·u' + a2·u''`.
    pub row: [Complex64; 3],
}

impl CompanionSystem {
    #[inline]
    fn rhs(&self, u: &FundamentalColumns) -> FundamentalColumns {
        let mut out = [[Complex64::new(0.0, 0.0); 4]; 4];
        for (col, ucol) in out.iter_mut().zip(u.iter()) {
            col[0] = ucol[1];
            col[1] = ucol[2];
            col[2] = ucol[3];
            col[3] = self.row[0] * ucol[0] + self.row[1] * ucol[1] + self.row[2] * ucol[2];
        }
        out
    }
}

/// Tolerances and step limits for the adaptive integrator.
#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub h_max: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-11, abs_tol: 1e-13, h_max: 0.05, h_min: 1e-12, max_steps: 2_000_000 }
    }
}

// Dormand–Prince 5(4) tableau.
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] =
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B5: [f64; 6] =
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn axpy_columns(y: &mut FundamentalColumns, a: f64, x: &FundamentalColumns) {
    for (yc, xc) in y.iter_mut().zip(x.iter()) {
        for (ye, xe) in yc.iter_mut().zip(xc.iter()) {
            *ye += a * xe;
        }
    }
}

/// Integrates `u' = companion(u)` from `output_nodes[0]` through the last
/// node with an adaptive Runge–Kutta 5(4) scheme, recording the state at
/// every output node. `output_nodes` must be strictly increasing.
pub fn integrate_linear_system(
    system: &CompanionSystem,
    u0: FundamentalColumns,
    output_nodes: &[f64],
    opts: &OdeOptions,
) -> Result<Vec<FundamentalColumns>> {
    assert!(output_nodes.len() >= 2, "need at least the two endpoints");
    let mut out = Vec::with_capacity(output_nodes.len());
    out.push(u0);
    let mut s = output_nodes[0];
    let mut u = u0;
    let mut h = opts.h_max.min((output_nodes[output_nodes.len() - 1] - s) / 4.0);
    let mut k1 = system.rhs(&u);
    let mut steps = 0usize;
    let mut next_output = 1usize;

    while next_output < output_nodes.len() {
        if steps > opts.max_steps {
            return Err(Error::TooManySteps);
        }
        steps += 1;
        let target = output_nodes[next_output];
        // Cap the step to land on the next output node exactly.
        let capped = target - s <= h;
        let h_eff = h.min(target - s);

        let mut stage = u;
        axpy_columns(&mut stage, h_eff * A2[0], &k1);
        let k2 = system.rhs(&stage);

        stage = u;
        axpy_columns(&mut stage, h_eff * A3[0], &k1);
        axpy_columns(&mut stage, h_eff * A3[1], &k2);
        let k3 = system.rhs(&stage);

        stage = u;
        axpy_columns(&mut stage, h_eff * A4[0], &k1);
        axpy_columns(&mut stage, h_eff * A4[1], &k2);
        axpy_columns(&mut stage, h_eff * A4[2], &k3);
        let k4 = system.rhs(&stage);

        stage = u;
        axpy_columns(&mut stage, h_eff * A5[0], &k1);
        axpy_columns(&mut stage, h_eff * A5[1], &k2);
        axpy_columns(&mut stage, h_eff * A5[2], &k3);
        axpy_columns(&mut stage, h_eff * A5[3], &k4);
        let k5 = system.rhs(&stage);

        stage = u;
        axpy_columns(&mut stage, h_eff * A6[0], &k1);
        axpy_columns(&mut stage, h_eff * A6[1], &k2);
        axpy_columns(&mut stage, h_eff * A6[2], &k3);
        axpy_columns(&mut stage, h_eff * A6[3], &k4);
        axpy_columns(&mut stage, h_eff * A6[4], &k5);
        let k6 = system.rhs(&stage);

        let mut u_new = u;
        axpy_columns(&mut u_new, h_eff * B5[0], &k1);
        axpy_columns(&mut u_new, h_eff * B5[2], &k3);
        axpy_columns(&mut u_new, h_eff * B5[3], &k4);
        axpy_columns(&mut u_new, h_eff * B5[4], &k5);
        axpy_columns(&mut u_new, h_eff * B5[5], &k6);
        let k7 = system.rhs(&u_new);

        // Embedded 4th-order comparison for the local error estimate.
        let mut err = 0.0f64;
        let ks = [&k1, &k2, &k3, &k4, &k5, &k6, &k7];
        for col in 0..4 {
            for m in 0..4 {
                let mut e = Complex64::new(0.0, 0.0);
                for (i, k) in ks.iter().enumerate() {
                    let db = if i < 6 { B5[i] - B4[i] } else { -B4[6] };
                    e += h_eff * db * k[col][m];
                }
                let scale = opts.abs_tol
                    + opts.rel_tol * u[col][m].norm().max(u_new[col][m].norm());
                err = err.max(e.norm() / scale);
            }
        }

        let factor = if err > 0.0 { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) } else { 5.0 };
        if err <= 1.0 {
            s += h_eff;
            u = u_new;
            k1 = k7;
            if (s - target).abs() < 1e-14 * (1.0 + target.abs()) {
                s = target;
                out.push(u);
                next_output += 1;
            }
            // An output-capped step says nothing about the nominal step size.
            h = if capped { h.max((h_eff * factor).min(opts.h_max)) } else { (h_eff * factor).min(opts.h_max) };
        } else {
            h = h_eff * factor;
            if h < opts.h_min {
                return Err(Error::StepSizeUnderflow { s });
            }
        }
    }
    Ok(out)
}

/// Eigendecomposition of a complex Hermitian matrix by cyclic Jacobi
/// rotations. Returns eigenvalues in ascending order with matching
/// eigenvectors as columns.
pub fn hermitian_eigen(matrix: &[Vec<Complex64>]) -> (Vec<f64>, Vec<Vec<Complex64>>) {
    let n = matrix.len();
    let mut a: Vec<Vec<Complex64>> = matrix.to_vec();
    let mut vecs = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for (i, row) in vecs.iter_mut().enumerate() {
        row[i] = Complex64::new(1.0, 0.0);
    }
    let frob: f64 = a
        .iter()
        .flat_map(|row| row.iter())
        .map(|z| z.norm_sqr())
        .sum::<f64>()
        .sqrt();
    let stop = (1e-15 * frob.max(1e-300)).powi(2);

    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a[p][q].norm_sqr();
            }
        }
        if off <= stop * n as f64 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq.norm() <= 1e-300 {
                    continue;
                }
                let phase = apq / apq.norm();
                let app = a[p][p].re;
                let aqq = a[q][q].re;
                let tau = (aqq - app) / (2.0 * apq.norm());
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sv = t * c;
                // Columns transform by G = [[c, s·phase], [-s·conj(phase), c]]
                // applied as A <- G^H A G; this annihilates a[p][q].
                for i in 0..n {
                    let aip = a[i][p];
                    let aiq = a[i][q];
                    a[i][p] = c * aip - sv * phase.conj() * aiq;
                    a[i][q] = sv * phase * aip + c * aiq;
                }
                for j in 0..n {
                    let apj = a[p][j];
                    let aqj = a[q][j];
                    a[p][j] = c * apj - sv * phase * aqj;
                    a[q][j] = sv * phase.conj() * apj + c * aqj;
                }
                for i in 0..n {
                    let vip = vecs[i][p];
                    let viq = vecs[i][q];
                    vecs[i][p] = c * vip - sv * phase.conj() * viq;
                    vecs[i][q] = sv * phase * vip + c * viq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i][i].re.partial_cmp(&a[j][j].re).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| a[i][i].re).collect();
    let mut columns = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for (new_idx, &old_idx) in order.iter().enumerate() {
        for i in 0..n {
            columns[new_idx][i] = vecs[i][old_idx];
        }
    }
    (values, columns)
}

/// Smallest singular value of a square complex matrix and the matching right
/// singular vector, via the Hermitian eigenproblem of `A^H A`.
pub fn min_singular_pair(a: &[Vec<Complex64>]) -> (f64, Vec<Complex64>) {
    let n = a.len();
    let mut gram = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for (i, gram_row) in gram.iter_mut().enumerate() {
        for (j, entry) in gram_row.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for row in a {
                acc += row[i].conj() * row[j];
            }
            *entry = acc;
        }
    }
    let (values, vectors) = hermitian_eigen(&gram);
    (values[0].max(0.0).sqrt(), vectors[0].clone())
}

/// Singular values of a tall real matrix given by its columns, via one-sided
/// Jacobi orthogonalization. Suited to rank probes with few columns; returns
/// the values in descending order.
pub fn singular_values_columns(columns: &[Vec<f64>]) -> Vec<f64> {
    let mut cols: Vec<Vec<f64>> = columns.to_vec();
    let nc = cols.len();
    for _sweep in 0..60 {
        let mut rotated = false;
        for i in 0..nc {
            for j in i + 1..nc {
                let (mut aii, mut ajj, mut aij) = (0.0, 0.0, 0.0);
                for r in 0..cols[i].len() {
                    aii += cols[i][r] * cols[i][r];
                    ajj += cols[j][r] * cols[j][r];
                    aij += cols[i][r] * cols[j][r];
                }
                if aij.abs() <= 1e-30 + 1e-16 * (aii * ajj).sqrt() {
                    continue;
                }
                let theta = 0.5 * (2.0 * aij).atan2(aii - ajj);
                let (c, s) = (theta.cos(), theta.sin());
                for r in 0..cols[i].len() {
                    let ci = cols[i][r];
                    let cj = cols[j][r];
                    cols[i][r] = c * ci + s * cj;
                    cols[j][r] = -s * ci + c * cj;
                }
                rotated = true;
            }
        }
        if !rotated {
            break;
        }
    }
    let mut values: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    values.sort_by(|a, b| b.partial_cmp(a).unwrap());
    values
}

/// Determinant of a small complex matrix by LU with partial pivoting.
pub fn determinant(matrix: &[Vec<Complex64>]) -> Complex64 {
    let n = matrix.len();
    let mut a = matrix.to_vec();
    let mut det = Complex64::new(1.0, 0.0);
    for k in 0..n {
        let pivot = (k..n)
            .max_by(|&i, &j| a[i][k].norm().partial_cmp(&a[j][k].norm()).unwrap())
            .unwrap();
        if a[pivot][k].norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if pivot != k {
            a.swap(pivot, k);
            det = -det;
        }
        det *= a[k][k];
        for i in k + 1..n {
            let factor = a[i][k] / a[k][k];
            for j in k..n {
                let akj = a[k][j];
                a[i][j] -= factor * akj;
            }
        }
    }
    det
}

/// Solves a small complex linear system by LU with partial pivoting.
pub fn solve_linear(matrix: &[Vec<Complex64>], rhs: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = matrix.len();
    let mut a = matrix.to_vec();
    let mut b = rhs.to_vec();
    for k in 0..n {
        let pivot = (k..n)
            .max_by(|&i, &j| a[i][k].norm().partial_cmp(&a[j][k].norm()).unwrap())
            .unwrap();
        if a[pivot][k].norm() < 1e-300 {
            return Err(Error::SingularSystem("solve_linear"));
        }
        a.swap(pivot, k);
        b.swap(pivot, k);
        for i in k + 1..n {
            let factor = a[i][k] / a[k][k];
            for j in k..n {
                let akj = a[k][j];
                a[i][j] -= factor * akj;
            }
            let bk = b[k];
            b[i] -= factor * bk;
        }
    }
    for k in (0..n).rev() {
        let mut acc = b[k];
        for j in k + 1..n {
            acc -= a[k][j] * b[j];
        }
        b[k] = acc / a[k][k];
    }
    Ok(b)
}

/// All four roots of a quartic with complex coefficients.
///
/// `coeffs[k]` multiplies `z^(4−k)`; the leading coefficient must be nonzero.
/// Durand–Kerner iteration from a deterministic circular start (radius from
/// the Cauchy bound, fixed angular offset so the start never straddles a
/// symmetric root pattern) converges simultaneously to all roots; each is
/// then finished with a few Newton steps on the exact polynomial. Root order
/// is unspecified, and clustered roots come back to reduced accuracy rather
/// than as an error, so callers sensitive to degeneracy must check pairwise
/// separations themselves.
pub fn quartic_roots(coeffs: &[Complex64; 5]) -> [Complex64; 4] {
    assert!(coeffs[0].norm() > 0.0, "leading coefficient must be nonzero");
    let monic: [Complex64; 4] = std::array::from_fn(|k| coeffs[k + 1] / coeffs[0]);
    let eval = |z: Complex64| -> (Complex64, Complex64) {
        let mut value = Complex64::new(1.0, 0.0);
        let mut slope = Complex64::new(0.0, 0.0);
        for c in &monic {
            slope = slope * z + value;
            value = value * z + *c;
        }
        (value, slope)
    };
    let radius = 1.0 + monic.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut z: [Complex64; 4] = std::array::from_fn(|k| {
        Complex64::from_polar(radius, 0.4 + std::f64::consts::FRAC_PI_2 * k as f64)
    });
    for _ in 0..64 {
        let mut widest = 0.0f64;
        for k in 0..4 {
            let (value, _) = eval(z[k]);
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..4 {
                if j != k {
                    denom *= z[k] - z[j];
                }
            }
            if denom.norm() == 0.0 {
                continue;
            }
            let step = value / denom;
            z[k] -= step;
            widest = widest.max(step.norm() / (1.0 + z[k].norm()));
        }
        if widest < 1e-14 {
            break;
        }
    }
    for root in &mut z {
        for _ in 0..3 {
            let (value, slope) = eval(*root);
            if slope.norm() > 0.0 {
                let step = value / slope;
                if step.norm() < 0.5 * (1.0 + root.norm()) {
                    *root -= step;
                }
            }
        }
    }
    z
}

/// Outcome of a complex Newton/secant iteration.
#[derive(Debug, Clone, Copy)]
pub struct RootResult {
    pub z: Complex64,
    pub f_abs: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Options for `newton_complex`.
#[derive(Debug, Clone, Copy)]
pub struct RootOptions {
    /// Stop when `|f| <= tol_f`.
    pub tol_f: f64,
    /// Stop when the update is below `tol_step · (1 + |z|)`.
    pub tol_step: f64,
    pub max_iterations: usize,
    /// Relative real offset for the central-difference derivative.
    pub fd_step: f64,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self { tol_f: 1e-13, tol_step: 1e-13, max_iterations: 30, fd_step: 1e-7 }
    }
}

/// Newton iteration on a scalar complex function with a central-difference
/// derivative, falling back to a secant update when the derivative estimate
/// degenerates, and damping steps that fail to reduce `|f|`.
pub fn newton_complex<F>(f: &mut F, z0: Complex64, opts: &RootOptions) -> Result<RootResult>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    let mut z = z0;
    let mut fz = f(z)?;
    let mut prev: Option<(Complex64, Complex64)> = None;
    for iter in 0..opts.max_iterations {
        if fz.norm() <= opts.tol_f {
            return Ok(RootResult { z, f_abs: fz.norm(), iterations: iter, converged: true });
        }
        let d = opts.fd_step * (1.0 + z.norm());
        let fp = f(z + d)?;
        let fm = f(z - d)?;
        let mut deriv = (fp - fm) / (2.0 * d);
        if deriv.norm() < 1e-300 {
            if let Some((zp, fzp)) = prev {
                deriv = (fz - fzp) / (z - zp);
            }
            if deriv.norm() < 1e-300 {
                return Err(Error::Nonconvergence("vanishing derivative in Newton".into()));
            }
        }
        let mut step = fz / deriv;
        let mut z_new = z - step;
        let mut f_new = f(z_new)?;
        let mut halvings = 0;
        while f_new.norm() > fz.norm() && halvings < 5 {
            step *= 0.5;
            z_new = z - step;
            f_new = f(z_new)?;
            halvings += 1;
        }
        prev = Some((z, fz));
        let dz = (z_new - z).norm();
        z = z_new;
        fz = f_new;
        if dz <= opts.tol_step * (1.0 + z.norm()) {
            return Ok(RootResult {
                z,
                f_abs: fz.norm(),
                iterations: iter + 1,
                converged: fz.norm() <= opts.tol_f.sqrt(),
            });
        }
    }
    Ok(RootResult { z, f_abs: fz.norm(), iterations: opts.max_iterations, converged: false })
}

/// Axis-aligned rectangle in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxRegion {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl BoxRegion {
    pub fn contains(&self, z: Complex64) -> bool {
        self.re_min <= z.re && z.re <= self.re_max && self.im_min <= z.im && z.im <= self.im_max
    }

    pub fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.re_min, self.im_min),
            Complex64::new(self.re_max, self.im_min),
            Complex64::new(self.re_max, self.im_max),
            Complex64::new(self.re_min, self.im_max),
        ]
    }
}

/// Counts zeros of an analytic function inside a rectangle by accumulating
/// the boundary phase change. Each boundary segment is bisected until the
/// phase increment is below π/2; evaluations too close to a zero (or a
/// non-integral total) are rejected rather than guessed.
///
/// Endpoint sampling alone cannot tell a phase increment of `ε` from one of
/// `2π + ε`, so a full turn hides whenever two zeros straddle a single
/// sampled segment. `max_segment` caps the initial boundary spacing; choose
/// it below half the minimum zero separation of the function at hand (one
/// zero near a segment contributes less than `π`, which the bisection test
/// does detect) and pass `f64::INFINITY` when corner spacing is already
/// that fine.
pub fn winding_number<F>(
    f: &mut F,
    region: BoxRegion,
    max_evals: usize,
    max_segment: f64,
) -> Result<i64>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    const FLOOR: f64 = 1e-13;
    let corners = region.corners();
    let diameter = (region.re_max - region.re_min).hypot(region.im_max - region.im_min);
    let mut points: Vec<Complex64> = Vec::new();
    for seg in 0..4 {
        let a = corners[seg];
        let b = corners[(seg + 1) % 4];
        let pieces = if max_segment.is_finite() {
            ((b - a).norm() / max_segment).ceil().max(1.0) as usize
        } else {
            1
        };
        for t in 0..pieces {
            points.push(a + (b - a) * (t as f64 / pieces as f64));
        }
    }
    let mut evals = 0usize;
    let mut values = Vec::with_capacity(points.len());
    for z in &points {
        let value = f(*z)?;
        evals += 1;
        if value.norm() < FLOOR {
            return Err(Error::BoundaryTooClose);
        }
        values.push(value);
    }

    let mut total_phase = 0.0f64;
    for i in 0..points.len() {
        // Stack of subsegments with both endpoint values known; LIFO order
        // keeps traversal in order, though order does not affect the sum.
        let j = (i + 1) % points.len();
        let mut stack = vec![(points[i], values[i], points[j], values[j])];
        while let Some((z0, f0, z1, f1)) = stack.pop() {
            let dphi = (f1 / f0).arg();
            if dphi.abs() < std::f64::consts::FRAC_PI_2 {
                total_phase += dphi;
                continue;
            }
            if (z1 - z0).norm() < 1e-9 * diameter {
                return Err(Error::BoundaryTooClose);
            }
            if evals >= max_evals {
                return Err(Error::Nonconvergence("winding subdivision budget exhausted".into()));
            }
            let mid = 0.5 * (z0 + z1);
            let fm = f(mid)?;
            evals += 1;
            if fm.norm() < FLOOR {
                return Err(Error::BoundaryTooClose);
            }
            stack.push((mid, fm, z1, f1));
            stack.push((z0, f0, mid, fm));
        }
    }
    let turns = total_phase / std::f64::consts::TAU;
    let rounded = turns.round();
    if (turns - rounded).abs() > 0.25 {
        return Err(Error::NonIntegralWinding(turns));
    }
    Ok(rounded as i64)
}
