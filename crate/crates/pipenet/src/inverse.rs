//! Closed-form application of the inverse generator.
//!
//! Solving `T x = y` for `x = (w, v)` splits into an exact copy `v_k = w̃_k`
//! and, per edge, a second-order problem
//!
//! ```text
//! w_k'' − q w_k = −f_k (1−s) + N_k(s),      q = γ − η²,
//! ```
//!
//! obtained by integrating the fourth-order balance twice from the pinned
//! end, where `N_k` collects double integrals of the data only (never a
//! derivative of it) and `f_k = w_k'''(1) − q w_k'(1)` is an unknown constant
//! per edge. The general solution pinned at `s = 1` is
//!
//! ```text
//! w_k = c_k φ₁ + f_k φ₂ + P[N_k],
//! φ₁ = sinh(√q (1−s)),
//! φ₂ = (1−s)/q − sinh(√q (1−s))/(q √q),
//! ```
//!
//! with `P` the particular solution vanishing to first order at the pinned
//! end. The seven constants `c_k, f_k, w0` follow from vertex continuity,
//! the three feedback moment conditions, and the closure `Σ_k f_k = 0`,
//! which is the three-edge force balance in this bookkeeping.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{EdgeGrid, NetworkState, Params};
use crate::numerics;

/// Intermediate quantities of one inverse application.
///
/// `vtilde` and `wtilde` are the double-integral data profiles per edge; the
/// combination `N_k = −(Ṽ_k + W̃_k)` drives the edge problems. The closure
/// `Σ_k f_k = 0` holds by construction.
#[derive(Debug, Clone)]
pub struct InverseWork {
    pub grid: EdgeGrid,
    pub vtilde: [Vec<Complex64>; 3],
    pub wtilde: [Vec<Complex64>; 3],
    pub c: [Complex64; 3],
    pub f: [Complex64; 3],
    pub w0: Complex64,
}

/// The inverse split into its feedback-free part and the feedback response.
///
/// `base` solves the same problem with the vertex feedback channel removed,
/// and `s_part` is the exact difference: a combination of `φ₁, φ₂` on each
/// edge with zero velocity component, driven only by the three data slopes
/// at the vertex.
#[derive(Debug, Clone)]
pub struct InverseSplit {
    pub base: NetworkState,
    pub s_part: NetworkState,
}

struct EdgeProblem {
    /// `N_k` on the grid.
    data: Vec<Complex64>,
    /// Particular solution `P[N_k]` on the grid.
    particular: Vec<Complex64>,
    /// `P[N_k]'(0)`.
    particular_slope0: Complex64,
    /// Data slope `w̃_k'(0)` entering the feedback moment condition.
    slope0: Complex64,
    vtilde: Vec<Complex64>,
    wtilde: Vec<Complex64>,
}

/// Homogeneous basis values at the vertex for tension `q`.
struct VertexBasis {
    phi1_0: f64,
    phi1_slope0: f64,
    phi2_0: f64,
    phi2_slope0: f64,
}

fn vertex_basis(q: f64) -> VertexBasis {
    let rq = q.sqrt();
    VertexBasis {
        phi1_0: rq.sinh(),
        phi1_slope0: -rq * rq.cosh(),
        phi2_0: 1.0 / q - rq.sinh() / (q * rq),
        phi2_slope0: -1.0 / q + rq.cosh() / q,
    }
}

fn edge_problem(w: &[Complex64], v: &[Complex64], grid: &EdgeGrid, p: &Params) -> EdgeProblem {
    let h = grid.h;
    let n = grid.n_points;
    let q = p.tension();
    let rq = q.sqrt();
    let be = p.beta * p.eta;
    let w_vertex = w[0];

    // Ṽ_k(s) = −∫_s^1 dt ∫_0^t ṽ_k, W̃_k(s) = −2βη ∫_s^1 w̃_k + βη w̃(0)(1−s).
    let inner = numerics::cumulative_integral(v, h);
    let outer = numerics::cumulative_integral_from_right(&inner, h);
    let vtilde: Vec<Complex64> = outer.iter().map(|z| -z).collect();
    let wtail = numerics::cumulative_integral_from_right(w, h);
    let wtilde: Vec<Complex64> = (0..n)
        .map(|i| -2.0 * be * wtail[i] + be * w_vertex * (1.0 - grid.nodes[i]))
        .collect();
    let data: Vec<Complex64> = (0..n).map(|i| -(vtilde[i] + wtilde[i])).collect();

    // P[N](s) = (1/√q) ∫_s^1 sinh(√q (t−s)) N(t) dt, expanded through the
    // addition formula so two right-cumulative integrals suffice.
    let sinh_n: Vec<Complex64> =
        (0..n).map(|i| (rq * grid.nodes[i]).sinh() * data[i]).collect();
    let cosh_n: Vec<Complex64> =
        (0..n).map(|i| (rq * grid.nodes[i]).cosh() * data[i]).collect();
    let tail_sinh = numerics::cumulative_integral_from_right(&sinh_n, h);
    let tail_cosh = numerics::cumulative_integral_from_right(&cosh_n, h);
    let particular: Vec<Complex64> = (0..n)
        .map(|i| {
            let s = grid.nodes[i];
            ((rq * s).cosh() * tail_sinh[i] - (rq * s).sinh() * tail_cosh[i]) / rq
        })
        .collect();
    let particular_slope0 = -tail_cosh[0];
    let slope0 = numerics::derivative(w, h, 1)[0];

    EdgeProblem { data, particular, particular_slope0, slope0, vtilde, wtilde }
}

/// Solves the seven vertex constants for given per-edge right-hand sides of
/// the continuity rows (`w_k(0) − w0 = rhs_a`) and moment rows.
fn vertex_solve(
    p: &Params,
    basis: &VertexBasis,
    rhs_a: &[Complex64; 3],
    rhs_b: &[Complex64; 3],
) -> Result<([Complex64; 3], [Complex64; 3], Complex64)> {
    let q = p.tension();
    // Shared 2×2 block: rows are continuity and the feedback moment
    // condition, columns are (c_k, f_k).
    let m = [
        [
            Complex64::new(basis.phi1_0, 0.0),
            Complex64::new(basis.phi2_0, 0.0),
        ],
        [
            Complex64::new(-p.alpha * basis.phi1_slope0, 0.0),
            Complex64::new(-(1.0 + p.alpha * basis.phi2_slope0), 0.0),
        ],
    ];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det.norm() < 1e-14 {
        return Err(Error::SingularSystem("vertex block is singular"));
    }
    let solve2 = |b0: Complex64, b1: Complex64| -> (Complex64, Complex64) {
        ((b0 * m[1][1] - b1 * m[0][1]) / det, (m[0][0] * b1 - m[1][0] * b0) / det)
    };

    // Affine in the vertex value: rhs column (1, −q) multiplies w0.
    let (c_w0, f_w0) = solve2(Complex64::new(1.0, 0.0), Complex64::new(-q, 0.0));
    let mut c0 = [Complex64::new(0.0, 0.0); 3];
    let mut f0 = [Complex64::new(0.0, 0.0); 3];
    for k in 0..3 {
        let (ck, fk) = solve2(rhs_a[k], rhs_b[k]);
        c0[k] = ck;
        f0[k] = fk;
    }
    if f_w0.norm() < 1e-14 {
        return Err(Error::SingularSystem("force-balance closure does not determine the vertex value"));
    }
    let w0 = -(f0[0] + f0[1] + f0[2]) / (3.0 * f_w0);

    let mut c = [Complex64::new(0.0, 0.0); 3];
    let mut f = [Complex64::new(0.0, 0.0); 3];
    for k in 0..3 {
        c[k] = c0[k] + w0 * c_w0;
        f[k] = f0[k] + w0 * f_w0;
    }
    Ok((c, f, w0))
}

fn edge_samples(
    grid: &EdgeGrid,
    q: f64,
    c: Complex64,
    f: Complex64,
    particular: Option<&[Complex64]>,
) -> Vec<Complex64> {
    let rq = q.sqrt();
    (0..grid.n_points)
        .map(|i| {
            let one_minus = 1.0 - grid.nodes[i];
            let phi1 = (rq * one_minus).sinh();
            let phi2 = one_minus / q - (rq * one_minus).sinh() / (q * rq);
            let mut value = c * phi1 + f * phi2;
            if let Some(part) = particular {
                value += part[i];
            }
            value
        })
        .collect()
}

fn moment_rhs(edges: &[EdgeProblem; 3], p: &Params, with_feedback: bool) -> [Complex64; 3] {
    let mut rhs = [Complex64::new(0.0, 0.0); 3];
    for (k, edge) in edges.iter().enumerate() {
        rhs[k] = -edge.data[0] + p.alpha * edge.particular_slope0;
        if with_feedback {
            rhs[k] += p.kappa * edge.slope0;
        }
    }
    rhs
}

fn assemble(
    y: &NetworkState,
    p: &Params,
    edges: &[EdgeProblem; 3],
    c: &[Complex64; 3],
    f: &[Complex64; 3],
    copy_velocity: bool,
) -> Result<NetworkState> {
    let q = p.tension();
    let mut w: [Vec<Complex64>; 3] = Default::default();
    let mut v: [Vec<Complex64>; 3] = Default::default();
    for k in 0..3 {
        w[k] = edge_samples(&y.grid, q, c[k], f[k], Some(&edges[k].particular));
        v[k] = if copy_velocity {
            y.w[k].clone()
        } else {
            vec![Complex64::new(0.0, 0.0); y.grid.n_points]
        };
    }
    NetworkState::new(y.grid.clone(), w, v)
}

/// Applies the inverse generator: returns `x` with `T x = y` together with
/// the intermediate profile data.
pub fn apply_inverse(y: &NetworkState, p: &Params) -> Result<(NetworkState, InverseWork)> {
    let violations = p.validate();
    if !violations.is_empty() {
        return Err(Error::InvalidParams(violations));
    }
    let basis = vertex_basis(p.tension());
    let edges: [EdgeProblem; 3] = [
        edge_problem(&y.w[0], &y.v[0], &y.grid, p),
        edge_problem(&y.w[1], &y.v[1], &y.grid, p),
        edge_problem(&y.w[2], &y.v[2], &y.grid, p),
    ];
    let rhs_a = [
        -edges[0].particular[0],
        -edges[1].particular[0],
        -edges[2].particular[0],
    ];
    let rhs_b = moment_rhs(&edges, p, true);
    let (c, f, w0) = vertex_solve(p, &basis, &rhs_a, &rhs_b)?;
    let state = assemble(y, p, &edges, &c, &f, true)?;
    let work = InverseWork {
        grid: y.grid.clone(),
        vtilde: [
            edges[0].vtilde.clone(),
            edges[1].vtilde.clone(),
            edges[2].vtilde.clone(),
        ],
        wtilde: [
            edges[0].wtilde.clone(),
            edges[1].wtilde.clone(),
            edges[2].wtilde.clone(),
        ],
        c,
        f,
        w0,
    };
    Ok((state, work))
}

/// Splits the inverse into the feedback-free solve and the exact feedback
/// response, so that `base + s_part` equals [`apply_inverse`].
///
/// The response is built from unit-load solves of the vertex system, one per
/// edge, weighted by `κ w̃_k'(0)`; it lives in the span of `φ₁, φ₂` on every
/// edge, carries zero velocity, and is real whenever `y` is real.
pub fn split_inverse(y: &NetworkState, p: &Params) -> Result<InverseSplit> {
    let violations = p.validate();
    if !violations.is_empty() {
        return Err(Error::InvalidParams(violations));
    }
    let basis = vertex_basis(p.tension());
    let edges: [EdgeProblem; 3] = [
        edge_problem(&y.w[0], &y.v[0], &y.grid, p),
        edge_problem(&y.w[1], &y.v[1], &y.grid, p),
        edge_problem(&y.w[2], &y.v[2], &y.grid, p),
    ];
    let rhs_a = [
        -edges[0].particular[0],
        -edges[1].particular[0],
        -edges[2].particular[0],
    ];
    let rhs_b0 = moment_rhs(&edges, p, false);
    let (c_base, f_base, _) = vertex_solve(p, &basis, &rhs_a, &rhs_b0)?;
    let base = assemble(y, p, &edges, &c_base, &f_base, true)?;

    let zero_a = [Complex64::new(0.0, 0.0); 3];
    let mut c_resp = [Complex64::new(0.0, 0.0); 3];
    let mut f_resp = [Complex64::new(0.0, 0.0); 3];
    for k in 0..3 {
        let mut unit_b = [Complex64::new(0.0, 0.0); 3];
        unit_b[k] = Complex64::new(1.0, 0.0);
        let (ck, fk, _) = vertex_solve(p, &basis, &zero_a, &unit_b)?;
        let weight = p.kappa * edges[k].slope0;
        for j in 0..3 {
            c_resp[j] += weight * ck[j];
            f_resp[j] += weight * fk[j];
        }
    }
    let mut s_w: [Vec<Complex64>; 3] = Default::default();
    let s_v: [Vec<Complex64>; 3] = [
        vec![Complex64::new(0.0, 0.0); y.grid.n_points],
        vec![Complex64::new(0.0, 0.0); y.grid.n_points],
        vec![Complex64::new(0.0, 0.0); y.grid.n_points],
    ];
    for k in 0..3 {
        s_w[k] = edge_samples(&y.grid, p.tension(), c_resp[k], f_resp[k], None);
    }
    let s_part = NetworkState::new(y.grid.clone(), s_w, s_v)?;
    Ok(InverseSplit { base, s_part })
}

/// Applies the generator by finite differences: `T(w, v) = (v, −w'''' + q w''
/// − 2βη v')`. Interior nodes carry fourth-order accuracy; the one-sided
/// boundary stencils are noticeably noisier for the fourth derivative, so
/// round-trip comparisons should weigh interior nodes only.
pub fn apply_generator_fd(x: &NetworkState, p: &Params) -> Result<NetworkState> {
    let h = x.grid.h;
    let q = p.tension();
    let be2 = 2.0 * p.beta * p.eta;
    let mut w: [Vec<Complex64>; 3] = Default::default();
    let mut v: [Vec<Complex64>; 3] = Default::default();
    for k in 0..3 {
        let w4 = numerics::derivative(&x.w[k], h, 4);
        let w2 = numerics::derivative(&x.w[k], h, 2);
        let v1 = numerics::derivative(&x.v[k], h, 1);
        w[k] = x.v[k].clone();
        v[k] = (0..x.grid.n_points)
            .map(|i| -w4[i] + q * w2[i] - be2 * v1[i])
            .collect();
    }
    NetworkState::new(x.grid.clone(), w, v)
}
