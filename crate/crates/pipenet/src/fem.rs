//! Semi-discrete model: Hermite-cubic finite elements on the three edges,
//! sharing one displacement value at the vertex and dropping the pinned
//! values at the outer ends.
//!
//! The weak form of the pipe equation reads, for every admissible test
//! profile `phi`,
//!
//! ```text
//! sum_k [ (d2w/dt2, phi) + 2*beta*eta*(dw'/dt, phi) ]
//!   + 3*beta*eta*(dw/dt)(0) phi(0) + kappa sum_k (dw_k'/dt)(0) phi_k'(0)
//!   + sum_k [ (w'', phi'') + q (w', phi') ] + alpha sum_k w_k'(0) phi_k'(0) = 0
//! ```
//!
//! where the vertex terms absorb the force-balance and moment conditions.
//! Collecting coefficients gives the matrix system `M w'' + G w' + K w = 0`
//! with symmetric positive-definite `M`, symmetric positive-definite `K`
//! equal to the displacement part of the energy form, and a damping matrix
//! `G` whose symmetric part is exactly `kappa` times the boundary-slope
//! dyads; quadrature is exact for every entry, so the identity
//! `G + G^T = 2*kappa*sum_k d_k d_k^T` holds to rounding.
//!
//! Time stepping uses the trapezoidal rule on the first-order system in
//! `(w, v)`.  The update conserves the discrete energy `w^T K w + v^T M v`
//! exactly when `kappa = 0` and dissipates `2*kappa*sum_k v_k'(0)^2` per
//! unit time otherwise, mirroring the continuous balance law.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{EdgeGrid, NetworkState, Params};

/// Fourth-order Gauss-Legendre nodes on the unit interval, exact through
/// degree seven; the stiffest integrand here (mass products of cubics) has
/// degree six.
const GAUSS_XI: [f64; 4] = [
    0.069_431_844_202_973_72,
    0.330_009_478_207_571_87,
    0.669_990_521_792_428_1,
    0.930_568_155_797_026_3,
];
const GAUSS_W: [f64; 4] = [
    0.173_927_422_568_726_93,
    0.326_072_577_431_273_1,
    0.326_072_577_431_273_1,
    0.173_927_422_568_726_93,
];

/// Number of aligned sample points per element used when exchanging data
/// with [`NetworkState`] grids: a grid fits a space iff
/// `n_points == SAMPLES_PER_ELEM * n_elems + 1`.
pub const SAMPLES_PER_ELEM: usize = 4;

/// Kind of nodal unknown carried by a Hermite element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofKind {
    Value,
    Slope,
}

/// Degree-of-freedom layout for the three-edge network.
///
/// Index 0 is the displacement value shared by all edges at the vertex.
/// Each edge then owns a contiguous block of `2 * n_elems` unknowns: the
/// vertex slope, value/slope pairs at the interior nodes, and the slope at
/// the pinned end (whose value is eliminated).  Total size `6 * n_elems + 1`.
#[derive(Debug, Clone, Copy)]
pub struct FemSpace {
    pub n_elems: usize,
    pub n_dof: usize,
    /// Element length, `1 / n_elems`.
    pub h: f64,
}

impl FemSpace {
    pub fn new(n_elems: usize) -> Result<Self> {
        if n_elems < 4 {
            return Err(Error::GridTooCoarse { got: n_elems, min: 4 });
        }
        Ok(Self { n_elems, n_dof: 6 * n_elems + 1, h: 1.0 / n_elems as f64 })
    }

    /// Global index of the unknown at `node` of `edge`, or `None` for the
    /// eliminated pinned value at the outer end.
    pub fn dof(&self, edge: usize, node: usize, kind: DofKind) -> Option<usize> {
        assert!(edge < 3 && node <= self.n_elems);
        let base = 1 + edge * 2 * self.n_elems;
        match (node, kind) {
            (0, DofKind::Value) => Some(0),
            (0, DofKind::Slope) => Some(base),
            (n, DofKind::Value) if n == self.n_elems => None,
            (n, DofKind::Slope) if n == self.n_elems => Some(base + 2 * self.n_elems - 1),
            (j, DofKind::Value) => Some(base + 2 * j - 1),
            (j, DofKind::Slope) => Some(base + 2 * j),
        }
    }

    /// Local-to-global map for element `e` of `edge`, ordered as
    /// (left value, left slope, right value, right slope).
    fn element_dofs(&self, edge: usize, e: usize) -> [Option<usize>; 4] {
        [
            self.dof(edge, e, DofKind::Value),
            self.dof(edge, e, DofKind::Slope),
            self.dof(edge, e + 1, DofKind::Value),
            self.dof(edge, e + 1, DofKind::Slope),
        ]
    }

    /// Grid whose nodes line up with the quartic sampling of this space.
    pub fn aligned_grid(&self) -> Result<EdgeGrid> {
        EdgeGrid::new(SAMPLES_PER_ELEM * self.n_elems + 1)
    }
}

/// Hermite shape functions on an element of length `h`, evaluated at the
/// local coordinate `xi` in `[0, 1]`; returns values and first and second
/// derivatives with respect to arclength.
fn hermite_shapes(xi: f64, h: f64) -> ([f64; 4], [f64; 4], [f64; 4]) {
    let x2 = xi * xi;
    let x3 = x2 * xi;
    let n = [
        1.0 - 3.0 * x2 + 2.0 * x3,
        h * (xi - 2.0 * x2 + x3),
        3.0 * x2 - 2.0 * x3,
        h * (x3 - x2),
    ];
    let d1 = [
        (6.0 * x2 - 6.0 * xi) / h,
        1.0 - 4.0 * xi + 3.0 * x2,
        (6.0 * xi - 6.0 * x2) / h,
        3.0 * x2 - 2.0 * xi,
    ];
    let d2 = [
        (12.0 * xi - 6.0) / h.powi(2),
        (6.0 * xi - 4.0) / h,
        (6.0 - 12.0 * xi) / h.powi(2),
        (6.0 * xi - 2.0) / h,
    ];
    (n, d1, d2)
}

/// Degree-four Lagrange basis on the equispaced nodes `{0, 1, 2, 3, 4}`,
/// with first and second derivatives in the node coordinate.
fn lagrange5(u: f64) -> ([f64; 5], [f64; 5], [f64; 5]) {
    let mut val = [0.0; 5];
    let mut d1 = [0.0; 5];
    let mut d2 = [0.0; 5];
    for j in 0..5 {
        let mut denom = 1.0;
        for m in 0..5 {
            if m != j {
                denom *= j as f64 - m as f64;
            }
        }
        let mut v = 1.0;
        for m in 0..5 {
            if m != j {
                v *= u - m as f64;
            }
        }
        val[j] = v / denom;
        let mut s1 = 0.0;
        for m in 0..5 {
            if m == j {
                continue;
            }
            let mut prod = 1.0;
            for l in 0..5 {
                if l != j && l != m {
                    prod *= u - l as f64;
                }
            }
            s1 += prod;
        }
        d1[j] = s1 / denom;
        // Ordered pairs of dropped factors; each unordered pair appears
        // twice, matching the second derivative of the product.
        let mut s2 = 0.0;
        for m in 0..5 {
            if m == j {
                continue;
            }
            for l in 0..5 {
                if l == j || l == m {
                    continue;
                }
                let mut prod = 1.0;
                for r in 0..5 {
                    if r != j && r != m && r != l {
                        prod *= u - r as f64;
                    }
                }
                s2 += prod;
            }
        }
        d2[j] = s2 / denom;
    }
    (val, d1, d2)
}

/// Assembled matrices of `M w'' + G w' + K w = 0` together with the layout
/// that gives their rows meaning.
#[derive(Debug, Clone)]
pub struct SemiDiscreteSystem {
    pub space: FemSpace,
    pub params: Params,
    /// Mass matrix; symmetric positive definite.
    pub m: DMatrix<f64>,
    /// Stiffness matrix, equal to the displacement part of the energy form;
    /// symmetric positive definite for positive tension.
    pub k: DMatrix<f64>,
    /// Gyroscopic-plus-damping matrix; `G + G^T` equals twice the feedback
    /// dyads, so it is skew-symmetric exactly when `kappa = 0`.
    pub g: DMatrix<f64>,
}

impl SemiDiscreteSystem {
    /// Discrete energy `w^T K w + v^T M v` of a DOF pair.
    pub fn energy(&self, w: &DVector<f64>, v: &DVector<f64>) -> f64 {
        w.dot(&(&self.k * w)) + v.dot(&(&self.m * v))
    }

    /// Global indices of the three vertex-slope unknowns.
    pub fn slope_dofs(&self) -> [usize; 3] {
        [0, 1, 2].map(|edge| self.space.dof(edge, 0, DofKind::Slope).unwrap())
    }
}

/// Builds mass, stiffness, and damping matrices for `n_elems` elements per
/// edge.  Fails for fewer than four elements or out-of-range parameters.
pub fn assemble(p: &Params, n_elems: usize) -> Result<SemiDiscreteSystem> {
    let p = p.validated()?;
    let space = FemSpace::new(n_elems)?;
    let q = p.tension();
    let h = space.h;
    let nd = space.n_dof;
    let mut m = DMatrix::<f64>::zeros(nd, nd);
    let mut k = DMatrix::<f64>::zeros(nd, nd);
    let mut g = DMatrix::<f64>::zeros(nd, nd);

    // Element matrices are identical across edges and elements; integrate
    // once and scatter.
    let mut me = [[0.0; 4]; 4];
    let mut ke = [[0.0; 4]; 4];
    let mut ce = [[0.0; 4]; 4];
    for gp in 0..4 {
        let (n, d1, d2) = hermite_shapes(GAUSS_XI[gp], h);
        let wgt = GAUSS_W[gp] * h;
        for a in 0..4 {
            for b in 0..4 {
                me[a][b] += wgt * n[a] * n[b];
                ke[a][b] += wgt * (d2[a] * d2[b] + q * d1[a] * d1[b]);
                // Convection pairs the trial derivative with the test value.
                ce[a][b] += wgt * n[a] * d1[b];
            }
        }
    }

    let two_be = 2.0 * p.beta * p.eta;
    for edge in 0..3 {
        for e in 0..space.n_elems {
            let dofs = space.element_dofs(edge, e);
            for (a, &row) in dofs.iter().enumerate() {
                let Some(i) = row else { continue };
                for (b, &col) in dofs.iter().enumerate() {
                    let Some(j) = col else { continue };
                    m[(i, j)] += me[a][b];
                    k[(i, j)] += ke[a][b];
                    g[(i, j)] += two_be * ce[a][b];
                }
            }
        }
    }

    // Vertex closure: the force balance contributes one velocity-value dyad
    // per edge, the moment condition one slope dyad per edge.
    g[(0, 0)] += 3.0 * p.beta * p.eta;
    for edge in 0..3 {
        let d = space.dof(edge, 0, DofKind::Slope).unwrap();
        g[(d, d)] += p.kappa;
        k[(d, d)] += p.alpha;
    }

    Ok(SemiDiscreteSystem { space, params: p, m, k, g })
}

/// Projects a network state onto the element space, `K`-orthogonally for
/// the displacement and `M`-orthogonally for the velocity, so the result
/// is the energy-nearest discrete state.
///
/// Only the real parts of the samples enter; project real and imaginary
/// parts separately to embed a complex profile.  The state's grid must have
/// exactly four sample intervals per element, so that load integrals can
/// interpolate the samples with a local quartic without leaving the
/// element.
pub fn project_state(
    sys: &SemiDiscreteSystem,
    x: &NetworkState,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let space = sys.space;
    let expected = SAMPLES_PER_ELEM * space.n_elems + 1;
    if x.grid.n_points != expected {
        return Err(Error::GridMismatch);
    }
    let q = sys.params.tension();
    let h = space.h;
    // Sample spacing inside an element, in units of the grid step.
    let gauss: Vec<([f64; 5], [f64; 5], [f64; 5])> = GAUSS_XI
        .iter()
        .map(|&xi| lagrange5(SAMPLES_PER_ELEM as f64 * xi))
        .collect();
    let hs = x.grid.h;

    let mut b_k = DVector::<f64>::zeros(space.n_dof);
    let mut b_m = DVector::<f64>::zeros(space.n_dof);
    let (_, slope_basis, _) = lagrange5(0.0);
    for edge in 0..3 {
        let wk = &x.w[edge];
        let vk = &x.v[edge];
        for e in 0..space.n_elems {
            let base = SAMPLES_PER_ELEM * e;
            let dofs = space.element_dofs(edge, e);
            for gp in 0..4 {
                let (nh, d1h, d2h) = hermite_shapes(GAUSS_XI[gp], h);
                let (lv, l1, l2) = &gauss[gp];
                let mut der_w = 0.0;
                let mut dd_w = 0.0;
                let mut val_v = 0.0;
                for j in 0..5 {
                    let fw = wk[base + j].re;
                    der_w += fw * l1[j] / hs;
                    dd_w += fw * l2[j] / (hs * hs);
                    val_v += vk[base + j].re * lv[j];
                }
                let wgt = GAUSS_W[gp] * h;
                for (a, &row) in dofs.iter().enumerate() {
                    let Some(i) = row else { continue };
                    b_k[i] += wgt * (dd_w * d2h[a] + q * der_w * d1h[a]);
                    b_m[i] += wgt * val_v * nh[a];
                }
            }
        }
        // Feedback dyad in the energy form: alpha * w'(0) against the
        // vertex-slope basis function, whose slope at the vertex is one.
        let mut slope0 = 0.0;
        for j in 0..5 {
            slope0 += wk[j].re * slope_basis[j] / hs;
        }
        let d = space.dof(edge, 0, DofKind::Slope).unwrap();
        b_k[d] += sys.params.alpha * slope0;
    }

    let chol_k = sys
        .k
        .clone()
        .cholesky()
        .ok_or(Error::SingularSystem("stiffness projection"))?;
    let chol_m = sys
        .m
        .clone()
        .cholesky()
        .ok_or(Error::SingularSystem("mass projection"))?;
    Ok((chol_k.solve(&b_k), chol_m.solve(&b_m)))
}

/// Evaluates a DOF pair on the aligned grid and packages it as a network
/// state; the shared vertex unknown and the eliminated pinned values make
/// the vertex checks exact.
pub fn state_from_dofs(
    space: &FemSpace,
    w: &DVector<f64>,
    v: &DVector<f64>,
) -> Result<NetworkState> {
    if w.len() != space.n_dof || v.len() != space.n_dof {
        return Err(Error::ShapeMismatch { got: w.len().min(v.len()), expected: space.n_dof });
    }
    let grid = space.aligned_grid()?;
    let n_pts = grid.n_points;
    let mut w_out: [Vec<Complex64>; 3] = std::array::from_fn(|_| vec![Complex64::ZERO; n_pts]);
    let mut v_out = w_out.clone();
    for edge in 0..3 {
        for e in 0..space.n_elems {
            let dofs = space.element_dofs(edge, e);
            let wd = dofs.map(|d| d.map_or(0.0, |i| w[i]));
            let vd = dofs.map(|d| d.map_or(0.0, |i| v[i]));
            for t in 0..=SAMPLES_PER_ELEM {
                let xi = t as f64 / SAMPLES_PER_ELEM as f64;
                let (n, _, _) = hermite_shapes(xi, space.h);
                let mut val_w = 0.0;
                let mut val_v = 0.0;
                for a in 0..4 {
                    val_w += wd[a] * n[a];
                    val_v += vd[a] * n[a];
                }
                let idx = SAMPLES_PER_ELEM * e + t;
                w_out[edge][idx] = Complex64::new(val_w, 0.0);
                v_out[edge][idx] = Complex64::new(val_v, 0.0);
            }
        }
    }
    NetworkState::new(grid, w_out, v_out)
}

/// Time history produced by [`simulate`].
///
/// Scalar series (`energy`, `vertex`, `boundary_obs`) are recorded at every
/// step; full states only at `snapshot_indices` to keep long runs cheap.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Discrete energy `w^T K w + v^T M v` per step.
    pub energy: Vec<f64>,
    /// Vertex displacement per step.
    pub vertex: Vec<f64>,
    /// Vertex velocity slopes `v_k'(0)`, one triple per step; these drive
    /// the feedback and hence the energy dissipation.
    pub boundary_obs: Vec<[f64; 3]>,
    pub states: Vec<NetworkState>,
    /// Positions of `states` within `times`.
    pub snapshot_indices: Vec<usize>,
}

/// Integrates `M w'' + G w' + K w = 0` with the trapezoidal rule at fixed
/// step `dt` from the projection of `x0`, up to the first step boundary at
/// or past `t_final`.
///
/// One LU factorisation of `M + dt/2 G + dt^2/4 K` is reused for all steps.
/// The scheme is unconditionally stable and, for `kappa = 0`, conserves the
/// discrete energy identically.
pub fn simulate(
    sys: &SemiDiscreteSystem,
    x0: &NetworkState,
    t_final: f64,
    dt: f64,
) -> Result<Trajectory> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidArgument("dt must be positive and finite"));
    }
    if !(t_final.is_finite() && t_final >= dt) {
        return Err(Error::InvalidArgument("t_final must be finite and at least one step"));
    }
    let n_steps = (t_final / dt - 1e-9).ceil().max(1.0) as usize;

    let (mut w, mut v) = project_state(sys, x0)?;
    let half = 0.5 * dt;
    let quarter = 0.25 * dt * dt;
    let a_mat = &sys.m + &sys.g * half + &sys.k * quarter;
    let b_mat = &sys.m - &sys.g * half - &sys.k * quarter;
    let lu = a_mat.lu();

    let slope_dofs = sys.slope_dofs();
    let stride = (n_steps / 128).max(1);
    let mut traj = Trajectory {
        times: Vec::with_capacity(n_steps + 1),
        energy: Vec::with_capacity(n_steps + 1),
        vertex: Vec::with_capacity(n_steps + 1),
        boundary_obs: Vec::with_capacity(n_steps + 1),
        states: Vec::new(),
        snapshot_indices: Vec::new(),
    };

    for step in 0..=n_steps {
        let kw = &sys.k * &w;
        traj.times.push(step as f64 * dt);
        traj.energy.push(w.dot(&kw) + v.dot(&(&sys.m * &v)));
        traj.vertex.push(w[0]);
        traj.boundary_obs.push(slope_dofs.map(|d| v[d]));
        if step % stride == 0 || step == n_steps {
            traj.states.push(state_from_dofs(&sys.space, &w, &v)?);
            traj.snapshot_indices.push(step);
        }
        if step == n_steps {
            break;
        }
        let rhs = &b_mat * &v - kw * dt;
        let v_next = lu.solve(&rhs).ok_or(Error::SingularSystem("trapezoidal step"))?;
        w += (&v + &v_next) * half;
        v = v_next;
    }
    Ok(traj)
}

/// Defect of the discrete energy balance,
/// `r(t) = dE/dt + 2*kappa*sum_k v_k'(0)^2`,
/// with `dE/dt` from second-order differences of the recorded energies.
/// The exact balance makes this zero for the continuous flow, so the
/// series measures pure time-discretisation error.
pub fn dissipation_residual(traj: &Trajectory, p: &Params) -> Result<Vec<f64>> {
    let n = traj.times.len();
    if n < 3 {
        return Err(Error::InvalidArgument("need at least three samples to difference"));
    }
    let dt = traj.times[1] - traj.times[0];
    let e = &traj.energy;
    let mut residual = Vec::with_capacity(n);
    for i in 0..n {
        let de = if i == 0 {
            (-3.0 * e[0] + 4.0 * e[1] - e[2]) / (2.0 * dt)
        } else if i == n - 1 {
            (3.0 * e[n - 1] - 4.0 * e[n - 2] + e[n - 3]) / (2.0 * dt)
        } else {
            (e[i + 1] - e[i - 1]) / (2.0 * dt)
        };
        let obs = traj.boundary_obs[i];
        let dissipated: f64 = obs.iter().map(|o| o * o).sum();
        residual.push(de + 2.0 * p.kappa * dissipated);
    }
    Ok(residual)
}

/// Eigenvalues of the quadratic pencil `lambda^2 M + lambda G + K`, from
/// the real companion linearisation, sorted by imaginary part.  They
/// approximate the low generator spectrum at second order in the mesh
/// width and serve as a cross-check on the shooting solver.
pub fn pencil_eigenvalues(sys: &SemiDiscreteSystem) -> Result<Vec<Complex64>> {
    let n = sys.space.n_dof;
    let chol = sys
        .m
        .clone()
        .cholesky()
        .ok_or(Error::SingularSystem("mass factorisation"))?;
    let mk = chol.solve(&sys.k);
    let mg = chol.solve(&sys.g);
    let mut big = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        big[(i, n + i)] = 1.0;
        for j in 0..n {
            big[(n + i, j)] = -mk[(i, j)];
            big[(n + i, n + j)] = -mg[(i, j)];
        }
    }
    let mut eigs: Vec<Complex64> = big.complex_eigenvalues().iter().copied().collect();
    eigs.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap().then(a.re.partial_cmp(&b.re).unwrap()));
    Ok(eigs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dof_map_is_a_bijection_onto_the_index_range() {
        let space = FemSpace::new(5).unwrap();
        let mut seen = Vec::new();
        let mut pinned = 0;
        for edge in 0..3 {
            for node in 0..=space.n_elems {
                for kind in [DofKind::Value, DofKind::Slope] {
                    match space.dof(edge, node, kind) {
                        Some(i) => seen.push((edge, node, kind, i)),
                        None => pinned += 1,
                    }
                }
            }
        }
        assert_eq!(pinned, 3);
        let mut indices: Vec<usize> = seen.iter().map(|t| t.3).collect();
        indices.sort_unstable();
        indices.dedup();
        // The vertex value is shared by the three edges.
        assert_eq!(indices.len(), space.n_dof);
        assert_eq!(indices, (0..space.n_dof).collect::<Vec<_>>());
        assert_eq!(space.dof(0, 0, DofKind::Value), space.dof(2, 0, DofKind::Value));
    }

    #[test]
    fn hermite_shapes_reproduce_cubics() {
        let h = 0.37;
        for &xi in &[0.0, 0.21, 0.5, 0.78, 1.0] {
            let (n, d1, d2) = hermite_shapes(xi, h);
            // Constant profile: values one, slopes zero.
            let c = n[0] + n[2];
            assert!((c - 1.0).abs() < 1e-14);
            assert!((d1[0] + d1[2]).abs() < 1e-13);
            // Linear profile x: left (0, 1), right (h, 1).
            let x = n[1] + h * n[2] + n[3];
            assert!((x - xi * h).abs() < 1e-14);
            let dx = d1[1] + h * d1[2] + d1[3];
            assert!((dx - 1.0).abs() < 1e-13);
            let ddx = d2[1] + h * d2[2] + d2[3];
            assert!(ddx.abs() < 1e-12 / h);
        }
    }

    #[test]
    fn lagrange_quartic_differentiates_polynomials() {
        // Samples of u^3 at the five nodes.
        let f: Vec<f64> = (0..5).map(|j| (j as f64).powi(3)).collect();
        for &u in &[0.0, 0.8, 2.3, 3.9] {
            let (lv, l1, l2) = lagrange5(u);
            let p: f64 = (0..5).map(|j| f[j] * lv[j]).sum();
            let dp: f64 = (0..5).map(|j| f[j] * l1[j]).sum();
            let ddp: f64 = (0..5).map(|j| f[j] * l2[j]).sum();
            assert!((p - u.powi(3)).abs() < 1e-11);
            assert!((dp - 3.0 * u * u).abs() < 1e-11);
            assert!((ddp - 6.0 * u).abs() < 1e-10);
        }
    }

    #[test]
    fn damping_matrix_symmetric_part_is_the_feedback_dyad() {
        let p = Params::reference();
        let sys = assemble(&p, 6).unwrap();
        let sym = &sys.g + sys.g.transpose();
        for i in 0..sys.space.n_dof {
            for j in 0..sys.space.n_dof {
                let expected = if i == j && sys.slope_dofs().contains(&i) {
                    2.0 * p.kappa
                } else {
                    0.0
                };
                assert!(
                    (sym[(i, j)] - expected).abs() < 1e-12,
                    "entry ({i}, {j}) = {}",
                    sym[(i, j)]
                );
            }
        }
    }
}
