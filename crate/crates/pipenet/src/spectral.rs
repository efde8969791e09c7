//! Characteristic determinants and the eigenvalue search.
//!
//! The vertex conditions reduce every eigenfunction to a single scalar
//! profile `φ` on the edge, in one of two ways:
//!
//! * [`Branch::One`]: the same profile on all three edges. The vertex moment
//!   condition and the three-edge force balance both act on `φ`.
//! * [`Branch::Two`]: edge weights summing to zero, so the force balance is
//!   automatic and the vertex value is pinned instead. Two independent weight
//!   vectors share one profile, giving geometric multiplicity two.
//!
//! Either way `φ` solves the edge ODE with four endpoint conditions, and
//! eigenvalues are the zeros of a 4×4 determinant. The matrix is built from
//! the exact exponential fundamental system, whose endpoint data hold full
//! precision at every `|ρ|`; the basis-change Vandermonde factor this
//! introduces is divided back out so the determinant's zeros are exactly the
//! canonical ones. The search polishes asymptotic seeds by Newton iteration
//! and certifies the low modes by argument-principle counts over a stack of
//! boxes, so that no root below the seeded range is silently missed.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::asymptotics;
use crate::error::{Error, Result};
use crate::model::{EdgeGrid, NetworkState, Params};
use crate::numerics::{self, BoxRegion, RootOptions};
use crate::ode::{self, FundamentalData, SpectralPoint};

/// Reduction branch of the vertex conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    /// Equal weights on all edges; simple eigenvalues.
    One,
    /// Zero-sum weights, vertex value pinned; double eigenvalues.
    Two,
}

impl Branch {
    pub const ALL: [Branch; 2] = [Branch::One, Branch::Two];

    /// Numeric tag used in tabular output.
    pub fn tag(self) -> u8 {
        match self {
            Branch::One => 1,
            Branch::Two => 2,
        }
    }

    /// Geometric multiplicity of every eigenvalue on this branch.
    pub fn geometric_multiplicity(self) -> usize {
        match self {
            Branch::One => 1,
            Branch::Two => 2,
        }
    }

    /// Order of the branch determinant's zero at an eigenvalue.
    ///
    /// The second branch carries two eigenfunctions, but they share a single
    /// edge profile and differ only in the weight vector distributing it
    /// across the edges; the 4×4 profile system loses exactly one rank
    /// dimension, so both determinants vanish to first order. Winding counts
    /// around isolated roots confirm this at the reference parameters.
    pub fn det_root_order(self) -> usize {
        1
    }

    /// Edge weight vectors multiplying the shared profile, one per
    /// independent eigenfunction.
    pub fn edge_weights(self) -> &'static [[f64; 3]] {
        match self {
            Branch::One => &[[1.0, 1.0, 1.0]],
            Branch::Two => &[[1.0, -0.5, -0.5], [0.0, 1.0, -1.0]],
        }
    }

    pub fn other(self) -> Branch {
        match self {
            Branch::One => Branch::Two,
            Branch::Two => Branch::One,
        }
    }
}

/// One eigenvalue with its profile data and eigenfunctions.
///
/// Records come in conjugate pairs: the representative with `Im λ ≥ 0`
/// carries `index = n` (position in the branch ordered by increasing
/// imaginary part, starting at 0) and its mirror carries `index = −n` with
/// conjugated data. Real eigenvalues appear once.
#[derive(Debug, Clone)]
pub struct EigenRecord {
    pub lambda: Complex64,
    pub rho: Complex64,
    pub branch: Branch,
    /// Position within the branch; negative for the conjugate mirror.
    pub index: i64,
    /// `|det|` of the normalized characteristic determinant at `lambda`.
    pub residual: f64,
    /// Set when the other branch's determinant also vanishes here; the
    /// record still belongs to the branch that produced it.
    pub degenerate: bool,
    /// Coefficients of the profile in the canonical fundamental solutions
    /// `φ_r` (those with `φ_r^{(m)}(0) = δ_{m,r−1}`), unit norm, largest
    /// entry rotated to the positive real axis.
    pub null_coeffs: [Complex64; 4],
    /// Energy-normalized eigenfunctions, one per unit of geometric
    /// multiplicity, ordered as [`Branch::edge_weights`].
    pub eigenfunctions: Vec<NetworkState>,
    /// Bilinear pairing of the profile with the matching adjoint profile,
    /// both normalized to unit `L²(0,1)`; bounded away from zero exactly
    /// when the eigenvalue admits a Riesz-basis expansion coefficient.
    pub bform: Complex64,
}

impl EigenRecord {
    /// Multiplicity of the eigenvalue as a point of the spectrum. Every
    /// eigenvalue is semisimple, so algebraic and geometric multiplicities
    /// coincide; the order of the determinant zero is a separate notion, see
    /// [`Branch::det_root_order`].
    pub fn multiplicity(&self) -> usize {
        self.branch.geometric_multiplicity()
    }
}

/// Options for [`find_eigenvalues`].
#[derive(Debug, Clone)]
pub struct SpectrumOptions {
    /// Highest asymptotic label to seed per branch.
    pub n_max: usize,
    /// Labels below this are re-certified by boundary winding counts;
    /// seeds at or above it are trusted to land in their own basin.
    pub n_low: usize,
    /// Edge grid resolution for eigenfunction sampling.
    pub grid_points: usize,
    /// Emit the `index = −n` conjugate mirrors.
    pub include_conjugates: bool,
    /// Largest acceptable determinant residual at a polished root.
    pub residual_tol: f64,
    /// Evaluation budget per winding-count call.
    pub max_winding_evals: usize,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            n_max: 12,
            n_low: 8,
            grid_points: 161,
            include_conjugates: true,
            residual_tol: 1e-8,
            max_winding_evals: 6000,
        }
    }
}

/// Characteristic matrix at the spectral point of `fd`, one column per
/// fundamental solution (in the basis and column scaling recorded by `fd`).
///
/// Rows: pinned value at 1, pinned moment at 1, vertex moment with feedback,
/// and the branch closure (three-edge force balance for [`Branch::One`],
/// vertex value for [`Branch::Two`]). For adjoint data the force-balance
/// gyroscopic term flips sign, matching the adjoint vertex conditions.
pub fn char_matrix(fd: &FundamentalData, p: &Params, branch: Branch) -> [[Complex64; 4]; 4] {
    let lambda = fd.point.lambda;
    let feedback = Complex64::new(p.alpha, 0.0) + p.kappa * lambda;
    let q = p.tension();
    let gyro_sign = if fd.adjoint { -1.0 } else { 1.0 };
    let mut m = [[Complex64::new(0.0, 0.0); 4]; 4];
    for r in 0..4 {
        m[0][r] = fd.at_one[0][r];
        m[1][r] = fd.at_one[2][r];
        m[2][r] = fd.at_zero[2][r] - feedback * fd.at_zero[1][r];
        m[3][r] = match branch {
            Branch::One => {
                fd.at_zero[3][r] - q * fd.at_zero[1][r]
                    + gyro_sign * p.beta * p.eta * lambda * fd.at_zero[0][r]
            }
            Branch::Two => fd.at_zero[0][r],
        };
    }
    m
}

fn equilibrate_rows(m: &[[Complex64; 4]; 4]) -> Result<Vec<Vec<Complex64>>> {
    let mut rows = Vec::with_capacity(4);
    for row in m {
        let max = row.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        if max == 0.0 {
            return Err(Error::SingularSystem("characteristic matrix row vanished"));
        }
        rows.push(row.iter().map(|z| z / max).collect());
    }
    Ok(rows)
}

/// Determinant of the row-equilibrated characteristic matrix built from
/// existing fundamental data.
///
/// Exponential-basis data differ from canonical data by the Vandermonde
/// matrix of the exponents, so their raw determinant carries the factor
/// `Π_{i<j}(μ_j − μ_i)`, which vanishes on the discriminant set of the
/// characteristic quartic with no spectral meaning. Multiplying by
/// `(1 + |μ_i − μ_j|)/(μ_i − μ_j)` over all pairs divides that factor out
/// (the ratio is invariant under root reordering) and keeps the modulus
/// `O(1)`, leaving the canonical determinant times positive factors.
pub fn char_det_from(fd: &FundamentalData, p: &Params, branch: Branch) -> Result<Complex64> {
    let rows = equilibrate_rows(&char_matrix(fd, p, branch))?;
    let mut det = numerics::determinant(&rows);
    if let Some(mus) = fd.exponents {
        for i in 0..4 {
            for j in i + 1..4 {
                let diff = mus[i] - mus[j];
                det = det * (1.0 + diff.norm()) / diff;
            }
        }
    }
    Ok(det)
}

/// Normalized characteristic determinant at `sp`.
///
/// Row equilibration, the per-column scaling, and the basis normalization
/// change the raw determinant by positive factors only, so zeros, their
/// orders, and all boundary phase increments are those of the determinant
/// built from the canonical fundamental solutions.
pub fn char_det(sp: &SpectralPoint, p: &Params, branch: Branch) -> Result<Complex64> {
    let fd = ode::modal_fundamental_system(sp, p, false, None)?;
    char_det_from(&fd, p, branch)
}

/// Consecutive same-branch determinant zeros are at least `π²(2n + 3/2)`
/// apart in `Im λ`, and conjugate mirrors near the real axis clear the box
/// edges by the jittered margins, so boundary samples four units apart
/// leave at most one zero's phase swing per segment and the argument
/// principle cannot drop a hidden turn.
const MAX_BOUNDARY_SEGMENT: f64 = 4.0;

/// Number of characteristic roots (with order) inside a rectangle of the
/// `λ` plane, by the argument principle over its boundary.
pub fn count_roots_in_box(
    p: &Params,
    branch: Branch,
    region: BoxRegion,
    max_evals: usize,
) -> Result<i64> {
    let mut f = |lambda: Complex64| char_det(&SpectralPoint::from_lambda(lambda), p, branch);
    numerics::winding_number(&mut f, region, max_evals, MAX_BOUNDARY_SEGMENT)
}

fn det3(m: &[[Complex64; 3]; 3]) -> Complex64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Null vector of a 3×4 system by Laplace cofactors: component `r` is
/// `(−1)^r` times the minor obtained by deleting column `r`. Annihilates all
/// three rows identically, so the essential conditions hold to roundoff.
fn cofactor_null(rows: &[Vec<Complex64>; 3]) -> [Complex64; 4] {
    let mut out = [Complex64::new(0.0, 0.0); 4];
    for (r, entry) in out.iter_mut().enumerate() {
        let mut minor = [[Complex64::new(0.0, 0.0); 3]; 3];
        for i in 0..3 {
            let mut c = 0;
            for j in 0..4 {
                if j == r {
                    continue;
                }
                minor[i][c] = rows[i][j];
                c += 1;
            }
        }
        let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
        *entry = sign * det3(&minor);
    }
    out
}

/// Coefficient description of the profile at an eigenvalue.
#[derive(Debug, Clone, Copy)]
pub struct ProfileCoefficients {
    /// Coefficients in the columns of the fundamental data that produced
    /// them; feed to [`ode::sample_solution`] with that same data.
    pub basis: [Complex64; 4],
    /// The same profile by its canonical coefficients, which are its initial
    /// values `(φ(0), φ′(0), φ″(0), φ‴(0))`: unit norm, largest entry
    /// rotated to the positive real axis. Independent of the basis of the
    /// data, up to roundoff.
    pub canonical: [Complex64; 4],
    /// Relative residual of the dynamic row on the null direction.
    pub residual: f64,
}

/// Profile coefficients at an eigenvalue, with the essential endpoint rows
/// satisfied exactly.
///
/// The pinned rows (and, on [`Branch::Two`], the vertex-value row) are
/// enforced through a cofactor null vector, so the sampled profile lies in
/// the state space to roundoff; the remaining dynamic row's relative
/// residual is returned alongside and is small exactly when `fd.point` is an
/// eigenvalue. The gauge is chosen so that the profile sampled from `basis`
/// has initial values equal to `canonical`.
pub fn eigen_profile(
    fd: &FundamentalData,
    p: &Params,
    branch: Branch,
) -> Result<ProfileCoefficients> {
    let m = char_matrix(fd, p, branch);
    // Essential rows pin the state-space conditions; the dynamic row is the
    // one whose residual measures eigenvalue quality.
    let (essential, dynamic): ([usize; 3], usize) = match branch {
        Branch::One => ([0, 1, 2], 3),
        Branch::Two => ([0, 1, 3], 2),
    };
    let mut rows: [Vec<Complex64>; 3] = [vec![], vec![], vec![]];
    for (slot, &i) in rows.iter_mut().zip(essential.iter()) {
        let max = m[i].iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        if max == 0.0 {
            return Err(Error::SingularSystem("essential row vanished"));
        }
        *slot = m[i].iter().map(|z| z / max).collect();
    }
    // Column equilibration keeps the cofactor minors well scaled when the
    // fundamental columns differ by orders of magnitude at large |ρ|; a
    // positive diagonal rescaling maps the null vector back exactly.
    let mut col_max = [0.0f64; 4];
    for row in &rows {
        for (scale, entry) in col_max.iter_mut().zip(row.iter()) {
            *scale = scale.max(entry.norm());
        }
    }
    for scale in &mut col_max {
        if *scale == 0.0 {
            *scale = 1.0;
        }
    }
    for row in &mut rows {
        for (entry, &scale) in row.iter_mut().zip(col_max.iter()) {
            *entry /= scale;
        }
    }
    let a = cofactor_null(&rows);
    let norm_a = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm_a < 1e-12 {
        return Err(Error::Nonconvergence(
            "essential endpoint rows are rank-deficient; profile direction undetermined".into(),
        ));
    }

    let dyn_row: Vec<Complex64> =
        m[dynamic].iter().zip(col_max.iter()).map(|(z, &scale)| z / scale).collect();
    let dyn_max = dyn_row.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
    let dyn_dot: Complex64 = dyn_row.iter().zip(a.iter()).map(|(r, c)| r * c).sum();
    let residual = dyn_dot.norm() / (dyn_max * norm_a);

    // `at_zero · diag(scale)` is the true initial-value matrix of the
    // columns whatever the basis, so mapping the null vector through the
    // scaled initial data gives the canonical coefficients directly, without
    // forming any large de-normalized intermediate. One shared gauge keeps
    // `basis` and `canonical` describing the identical profile.
    let mut canonical = [Complex64::new(0.0, 0.0); 4];
    for (m_order, slot) in canonical.iter_mut().enumerate() {
        *slot = (0..4).map(|j| fd.at_zero[m_order][j] * (a[j] / col_max[j])).sum();
    }
    let norm_c = canonical.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm_c < 1e-300 {
        return Err(Error::Nonconvergence(
            "profile has vanishing initial data; null direction lost to cancellation".into(),
        ));
    }
    let lead = (0..4)
        .max_by(|&i, &j| canonical[i].norm().partial_cmp(&canonical[j].norm()).unwrap())
        .unwrap();
    let gauge = (canonical[lead] / canonical[lead].norm()) * norm_c;
    for entry in &mut canonical {
        *entry = *entry / gauge;
    }
    let mut basis = [Complex64::new(0.0, 0.0); 4];
    for r in 0..4 {
        basis[r] = a[r] / (col_max[r] * fd.scale[r] * gauge);
    }
    Ok(ProfileCoefficients { basis, canonical, residual })
}

const POLISH_OPTIONS: RootOptions =
    RootOptions { tol_f: 1e-9, tol_step: 1e-12, max_iterations: 40, fd_step: 1e-7 };

/// Polishes one root of the branch determinant, working in the `ρ` variable.
/// For `κ = 0` the spectrum lies on the imaginary `λ` axis, so a converged
/// root within noise of the real `ρ` axis is snapped onto it when that does
/// not degrade the residual.
fn polish_root(p: &Params, branch: Branch, seed: Complex64) -> Result<(Complex64, f64, bool)> {
    let mut f = |rho: Complex64| char_det(&SpectralPoint::from_rho(rho), p, branch);
    let result = numerics::newton_complex(&mut f, seed, &POLISH_OPTIONS)?;
    let mut rho = result.z;
    let mut f_abs = result.f_abs;
    if p.kappa == 0.0 && rho.im.abs() <= 1e-6 * (1.0 + rho.norm()) && rho.im != 0.0 {
        let snapped = Complex64::new(rho.re, 0.0);
        let f_snapped = f(snapped)?.norm();
        if f_snapped <= f_abs.max(1e-8) {
            rho = snapped;
            f_abs = f_snapped;
        }
    }
    let lambda = SpectralPoint::from_rho(rho).lambda;
    Ok((lambda, f_abs, result.converged))
}

/// Reflects a polished eigenvalue to its `Im λ ≥ 0` representative, snapping
/// noise-level imaginary parts to the real axis.
fn upper_half_representative(lambda: Complex64) -> Complex64 {
    if lambda.im.abs() <= 1e-9 * (1.0 + lambda.norm()) {
        Complex64::new(lambda.re, 0.0)
    } else if lambda.im < 0.0 {
        lambda.conj()
    } else {
        lambda
    }
}

fn rho_close(a: Complex64, b: Complex64) -> bool {
    let ra = SpectralPoint::from_lambda(a).rho;
    let rb = SpectralPoint::from_lambda(b).rho;
    (ra - rb).norm() <= 1e-6 * (1.0 + ra.norm())
}

/// Contour failures worth retrying with a perturbed box: a root sitting on
/// (or a degenerate-exponent point touching) the boundary moves off it under
/// a small shift, so these are geometry problems, not analysis problems.
fn retryable_contour(e: &Error) -> bool {
    matches!(
        e,
        Error::BoundaryTooClose | Error::NonIntegralWinding(_) | Error::SingularSystem(_)
    )
}

/// Order of the determinant zero at an isolated root, by winding a small box
/// around it.
fn det_order(p: &Params, branch: Branch, root: Complex64, max_evals: usize) -> Result<i64> {
    let base = 1e-3 * (1.0 + root.norm());
    for factor in [1.0, 2.3, 0.41, 5.1] {
        let h = base * factor;
        let region = BoxRegion {
            re_min: root.re - h,
            re_max: root.re + h,
            im_min: root.im - h,
            im_max: root.im + h,
        };
        match count_roots_in_box(p, branch, region, max_evals) {
            Ok(w) if w >= 1 => return Ok(w),
            Ok(_) => continue,
            Err(e) if retryable_contour(&e) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Nonconvergence("determinant order probe failed to enclose the root".into()))
}

fn roots_inside(region: &BoxRegion, roots: &[(Complex64, f64)]) -> i64 {
    let mut count = 0i64;
    for &(root, _) in roots {
        if region.contains(root) {
            count += 1;
        }
        if root.im > 0.0 && region.contains(root.conj()) {
            count += 1;
        }
    }
    count
}

/// Finds every root the winding count says is missing from `region`,
/// bisecting until Newton from the center picks each one up.
fn isolate_missing(
    p: &Params,
    branch: Branch,
    order: i64,
    region: BoxRegion,
    roots: &mut Vec<(Complex64, f64)>,
    max_evals: usize,
    depth: usize,
) -> Result<()> {
    let winding = count_roots_in_box(p, branch, region, max_evals)?;
    let known = order * roots_inside(&region, roots);
    if winding == known {
        return Ok(());
    }
    if winding < known {
        return Err(Error::Nonconvergence(format!(
            "winding count {winding} below the {known} already located in the box"
        )));
    }
    let center =
        Complex64::new(0.5 * (region.re_min + region.re_max), 0.5 * (region.im_min + region.im_max));
    if let Ok((lambda, f_abs, converged)) = polish_root(p, branch, SpectralPoint::from_lambda(center).rho) {
        let rep = upper_half_representative(lambda);
        let inside = region.contains(lambda) || region.contains(rep) || region.contains(rep.conj());
        if converged && inside && !roots.iter().any(|&(r, _)| rho_close(r, rep)) {
            roots.push((rep, f_abs));
            if order * roots_inside(&region, roots) == winding {
                return Ok(());
            }
        }
    }
    if depth == 0 {
        return Err(Error::Nonconvergence("root isolation depth exhausted".into()));
    }
    let tall = region.im_max - region.im_min >= region.re_max - region.re_min;
    for frac in [0.5, 0.43, 0.61, 0.36] {
        let (first, second) = if tall {
            let cut = region.im_min + frac * (region.im_max - region.im_min);
            (
                BoxRegion { im_max: cut, ..region },
                BoxRegion { im_min: cut, ..region },
            )
        } else {
            let cut = region.re_min + frac * (region.re_max - region.re_min);
            (
                BoxRegion { re_max: cut, ..region },
                BoxRegion { re_min: cut, ..region },
            )
        };
        let attempt = isolate_missing(p, branch, order, first, roots, max_evals, depth - 1)
            .and_then(|()| isolate_missing(p, branch, order, second, roots, max_evals, depth - 1));
        match attempt {
            Ok(()) => return Ok(()),
            Err(e) if retryable_contour(&e) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::BoundaryTooClose)
}

/// All `Im λ ≥ 0` roots of one branch determinant with imaginary part below
/// the certified ceiling, sorted by increasing imaginary part, paired with
/// their determinant residuals.
fn branch_roots(
    p: &Params,
    branch: Branch,
    opts: &SpectrumOptions,
) -> Result<Vec<(Complex64, f64)>> {
    let polished: Vec<Option<(Complex64, f64)>> = (0..=opts.n_max)
        .into_par_iter()
        .map(|n| -> Result<Option<(Complex64, f64)>> {
            let seed = asymptotics::rho_seed(n, branch, p);
            match polish_root(p, branch, seed) {
                Ok((lambda, f_abs, converged)) => {
                    if converged && f_abs <= opts.residual_tol {
                        Ok(Some((upper_half_representative(lambda), f_abs)))
                    } else if n >= opts.n_low {
                        Err(Error::Nonconvergence(format!(
                            "seed {n} failed to polish: residual {f_abs:.3e}"
                        )))
                    } else {
                        Ok(None)
                    }
                }
                Err(e) if n < opts.n_low => {
                    let _ = e;
                    Ok(None)
                }
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;

    let mut roots: Vec<(Complex64, f64)> = Vec::new();
    for entry in polished.into_iter().flatten() {
        match roots.iter_mut().find(|(r, _)| rho_close(*r, entry.0)) {
            Some(existing) => {
                if entry.1 < existing.1 {
                    *existing = entry;
                }
            }
            None => roots.push(entry),
        }
    }

    // Certify the low range: every root with imaginary part below the
    // midpoint between the last untrusted and first trusted asymptotic
    // levels must be accounted for by winding counts.
    let n_trust = opts.n_low.min(opts.n_max + 1);
    if n_trust >= 1 {
        let im_at = |n: usize| asymptotics::asymptotic_eigenvalue(n, branch, p).value.im;
        let top = 0.5 * (im_at(n_trust - 1) + im_at(n_trust));
        // Zeros of one branch determinant share their order (simple in every
        // regime observed; the probe guards parameter corners), so one root
        // calibrates the winding-to-root conversion for the whole stack. The
        // lowest root is the cheapest to ring.
        let order = match roots.iter().min_by(|a, b| a.0.im.partial_cmp(&b.0.im).unwrap()) {
            Some(&(root, _)) => det_order(p, branch, root, opts.max_winding_evals)?,
            None => 1,
        };
        let re_min = if p.kappa > 0.0 { -(2.0 / p.kappa + 8.0) } else { -8.0 };
        let re_max = 0.5;
        let height = std::f64::consts::TAU * p.gamma.sqrt().max(10.0);
        let bottom = -2.0;
        let mut certified = false;
        'attempt: for shift in [0.0, 0.31, 0.57, 0.83] {
            let mut cuts = vec![bottom];
            let mut y = height * (1.0 - shift);
            while y < top - 0.25 * height {
                if y > bottom + 0.25 * height {
                    cuts.push(y);
                }
                y += height;
            }
            cuts.push(top);
            let boxes: Vec<BoxRegion> = cuts
                .windows(2)
                .map(|w| BoxRegion { re_min, re_max, im_min: w[0], im_max: w[1] })
                .collect();
            let counts: Vec<Result<i64>> = boxes
                .par_iter()
                .map(|region| count_roots_in_box(p, branch, *region, opts.max_winding_evals))
                .collect();
            let mut mismatched = Vec::new();
            for (region, count) in boxes.iter().zip(counts) {
                match count {
                    Ok(w) => {
                        if w != order * roots_inside(region, &roots) {
                            mismatched.push(*region);
                        }
                    }
                    Err(e) if retryable_contour(&e) => continue 'attempt,
                    Err(e) => return Err(e),
                }
            }
            for region in mismatched {
                isolate_missing(p, branch, order, region, &mut roots, opts.max_winding_evals, 24)?;
            }
            certified = true;
            break;
        }
        if !certified {
            return Err(Error::BoundaryTooClose);
        }
    }

    roots.retain(|&(_, f_abs)| f_abs <= opts.residual_tol);
    roots.sort_by(|a, b| a.0.im.partial_cmp(&b.0.im).unwrap());
    Ok(roots)
}

fn normalize_energy(state: NetworkState, p: &Params) -> Result<NetworkState> {
    let norm_sq = crate::model::energy_norm_squared(&state, p)?;
    if !(norm_sq > 0.0) {
        return Err(Error::Nonconvergence("eigenfunction has nonpositive energy norm".into()));
    }
    Ok(state.scaled(Complex64::new(1.0 / norm_sq.sqrt(), 0.0)))
}

fn unit_l2(samples: &mut [Vec<Complex64>; 4], h: f64) {
    let sq: Vec<f64> = samples[0].iter().map(|z| z.norm_sqr()).collect();
    let norm = numerics::integrate_real(&sq, h).sqrt();
    if norm > 0.0 {
        for row in samples.iter_mut() {
            for z in row.iter_mut() {
                *z /= norm;
            }
        }
    }
}

/// Bilinear pairing of a direct profile with an adjoint profile at `λ`:
/// second derivatives, weighted slopes, the vertex slope coupling, minus
/// `λ²` times the values, all without conjugation.
fn bilinear_pairing(
    phi: &[Vec<Complex64>; 4],
    psi: &[Vec<Complex64>; 4],
    lambda: Complex64,
    p: &Params,
    h: f64,
) -> Complex64 {
    let n = phi[0].len();
    let mut bend = Vec::with_capacity(n);
    let mut stretch = Vec::with_capacity(n);
    let mut mass = Vec::with_capacity(n);
    for i in 0..n {
        bend.push(phi[2][i] * psi[2][i]);
        stretch.push(phi[1][i] * psi[1][i]);
        mass.push(phi[0][i] * psi[0][i]);
    }
    numerics::integrate(&bend, h)
        + p.tension() * numerics::integrate(&stretch, h)
        + p.alpha * phi[1][0] * psi[1][0]
        - lambda * lambda * numerics::integrate(&mass, h)
}

fn build_records(
    p: &Params,
    branch: Branch,
    grid: &EdgeGrid,
    index: usize,
    lambda: Complex64,
    residual: f64,
    opts: &SpectrumOptions,
) -> Result<Vec<EigenRecord>> {
    let sp = SpectralPoint::from_lambda(lambda);
    let fd = ode::modal_fundamental_system(&sp, p, false, Some(grid))?;
    let profile = eigen_profile(&fd, p, branch)?;
    if profile.residual > 1e-5 {
        return Err(Error::Nonconvergence(format!(
            "dynamic vertex residual {:.3e} at λ = {lambda}",
            profile.residual
        )));
    }
    let mut samples = ode::sample_solution(&profile.basis, &fd)?;

    let mut eigenfunctions = Vec::new();
    for weights in branch.edge_weights() {
        let mut w: [Vec<Complex64>; 3] = Default::default();
        let mut v: [Vec<Complex64>; 3] = Default::default();
        for (k, weight) in weights.iter().enumerate() {
            w[k] = samples[0].iter().map(|z| weight * z).collect();
            v[k] = w[k].iter().map(|z| lambda * z).collect();
        }
        let state = NetworkState::new(grid.clone(), w, v)?;
        eigenfunctions.push(normalize_energy(state, p)?);
    }

    let fd_adj = ode::modal_fundamental_system(&sp, p, true, Some(grid))?;
    let adj_profile = eigen_profile(&fd_adj, p, branch)?;
    if adj_profile.residual > 1e-5 {
        return Err(Error::Nonconvergence(format!(
            "adjoint vertex residual {:.3e} at λ = {lambda}",
            adj_profile.residual
        )));
    }
    let mut adj_samples = ode::sample_solution(&adj_profile.basis, &fd_adj)?;
    unit_l2(&mut samples, grid.h);
    unit_l2(&mut adj_samples, grid.h);
    let bform = bilinear_pairing(&samples, &adj_samples, lambda, p, grid.h);

    let other = char_det(&sp, p, branch.other())?;
    let degenerate = other.norm() < 1e-8;

    let record = EigenRecord {
        lambda,
        rho: sp.rho,
        branch,
        index: index as i64,
        residual,
        degenerate,
        null_coeffs: profile.canonical,
        eigenfunctions,
        bform,
    };

    let mut out = Vec::with_capacity(2);
    if opts.include_conjugates && lambda.im > 0.0 {
        let mirror_lambda = lambda.conj();
        let mirror_sp = SpectralPoint::from_lambda(mirror_lambda);
        let mirror_residual = char_det(&mirror_sp, p, branch)?.norm();
        let mut mirror_coeffs = [Complex64::new(0.0, 0.0); 4];
        for (dst, src) in mirror_coeffs.iter_mut().zip(record.null_coeffs.iter()) {
            *dst = src.conj();
        }
        out.push(EigenRecord {
            lambda: mirror_lambda,
            rho: mirror_sp.rho,
            branch,
            index: -(index as i64),
            residual: mirror_residual,
            degenerate,
            null_coeffs: mirror_coeffs,
            eigenfunctions: record.eigenfunctions.iter().map(|s| s.conj()).collect(),
            bform: record.bform.conj(),
        });
    }
    out.push(record);
    Ok(out)
}

/// Computes the eigenvalue records of both branches.
///
/// Seeds Newton iterations from the asymptotic root locations, certifies the
/// low modes by argument-principle counts, and assembles energy-normalized
/// eigenfunctions plus the adjoint pairing for every root. The result is
/// sorted by imaginary part (conjugate mirrors first), ties broken by
/// descending real part.
pub fn find_eigenvalues(p: &Params, opts: &SpectrumOptions) -> Result<Vec<EigenRecord>> {
    let violations = p.validate();
    if !violations.is_empty() {
        return Err(Error::InvalidParams(violations));
    }
    let grid = EdgeGrid::new(opts.grid_points)?;
    let mut all = Vec::new();
    for branch in Branch::ALL {
        let roots = branch_roots(p, branch, opts)?;
        let records: Vec<Vec<EigenRecord>> = roots
            .par_iter()
            .enumerate()
            .map(|(n, &(lambda, residual))| {
                build_records(p, branch, &grid, n, lambda, residual, opts)
            })
            .collect::<Result<_>>()?;
        all.extend(records.into_iter().flatten());
    }
    all.sort_by(|a, b| {
        a.lambda
            .im
            .partial_cmp(&b.lambda.im)
            .unwrap()
            .then(b.lambda.re.partial_cmp(&a.lambda.re).unwrap())
    });
    Ok(all)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn branch_weights_close_the_force_balance() {
        for weights in Branch::Two.edge_weights() {
            let sum: f64 = weights.iter().sum();
            assert!(sum.abs() < 1e-15);
        }
        assert_eq!(Branch::One.edge_weights().len(), 1);
        assert_eq!(Branch::Two.edge_weights().len(), 2);
        assert_eq!(Branch::One.geometric_multiplicity(), 1);
        assert_eq!(Branch::Two.geometric_multiplicity(), 2);
    }

    #[test]
    fn cofactor_null_annihilates_all_rows() {
        let rows: [Vec<Complex64>; 3] = [
            vec![
                Complex64::new(1.0, 0.2),
                Complex64::new(-0.3, 1.1),
                Complex64::new(0.7, -0.4),
                Complex64::new(0.2, 0.9),
            ],
            vec![
                Complex64::new(0.4, -1.0),
                Complex64::new(1.3, 0.5),
                Complex64::new(-0.6, 0.1),
                Complex64::new(0.8, -0.2),
            ],
            vec![
                Complex64::new(-0.9, 0.3),
                Complex64::new(0.2, -0.7),
                Complex64::new(1.1, 0.6),
                Complex64::new(-0.4, 0.5),
            ],
        ];
        let a = cofactor_null(&rows);
        for row in &rows {
            let dot: Complex64 = row.iter().zip(a.iter()).map(|(r, c)| r * c).sum();
            assert!(dot.norm() < 1e-14);
        }
        assert!(a.iter().map(|z| z.norm()).sum::<f64>() > 1e-3);
    }

    #[test]
    fn branch_tags_are_stable() {
        assert_eq!(Branch::One.tag(), 1);
        assert_eq!(Branch::Two.tag(), 2);
        assert_eq!(Branch::One.other(), Branch::Two);
    }
}
