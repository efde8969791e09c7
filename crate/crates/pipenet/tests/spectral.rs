//! Certified spectrum at the reference parameters, frozen-value regression,
//! record invariants, and cross-validation of the exponential-basis
//! determinant against the adaptive canonical integration.

mod support;

use std::sync::OnceLock;

use num_complex::Complex64;
use pipenet::model::{energy_norm_squared, Params};
use pipenet::numerics::BoxRegion;
use pipenet::ode::{self, SpectralPoint};
use pipenet::spectral::{
    char_det, count_roots_in_box, eigen_profile, find_eigenvalues, Branch, EigenRecord,
    SpectrumOptions,
};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn reference_spectrum() -> &'static [EigenRecord] {
    static SPECTRUM: OnceLock<Vec<EigenRecord>> = OnceLock::new();
    SPECTRUM.get_or_init(|| {
        find_eigenvalues(&Params::reference(), &SpectrumOptions::default()).unwrap()
    })
}

fn upper(records: &[EigenRecord], branch: Branch) -> Vec<&EigenRecord> {
    records
        .iter()
        .filter(|r| r.branch == branch && r.lambda.im >= 0.0)
        .collect()
}

#[test]
fn reference_spectrum_matches_frozen_values() {
    let records = reference_spectrum();
    for (branch, table) in [
        (Branch::One, support::BRANCH1_REFERENCE),
        (Branch::Two, support::BRANCH2_REFERENCE),
    ] {
        let found = upper(records, branch);
        assert_eq!(
            found.len(),
            table.len(),
            "{branch:?}: expected {} eigenvalues with Im ≥ 0, found {}",
            table.len(),
            found.len()
        );
        for &(re, im) in table {
            let hit = found
                .iter()
                .any(|r| (r.lambda - c(re, im)).norm() <= 1e-8);
            assert!(hit, "{branch:?}: no eigenvalue within 1e-8 of {re}+{im}i");
        }
    }
}

#[test]
fn kappa0_spectrum_is_purely_imaginary_and_matches_frozen_values() {
    let p = support::params_kappa0();
    let opts = SpectrumOptions { n_max: 8, n_low: 6, ..SpectrumOptions::default() };
    let records = find_eigenvalues(&p, &opts).unwrap();
    for r in &records {
        assert!(
            r.lambda.re.abs() <= 1e-12,
            "eigenvalue {} has nonzero real part without damping",
            r.lambda
        );
    }
    for (branch, table) in [
        (Branch::One, support::BRANCH1_KAPPA0_IM),
        (Branch::Two, support::BRANCH2_KAPPA0_IM),
    ] {
        let found = upper(&records, branch);
        assert_eq!(found.len(), table.len(), "{branch:?}: unexpected count");
        for &im in table {
            let hit = found.iter().any(|r| (r.lambda - c(0.0, im)).norm() <= 1e-8);
            assert!(hit, "{branch:?}: no eigenvalue within 1e-8 of {im}i");
        }
    }
}

#[test]
fn records_satisfy_structural_invariants() {
    let p = Params::reference();
    let records = reference_spectrum();
    assert!(!records.is_empty());
    for r in records {
        assert!(r.residual <= 1e-8, "residual {:.3e} at {}", r.residual, r.lambda);
        assert!(r.lambda.re < -1e-6, "eigenvalue {} not strictly damped", r.lambda);
        let sp = SpectralPoint { lambda: r.lambda, rho: r.rho };
        assert!(sp.consistency() <= 1e-12);
        assert_eq!(r.eigenfunctions.len(), r.branch.geometric_multiplicity());
        assert!(!r.degenerate, "branches should not intersect at the reference point");
        for state in &r.eigenfunctions {
            let norm2 = energy_norm_squared(state, &p).unwrap();
            assert!((norm2 - 1.0).abs() <= 1e-8, "energy norm² {norm2} not 1");
            // Eigen-pairs of the first-order system couple velocity to shape
            // through the eigenvalue itself.
            for edge in 0..3 {
                for node in [0, state.grid.n_points / 2, state.grid.n_points - 1] {
                    let want = r.lambda * state.w[edge][node];
                    let got = state.v[edge][node];
                    assert!(
                        (got - want).norm() <= 1e-10 * (1.0 + want.norm()),
                        "v ≠ λw at edge {edge}, node {node} of {}",
                        r.lambda
                    );
                }
            }
        }
    }
    // Global ordering: imaginary parts never decrease.
    for pair in records.windows(2) {
        assert!(pair[0].lambda.im <= pair[1].lambda.im);
    }
}

#[test]
fn conjugate_partners_mirror_the_upper_half_plane() {
    let records = reference_spectrum();
    for r in records.iter().filter(|r| r.lambda.im > 0.0) {
        let partner = records
            .iter()
            .find(|s| s.branch == r.branch && s.lambda == r.lambda.conj())
            .unwrap_or_else(|| panic!("no conjugate partner for {}", r.lambda));
        assert_eq!(partner.index, -r.index);
        assert!(partner.residual <= 1e-8);
        assert!((partner.bform - r.bform.conj()).norm() <= 1e-10 * (1.0 + r.bform.norm()));
        for (a, b) in partner.null_coeffs.iter().zip(r.null_coeffs.iter()) {
            assert_eq!(*a, b.conj());
        }
    }
}

#[test]
fn real_eigenvalues_appear_exactly_once_per_branch() {
    let records = reference_spectrum();
    for branch in Branch::ALL {
        let real: Vec<_> = records
            .iter()
            .filter(|r| r.branch == branch && r.lambda.im == 0.0)
            .collect();
        assert_eq!(real.len(), 1, "{branch:?}: expected a single real eigenvalue");
        assert_eq!(real[0].index, 0);
        assert!(real[0].lambda.re < -1.0);
    }
}

/// The second branch consists of difference modes, so displacement
/// continuity across the vertex forces the shared profile to vanish there.
#[test]
fn second_branch_profiles_vanish_at_the_vertex() {
    let records = reference_spectrum();
    for r in records.iter().filter(|r| r.branch == Branch::Two) {
        assert!(
            r.null_coeffs[0].norm() <= 1e-8,
            "φ(0) = {} at {}",
            r.null_coeffs[0],
            r.lambda
        );
    }
}

#[test]
fn bform_stays_away_from_zero() {
    let records = reference_spectrum();
    for r in records {
        assert!(
            r.bform.norm() > 1e-6,
            "B(λ) = {:.3e} at {} suggests a non-semisimple eigenvalue",
            r.bform.norm(),
            r.lambda
        );
    }
}

#[test]
fn winding_counts_match_known_root_positions() {
    let p = Params::reference();
    // Two first-branch roots (2.53i and 22.6i rows of the frozen table) sit
    // inside this rectangle.
    let both = BoxRegion { re_min: -4.0, re_max: -0.01, im_min: 2.0, im_max: 30.0 };
    assert_eq!(count_roots_in_box(&p, Branch::One, both, 8000).unwrap(), 2);
    let one = BoxRegion { re_min: -4.0, re_max: -0.01, im_min: 10.0, im_max: 30.0 };
    assert_eq!(count_roots_in_box(&p, Branch::One, one, 8000).unwrap(), 1);
    let second = BoxRegion { re_min: -10.0, re_max: 0.5, im_min: -2.0, im_max: 30.0 };
    assert_eq!(count_roots_in_box(&p, Branch::Two, second, 8000).unwrap(), 2);
}

#[test]
fn right_half_plane_is_root_free() {
    let p = Params::reference();
    let rhp = BoxRegion { re_min: 0.01, re_max: 5.0, im_min: 0.0, im_max: 100.0 };
    for branch in Branch::ALL {
        assert_eq!(count_roots_in_box(&p, branch, rhp, 8000).unwrap(), 0);
    }
}

#[test]
fn each_low_record_is_a_simple_root() {
    let p = Params::reference();
    let records = reference_spectrum();
    for branch in Branch::ALL {
        for r in upper(records, branch).iter().take(4) {
            let region = BoxRegion {
                re_min: r.lambda.re - 0.5,
                re_max: r.lambda.re + 0.5,
                im_min: r.lambda.im - 0.5,
                im_max: r.lambda.im + 0.5,
            };
            let count = count_roots_in_box(&p, branch, region, 8000).unwrap();
            assert_eq!(count as usize, branch.det_root_order(), "box around {}", r.lambda);
        }
    }
}

#[test]
fn determinant_modulus_is_order_one_away_from_roots() {
    let p = Params::reference();
    for &lambda in &[c(-1.0, 10.0), c(-1.0, 40.0), c(-1.0, 750.0)] {
        let sp = SpectralPoint::from_lambda(lambda);
        for branch in Branch::ALL {
            let det = char_det(&sp, &p, branch).unwrap().norm();
            assert!(
                (1e-4..1e4).contains(&det),
                "normalized determinant {det:.3e} at {lambda} ({branch:?})"
            );
        }
    }
}

/// The exponential-basis profile must agree with one computed from the
/// adaptive canonical integration at the same eigenvalue: same gauge, same
/// initial data, independent discretisations.
#[test]
fn modal_profile_matches_canonical_profile_at_an_eigenvalue() {
    let p = Params::reference();
    let (re, im) = support::BRANCH1_REFERENCE[1];
    let sp = SpectralPoint::from_lambda(c(re, im));
    let modal = ode::modal_fundamental_system(&sp, &p, false, None).unwrap();
    let canonical = ode::integrate_fundamental_system(&sp, &p, false, None).unwrap();
    let from_modal = eigen_profile(&modal, &p, Branch::One).unwrap();
    let from_canonical = eigen_profile(&canonical, &p, Branch::One).unwrap();
    assert!(from_modal.residual <= 1e-8);
    assert!(from_canonical.residual <= 1e-6);
    for m in 0..4 {
        let a = from_modal.canonical[m];
        let b = from_canonical.canonical[m];
        assert!((a - b).norm() <= 1e-6, "initial value {m}: {a} vs {b}");
    }
}
