mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;

use cc_index::census::{census, CensusOptions};
use cc_index::geometry::{
    apply_blockwise, center_and_normalize, center_of_mass, mass_inner, random_orthogonal,
    rotation_orbit_dimension, tangent_frame, tangent_frame_with, Completion, Configuration,
};
use cc_index::index::{differential, morse_data, morse_data_with, restricted_hessian};
use cc_index::potential::{euclidean_gradient, euclidean_hessian, mass_gradient, potential};
use cc_index::solver::{classify, newton_solve, Group, NewtonOptions, DEDUP_TOL};
use cc_index::topology::{lefschetz_and_degree, DegreeCase};

use common::*;

fn shape() -> impl Strategy<Value = (usize, usize, f64, usize, u64)> {
    (2usize..=5, 1usize..=3, prop_oneof![Just(1.0), Just(2.0)], 0usize..3, any::<u64>())
}

fn config_for(n: usize, d: usize, alpha: f64, mv: usize, seed: u64) -> Configuration {
    let sys = system(&mass_vectors(n)[mv], d, alpha);
    random_normalized(&sys, &mut rng(seed))
}

/// A converged central configuration for a small system, if Newton gets there.
fn central_for(n: usize, d: usize, alpha: f64, mv: usize, seed: u64) -> Option<Configuration> {
    let q = config_for(n.min(4), d, alpha, mv, seed);
    let c = newton_solve(&q, &NewtonOptions::default()).ok()?;
    c.converged.then_some(c.q)
}

fn scale(q: &Configuration, s: f64) -> Configuration {
    let c: Vec<f64> = q.coords().iter().map(|x| s * x).collect();
    Configuration::new(q.system_arc().clone(), c).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mass_inner_is_positive_definite((n, d, alpha, mv, seed) in shape()) {
        let q = config_for(n, d, alpha, mv, seed);
        let v = q.coords();
        prop_assert!(mass_inner(v, v, q.system()).unwrap() > 0.0);
        let zero = vec![0.0; v.len()];
        prop_assert_eq!(mass_inner(&zero, &zero, q.system()).unwrap(), 0.0);
    }

    #[test]
    fn centering_reaches_the_ellipsoid((n, d, alpha, mv, seed) in shape(), s in 0.1f64..10.0) {
        let sys = system(&mass_vectors(n)[mv], d, alpha);
        let raw = random_configuration(&sys, &mut rng(seed), 1e-3);
        let shifted: Vec<f64> = raw.coords().iter().map(|x| s * x + 3.0).collect();
        let q = center_and_normalize(&Configuration::new(sys, shifted).unwrap()).unwrap();
        prop_assert!((q.mass_norm() - 1.0).abs() <= 1e-12);
        prop_assert!(center_of_mass(&q).iter().all(|c| c.abs() <= 1e-12));
    }

    #[test]
    fn tangent_frame_is_orthonormal((n, d, alpha, mv, seed) in shape()) {
        let q = config_for(n, d, alpha, mv, seed);
        let frame = tangent_frame(&q).unwrap();
        prop_assert!(frame.gram_error() <= 1e-10);
        prop_assert_eq!(frame.dim(), q.system().tangent_dim());
        let random = tangent_frame_with(&q, Completion::Random(seed)).unwrap();
        prop_assert!(random.gram_error() <= 1e-10);
    }

    #[test]
    fn orbit_dimension_is_invariant((n, d, alpha, mv, seed) in shape(), collinear in any::<bool>()) {
        let mut q = config_for(n, d, alpha, mv, seed);
        if collinear {
            // flatten onto the first axis
            let c: Vec<f64> = q.coords().iter().enumerate().map(|(k, x)| if k % d == 0 { *x } else { 0.0 }).collect();
            if let Ok(line) = Configuration::new(q.system_arc().clone(), c) {
                if line.min_distance() > 1e-3 {
                    q = center_and_normalize(&line).unwrap();
                }
            }
        }
        let g = random_orthogonal(d, &mut rng(seed ^ 1), false);
        let gq = q.transformed(&g, &vec![0.0; d]).unwrap();
        prop_assert_eq!(rotation_orbit_dimension(&gq), rotation_orbit_dimension(&q));
    }

    #[test]
    fn potential_is_homogeneous((n, d, alpha, mv, seed) in shape()) {
        let q = config_for(n, d, alpha, mv, seed);
        let u = potential(&q).unwrap();
        for s in [0.5, 2.0, 10.0] {
            let us = potential(&scale(&q, s)).unwrap();
            prop_assert!((us - s.powf(-alpha) * u).abs() <= 1e-12 * us.max(u));
        }
    }

    #[test]
    fn potential_and_gradient_are_equivariant((n, d, alpha, mv, seed) in shape(), special in any::<bool>()) {
        let q = config_for(n, d, alpha, mv, seed);
        let mut r = rng(seed.wrapping_add(17));
        let g = random_orthogonal(d, &mut r, special);
        let t: Vec<f64> = (0..d).map(|k| k as f64 - 0.7).collect();
        let gq = q.transformed(&g, &t).unwrap();
        let u = potential(&q).unwrap();
        prop_assert!((potential(&gq).unwrap() - u).abs() <= 1e-12 * u);
        let grad = mass_gradient(&q).unwrap();
        let rotated = apply_blockwise(&g, grad.as_slice(), d, None);
        let dev = max_abs_diff(mass_gradient(&gq).unwrap().as_slice(), &rotated);
        prop_assert!(dev <= 1e-10 * grad.amax());
    }

    #[test]
    fn euler_identities((n, d, alpha, mv, seed) in shape()) {
        let q = config_for(n, d, alpha, mv, seed);
        let u = potential(&q).unwrap();
        let x = q.to_vector();
        let first = euclidean_gradient(&q).unwrap().dot(&x);
        prop_assert!((first + alpha * u).abs() <= 1e-10 * u);
        let second = (euclidean_hessian(&q).unwrap() * &x).dot(&x);
        prop_assert!((second - alpha * (alpha + 1.0) * u).abs() <= 1e-10 * u);
        let sharp = mass_inner(mass_gradient(&q).unwrap().as_slice(), q.coords(), q.system()).unwrap();
        prop_assert!((sharp + alpha * u).abs() <= 1e-10 * u);
    }

    #[test]
    fn class_key_is_invariant((n, d, alpha, mv, seed) in shape(), special in any::<bool>()) {
        let q = config_for(n, d, alpha, mv, seed);
        let group = if special { Group::Special } else { Group::Orthogonal };
        let g = random_orthogonal(d, &mut rng(seed ^ 7), special);
        let gq = q.transformed(&g, &vec![0.25; d]).unwrap();
        prop_assert!(classify(&gq, group).matches(&classify(&q, group), DEDUP_TOL));
    }

    #[test]
    fn lefschetz_is_additive(
        a in prop::collection::vec(prop_oneof![Just(-1i32), Just(1i32)], 0..12),
        b in prop::collection::vec(prop_oneof![Just(-1i32), Just(1i32)], 0..12),
    ) {
        let joined: Vec<i32> = a.iter().chain(&b).copied().collect();
        let l = |v: &[i32]| lefschetz_and_degree(v, DegreeCase::None).0;
        prop_assert_eq!(l(&joined), l(&a) + l(&b));
        let (lc, dc) = lefschetz_and_degree(&joined, DegreeCase::Circle);
        prop_assert_eq!(dc, Some(1 - lc));
        let (lp, dp) = lefschetz_and_degree(&joined, DegreeCase::ComplexProjectiveLine);
        prop_assert_eq!(dp, Some(lp - 1));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn report_is_frame_independent((n, d, alpha, mv, seed) in shape()) {
        let Some(q) = central_for(n, d, alpha, mv, seed) else { return Ok(()) };
        let a = morse_data(&q).unwrap();
        let b = morse_data_with(&q, Completion::Random(seed)).unwrap();
        prop_assert_eq!(a.morse_index, b.morse_index);
        prop_assert_eq!(a.kernel_dim, b.kernel_dim);
        prop_assert_eq!(a.fixed_point_index, b.fixed_point_index);
        let mut ea = a.eigenvalues.clone();
        let mut eb = b.eigenvalues.clone();
        ea.sort_by(f64::total_cmp);
        eb.sort_by(f64::total_cmp);
        let scale = ea.iter().chain(&eb).fold(1.0f64, |m, x| m.max(x.abs()));
        prop_assert!(max_abs_diff(&ea, &eb) <= 1e-8 * scale);
    }

    #[test]
    fn hessian_spectrum_is_scaled_differential_spectrum((n, d, alpha, mv, seed) in shape()) {
        let Some(q) = central_for(n, d, alpha, mv, seed) else { return Ok(()) };
        let au = alpha * potential(&q).unwrap();
        let frame = tangent_frame(&q).unwrap();
        let k = frame.dim();
        if k == 0 { return Ok(()) }
        let h = restricted_hessian(&q, &frame).unwrap();
        let df = differential(&q, &frame).unwrap();
        let a = DMatrix::<f64>::identity(k, k) - &df.analytic;
        let sym = (&a + a.transpose()) * 0.5;
        let mut nu: Vec<f64> = h.symmetric_eigen().eigenvalues.iter().copied().collect();
        let mut scaled: Vec<f64> = sym.symmetric_eigen().eigenvalues.iter().map(|x| au * x).collect();
        nu.sort_by(f64::total_cmp);
        scaled.sort_by(f64::total_cmp);
        prop_assert!(max_abs_diff(&nu, &scaled) <= 1e-8 * au);
    }

    #[test]
    fn numeric_differential_is_self_adjoint((n, d, alpha, mv, seed) in shape()) {
        let Some(q) = central_for(n, d, alpha, mv, seed) else { return Ok(()) };
        let frame = tangent_frame(&q).unwrap();
        if frame.dim() == 0 { return Ok(()) }
        let m = differential(&q, &frame).unwrap().numeric;
        let asym = (&m - m.transpose()).amax();
        prop_assert!(asym <= 1e-5 * m.amax().max(1.0), "asymmetry {asym}");
    }
}

#[test]
fn census_is_stable_across_seeds() {
    let sys = system(&[1.0, 1.0, 1.0], 2, 1.0);
    let runs: Vec<Vec<(f64, i8, Option<i32>)>> = [1u64, 2, 3]
        .iter()
        .map(|&seed| {
            census(&sys, &CensusOptions::new(Group::Special, 400, seed))
                .unwrap()
                .iter()
                .map(|e| (e.potential, e.key.chirality, e.fixed_point_index()))
                .collect()
        })
        .collect();
    for run in &runs[1..] {
        assert_eq!(run.len(), runs[0].len());
        for (a, b) in run.iter().zip(&runs[0]) {
            assert!((a.0 - b.0).abs() <= 1e-9 * b.0);
            assert_eq!((a.1, a.2), (b.1, b.2));
        }
    }
}

#[test]
fn census_is_reproducible_for_a_fixed_seed() {
    let sys = system(&[0.5, 0.3, 0.2], 2, 1.0);
    let opts = CensusOptions::new(Group::Special, 200, 11);
    let a = census(&sys, &opts).unwrap();
    let b = census(&sys, &opts).unwrap();
    let coords = |v: &[cc_index::CensusEntry]| -> Vec<Vec<f64>> {
        v.iter().map(|e| e.representative.q.coords().to_vec()).collect()
    };
    assert_eq!(coords(&a), coords(&b));
    assert_eq!(a.iter().map(|e| e.hits).collect::<Vec<_>>(), b.iter().map(|e| e.hits).collect::<Vec<_>>());
}

#[test]
fn tangent_vectors_are_centered_and_orthogonal_to_q() {
    let q = equilateral(3, 1.0);
    let frame = tangent_frame(&q).unwrap();
    let sys = q.system();
    for v in frame.basis() {
        assert!(mass_inner(v.as_slice(), q.coords(), sys).unwrap().abs() <= 1e-12);
        for axis in 0..3 {
            let c: f64 = (0..3).map(|i| sys.masses()[i] * v[3 * i + axis]).sum();
            assert!(c.abs() <= 1e-12);
        }
    }
}
