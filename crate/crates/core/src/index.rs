//! Morse indices and fixed point indices at central configurations.
//!
//! At a normalized central configuration `q` the Hessian of `U` restricted
//! to the ellipsoid is `D^2U(q)[v, w] + alpha U(q) <v, w>_m`. The map
//! `F(q) = -dU#(q) / ||dU#(q)||_m` fixes `q`, and its differential satisfies
//! `D^2U(q)[v, w] = -alpha U(q) <DF v, w>_m`, so that
//! `Hess = alpha U (I - DF)` on the tangent space. Both sides are computed
//! independently here: the Hessian from closed-form second derivatives and
//! `DF` from finite differences of `F`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{CcError, Result};
use crate::geometry::{
    rotation_orbit_dimension, tangent_frame, tangent_frame_with, Completion, Configuration, TangentFrame,
};
use crate::potential::{euclidean_hessian, mass_gradient, potential};
use crate::solver::cc_residual;

/// Residual above which a point is not treated as a central configuration.
pub const CRITICAL_RESIDUAL_TOL: f64 = 1e-8;

/// Relative threshold for zero eigenvalues.
pub const ZERO_EIGEN_TOL: f64 = 1e-7;

/// Finite-difference step for the differential of `F`.
pub const DF_STEP: f64 = 1e-6;

/// Agreement between analytic and numeric `DF` promised to callers.
pub const DF_AGREEMENT: f64 = 1e-5;

/// Disagreement treated as an internal inconsistency.
pub const DF_INCONSISTENT: f64 = 1e-4;

/// Corollary residual limit, relative to `alpha U`.
pub const COROLLARY_TOL: f64 = 1e-6;

fn require_critical(q: &Configuration) -> Result<f64> {
    let (_, r) = cc_residual(q)?;
    if r > CRITICAL_RESIDUAL_TOL {
        return Err(CcError::Precondition(format!(
            "not a central configuration: residual {r:e} exceeds {CRITICAL_RESIDUAL_TOL:e}"
        )));
    }
    Ok(r)
}

/// Matrix of a bilinear form `B[v_a, v_b]` over the frame basis.
fn frame_form(frame: &TangentFrame, form: &DMatrix<f64>) -> DMatrix<f64> {
    let basis: Vec<&DVector<f64>> = frame.basis().collect();
    let k = basis.len();
    DMatrix::from_fn(k, k, |a, b| basis[a].dot(&(form * basis[b])))
}

/// `H_ab = D^2U[v_a, v_b] + alpha U delta_ab` over the frame basis.
pub fn restricted_hessian(q: &Configuration, frame: &TangentFrame) -> Result<DMatrix<f64>> {
    require_critical(q)?;
    restricted_hessian_unchecked(q, frame)
}

fn restricted_hessian_unchecked(q: &Configuration, frame: &TangentFrame) -> Result<DMatrix<f64>> {
    let au = q.system().alpha() * potential(q)?;
    let mut h = frame_form(frame, &euclidean_hessian(q)?);
    for a in 0..h.nrows() {
        h[(a, a)] += au;
    }
    Ok(symmetrize(&h))
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn sorted_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Spectrum of the restricted Hessian and the integers derived from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub eigenvalues: Vec<f64>,
    /// Eigenvalues with `|v| <= zero_threshold` count as zero.
    pub zero_threshold: f64,
    pub kernel_dim: usize,
    pub orbit_dim: usize,
    /// Negative eigenvalues of the form on the orbit complement.
    pub morse_index: usize,
    /// Whether the rotation orbit has the maximal dimension `d(d-1)/2`.
    pub maximal_orbit: bool,
    /// Kernel equals the orbit directions and the orbit is maximal.
    pub nondegenerate: bool,
    /// Fixed point index from `sign det(I - DF)`; `None` when degenerate.
    pub fixed_point_index: Option<i32>,
}

impl SpectralReport {
    pub fn positive_count(&self) -> usize {
        self.eigenvalues.len() - self.kernel_dim - self.negative_count()
    }

    fn negative_count(&self) -> usize {
        self.eigenvalues.iter().filter(|&&v| v < -self.zero_threshold).count()
    }

    /// `(-1)^mu`.
    pub fn morse_sign(&self) -> i32 {
        if self.morse_index.is_multiple_of(2) {
            1
        } else {
            -1
        }
    }
}

fn spectral_scale(ev: &[f64]) -> f64 {
    ev.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

pub fn morse_data(q: &Configuration) -> Result<SpectralReport> {
    morse_data_with(q, Completion::Standard)
}

/// [`morse_data`] with an explicit choice of frame completion.
pub fn morse_data_with(q: &Configuration, completion: Completion) -> Result<SpectralReport> {
    require_critical(q)?;
    let frame = tangent_frame_with(q, completion)?;
    let h = restricted_hessian_unchecked(q, &frame)?;
    let spectrum = sorted_eigenvalues(&h);
    // alpha U is the scale of the identity part of the form; it keeps the
    // threshold meaningful when every eigenvalue vanishes.
    let au = q.system().alpha() * potential(q)?;
    let tol = ZERO_EIGEN_TOL * spectral_scale(&spectrum).max(au);
    let kernel_dim = spectrum.iter().filter(|v| v.abs() <= tol).count();

    let orbit_dim = frame.orbit_dim();
    debug_assert_eq!(orbit_dim, rotation_orbit_dimension(q));
    let k = frame.dim();
    let complement = h.view((orbit_dim, orbit_dim), (k - orbit_dim, k - orbit_dim)).into_owned();
    let morse_index = sorted_eigenvalues(&complement).iter().filter(|&&v| v < -tol).count();

    let maximal_orbit = orbit_dim == q.system().rotation_group_dim();
    let nondegenerate = maximal_orbit && kernel_dim == orbit_dim;
    let fixed_point_index = if nondegenerate { Some(index_by_determinant(q, &frame)?) } else { None };
    Ok(SpectralReport {
        eigenvalues: spectrum,
        zero_threshold: tol,
        kernel_dim,
        orbit_dim,
        morse_index,
        maximal_orbit,
        nondegenerate,
        fixed_point_index,
    })
}

/// `F(q) = -dU#(q) / ||dU#(q)||_m`.
pub fn gradient_map(q: &Configuration) -> Result<Configuration> {
    let g = mass_gradient(q)?;
    let norm = q.system().norm(g.as_slice());
    if !(norm > 0.0) {
        return Err(CcError::DegenerateInput("mass gradient vanishes".into()));
    }
    Configuration::from_raw(q.system_arc().clone(), g.iter().map(|x| -x / norm).collect())
}

/// Matrices of `DF` in a frame, as linear maps: entry `(b, a)` is
/// `<DF v_a, v_b>_m`.
#[derive(Debug, Clone)]
pub struct Differential {
    /// From `<DF v, w> = -D^2U[v, w] / (alpha U)`.
    pub analytic: DMatrix<f64>,
    /// Central differences of [`gradient_map`] along the frame directions.
    pub numeric: DMatrix<f64>,
    pub max_deviation: f64,
}

fn numeric_differential(q: &Configuration, frame: &TangentFrame) -> Result<DMatrix<f64>> {
    let k = frame.dim();
    let mut m = DMatrix::zeros(k, k);
    for (a, v) in frame.basis().enumerate() {
        let probe = |s: f64| -> Result<Configuration> {
            let c = q.coords().iter().zip(v.iter()).map(|(x, dv)| x + s * dv).collect();
            gradient_map(&Configuration::from_raw(q.system_arc().clone(), c)?)
        };
        let (plus, minus) = (probe(DF_STEP)?, probe(-DF_STEP)?);
        let diff: Vec<f64> =
            plus.coords().iter().zip(minus.coords()).map(|(p, m)| (p - m) / (2.0 * DF_STEP)).collect();
        m.set_column(a, &frame.coordinates(&diff));
    }
    Ok(m)
}

pub fn differential(q: &Configuration, frame: &TangentFrame) -> Result<Differential> {
    require_critical(q)?;
    let au = q.system().alpha() * potential(q)?;
    let analytic = frame_form(frame, &euclidean_hessian(q)?) / (-au);
    let numeric = numeric_differential(q, frame)?;
    let max_deviation = (&analytic - &numeric).amax();
    if max_deviation > DF_INCONSISTENT {
        return Err(CcError::InternalConsistency { deviation: max_deviation, limit: DF_INCONSISTENT });
    }
    Ok(Differential { analytic, numeric, max_deviation })
}

/// `(-1)^e` with `e` the number of negative eigenvalues of the symmetrized
/// orbit-complement block of `I - DF`, using the numeric `DF`.
fn index_by_determinant(q: &Configuration, frame: &TangentFrame) -> Result<i32> {
    let numeric = numeric_differential(q, frame)?;
    let o = frame.orbit_dim();
    let k = frame.dim() - o;
    let block = DMatrix::identity(k, k) - numeric.view((o, o), (k, k));
    let negatives = sorted_eigenvalues(&symmetrize(&block)).iter().filter(|&&v| v < 0.0).count();
    Ok(if negatives % 2 == 0 { 1 } else { -1 })
}

/// Fixed point index computed from `DF`, alongside `(-1)^mu`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedPointIndex {
    pub value: i32,
    pub morse_sign: i32,
}

pub fn fixed_point_index(q: &Configuration) -> Result<FixedPointIndex> {
    let report = morse_data(q)?;
    match report.fixed_point_index {
        Some(value) if report.nondegenerate => Ok(FixedPointIndex { value, morse_sign: report.morse_sign() }),
        _ => Err(CcError::UndefinedIndex),
    }
}

/// Everything needed to check the index identity at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub potential: f64,
    pub lambda: f64,
    pub residual_norm: f64,
    pub critical: bool,
    pub spectrum: Option<SpectralReport>,
    pub index_by_determinant: Option<i32>,
    pub index_by_morse: Option<i32>,
    /// `max |H - alpha U (I - DF_sym)|` over the frame.
    pub corollary_residual: Option<f64>,
    pub passed: bool,
    pub failure: Option<String>,
}

impl TheoremReport {
    pub fn nondegenerate(&self) -> bool {
        self.spectrum.as_ref().is_some_and(|s| s.nondegenerate)
    }

    /// The index identity was checked and holds.
    pub fn verified(&self) -> bool {
        self.passed && self.nondegenerate()
    }
}

/// Runs the full check at `q`. Failures are reported, not returned as errors,
/// except for collisions.
pub fn verify_theorem(q: &Configuration) -> Result<TheoremReport> {
    let u = potential(q)?;
    let au = q.system().alpha() * u;
    let (_, residual_norm) = cc_residual(q)?;
    let mut report = TheoremReport {
        potential: u,
        lambda: -au,
        residual_norm,
        critical: residual_norm <= CRITICAL_RESIDUAL_TOL,
        spectrum: None,
        index_by_determinant: None,
        index_by_morse: None,
        corollary_residual: None,
        passed: false,
        failure: None,
    };
    if !report.critical {
        report.failure = Some(format!("precondition: residual {residual_norm:e} is not critical"));
        return Ok(report);
    }
    let analysis = (|| -> Result<(SpectralReport, f64)> {
        let frame = tangent_frame(q)?;
        let spectrum = morse_data(q)?;
        let h = restricted_hessian_unchecked(q, &frame)?;
        let numeric = numeric_differential(q, &frame)?;
        let k = frame.dim();
        let predicted = (DMatrix::identity(k, k) - symmetrize(&numeric)) * au;
        let corollary = if k == 0 { 0.0 } else { (h - predicted).amax() };
        Ok((spectrum, corollary))
    })();
    match analysis {
        Err(e) => report.failure = Some(e.to_string()),
        Ok((spectrum, corollary)) => {
            let corollary_ok = corollary <= COROLLARY_TOL * au;
            report.corollary_residual = Some(corollary);
            report.index_by_determinant = spectrum.fixed_point_index;
            if spectrum.nondegenerate {
                report.index_by_morse = Some(spectrum.morse_sign());
            }
            let indices_ok = !spectrum.nondegenerate || report.index_by_determinant == report.index_by_morse;
            report.passed = corollary_ok && indices_ok;
            if !corollary_ok {
                report.failure = Some(format!("corollary residual {corollary:e} exceeds {:e}", COROLLARY_TOL * au));
            } else if !indices_ok {
                report.failure = Some(format!(
                    "index by determinant {:?} differs from (-1)^mu {:?}",
                    report.index_by_determinant, report.index_by_morse
                ));
            }
            report.spectrum = Some(spectrum);
        }
    }
    Ok(report)
}
