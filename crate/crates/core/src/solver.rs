//! Central configurations as solutions of `dU#(q) = lambda q` on the centered
//! unit ellipsoid, found by damped Newton iteration, and their isometry-class
//! keys.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{CcError, Result};
use crate::geometry::{center_and_normalize, orbit_generators, Configuration};
use crate::potential::{euclidean_gradient, euclidean_hessian, mass_gradient, potential};

/// Minimum pairwise distance accepted for a Newton starting point.
pub const START_MIN_DISTANCE: f64 = 1e-3;

/// Iterates closer than this to a collision abort the solve.
pub const ITERATE_MIN_DISTANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub tol_residual: f64,
    pub max_iter: usize,
    /// Step shrink factor of the backtracking line search.
    pub backtrack: f64,
    /// Armijo constant on the residual norm.
    pub armijo: f64,
    pub max_backtracks: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol_residual: 1e-12, max_iter: 200, backtrack: 0.5, armijo: 1e-4, max_backtracks: 40 }
    }
}

#[derive(Debug, Clone)]
pub struct CentralConfigCandidate {
    pub q: Configuration,
    pub lambda: f64,
    pub residual_norm: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Residual `dU#(q) - lambda q` with `lambda = -alpha U(q)`, and its mass norm.
pub fn cc_residual(q: &Configuration) -> Result<(DVector<f64>, f64)> {
    let lambda = -q.system().alpha() * potential(q)?;
    let mut r = mass_gradient(q)?;
    r.axpy(-lambda, &q.to_vector(), 1.0);
    let norm = q.system().norm(r.as_slice());
    Ok((r, norm))
}

/// Damped Newton on `{dU# - lambda q = 0 in Y, <q, q>_m = 1}` in the unknowns
/// `(q, lambda)`.
///
/// The system is written in mass-orthonormal coordinates `x` of the centered
/// subspace, where it reads `grad(x) - lambda x = 0`, `(|x|^2 - 1)/2 = 0`. The
/// Jacobian is singular along the rotation orbit at every solution, so each
/// step is the least-squares solution of the linearization augmented with the
/// gauge rows `<xi q, dq> = 0`. Iterates are re-centered and re-normalized and
/// the step length is chosen by Armijo backtracking on the residual norm.
///
/// Failure to converge is reported through `converged = false`; only invalid
/// starting points produce an error.
pub fn newton_solve(q0: &Configuration, opts: &NewtonOptions) -> Result<CentralConfigCandidate> {
    if !q0.is_centered_normalized(1e-10) {
        return Err(CcError::Precondition("newton start must be centered and normalized".into()));
    }
    if q0.min_distance() < START_MIN_DISTANCE {
        return Err(CcError::Precondition(format!(
            "newton start has bodies closer than {START_MIN_DISTANCE}"
        )));
    }
    let sys = q0.system_arc().clone();
    let alpha = sys.alpha();
    let basis = sys.centered_basis();
    let weighted_basis = {
        // M B, so that coordinates are x = (M B)^T v.
        let d = sys.d();
        let mut mb = basis.clone();
        for (k, mut row) in mb.row_iter_mut().enumerate() {
            row *= sys.masses()[k / d];
        }
        mb
    };
    let reduced = basis.ncols();

    let mut q = q0.clone();
    let (_, mut rnorm) = cc_residual(&q)?;
    let mut iterations = 0;

    let finish = |q: Configuration, rnorm: f64, iterations: usize, converged: bool| {
        let lambda = potential(&q).map_or(f64::NAN, |u| -alpha * u);
        CentralConfigCandidate { q, lambda, residual_norm: rnorm, converged, iterations }
    };

    while iterations < opts.max_iter {
        if rnorm <= opts.tol_residual {
            return Ok(finish(q, rnorm, iterations, true));
        }
        iterations += 1;

        let u = potential(&q)?;
        let lambda = -alpha * u;
        let x = weighted_basis.transpose() * q.to_vector();
        let g = basis.transpose() * euclidean_gradient(&q)?;
        let h = basis.transpose() * euclidean_hessian(&q)? * &basis;
        let gauges: Vec<DVector<f64>> = orbit_generators(&q)
            .into_iter()
            .map(|z| weighted_basis.transpose() * z)
            .collect();

        let rows = reduced + 1 + gauges.len();
        let mut jac = DMatrix::zeros(rows, reduced + 1);
        let mut rhs = DVector::zeros(rows);
        for a in 0..reduced {
            for b in 0..reduced {
                jac[(a, b)] = h[(a, b)] - if a == b { lambda } else { 0.0 };
            }
            jac[(a, reduced)] = -x[a];
            jac[(reduced, a)] = x[a];
            rhs[a] = -(g[a] - lambda * x[a]);
        }
        rhs[reduced] = -(x.dot(&x) - 1.0) / 2.0;
        for (k, z) in gauges.iter().enumerate() {
            let norm = z.norm();
            if norm > 0.0 {
                for b in 0..reduced {
                    jac[(reduced + 1 + k, b)] = z[b] / norm;
                }
            }
        }
        let svd = jac.svd(true, true);
        let cutoff = 1e-13 * svd.singular_values.max();
        let step = match svd.solve(&rhs, cutoff) {
            Ok(s) => s,
            Err(_) => return Ok(finish(q, rnorm, iterations, false)),
        };
        let dx = step.rows(0, reduced).into_owned();

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_backtracks {
            if let Some(trial) = trial_point(&q, &basis, &x, &dx, t) {
                if let Ok((_, trial_norm)) = cc_residual(&trial) {
                    if trial_norm <= (1.0 - opts.armijo * t) * rnorm {
                        accepted = Some((trial, trial_norm));
                        break;
                    }
                }
            }
            t *= opts.backtrack;
        }
        match accepted {
            Some((trial, trial_norm)) => {
                q = trial;
                rnorm = trial_norm;
            }
            None => return Ok(finish(q, rnorm, iterations, false)),
        }
    }
    let converged = rnorm <= opts.tol_residual;
    Ok(finish(q, rnorm, iterations, converged))
}

fn trial_point(
    q: &Configuration,
    basis: &DMatrix<f64>,
    x: &DVector<f64>,
    dx: &DVector<f64>,
    t: f64,
) -> Option<Configuration> {
    let coords = basis * (x + dx * t);
    let trial = Configuration::new(q.system_arc().clone(), coords.as_slice().to_vec()).ok()?;
    let trial = center_and_normalize(&trial).ok()?;
    (trial.min_distance() >= ITERATE_MIN_DISTANCE).then_some(trial)
}

/// Isometry group used to identify configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Group {
    /// Orientation-preserving rotations `SO(d)`.
    #[serde(rename = "SO")]
    Special,
    /// The full orthogonal group `O(d)`.
    #[serde(rename = "O")]
    Orthogonal,
}

impl std::str::FromStr for Group {
    type Err = CcError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "SO" | "so" => Ok(Group::Special),
            "O" | "o" => Ok(Group::Orthogonal),
            other => Err(CcError::Domain(format!("unknown group {other:?}, expected SO or O"))),
        }
    }
}

impl std::fmt::Display for Group {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Group::Special => "SO",
            Group::Orthogonal => "O",
        })
    }
}

/// Complete invariant of a labeled configuration modulo `SO(d)` or `O(d)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsometryClassKey {
    /// Pairwise distances in the order `(0,1), (0,2), ..., (n-2,n-1)`.
    pub distance_vector: Vec<f64>,
    /// Orientation when the points span `R^d`, otherwise 0. Always 0 under `O(d)`.
    pub chirality: i8,
}

/// Relative tolerance on distance vectors when matching classes.
pub const DEDUP_TOL: f64 = 1e-6;

/// Relative threshold below which a difference vector is treated as lying in
/// the span of the previously selected ones.
const SPAN_TOL: f64 = 1e-8;

impl IsometryClassKey {
    pub fn matches(&self, other: &Self, rel_tol: f64) -> bool {
        if self.chirality != other.chirality || self.distance_vector.len() != other.distance_vector.len() {
            return false;
        }
        let scale = self.distance_vector.iter().chain(&other.distance_vector).fold(0.0f64, |a, b| a.max(*b));
        self.distance_vector
            .iter()
            .zip(&other.distance_vector)
            .all(|(a, b)| (a - b).abs() <= rel_tol * scale)
    }
}

/// Orientation of `q`: with `u_j = q_j - q_0`, greedily select the first `d`
/// difference vectors that increase the rank and take the sign of their
/// determinant. Zero when the points do not span `R^d`.
pub fn chirality(q: &Configuration) -> i8 {
    let d = q.system().d();
    let n = q.system().n();
    let mut selected: Vec<DVector<f64>> = Vec::with_capacity(d);
    let mut orthonormal: Vec<DVector<f64>> = Vec::with_capacity(d);
    for j in 1..n {
        if selected.len() == d {
            break;
        }
        let u = DVector::from_iterator(d, q.point(j).iter().zip(q.point(0)).map(|(a, b)| a - b));
        let mut r = u.clone();
        for _ in 0..2 {
            for e in &orthonormal {
                let c = r.dot(e);
                r.axpy(-c, e, 1.0);
            }
        }
        let norm = r.norm();
        if norm > SPAN_TOL * u.norm() {
            orthonormal.push(r / norm);
            selected.push(u);
        }
    }
    if selected.len() < d {
        return 0;
    }
    let m = DMatrix::from_columns(&selected);
    let det = m.determinant();
    if det > 0.0 {
        1
    } else if det < 0.0 {
        -1
    } else {
        0
    }
}

/// Isometry class key of `q` for the chosen group.
pub fn classify(q: &Configuration, group: Group) -> IsometryClassKey {
    let n = q.system().n();
    let distance_vector = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| q.distance(i, j)).collect();
    let chirality = match group {
        Group::Special => chirality(q),
        Group::Orthogonal => 0,
    };
    IsometryClassKey { distance_vector, chirality }
}
