//! The homogeneous pair potential `U = sum_{i<j} m_i m_j / |q_i - q_j|^alpha`
//! with its mass-metric gradient and Euclidean second-derivative form.

use nalgebra::{DMatrix, DVector};

use crate::error::{CcError, Result};
use crate::geometry::Configuration;

/// Pairs closer than this are treated as collisions.
pub const COLLISION_GUARD: f64 = 1e-14;

/// Default step for the finite-difference oracles.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Value, mass gradient and Euclidean Hessian at one configuration.
#[derive(Debug, Clone)]
pub struct PotentialEvaluation {
    pub value: f64,
    pub mass_gradient: DVector<f64>,
    pub euclidean_hessian: DMatrix<f64>,
}

pub fn evaluate(q: &Configuration) -> Result<PotentialEvaluation> {
    Ok(PotentialEvaluation {
        value: potential(q)?,
        mass_gradient: mass_gradient(q)?,
        euclidean_hessian: euclidean_hessian(q)?,
    })
}

fn check_collisions(q: &Configuration) -> Result<()> {
    match q.closest_pair() {
        Some((i, j, distance)) if distance <= COLLISION_GUARD => {
            Err(CcError::Collision { i, j, distance })
        }
        _ => Ok(()),
    }
}

/// Visits every pair `i < j` with the difference `q_i - q_j` and its length.
fn for_each_pair(q: &Configuration, mut visit: impl FnMut(usize, usize, &[f64], f64)) {
    let n = q.system().n();
    let d = q.system().d();
    let mut diff = vec![0.0; d];
    for i in 0..n {
        for j in i + 1..n {
            for (b, x) in diff.iter_mut().enumerate() {
                *x = q.point(i)[b] - q.point(j)[b];
            }
            let r = diff.iter().map(|x| x * x).sum::<f64>().sqrt();
            visit(i, j, &diff, r);
        }
    }
}

pub(crate) fn potential_unchecked(q: &Configuration) -> f64 {
    let m = q.system().masses();
    let alpha = q.system().alpha();
    let mut u = 0.0;
    for_each_pair(q, |i, j, _, r| u += m[i] * m[j] * r.powf(-alpha));
    u
}

pub fn potential(q: &Configuration) -> Result<f64> {
    check_collisions(q)?;
    Ok(potential_unchecked(q))
}

/// Euclidean gradient `dU/dq`.
pub fn euclidean_gradient(q: &Configuration) -> Result<DVector<f64>> {
    check_collisions(q)?;
    let sys = q.system();
    let (m, d, alpha) = (sys.masses(), sys.d(), sys.alpha());
    let mut g = DVector::zeros(sys.dim());
    for_each_pair(q, |i, j, x, r| {
        let c = -alpha * m[i] * m[j] * r.powf(-alpha - 2.0);
        for b in 0..d {
            g[i * d + b] += c * x[b];
            g[j * d + b] -= c * x[b];
        }
    });
    Ok(g)
}

/// Gradient `dU#` with respect to the mass metric: component `i` is
/// `-alpha sum_{j != i} m_j (q_i - q_j) / |q_i - q_j|^(alpha + 2)`.
pub fn mass_gradient(q: &Configuration) -> Result<DVector<f64>> {
    let mut g = euclidean_gradient(q)?;
    let d = q.system().d();
    for (k, x) in g.iter_mut().enumerate() {
        *x /= q.system().masses()[k / d];
    }
    Ok(g)
}

/// The matrix of second derivatives `D^2 U`, assembled blockwise from the
/// pair terms `r^-alpha`, whose Hessian in the difference vector `x` is
/// `-alpha r^(-alpha-2) I + alpha (alpha + 2) r^(-alpha-4) x x^T`.
pub fn euclidean_hessian(q: &Configuration) -> Result<DMatrix<f64>> {
    check_collisions(q)?;
    let sys = q.system();
    let (m, d, alpha) = (sys.masses(), sys.d(), sys.alpha());
    let mut h = DMatrix::zeros(sys.dim(), sys.dim());
    for_each_pair(q, |i, j, x, r| {
        let mm = m[i] * m[j];
        let diag = -alpha * mm * r.powf(-alpha - 2.0);
        let outer = alpha * (alpha + 2.0) * mm * r.powf(-alpha - 4.0);
        for a in 0..d {
            for b in 0..d {
                let k = outer * x[a] * x[b] + if a == b { diag } else { 0.0 };
                h[(i * d + a, i * d + b)] += k;
                h[(j * d + a, j * d + b)] += k;
                h[(i * d + a, j * d + b)] -= k;
                h[(j * d + a, i * d + b)] -= k;
            }
        }
    });
    Ok(h)
}

/// `D^2 U(q)[v, w]`.
pub fn hessian_form(h: &DMatrix<f64>, v: &DVector<f64>, w: &DVector<f64>) -> f64 {
    v.dot(&(h * w))
}

/// Largest relative deviations between the analytic derivatives and central
/// differences of `U`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteDifferenceReport {
    /// `max |grad_fd - grad| / max |grad|`, comparing Euclidean gradients.
    pub gradient_deviation: f64,
    /// `max |hess_fd - hess| / max |hess|`.
    pub hessian_deviation: f64,
}

impl FiniteDifferenceReport {
    pub fn max_deviation(&self) -> f64 {
        self.gradient_deviation.max(self.hessian_deviation)
    }
}

/// Compares [`mass_gradient`] with central differences of [`potential`] and
/// [`euclidean_hessian`] with central differences of [`euclidean_gradient`],
/// both at step `h`.
pub fn finite_difference_check(q: &Configuration, h: f64) -> Result<FiniteDifferenceReport> {
    if !(h > 0.0) {
        return Err(CcError::Domain(format!("finite-difference step must be > 0, got {h}")));
    }
    let sys = q.system();
    let dim = sys.dim();
    let d = sys.d();
    let mut grad = mass_gradient(q)?;
    for (k, x) in grad.iter_mut().enumerate() {
        *x *= sys.masses()[k / d];
    }
    let hess = euclidean_hessian(q)?;

    let shifted = |k: usize, s: f64| -> Result<Configuration> {
        let mut c = q.coords().to_vec();
        c[k] += s;
        Configuration::from_raw(q.system_arc().clone(), c)
    };

    let mut grad_err: f64 = 0.0;
    let mut hess_err: f64 = 0.0;
    for k in 0..dim {
        let (plus, minus) = (shifted(k, h)?, shifted(k, -h)?);
        let fd = (potential(&plus)? - potential(&minus)?) / (2.0 * h);
        grad_err = grad_err.max((fd - grad[k]).abs());
        let column = (euclidean_gradient(&plus)? - euclidean_gradient(&minus)?) / (2.0 * h);
        hess_err = hess_err.max((column - hess.column(k)).amax());
    }

    Ok(FiniteDifferenceReport {
        gradient_deviation: grad_err / grad.amax().max(f64::MIN_POSITIVE),
        hessian_deviation: hess_err / hess.amax().max(f64::MIN_POSITIVE),
    })
}
