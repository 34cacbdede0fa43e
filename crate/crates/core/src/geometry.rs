//! Mass-metric linear algebra on the configuration space.
//!
//! Configurations of `n` points in `R^d` are stored as flat vectors of
//! length `n * d`, point `i` occupying the slice `[i * d, (i + 1) * d)`.
//! The inner product is the mass scalar product `<v, w> = sum_j m_j v_j . w_j`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{CcError, Result};

/// Relative singular-value cutoff used for every numerical rank decision.
pub const RANK_TOL: f64 = 1e-10;

/// Tolerance on the mass normalization `sum m_j = 1`.
pub const MASS_SUM_TOL: f64 = 1e-12;

/// An n-body problem instance: masses, ambient dimension and the
/// homogeneity exponent of the pair potential.
#[derive(Debug, Clone, PartialEq)]
pub struct MassSystem {
    d: usize,
    alpha: f64,
    masses: Vec<f64>,
}

impl MassSystem {
    /// Builds a system whose masses already sum to one.
    pub fn new(masses: Vec<f64>, d: usize, alpha: f64) -> Result<Self> {
        Self::validate(&masses, d, alpha)?;
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > MASS_SUM_TOL {
            return Err(CcError::InvalidSystem(format!(
                "masses sum to {total}, expected 1"
            )));
        }
        Ok(Self { d, alpha, masses })
    }

    /// Builds a system after rescaling the masses so that they sum to one.
    pub fn normalized(masses: Vec<f64>, d: usize, alpha: f64) -> Result<Self> {
        Self::validate(&masses, d, alpha)?;
        let total: f64 = masses.iter().sum();
        let masses = masses.into_iter().map(|m| m / total).collect();
        Ok(Self { d, alpha, masses })
    }

    pub fn equal_masses(n: usize, d: usize, alpha: f64) -> Result<Self> {
        Self::normalized(vec![1.0; n], d, alpha)
    }

    fn validate(masses: &[f64], d: usize, alpha: f64) -> Result<()> {
        if masses.len() < 2 {
            return Err(CcError::InvalidSystem(format!(
                "need at least 2 bodies, got {}",
                masses.len()
            )));
        }
        if d < 1 {
            return Err(CcError::InvalidSystem("dimension must be at least 1".into()));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(CcError::InvalidSystem(format!("alpha must be > 0, got {alpha}")));
        }
        if let Some((j, m)) = masses
            .iter()
            .enumerate()
            .find(|(_, m)| !(**m > 0.0 && m.is_finite()))
        {
            return Err(CcError::InvalidSystem(format!("mass {j} must be > 0, got {m}")));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.masses.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// Length `n * d` of a flat configuration vector.
    pub fn dim(&self) -> usize {
        self.n() * self.d
    }

    /// Dimension `d(n-1) - 1` of the tangent space to the centered ellipsoid.
    pub fn tangent_dim(&self) -> usize {
        self.d * (self.n() - 1) - 1
    }

    /// Dimension `d(d-1)/2` of the rotation group `SO(d)`.
    pub fn rotation_group_dim(&self) -> usize {
        self.d * (self.d - 1) / 2
    }

    /// Mass scalar product of two flat vectors.
    pub fn inner(&self, v: &[f64], w: &[f64]) -> Result<f64> {
        let dim = self.dim();
        for len in [v.len(), w.len()] {
            if len != dim {
                return Err(CcError::Dimension { expected: dim, got: len });
            }
        }
        Ok(self.inner_unchecked(v, w))
    }

    pub(crate) fn inner_unchecked(&self, v: &[f64], w: &[f64]) -> f64 {
        let d = self.d;
        self.masses
            .iter()
            .enumerate()
            .map(|(j, m)| {
                let r = j * d..(j + 1) * d;
                m * v[r.clone()].iter().zip(&w[r]).map(|(a, b)| a * b).sum::<f64>()
            })
            .sum()
    }

    pub(crate) fn norm(&self, v: &[f64]) -> f64 {
        self.inner_unchecked(v, v).sqrt()
    }

    /// Mass-weighted average `sum_j m_j v_j` of the points of a flat vector.
    pub(crate) fn weighted_mean(&self, v: &[f64]) -> Vec<f64> {
        let d = self.d;
        let mut c = vec![0.0; d];
        for (j, m) in self.masses.iter().enumerate() {
            for b in 0..d {
                c[b] += m * v[j * d + b];
            }
        }
        c
    }

    /// Subtracts the weighted mean from every point, in place.
    pub(crate) fn center_in_place(&self, v: &mut [f64]) {
        let c = self.weighted_mean(v);
        let d = self.d;
        for j in 0..self.n() {
            for b in 0..d {
                v[j * d + b] -= c[b];
            }
        }
    }

    /// Mass-orthonormal basis of the centered subspace `Y`, as the columns of
    /// an `(n d) x ((n-1) d)` matrix.
    pub fn centered_basis(&self) -> DMatrix<f64> {
        let (n, d) = (self.n(), self.d);
        // Mass-orthonormal basis of {u in R^n : sum m_i u_i = 0}.
        let mut scalar: Vec<Vec<f64>> = Vec::with_capacity(n - 1);
        for k in 0..n {
            let mut u: Vec<f64> = (0..n).map(|i| if i == k { 1.0 } else { 0.0 } - self.masses[k]).collect();
            for _ in 0..2 {
                for b in &scalar {
                    let c: f64 = (0..n).map(|i| self.masses[i] * u[i] * b[i]).sum();
                    for i in 0..n {
                        u[i] -= c * b[i];
                    }
                }
            }
            let norm = (0..n).map(|i| self.masses[i] * u[i] * u[i]).sum::<f64>().sqrt();
            if norm > 1e-8 && scalar.len() < n - 1 {
                scalar.push(u.into_iter().map(|x| x / norm).collect());
            }
        }
        let mut basis = DMatrix::zeros(n * d, (n - 1) * d);
        for (k, u) in scalar.iter().enumerate() {
            for b in 0..d {
                for i in 0..n {
                    basis[(i * d + b, k * d + b)] = u[i];
                }
            }
        }
        basis
    }
}

/// `n` points in `R^d` attached to a [`MassSystem`]. No two points coincide.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    system: Arc<MassSystem>,
    coords: Vec<f64>,
}

impl Configuration {
    pub fn new(system: Arc<MassSystem>, coords: Vec<f64>) -> Result<Self> {
        let q = Self::from_raw(system, coords)?;
        if let Some((i, j, distance)) = q.closest_pair() {
            if distance == 0.0 {
                return Err(CcError::Collision { i, j, distance });
            }
        }
        Ok(q)
    }

    /// Like [`Configuration::new`] but takes the points as rows.
    pub fn from_points(system: Arc<MassSystem>, points: &[Vec<f64>]) -> Result<Self> {
        if points.len() != system.n() {
            return Err(CcError::Dimension { expected: system.n(), got: points.len() });
        }
        let mut coords = Vec::with_capacity(system.dim());
        for p in points {
            if p.len() != system.d() {
                return Err(CcError::Dimension { expected: system.d(), got: p.len() });
            }
            coords.extend_from_slice(p);
        }
        Self::new(system, coords)
    }

    /// Length-checked constructor that tolerates collisions. Used for
    /// intermediate points such as finite-difference probes.
    pub(crate) fn from_raw(system: Arc<MassSystem>, coords: Vec<f64>) -> Result<Self> {
        if coords.len() != system.dim() {
            return Err(CcError::Dimension { expected: system.dim(), got: coords.len() });
        }
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(CcError::DegenerateInput("non-finite coordinate".into()));
        }
        Ok(Self { system, coords })
    }

    pub fn system(&self) -> &MassSystem {
        &self.system
    }

    pub fn system_arc(&self) -> &Arc<MassSystem> {
        &self.system
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.coords)
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let d = self.system.d();
        &self.coords[i * d..(i + 1) * d]
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.system.n()).map(|i| self.point(i).to_vec()).collect()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.point(i)
            .iter()
            .zip(self.point(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Pair `(i, j, distance)` with the smallest Euclidean distance.
    pub fn closest_pair(&self) -> Option<(usize, usize, f64)> {
        let n = self.system.n();
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..n {
            for j in i + 1..n {
                let r = self.distance(i, j);
                if best.is_none_or(|(_, _, b)| r < b) {
                    best = Some((i, j, r));
                }
            }
        }
        best
    }

    pub fn min_distance(&self) -> f64 {
        self.closest_pair().map_or(f64::INFINITY, |(_, _, r)| r)
    }

    /// Mass-metric norm `||q||_m`.
    pub fn mass_norm(&self) -> f64 {
        self.system.norm(&self.coords)
    }

    /// Applies `q_i -> g q_i + t` to every point.
    pub fn transformed(&self, g: &DMatrix<f64>, t: &[f64]) -> Result<Self> {
        let d = self.system.d();
        if g.nrows() != d || g.ncols() != d {
            return Err(CcError::Dimension { expected: d, got: g.nrows() });
        }
        if t.len() != d {
            return Err(CcError::Dimension { expected: d, got: t.len() });
        }
        Self::new(self.system.clone(), apply_blockwise(g, &self.coords, d, Some(t)))
    }

    pub(crate) fn with_coords(&self, coords: Vec<f64>) -> Result<Self> {
        Self::new(self.system.clone(), coords)
    }

    pub(crate) fn is_centered_normalized(&self, tol: f64) -> bool {
        let c = center_of_mass(self);
        c.iter().all(|x| x.abs() <= tol) && (self.mass_norm() - 1.0).abs() <= tol
    }
}

/// Applies the `d x d` matrix `g` to every point of a flat vector, optionally
/// adding a translation.
pub fn apply_blockwise(g: &DMatrix<f64>, v: &[f64], d: usize, t: Option<&[f64]>) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for (chunk_in, chunk_out) in v.chunks(d).zip(out.chunks_mut(d)) {
        for a in 0..d {
            let mut s = t.map_or(0.0, |t| t[a]);
            for b in 0..d {
                s += g[(a, b)] * chunk_in[b];
            }
            chunk_out[a] = s;
        }
    }
    out
}

/// Mass scalar product `sum_j m_j v_j . w_j`.
pub fn mass_inner(v: &[f64], w: &[f64], sys: &MassSystem) -> Result<f64> {
    sys.inner(v, w)
}

/// Center of mass `q_0 = sum_j m_j q_j`.
pub fn center_of_mass(q: &Configuration) -> Vec<f64> {
    q.system.weighted_mean(&q.coords)
}

/// Translates `q` so that its center of mass is the origin.
pub fn project_center(q: &Configuration) -> Result<Configuration> {
    let mut coords = q.coords.clone();
    q.system.center_in_place(&mut coords);
    q.with_coords(coords)
}

/// Rescales `q` onto the inertia ellipsoid `<q, q>_m = 1`.
pub fn normalize_to_ellipsoid(q: &Configuration) -> Result<Configuration> {
    let norm = q.mass_norm();
    if !(norm > 0.0) {
        return Err(CcError::DegenerateInput("zero configuration has no direction".into()));
    }
    q.with_coords(q.coords.iter().map(|x| x / norm).collect())
}

/// Centers and normalizes in one step.
pub fn center_and_normalize(q: &Configuration) -> Result<Configuration> {
    normalize_to_ellipsoid(&project_center(q)?)
}

/// Basis `E_ab - E_ba`, `a < b`, of the Lie algebra `so(d)`, as index pairs.
fn so_generators(d: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..d).flat_map(move |a| (a + 1..d).map(move |b| (a, b)))
}

/// The infinitesimal rotation `xi q` for `xi = E_ab - E_ba`.
fn generator_action(q: &[f64], d: usize, (a, b): (usize, usize)) -> Vec<f64> {
    let mut out = vec![0.0; q.len()];
    for (p, o) in q.chunks(d).zip(out.chunks_mut(d)) {
        o[a] = p[b];
        o[b] = -p[a];
    }
    out
}

/// All rotation-orbit directions `xi_a q` for the standard basis of `so(d)`.
pub fn orbit_generators(q: &Configuration) -> Vec<DVector<f64>> {
    let d = q.system.d();
    so_generators(d)
        .map(|g| DVector::from_vec(generator_action(&q.coords, d, g)))
        .collect()
}

/// Mass-orthonormal basis of the span of the orbit generators, discarding
/// directions whose singular value is below `RANK_TOL` times the largest.
fn orbit_basis(q: &Configuration) -> Vec<DVector<f64>> {
    let sys = &q.system;
    let d = sys.d();
    let generators = orbit_generators(q);
    if generators.is_empty() {
        return Vec::new();
    }
    let sqrt_m: Vec<f64> = (0..sys.dim()).map(|k| sys.masses[k / d].sqrt()).collect();
    let mut weighted = DMatrix::zeros(sys.dim(), generators.len());
    for (c, g) in generators.iter().enumerate() {
        for k in 0..sys.dim() {
            weighted[(k, c)] = sqrt_m[k] * g[k];
        }
    }
    let svd = weighted.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let largest = svd.singular_values.max();
    if !(largest > 0.0) {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    order
        .into_iter()
        .filter(|&i| svd.singular_values[i] >= RANK_TOL * largest)
        .map(|i| DVector::from_fn(sys.dim(), |k, _| u[(k, i)] / sqrt_m[k]))
        .collect()
}

/// Rank of the span of `{xi q : xi in so(d)}`.
pub fn rotation_orbit_dimension(q: &Configuration) -> usize {
    orbit_basis(q).len()
}

/// How the complement of the orbit directions is completed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Completion {
    /// Gram-Schmidt over the standard coordinate vectors, in order.
    #[default]
    Standard,
    /// Gram-Schmidt over Gaussian random vectors drawn from the given seed.
    Random(u64),
}

/// Mass-orthonormal basis of the tangent space to the centered inertia
/// ellipsoid at `point`, split into rotation-orbit directions followed by
/// their complement.
#[derive(Debug, Clone)]
pub struct TangentFrame {
    point: Configuration,
    orbit_basis: Vec<DVector<f64>>,
    complement_basis: Vec<DVector<f64>>,
}

impl TangentFrame {
    pub fn point(&self) -> &Configuration {
        &self.point
    }

    pub fn orbit_dim(&self) -> usize {
        self.orbit_basis.len()
    }

    pub fn dim(&self) -> usize {
        self.orbit_basis.len() + self.complement_basis.len()
    }

    pub fn orbit_basis(&self) -> &[DVector<f64>] {
        &self.orbit_basis
    }

    pub fn complement_basis(&self) -> &[DVector<f64>] {
        &self.complement_basis
    }

    /// Orbit directions first, then the complement.
    pub fn basis(&self) -> impl Iterator<Item = &DVector<f64>> {
        self.orbit_basis.iter().chain(&self.complement_basis)
    }

    /// Largest deviation of the Gram matrix from the identity.
    pub fn gram_error(&self) -> f64 {
        let sys = self.point.system();
        let basis: Vec<_> = self.basis().collect();
        let mut worst: f64 = 0.0;
        for (a, va) in basis.iter().enumerate() {
            for (b, vb) in basis.iter().enumerate() {
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((sys.inner_unchecked(va.as_slice(), vb.as_slice()) - target).abs());
            }
        }
        worst
    }

    /// Coordinates `<v, e_a>_m` of `v` in the frame.
    pub fn coordinates(&self, v: &[f64]) -> DVector<f64> {
        let sys = self.point.system();
        DVector::from_iterator(self.dim(), self.basis().map(|e| sys.inner_unchecked(v, e.as_slice())))
    }
}

/// Tangent frame with the standard completion.
pub fn tangent_frame(q: &Configuration) -> Result<TangentFrame> {
    tangent_frame_with(q, Completion::Standard)
}

pub fn tangent_frame_with(q: &Configuration, completion: Completion) -> Result<TangentFrame> {
    if !q.is_centered_normalized(1e-10) {
        return Err(CcError::Precondition(
            "tangent frame requires a centered configuration on the unit ellipsoid".into(),
        ));
    }
    let sys = q.system.clone();
    let dim = sys.dim();
    let target = sys.tangent_dim();
    let orbit = orbit_basis(q);
    let qv = q.to_vector();

    let mut accepted: Vec<DVector<f64>> = Vec::with_capacity(target);
    let mut rng = match completion {
        Completion::Random(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        Completion::Standard => None,
    };
    let mut k = 0usize;
    // Each standard vector is tried once; random draws get a generous budget.
    let budget = match completion {
        Completion::Standard => dim,
        Completion::Random(_) => 50 * dim + 100,
    };
    while orbit.len() + accepted.len() < target && k < budget {
        let mut v = match rng.as_mut() {
            None => DVector::from_fn(dim, |i, _| if i == k { 1.0 } else { 0.0 }),
            Some(rng) => DVector::from_fn(dim, |_, _| rng.sample(StandardNormal)),
        };
        k += 1;
        sys.center_in_place(v.as_mut_slice());
        let initial = sys.norm(v.as_slice());
        if initial == 0.0 {
            continue;
        }
        // Modified Gram-Schmidt with one reorthogonalization pass.
        for _ in 0..2 {
            for e in std::iter::once(&qv).chain(&orbit).chain(&accepted) {
                let c = sys.inner_unchecked(v.as_slice(), e.as_slice());
                v.axpy(-c, e, 1.0);
            }
        }
        let norm = sys.norm(v.as_slice());
        if norm > 1e-6 * initial {
            accepted.push(v / norm);
        }
    }
    if orbit.len() + accepted.len() != target {
        return Err(CcError::DegenerateInput(format!(
            "could only complete {} of {} tangent directions",
            orbit.len() + accepted.len(),
            target
        )));
    }
    Ok(TangentFrame { point: q.clone(), orbit_basis: orbit, complement_basis: accepted })
}

/// Haar-distributed random element of `O(d)`, or of `SO(d)` when `special`.
pub fn random_orthogonal<R: Rng + ?Sized>(d: usize, rng: &mut R, special: bool) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = a.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if special && q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    q
}
