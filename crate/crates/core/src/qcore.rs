//! Dense complex linear algebra and the quantum primitives built on it.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::Error;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const IDEMPOTENT_TOL: f64 = 1e-9;
pub const ORTHO_TOL: f64 = 1e-9;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Largest entry modulus; this is the `||.||_inf` used throughout.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn identity(d: usize) -> CMat {
    CMat::identity(d, d)
}

/// Kronecker product.
pub fn tensor(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Block-diagonal direct sum.
pub fn dsum(a: &CMat, b: &CMat) -> CMat {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = CMat::zeros(ra + rb, ca + cb);
    out.view_mut((0, 0), (ra, ca)).copy_from(a);
    out.view_mut((ra, ca), (rb, cb)).copy_from(b);
    out
}

/// Entrywise complex conjugate.
pub fn conj(a: &CMat) -> CMat {
    a.map(|z| z.conj())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ket {
    components: CVec,
}

impl Ket {
    pub fn new(components: Vec<C64>) -> Result<Ket, Error> {
        if components.is_empty() {
            return Err(Error::InvalidInput("ket must have dimension >= 1".into()));
        }
        if components.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("ket has non-finite components".into()));
        }
        if components.iter().all(|z| z.norm() == 0.0) {
            return Err(Error::InvalidInput("zero vector".into()));
        }
        Ok(Ket {
            components: CVec::from_vec(components),
        })
    }

    pub fn from_real(v: &[f64]) -> Result<Ket, Error> {
        Ket::new(v.iter().map(|&x| c(x, 0.0)).collect())
    }

    pub fn basis(d: usize, i: usize) -> Ket {
        let mut v = vec![C64::default(); d];
        v[i] = c(1.0, 0.0);
        Ket::new(v).expect("basis vector is nonzero")
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &CVec {
        &self.components
    }

    pub fn normalized(&self) -> CVec {
        let n = self.components.norm();
        &self.components / c(n, 0.0)
    }

    /// `<self|other>` of the normalized vectors.
    pub fn overlap(&self, other: &Ket) -> C64 {
        self.normalized().dotc(&other.normalized())
    }

    pub fn conj(&self) -> Ket {
        Ket {
            components: self.components.map(|z| z.conj()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Projector {
    matrix: CMat,
    rank: usize,
}

impl Projector {
    pub fn new(matrix: CMat) -> Result<Projector, Error> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::InvalidInput("projector must be a nonempty square matrix".into()));
        }
        let herm = max_abs(&(&matrix - matrix.adjoint()));
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidInput(format!("not Hermitian (defect {herm:.2e})")));
        }
        let idem = max_abs(&(&matrix * &matrix - &matrix));
        if idem > IDEMPOTENT_TOL {
            return Err(Error::InvalidInput(format!("not idempotent (defect {idem:.2e})")));
        }
        let tr = matrix.trace().re;
        let rank = tr.round();
        if (tr - rank).abs() > IDEMPOTENT_TOL || rank < 0.0 {
            return Err(Error::InvalidInput(format!("trace {tr} is not an integer")));
        }
        Ok(Projector {
            matrix,
            rank: rank as usize,
        })
    }

    pub fn zero(d: usize) -> Projector {
        Projector {
            matrix: CMat::zeros(d, d),
            rank: 0,
        }
    }

    pub fn identity(d: usize) -> Projector {
        Projector {
            matrix: identity(d),
            rank: d,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn conj(&self) -> Projector {
        Projector {
            matrix: conj(&self.matrix),
            rank: self.rank,
        }
    }

    /// `U P U^dagger` for a unitary `U`.
    pub fn conjugate_by(&self, u: &CMat) -> Projector {
        let m = u * &self.matrix * u.adjoint();
        Projector {
            matrix: (&m + m.adjoint()) * c(0.5, 0.0),
            rank: self.rank,
        }
    }

    pub fn complement(&self) -> Projector {
        Projector {
            matrix: identity(self.dim()) - &self.matrix,
            rank: self.dim() - self.rank,
        }
    }

    /// Orthonormal basis of the range, as columns.
    pub fn range_basis(&self) -> CMat {
        let (vals, vecs) = eig_hermitian(&self.matrix).expect("projectors are Hermitian");
        let d = self.dim();
        let cols: Vec<usize> = (0..d).filter(|&i| vals[i] > 0.5).collect();
        CMat::from_fn(d, cols.len(), |r, k| vecs[(r, cols[k])])
    }
}

pub fn projector_from_ket(k: &Ket) -> Projector {
    let v = k.normalized();
    let m = &v * v.adjoint();
    Projector { matrix: m, rank: 1 }
}

pub fn are_orthogonal(p: &Projector, q: &Projector, tol: f64) -> Result<bool, Error> {
    if p.dim() != q.dim() {
        return Err(Error::DimMismatch {
            expected: p.dim(),
            found: q.dim(),
        });
    }
    Ok(max_abs(&(p.matrix() * q.matrix())) <= tol)
}

/// `sum_i |ii> / sqrt(d)`.
pub fn max_entangled(d: usize) -> Result<Ket, Error> {
    if d < 2 {
        return Err(Error::InvalidInput(format!("maximally entangled state needs d >= 2, got {d}")));
    }
    let mut v = vec![C64::default(); d * d];
    let a = 1.0 / (d as f64).sqrt();
    for i in 0..d {
        v[i * d + i] = c(a, 0.0);
    }
    Ket::new(v)
}

#[derive(Clone, Debug)]
pub struct DensityState {
    matrix: CMat,
    min_eigenvalue: f64,
}

impl DensityState {
    pub fn new(matrix: CMat) -> Result<DensityState, Error> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::InvalidInput("state must be a nonempty square matrix".into()));
        }
        let herm = max_abs(&(&matrix - matrix.adjoint()));
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidInput(format!("state not Hermitian (defect {herm:.2e})")));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > HERMITIAN_TOL || tr.im.abs() > HERMITIAN_TOL {
            return Err(Error::InvalidInput(format!("state trace {tr} != 1")));
        }
        let m = (&matrix + matrix.adjoint()) * c(0.5, 0.0);
        let (vals, _) = eig_hermitian(&m)?;
        let min_eigenvalue = vals[0];
        if min_eigenvalue < -HERMITIAN_TOL {
            return Err(Error::InvalidInput(format!(
                "state not positive semidefinite (eigenvalue {min_eigenvalue:.2e})"
            )));
        }
        Ok(DensityState {
            matrix: m,
            min_eigenvalue,
        })
    }

    pub fn pure(k: &Ket) -> DensityState {
        let v = k.normalized();
        DensityState::new(&v * v.adjoint()).expect("pure states are valid")
    }

    pub fn maximally_mixed(d: usize) -> DensityState {
        DensityState {
            matrix: identity(d) / c(d as f64, 0.0),
            min_eigenvalue: 1.0 / d as f64,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    pub fn is_full_rank(&self) -> bool {
        self.min_eigenvalue > 1e-9
    }

    pub fn expect(&self, op: &CMat) -> f64 {
        (&self.matrix * op).trace().re
    }

    /// Mix with the maximally mixed state: `(1 - p) rho + p 1/d`.
    pub fn depolarize(&self, p: f64) -> DensityState {
        let d = self.dim();
        let m = &self.matrix * c(1.0 - p, 0.0) + identity(d) * c(p / d as f64, 0.0);
        DensityState {
            matrix: m,
            min_eigenvalue: (1.0 - p) * self.min_eigenvalue + p / d as f64,
        }
    }

    pub fn conjugate_by(&self, u: &CMat) -> DensityState {
        let m = u * &self.matrix * u.adjoint();
        DensityState::new((&m + m.adjoint()) * c(0.5, 0.0)).expect("unitary conjugation keeps a state valid")
    }
}

/// Lüders update for outcome 1 of `p`: probability and post-measurement state.
pub fn luders(rho: &DensityState, p: &Projector) -> Result<(f64, DensityState), Error> {
    if rho.dim() != p.dim() {
        return Err(Error::DimMismatch {
            expected: rho.dim(),
            found: p.dim(),
        });
    }
    let prob = rho.expect(p.matrix());
    if prob <= 1e-12 {
        return Err(Error::OutcomeImpossible { prob });
    }
    let post = p.matrix() * rho.matrix() * p.matrix() / c(prob, 0.0);
    let post = (&post + post.adjoint()) * c(0.5, 0.0);
    let (vals, _) = eig_hermitian(&post)?;
    Ok((
        prob,
        DensityState {
            matrix: post,
            min_eigenvalue: vals[0],
        },
    ))
}

/// Probability of outcome 1 for `p` followed by outcome 1 for `q`:
/// `tr(q p rho p)`. Defined (as zero) even when the first outcome is impossible.
pub fn sequential_prob(rho: &CMat, p: &CMat, q: &CMat) -> f64 {
    (q * p * rho * p).trace().re
}

/// Eigenvalues in ascending order with matching eigenvector columns.
pub fn eig_hermitian(m: &CMat) -> Result<(Vec<f64>, CMat), Error> {
    if !m.is_square() {
        return Err(Error::InvalidInput("eigendecomposition of a non-square matrix".into()));
    }
    let scale = max_abs(m).max(1.0);
    let herm = max_abs(&(m - m.adjoint()));
    if herm > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian { defect: herm });
    }
    let n = m.nrows();
    let sym = (m + m.adjoint()) * c(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = CMat::from_fn(n, n, |r, k| eig.eigenvectors[(r, order[k])]);
    Ok((vals, vecs))
}

pub fn lambda_min(m: &CMat) -> f64 {
    eig_hermitian(m).map(|(v, _)| v[0]).unwrap_or(f64::NAN)
}

pub fn lambda_max(m: &CMat) -> f64 {
    eig_hermitian(m)
        .map(|(v, _)| *v.last().unwrap())
        .unwrap_or(f64::NAN)
}

/// Number of eigenvalues above `thr`.
pub fn numeric_rank(m: &CMat, thr: f64) -> usize {
    match eig_hermitian(m) {
        Ok((v, _)) => v.iter().filter(|&&x| x > thr).count(),
        Err(_) => {
            let sv = m.clone().singular_values();
            sv.iter().filter(|&&x| x > thr).count()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateKind {
    Pure,
    FullRank,
    MaxMixed,
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_c<R: Rng>(rng: &mut R) -> C64 {
    let a: f64 = rng.sample(StandardNormal);
    let b: f64 = rng.sample(StandardNormal);
    c(a, b)
}

pub fn ginibre<R: Rng>(rng: &mut R, d: usize) -> CMat {
    CMat::from_fn(d, d, |_, _| gaussian_c(rng))
}

pub fn rand_state(seed: u64, kind: StateKind, dim: usize) -> DensityState {
    let mut r = rng(seed);
    rand_state_with(&mut r, kind, dim)
}

pub fn rand_state_with<R: Rng>(r: &mut R, kind: StateKind, dim: usize) -> DensityState {
    match kind {
        StateKind::MaxMixed => DensityState::maximally_mixed(dim),
        StateKind::Pure => {
            let v: Vec<C64> = (0..dim).map(|_| gaussian_c(r)).collect();
            DensityState::pure(&Ket::new(v).expect("gaussian vector is nonzero"))
        }
        StateKind::FullRank => {
            let g = ginibre(r, dim);
            let m = &g * g.adjoint();
            let tr = m.trace().re;
            let m = m / c(tr, 0.0);
            // Mixing weight large enough that lambda_min >= delta / d >= 1e-4.
            let delta = (0.05f64).max(2e-4 * dim as f64).min(1.0);
            let m = m * c(1.0 - delta, 0.0) + identity(dim) * c(delta / dim as f64, 0.0);
            DensityState::new((&m + m.adjoint()) * c(0.5, 0.0)).expect("mixture is a valid state")
        }
    }
}

/// Haar-distributed unitary from the QR decomposition of a Ginibre matrix.
pub fn rand_unitary<R: Rng>(r: &mut R, d: usize) -> CMat {
    let g = ginibre(r, d);
    let qr = g.qr();
    let q = qr.q();
    let rr = qr.r();
    let mut u = q;
    for j in 0..d {
        let z = rr[(j, j)];
        let ph = if z.norm() > 0.0 { z / z.norm() } else { c(1.0, 0.0) };
        let mut col = u.column_mut(j);
        col *= ph;
    }
    u
}

/// Hermitian matrix with spectral norm 1.
pub fn rand_hermitian_unit<R: Rng>(r: &mut R, d: usize) -> CMat {
    let g = ginibre(r, d);
    let h = (&g + g.adjoint()) * c(0.5, 0.0);
    let (vals, _) = eig_hermitian(&h).expect("symmetrized matrix is Hermitian");
    let n = vals.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
    h / c(n, 0.0)
}

/// `exp(i t H)` for Hermitian `H`.
pub fn expi_hermitian(h: &CMat, t: f64) -> CMat {
    let (vals, vecs) = eig_hermitian(h).expect("generator must be Hermitian");
    let n = vals.len();
    let d = CMat::from_diagonal(&CVec::from_iterator(
        n,
        vals.iter().map(|&l| C64::from_polar(1.0, t * l)),
    ));
    &vecs * d * vecs.adjoint()
}

/// Partial trace over the second factor of `C^da (x) C^db`.
pub fn partial_trace_b(m: &CMat, da: usize, db: usize) -> CMat {
    CMat::from_fn(da, da, |i, j| {
        (0..db).map(|k| m[(i * db + k, j * db + k)]).sum()
    })
}

pub fn partial_trace_a(m: &CMat, da: usize, db: usize) -> CMat {
    CMat::from_fn(db, db, |i, j| {
        (0..da).map(|k| m[(k * db + i, k * db + j)]).sum()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ket_r(v: &[f64]) -> Ket {
        Ket::from_real(v).unwrap()
    }

    #[test]
    fn basis_projector_is_diagonal_unit() {
        let p = projector_from_ket(&Ket::basis(3, 0));
        let mut e = CMat::zeros(3, 3);
        e[(0, 0)] = c(1.0, 0.0);
        assert!(max_abs(&(p.matrix() - e)) < 1e-15);
    }

    #[test]
    fn half_projector_entries() {
        let p = projector_from_ket(&ket_r(&[0.0, 1.0, -1.0]));
        let m = p.matrix();
        assert!((m[(1, 1)].re - 0.5).abs() < 1e-15);
        assert!((m[(2, 2)].re - 0.5).abs() < 1e-15);
        assert!((m[(1, 2)].re + 0.5).abs() < 1e-15);
        assert!((m[(2, 1)].re + 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_ket_rejected() {
        assert!(Ket::from_real(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn self_is_not_orthogonal() {
        let p = projector_from_ket(&ket_r(&[1.0, 1.0, 0.0]));
        assert!(!are_orthogonal(&p, &p, 1e-9).unwrap());
        let q = projector_from_ket(&ket_r(&[1.0, -1.0, 0.0]));
        assert!(are_orthogonal(&p, &q, 1e-9).unwrap());
        let r = projector_from_ket(&ket_r(&[1.0, 0.0]));
        assert!(are_orthogonal(&p, &r, 1e-9).is_err());
    }

    #[test]
    fn dsum_and_tensor() {
        assert_eq!(dsum(&identity(2), &identity(3)), identity(5));
        let p = projector_from_ket(&ket_r(&[1.0, 2.0, 0.0]));
        let t = tensor(p.matrix(), &identity(2));
        assert_eq!(numeric_rank(&t, 1e-9), 2);
        let real = CMat::from_fn(2, 2, |i, j| c((i + 2 * j) as f64, 0.0));
        assert_eq!(conj(&real), real);
    }

    #[test]
    fn max_entangled_small() {
        assert!(max_entangled(1).is_err());
        let k = max_entangled(2).unwrap();
        let s = 1.0 / 2f64.sqrt();
        let v = k.components();
        assert!((v[0].re - s).abs() < 1e-15 && (v[3].re - s).abs() < 1e-15);
        assert!(v[1].norm() == 0.0 && v[2].norm() == 0.0);
        let rho = DensityState::pure(&max_entangled(3).unwrap());
        let ra = partial_trace_b(rho.matrix(), 3, 3);
        let rb = partial_trace_a(rho.matrix(), 3, 3);
        let target = identity(3) / c(3.0, 0.0);
        assert!(max_abs(&(ra - &target)) < 1e-14);
        assert!(max_abs(&(rb - &target)) < 1e-14);
    }

    #[test]
    fn transpose_trick() {
        let mut r = rng(11);
        for d in 2..5 {
            let a = ginibre(&mut r, d);
            let phi = max_entangled(d).unwrap().components().clone();
            let lhs = tensor(&a, &identity(d)) * &phi;
            let rhs = tensor(&identity(d), &a.transpose()) * &phi;
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn luders_cases() {
        let p = projector_from_ket(&ket_r(&[1.0, 1.0, 0.0]));
        let rho = DensityState::new(p.matrix().clone()).unwrap();
        let (pr, post) = luders(&rho, &p).unwrap();
        assert!((pr - 1.0).abs() < 1e-14);
        assert!(max_abs(&(post.matrix() - rho.matrix())) < 1e-14);

        let mm = DensityState::maximally_mixed(4);
        let q = projector_from_ket(&ket_r(&[1.0, 2.0, 3.0, 4.0]));
        let (pr, post) = luders(&mm, &q).unwrap();
        assert!((pr - 0.25).abs() < 1e-14);
        let q2 = projector_from_ket(&ket_r(&[2.0, -1.0, 0.0, 0.0]));
        match luders(&post, &q2) {
            Err(Error::OutcomeImpossible { prob }) => assert!(prob.abs() < 1e-12),
            other => panic!("expected impossible outcome, got {other:?}"),
        }
    }

    #[test]
    fn eig_sorted() {
        let m = CMat::from_diagonal(&CVec::from_vec(vec![c(3.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)]));
        let (v, _) = eig_hermitian(&m).unwrap();
        assert_eq!(v, vec![1.0, 2.0, 3.0]);
        let bad = CMat::from_fn(2, 2, |i, j| c((i * 2 + j) as f64, 0.0));
        assert!(eig_hermitian(&bad).is_err());
    }

    #[test]
    fn rand_state_contracts() {
        let s = rand_state(7, StateKind::FullRank, 3);
        assert!(s.min_eigenvalue() >= 1e-4);
        assert!((s.matrix().trace().re - 1.0).abs() < 1e-12);
        assert!(s.is_full_rank());
        let a = rand_state(7, StateKind::Pure, 4);
        let b = rand_state(7, StateKind::Pure, 4);
        assert_eq!(a.matrix(), b.matrix());
        assert!(!a.is_full_rank());
    }

    #[test]
    fn unitary_is_unitary() {
        let mut r = rng(3);
        let u = rand_unitary(&mut r, 5);
        assert!(max_abs(&(&u * u.adjoint() - identity(5))) < 1e-12);
        let h = rand_hermitian_unit(&mut r, 4);
        let e = expi_hermitian(&h, 0.3);
        assert!(max_abs(&(&e * e.adjoint() - identity(4))) < 1e-12);
    }

    fn arb_ket(d: usize) -> impl Strategy<Value = Ket> {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), d)
            .prop_filter("nonzero", |v| v.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3))
            .prop_map(|v| Ket::new(v.into_iter().map(|(a, b)| c(a, b)).collect()).unwrap())
    }

    proptest! {
        #[test]
        fn projector_properties(k in (2usize..6).prop_flat_map(arb_ket)) {
            let p = projector_from_ket(&k);
            let m = p.matrix();
            prop_assert!(max_abs(&(m * m - m)) <= 1e-9);
            let (vals, vecs) = eig_hermitian(m).unwrap();
            for (i, v) in vals.iter().enumerate() {
                prop_assert!(v.abs() < 1e-9 || (v - 1.0).abs() < 1e-9);
                let col = vecs.column(i);
                prop_assert!((m * col - col * c(*v, 0.0)).norm() <= 1e-11 * 2.0);
            }
            // conj commutes with projector_from_ket
            let lhs = projector_from_ket(&k.conj());
            prop_assert!(max_abs(&(lhs.matrix() - conj(m))) < 1e-14);
            prop_assert!(Projector::new(m.clone()).is_ok());
        }

        #[test]
        fn luders_over_basis_sums_to_one(seed in 0u64..1000, d in 2usize..6) {
            let mut r = rng(seed);
            let u = rand_unitary(&mut r, d);
            let rho = rand_state_with(&mut r, StateKind::FullRank, d);
            let mut total = 0.0;
            for j in 0..d {
                let col: Vec<C64> = u.column(j).iter().copied().collect();
                let p = projector_from_ket(&Ket::new(col).unwrap());
                total += luders(&rho, &p).map(|x| x.0).unwrap_or(0.0);
            }
            prop_assert!((total - 1.0).abs() <= 1e-10);
        }
    }
}
