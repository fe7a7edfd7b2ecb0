//! Homogeneous self-dual interior point method with Nesterov-Todd scaling and a
//! Mehrotra predictor-corrector step.
//!
//! The embedded system is
//!
//! ```text
//!  A x - b tau            = 0
//! -A'y - s + c tau        = 0
//!  b'y - c'x - kappa      = 0,   x, s in K,  tau, kappa >= 0
//! ```
//!
//! A strictly complementary solution has either tau > 0 (an optimal pair after
//! dividing by tau) or kappa > 0 (a Farkas certificate for the primal or dual).

use nalgebra::{DMatrix, DVector};

use crate::problem::{Row, SdpProblem, Sense, StandardForm};
use crate::SdpError;

const STALL_ITERS: usize = 8;
const STALL_SCORE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    Inaccurate,
}

#[derive(Clone, Copy, Debug)]
pub struct Settings {
    pub tol: f64,
    pub max_iter: usize,
    pub verbose: bool,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            tol: 1e-8,
            max_iter: 200,
            verbose: false,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

/// Infeasibility witnesses, expressed on the standard form of the problem.
#[derive(Clone, Debug)]
pub enum Certificate {
    /// `b'y = 1` and `sum_k y_k A_k` lies in the negative of the cone.
    Farkas { y: Vec<f64> },
    /// `x` in the cone with `A x = 0` and `<C, x> = -1` (minimization form).
    Ray { x: Vec<DMatrix<f64>>, slack: Vec<f64> },
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub status: Status,
    /// Primal objective in the sense of the original problem.
    pub value: f64,
    /// Dual objective in the sense of the original problem.
    pub dual_value: f64,
    pub x: Vec<DMatrix<f64>>,
    pub slack: Vec<f64>,
    /// Multipliers of the standard-form rows (equalities first).
    pub y: Vec<f64>,
    pub certificate: Option<Certificate>,
    pub iterations: usize,
    pub residuals: Residuals,
}

#[derive(Clone, Debug)]
struct Cone {
    psd: Vec<DMatrix<f64>>,
    lp: DVector<f64>,
}

impl Cone {
    fn zeros(dims: &[usize], nlp: usize) -> Self {
        Cone {
            psd: dims.iter().map(|&n| DMatrix::zeros(n, n)).collect(),
            lp: DVector::zeros(nlp),
        }
    }

    fn identity(dims: &[usize], nlp: usize) -> Self {
        Cone {
            psd: dims.iter().map(|&n| DMatrix::identity(n, n)).collect(),
            lp: DVector::from_element(nlp, 1.0),
        }
    }

    fn from_row(r: &Row, dims: &[usize], nlp: usize) -> Self {
        let mut c = Cone::zeros(dims, nlp);
        c.add_row(r, 1.0);
        c
    }

    fn add_row(&mut self, r: &Row, a: f64) {
        for &(b, i, j, v) in &r.psd {
            self.psd[b][(i, j)] += a * v;
        }
        for &(i, v) in &r.lp {
            self.lp[i] += a * v;
        }
    }

    fn dot(&self, o: &Cone) -> f64 {
        let p: f64 = self.psd.iter().zip(&o.psd).map(|(a, b)| a.dot(b)).sum();
        p + self.lp.dot(&o.lp)
    }

    fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    fn axpy(&mut self, a: f64, o: &Cone) {
        for (x, y) in self.psd.iter_mut().zip(&o.psd) {
            *x += y * a;
        }
        self.lp.axpy(a, &o.lp, 1.0);
    }

    fn symmetrize(&mut self) {
        for x in &mut self.psd {
            let t = x.transpose();
            *x += t;
            *x *= 0.5;
        }
    }
}

fn apply_a(rows: &[Row], x: &Cone) -> DVector<f64> {
    DVector::from_iterator(rows.len(), rows.iter().map(|r| row_dot(r, x)))
}

fn row_dot(r: &Row, x: &Cone) -> f64 {
    let p: f64 = r.psd.iter().map(|&(b, i, j, v)| v * x.psd[b][(i, j)]).sum();
    let l: f64 = r.lp.iter().map(|&(i, v)| v * x.lp[i]).sum();
    p + l
}

fn apply_at(rows: &[Row], y: &DVector<f64>, dims: &[usize], nlp: usize) -> Cone {
    let mut out = Cone::zeros(dims, nlp);
    for (r, &yk) in rows.iter().zip(y.iter()) {
        if yk != 0.0 {
            out.add_row(r, yk);
        }
    }
    out
}

/// Nesterov-Todd scaling point for one iterate: `W = R R'` with
/// `R' S R = R^{-1} X R^{-T} = diag(lambda)`.
struct Scaling {
    r: Vec<DMatrix<f64>>,
    w: Vec<DMatrix<f64>>,
    lam: Vec<DVector<f64>>,
    lp_r: DVector<f64>,
    lp_lam: DVector<f64>,
}

/// Some `F` with `F F' = m`: Cholesky, or a floored eigen-factor when the
/// matrix has drifted to the boundary of the cone by rounding.
fn factor(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if let Some(c) = m.clone().cholesky() {
        return Some(c.l());
    }
    let eig = m.clone().symmetric_eigen();
    let top = eig.eigenvalues.max();
    if !(top > 0.0) || !top.is_finite() {
        return None;
    }
    let floor = top * 1e-14;
    let mut f = eig.eigenvectors;
    for (j, &l) in eig.eigenvalues.iter().enumerate() {
        f.column_mut(j).scale_mut(l.max(floor).sqrt());
    }
    Some(f)
}

impl Scaling {
    fn new(x: &Cone, s: &Cone) -> Option<Scaling> {
        let mut r = Vec::new();
        let mut w = Vec::new();
        let mut lam = Vec::new();
        for (xb, sb) in x.psd.iter().zip(&s.psd) {
            let lx = factor(xb)?;
            let ls = factor(sb)?;
            let m = ls.transpose() * &lx;
            let svd = m.svd(false, true);
            let vt = svd.v_t?;
            let sv = svd.singular_values;
            if sv.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
                return None;
            }
            let mut rb = lx * vt.transpose();
            for (j, &sj) in sv.iter().enumerate() {
                rb.column_mut(j).scale_mut(1.0 / sj.sqrt());
            }
            w.push(&rb * rb.transpose());
            r.push(rb);
            lam.push(sv);
        }
        let lp_r = x.lp.zip_map(&s.lp, |a, b| (a / b).sqrt().sqrt());
        let lp_lam = x.lp.zip_map(&s.lp, |a, b| (a * b).sqrt());
        if lp_r.iter().chain(lp_lam.iter()).any(|v| !(v.is_finite() && *v > 0.0)) {
            return None;
        }
        Some(Scaling {
            r,
            w,
            lam,
            lp_r,
            lp_lam,
        })
    }

    /// `W c W` blockwise.
    fn wcw(&self, c: &Cone) -> Cone {
        Cone {
            psd: self
                .w
                .iter()
                .zip(&c.psd)
                .map(|(w, cb)| w * cb * w)
                .collect(),
            lp: c.lp.zip_map(&self.lp_r, |v, r| v * r * r * r * r),
        }
    }
}

/// Cholesky factor of the Schur complement with one step of refinement.
struct Schur {
    m: DMatrix<f64>,
    llt: Option<faer::linalg::solvers::Llt<f64>>,
}

impl Schur {
    fn factor(m: DMatrix<f64>) -> Option<Schur> {
        let n = m.nrows();
        if n == 0 {
            return Some(Schur { m, llt: None });
        }
        let maxd = (0..n).map(|i| m[(i, i)].abs()).fold(0.0f64, f64::max).max(1e-300);
        let mut reg = 0.0;
        for _ in 0..12 {
            let fm = faer::Mat::<f64>::from_fn(n, n, |i, j| {
                m[(i, j)] + if i == j { reg } else { 0.0 }
            });
            if let Ok(llt) = fm.llt(faer::Side::Lower) {
                return Some(Schur { m, llt: Some(llt) });
            }
            reg = if reg == 0.0 { 1e-14 * maxd } else { reg * 100.0 };
        }
        None
    }

    fn raw_solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        use faer::linalg::solvers::Solve;
        let n = rhs.len();
        match &self.llt {
            None => DVector::zeros(0),
            Some(llt) => {
                let b = faer::Mat::<f64>::from_fn(n, 1, |i, _| rhs[i]);
                let x = llt.solve(&b);
                DVector::from_fn(n, |i, _| x[(i, 0)])
            }
        }
    }

    fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let mut x = self.raw_solve(rhs);
        if x.is_empty() {
            return x;
        }
        let r = rhs - &self.m * &x;
        x += self.raw_solve(&r);
        x
    }
}

/// Build `M_kl = <A_k, W A_l W>` (plus the orthant part).
fn schur_matrix(rows: &[Row], sc: &Scaling, dims: &[usize]) -> DMatrix<f64> {
    let m = rows.len();
    let mut out = DMatrix::zeros(m, m);
    const DENSE: usize = 24;
    let dense: Vec<bool> = rows.iter().map(|r| r.psd.len() > DENSE).collect();
    for k in 0..m {
        if !dense[k] || rows[k].psd.is_empty() {
            continue;
        }
        // W A_k W blockwise.
        let mut wa: Vec<DMatrix<f64>> = dims.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        let mut touched = vec![false; dims.len()];
        for &(b, i, j, v) in &rows[k].psd {
            // (W A)_{:, j} += v W_{:, i}
            let col = sc.w[b].column(i) * v;
            let mut dst = wa[b].column_mut(j);
            dst += col;
            touched[b] = true;
        }
        let bk: Vec<Option<DMatrix<f64>>> = wa
            .into_iter()
            .enumerate()
            .map(|(b, g)| touched[b].then(|| g * &sc.w[b]))
            .collect();
        for l in 0..m {
            let mut acc = 0.0;
            for &(b, i, j, v) in &rows[l].psd {
                if let Some(bm) = &bk[b] {
                    acc += v * bm[(i, j)];
                }
            }
            out[(k, l)] = acc;
            out[(l, k)] = acc;
        }
    }
    for k in 0..m {
        if dense[k] {
            continue;
        }
        let rk = &rows[k].psd;
        if rk.is_empty() {
            continue;
        }
        for l in k..m {
            if dense[l] {
                continue;
            }
            let mut acc = 0.0;
            for &(b, i, j, a) in rk {
                let w = &sc.w[b];
                for &(b2, p, q, c) in &rows[l].psd {
                    if b2 == b {
                        acc += a * c * w[(i, p)] * w[(q, j)];
                    }
                }
            }
            out[(k, l)] = acc;
            out[(l, k)] = acc;
        }
    }
    // Orthant part: sum_i a_ki a_li (x_i / s_i).
    let nlp = sc.lp_r.len();
    let mut by_index: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nlp];
    for (k, r) in rows.iter().enumerate() {
        for &(i, v) in &r.lp {
            by_index[i].push((k, v));
        }
    }
    for (i, list) in by_index.iter().enumerate() {
        let w2 = sc.lp_r[i].powi(4);
        for &(k, a) in list {
            for &(l, c) in list {
                out[(k, l)] += a * c * w2;
            }
        }
    }
    out
}

fn lambda_min_scaled(lam: &DVector<f64>, d: &DMatrix<f64>) -> f64 {
    let n = lam.len();
    let t = DMatrix::from_fn(n, n, |i, j| d[(i, j)] / (lam[i] * lam[j]).sqrt());
    let t = (&t + t.transpose()) * 0.5;
    t.symmetric_eigenvalues().min()
}

fn max_step(lam: &[DVector<f64>], d: &[DMatrix<f64>], lp_lam: &DVector<f64>, lp_d: &DVector<f64>) -> f64 {
    let mut a = f64::INFINITY;
    for (l, db) in lam.iter().zip(d) {
        let mn = lambda_min_scaled(l, db);
        if mn < 0.0 {
            a = a.min(-1.0 / mn);
        }
    }
    for (l, dv) in lp_lam.iter().zip(lp_d.iter()) {
        // scaled orthant variable is lambda_i, direction dv
        if *dv < 0.0 {
            a = a.min(-l / dv);
        }
    }
    a
}

struct Direction {
    dx: Cone,
    ds: Cone,
    dy: DVector<f64>,
    dtau: f64,
    dkappa: f64,
    // scaled directions
    dxs: Vec<DMatrix<f64>>,
    dss: Vec<DMatrix<f64>>,
    dxs_lp: DVector<f64>,
    dss_lp: DVector<f64>,
}

struct Iterate {
    x: Cone,
    s: Cone,
    y: DVector<f64>,
    tau: f64,
    kappa: f64,
}

struct Engine {
    rows: Vec<Row>,
    b: DVector<f64>,
    c: Cone,
    dims: Vec<usize>,
    nlp: usize,
}

impl Engine {
    #[allow(clippy::too_many_arguments)]
    fn direction(
        &self,
        it: &Iterate,
        sc: &Scaling,
        schur: &Schur,
        p: &DVector<f64>,
        g: &DVector<f64>,
        _wcw: &Cone,
        cwc: f64,
        eta: f64,
        rp: &DVector<f64>,
        rd: &Cone,
        rg: f64,
        rhs_c: &[DMatrix<f64>],
        rhs_lp: &DVector<f64>,
        rho_tau: f64,
    ) -> Direction {
        // Scaled complementarity solve: Z_ij = 2 rhs_ij / (lambda_i + lambda_j).
        let mut h = Cone::zeros(&self.dims, self.nlp);
        let mut zs = Vec::with_capacity(self.dims.len());
        for (bk, ((lam, r), rhs)) in sc.lam.iter().zip(&sc.r).zip(rhs_c).enumerate() {
            let n = lam.len();
            let z = DMatrix::from_fn(n, n, |i, j| 2.0 * rhs[(i, j)] / (lam[i] + lam[j]));
            h.psd[bk] = r * &z * r.transpose();
            zs.push(z);
        }
        let z_lp = rhs_lp.zip_map(&sc.lp_lam, |v, l| v / l);
        h.lp = z_lp.zip_map(&sc.lp_r, |z, r| z * r * r);
        if eta != 0.0 {
            let wrw = sc.wcw(rd);
            h.axpy(-eta, &wrw);
        }
        let rhs_y = rp * eta - apply_a(&self.rows, &h);
        let q = schur.solve(&rhs_y);
        let num = eta * rg - self.b.dot(&q) + self.c.dot(&h) + g.dot(&q) + rho_tau / it.tau;
        let den = self.b.dot(p) - g.dot(p) + cwc + it.kappa / it.tau;
        let dtau = num / den;
        let dy = &q + p * dtau;
        let dkappa = (rho_tau - it.kappa * dtau) / it.tau;
        let aty = apply_at(&self.rows, &dy, &self.dims, self.nlp);
        let mut ds = Cone::zeros(&self.dims, self.nlp);
        ds.axpy(-1.0, &aty);
        ds.axpy(dtau, &self.c);
        ds.axpy(eta, rd);
        // dx = R Z R' - W ds W
        let mut dx = Cone::zeros(&self.dims, self.nlp);
        let mut dss = Vec::new();
        let mut dxs = Vec::new();
        for (bk, (r, z)) in sc.r.iter().zip(&zs).enumerate() {
            let w = &sc.w[bk];
            dx.psd[bk] = r * z * r.transpose() - w * &ds.psd[bk] * w;
            let t = r.transpose() * &ds.psd[bk] * r;
            let t = (&t + t.transpose()) * 0.5;
            dxs.push(z - &t);
            dss.push(t);
        }
        let dss_lp = ds.lp.zip_map(&sc.lp_r, |d, r| d * r * r);
        let dxs_lp = &z_lp - &dss_lp;
        dx.lp = dxs_lp.zip_map(&sc.lp_r, |d, r| d * r * r);
        dx.symmetrize();
        Direction {
            dx,
            ds,
            dy,
            dtau,
            dkappa,
            dxs,
            dss,
            dxs_lp,
            dss_lp,
        }
    }

    fn step_length(&self, sc: &Scaling, it: &Iterate, d: &Direction) -> f64 {
        let ax = max_step(&sc.lam, &d.dxs, &sc.lp_lam, &d.dxs_lp);
        let as_ = max_step(&sc.lam, &d.dss, &sc.lp_lam, &d.dss_lp);
        let mut a = ax.min(as_);
        if d.dtau < 0.0 {
            a = a.min(-it.tau / d.dtau);
        }
        if d.dkappa < 0.0 {
            a = a.min(-it.kappa / d.dkappa);
        }
        a
    }
}

/// Solve an SDP with the default settings but a custom tolerance and iteration cap.
pub fn solve(p: &SdpProblem, tol: f64, max_iter: usize) -> Result<SdpSolution, SdpError> {
    solve_with(
        p,
        &Settings {
            tol,
            max_iter,
            verbose: false,
        },
    )
}

pub fn solve_with(p: &SdpProblem, st: &Settings) -> Result<SdpSolution, SdpError> {
    p.validate()?;
    let sf = p.standard_form();
    let dims = sf.psd_dims.clone();
    let nlp = sf.nlp;
    let m = sf.m();

    // Row equilibration plus global scaling of b and c.
    let mut rows = Vec::with_capacity(m);
    let mut rscale = Vec::with_capacity(m);
    let mut b = DVector::zeros(m);
    for (k, r) in sf.rows.iter().enumerate() {
        let nr = r.norm();
        if nr == 0.0
            && sf.b[k].abs() > 0.0 {
                // 0 = b_k with b_k != 0: trivially infeasible.
                let mut y = vec![0.0; m];
                y[k] = 1.0 / sf.b[k];
                return Ok(infeasible_trivial(&sf, y));
            }
        let s = if nr > 0.0 { 1.0 / nr } else { 1.0 };
        rows.push(r.clone().scaled(s));
        rscale.push(s);
        b[k] = sf.b[k] * s;
    }
    let bscale = b.norm().max(1.0);
    b /= bscale;
    let c_raw = Cone::from_row(&sf.c, &dims, nlp);
    let cscale = c_raw.norm().max(1.0);
    let mut c = c_raw.clone();
    for x in &mut c.psd {
        *x /= cscale;
    }
    c.lp /= cscale;

    let eng = Engine {
        rows,
        b,
        c,
        dims: dims.clone(),
        nlp,
    };
    let nu = dims.iter().sum::<usize>() + nlp;
    let mut it = Iterate {
        x: Cone::identity(&dims, nlp),
        s: Cone::identity(&dims, nlp),
        y: DVector::zeros(m),
        tau: 1.0,
        kappa: 1.0,
    };
    let bnorm = eng.b.norm();
    let cnorm = eng.c.norm();

    let mut status = Status::Inaccurate;
    let mut since_best = 0usize;
    let mut iters = 0;
    let mut res = Residuals::default();
    let mut cert_y: Option<DVector<f64>> = None;
    let mut cert_x: Option<Cone> = None;
    let mut best: Option<(f64, Cone, DVector<f64>, f64, Residuals)> = None;

    for k in 0..=st.max_iter {
        iters = k;
        // Residuals.
        let ax = apply_a(&eng.rows, &it.x);
        let rp = &eng.b * it.tau - &ax;
        let aty = apply_at(&eng.rows, &it.y, &dims, nlp);
        let mut rd = eng.c.clone();
        for x in &mut rd.psd {
            *x *= it.tau;
        }
        rd.lp *= it.tau;
        rd.axpy(-1.0, &aty);
        rd.axpy(-1.0, &it.s);
        let cx = eng.c.dot(&it.x);
        let by = eng.b.dot(&it.y);
        let rg = it.kappa + cx - by;
        let mu = (it.x.dot(&it.s) + it.tau * it.kappa) / (nu as f64 + 1.0);

        let pres = rp.norm() / (it.tau * (1.0 + bnorm));
        let dres = rd.norm() / (it.tau * (1.0 + cnorm));
        let pobj = cx / it.tau;
        let dobj = by / it.tau;
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        res = Residuals {
            primal: pres,
            dual: dres,
            gap,
        };
        if st.verbose {
            eprintln!(
                "it {k:3} pobj {pobj:+.9e} dobj {dobj:+.9e} pres {pres:.2e} dres {dres:.2e} gap {gap:.2e} tau {:.2e} kappa {:.2e} mu {mu:.2e}",
                it.tau, it.kappa
            );
        }
        let score = pres.max(dres).max(gap);
        if best.as_ref().is_none_or(|b| score < b.0) && score.is_finite() {
            best = Some((score, it.x.clone(), it.y.clone(), it.tau, res));
            since_best = 0;
        } else {
            since_best += 1;
        }
        if pres <= st.tol && dres <= st.tol && gap <= st.tol {
            status = Status::Optimal;
            break;
        }
        // Infeasibility tests on the unnormalized iterate.
        if by > 0.0 {
            let mut r = aty.clone();
            r.axpy(1.0, &it.s);
            if r.norm() <= st.tol * by {
                status = Status::PrimalInfeasible;
                cert_y = Some(it.y.clone() / by);
                break;
            }
        }
        if cx < 0.0 && ax.norm() <= st.tol * (-cx) {
            status = Status::DualInfeasible;
            let mut x = it.x.clone();
            for b in &mut x.psd {
                *b /= -cx;
            }
            x.lp /= -cx;
            cert_x = Some(x);
            break;
        }
        if k == st.max_iter {
            break;
        }
        // Close to the tolerance but no longer improving: keep the best point.
        if since_best >= STALL_ITERS && best.as_ref().is_some_and(|b| b.0 <= STALL_SCORE) {
            if st.verbose {
                eprintln!("stop: stalled");
            }
            break;
        }

        let Some(sc) = Scaling::new(&it.x, &it.s) else {
            if st.verbose {
                eprintln!("stop: scaling failed");
            }
            break;
        };
        let mmat = schur_matrix(&eng.rows, &sc, &dims);
        let Some(schur) = Schur::factor(mmat) else {
            if st.verbose {
                eprintln!("stop: schur factorization failed");
            }
            break;
        };
        let wcw = sc.wcw(&eng.c);
        let g = apply_a(&eng.rows, &wcw);
        let p = schur.solve(&(&g + &eng.b));
        let cwc = eng.c.dot(&wcw);

        // Predictor.
        let rhs_aff: Vec<DMatrix<f64>> = sc
            .lam
            .iter()
            .map(|l| DMatrix::from_diagonal(&l.map(|v| -v * v)))
            .collect();
        let rhs_aff_lp = sc.lp_lam.map(|v| -v * v);
        let da = eng.direction(
            &it, &sc, &schur, &p, &g, &wcw, cwc, 1.0, &rp, &rd, rg, &rhs_aff, &rhs_aff_lp,
            -it.tau * it.kappa,
        );
        let aa = eng.step_length(&sc, &it, &da).min(1.0);
        let sigma = (1.0 - aa).powi(3).clamp(0.0, 1.0);
        let eta = 1.0 - sigma;

        // Corrector.
        let mut rhs_c = Vec::with_capacity(dims.len());
        for (bk, l) in sc.lam.iter().enumerate() {
            let n = l.len();
            let dxs = &da.dxs[bk];
            let dss = &da.dss[bk];
            let corr = (dxs * dss + dss * dxs) * 0.5;
            let mut r = -corr;
            for i in 0..n {
                r[(i, i)] += sigma * mu - l[i] * l[i];
            }
            rhs_c.push(r);
        }
        let rhs_c_lp = DVector::from_fn(nlp, |i, _| {
            sigma * mu - sc.lp_lam[i] * sc.lp_lam[i] - da.dxs_lp[i] * da.dss_lp[i]
        });
        let rho = sigma * mu - it.tau * it.kappa - da.dtau * da.dkappa;
        let d = eng.direction(
            &it, &sc, &schur, &p, &g, &wcw, cwc, eta, &rp, &rd, rg, &rhs_c, &rhs_c_lp, rho,
        );
        let amax = eng.step_length(&sc, &it, &d);
        let alpha = (0.99 * amax).min(1.0);
        if !(alpha > 1e-12) || !d.dtau.is_finite() {
            if st.verbose {
                eprintln!("stop: step {alpha:.3e}, dtau {:.3e}", d.dtau);
            }
            break;
        }
        it.x.axpy(alpha, &d.dx);
        it.s.axpy(alpha, &d.ds);
        it.x.symmetrize();
        it.s.symmetrize();
        it.y.axpy(alpha, &d.dy, 1.0);
        it.tau += alpha * d.dtau;
        it.kappa += alpha * d.dkappa;
        if !(it.tau > 0.0 && it.kappa > 0.0) {
            if st.verbose {
                eprintln!("stop: tau {:.3e} kappa {:.3e}", it.tau, it.kappa);
            }
            break;
        }
    }

    // Map back to the original scaling.
    let unscale_y = |y: &DVector<f64>, factor: f64| -> Vec<f64> {
        y.iter().zip(&rscale).map(|(v, s)| v * s * factor).collect()
    };
    let sign = match p.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    match status {
        Status::PrimalInfeasible => {
            let yc = cert_y.unwrap();
            // b'y stays 1 after undoing the row scaling because b was scaled alike.
            let y = unscale_y(&yc, 1.0 / bscale);
            let y = normalize_farkas(&sf, y);
            Ok(SdpSolution {
                status,
                value: f64::NAN,
                dual_value: f64::NAN,
                x: Vec::new(),
                slack: Vec::new(),
                y: y.clone(),
                certificate: Some(Certificate::Farkas { y }),
                iterations: iters,
                residuals: res,
            })
        }
        Status::DualInfeasible => {
            let xc = cert_x.unwrap();
            let craw = Cone::from_row(&sf.c, &dims, nlp);
            let cx = craw.dot(&xc);
            let mut x = xc.clone();
            for b in &mut x.psd {
                *b /= -cx;
            }
            x.lp /= -cx;
            Ok(SdpSolution {
                status,
                value: f64::NAN,
                dual_value: f64::NAN,
                x: Vec::new(),
                slack: Vec::new(),
                y: Vec::new(),
                certificate: Some(Certificate::Ray {
                    x: x.psd,
                    slack: x.lp.iter().copied().collect(),
                }),
                iterations: iters,
                residuals: res,
            })
        }
        _ => {
            let (xfin, yfin, taufin, resfin) = if status == Status::Optimal {
                (it.x, it.y, it.tau, res)
            } else {
                match best {
                    Some((_, x, y, t, r)) => (x, y, t, r),
                    None => (it.x, it.y, it.tau, res),
                }
            };
            let mut x = xfin;
            for b in &mut x.psd {
                *b *= bscale / taufin;
            }
            x.lp *= bscale / taufin;
            let y = unscale_y(&yfin, cscale / taufin);
            let pobj = Cone::from_row(&sf.c, &dims, nlp).dot(&x);
            let dobj: f64 = y.iter().zip(&sf.b).map(|(a, b)| a * b).sum();
            Ok(SdpSolution {
                status,
                value: sign * pobj,
                dual_value: sign * dobj,
                x: x.psd,
                slack: x.lp.iter().copied().collect(),
                y,
                certificate: None,
                iterations: iters,
                residuals: resfin,
            })
        }
    }
}

fn normalize_farkas(sf: &StandardForm, y: Vec<f64>) -> Vec<f64> {
    let by: f64 = y.iter().zip(&sf.b).map(|(a, b)| a * b).sum();
    if by > 0.0 {
        y.into_iter().map(|v| v / by).collect()
    } else {
        y
    }
}

fn infeasible_trivial(sf: &StandardForm, y: Vec<f64>) -> SdpSolution {
    SdpSolution {
        status: Status::PrimalInfeasible,
        value: f64::NAN,
        dual_value: f64::NAN,
        x: Vec::new(),
        slack: Vec::new(),
        y: y.clone(),
        certificate: Some(Certificate::Farkas {
            y: normalize_farkas(sf, y),
        }),
        iterations: 0,
        residuals: Residuals::default(),
    }
}

/// Check a certificate against the problem it claims to refute. Returns the
/// violation: the largest eigenvalue of `sum y_k A_k` (Farkas, after scaling to
/// `b'y = 1`) or the equality residual plus cone violation (ray).
pub fn verify_certificate(p: &SdpProblem, cert: &Certificate) -> f64 {
    let sf = p.standard_form();
    let dims = &sf.psd_dims;
    match cert {
        Certificate::Farkas { y } => {
            if y.len() != sf.m() {
                return f64::INFINITY;
            }
            let by: f64 = y.iter().zip(&sf.b).map(|(a, b)| a * b).sum();
            if !(by > 0.0) {
                return f64::INFINITY;
            }
            let yv = DVector::from_iterator(y.len(), y.iter().map(|v| v / by));
            let aty = apply_at(&sf.rows, &yv, dims, sf.nlp);
            let mut worst = f64::NEG_INFINITY;
            for blk in &aty.psd {
                let s = (blk + blk.transpose()) * 0.5;
                worst = worst.max(s.symmetric_eigenvalues().max());
            }
            for &v in aty.lp.iter() {
                worst = worst.max(v);
            }
            worst.max(0.0)
        }
        Certificate::Ray { x, slack } => {
            if x.len() != dims.len() || slack.len() != sf.nlp {
                return f64::INFINITY;
            }
            let cone = Cone {
                psd: x.clone(),
                lp: DVector::from_vec(slack.clone()),
            };
            let cx = row_dot(&sf.c, &cone);
            if !(cx < 0.0) {
                return f64::INFINITY;
            }
            let ax = apply_a(&sf.rows, &cone).norm() / -cx;
            let mut neg: f64 = 0.0;
            for blk in x {
                let s = (blk + blk.transpose()) * 0.5;
                neg = neg.max(-s.symmetric_eigenvalues().min());
            }
            for &v in slack {
                neg = neg.max(-v);
            }
            ax + neg / -cx
        }
    }
}
