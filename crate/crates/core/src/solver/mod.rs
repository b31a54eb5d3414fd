//! Self-contained primal-dual interior-point solver for conic programs
//!
//!   minimize c'x  subject to  Gx + s = h, Ax = b, s in K,
//!
//! with K a product of nonnegative, second-order and real symmetric PSD
//! cones. The algorithm is a homogeneous self-dual embedding with
//! Nesterov-Todd scaling and a Mehrotra predictor-corrector step, so
//! infeasible problems terminate with an improving-ray certificate instead
//! of a numerical breakdown.

pub mod cone;
mod kkt;
mod scaling;

pub use cone::{smat, svec_index, svec_len, svec_of, Cone, ConeSpec};
pub use kkt::SparseCols;

use nalgebra::{DVector, SymmetricEigen};
use scaling::Scaling;

/// Conic program in the solver's standard form.
#[derive(Debug, Clone)]
pub struct ConeProblem {
    pub c: DVector<f64>,
    /// Cone constraint matrix: `Gx + s = h`, `s in K`.
    pub g: SparseCols,
    pub h: DVector<f64>,
    /// Equality rows `Ax = b` (zero rows allowed).
    pub a: SparseCols,
    pub b: DVector<f64>,
    pub cones: ConeSpec,
}

impl ConeProblem {
    pub fn validate(&self) -> Result<(), String> {
        let d = self.c.len();
        if self.g.ncols() != d || self.a.ncols() != d {
            return Err("constraint matrices disagree with variable count".into());
        }
        if self.g.nrows() != self.h.len() || self.g.nrows() != self.cones.total_len() {
            return Err("cone constraint rows disagree with cone layout".into());
        }
        if self.a.nrows() != self.b.len() {
            return Err("equality rows disagree with right-hand side".into());
        }
        if self.cones.blocks.iter().any(|c| c.len() == 0) {
            return Err("empty cone block".into());
        }
        Ok(())
    }
}

/// Solver tolerances and limits.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub max_iters: usize,
    pub step_fraction: f64,
    /// Enables the Mehrotra second-order corrector term.
    pub use_corrector: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            gap_tol: 1e-7,
            feas_tol: 1e-8,
            max_iters: 200,
            step_fraction: 0.98,
            use_corrector: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverStatus {
    Optimal,
    /// The improving dual ray is returned in (y, z).
    PrimalInfeasible,
    /// The improving primal ray is returned in (x, s).
    DualInfeasible,
    IterationLimit,
    NumericalFailure,
}

impl std::fmt::Display for SolverStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SolverStatus::Optimal => "optimal",
            SolverStatus::PrimalInfeasible => "primal-infeasible",
            SolverStatus::DualInfeasible => "dual-infeasible",
            SolverStatus::IterationLimit => "iteration-limit",
            SolverStatus::NumericalFailure => "numerical-failure",
        };
        f.write_str(s)
    }
}

/// Per-iteration progress record (kept for diagnostics and property tests).
#[derive(Debug, Clone, Copy)]
pub struct IterRecord {
    pub pcost: f64,
    pub dcost: f64,
    pub gap: f64,
    pub pres: f64,
    pub dres: f64,
}

#[derive(Debug, Clone)]
pub struct SolverSolution {
    pub status: SolverStatus,
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub z: DVector<f64>,
    pub s: DVector<f64>,
    /// `c'x` at the returned point (NaN for infeasibility certificates).
    pub objective: f64,
    /// Relative duality gap at termination.
    pub duality_gap: f64,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub trace: Vec<IterRecord>,
    pub message: String,
}

#[derive(Clone)]
struct State {
    x: DVector<f64>,
    y: DVector<f64>,
    z: DVector<f64>,
    s: DVector<f64>,
    tau: f64,
    kappa: f64,
}

/// Solves the conic program; deterministic for a fixed program and config.
pub fn solve(prob: &ConeProblem, cfg: &SolverConfig) -> SolverSolution {
    if let Err(msg) = prob.validate() {
        return failure_solution(prob, None, 0, vec![], format!("invalid program: {msg}"));
    }
    let spec = &prob.cones;
    let nu = spec.degree() as f64;
    let norm_b = prob.b.norm().max(1.0);
    let norm_h = prob.h.norm().max(1.0);
    let norm_c = prob.c.norm().max(1.0);

    let mut kkt = kkt::KktSolver::new(&prob.g, &prob.a, spec);

    // initialization: least-norm primal/dual points shifted into the cone
    let ident = Scaling::identity(spec);
    if kkt.factor(&ident).is_err() {
        return failure_solution(prob, None, 0, vec![], "initialization factorization failed".into());
    }
    let (x0, _) = kkt.solve(&prob.g.tr_mul_vec(&prob.h), &prob.b);
    let mut s0 = &prob.h - prob.g.mul_vec(&x0);
    spec.shift_to_interior(&mut s0);
    let (u0, v0) = kkt.solve(&prob.c, &DVector::zeros(prob.b.len()));
    let mut z0 = -prob.g.mul_vec(&u0);
    spec.shift_to_interior(&mut z0);
    let mut st = State {
        x: x0,
        y: -v0,
        z: z0,
        s: s0,
        tau: 1.0,
        kappa: 1.0,
    };

    let mut trace: Vec<IterRecord> = vec![];
    // best iterate by combined feasibility/gap merit, the fallback when the
    // linear algebra stops making progress near the achievable accuracy
    let mut best: Option<(State, f64)> = None;
    for iter in 0..cfg.max_iters {
        let rx = prob.a.tr_mul_vec(&st.y) + prob.g.tr_mul_vec(&st.z) + &prob.c * st.tau;
        let ry = prob.a.mul_vec(&st.x) - &prob.b * st.tau;
        let rz = prob.g.mul_vec(&st.x) + &st.s - &prob.h * st.tau;
        let rt = st.kappa + prob.c.dot(&st.x) + prob.b.dot(&st.y) + prob.h.dot(&st.z);
        let gap = st.s.dot(&st.z);
        let mu = (gap + st.tau * st.kappa) / (nu + 1.0);

        let pcost = prob.c.dot(&st.x) / st.tau;
        let dcost = -(prob.b.dot(&st.y) + prob.h.dot(&st.z)) / st.tau;
        let pres = (ry.norm() / norm_b).max(rz.norm() / norm_h) / st.tau;
        let dres = rx.norm() / norm_c / st.tau;
        let relgap = (gap / (st.tau * st.tau)) / pcost.abs().max(dcost.abs()).max(1.0);
        trace.push(IterRecord {
            pcost,
            dcost,
            gap: gap / (st.tau * st.tau),
            pres,
            dres,
        });
        if !pres.is_finite() || !dres.is_finite() || !mu.is_finite() {
            let fallback = best.as_ref().map(|(s, _)| s).unwrap_or(&st);
            return failure_solution(prob, Some(fallback), iter, trace, "non-finite iterate".into());
        }

        if pres <= cfg.feas_tol && dres <= cfg.feas_tol && relgap <= cfg.gap_tol {
            return finished(prob, st, SolverStatus::Optimal, iter, trace, String::new());
        }

        let merit = pres.max(dres).max(relgap);
        let stalled = best
            .as_ref()
            .is_some_and(|(_, bm)| merit > 1e4 * bm.max(1e-14));
        if stalled {
            // residuals diverged long after the best point: numerical floor
            let (bst, _) = best.unwrap();
            return failure_solution(
                prob,
                Some(&bst),
                iter,
                trace,
                "progress stalled at the achievable accuracy; returning best iterate".into(),
            );
        }
        if best.as_ref().is_none_or(|(_, bm)| merit < *bm) {
            best = Some((st.clone(), merit));
        }

        // infeasibility certificates from the homogeneous embedding
        let hz_by = prob.h.dot(&st.z) + prob.b.dot(&st.y);
        if hz_by < 0.0 {
            let ray_res = (&rx - &prob.c * st.tau).norm() / norm_c / (-hz_by);
            if ray_res <= cfg.feas_tol {
                let scale = -1.0 / hz_by;
                st.y *= scale;
                st.z *= scale;
                return finished(
                    prob,
                    st,
                    SolverStatus::PrimalInfeasible,
                    iter,
                    trace,
                    "primal infeasible: improving dual ray found".into(),
                );
            }
        }
        let cx = prob.c.dot(&st.x);
        if cx < 0.0 {
            let ax = prob.a.mul_vec(&st.x).norm() / norm_b;
            let gxs = (prob.g.mul_vec(&st.x) + &st.s).norm() / norm_h;
            if ax.max(gxs) / (-cx) <= cfg.feas_tol {
                let scale = -1.0 / cx;
                st.x *= scale;
                st.s *= scale;
                return finished(
                    prob,
                    st,
                    SolverStatus::DualInfeasible,
                    iter,
                    trace,
                    "dual infeasible: improving primal ray found".into(),
                );
            }
        }

        let Some(scaling) = Scaling::compute(spec, &st.s, &st.z) else {
            let fallback = best.as_ref().map(|(s, _)| s).unwrap_or(&st);
            return failure_solution(prob, Some(fallback), iter, trace, "iterate left the cone interior".into());
        };
        if let Err(msg) = kkt.factor(&scaling) {
            let fallback = best.as_ref().map(|(s, _)| s).unwrap_or(&st);
            return failure_solution(prob, Some(fallback), iter, trace, msg);
        }

        // shared second column of the Newton system
        let wtw_h = scaling.apply_wtw_inv(spec, &prob.h);
        let rhs2 = -&prob.c + prob.g.tr_mul_vec(&wtw_h);
        let (u2, v2) = kkt.solve(&rhs2, &prob.b);
        let w2 = scaling.apply_wtw_inv(spec, &(prob.g.mul_vec(&u2) - &prob.h));
        let denom =
            prob.c.dot(&u2) + prob.b.dot(&v2) + prob.h.dot(&w2) - st.kappa / st.tau;
        if denom.abs() < 1e-300 {
            let fallback = best.as_ref().map(|(s, _)| s).unwrap_or(&st);
            return failure_solution(prob, Some(fallback), iter, trace, "degenerate tau equation".into());
        }

        let raw_direction = |ds_: &DVector<f64>,
                             dx_: &DVector<f64>,
                             dy_: &DVector<f64>,
                             dz_: &DVector<f64>,
                             dt_: f64,
                             dkt_: f64|
         -> Step {
            let lam_ds = scaling.lambda_div(spec, ds_);
            let bz = dz_ - scaling.apply_wt(spec, &lam_ds);
            let rhs1 = dx_ + prob.g.tr_mul_vec(&scaling.apply_wtw_inv(spec, &bz));
            let (u1, v1) = kkt.solve(&rhs1, dy_);
            let w1 = scaling.apply_wtw_inv(spec, &(prob.g.mul_vec(&u1) - &bz));
            let num =
                dt_ - dkt_ / st.tau - (prob.c.dot(&u1) + prob.b.dot(&v1) + prob.h.dot(&w1));
            let dtau = num / denom;
            let dx = &u1 + &u2 * dtau;
            let dy = &v1 + &v2 * dtau;
            let dz = &w1 + &w2 * dtau;
            let ds = scaling.apply_wt(spec, &(&lam_ds - scaling.apply_w(spec, &dz)));
            let dkappa = (dkt_ - st.kappa * dtau) / st.tau;
            Step {
                dx,
                dy,
                dz,
                ds,
                dtau,
                dkappa,
            }
        };
        // the scaled-space round trips lose accuracy near the boundary, so
        // each direction is polished by iterative refinement on the full
        // Newton equations
        let direction = |ds_: &DVector<f64>,
                         dx_: &DVector<f64>,
                         dy_: &DVector<f64>,
                         dz_: &DVector<f64>,
                         dt_: f64,
                         dkt_: f64|
         -> (Step, f64) {
            let mut step = raw_direction(ds_, dx_, dy_, dz_, dt_, dkt_);
            let newton_error = |step: &Step| -> (DVector<f64>, DVector<f64>, DVector<f64>, f64, DVector<f64>, f64, f64) {
                let e1 = dx_
                    - (prob.a.tr_mul_vec(&step.dy)
                        + prob.g.tr_mul_vec(&step.dz)
                        + &prob.c * step.dtau);
                let e2 = dy_ - (prob.a.mul_vec(&step.dx) - &prob.b * step.dtau);
                let e3 =
                    dz_ - (prob.g.mul_vec(&step.dx) + &step.ds - &prob.h * step.dtau);
                let e4 = dt_
                    - (prob.c.dot(&step.dx)
                        + prob.b.dot(&step.dy)
                        + prob.h.dot(&step.dz)
                        + step.dkappa);
                let e5 = ds_
                    - spec.jordan_product(
                        &scaling.lambda,
                        &(scaling.apply_w(spec, &step.dz)
                            + scaling.apply_winv_t(spec, &step.ds)),
                    );
                let e6 = dkt_ - (st.tau * step.dkappa + st.kappa * step.dtau);
                let err = e1
                    .norm()
                    .max(e2.norm())
                    .max(e3.norm())
                    .max(e4.abs())
                    .max(e5.norm())
                    .max(e6.abs());
                (e1, e2, e3, e4, e5, e6, err)
            };
            let (_, _, _, _, _, _, mut best_err) = newton_error(&step);
            for _ in 0..10 {
                if best_err < 1e-12 || !best_err.is_finite() {
                    break;
                }
                let (e1, e2, e3, e4, e5, e6, _) = newton_error(&step);
                let corr = raw_direction(&e5, &e1, &e2, &e3, e4, e6);
                let mut cand = Step {
                    dx: &step.dx + &corr.dx,
                    dy: &step.dy + &corr.dy,
                    dz: &step.dz + &corr.dz,
                    ds: &step.ds + &corr.ds,
                    dtau: step.dtau + corr.dtau,
                    dkappa: step.dkappa + corr.dkappa,
                };
                let (_, _, _, _, _, _, cand_err) = newton_error(&cand);
                if !cand_err.is_finite() || cand_err >= 0.9 * best_err {
                    break;
                }
                std::mem::swap(&mut step, &mut cand);
                best_err = cand_err;
            }
            (step, best_err)
        };

        // predictor (affine) direction
        let lam_lam = spec.jordan_product(&scaling.lambda, &scaling.lambda);
        let (aff, _) = direction(&(-&lam_lam), &(-&rx), &(-&ry), &(-&rz), -rt, -st.tau * st.kappa);
        let t_aff = step_to_boundary(spec, &scaling, &st, &aff);
        let alpha_aff = t_aff.min(1.0);
        let sigma = (1.0 - alpha_aff).powi(3).clamp(0.0, 1.0);

        // combined direction with optional Mehrotra corrector
        let mut ds_ = spec.identity() * (sigma * mu) - &lam_lam;
        let mut dkt_ = sigma * mu - st.tau * st.kappa;
        if cfg.use_corrector {
            let ws = scaling.apply_winv_t(spec, &aff.ds);
            let wz = scaling.apply_w(spec, &aff.dz);
            ds_ -= spec.jordan_product(&ws, &wz);
            dkt_ -= aff.dtau * aff.dkappa;
        }
        let f = -(1.0 - sigma);
        let (step, _) = direction(&ds_, &(&rx * f), &(&ry * f), &(&rz * f), f * rt, dkt_);
        let t_max = step_to_boundary(spec, &scaling, &st, &step);
        let alpha = (cfg.step_fraction * t_max).min(1.0);
        if alpha < 1e-10 {
            let fallback = best.as_ref().map(|(s, _)| s).unwrap_or(&st);
            return failure_solution(prob, Some(fallback), iter, trace, "step length collapsed".into());
        }
        st.x += &step.dx * alpha;
        st.y += &step.dy * alpha;
        st.z += &step.dz * alpha;
        st.s += &step.ds * alpha;
        st.tau += alpha * step.dtau;
        st.kappa += alpha * step.dkappa;
    }
    let iters = cfg.max_iters;
    let final_state = match best {
        Some((bst, _)) => bst,
        None => st,
    };
    finished(
        prob,
        final_state,
        SolverStatus::IterationLimit,
        iters,
        trace,
        "iteration limit reached".into(),
    )
}

/// One search direction of the homogeneous embedding.
struct Step {
    dx: DVector<f64>,
    dy: DVector<f64>,
    dz: DVector<f64>,
    ds: DVector<f64>,
    dtau: f64,
    dkappa: f64,
}

fn step_to_boundary(spec: &ConeSpec, scaling: &Scaling, st: &State, step: &Step) -> f64 {
    let mut t = spec.max_step(&st.s, &step.ds, &scaling.psd_chols_s);
    t = t.min(spec.max_step(&st.z, &step.dz, &scaling.psd_chols_z));
    if step.dtau < 0.0 {
        t = t.min(-st.tau / step.dtau);
    }
    if step.dkappa < 0.0 {
        t = t.min(-st.kappa / step.dkappa);
    }
    t
}

fn finished(
    prob: &ConeProblem,
    mut st: State,
    status: SolverStatus,
    iterations: usize,
    trace: Vec<IterRecord>,
    message: String,
) -> SolverSolution {
    let certificate = matches!(
        status,
        SolverStatus::PrimalInfeasible | SolverStatus::DualInfeasible
    );
    if !certificate {
        let inv_tau = 1.0 / st.tau;
        st.x *= inv_tau;
        st.y *= inv_tau;
        st.z *= inv_tau;
        st.s *= inv_tau;
    }
    let objective = if certificate {
        f64::NAN
    } else {
        prob.c.dot(&st.x)
    };
    let (pres, dres, gap) = if certificate {
        (f64::NAN, f64::NAN, f64::NAN)
    } else {
        let rx = prob.a.tr_mul_vec(&st.y) + prob.g.tr_mul_vec(&st.z) + &prob.c;
        let ry = prob.a.mul_vec(&st.x) - &prob.b;
        let rz = prob.g.mul_vec(&st.x) + &st.s - &prob.h;
        let pcost = prob.c.dot(&st.x);
        let dcost = -(prob.b.dot(&st.y) + prob.h.dot(&st.z));
        (
            (ry.norm() / prob.b.norm().max(1.0)).max(rz.norm() / prob.h.norm().max(1.0)),
            rx.norm() / prob.c.norm().max(1.0),
            st.s.dot(&st.z) / pcost.abs().max(dcost.abs()).max(1.0),
        )
    };
    SolverSolution {
        status,
        x: st.x,
        y: st.y,
        z: st.z,
        s: st.s,
        objective,
        duality_gap: gap,
        iterations,
        primal_residual: pres,
        dual_residual: dres,
        trace,
        message,
    }
}

fn failure_solution(
    prob: &ConeProblem,
    st: Option<&State>,
    iterations: usize,
    trace: Vec<IterRecord>,
    message: String,
) -> SolverSolution {
    let dim = prob.c.len();
    let m = prob.cones.total_len();
    let (x, y, z, s, tau) = match st {
        Some(st) => (
            st.x.clone(),
            st.y.clone(),
            st.z.clone(),
            st.s.clone(),
            st.tau,
        ),
        None => (
            DVector::zeros(dim),
            DVector::zeros(prob.b.len()),
            DVector::zeros(m),
            DVector::zeros(m),
            1.0,
        ),
    };
    SolverSolution {
        status: SolverStatus::NumericalFailure,
        x: x / tau,
        y: y / tau,
        z: z / tau,
        s: s / tau,
        objective: f64::NAN,
        duality_gap: f64::NAN,
        iterations,
        primal_residual: f64::NAN,
        dual_residual: f64::NAN,
        trace,
        message,
    }
}

/// Independent feasibility audit of a candidate primal point.
#[derive(Debug, Clone)]
pub struct CertificationReport {
    /// Largest violation across equalities and all cone memberships.
    pub max_violation: f64,
    pub eq_violation: f64,
    /// Most negative entry over nonnegative blocks (>= 0 when feasible).
    pub nonneg_min: f64,
    /// `t - ||u||` margin per second-order block.
    pub soc_margins: Vec<f64>,
    /// Minimum eigenvalue per PSD block.
    pub psd_min_eigs: Vec<f64>,
    pub objective: f64,
}

/// Recomputes every constraint residual of `x` from scratch, on a code path
/// independent of the solver's internal bookkeeping.
pub fn certify(prob: &ConeProblem, x: &DVector<f64>) -> CertificationReport {
    let dim = prob.c.len();
    let mut objective = 0.0;
    for j in 0..dim {
        objective += prob.c[j] * x[j];
    }
    // slack via explicit accumulation
    let mut s = prob.h.clone();
    for j in 0..dim {
        for &(r, v) in prob.g.column(j) {
            s[r] -= v * x[j];
        }
    }
    let mut eq_violation: f64 = 0.0;
    let mut ax = vec![0.0; prob.b.len()];
    for j in 0..dim {
        for &(r, v) in prob.a.column(j) {
            ax[r] += v * x[j];
        }
    }
    for (r, val) in ax.iter().enumerate() {
        eq_violation = eq_violation.max((val - prob.b[r]).abs());
    }
    let mut nonneg_min = f64::INFINITY;
    let mut soc_margins = vec![];
    let mut psd_min_eigs = vec![];
    let mut max_violation = eq_violation;
    for (cone, off) in prob.cones.iter_offsets() {
        match cone {
            Cone::Nonneg(n) => {
                for i in 0..n {
                    nonneg_min = nonneg_min.min(s[off + i]);
                }
            }
            Cone::Soc(n) => {
                let tail: f64 = (1..n).map(|i| s[off + i] * s[off + i]).sum::<f64>().sqrt();
                soc_margins.push(s[off] - tail);
            }
            Cone::Psd(n) => {
                let m = smat(&s.as_slice()[off..off + svec_len(n)], n);
                let lmin = SymmetricEigen::new(m)
                    .eigenvalues
                    .iter()
                    .cloned()
                    .fold(f64::INFINITY, f64::min);
                psd_min_eigs.push(lmin);
            }
        }
    }
    if nonneg_min.is_finite() {
        max_violation = max_violation.max(-nonneg_min.min(0.0));
    }
    for &m in &soc_margins {
        max_violation = max_violation.max(-m.min(0.0));
    }
    for &e in &psd_min_eigs {
        max_violation = max_violation.max(-e.min(0.0));
    }
    CertificationReport {
        max_violation,
        eq_violation,
        nonneg_min,
        soc_margins,
        psd_min_eigs,
        objective,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn solve_default(prob: &ConeProblem) -> SolverSolution {
        solve(prob, &SolverConfig::default())
    }

    /// minimize tr(CX), tr(X) = 1, X PSD -> lambda_min(C)
    fn min_eig_problem(c_mat: &DMatrix<f64>) -> ConeProblem {
        let n = c_mat.nrows();
        let len = svec_len(n);
        let c = svec_of(c_mat);
        let mut g = SparseCols::new(len, len);
        for k in 0..len {
            g.push(k, k, -1.0);
        }
        let mut a = SparseCols::new(1, len);
        let id = svec_of(&DMatrix::identity(n, n));
        for (k, v) in id.iter().enumerate() {
            a.push(0, k, *v);
        }
        ConeProblem {
            c,
            g,
            h: DVector::zeros(len),
            a,
            b: DVector::from_vec(vec![1.0]),
            cones: ConeSpec {
                blocks: vec![Cone::Psd(n)],
            },
        }
    }

    #[test]
    fn sdp_min_eigenvalue_diagonal() {
        let c_mat = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0, 2.0]));
        let prob = min_eig_problem(&c_mat);
        let sol = solve_default(&prob);
        assert_eq!(sol.status, SolverStatus::Optimal, "{}", sol.message);
        assert!((sol.objective - 1.0).abs() < 1e-6, "obj {}", sol.objective);
        // X = e2 e2'
        let xm = smat(sol.x.as_slice(), 3);
        assert!((xm[(1, 1)] - 1.0).abs() < 1e-5);
        assert!(xm[(0, 0)].abs() < 1e-5 && xm[(2, 2)].abs() < 1e-5);
    }

    #[test]
    fn sdp_max_t_identity() {
        // maximize t s.t. diag(1,1) - t I >= 0  ->  t = 1
        let mut g = SparseCols::new(3, 1);
        let id = svec_of(&DMatrix::identity(2, 2));
        for (k, v) in id.iter().enumerate() {
            g.push(k, 0, *v);
        }
        let prob = ConeProblem {
            c: DVector::from_vec(vec![-1.0]),
            g,
            h: svec_of(&DMatrix::identity(2, 2)),
            a: SparseCols::new(0, 1),
            b: DVector::zeros(0),
            cones: ConeSpec {
                blocks: vec![Cone::Psd(2)],
            },
        };
        let sol = solve_default(&prob);
        assert_eq!(sol.status, SolverStatus::Optimal, "{}", sol.message);
        assert!((sol.x[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn lp_simple_box() {
        // minimize -x - 2y s.t. 0 <= x <= 1, 0 <= y <= 2 -> obj -5 at (1, 2)
        let mut g = SparseCols::new(4, 2);
        g.push(0, 0, -1.0);
        g.push(1, 1, -1.0);
        g.push(2, 0, 1.0);
        g.push(3, 1, 1.0);
        let prob = ConeProblem {
            c: DVector::from_vec(vec![-1.0, -2.0]),
            g,
            h: DVector::from_vec(vec![0.0, 0.0, 1.0, 2.0]),
            a: SparseCols::new(0, 2),
            b: DVector::zeros(0),
            cones: ConeSpec {
                blocks: vec![Cone::Nonneg(4)],
            },
        };
        let sol = solve_default(&prob);
        assert_eq!(sol.status, SolverStatus::Optimal, "{}", sol.message);
        assert!((sol.objective + 5.0).abs() < 1e-6);
        assert!((sol.x[0] - 1.0).abs() < 1e-6 && (sol.x[1] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn soc_norm_minimization() {
        // minimize t s.t. (t, 3, 4) in SOC -> t = 5
        let mut g = SparseCols::new(3, 1);
        g.push(0, 0, -1.0);
        let prob = ConeProblem {
            c: DVector::from_vec(vec![1.0]),
            g,
            h: DVector::from_vec(vec![0.0, 3.0, 4.0]),
            a: SparseCols::new(0, 1),
            b: DVector::zeros(0),
            cones: ConeSpec {
                blocks: vec![Cone::Soc(3)],
            },
        };
        let sol = solve_default(&prob);
        assert_eq!(sol.status, SolverStatus::Optimal, "{}", sol.message);
        assert!((sol.objective - 5.0).abs() < 1e-6, "obj {}", sol.objective);
    }

    #[test]
    fn detects_primal_infeasible() {
        // x >= 1 and x <= 0
        let mut g = SparseCols::new(2, 1);
        g.push(0, 0, -1.0);
        g.push(1, 0, 1.0);
        let prob = ConeProblem {
            c: DVector::from_vec(vec![0.0]),
            g,
            h: DVector::from_vec(vec![-1.0, 0.0]),
            a: SparseCols::new(0, 1),
            b: DVector::zeros(0),
            cones: ConeSpec {
                blocks: vec![Cone::Nonneg(2)],
            },
        };
        let sol = solve_default(&prob);
        assert_eq!(sol.status, SolverStatus::PrimalInfeasible, "{}", sol.message);
        // certificate: z >= 0, G'z ~ 0, h'z < 0
        let gtz = prob.g.tr_mul_vec(&sol.z);
        assert!(gtz.norm() < 1e-6);
        assert!(prob.h.dot(&sol.z) < -0.9);
    }

    #[test]
    fn detects_dual_infeasible() {
        // minimize -x s.t. x >= 0: unbounded below
        let mut g = SparseCols::new(1, 1);
        g.push(0, 0, -1.0);
        let prob = ConeProblem {
            c: DVector::from_vec(vec![-1.0]),
            g,
            h: DVector::zeros(1),
            a: SparseCols::new(0, 1),
            b: DVector::zeros(0),
            cones: ConeSpec {
                blocks: vec![Cone::Nonneg(1)],
            },
        };
        let sol = solve_default(&prob);
        assert_eq!(sol.status, SolverStatus::DualInfeasible, "{}", sol.message);
        assert!(prob.c.dot(&sol.x) < -0.9);
    }

    #[test]
    fn random_sdps_match_eigenvalue_reference() {
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        for trial in 0..20 {
            let n = 3 + trial % 4;
            let raw = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
            let c_mat = (&raw + raw.transpose()) * 0.5;
            let lmin = SymmetricEigen::new(c_mat.clone())
                .eigenvalues
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            let prob = min_eig_problem(&c_mat);
            let sol = solve_default(&prob);
            assert_eq!(sol.status, SolverStatus::Optimal, "trial {trial}: {}", sol.message);
            assert!(
                (sol.objective - lmin).abs() < 1e-6,
                "trial {trial}: {} vs {}",
                sol.objective,
                lmin
            );
            let report = certify(&prob, &sol.x);
            assert!(report.max_violation < 1e-6, "trial {trial}");
        }
    }

    #[test]
    fn weak_duality_along_trace() {
        let c_mat = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.1, 0.3, 1.0, -0.2, 0.1, -0.2, 1.5]);
        let prob = min_eig_problem(&c_mat);
        let sol = solve_default(&prob);
        assert_eq!(sol.status, SolverStatus::Optimal);
        for rec in &sol.trace {
            // minimization form: dual cost never exceeds primal cost
            assert!(
                rec.dcost <= rec.pcost + rec.pres.max(rec.dres).max(1e-9) * 10.0 + rec.gap,
                "dcost {} pcost {}",
                rec.dcost,
                rec.pcost
            );
        }
    }

    #[test]
    fn objective_scaling_leaves_argmin_unchanged() {
        let c_mat = DMatrix::from_row_slice(2, 2, &[1.0, 0.4, 0.4, 2.0]);
        let base = min_eig_problem(&c_mat);
        let mut scaled = base.clone();
        scaled.c *= 7.5;
        let sol_a = solve_default(&base);
        let sol_b = solve_default(&scaled);
        assert_eq!(sol_a.status, SolverStatus::Optimal);
        assert_eq!(sol_b.status, SolverStatus::Optimal);
        assert!((&sol_a.x - &sol_b.x).norm() < 1e-6);
    }

    #[test]
    fn determinism_same_program_same_result() {
        let c_mat = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.1, 0.3, 1.0, -0.2, 0.1, -0.2, 1.5]);
        let prob = min_eig_problem(&c_mat);
        let a = solve_default(&prob);
        let b = solve_default(&prob);
        assert_eq!(a.iterations, b.iterations);
        assert_eq!(a.x, b.x);
    }

    #[test]
    fn certify_flags_constructed_violation() {
        let c_mat = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0, 2.0]));
        let prob = min_eig_problem(&c_mat);
        // hand-built feasible point: X = I/3
        let x = svec_of(&(DMatrix::identity(3, 3) / 3.0));
        let report = certify(&prob, &x);
        assert!(report.max_violation <= 1e-12);
        // perturbing the trace equality by 1e-3 must be flagged
        let mut bad = x.clone();
        bad[0] += 1e-3;
        let report = certify(&prob, &bad);
        assert!(report.max_violation >= 1e-4);
    }

    #[test]
    fn mixed_cone_problem_solves() {
        // minimize x1 + x2 s.t. (x1, 1) in SOC, (x2, 2) in SOC, x1 + x2 >= 3
        let mut g = SparseCols::new(5, 2);
        g.push(0, 0, -1.0);
        g.push(2, 1, -1.0);
        g.push(4, 0, -1.0);
        g.push(4, 1, -1.0);
        let prob = ConeProblem {
            c: DVector::from_vec(vec![1.0, 1.0]),
            g,
            h: DVector::from_vec(vec![0.0, 1.0, 0.0, 2.0, -3.0]),
            a: SparseCols::new(0, 2),
            b: DVector::zeros(0),
            cones: ConeSpec {
                blocks: vec![Cone::Soc(2), Cone::Soc(2), Cone::Nonneg(1)],
            },
        };
        let sol = solve_default(&prob);
        assert_eq!(sol.status, SolverStatus::Optimal, "{}", sol.message);
        // binding: x1 + x2 = 3 with x1 >= 1, x2 >= 2 -> objective 3
        assert!((sol.objective - 3.0).abs() < 1e-6);
    }

    #[test]
    fn corrector_off_still_converges() {
        let c_mat = DMatrix::from_row_slice(2, 2, &[1.0, 0.4, 0.4, 2.0]);
        let prob = min_eig_problem(&c_mat);
        let cfg = SolverConfig {
            use_corrector: false,
            ..Default::default()
        };
        let sol = solve(&prob, &cfg);
        assert_eq!(sol.status, SolverStatus::Optimal, "{}", sol.message);
        let lmin = SymmetricEigen::new(c_mat)
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        assert!((sol.objective - lmin).abs() < 1e-6);
    }
}

