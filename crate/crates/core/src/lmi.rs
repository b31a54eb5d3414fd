//! S-lemma LMI assembly of the robust inner design problem.
//!
//! For a fixed Eve-SINR cap `mu`, the inner problem maximizes the auxiliary
//! rate variable `eta` over the Charnes-Cooper variables `T_hat`, `R_hat`
//! and scalars `zeta, eta, lam1, lam2, lam3, xi`, subject to:
//! - Bob's robust rate LMI (ball around the BS-to-Bob channel),
//! - the robust BS-interference normalization LMI,
//! - Eve's robust SINR-cap LMI over the joint (channel, interference) balls,
//! - per-antenna robust INR linear rows from the Cauchy-Schwarz bound,
//! - the beampattern-mismatch second-order cone,
//! - PSD and power-trace constraints.
//!
//! Assembly stays in complex Hermitian form; [`ConicProgram::to_cone_problem`]
//! realifies every LMI block at the solver boundary.
//!
//! Variable count: `N^2 + M^2 + 6` real parameters. Each Hermitian matrix of
//! side `d` is parameterized column-major over the lower triangle: the
//! diagonal entry of column `j`, then (real, imaginary) pairs for rows below.

use crate::linalg::{CVector, HermitianMatrix, C64};
use crate::scenario::Scenario;
use crate::solver::{svec_of, Cone, ConeProblem, ConeSpec, SparseCols};
use nalgebra::{DMatrix, DVector};
use serde_json::json;

/// Strict-positivity floor for the Charnes-Cooper scaling variable.
pub const ZETA_MIN: f64 = 1e-8;

/// Number of real parameters of a Hermitian matrix of side `d`.
pub fn herm_param_count(d: usize) -> usize {
    d * d
}

/// `k`-th Hermitian basis matrix of side `d` (see module doc for ordering).
pub fn herm_basis(d: usize, k: usize) -> HermitianMatrix {
    let mut mat = DMatrix::<C64>::zeros(d, d);
    let (i, j, part) = herm_coord(d, k);
    match part {
        HermPart::Diag => mat[(i, j)] = C64::new(1.0, 0.0),
        HermPart::Re => {
            mat[(i, j)] = C64::new(1.0, 0.0);
            mat[(j, i)] = C64::new(1.0, 0.0);
        }
        HermPart::Im => {
            mat[(i, j)] = C64::new(0.0, 1.0);
            mat[(j, i)] = C64::new(0.0, -1.0);
        }
    }
    HermitianMatrix::symmetrized(mat)
}

enum HermPart {
    Diag,
    Re,
    Im,
}

/// Maps a parameter index to its (row, column, component) in the matrix.
fn herm_coord(d: usize, k: usize) -> (usize, usize, HermPart) {
    let mut idx = k;
    for j in 0..d {
        if idx == 0 {
            return (j, j, HermPart::Diag);
        }
        idx -= 1;
        let below = d - j - 1;
        if idx < 2 * below {
            let i = j + 1 + idx / 2;
            let part = if idx % 2 == 0 {
                HermPart::Re
            } else {
                HermPart::Im
            };
            return (i, j, part);
        }
        idx -= 2 * below;
    }
    panic!("hermitian parameter index {k} out of range for side {d}");
}

/// Reconstructs a Hermitian matrix from its real parameter slice.
pub fn herm_unpack(params: &[f64], d: usize) -> HermitianMatrix {
    assert_eq!(params.len(), herm_param_count(d));
    let mut mat = DMatrix::<C64>::zeros(d, d);
    for (k, &v) in params.iter().enumerate() {
        let (i, j, part) = herm_coord(d, k);
        match part {
            HermPart::Diag => mat[(i, j)] += C64::new(v, 0.0),
            HermPart::Re => {
                mat[(i, j)] += C64::new(v, 0.0);
                mat[(j, i)] += C64::new(v, 0.0);
            }
            HermPart::Im => {
                mat[(i, j)] += C64::new(0.0, v);
                mat[(j, i)] += C64::new(0.0, -v);
            }
        }
    }
    HermitianMatrix::symmetrized(mat)
}

/// Real parameter vector of a Hermitian matrix (inverse of [`herm_unpack`]).
pub fn herm_pack(h: &HermitianMatrix) -> Vec<f64> {
    let d = h.dim();
    let mat = h.matrix();
    let mut out = Vec::with_capacity(herm_param_count(d));
    for j in 0..d {
        out.push(mat[(j, j)].re);
        for i in j + 1..d {
            out.push(mat[(i, j)].re);
            out.push(mat[(i, j)].im);
        }
    }
    out
}

/// Offsets of the named variable blocks inside the flat real vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarLayout {
    /// BS antennas (side of `T_hat`).
    pub n: usize,
    /// Radar antennas (side of `R_hat`).
    pub m: usize,
}

impl VarLayout {
    pub fn dim(&self) -> usize {
        herm_param_count(self.n) + herm_param_count(self.m) + 6
    }

    pub fn t_hat(&self) -> usize {
        0
    }

    pub fn r_hat(&self) -> usize {
        herm_param_count(self.n)
    }

    pub fn zeta(&self) -> usize {
        herm_param_count(self.n) + herm_param_count(self.m)
    }

    pub fn eta(&self) -> usize {
        self.zeta() + 1
    }

    pub fn lam1(&self) -> usize {
        self.zeta() + 2
    }

    pub fn lam2(&self) -> usize {
        self.zeta() + 3
    }

    pub fn lam3(&self) -> usize {
        self.zeta() + 4
    }

    pub fn xi(&self) -> usize {
        self.zeta() + 5
    }

    /// Decodes a flat solver vector into the named variable blocks.
    pub fn unpack(&self, x: &DVector<f64>) -> Assignment {
        assert_eq!(x.len(), self.dim());
        let xs = x.as_slice();
        Assignment {
            t_hat: herm_unpack(&xs[self.t_hat()..self.r_hat()], self.n),
            r_hat: herm_unpack(&xs[self.r_hat()..self.zeta()], self.m),
            zeta: x[self.zeta()],
            eta: x[self.eta()],
            lam1: x[self.lam1()],
            lam2: x[self.lam2()],
            lam3: x[self.lam3()],
            xi: x[self.xi()],
        }
    }

    /// Encodes named variable blocks into a flat solver vector.
    pub fn pack(&self, a: &Assignment) -> DVector<f64> {
        let mut x = DVector::zeros(self.dim());
        for (k, v) in herm_pack(&a.t_hat).into_iter().enumerate() {
            x[self.t_hat() + k] = v;
        }
        for (k, v) in herm_pack(&a.r_hat).into_iter().enumerate() {
            x[self.r_hat() + k] = v;
        }
        x[self.zeta()] = a.zeta;
        x[self.eta()] = a.eta;
        x[self.lam1()] = a.lam1;
        x[self.lam2()] = a.lam2;
        x[self.lam3()] = a.lam3;
        x[self.xi()] = a.xi;
        x
    }
}

/// Named variable values of one inner problem.
#[derive(Debug, Clone)]
pub struct Assignment {
    pub t_hat: HermitianMatrix,
    pub r_hat: HermitianMatrix,
    pub zeta: f64,
    pub eta: f64,
    pub lam1: f64,
    pub lam2: f64,
    pub lam3: f64,
    pub xi: f64,
}

/// One affine LMI block: `constant + sum_k x_k * coeff_k >= 0` (PSD order).
#[derive(Debug, Clone)]
pub struct LmiBlock {
    pub name: String,
    pub dim: usize,
    pub constant: HermitianMatrix,
    /// Sparse coefficient map: flat variable index -> Hermitian coefficient.
    pub coeffs: Vec<(usize, HermitianMatrix)>,
}

impl LmiBlock {
    fn new(name: &str, dim: usize) -> Self {
        Self {
            name: name.to_string(),
            dim,
            constant: HermitianMatrix::zeros(dim),
            coeffs: vec![],
        }
    }

    fn push(&mut self, var: usize, coeff: HermitianMatrix) {
        debug_assert_eq!(coeff.dim(), self.dim);
        if coeff.frobenius_norm() > 0.0 {
            self.coeffs.push((var, coeff));
        }
    }

    /// Evaluates the block at a flat variable vector; Hermitian by construction.
    pub fn evaluate(&self, x: &DVector<f64>) -> HermitianMatrix {
        let mut out = self.constant.clone();
        for (var, coeff) in &self.coeffs {
            out = out.add(&coeff.scale(x[*var]));
        }
        out
    }
}

/// Direction of a scalar linear constraint row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    /// `row . x <= rhs`
    Le,
    /// `row . x == rhs`
    Eq,
}

/// One scalar linear constraint on the flat variable vector.
#[derive(Debug, Clone)]
pub struct LinearConstraint {
    pub name: String,
    /// Sparse row: (flat variable index, coefficient).
    pub row: Vec<(usize, f64)>,
    pub rhs: f64,
    pub kind: RowKind,
}

impl LinearConstraint {
    /// Signed violation `row . x - rhs` (positive means violated for `Le`).
    pub fn residual(&self, x: &DVector<f64>) -> f64 {
        self.row.iter().map(|&(k, v)| v * x[k]).sum::<f64>() - self.rhs
    }
}

/// Second-order cone constraint `|| body(x) || <= head(x)` with affine rows.
#[derive(Debug, Clone)]
pub struct SocConstraint {
    pub name: String,
    /// Head row `(sparse coefficients, constant)`.
    pub head: (Vec<(usize, f64)>, f64),
    /// Body rows, same affine encoding.
    pub body: Vec<(Vec<(usize, f64)>, f64)>,
}

impl SocConstraint {
    fn eval_row(row: &(Vec<(usize, f64)>, f64), x: &DVector<f64>) -> f64 {
        row.0.iter().map(|&(k, v)| v * x[k]).sum::<f64>() + row.1
    }

    /// `|| body || - head` (positive means violated).
    pub fn residual(&self, x: &DVector<f64>) -> f64 {
        let norm2: f64 = self
            .body
            .iter()
            .map(|r| Self::eval_row(r, x).powi(2))
            .sum();
        norm2.sqrt() - Self::eval_row(&self.head, x)
    }
}

/// The assembled inner convex problem for one `mu` value.
#[derive(Debug, Clone)]
pub struct ConicProgram {
    pub layout: VarLayout,
    /// Maximized linear objective over the flat variable vector.
    pub objective: Vec<(usize, f64)>,
    pub blocks: Vec<LmiBlock>,
    pub socs: Vec<SocConstraint>,
    pub linear: Vec<LinearConstraint>,
}

/// Eve's robust SINR-cap constraint; degenerates to a scalar row when both
/// error radii vanish.
#[derive(Debug, Clone)]
pub enum EveRobust {
    Lmi(LmiBlock),
    Scalar(LinearConstraint),
}

/// `V E V^H` for `V = [I; v^H]`, the bordered lift used by the rate LMIs.
fn bordered_lift(e: &HermitianMatrix, v: &CVector) -> HermitianMatrix {
    let d = e.dim();
    let mut lift = DMatrix::<C64>::zeros(d + 1, d);
    for i in 0..d {
        lift[(i, i)] = C64::new(1.0, 0.0);
        lift[(d, i)] = v[i].conj();
    }
    HermitianMatrix::symmetrized(&lift * e.matrix() * lift.adjoint())
}

/// Scalar unit matrix `e_pos e_pos^T * value` inside a block of side `dim`.
fn corner(dim: usize, pos: usize, value: f64) -> HermitianMatrix {
    let mut mat = DMatrix::<C64>::zeros(dim, dim);
    mat[(pos, pos)] = C64::new(value, 0.0);
    HermitianMatrix::symmetrized(mat)
}

/// Identity on the leading `count` rows scaled by `value`, side `dim`.
fn leading_identity(dim: usize, count: usize, value: f64) -> HermitianMatrix {
    let mut mat = DMatrix::<C64>::zeros(dim, dim);
    for i in 0..count {
        mat[(i, i)] = C64::new(value, 0.0);
    }
    HermitianMatrix::symmetrized(mat)
}

/// Bob's robust rate LMI (dimension N+1): for every channel error in the
/// ball, the useful received power is at least `eta`.
pub fn build_bob_rate_lmi(sc: &Scenario, vars: &VarLayout) -> LmiBlock {
    let n = vars.n;
    let dim = n + 1;
    let mut block = LmiBlock::new("bob-rate", dim);
    for k in 0..herm_param_count(n) {
        block.push(
            vars.t_hat() + k,
            bordered_lift(&herm_basis(n, k), &sc.h_bar_b),
        );
    }
    let mut lam = leading_identity(dim, n, 1.0);
    lam = lam.add(&corner(dim, n, -sc.eps_hb * sc.eps_hb));
    block.push(vars.lam1(), lam);
    block.push(vars.eta(), corner(dim, n, -1.0));
    block
}

/// BS-interference normalization LMI (dimension M+1): for every interference
/// channel error, `f_b^H R_hat f_b + zeta sigma_b^2 <= 1`.
pub fn build_bs_interference_lmi(sc: &Scenario, vars: &VarLayout) -> LmiBlock {
    let m = vars.m;
    let dim = m + 1;
    let mut block = LmiBlock::new("bs-interference", dim);
    for k in 0..herm_param_count(m) {
        block.push(
            vars.r_hat() + k,
            bordered_lift(&herm_basis(m, k), &sc.f_bar_b).scale(-1.0),
        );
    }
    let mut lam = leading_identity(dim, m, 1.0);
    lam = lam.add(&corner(dim, m, -sc.eps_fb * sc.eps_fb));
    block.push(vars.lam2(), lam);
    block.push(vars.zeta(), corner(dim, m, -sc.sigma_b2));
    block.constant = corner(dim, m, 1.0);
    block
}

/// Eve's robust SINR-cap constraint for the given `mu`, choosing the LMI
/// shape that matches which error radii are strictly positive.
pub fn build_eve_lmi(sc: &Scenario, vars: &VarLayout, mu: f64) -> EveRobust {
    assert!(mu >= 0.0, "mu must be nonnegative");
    let (n, m) = (vars.n, vars.m);
    if sc.eps_fe > 0.0 {
        // joint two-ball LMI, dimension N + M + 1 (valid for eps_he >= 0)
        let dim = n + m + 1;
        let mut block = LmiBlock::new("eve-sinr", dim);
        for k in 0..herm_param_count(n) {
            let sub = bordered_lift(&herm_basis(n, k), &sc.h_bar_e);
            let mut mat = DMatrix::<C64>::zeros(dim, dim);
            mat.view_mut((0, 0), (n + 1, n + 1))
                .copy_from(sub.matrix());
            block.push(
                vars.t_hat() + k,
                HermitianMatrix::symmetrized(mat).scale(-1.0),
            );
        }
        for k in 0..herm_param_count(m) {
            // W E W^H with W = [f_e^H; I], covering the (2,2)-(3,3) corner
            let e = herm_basis(m, k);
            let mut lift = DMatrix::<C64>::zeros(m + 1, m);
            for i in 0..m {
                lift[(0, i)] = sc.f_bar_e[i].conj();
                lift[(i + 1, i)] = C64::new(1.0, 0.0);
            }
            let sub = &lift * e.matrix() * lift.adjoint();
            let mut mat = DMatrix::<C64>::zeros(dim, dim);
            mat.view_mut((n, n), (m + 1, m + 1)).copy_from(&sub);
            block.push(vars.r_hat() + k, HermitianMatrix::symmetrized(mat).scale(mu));
        }
        block.push(vars.zeta(), corner(dim, n, mu * sc.sigma_e2));
        let mut lam = leading_identity(dim, n, 1.0);
        lam = lam.add(&corner(dim, n, -sc.eps_he * sc.eps_he));
        block.push(vars.lam3(), lam);
        let mut xi = corner(dim, n, -1.0);
        let inv = 1.0 / (sc.eps_fe * sc.eps_fe);
        let mut tail = DMatrix::<C64>::zeros(dim, dim);
        for i in n + 1..dim {
            tail[(i, i)] = C64::new(inv, 0.0);
        }
        xi = xi.add(&HermitianMatrix::symmetrized(tail));
        block.push(vars.xi(), xi);
        EveRobust::Lmi(block)
    } else if sc.eps_he > 0.0 {
        // single-ball LMI over the Eve channel error, dimension N+1
        let dim = n + 1;
        let mut block = LmiBlock::new("eve-sinr", dim);
        for k in 0..herm_param_count(n) {
            block.push(
                vars.t_hat() + k,
                bordered_lift(&herm_basis(n, k), &sc.h_bar_e).scale(-1.0),
            );
        }
        for k in 0..herm_param_count(m) {
            let q = herm_basis(m, k).quadratic_form(&sc.f_bar_e);
            block.push(vars.r_hat() + k, corner(dim, n, mu * q));
        }
        block.push(vars.zeta(), corner(dim, n, mu * sc.sigma_e2));
        let mut lam = leading_identity(dim, n, 1.0);
        lam = lam.add(&corner(dim, n, -sc.eps_he * sc.eps_he));
        block.push(vars.lam3(), lam);
        EveRobust::Lmi(block)
    } else {
        // both radii zero: nominal scalar constraint
        let mut row = vec![];
        for k in 0..herm_param_count(n) {
            let q = herm_basis(n, k).quadratic_form(&sc.h_bar_e);
            if q != 0.0 {
                row.push((vars.t_hat() + k, q));
            }
        }
        for k in 0..herm_param_count(m) {
            let q = herm_basis(m, k).quadratic_form(&sc.f_bar_e);
            if q != 0.0 {
                row.push((vars.r_hat() + k, -mu * q));
            }
        }
        row.push((vars.zeta(), -mu * sc.sigma_e2));
        EveRobust::Scalar(LinearConstraint {
            name: "eve-sinr".into(),
            row,
            rhs: 0.0,
            kind: RowKind::Le,
        })
    }
}

/// Per-antenna robust INR rows from the Cauchy-Schwarz upper bound.
pub fn build_robust_inr_constraints(sc: &Scenario, vars: &VarLayout) -> Vec<LinearConstraint> {
    let n = vars.n;
    (0..sc.m_radar)
        .map(|idx| {
            let u: CVector = sc.g_bar[idx].map(|z| z.conj());
            let slack = 2.0 * sc.eps_gm * sc.g_bar[idx].norm() + sc.eps_gm * sc.eps_gm;
            let mut row = vec![];
            for k in 0..herm_param_count(n) {
                let e = herm_basis(n, k);
                let v = e.quadratic_form(&u) + slack * e.trace();
                if v != 0.0 {
                    row.push((vars.t_hat() + k, v));
                }
            }
            row.push((vars.zeta(), -sc.gamma_inr[idx] * sc.sigma_r2));
            LinearConstraint {
                name: format!("inr-{idx}"),
                row,
                rhs: 0.0,
                kind: RowKind::Le,
            }
        })
        .collect()
}

/// Beampattern-mismatch cone `||R_hat - zeta R_d||_F <= sqrt(gamma_p) zeta`.
pub fn build_mismatch_soc(sc: &Scenario, vars: &VarLayout, r_d: &HermitianMatrix) -> SocConstraint {
    let m = vars.m;
    assert_eq!(r_d.dim(), m);
    // stack real and imaginary parts of every entry of R_hat - zeta R_d;
    // the Euclidean norm of the stack equals the Frobenius norm. Row index
    // of the (rowi, col) entry's re/im component: ((col*m + rowi)*2 + im).
    let mut body: Vec<(Vec<(usize, f64)>, f64)> = vec![(vec![], 0.0); 2 * m * m];
    for k in 0..herm_param_count(m) {
        let basis = herm_basis(m, k);
        let mat = basis.matrix();
        for col in 0..m {
            for rowi in 0..m {
                let z = mat[(rowi, col)];
                let base = (col * m + rowi) * 2;
                if z.re != 0.0 {
                    body[base].0.push((vars.r_hat() + k, z.re));
                }
                if z.im != 0.0 {
                    body[base + 1].0.push((vars.r_hat() + k, z.im));
                }
            }
        }
    }
    for col in 0..m {
        for rowi in 0..m {
            let rd = r_d.matrix()[(rowi, col)];
            let base = (col * m + rowi) * 2;
            if rd.re != 0.0 {
                body[base].0.push((vars.zeta(), -rd.re));
            }
            if rd.im != 0.0 {
                body[base + 1].0.push((vars.zeta(), -rd.im));
            }
        }
    }
    SocConstraint {
        name: "mismatch".into(),
        head: (vec![(vars.zeta(), sc.gamma_p.sqrt())], 0.0),
        body,
    }
}

/// Assembles the full inner problem for one `mu`: maximize `eta` over all
/// constraint families plus PSD, power-trace and sign constraints.
pub fn assemble(sc: &Scenario, r_d: &HermitianMatrix, mu: f64) -> ConicProgram {
    let vars = VarLayout {
        n: sc.n_bs,
        m: sc.m_radar,
    };
    let (n, m) = (vars.n, vars.m);

    let mut blocks = vec![];
    let mut linear = vec![];

    // PSD(T_hat) and PSD(R_hat) as plain LMI blocks
    let mut psd_t = LmiBlock::new("psd-t", n);
    for k in 0..herm_param_count(n) {
        psd_t.push(vars.t_hat() + k, herm_basis(n, k));
    }
    blocks.push(psd_t);
    let mut psd_r = LmiBlock::new("psd-r", m);
    for k in 0..herm_param_count(m) {
        psd_r.push(vars.r_hat() + k, herm_basis(m, k));
    }
    blocks.push(psd_r);

    blocks.push(build_bob_rate_lmi(sc, &vars));
    blocks.push(build_bs_interference_lmi(sc, &vars));
    match build_eve_lmi(sc, &vars, mu) {
        EveRobust::Lmi(b) => blocks.push(b),
        EveRobust::Scalar(c) => linear.push(c),
    }

    linear.extend(build_robust_inr_constraints(sc, &vars));

    let trace_row = |base: usize, side: usize| -> Vec<(usize, f64)> {
        (0..herm_param_count(side))
            .filter_map(|k| {
                let t = herm_basis(side, k).trace();
                (t != 0.0).then_some((base + k, t))
            })
            .collect()
    };
    let mut pc_row = trace_row(vars.t_hat(), n);
    pc_row.push((vars.zeta(), -sc.p_c));
    linear.push(LinearConstraint {
        name: "power-bs".into(),
        row: pc_row,
        rhs: 0.0,
        kind: RowKind::Le,
    });
    let mut pr_row = trace_row(vars.r_hat(), m);
    pr_row.push((vars.zeta(), -sc.p_r));
    linear.push(LinearConstraint {
        name: "power-radar".into(),
        row: pr_row,
        rhs: 0.0,
        kind: RowKind::Le,
    });
    linear.push(LinearConstraint {
        name: "zeta-floor".into(),
        row: vec![(vars.zeta(), -1.0)],
        rhs: -ZETA_MIN,
        kind: RowKind::Le,
    });
    for (name, idx) in [
        ("lam1-sign", vars.lam1()),
        ("lam2-sign", vars.lam2()),
        ("lam3-sign", vars.lam3()),
        ("xi-sign", vars.xi()),
    ] {
        linear.push(LinearConstraint {
            name: name.into(),
            row: vec![(idx, -1.0)],
            rhs: 0.0,
            kind: RowKind::Le,
        });
    }

    ConicProgram {
        layout: vars,
        objective: vec![(vars.eta(), 1.0)],
        blocks,
        socs: vec![build_mismatch_soc(sc, &vars, r_d)],
        linear,
    }
}

impl ConicProgram {
    /// Lowers the program to the solver's real standard form (minimization),
    /// realifying every Hermitian LMI block.
    pub fn to_cone_problem(&self) -> ConeProblem {
        let d = self.layout.dim();
        let mut c = DVector::zeros(d);
        for &(k, v) in &self.objective {
            c[k] = -v;
        }

        let ineq: Vec<&LinearConstraint> = self
            .linear
            .iter()
            .filter(|r| r.kind == RowKind::Le)
            .collect();
        let eqs: Vec<&LinearConstraint> = self
            .linear
            .iter()
            .filter(|r| r.kind == RowKind::Eq)
            .collect();

        let mut cones = vec![];
        if !ineq.is_empty() {
            cones.push(Cone::Nonneg(ineq.len()));
        }
        for soc in &self.socs {
            cones.push(Cone::Soc(1 + soc.body.len()));
        }
        for block in &self.blocks {
            cones.push(Cone::Psd(2 * block.dim));
        }
        let spec = ConeSpec { blocks: cones };

        let mut g = SparseCols::new(spec.total_len(), d);
        let mut h = DVector::zeros(spec.total_len());
        let mut row0 = 0;
        for (i, lin) in ineq.iter().enumerate() {
            for &(k, v) in &lin.row {
                g.push(row0 + i, k, v);
            }
            h[row0 + i] = lin.rhs;
        }
        row0 += ineq.len();
        for soc in &self.socs {
            for &(k, v) in &soc.head.0 {
                g.push(row0, k, -v);
            }
            h[row0] = soc.head.1;
            for (i, (row, cst)) in soc.body.iter().enumerate() {
                for &(k, v) in row {
                    g.push(row0 + 1 + i, k, -v);
                }
                h[row0 + 1 + i] = *cst;
            }
            row0 += 1 + soc.body.len();
        }
        for block in &self.blocks {
            let side = 2 * block.dim;
            let sv = svec_of(&block.constant.realify());
            for (i, &v) in sv.iter().enumerate() {
                h[row0 + i] = v;
            }
            for (var, coeff) in &block.coeffs {
                let sv = svec_of(&coeff.realify());
                for (i, &v) in sv.iter().enumerate() {
                    if v != 0.0 {
                        g.push(row0 + i, *var, -v);
                    }
                }
            }
            row0 += crate::solver::svec_len(side);
        }

        let mut a = SparseCols::new(eqs.len(), d);
        let mut b = DVector::zeros(eqs.len());
        for (i, lin) in eqs.iter().enumerate() {
            for &(k, v) in &lin.row {
                a.push(i, k, v);
            }
            b[i] = lin.rhs;
        }

        ConeProblem {
            c,
            g,
            h,
            a,
            b,
            cones: spec,
        }
    }

    /// Maximum constraint violation of a flat assignment (PSD blocks by
    /// negative minimum eigenvalue, cones and rows by signed residual).
    pub fn max_violation(&self, x: &DVector<f64>) -> f64 {
        let mut worst: f64 = 0.0;
        for block in &self.blocks {
            worst = worst.max(-block.evaluate(x).min_eigenvalue());
        }
        for soc in &self.socs {
            worst = worst.max(soc.residual(x));
        }
        for lin in &self.linear {
            let r = lin.residual(x);
            worst = worst.max(if lin.kind == RowKind::Eq { r.abs() } else { r });
        }
        worst
    }

    /// Serializes the program to a JSON text format: named variable blocks,
    /// LMI matrices row-major as `[re, im]` pairs, sparse rows as
    /// `[index, value]` pairs.
    pub fn to_json_string(&self) -> String {
        let mat_json = |hm: &HermitianMatrix| {
            let d = hm.dim();
            let mat = hm.matrix();
            let rows: Vec<Vec<[f64; 2]>> = (0..d)
                .map(|i| (0..d).map(|j| [mat[(i, j)].re, mat[(i, j)].im]).collect())
                .collect();
            json!(rows)
        };
        let row_json = |row: &[(usize, f64)]| json!(row);
        let doc = json!({
            "variables": {
                "t_hat": {"kind": "hermitian", "side": self.layout.n, "offset": self.layout.t_hat()},
                "r_hat": {"kind": "hermitian", "side": self.layout.m, "offset": self.layout.r_hat()},
                "zeta": {"kind": "scalar", "offset": self.layout.zeta()},
                "eta": {"kind": "scalar", "offset": self.layout.eta()},
                "lam1": {"kind": "scalar", "offset": self.layout.lam1()},
                "lam2": {"kind": "scalar", "offset": self.layout.lam2()},
                "lam3": {"kind": "scalar", "offset": self.layout.lam3()},
                "xi": {"kind": "scalar", "offset": self.layout.xi()},
            },
            "dim": self.layout.dim(),
            "objective_maximize": row_json(&self.objective),
            "lmi_blocks": self.blocks.iter().map(|b| json!({
                "name": b.name,
                "dim": b.dim,
                "constant": mat_json(&b.constant),
                "coefficients": b.coeffs.iter().map(|(k, m)| json!({
                    "variable": k,
                    "matrix": mat_json(m),
                })).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
            "soc": self.socs.iter().map(|s| json!({
                "name": s.name,
                "head": {"row": row_json(&s.head.0), "constant": s.head.1},
                "body": s.body.iter().map(|(r, cst)| json!({
                    "row": row_json(r),
                    "constant": cst,
                })).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
            "linear": self.linear.iter().map(|l| json!({
                "name": l.name,
                "row": row_json(&l.row),
                "rhs": l.rhs,
                "kind": if l.kind == RowKind::Le { "le" } else { "eq" },
            })).collect::<Vec<_>>(),
        });
        serde_json::to_string_pretty(&doc).expect("json serialization")
    }
}
