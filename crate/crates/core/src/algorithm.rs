//! Two-layer robust cooperative design: a one-dimensional outer search over
//! the Eve-SINR cap `mu`, an inner conic solve per probe, Charnes-Cooper
//! recovery of `(T, R_x)`, and rank-one beamformer extraction.
//!
//! The outer grid is `{0}` plus log-spaced probes up to the closed-form
//! `mu` upper bound, followed by refinement passes around the incumbent
//! (the bound is orders of magnitude above the typical optimum, so a
//! uniform grid would waste nearly all probes far from it).

use crate::linalg::{CVector, HermitianMatrix};
use crate::lmi::{self, Assignment, ZETA_MIN};
use crate::scenario::{sample_cn_vector, Scenario};
use crate::secrecy::{self, SecrecyReport};
use crate::solver::{self, SolverConfig, SolverStatus};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AlgorithmError {
    #[error("scenario rejected: {0}")]
    BadScenario(String),
    #[error("every mu probe failed or was infeasible: {0}")]
    Infeasible(String),
    #[error("solver failure: {0}")]
    Solver(String),
}

/// Outer search grid over the Eve-SINR cap.
#[derive(Debug, Clone)]
pub struct SearchGrid {
    /// Coarse probe count (including the `mu = 0` probe).
    pub points: usize,
    /// Refinement passes around the incumbent, each 10x finer.
    pub refinement: usize,
    /// Decades spanned below `mu_max` by the log-spaced coarse grid.
    pub span_decades: f64,
}

impl Default for SearchGrid {
    fn default() -> Self {
        Self {
            points: 64,
            refinement: 2,
            span_decades: 8.0,
        }
    }
}

impl SearchGrid {
    /// `{0}` plus log-spaced probes up to `mu_max`.
    pub fn coarse_probes(&self, mu_max: f64) -> Vec<f64> {
        assert!(self.points >= 1);
        let mut out = vec![0.0];
        if mu_max <= 0.0 {
            return out;
        }
        let k = self.points - 1;
        for i in 0..k {
            let frac = if k == 1 {
                1.0
            } else {
                i as f64 / (k - 1) as f64
            };
            out.push(mu_max * 10f64.powf(-self.span_decades * (1.0 - frac)));
        }
        out
    }
}

/// One probe of the outer search.
#[derive(Debug, Clone, Serialize)]
pub struct MuProbe {
    pub mu: f64,
    /// Certified worst-case Bob SINR at this cap (NaN when infeasible).
    pub gamma_b: f64,
    /// `(1 + gamma_b) / (1 + mu)`; -inf when infeasible.
    pub objective: f64,
    pub status: String,
}

/// Feasible inner solution at one `mu`.
#[derive(Debug, Clone)]
pub struct InnerSolution {
    /// Certified worst-case Bob SINR (the inner optimum `eta`).
    pub gamma_b: f64,
    pub assignment: Assignment,
    pub iterations: usize,
    pub max_violation: f64,
}

/// Outcome of one inner solve.
#[derive(Debug, Clone)]
pub enum InnerOutcome {
    Feasible(InnerSolution),
    Infeasible { message: String },
}

/// Closed-form upper bound on the Eve-SINR cap worth searching:
/// `P_C (||h_b||^2 + eps_hb^2 + 2 eps_hb ||h_b||)`.
pub fn mu_upper_bound(sc: &Scenario) -> f64 {
    let n = sc.h_bar_b.norm();
    sc.p_c * (n * n + sc.eps_hb * sc.eps_hb + 2.0 * sc.eps_hb * n)
}

/// Solves the inner robust problem at a fixed `mu`; numerical failures are
/// retried once on a more conservative path before being surfaced.
pub fn inner_solve(
    sc: &Scenario,
    r_d: &HermitianMatrix,
    mu: f64,
) -> Result<InnerOutcome, AlgorithmError> {
    let prog = lmi::assemble(sc, r_d, mu);
    let cone = prog.to_cone_problem();
    let mut cfg = SolverConfig::default();
    let mut sol = solver::solve(&cone, &cfg);
    if !matches!(
        sol.status,
        SolverStatus::Optimal | SolverStatus::PrimalInfeasible
    ) {
        // retry with shorter steps and a larger iteration budget
        cfg.step_fraction = 0.9;
        cfg.max_iters = 400;
        sol = solver::solve(&cone, &cfg);
    }
    match sol.status {
        SolverStatus::PrimalInfeasible => Ok(InnerOutcome::Infeasible {
            message: sol.message,
        }),
        SolverStatus::Optimal => {
            let assignment = prog.layout.unpack(&sol.x);
            // zeta = 1 / (Bob interference + noise) is bounded well away from
            // zero for any feasible design; a zeta collapsed onto its
            // positivity floor means only the trivial homogenization ray
            // survived, i.e. the original problem is infeasible
            if assignment.zeta <= ZETA_MIN * 10.0 {
                return Ok(InnerOutcome::Infeasible {
                    message: format!(
                        "homogenization collapsed (zeta = {:.3e} at floor); \
                         constraints admit no feasible design",
                        assignment.zeta
                    ),
                });
            }
            Ok(InnerOutcome::Feasible(InnerSolution {
                gamma_b: assignment.eta.max(0.0),
                assignment,
                iterations: sol.iterations,
                max_violation: prog.max_violation(&sol.x),
            }))
        }
        _ => {
            // accept a near-feasible fallback iterate, else surface
            let violation = prog.max_violation(&sol.x);
            if violation <= 1e-6 && sol.x.iter().all(|v| v.is_finite()) {
                let assignment = prog.layout.unpack(&sol.x);
                if assignment.zeta <= ZETA_MIN * 10.0 {
                    return Ok(InnerOutcome::Infeasible {
                        message: format!(
                            "homogenization collapsed (zeta = {:.3e} at floor); \
                             constraints admit no feasible design",
                            assignment.zeta
                        ),
                    });
                }
                return Ok(InnerOutcome::Feasible(InnerSolution {
                    gamma_b: assignment.eta.max(0.0),
                    assignment,
                    iterations: sol.iterations,
                    max_violation: violation,
                }));
            }
            Err(AlgorithmError::Solver(format!(
                "mu = {mu}: status {} after {} iterations: {}",
                sol.status, sol.iterations, sol.message
            )))
        }
    }
}

/// Undoes the Charnes-Cooper scaling: `T = T_hat / zeta`, `R_x = R_hat / zeta`.
/// The boolean flags a `zeta` stuck at its positivity floor.
pub fn recover(assignment: &Assignment) -> (HermitianMatrix, HermitianMatrix, bool) {
    let zeta = assignment.zeta.max(ZETA_MIN);
    let degenerate = assignment.zeta <= ZETA_MIN * 10.0;
    (
        assignment.t_hat.scale(1.0 / zeta),
        assignment.r_hat.scale(1.0 / zeta),
        degenerate,
    )
}

/// Beamformer extraction settings.
#[derive(Debug, Clone)]
pub struct ExtractConfig {
    /// Rank ratio `lambda_2 / lambda_1` below which the dominant
    /// eigenvector is taken directly.
    pub rank_ratio_threshold: f64,
    /// Gaussian randomization candidate count.
    pub candidates: usize,
    /// Oracle sample budget used to rank candidates.
    pub rank_budget: usize,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        Self {
            rank_ratio_threshold: 1e-4,
            candidates: 1000,
            rank_budget: 400,
        }
    }
}

/// Extracted rank-one beamformer with diagnostics.
#[derive(Debug, Clone)]
pub struct Extraction {
    pub t: CVector,
    /// `lambda_2 / lambda_1` of the SDR matrix.
    pub rank_ratio: f64,
    pub randomized: bool,
    pub warning: Option<String>,
}

/// Largest feasible power scaling `c^2` for the candidate direction, from
/// the transmit power cap, the Cauchy-Schwarz robust INR bounds, and the
/// conservative robust Eve cap at `mu`.
fn feasible_scale(sc: &Scenario, r_x: &HermitianMatrix, t: &CVector, mu: f64) -> f64 {
    let p = t.norm_squared();
    if p <= 0.0 {
        return 0.0;
    }
    let mut c2 = sc.p_c / p;
    for (idx, g) in sc.g_bar.iter().enumerate() {
        let u: CVector = g.map(|z| z.conj());
        let slack = 2.0 * sc.eps_gm * g.norm() + sc.eps_gm * sc.eps_gm;
        let load = u.dotc(t).norm_sqr() + slack * p;
        if load > 0.0 {
            c2 = c2.min(sc.gamma_inr[idx] * sc.sigma_r2 / load);
        }
    }
    // robust Eve numerator upper bound vs. interference lower bound
    let num = (sc.h_bar_e.dotc(t).norm() + sc.eps_he * p.sqrt()).powi(2);
    if num > 0.0 {
        let rf = r_x.mul_vec(&sc.f_bar_e);
        let den = (r_x.quadratic_form(&sc.f_bar_e) - 2.0 * sc.eps_fe * rf.norm()).max(0.0)
            + sc.sigma_e2;
        c2 = c2.min(mu * den / num);
    }
    c2.max(0.0)
}

/// Rank-one beamformer from the SDR matrix: dominant eigenvector when the
/// matrix is numerically rank one, otherwise Gaussian randomization ranked
/// by the worst-case oracle.
pub fn extract_beamformer(
    t_mat: &HermitianMatrix,
    sc: &Scenario,
    r_x: &HermitianMatrix,
    mu: f64,
    cfg: &ExtractConfig,
    seed: u64,
) -> Extraction {
    let (mut vals, vecs) = t_mat.eigendecompose();
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[b].partial_cmp(&vals[a]).unwrap());
    let lam1 = vals[order[0]].max(0.0);
    let lam2 = if order.len() > 1 {
        vals[order[1]].max(0.0)
    } else {
        0.0
    };
    for v in vals.iter_mut() {
        *v = v.max(0.0);
    }
    if lam1 <= 0.0 {
        return Extraction {
            t: CVector::zeros(t_mat.dim()),
            rank_ratio: 0.0,
            randomized: false,
            warning: None,
        };
    }
    let rank_ratio = lam2 / lam1;
    let principal = vecs[order[0]].scale(lam1.sqrt());
    if rank_ratio <= cfg.rank_ratio_threshold {
        return Extraction {
            t: principal,
            rank_ratio,
            randomized: false,
            warning: None,
        };
    }

    // Gaussian randomization: draw t ~ CN(0, T), rescale into the feasible
    // set, keep the candidate with the best oracle worst-case secrecy rate
    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let sqrt_cols: Vec<CVector> = order
        .iter()
        .map(|&i| vecs[i].scale(vals[i].sqrt()))
        .collect();
    let mut best: Option<(CVector, f64)> = None;
    for _ in 0..cfg.candidates {
        let g = sample_cn_vector(sqrt_cols.len(), 1.0, &mut rng);
        let mut cand = CVector::zeros(t_mat.dim());
        for (col, gi) in sqrt_cols.iter().zip(g.iter()) {
            cand += col.scale(1.0) * *gi;
        }
        let c2 = feasible_scale(sc, r_x, &cand, mu);
        if !(c2 > 0.0) || !c2.is_finite() {
            continue;
        }
        let cand = cand.scale(c2.sqrt());
        let rep = secrecy::worst_case_secrecy(
            sc,
            &HermitianMatrix::outer(&cand),
            r_x,
            cfg.rank_budget,
            seed,
        );
        if best.as_ref().is_none_or(|(_, s)| rep.secrecy_rate > *s) {
            best = Some((cand, rep.secrecy_rate));
        }
    }
    match best {
        Some((t, _)) => Extraction {
            t,
            rank_ratio,
            randomized: true,
            warning: None,
        },
        None => {
            let c2 = feasible_scale(sc, r_x, &principal, mu).min(1.0);
            Extraction {
                t: principal.scale(c2.max(0.0).sqrt()),
                rank_ratio,
                randomized: true,
                warning: Some(
                    "no feasible randomized candidate; dominant-eigenvector fallback".into(),
                ),
            }
        }
    }
}

/// Final certified design with search diagnostics.
#[derive(Debug, Clone)]
pub struct DesignSolution {
    /// Extracted rank-one beamformer.
    pub t: CVector,
    /// SDR matrix design.
    pub t_mat: HermitianMatrix,
    pub r_x: HermitianMatrix,
    pub mu_star: f64,
    pub eta_star: f64,
    pub zeta_star: f64,
    /// `(1 + gamma_b(mu*)) / (1 + mu*)` — the certified SDR ratio.
    pub objective: f64,
    /// `log2(objective)`: certified worst-case secrecy rate of the SDR design.
    pub sdr_bound_rate: f64,
    /// Certified worst-case secrecy rate of the rank-one beamformer in the
    /// same conservative frame (provably `<= sdr_bound_rate`).
    pub rank_one_certified_rate: f64,
    /// `lambda_2 / lambda_1` of the SDR matrix.
    pub rank_ratio: f64,
    pub randomized: bool,
    pub extraction_warning: Option<String>,
    pub degenerate_zeta: bool,
    /// Oracle worst-case report of the SDR matrix design.
    pub oracle_sdr: SecrecyReport,
    /// Oracle worst-case report of the rank-one design.
    pub oracle_rank_one: SecrecyReport,
    pub per_mu_trace: Vec<MuProbe>,
    /// Inner solves actually performed (equals probe count).
    pub inner_solves: usize,
}

impl DesignSolution {
    /// Probes where `gamma_b` decreased against a smaller feasible `mu`
    /// by more than `tol` (monotonicity should hold up to solver accuracy).
    pub fn gamma_monotonicity_violations(&self, tol: f64) -> Vec<(f64, f64)> {
        let mut out = vec![];
        let mut last: Option<(f64, f64)> = None;
        let mut probes: Vec<&MuProbe> = self
            .per_mu_trace
            .iter()
            .filter(|p| p.gamma_b.is_finite())
            .collect();
        probes.sort_by(|a, b| a.mu.partial_cmp(&b.mu).unwrap());
        for p in probes {
            if let Some((lm, lg)) = last {
                if p.gamma_b < lg - tol {
                    out.push((lm, p.mu));
                }
            }
            last = Some((p.mu, p.gamma_b));
        }
        out
    }

    /// JSON text with the full search trace and both designs.
    pub fn to_json_string(&self) -> String {
        let mat = |hm: &HermitianMatrix| {
            let d = hm.dim();
            let m = hm.matrix();
            let rows: Vec<Vec<[f64; 2]>> = (0..d)
                .map(|i| (0..d).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
                .collect();
            json!(rows)
        };
        let vecj = |v: &CVector| {
            let entries: Vec<[f64; 2]> = v.iter().map(|z| [z.re, z.im]).collect();
            json!(entries)
        };
        let doc = json!({
            "t": vecj(&self.t),
            "t_mat": mat(&self.t_mat),
            "r_x": mat(&self.r_x),
            "mu_star": self.mu_star,
            "eta_star": self.eta_star,
            "zeta_star": self.zeta_star,
            "objective": self.objective,
            "sdr_bound_rate": self.sdr_bound_rate,
            "rank_one_certified_rate": self.rank_one_certified_rate,
            "rank_ratio": self.rank_ratio,
            "randomized": self.randomized,
            "degenerate_zeta": self.degenerate_zeta,
            "oracle_sdr_secrecy": self.oracle_sdr.secrecy_rate,
            "oracle_rank_one_secrecy": self.oracle_rank_one.secrecy_rate,
            "inner_solves": self.inner_solves,
            "per_mu_trace": self.per_mu_trace,
        });
        serde_json::to_string_pretty(&doc).expect("json serialization")
    }
}

/// Certified rank-one worst-case Bob SINR lower bound in the SDP's
/// conservative frame.
fn rank_one_gamma_b(sc: &Scenario, r_x: &HermitianMatrix, t: &CVector) -> f64 {
    let num = (sc.h_bar_b.dotc(t).norm() - sc.eps_hb * t.norm()).max(0.0).powi(2);
    let rf = r_x.mul_vec(&sc.f_bar_b);
    let lam_max = r_x
        .eigendecompose()
        .0
        .into_iter()
        .fold(0.0f64, |a, b| a.max(b));
    let den = r_x.quadratic_form(&sc.f_bar_b)
        + 2.0 * sc.eps_fb * rf.norm()
        + sc.eps_fb * sc.eps_fb * lam_max
        + sc.sigma_b2;
    num / den
}

/// Runs the full two-layer design for one scenario.
pub fn run(
    sc: &Scenario,
    r_d: &HermitianMatrix,
    grid: &SearchGrid,
    oracle_budget: usize,
    seed: u64,
) -> Result<DesignSolution, AlgorithmError> {
    sc.validate()
        .map_err(|e| AlgorithmError::BadScenario(e.to_string()))?;
    let mu_max = mu_upper_bound(sc);
    let mut trace: Vec<MuProbe> = vec![];
    let mut best: Option<(usize, InnerSolution)> = None;

    let probe = |mu: f64,
                     trace: &mut Vec<MuProbe>,
                     best: &mut Option<(usize, InnerSolution)>| {
        let record = match inner_solve(sc, r_d, mu) {
            Ok(InnerOutcome::Feasible(sol)) => {
                let objective = (1.0 + sol.gamma_b) / (1.0 + mu);
                let replace = best
                    .as_ref()
                    .is_none_or(|(i, _)| objective > trace[*i].objective);
                if replace {
                    *best = Some((trace.len(), sol.clone()));
                }
                MuProbe {
                    mu,
                    gamma_b: sol.gamma_b,
                    objective,
                    status: "optimal".into(),
                }
            }
            Ok(InnerOutcome::Infeasible { message }) => MuProbe {
                mu,
                gamma_b: f64::NAN,
                objective: f64::NEG_INFINITY,
                status: format!("infeasible: {message}"),
            },
            Err(e) => MuProbe {
                mu,
                gamma_b: f64::NAN,
                objective: f64::NEG_INFINITY,
                status: format!("failed: {e}"),
            },
        };
        trace.push(record);
    };

    // Probe order: largest mu first. gamma_b(mu) is non-decreasing in mu
    // (raising the Eve cap only enlarges the feasible set), so the largest
    // probe's gamma_b caps the objective (1 + gamma_b)/(1 + mu) attainable at
    // every other probe; walking the rest in ascending order grows the
    // incumbent fast and lets provably dominated probes be skipped unsolved.
    // The 0.1% slack on the cap absorbs solver-level wobble in gamma_b(mu).
    let mut coarse = grid.coarse_probes(mu_max);
    coarse.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut order: Vec<f64> = vec![];
    if let Some(&top) = coarse.last() {
        order.push(top);
    }
    order.extend(coarse.iter().copied().take(coarse.len().saturating_sub(1)));
    let mut gamma_b_cap = f64::NEG_INFINITY;
    for mu in order {
        if gamma_b_cap.is_finite() {
            let incumbent = best
                .as_ref()
                .map_or(f64::NEG_INFINITY, |(i, _)| trace[*i].objective);
            let bound = (1.0 + gamma_b_cap * 1.001 + 1e-9) / (1.0 + mu);
            if bound <= incumbent {
                continue;
            }
        }
        probe(mu, &mut trace, &mut best);
        if let Some(last) = trace.last() {
            if last.gamma_b.is_finite() {
                gamma_b_cap = gamma_b_cap.max(last.gamma_b);
            }
        }
    }
    for _ in 0..grid.refinement {
        let Some((idx, _)) = &best else { break };
        let mu_star = trace[*idx].mu;
        // bracket the incumbent by its nearest probed neighbors
        let mut lo = 0.0f64;
        let mut hi = mu_max;
        for p in &trace {
            if p.mu < mu_star && p.mu > lo {
                lo = p.mu;
            }
            if p.mu > mu_star && p.mu < hi {
                hi = p.mu;
            }
        }
        for i in 1..=10 {
            let mu = lo + (hi - lo) * i as f64 / 11.0;
            if trace.iter().all(|p| (p.mu - mu).abs() > 1e-12 * (1.0 + mu)) {
                probe(mu, &mut trace, &mut best);
            }
        }
    }

    let Some((best_idx, inner)) = best else {
        let reasons: Vec<&str> = trace.iter().take(3).map(|p| p.status.as_str()).collect();
        return Err(AlgorithmError::Infeasible(format!(
            "scenario over-constrained ({} probes; first statuses: {})",
            trace.len(),
            reasons.join(" | ")
        )));
    };
    let mu_star = trace[best_idx].mu;
    let eta_star = inner.gamma_b;
    let (t_mat, r_x, degenerate_zeta) = recover(&inner.assignment);
    let extraction = extract_beamformer(&t_mat, sc, &r_x, mu_star, &ExtractConfig::default(), seed);
    let oracle_sdr = secrecy::worst_case_secrecy(sc, &t_mat, &r_x, oracle_budget, seed);
    let oracle_rank_one = secrecy::worst_case_secrecy(
        sc,
        &HermitianMatrix::outer(&extraction.t),
        &r_x,
        oracle_budget,
        seed,
    );
    let objective = (1.0 + eta_star) / (1.0 + mu_star);
    let gamma_b1 = rank_one_gamma_b(sc, &r_x, &extraction.t);
    let inner_solves = trace.len();
    trace.sort_by(|a, b| a.mu.partial_cmp(&b.mu).unwrap());
    Ok(DesignSolution {
        t: extraction.t,
        t_mat,
        r_x,
        mu_star,
        eta_star,
        zeta_star: inner.assignment.zeta,
        objective,
        sdr_bound_rate: objective.max(1.0).log2(),
        rank_one_certified_rate: ((1.0 + gamma_b1) / (1.0 + mu_star)).max(1.0).log2(),
        rank_ratio: extraction.rank_ratio,
        randomized: extraction.randomized,
        extraction_warning: extraction.warning,
        degenerate_zeta,
        oracle_sdr,
        oracle_rank_one,
        per_mu_trace: trace,
        inner_solves,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;
    use crate::radar::{design_ideal_covariance, BeampatternSpec};
    use crate::scenario::ScenarioTemplate;

    fn small_scenario() -> Scenario {
        ScenarioTemplate {
            n_bs: 3,
            m_radar: 4,
            ..ScenarioTemplate::default()
        }
        .sample(31)
    }

    fn small_r_d(sc: &Scenario) -> HermitianMatrix {
        let spec = BeampatternSpec::indicator(sc.mainlobe);
        design_ideal_covariance(&spec, sc.p_r, sc.m_radar).unwrap()
    }

    #[test]
    fn mu_bound_closed_form() {
        let mut sc = small_scenario();
        let mut h = CVector::zeros(3);
        h[0] = C64::new(1.0, 0.0);
        sc.h_bar_b = h;
        sc.eps_hb = 0.1;
        sc.p_c = 1.0;
        assert!((mu_upper_bound(&sc) - 1.21).abs() < 1e-12);
        sc.eps_hb = 0.0;
        assert!((mu_upper_bound(&sc) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grid_shape() {
        let g = SearchGrid::default();
        let probes = g.coarse_probes(100.0);
        assert_eq!(probes.len(), 64);
        assert_eq!(probes[0], 0.0);
        assert!((probes[63] - 100.0).abs() < 1e-9);
        assert!(probes.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn inner_solve_feasible_and_monotone() {
        let sc = small_scenario();
        let r_d = small_r_d(&sc);
        let mut last = -1.0;
        for mu in [0.05, 0.5, 5.0, 50.0] {
            match inner_solve(&sc, &r_d, mu).unwrap() {
                InnerOutcome::Feasible(sol) => {
                    assert!(
                        sol.gamma_b >= last - 1e-5,
                        "gamma_b {} after {} at mu {}",
                        sol.gamma_b,
                        last,
                        mu
                    );
                    assert!(sol.max_violation <= 1e-6);
                    last = sol.gamma_b;
                }
                InnerOutcome::Infeasible { message } => panic!("mu {mu} infeasible: {message}"),
            }
        }
        assert!(last > 0.0);
    }

    #[test]
    fn recover_homogeneity() {
        let sc = small_scenario();
        let r_d = small_r_d(&sc);
        let InnerOutcome::Feasible(sol) = inner_solve(&sc, &r_d, 1.0).unwrap() else {
            panic!("expected feasible");
        };
        let (t1, r1, _) = recover(&sol.assignment);
        let mut doubled = sol.assignment.clone();
        doubled.t_hat = doubled.t_hat.scale(2.0);
        doubled.r_hat = doubled.r_hat.scale(2.0);
        doubled.zeta *= 2.0;
        let (t2, r2, _) = recover(&doubled);
        assert!(t1.sub(&t2).frobenius_norm() < 1e-9 * (1.0 + t1.frobenius_norm()));
        assert!(r1.sub(&r2).frobenius_norm() < 1e-9 * (1.0 + r1.frobenius_norm()));
        // recovered design satisfies the original power and mismatch budgets
        assert!(t1.trace() <= sc.p_c * (1.0 + 1e-6));
        assert!(r1.trace() <= sc.p_r * (1.0 + 1e-6));
        let mism = r1.sub(&r_d).frobenius_norm();
        assert!(mism * mism <= sc.gamma_p * (1.0 + 1e-4) + 1e-6);
    }

    #[test]
    fn extract_rank_one_exact() {
        let sc = small_scenario();
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let v = sample_cn_vector(3, 1.0, &mut rng);
        let t_mat = HermitianMatrix::outer(&v);
        let r_x = HermitianMatrix::identity(4);
        let ex = extract_beamformer(&t_mat, &sc, &r_x, 1.0, &ExtractConfig::default(), 1);
        assert!(!ex.randomized);
        assert!(ex.rank_ratio <= 1e-4);
        let back = HermitianMatrix::outer(&ex.t);
        assert!(back.sub(&t_mat).frobenius_norm() < 1e-9 * t_mat.frobenius_norm());
    }

    #[test]
    fn extract_randomized_is_feasible() {
        let sc = small_scenario();
        let t_mat = HermitianMatrix::identity(3).scale(sc.p_c / 3.0);
        let r_x = HermitianMatrix::identity(4).scale(sc.p_r / 4.0);
        let cfg = ExtractConfig {
            candidates: 50,
            rank_budget: 50,
            ..ExtractConfig::default()
        };
        let ex = extract_beamformer(&t_mat, &sc, &r_x, 0.5, &cfg, 2);
        assert!(ex.randomized);
        assert!(ex.t.norm_squared() <= sc.p_c * (1.0 + 1e-9));
        let t1 = HermitianMatrix::outer(&ex.t);
        for (idx, g) in sc.g_bar.iter().enumerate() {
            let u: CVector = g.map(|z| z.conj());
            let slack = 2.0 * sc.eps_gm * g.norm() + sc.eps_gm * sc.eps_gm;
            let load = t1.quadratic_form(&u) + slack * t1.trace();
            assert!(load <= sc.gamma_inr[idx] * sc.sigma_r2 * (1.0 + 1e-9));
        }
    }

    #[test]
    fn run_small_scenario_end_to_end() {
        let sc = small_scenario();
        let r_d = small_r_d(&sc);
        let grid = SearchGrid {
            points: 12,
            refinement: 1,
            ..SearchGrid::default()
        };
        let sol = run(&sc, &r_d, &grid, 2000, 5).unwrap();
        assert_eq!(sol.inner_solves, sol.per_mu_trace.len());
        // argmax correctness against the stored trace
        let best = sol
            .per_mu_trace
            .iter()
            .map(|p| p.objective)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((sol.objective - best).abs() <= 1e-12 * best.abs().max(1.0));
        assert!(sol.t_mat.trace() <= sc.p_c * (1.0 + 1e-6));
        assert!(sol.r_x.trace() <= sc.p_r * (1.0 + 1e-6));
        assert!(sol.rank_one_certified_rate <= sol.sdr_bound_rate + 1e-9);
        assert!(sol.eta_star > 0.0);
        let violations = sol.gamma_monotonicity_violations(1e-5);
        assert!(violations.is_empty(), "{violations:?}");
        let text = sol.to_json_string();
        assert!(text.contains("per_mu_trace"));
    }

    #[test]
    fn run_single_point_grid_mu_zero() {
        let mut sc = small_scenario();
        // zero radii so mu = 0 admits a nonzero design when Eve is absent
        sc = sc.with_zero_radii();
        sc.h_bar_e = CVector::zeros(sc.n_bs);
        let r_d = small_r_d(&sc);
        let grid = SearchGrid {
            points: 1,
            refinement: 0,
            ..SearchGrid::default()
        };
        let sol = run(&sc, &r_d, &grid, 500, 6).unwrap();
        assert_eq!(sol.mu_star, 0.0);
        assert!(sol.oracle_sdr.gamma_e <= 1e-8);
        assert!(sol.eta_star > 0.0);
    }

    #[test]
    fn run_reports_infeasible_when_over_constrained() {
        let mut sc = small_scenario();
        // mismatch ball around R_d pins Tr(R_x) near Tr(R_d) = 400, while
        // the radar power cap allows at most 1 — infeasible at every mu
        sc.gamma_p = 1.0;
        sc.p_r = 1.0;
        let r_d = HermitianMatrix::identity(sc.m_radar).scale(100.0);
        let grid = SearchGrid {
            points: 4,
            refinement: 0,
            ..SearchGrid::default()
        };
        let err = run(&sc, &r_d, &grid, 100, 7).unwrap_err();
        assert!(matches!(err, AlgorithmError::Infeasible(_)), "{err}");
    }
}
