//! Radar-side metrics: transmit beampattern, ideal-covariance design,
//! per-antenna INR, the detector's non-centrality parameter, and detection
//! probability for the asymptotic GLRT.
//!
//! Angles are degrees at every interface and radians internally.

use crate::linalg::{CVector, HermitianMatrix, C64};
use crate::lmi::{herm_basis, herm_param_count, herm_unpack};
use crate::scenario::steering_vector;
use crate::solver::{self, Cone, ConeProblem, ConeSpec, SolverConfig, SolverStatus, SparseCols};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RadarError {
    #[error("invalid beampattern spec: {0}")]
    InvalidSpec(String),
    #[error("covariance design failed: {0}")]
    DesignFailed(String),
    #[error("invalid detection parameter: {0}")]
    InvalidDetection(String),
}

/// Desired beampattern mask over an angle grid.
#[derive(Debug, Clone)]
pub struct BeampatternSpec {
    /// Strictly increasing angles in degrees.
    pub grid: Vec<f64>,
    /// Desired linear gain per grid angle.
    pub desired_gain: Vec<f64>,
    /// Mainlobe interval in degrees.
    pub mainlobe: (f64, f64),
}

impl BeampatternSpec {
    /// Indicator mask of the mainlobe on a 1-degree grid over [0, 180].
    pub fn indicator(mainlobe: (f64, f64)) -> Self {
        let grid: Vec<f64> = (0..=180).map(|d| d as f64).collect();
        let desired_gain = grid
            .iter()
            .map(|&t| {
                if t >= mainlobe.0 && t <= mainlobe.1 {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        Self {
            grid,
            desired_gain,
            mainlobe,
        }
    }

    pub fn validate(&self) -> Result<(), RadarError> {
        if self.grid.len() != self.desired_gain.len() {
            return Err(RadarError::InvalidSpec(
                "grid and mask lengths differ".into(),
            ));
        }
        if self.grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(RadarError::InvalidSpec(
                "grid must be strictly increasing".into(),
            ));
        }
        if self.desired_gain.iter().any(|&g| g < 0.0 || !g.is_finite()) {
            return Err(RadarError::InvalidSpec(
                "desired gains must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Detection summary at one operating point.
#[derive(Debug, Clone, Copy)]
pub struct DetectionOutcome {
    /// Non-centrality parameter of the detector statistic.
    pub rho: f64,
    pub p_d: f64,
    pub p_fa: f64,
    /// Detection threshold on the chi-square statistic.
    pub threshold: f64,
}

/// Transmit beampattern gain `a(theta)^H R_x a(theta)`.
pub fn beampattern(r_x: &HermitianMatrix, theta_deg: f64) -> f64 {
    let a = steering_vector(theta_deg, r_x.dim());
    r_x.quadratic_form(&a)
}

/// CSV rows `(theta_deg, gain_linear, gain_db)` over a grid.
pub fn beampattern_csv(r_x: &HermitianMatrix, grid: &[f64]) -> String {
    let mut out = String::from("theta_deg,gain_linear,gain_db\n");
    for &t in grid {
        let g = beampattern(r_x, t).max(0.0);
        let db = 10.0 * g.max(1e-300).log10();
        out.push_str(&format!("{t},{g},{db}\n"));
    }
    out
}

/// Ideal radar covariance: least-squares beampattern matching against a
/// scaled mask, over PSD matrices with the full power on the trace.
///
/// Minimizes `sum_k (eta * desired_k - a_k^H R a_k)^2` over `R >= 0`,
/// `eta >= 0`, `Tr(R) = p_r`. Solved at unit trace and rescaled (the
/// objective is scale-compatible).
pub fn design_ideal_covariance(
    spec: &BeampatternSpec,
    p_r: f64,
    m: usize,
) -> Result<HermitianMatrix, RadarError> {
    spec.validate()?;
    if p_r <= 0.0 || m == 0 {
        return Err(RadarError::InvalidSpec("need p_r > 0 and m > 0".into()));
    }
    let params = herm_param_count(m);
    let dim = params + 2; // R params, eta, t
    let v_eta = params;
    let v_t = params + 1;
    let k = spec.grid.len();

    let mut c = DVector::zeros(dim);
    c[v_t] = 1.0;

    let spec_cones = ConeSpec {
        blocks: vec![
            Cone::Nonneg(1),
            Cone::Soc(1 + k),
            Cone::Psd(2 * m),
        ],
    };
    let mut g = SparseCols::new(spec_cones.total_len(), dim);
    let h = DVector::zeros(spec_cones.total_len());
    // eta >= 0
    g.push(0, v_eta, -1.0);
    // cone head: s0 = t
    g.push(1, v_t, -1.0);
    // residual rows: s_i = eta * d_i - a_i^H R a_i
    let steerings: Vec<CVector> = spec.grid.iter().map(|&t| steering_vector(t, m)).collect();
    let quads: Vec<Vec<f64>> = (0..params)
        .map(|j| {
            let e = herm_basis(m, j);
            steerings.iter().map(|a| e.quadratic_form(a)).collect()
        })
        .collect();
    for i in 0..k {
        g.push(2 + i, v_eta, -spec.desired_gain[i]);
        for (j, q) in quads.iter().enumerate() {
            if q[i] != 0.0 {
                g.push(2 + i, j, q[i]);
            }
        }
    }
    // PSD block: s = svec(realify(R))
    let psd0 = 2 + k;
    for j in 0..params {
        let sv = solver::svec_of(&herm_basis(m, j).realify());
        for (r, &v) in sv.iter().enumerate() {
            if v != 0.0 {
                g.push(psd0 + r, j, -v);
            }
        }
    }
    // unit-trace equality
    let mut a_eq = SparseCols::new(1, dim);
    for j in 0..params {
        let tr = herm_basis(m, j).trace();
        if tr != 0.0 {
            a_eq.push(0, j, tr);
        }
    }
    let b_eq = DVector::from_element(1, 1.0);

    let prob = ConeProblem {
        c,
        g,
        h,
        a: a_eq,
        b: b_eq,
        cones: spec_cones,
    };
    // the design only feeds a quadratic mismatch budget downstream, and the
    // trace is renormalized exactly below, so modest tolerances suffice
    let cfg = SolverConfig {
        gap_tol: 1e-6,
        feas_tol: 1e-6,
        ..SolverConfig::default()
    };
    let sol = solver::solve(&prob, &cfg);
    if sol.status != SolverStatus::Optimal {
        return Err(RadarError::DesignFailed(format!(
            "solver status {} after {} iterations (gap {:.2e})",
            sol.status, sol.iterations, sol.duality_gap
        )));
    }
    let r_unit = herm_unpack(&sol.x.as_slice()[..params], m);
    // clean tiny negative eigenvalues from solver tolerance, restore trace
    let (vals, vecs) = r_unit.eigendecompose();
    let mut mat = DMatrix::<C64>::zeros(m, m);
    for (lam, v) in vals.iter().zip(vecs.iter()) {
        if *lam > 0.0 {
            mat += HermitianMatrix::outer(v).scale(*lam).into_matrix();
        }
    }
    let cleaned = HermitianMatrix::symmetrized(mat);
    let trace = cleaned.trace();
    if trace <= 0.0 {
        return Err(RadarError::DesignFailed("degenerate zero covariance".into()));
    }
    Ok(cleaned.scale(p_r / trace))
}

/// Per-antenna interference-to-noise ratio `Tr(conj(g_m) g_m^T T) / sigma_r2`.
pub fn inr_per_antenna(g_m: &CVector, t: &HermitianMatrix, sigma_r2: f64) -> f64 {
    assert!(sigma_r2 > 0.0, "noise power must be positive");
    let u: CVector = g_m.map(|z| z.conj());
    t.quadratic_form(&u) / sigma_r2
}

/// Non-centrality parameter of the detector:
/// `|alpha|^2 L Tr(A R_x A^H (G^T T G* + sigma_r2 I)^-1)` with `A = a_r a_t^T`.
pub fn noncentrality(
    r_x: &HermitianMatrix,
    t: &HermitianMatrix,
    g_cols: &[CVector],
    a_t: &CVector,
    a_r: &CVector,
    alpha_mag2: f64,
    pulse_len: usize,
    sigma_r2: f64,
) -> Result<f64, RadarError> {
    if sigma_r2 <= 0.0 {
        return Err(RadarError::InvalidDetection(
            "noise power must be positive".into(),
        ));
    }
    let m = r_x.dim();
    assert_eq!(g_cols.len(), m);
    // A R_x A^H = (a_t^T R_x conj(a_t)) a_r a_r^H, so the trace reduces to a
    // scalar times a_r^H (G^T T G* + sigma_r2 I)^-1 a_r
    let a_t_conj: CVector = a_t.map(|z| z.conj());
    let gain = r_x.quadratic_form(&a_t_conj);
    let mut inner = DMatrix::<C64>::identity(m, m) * C64::new(sigma_r2, 0.0);
    // (G^T T G*)_{ij} = g_i^T (T conj(g_j))
    let t_gconj: Vec<CVector> = g_cols
        .iter()
        .map(|gj| t.mul_vec(&gj.map(|z| z.conj())))
        .collect();
    for (i, gi) in g_cols.iter().enumerate() {
        for (j, tj) in t_gconj.iter().enumerate() {
            let mut val = C64::new(0.0, 0.0);
            for r in 0..gi.len() {
                val += gi[r] * tj[r];
            }
            inner[(i, j)] += val;
        }
    }
    let chol = inner
        .clone()
        .cholesky()
        .ok_or_else(|| RadarError::InvalidDetection("inner covariance not positive".into()))?;
    let x = chol.solve(a_r);
    let quad: f64 = a_r.dotc(&x).re;
    Ok((alpha_mag2 * pulse_len as f64 * gain * quad).max(0.0))
}

/// Detection probability of the chi-square(2) GLRT with non-centrality `rho`
/// at false-alarm rate `p_fa`; absolute accuracy 1e-10.
pub fn detection_probability(rho: f64, p_fa: f64) -> Result<DetectionOutcome, RadarError> {
    if rho < 0.0 || !rho.is_finite() {
        return Err(RadarError::InvalidDetection(format!(
            "non-centrality must be nonnegative, got {rho}"
        )));
    }
    if !(0.0..1.0).contains(&p_fa) || p_fa <= 0.0 {
        return Err(RadarError::InvalidDetection(format!(
            "false-alarm rate must lie in (0, 1), got {p_fa}"
        )));
    }
    // central chi-square(2) inverse survival is closed-form
    let threshold = -2.0 * p_fa.ln();
    let p_d = if rho > 1e5 {
        // normal approximation of the non-central chi-square
        let mean = 2.0 + rho;
        let sd = (2.0 * (2.0 + 2.0 * rho)).sqrt();
        normal_sf((threshold - mean) / sd)
    } else {
        noncentral_chi2_survival(rho, threshold)
    };
    Ok(DetectionOutcome {
        rho,
        p_d: p_d.clamp(0.0, 1.0),
        p_fa,
        threshold,
    })
}

/// Survival of the non-central chi-square with 2 dof via the Poisson mixture
/// `sum_n pois(n; rho/2) * P(chi2_{2n+2} > tau)`; all terms positive and the
/// truncation error is bounded by the unvisited Poisson mass.
fn noncentral_chi2_survival(rho: f64, tau: f64) -> f64 {
    let lambda = 0.5 * rho;
    let x = 0.5 * tau;
    // upper index: mean plus a wide deviation band, so the Poisson tail
    // beyond it is far below the accuracy target
    let n_hi = (lambda + 12.0 * (lambda + 1.0).sqrt() + 40.0).ceil() as usize;
    // survival of chi-square with 2m dof at 2x: q[m] = e^-x sum_{j<m} x^j/j!
    let mut q = Vec::with_capacity(n_hi + 2);
    let mut term = (-x).exp();
    let mut acc = 0.0;
    q.push(0.0);
    for m in 1..=n_hi + 1 {
        acc = (acc + term).min(1.0);
        q.push(acc);
        term *= x / m as f64;
    }
    // Poisson weights from the mode outward (stable against underflow)
    let mode = (lambda.floor() as usize).min(n_hi);
    let ln_w_mode = if lambda == 0.0 {
        0.0
    } else {
        let mut ln_fact = 0.0;
        for j in 1..=mode {
            ln_fact += (j as f64).ln();
        }
        mode as f64 * lambda.ln() - lambda - ln_fact
    };
    let w_mode = ln_w_mode.exp();
    let mut total = w_mode;
    let mut p = w_mode * q[mode + 1];
    let mut w = w_mode;
    for n in (0..mode).rev() {
        w *= (n + 1) as f64 / lambda;
        total += w;
        p += w * q[n + 1];
        if w < 1e-18 {
            break;
        }
    }
    w = w_mode;
    for n in mode + 1..=n_hi {
        w *= lambda / n as f64;
        total += w;
        p += w * q[n + 1];
        if w < 1e-18 && n as f64 > lambda {
            break;
        }
    }
    // unvisited weights sit in the far upper tail where the survival is ~1
    p + (1.0 - total).max(0.0)
}

/// Standard normal survival function via the complementary error function.
fn normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

/// Complementary error function (Numerical Recipes rational approximation,
/// absolute error below 1.2e-7; used only in the large-rho saturation regime).
fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let ans = t
        * (-z * z - 1.26551223
            + t * (1.00002368
                + t * (0.37409196
                    + t * (0.09678418
                        + t * (-0.18628806
                            + t * (0.27886807
                                + t * (-1.13520398
                                    + t * (1.48851587
                                        + t * (-0.82215223 + t * 0.17087277)))))))))
            .exp();
    if x >= 0.0 {
        ans
    } else {
        2.0 - ans
    }
}
