//! Communication-side metrics: Bob/Eve SINRs, secrecy rate, and an
//! independent adversarial worst-case oracle over the CSI error balls.
//!
//! The oracle exploits the separable structure of the worst case: Bob's
//! SINR is only lowered by the errors on (h_b, f_b) and Eve's is only raised
//! by the errors on (h_e, f_e), so each ball is extremized independently by
//! random sampling plus projected-gradient refinement. The refinement runs
//! at power-of-two sample checkpoints so that a larger budget always
//! dominates a smaller one under the same seed.

use crate::linalg::{CVector, HermitianMatrix};
use crate::scenario::{sample_error_ball, BallMode, ChannelRealization, Scenario};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Secrecy-rate summary at one channel realization.
#[derive(Debug, Clone)]
pub struct SecrecyReport {
    /// Bob's linear SINR.
    pub gamma_b: f64,
    /// Eve's linear SINR.
    pub gamma_e: f64,
    /// Bob's rate in bits/s/Hz.
    pub rate_b: f64,
    /// Eve's rate in bits/s/Hz.
    pub rate_e: f64,
    /// `max(rate_b - rate_e, 0)` in bits/s/Hz.
    pub secrecy_rate: f64,
    /// Whether this report is a worst-case estimate over the error balls.
    pub worst_case: bool,
    /// Realization achieving the reported value.
    pub witness: ChannelRealization,
}

/// Bob's SINR `(h_b^H T h_b) / (f_b^H R_x f_b + sigma_b2)`.
pub fn sinr_bob(
    h_b: &CVector,
    f_b: &CVector,
    t: &HermitianMatrix,
    r_x: &HermitianMatrix,
    sigma_b2: f64,
) -> f64 {
    let num = t.quadratic_form(h_b).max(0.0);
    let den = r_x.quadratic_form(f_b).max(0.0) + sigma_b2;
    num / den
}

/// Eve's SINR `(h_e^H T h_e) / (f_e^H R_x f_e + sigma_e2)`.
pub fn sinr_eve(
    h_e: &CVector,
    f_e: &CVector,
    t: &HermitianMatrix,
    r_x: &HermitianMatrix,
    sigma_e2: f64,
) -> f64 {
    let num = t.quadratic_form(h_e).max(0.0);
    let den = r_x.quadratic_form(f_e).max(0.0) + sigma_e2;
    num / den
}

fn report_at(
    real: ChannelRealization,
    t: &HermitianMatrix,
    r_x: &HermitianMatrix,
    sc: &Scenario,
    worst_case: bool,
) -> SecrecyReport {
    let gamma_b = sinr_bob(&real.h_b, &real.f_b, t, r_x, sc.sigma_b2);
    let gamma_e = sinr_eve(&real.h_e, &real.f_e, t, r_x, sc.sigma_e2);
    let rate_b = (1.0 + gamma_b).log2();
    let rate_e = (1.0 + gamma_e).log2();
    SecrecyReport {
        gamma_b,
        gamma_e,
        rate_b,
        rate_e,
        secrecy_rate: (rate_b - rate_e).max(0.0),
        worst_case,
        witness: real,
    }
}

/// Secrecy rate evaluated at one given channel realization.
pub fn secrecy_rate(
    real: &ChannelRealization,
    t: &HermitianMatrix,
    r_x: &HermitianMatrix,
    sc: &Scenario,
) -> SecrecyReport {
    report_at(real.clone(), t, r_x, sc, false)
}

/// Extremizes the quadratic form `v^H A v` over the ball around `center`:
/// random sampling with refinement at power-of-two checkpoints, followed by
/// projected-gradient polishing of the incumbent. `maximize` flips the sense.
fn extremize_ball(
    a: &HermitianMatrix,
    center: &CVector,
    radius: f64,
    budget: usize,
    maximize: bool,
    rng: &mut ChaCha12Rng,
) -> CVector {
    let sign = if maximize { 1.0 } else { -1.0 };
    let score = |v: &CVector| sign * a.quadratic_form(v);
    let mut best = center.clone();
    let mut best_score = score(&best);
    if radius == 0.0 || a.frobenius_norm() == 0.0 {
        return best;
    }
    let project = |v: &CVector| -> CVector {
        let delta = v - center;
        let n = delta.norm();
        if n <= radius {
            v.clone()
        } else {
            center + delta.scale(radius / n)
        }
    };
    let polish = |start: &CVector, best_score: f64| -> (CVector, f64) {
        let mut x = start.clone();
        let mut fx = best_score;
        let mut step = 0.5 * radius;
        for _ in 0..50 {
            let grad = a.mul_vec(&x).scale(2.0 * sign);
            let gn = grad.norm();
            if gn < 1e-300 {
                break;
            }
            let cand = project(&(&x + grad.scale(step / gn)));
            let fc = score(&cand);
            if fc > fx {
                x = cand;
                fx = fc;
            } else {
                step *= 0.5;
                if step < 1e-14 * radius {
                    break;
                }
            }
        }
        (x, fx)
    };
    let mut next_checkpoint = 1usize;
    for i in 0..budget {
        let mode = if i % 2 == 0 {
            BallMode::Boundary
        } else {
            BallMode::Interior
        };
        let v = sample_error_ball(center, radius, mode, rng);
        let s = score(&v);
        if s > best_score {
            best = v;
            best_score = s;
        }
        if i + 1 == next_checkpoint || i + 1 == budget {
            next_checkpoint *= 2;
            let (x, fx) = polish(&best, best_score);
            if fx > best_score {
                best = x;
                best_score = fx;
            }
        }
    }
    best
}

/// Adversarial worst-case secrecy rate over the four communication error
/// balls; deterministic for a fixed seed. More budget never yields a larger
/// value (monotone refinement with a shared sample prefix).
pub fn worst_case_secrecy(
    sc: &Scenario,
    t: &HermitianMatrix,
    r_x: &HermitianMatrix,
    budget: usize,
    seed: u64,
) -> SecrecyReport {
    assert!(budget >= 1);
    let mut balls = (0..4).map(|i| {
        let mut s = [0u8; 32];
        s[..8].copy_from_slice(&seed.to_le_bytes());
        s[8] = i;
        ChaCha12Rng::from_seed(s)
    });
    // the adversary lowers Bob's numerator, raises Bob's interference,
    // raises Eve's numerator, lowers Eve's interference — independently
    let h_b = extremize_ball(t, &sc.h_bar_b, sc.eps_hb, budget, false, &mut balls.next().unwrap());
    let f_b = extremize_ball(r_x, &sc.f_bar_b, sc.eps_fb, budget, true, &mut balls.next().unwrap());
    let h_e = extremize_ball(t, &sc.h_bar_e, sc.eps_he, budget, true, &mut balls.next().unwrap());
    let f_e = extremize_ball(r_x, &sc.f_bar_e, sc.eps_fe, budget, false, &mut balls.next().unwrap());
    debug_assert!(t.quadratic_form(&h_b) <= t.quadratic_form(&sc.h_bar_b) + 1e-12);
    let real = ChannelRealization {
        h_b,
        h_e,
        f_b,
        f_e,
        g: sc.g_bar.clone(),
    };
    report_at(real, t, r_x, sc, true)
}
