//! Coexistence scenario model: array geometry, nominal channels, CSI error
//! radii, powers and noise, plus seeded sampling of random scenarios and
//! error-ball perturbations.
//!
//! All internal math uses linear milliwatts; dBm/dB conversion happens only
//! when a configuration file is loaded.

use crate::linalg::{CVector, C64};
use nalgebra::DVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// dBm to linear milliwatts.
pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// dB to linear ratio.
pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Linear ratio to dB.
pub fn lin_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("config parse error: {0}")]
    Parse(String),
}

/// Uniform linear array steering vector with half-wavelength spacing, for
/// angles measured from the array axis over [0, 180] degrees (broadside at
/// 90): entry k is `exp(j*pi*k*cos(theta))`, i.e. the spatial frequency
/// sweeps the full unambiguous range exactly once over the angle interval.
pub fn steering_vector(theta_deg: f64, count: usize) -> CVector {
    let s = (theta_deg * PI / 180.0).cos();
    DVector::from_fn(count, |k, _| C64::from_polar(1.0, PI * k as f64 * s))
}

mod serde_cvec {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &CVector, ser: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = v.iter().map(|z| [z.re, z.im]).collect();
        pairs.serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<CVector, D::Error> {
        let pairs: Vec<[f64; 2]> = Vec::deserialize(de)?;
        Ok(DVector::from_vec(
            pairs.into_iter().map(|[re, im]| C64::new(re, im)).collect(),
        ))
    }
}

mod serde_cvec_list {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(vs: &[CVector], ser: S) -> Result<S::Ok, S::Error> {
        let lists: Vec<Vec<[f64; 2]>> = vs
            .iter()
            .map(|v| v.iter().map(|z| [z.re, z.im]).collect())
            .collect();
        lists.serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<CVector>, D::Error> {
        let lists: Vec<Vec<[f64; 2]>> = Vec::deserialize(de)?;
        Ok(lists
            .into_iter()
            .map(|l| DVector::from_vec(l.into_iter().map(|[re, im]| C64::new(re, im)).collect()))
            .collect())
    }
}

/// All system constants, nominal channels and error radii of one
/// coexistence instance. Powers and noise variances are linear milliwatts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    /// BS antenna count N.
    pub n_bs: usize,
    /// Radar antenna count M (transmit = receive).
    pub m_radar: usize,
    /// BS power budget P_C.
    pub p_c: f64,
    /// Radar power budget P_R.
    pub p_r: f64,
    pub sigma_b2: f64,
    pub sigma_e2: f64,
    pub sigma_r2: f64,
    /// Nominal BS->Bob channel, length N.
    #[serde(with = "serde_cvec")]
    pub h_bar_b: CVector,
    /// Nominal BS->Eve channel, length N.
    #[serde(with = "serde_cvec")]
    pub h_bar_e: CVector,
    /// Nominal radar->Bob channel, length M.
    #[serde(with = "serde_cvec")]
    pub f_bar_b: CVector,
    /// Nominal radar->Eve channel, length M.
    #[serde(with = "serde_cvec")]
    pub f_bar_e: CVector,
    /// Nominal BS->radar-antenna-m channels, M vectors of length N.
    #[serde(with = "serde_cvec_list")]
    pub g_bar: Vec<CVector>,
    pub eps_hb: f64,
    pub eps_he: f64,
    pub eps_fb: f64,
    pub eps_fe: f64,
    pub eps_gm: f64,
    /// Beampattern mismatch threshold gamma_p.
    pub gamma_p: f64,
    /// Per-antenna INR caps (linear ratio), length M.
    pub gamma_inr: Vec<f64>,
    pub p_fa: f64,
    /// Radar pulse length L.
    pub pulse_len: usize,
    /// Squared magnitude of the target coefficient |alpha|^2.
    pub alpha_mag2: f64,
    /// Mainlobe angle interval in degrees.
    pub mainlobe: (f64, f64),
}

impl Scenario {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let err = |m: String| Err(ScenarioError::Invalid(m));
        if self.p_c <= 0.0 || self.p_r <= 0.0 {
            return err("p_c and p_r must be strictly positive".into());
        }
        for (name, v) in [
            ("sigma_b2", self.sigma_b2),
            ("sigma_e2", self.sigma_e2),
            ("sigma_r2", self.sigma_r2),
            ("eps_hb", self.eps_hb),
            ("eps_he", self.eps_he),
            ("eps_fb", self.eps_fb),
            ("eps_fe", self.eps_fe),
            ("eps_gm", self.eps_gm),
            ("gamma_p", self.gamma_p),
            ("alpha_mag2", self.alpha_mag2),
        ] {
            if v < 0.0 || !v.is_finite() {
                return err(format!("{name} must be nonnegative and finite, got {v}"));
            }
        }
        if !(self.p_fa > 0.0 && self.p_fa < 1.0) {
            return err(format!("p_fa must be in (0,1), got {}", self.p_fa));
        }
        if self.h_bar_b.len() != self.n_bs || self.h_bar_e.len() != self.n_bs {
            return err("h_bar_b / h_bar_e length must equal n_bs".into());
        }
        if self.f_bar_b.len() != self.m_radar || self.f_bar_e.len() != self.m_radar {
            return err("f_bar_b / f_bar_e length must equal m_radar".into());
        }
        if self.g_bar.len() != self.m_radar || self.g_bar.iter().any(|g| g.len() != self.n_bs) {
            return err("g_bar must hold m_radar vectors of length n_bs".into());
        }
        if self.gamma_inr.len() != self.m_radar || self.gamma_inr.iter().any(|&g| g < 0.0) {
            return err("gamma_inr must hold m_radar nonnegative entries".into());
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        let s: Scenario = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// Copy with every CSI error radius set to zero (non-robust baseline).
    pub fn with_zero_radii(&self) -> Self {
        let mut s = self.clone();
        s.eps_hb = 0.0;
        s.eps_he = 0.0;
        s.eps_fb = 0.0;
        s.eps_fe = 0.0;
        s.eps_gm = 0.0;
        s
    }

    pub fn nominal_realization(&self) -> ChannelRealization {
        ChannelRealization {
            h_b: self.h_bar_b.clone(),
            h_e: self.h_bar_e.clone(),
            f_b: self.f_bar_b.clone(),
            f_e: self.f_bar_e.clone(),
            g: self.g_bar.clone(),
        }
    }
}

/// One draw of the true channels inside their error balls.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub h_b: CVector,
    pub h_e: CVector,
    pub f_b: CVector,
    pub f_e: CVector,
    pub g: Vec<CVector>,
}

impl ChannelRealization {
    /// Checks the five ball memberships against the scenario radii.
    pub fn is_member(&self, sc: &Scenario, slack: f64) -> bool {
        (&self.h_b - &sc.h_bar_b).norm() <= sc.eps_hb + slack
            && (&self.h_e - &sc.h_bar_e).norm() <= sc.eps_he + slack
            && (&self.f_b - &sc.f_bar_b).norm() <= sc.eps_fb + slack
            && (&self.f_e - &sc.f_bar_e).norm() <= sc.eps_fe + slack
            && self
                .g
                .iter()
                .zip(sc.g_bar.iter())
                .all(|(g, gb)| (g - gb).norm() <= sc.eps_gm + slack)
    }
}

/// Sampling mode for [`sample_error_ball`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BallMode {
    /// Uniform in the ball (radius scales like U^(1/(2n)) in complex dim n).
    Interior,
    /// Uniform on the sphere of exactly the given radius.
    Boundary,
}

/// One circularly-symmetric standard complex Gaussian vector.
pub fn sample_cn_vector(len: usize, variance: f64, rng: &mut impl Rng) -> CVector {
    use rand_distr::{Distribution, Normal};
    // per-entry variance split evenly over real and imaginary parts
    let normal = Normal::new(0.0, (variance / 2.0).sqrt()).unwrap();
    DVector::from_fn(len, |_, _| C64::new(normal.sample(rng), normal.sample(rng)))
}

/// Draws a vector from the ball of given radius around `center`.
pub fn sample_error_ball(
    center: &CVector,
    radius: f64,
    mode: BallMode,
    rng: &mut impl Rng,
) -> CVector {
    if radius == 0.0 {
        return center.clone();
    }
    let dir = sample_cn_vector(center.len(), 1.0, rng);
    let norm = dir.norm();
    if norm == 0.0 {
        return center.clone();
    }
    let r = match mode {
        BallMode::Boundary => radius,
        BallMode::Interior => {
            let u: f64 = rng.random();
            radius * u.powf(1.0 / (2.0 * center.len() as f64))
        }
    };
    center + dir.scale(r / norm)
}

/// Draws a full channel realization with every error ball sampled in the
/// given mode.
pub fn sample_realization(sc: &Scenario, mode: BallMode, rng: &mut impl Rng) -> ChannelRealization {
    ChannelRealization {
        h_b: sample_error_ball(&sc.h_bar_b, sc.eps_hb, mode, rng),
        h_e: sample_error_ball(&sc.h_bar_e, sc.eps_he, mode, rng),
        f_b: sample_error_ball(&sc.f_bar_b, sc.eps_fb, mode, rng),
        f_e: sample_error_ball(&sc.f_bar_e, sc.eps_fe, mode, rng),
        g: sc
            .g_bar
            .iter()
            .map(|g| sample_error_ball(g, sc.eps_gm, mode, rng))
            .collect(),
    }
}

/// Configuration template from which random scenarios are sampled.
/// Power fields are dBm, the INR cap is dB; defaults follow the reference
/// parameter set (N=4, M=16, P_R=43 dBm, P_C=30 dBm, noise 0 dBm,
/// gamma_p=0.1 P_R, Gamma_m=-10 dB, eps^2=1e-2, mainlobe [80,100] deg).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioTemplate {
    pub n_bs: usize,
    pub m_radar: usize,
    pub p_c_dbm: f64,
    pub p_r_dbm: f64,
    pub noise_b_dbm: f64,
    pub noise_e_dbm: f64,
    pub noise_r_dbm: f64,
    /// Variance of BS-side channels (h_b, h_e).
    pub rho1: f64,
    /// Variance of radar-coupled channels (f_b, f_e, g_m).
    pub rho2: f64,
    /// Normalized squared error radius; absolute radii are eps2 * rho.
    pub eps2: f64,
    /// gamma_p as a fraction of P_R.
    pub gamma_p_frac: f64,
    pub gamma_inr_db: f64,
    pub p_fa: f64,
    pub pulse_len: usize,
    /// Aggregate radar SNR |alpha|^2 * L * P_R * M / sigma_r^2 in dB;
    /// |alpha|^2 is derived from it.
    pub radar_snr_db: f64,
    pub mainlobe_deg: [f64; 2],
}

impl Default for ScenarioTemplate {
    fn default() -> Self {
        Self {
            n_bs: 4,
            m_radar: 16,
            p_c_dbm: 30.0,
            p_r_dbm: 43.0,
            noise_b_dbm: 0.0,
            noise_e_dbm: 0.0,
            noise_r_dbm: 0.0,
            rho1: 1.0,
            rho2: 0.02,
            eps2: 1e-2,
            gamma_p_frac: 0.1,
            gamma_inr_db: -10.0,
            p_fa: 1e-4,
            pulse_len: 64,
            radar_snr_db: 2.0,
            mainlobe_deg: [80.0, 100.0],
        }
    }
}

impl ScenarioTemplate {
    /// Deterministically samples a scenario: nominal channels are
    /// circularly-symmetric complex Gaussian with per-entry variance rho1
    /// (BS links) or rho2 (radar-coupled links).
    pub fn sample(&self, seed: u64) -> Scenario {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let p_r = dbm_to_mw(self.p_r_dbm);
        let sigma_r2 = dbm_to_mw(self.noise_r_dbm);
        let snr = db_to_lin(self.radar_snr_db);
        let alpha_mag2 =
            snr * sigma_r2 / (self.pulse_len as f64 * p_r * self.m_radar as f64);
        let sc = Scenario {
            n_bs: self.n_bs,
            m_radar: self.m_radar,
            p_c: dbm_to_mw(self.p_c_dbm),
            p_r,
            sigma_b2: dbm_to_mw(self.noise_b_dbm),
            sigma_e2: dbm_to_mw(self.noise_e_dbm),
            sigma_r2,
            h_bar_b: sample_cn_vector(self.n_bs, self.rho1, &mut rng),
            h_bar_e: sample_cn_vector(self.n_bs, self.rho1, &mut rng),
            f_bar_b: sample_cn_vector(self.m_radar, self.rho2, &mut rng),
            f_bar_e: sample_cn_vector(self.m_radar, self.rho2, &mut rng),
            g_bar: (0..self.m_radar)
                .map(|_| sample_cn_vector(self.n_bs, self.rho2, &mut rng))
                .collect(),
            eps_hb: (self.eps2 * self.rho1).sqrt(),
            eps_he: (self.eps2 * self.rho1).sqrt(),
            eps_fb: (self.eps2 * self.rho2).sqrt(),
            eps_fe: (self.eps2 * self.rho2).sqrt(),
            eps_gm: (self.eps2 * self.rho2).sqrt(),
            gamma_p: self.gamma_p_frac * p_r,
            gamma_inr: vec![db_to_lin(self.gamma_inr_db); self.m_radar],
            p_fa: self.p_fa,
            pulse_len: self.pulse_len,
            alpha_mag2,
            mainlobe: (self.mainlobe_deg[0], self.mainlobe_deg[1]),
        };
        sc.validate().expect("template produces a valid scenario");
        sc
    }
}
