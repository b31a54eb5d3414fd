//! Monte Carlo experiment harness: beampattern sweeps, robust vs.
//! non-robust secrecy-rate curves, and the secrecy/detection trade-off,
//! with deterministic seeding, resumable CSV records, and JSON summaries.
//!
//! Determinism: per-trial seeds derive from `(base seed, trial index)`
//! alone, so results are independent of worker count and scheduling. All
//! CSV values except the wall-time column are bit-reproducible.

use crate::algorithm::{self, DesignSolution, SearchGrid};
use crate::linalg::{CVector, HermitianMatrix};
use crate::radar::{self, design_ideal_covariance, BeampatternSpec};
use crate::scenario::{steering_vector, Scenario, ScenarioTemplate};
use crate::secrecy;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::sync::Mutex;
use std::time::Instant;
use thiserror::Error;

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("configuration rejected: {0}")]
    BadConfig(String),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("existing records at {path} were produced with config digest {found}, expected {expected}; move the file aside or change the output directory")]
    DigestMismatch {
        path: String,
        found: String,
        expected: String,
    },
    #[error("{0}")]
    Failed(String),
}

/// Full experiment configuration; the checked-in defaults reproduce the
/// reference parameter set (N=4, M=16, P_C=30 dBm, P_R=43 dBm, noise 0 dBm,
/// gamma_p = 0.1 P_R, INR cap -10 dB, eps^2 = 1e-2, mainlobe [80, 100]).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub template: ScenarioTemplate,
    /// Monte Carlo trials (each trial draws fresh nominal channels).
    pub trials: usize,
    pub seed: u64,
    /// BS power sweep for the secrecy-vs-power experiment, in dBm.
    pub p_c_dbm_sweep: Vec<f64>,
    /// Squared-error-radius sweep (relative, scaled by the channel variance).
    pub eps2_sweep: Vec<f64>,
    /// Mismatch-budget sweep as fractions of P_R.
    pub gamma_p_frac_sweep: Vec<f64>,
    /// INR-cap sweep in dB for the trade-off experiment.
    pub gamma_inr_db_sweep: Vec<f64>,
    /// Outer-search grid for Monte Carlo trials (kept small for throughput).
    pub grid_points: usize,
    pub grid_refinement: usize,
    /// Outer-search grid for single flagship solves.
    pub single_grid_points: usize,
    pub single_grid_refinement: usize,
    /// Sample budget per error ball for the worst-case oracle.
    pub oracle_budget: usize,
    /// Worker threads (0 = library default).
    pub jobs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            template: ScenarioTemplate::default(),
            trials: 200,
            seed: 7_2430,
            p_c_dbm_sweep: vec![24.0, 27.0, 30.0, 33.0],
            eps2_sweep: vec![0.0, 1e-3, 1e-2],
            gamma_p_frac_sweep: vec![0.05, 0.1, 0.2, 0.5, 1.0],
            gamma_inr_db_sweep: vec![-20.0, -10.0, 0.0],
            grid_points: 8,
            grid_refinement: 0,
            single_grid_points: 64,
            single_grid_refinement: 2,
            oracle_budget: 512,
            jobs: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ExperimentError> {
        let cfg: Self =
            toml::from_str(text).map_err(|e| ExperimentError::BadConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.trials == 0 {
            return Err(ExperimentError::BadConfig("trials must be >= 1".into()));
        }
        let sweeps = [
            &self.p_c_dbm_sweep,
            &self.eps2_sweep,
            &self.gamma_p_frac_sweep,
            &self.gamma_inr_db_sweep,
        ];
        for sweep in sweeps {
            if sweep.is_empty() || sweep.iter().any(|v| !v.is_finite()) {
                return Err(ExperimentError::BadConfig(
                    "sweep values must be nonempty and finite".into(),
                ));
            }
        }
        if self.grid_points == 0 || self.single_grid_points == 0 {
            return Err(ExperimentError::BadConfig(
                "search grids need at least one point".into(),
            ));
        }
        if self.oracle_budget == 0 {
            return Err(ExperimentError::BadConfig(
                "oracle budget must be >= 1".into(),
            ));
        }
        Ok(())
    }

    /// Hex digest of the canonical TOML form; stamped into every output.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.to_toml_string().as_bytes());
        hex_prefix(&h.finalize(), 16)
    }

    fn mc_grid(&self) -> SearchGrid {
        SearchGrid {
            points: self.grid_points,
            refinement: self.grid_refinement,
            ..SearchGrid::default()
        }
    }

    fn single_grid(&self) -> SearchGrid {
        SearchGrid {
            points: self.single_grid_points,
            refinement: self.single_grid_refinement,
            ..SearchGrid::default()
        }
    }
}

fn hex_prefix(bytes: &[u8], chars: usize) -> String {
    let mut s = String::new();
    for b in bytes {
        let _ = write!(s, "{b:02x}");
        if s.len() >= chars {
            break;
        }
    }
    s.truncate(chars);
    s
}

fn scenario_digest(sc: &Scenario) -> String {
    let mut h = Sha256::new();
    h.update(sc.to_toml_string().as_bytes());
    hex_prefix(&h.finalize(), 12)
}

/// splitmix64 step; used to derive independent per-trial seeds.
fn mix_seed(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn trial_seed(base: u64, trial: usize) -> u64 {
    mix_seed(base, trial as u64 + 1)
}

// ---------------------------------------------------------------------------
// design certification
// ---------------------------------------------------------------------------

/// End-to-end certificate of one design against its scenario: budgets,
/// mismatch, robust INR, and oracle falsification of the certified floor
/// and cap. Aggregation only admits certified records.
#[derive(Debug, Clone, Serialize)]
pub struct DesignCertificate {
    pub power_bs_ok: bool,
    pub power_radar_ok: bool,
    pub mismatch_ok: bool,
    pub inr_ok: bool,
    pub bob_floor_ok: bool,
    pub eve_cap_ok: bool,
    pub rank_one_bounded: bool,
    pub pass: bool,
    pub details: Vec<String>,
}

pub fn certify_design(
    sc: &Scenario,
    r_d: &HermitianMatrix,
    sol: &DesignSolution,
) -> DesignCertificate {
    let mut details = vec![];
    let power_bs_ok = sol.t_mat.trace() <= sc.p_c * (1.0 + 1e-6);
    if !power_bs_ok {
        details.push(format!("Tr(T) = {} exceeds P_C = {}", sol.t_mat.trace(), sc.p_c));
    }
    let power_radar_ok = sol.r_x.trace() <= sc.p_r * (1.0 + 1e-6);
    if !power_radar_ok {
        details.push(format!("Tr(R_x) = {} exceeds P_R = {}", sol.r_x.trace(), sc.p_r));
    }
    let residual = sol.r_x.sub(r_d).frobenius_norm();
    let mismatch_ok = residual * residual <= sc.gamma_p * (1.0 + 1e-4) + 1e-6;
    if !mismatch_ok {
        details.push(format!(
            "mismatch {} exceeds gamma_p = {}",
            residual * residual,
            sc.gamma_p
        ));
    }
    let mut inr_ok = true;
    for (idx, g) in sc.g_bar.iter().enumerate() {
        let u: CVector = g.map(|z| z.conj());
        let slack = 2.0 * sc.eps_gm * g.norm() + sc.eps_gm * sc.eps_gm;
        let load = sol.t_mat.quadratic_form(&u) + slack * sol.t_mat.trace();
        if load > sc.gamma_inr[idx] * sc.sigma_r2 * (1.0 + 1e-6) + 1e-9 {
            inr_ok = false;
            details.push(format!(
                "robust INR load {} at antenna {} exceeds cap {}",
                load,
                idx,
                sc.gamma_inr[idx] * sc.sigma_r2
            ));
        }
    }
    // the sampling oracle can only find violations, never produce them:
    // its worst case must respect the certified floor and cap
    let bob_floor_ok =
        sol.oracle_sdr.gamma_b >= sol.eta_star - 1e-6 * (1.0 + sol.eta_star.abs());
    if !bob_floor_ok {
        details.push(format!(
            "oracle found Bob SINR {} below certified floor {}",
            sol.oracle_sdr.gamma_b, sol.eta_star
        ));
    }
    let eve_cap_ok = sol.oracle_sdr.gamma_e <= sol.mu_star + 1e-6 * (1.0 + sol.mu_star.abs());
    if !eve_cap_ok {
        details.push(format!(
            "oracle found Eve SINR {} above certified cap {}",
            sol.oracle_sdr.gamma_e, sol.mu_star
        ));
    }
    // The SDR bound inherits the solver's duality-gap accuracy (~1e-7 on the
    // scaled variables), so the upper-bound check is relative, not absolute.
    let rank_one_bounded = sol.rank_one_certified_rate
        <= sol.sdr_bound_rate + 1e-5 * (1.0 + sol.sdr_bound_rate.abs());
    if !rank_one_bounded {
        details.push(format!(
            "rank-one certified rate {} exceeds SDR bound {}",
            sol.rank_one_certified_rate, sol.sdr_bound_rate
        ));
    }
    let pass = power_bs_ok
        && power_radar_ok
        && mismatch_ok
        && inr_ok
        && bob_floor_ok
        && eve_cap_ok
        && rank_one_bounded;
    DesignCertificate {
        power_bs_ok,
        power_radar_ok,
        mismatch_ok,
        inr_ok,
        bob_floor_ok,
        eve_cap_ok,
        rank_one_bounded,
        pass,
        details,
    }
}

// ---------------------------------------------------------------------------
// trial records and CSV plumbing
// ---------------------------------------------------------------------------

/// One aggregated measurement row of a Monte Carlo experiment.
#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub scenario_digest: String,
    /// "robust" or "nonrobust".
    pub design: String,
    pub p_c_dbm: f64,
    pub eps2: f64,
    pub gamma_p_frac: f64,
    pub gamma_inr_db: f64,
    /// Oracle worst-case secrecy rate of the deployed rank-one design,
    /// evaluated under the true error radii.
    pub worst_case_rate: f64,
    /// Secrecy rate at the nominal (center) channels.
    pub nominal_rate: f64,
    pub p_d: f64,
    /// Min over antennas of (INR cap - robust interference load), in mW.
    pub inr_margin_mw: f64,
    /// Frobenius mismatch ||R_x - R_d||_F.
    pub mismatch_residual: f64,
    pub rank_ratio: f64,
    pub certified: bool,
    /// Wall time of the design solve; the only non-reproducible column.
    pub solve_ms: f64,
    /// Reserved for overlaying external comparison data.
    pub fp_reference: String,
    /// "ok" or a failure diagnosis; failures are excluded from aggregates.
    pub status: String,
}

const CSV_HEADER: &str = "trial,seed,scenario_digest,design,p_c_dbm,eps2,gamma_p_frac,gamma_inr_db,worst_case_rate,nominal_rate,p_d,inr_margin_mw,mismatch_residual,rank_ratio,certified,solve_ms,fp_reference,status";

fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:.9e}")
    }
}

fn sanitize(text: &str) -> String {
    text.replace([',', '\n'], ";")
}

impl TrialRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.trial,
            self.seed,
            self.scenario_digest,
            self.design,
            fmt_f64(self.p_c_dbm),
            fmt_f64(self.eps2),
            fmt_f64(self.gamma_p_frac),
            fmt_f64(self.gamma_inr_db),
            fmt_f64(self.worst_case_rate),
            fmt_f64(self.nominal_rate),
            fmt_f64(self.p_d),
            fmt_f64(self.inr_margin_mw),
            fmt_f64(self.mismatch_residual),
            fmt_f64(self.rank_ratio),
            self.certified,
            fmt_f64(self.solve_ms),
            self.fp_reference,
            sanitize(&self.status),
        )
    }

    pub fn from_csv_row(row: &str) -> Result<Self, ExperimentError> {
        let cols: Vec<&str> = row.split(',').collect();
        if cols.len() != 18 {
            return Err(ExperimentError::Failed(format!(
                "malformed record row ({} columns): {row}",
                cols.len()
            )));
        }
        let f = |s: &str| -> Result<f64, ExperimentError> {
            s.parse()
                .map_err(|e| ExperimentError::Failed(format!("bad float {s}: {e}")))
        };
        Ok(Self {
            trial: cols[0]
                .parse()
                .map_err(|e| ExperimentError::Failed(format!("bad trial: {e}")))?,
            seed: cols[1]
                .parse()
                .map_err(|e| ExperimentError::Failed(format!("bad seed: {e}")))?,
            scenario_digest: cols[2].into(),
            design: cols[3].into(),
            p_c_dbm: f(cols[4])?,
            eps2: f(cols[5])?,
            gamma_p_frac: f(cols[6])?,
            gamma_inr_db: f(cols[7])?,
            worst_case_rate: f(cols[8])?,
            nominal_rate: f(cols[9])?,
            p_d: f(cols[10])?,
            inr_margin_mw: f(cols[11])?,
            mismatch_residual: f(cols[12])?,
            rank_ratio: f(cols[13])?,
            certified: cols[14] == "true",
            solve_ms: f(cols[15])?,
            fp_reference: cols[16].into(),
            status: cols[17].into(),
        })
    }

    /// Identity of the (trial, design, cell) slot, independent of metrics.
    fn key(&self) -> (usize, String, String, String, String, String) {
        (
            self.trial,
            self.design.clone(),
            fmt_f64(self.p_c_dbm),
            fmt_f64(self.eps2),
            fmt_f64(self.gamma_p_frac),
            fmt_f64(self.gamma_inr_db),
        )
    }
}

type RecordKey = (usize, String, String, String, String, String);

fn csv_preamble(digest: &str) -> String {
    format!("# config_digest = {digest}\n# code_version = {CODE_VERSION}\n{CSV_HEADER}\n")
}

/// Loads existing records (resume support), verifying the config digest.
fn load_records(
    path: &Path,
    expected_digest: &str,
) -> Result<BTreeMap<RecordKey, TrialRecord>, ExperimentError> {
    let mut out = BTreeMap::new();
    if !path.exists() {
        return Ok(out);
    }
    let text = fs::read_to_string(path)?;
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("# config_digest = ") {
            if rest.trim() != expected_digest {
                return Err(ExperimentError::DigestMismatch {
                    path: path.display().to_string(),
                    found: rest.trim().into(),
                    expected: expected_digest.into(),
                });
            }
            continue;
        }
        if line.starts_with('#') || line == CSV_HEADER || line.trim().is_empty() {
            continue;
        }
        let rec = TrialRecord::from_csv_row(line)?;
        out.insert(rec.key(), rec);
    }
    Ok(out)
}

/// Rewrites the records file sorted by key (atomic via temp + rename).
fn write_records(
    path: &Path,
    digest: &str,
    records: &BTreeMap<RecordKey, TrialRecord>,
) -> Result<(), ExperimentError> {
    let mut text = csv_preamble(digest);
    for rec in records.values() {
        text.push_str(&rec.csv_row());
        text.push('\n');
    }
    let tmp = path.with_extension("csv.tmp");
    fs::write(&tmp, text)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), ExperimentError> {
    fs::write(path, serde_json::to_string_pretty(value).expect("json") + "\n")?;
    Ok(())
}

fn run_pool<T: Send, F: Fn(usize) -> T + Sync + Send>(
    jobs: usize,
    count: usize,
    f: F,
) -> Vec<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .expect("thread pool");
    pool.install(|| (0..count).into_par_iter().map(f).collect())
}

// ---------------------------------------------------------------------------
// shared per-design evaluation
// ---------------------------------------------------------------------------

struct Evaluation {
    worst_case_rate: f64,
    nominal_rate: f64,
    p_d: f64,
    inr_margin_mw: f64,
    mismatch_residual: f64,
}

/// Evaluates a deployed rank-one design under `eval_sc` (true radii): oracle
/// worst-case rate, nominal rate, detection probability at the mainlobe
/// center, robust INR margin, and mismatch residual.
fn evaluate_design(
    eval_sc: &Scenario,
    r_d: &HermitianMatrix,
    sol: &DesignSolution,
    oracle_budget: usize,
    eval_seed: u64,
) -> Result<Evaluation, ExperimentError> {
    let t1 = HermitianMatrix::outer(&sol.t);
    // Radar protection is a hard deployment requirement: a beamformer that
    // cannot certify the per-antenna INR caps under the error bounds in
    // force at evaluation time is backed off to the largest compliant power
    // before scoring. Designs that already certify (beta = 1) are untouched.
    let mut beta = 1.0f64;
    for (idx, g) in eval_sc.g_bar.iter().enumerate() {
        let u: CVector = g.map(|z| z.conj());
        let slack = 2.0 * eval_sc.eps_gm * g.norm() + eval_sc.eps_gm * eval_sc.eps_gm;
        let load = t1.quadratic_form(&u) + slack * t1.trace();
        if load > 0.0 {
            beta = beta.min(eval_sc.gamma_inr[idx] * eval_sc.sigma_r2 / load);
        }
    }
    let t1 = if beta < 1.0 { t1.scale(beta) } else { t1 };
    let oracle = secrecy::worst_case_secrecy(eval_sc, &t1, &sol.r_x, oracle_budget, eval_seed);
    let nominal = secrecy::secrecy_rate(&eval_sc.nominal_realization(), &t1, &sol.r_x, eval_sc);
    let theta0 = 0.5 * (eval_sc.mainlobe.0 + eval_sc.mainlobe.1);
    let a = steering_vector(theta0, eval_sc.m_radar);
    let rho = radar::noncentrality(
        &sol.r_x,
        &t1,
        &eval_sc.g_bar,
        &a,
        &a,
        eval_sc.alpha_mag2,
        eval_sc.pulse_len,
        eval_sc.sigma_r2,
    )
    .map_err(|e| ExperimentError::Failed(e.to_string()))?;
    let det = radar::detection_probability(rho, eval_sc.p_fa)
        .map_err(|e| ExperimentError::Failed(e.to_string()))?;
    let mut margin = f64::INFINITY;
    for (idx, g) in eval_sc.g_bar.iter().enumerate() {
        let u: CVector = g.map(|z| z.conj());
        let slack = 2.0 * eval_sc.eps_gm * g.norm() + eval_sc.eps_gm * eval_sc.eps_gm;
        let load = t1.quadratic_form(&u) + slack * t1.trace();
        margin = margin.min(eval_sc.gamma_inr[idx] * eval_sc.sigma_r2 - load);
    }
    Ok(Evaluation {
        worst_case_rate: oracle.secrecy_rate,
        nominal_rate: nominal.secrecy_rate,
        p_d: det.p_d,
        inr_margin_mw: margin,
        mismatch_residual: sol.r_x.sub(r_d).frobenius_norm(),
    })
}

fn failure_record(
    trial: usize,
    seed: u64,
    digest: String,
    design: &str,
    p_c_dbm: f64,
    eps2: f64,
    gamma_p_frac: f64,
    gamma_inr_db: f64,
    solve_ms: f64,
    status: String,
) -> TrialRecord {
    TrialRecord {
        trial,
        seed,
        scenario_digest: digest,
        design: design.into(),
        p_c_dbm,
        eps2,
        gamma_p_frac,
        gamma_inr_db,
        worst_case_rate: f64::NAN,
        nominal_rate: f64::NAN,
        p_d: f64::NAN,
        inr_margin_mw: f64::NAN,
        mismatch_residual: f64::NAN,
        rank_ratio: f64::NAN,
        certified: false,
        solve_ms,
        fp_reference: String::new(),
        status,
    }
}

// ---------------------------------------------------------------------------
// secrecy vs. power
// ---------------------------------------------------------------------------

/// Robust vs. non-robust mean worst-case secrecy over the P_C and eps^2
/// sweeps. The non-robust baseline is solved with all radii zero and then
/// evaluated under the true radii; at eps^2 = 0 the two designs coincide.
pub fn run_secrecy_vs_power(
    cfg: &ExperimentConfig,
    out_dir: &Path,
) -> Result<serde_json::Value, ExperimentError> {
    cfg.validate()?;
    fs::create_dir_all(out_dir)?;
    let digest = cfg.digest();
    let path = out_dir.join("secrecy_power_records.csv");
    let mut records = load_records(&path, &digest)?;
    let r_d = design_ideal_covariance(
        &BeampatternSpec::indicator((
            cfg.template.mainlobe_deg[0],
            cfg.template.mainlobe_deg[1],
        )),
        crate::scenario::dbm_to_mw(cfg.template.p_r_dbm),
        cfg.template.m_radar,
    )
    .map_err(|e| ExperimentError::Failed(e.to_string()))?;

    // work items: one per (trial, p_c) still missing at least one record
    let mut work: Vec<(usize, f64)> = vec![];
    for trial in 0..cfg.trials {
        for &p_c in &cfg.p_c_dbm_sweep {
            let missing = cfg.eps2_sweep.iter().any(|&e| {
                ["robust", "nonrobust"].iter().any(|d| {
                    !records.contains_key(&(
                        trial,
                        d.to_string(),
                        fmt_f64(p_c),
                        fmt_f64(e),
                        fmt_f64(cfg.template.gamma_p_frac),
                        fmt_f64(cfg.template.gamma_inr_db),
                    ))
                })
            });
            if missing {
                work.push((trial, p_c));
            }
        }
    }
    let appender = Mutex::new(open_append(&path, &digest)?);
    let grid = cfg.mc_grid();
    let produced: Vec<Vec<TrialRecord>> = run_pool(cfg.jobs, work.len(), |w| {
        let (trial, p_c) = work[w];
        let recs = secrecy_power_cell(cfg, &grid, &r_d, trial, p_c);
        let mut file = appender.lock().unwrap();
        for r in &recs {
            let _ = writeln!(file, "{}", r.csv_row());
        }
        recs
    });
    drop(appender);
    for rec in produced.into_iter().flatten() {
        records.insert(rec.key(), rec);
    }
    write_records(&path, &digest, &records)?;

    // aggregate: mean worst-case rate per (design, p_c, eps2) over
    // certified successful records, failures counted and excluded
    let mut cells = vec![];
    let mut failures = 0usize;
    for &p_c in &cfg.p_c_dbm_sweep {
        for &e in &cfg.eps2_sweep {
            for design in ["robust", "nonrobust"] {
                let vals: Vec<f64> = records
                    .values()
                    .filter(|r| {
                        r.design == design
                            && r.p_c_dbm == p_c
                            && r.eps2 == e
                            && r.status == "ok"
                            && r.certified
                    })
                    .map(|r| r.worst_case_rate)
                    .collect();
                let excluded = records
                    .values()
                    .filter(|r| {
                        r.design == design
                            && r.p_c_dbm == p_c
                            && r.eps2 == e
                            && (r.status != "ok" || !r.certified)
                    })
                    .count();
                failures += excluded;
                cells.push(json!({
                    "design": design,
                    "p_c_dbm": p_c,
                    "eps2": e,
                    "trials": vals.len(),
                    "excluded": excluded,
                    "mean_worst_case_rate": mean(&vals),
                }));
            }
        }
    }
    let summary = json!({
        "experiment": "secrecy-vs-power",
        "config_digest": digest,
        "code_version": CODE_VERSION,
        "trials": cfg.trials,
        "total_records": records.len(),
        "excluded_records": failures,
        "cells": cells,
    });
    write_json(&out_dir.join("secrecy_power_summary.json"), &summary)?;
    Ok(summary)
}

fn open_append(path: &Path, digest: &str) -> Result<fs::File, ExperimentError> {
    if !path.exists() {
        fs::write(path, csv_preamble(digest))?;
    }
    Ok(fs::OpenOptions::new().append(true).open(path)?)
}

/// All records of one (trial, p_c) cell across the eps^2 sweep.
fn secrecy_power_cell(
    cfg: &ExperimentConfig,
    grid: &SearchGrid,
    r_d: &HermitianMatrix,
    trial: usize,
    p_c_dbm: f64,
) -> Vec<TrialRecord> {
    let seed = trial_seed(cfg.seed, trial);
    let mut out = vec![];

    let mut base = cfg.template.clone();
    base.p_c_dbm = p_c_dbm;

    // non-robust baseline: all radii zero (channel draws are unaffected
    // by eps2, so every eps2 cell shares the same nominal channels)
    let mut tmpl0 = base.clone();
    tmpl0.eps2 = 0.0;
    let sc0 = tmpl0.sample(seed);
    let t0 = Instant::now();
    let nonrobust = algorithm::run(&sc0, r_d, grid, cfg.oracle_budget, seed);
    let nonrobust_ms = t0.elapsed().as_secs_f64() * 1e3;

    for (cell, &e) in cfg.eps2_sweep.iter().enumerate() {
        let mut tmpl_e = base.clone();
        tmpl_e.eps2 = e;
        let sc_e = tmpl_e.sample(seed);
        let digest_e = scenario_digest(&sc_e);
        let eval_seed = mix_seed(seed, 101 + cell as u64);
        let mk_fail = |design: &str, ms: f64, status: String| {
            failure_record(
                trial,
                seed,
                digest_e.clone(),
                design,
                p_c_dbm,
                e,
                cfg.template.gamma_p_frac,
                cfg.template.gamma_inr_db,
                ms,
                status,
            )
        };
        let mut emit = |design: &str, sol_sc: &Scenario, res: &Result<DesignSolution, algorithm::AlgorithmError>, ms: f64| {
            let rec = match res {
                Ok(sol) => {
                    let cert = certify_design(sol_sc, r_d, sol);
                    match evaluate_design(&sc_e, r_d, sol, cfg.oracle_budget, eval_seed) {
                        Ok(ev) => TrialRecord {
                            trial,
                            seed,
                            scenario_digest: digest_e.clone(),
                            design: design.into(),
                            p_c_dbm,
                            eps2: e,
                            gamma_p_frac: cfg.template.gamma_p_frac,
                            gamma_inr_db: cfg.template.gamma_inr_db,
                            worst_case_rate: ev.worst_case_rate,
                            nominal_rate: ev.nominal_rate,
                            p_d: ev.p_d,
                            inr_margin_mw: ev.inr_margin_mw,
                            mismatch_residual: ev.mismatch_residual,
                            rank_ratio: sol.rank_ratio,
                            certified: cert.pass,
                            solve_ms: ms,
                            fp_reference: String::new(),
                            status: if cert.pass {
                                "ok".into()
                            } else {
                                format!("certificate failed: {}", cert.details.join("; "))
                            },
                        },
                        Err(err) => mk_fail(design, ms, format!("evaluation failed: {err}")),
                    }
                }
                Err(err) => mk_fail(design, ms, format!("solve failed: {err}")),
            };
            out.push(rec);
        };

        // robust design at this eps2 (identical to the baseline at eps2 = 0)
        if e == 0.0 {
            emit("robust", &sc0, &nonrobust, nonrobust_ms);
        } else {
            let t1 = Instant::now();
            let robust = algorithm::run(&sc_e, r_d, grid, cfg.oracle_budget, seed);
            let ms = t1.elapsed().as_secs_f64() * 1e3;
            emit("robust", &sc_e, &robust, ms);
        }
        emit("nonrobust", &sc0, &nonrobust, nonrobust_ms);
    }
    out
}

// ---------------------------------------------------------------------------
// trade-off: secrecy vs. detection probability
// ---------------------------------------------------------------------------

/// Secrecy rate vs. average detection probability: the detection axis is
/// generated by sweeping the admissible (gamma_p, Gamma_m) pairs at the
/// configured aggregate radar SNR.
pub fn run_tradeoff_experiment(
    cfg: &ExperimentConfig,
    out_dir: &Path,
) -> Result<serde_json::Value, ExperimentError> {
    cfg.validate()?;
    fs::create_dir_all(out_dir)?;
    let digest = cfg.digest();
    let path = out_dir.join("tradeoff_records.csv");
    let mut records = load_records(&path, &digest)?;
    let r_d = design_ideal_covariance(
        &BeampatternSpec::indicator((
            cfg.template.mainlobe_deg[0],
            cfg.template.mainlobe_deg[1],
        )),
        crate::scenario::dbm_to_mw(cfg.template.p_r_dbm),
        cfg.template.m_radar,
    )
    .map_err(|e| ExperimentError::Failed(e.to_string()))?;

    let mut work: Vec<(usize, f64, f64)> = vec![];
    for trial in 0..cfg.trials {
        for &gp in &cfg.gamma_p_frac_sweep {
            for &gi in &cfg.gamma_inr_db_sweep {
                let key = (
                    trial,
                    "robust".to_string(),
                    fmt_f64(cfg.template.p_c_dbm),
                    fmt_f64(cfg.template.eps2),
                    fmt_f64(gp),
                    fmt_f64(gi),
                );
                if !records.contains_key(&key) {
                    work.push((trial, gp, gi));
                }
            }
        }
    }
    let appender = Mutex::new(open_append(&path, &digest)?);
    let grid = cfg.mc_grid();
    let produced: Vec<TrialRecord> = run_pool(cfg.jobs, work.len(), |w| {
        let (trial, gp, gi) = work[w];
        let rec = tradeoff_cell(cfg, &grid, &r_d, trial, gp, gi);
        let mut file = appender.lock().unwrap();
        let _ = writeln!(file, "{}", rec.csv_row());
        rec
    });
    drop(appender);
    for rec in produced {
        records.insert(rec.key(), rec);
    }
    write_records(&path, &digest, &records)?;

    // per Gamma_m curve: (mean P_D, mean secrecy) across the gamma_p sweep,
    // plus the Spearman correlation along the curve
    let mut curves = vec![];
    for &gi in &cfg.gamma_inr_db_sweep {
        let mut points = vec![];
        let mut pd_means = vec![];
        let mut rate_means = vec![];
        for &gp in &cfg.gamma_p_frac_sweep {
            let ok: Vec<&TrialRecord> = records
                .values()
                .filter(|r| {
                    r.gamma_inr_db == gi
                        && r.gamma_p_frac == gp
                        && r.status == "ok"
                        && r.certified
                })
                .collect();
            let pd: Vec<f64> = ok.iter().map(|r| r.p_d).collect();
            let rate: Vec<f64> = ok.iter().map(|r| r.worst_case_rate).collect();
            let (mp, mr) = (mean(&pd), mean(&rate));
            pd_means.push(mp);
            rate_means.push(mr);
            points.push(json!({
                "gamma_p_frac": gp,
                "trials": ok.len(),
                "mean_p_d": mp,
                "mean_worst_case_rate": mr,
            }));
        }
        curves.push(json!({
            "gamma_inr_db": gi,
            "points": points,
            "spearman_pd_vs_rate": spearman(&pd_means, &rate_means),
        }));
    }
    let summary = json!({
        "experiment": "secrecy-vs-detection",
        "config_digest": digest,
        "code_version": CODE_VERSION,
        "trials": cfg.trials,
        "radar_snr_db": cfg.template.radar_snr_db,
        "total_records": records.len(),
        "curves": curves,
    });
    write_json(&out_dir.join("tradeoff_summary.json"), &summary)?;
    Ok(summary)
}

fn tradeoff_cell(
    cfg: &ExperimentConfig,
    grid: &SearchGrid,
    r_d: &HermitianMatrix,
    trial: usize,
    gamma_p_frac: f64,
    gamma_inr_db: f64,
) -> TrialRecord {
    let seed = trial_seed(cfg.seed, trial);
    let mut tmpl = cfg.template.clone();
    tmpl.gamma_p_frac = gamma_p_frac;
    tmpl.gamma_inr_db = gamma_inr_db;
    let sc = tmpl.sample(seed);
    let digest = scenario_digest(&sc);
    let eval_seed = mix_seed(seed, 707);
    let t0 = Instant::now();
    let res = algorithm::run(&sc, r_d, grid, cfg.oracle_budget, seed);
    let ms = t0.elapsed().as_secs_f64() * 1e3;
    match res {
        Ok(sol) => {
            let cert = certify_design(&sc, r_d, &sol);
            match evaluate_design(&sc, r_d, &sol, cfg.oracle_budget, eval_seed) {
                Ok(ev) => TrialRecord {
                    trial,
                    seed,
                    scenario_digest: digest,
                    design: "robust".into(),
                    p_c_dbm: cfg.template.p_c_dbm,
                    eps2: cfg.template.eps2,
                    gamma_p_frac,
                    gamma_inr_db,
                    worst_case_rate: ev.worst_case_rate,
                    nominal_rate: ev.nominal_rate,
                    p_d: ev.p_d,
                    inr_margin_mw: ev.inr_margin_mw,
                    mismatch_residual: ev.mismatch_residual,
                    rank_ratio: sol.rank_ratio,
                    certified: cert.pass,
                    solve_ms: ms,
                    fp_reference: String::new(),
                    status: if cert.pass {
                        "ok".into()
                    } else {
                        format!("certificate failed: {}", cert.details.join("; "))
                    },
                },
                Err(err) => failure_record(
                    trial,
                    seed,
                    digest,
                    "robust",
                    cfg.template.p_c_dbm,
                    cfg.template.eps2,
                    gamma_p_frac,
                    gamma_inr_db,
                    ms,
                    format!("evaluation failed: {err}"),
                ),
            }
        }
        Err(err) => failure_record(
            trial,
            seed,
            digest,
            "robust",
            cfg.template.p_c_dbm,
            cfg.template.eps2,
            gamma_p_frac,
            gamma_inr_db,
            ms,
            format!("solve failed: {err}"),
        ),
    }
}

// ---------------------------------------------------------------------------
// beampattern sweep
// ---------------------------------------------------------------------------

/// Beampattern sweep over gamma_p budgets: one designed curve per budget
/// plus the reference curve of the ideal covariance R_d.
pub fn run_beampattern_experiment(
    cfg: &ExperimentConfig,
    out_dir: &Path,
) -> Result<serde_json::Value, ExperimentError> {
    cfg.validate()?;
    fs::create_dir_all(out_dir)?;
    let digest = cfg.digest();
    let spec = BeampatternSpec::indicator((
        cfg.template.mainlobe_deg[0],
        cfg.template.mainlobe_deg[1],
    ));
    let r_d = design_ideal_covariance(
        &spec,
        crate::scenario::dbm_to_mw(cfg.template.p_r_dbm),
        cfg.template.m_radar,
    )
    .map_err(|e| ExperimentError::Failed(e.to_string()))?;

    let mut csv = csv_beam_preamble(&digest);
    let grid_deg: Vec<f64> = (0..=180).map(|d| d as f64).collect();
    append_beam_rows(&mut csv, "desired", f64::NAN, &r_d, &grid_deg);
    let (ml_d, sl_d) = lobe_averages(&r_d, cfg.template.mainlobe_deg);

    let grid = cfg.single_grid();
    let mut curves = vec![json!({
        "gamma_p_frac": null,
        "design": "desired",
        "mainlobe_avg_db": db(ml_d),
        "sidelobe_avg_db": db(sl_d),
    })];
    let results: Vec<(f64, Result<DesignSolution, String>)> =
        run_pool(cfg.jobs, cfg.gamma_p_frac_sweep.len(), |i| {
            let frac = cfg.gamma_p_frac_sweep[i];
            let mut tmpl = cfg.template.clone();
            tmpl.gamma_p_frac = frac;
            let sc = tmpl.sample(cfg.seed);
            (
                frac,
                algorithm::run(&sc, &r_d, &grid, cfg.oracle_budget, cfg.seed)
                    .map_err(|e| e.to_string()),
            )
        });
    for (frac, res) in &results {
        match res {
            Ok(sol) => {
                append_beam_rows(&mut csv, "designed", *frac, &sol.r_x, &grid_deg);
                let (ml, sl) = lobe_averages(&sol.r_x, cfg.template.mainlobe_deg);
                curves.push(json!({
                    "gamma_p_frac": frac,
                    "design": "designed",
                    "mainlobe_avg_db": db(ml),
                    "sidelobe_avg_db": db(sl),
                    "mismatch_residual": sol.r_x.sub(&r_d).frobenius_norm(),
                }));
            }
            Err(err) => {
                curves.push(json!({
                    "gamma_p_frac": frac,
                    "design": "designed",
                    "error": err,
                }));
            }
        }
    }
    fs::write(out_dir.join("beampattern.csv"), csv)?;
    let summary = json!({
        "experiment": "beampattern",
        "config_digest": digest,
        "code_version": CODE_VERSION,
        "curves": curves,
    });
    write_json(&out_dir.join("beampattern_summary.json"), &summary)?;
    Ok(summary)
}

fn csv_beam_preamble(digest: &str) -> String {
    format!(
        "# config_digest = {digest}\n# code_version = {CODE_VERSION}\ndesign,gamma_p_frac,theta_deg,gain_mw,gain_db\n"
    )
}

fn append_beam_rows(
    csv: &mut String,
    design: &str,
    frac: f64,
    r_x: &HermitianMatrix,
    grid_deg: &[f64],
) {
    for &theta in grid_deg {
        let gain = radar::beampattern(r_x, theta);
        let _ = writeln!(
            csv,
            "{design},{},{},{},{}",
            fmt_f64(frac),
            theta,
            fmt_f64(gain),
            fmt_f64(db(gain)),
        );
    }
}

fn db(x: f64) -> f64 {
    10.0 * x.max(1e-300).log10()
}

/// Mean linear gain over mainlobe / sidelobe regions on a 1-degree grid.
pub fn lobe_averages(r_x: &HermitianMatrix, mainlobe: [f64; 2]) -> (f64, f64) {
    let mut main = vec![];
    let mut side = vec![];
    for d in 0..=180 {
        let theta = d as f64;
        let gain = radar::beampattern(r_x, theta);
        if theta >= mainlobe[0] && theta <= mainlobe[1] {
            main.push(gain);
        } else {
            side.push(gain);
        }
    }
    (mean(&main), mean(&side))
}

// ---------------------------------------------------------------------------
// single solve
// ---------------------------------------------------------------------------

/// One end-to-end flagship solve with the full search grid, certification,
/// oracle falsification, and a human-readable report.
pub fn run_single(
    cfg: &ExperimentConfig,
    out_dir: &Path,
) -> Result<(String, serde_json::Value), ExperimentError> {
    cfg.validate()?;
    fs::create_dir_all(out_dir)?;
    let digest = cfg.digest();
    let sc = cfg.template.sample(cfg.seed);
    let spec = BeampatternSpec::indicator(sc.mainlobe);
    let r_d = design_ideal_covariance(&spec, sc.p_r, sc.m_radar)
        .map_err(|e| ExperimentError::Failed(e.to_string()))?;
    let t0 = Instant::now();
    let sol = algorithm::run(&sc, &r_d, &cfg.single_grid(), cfg.oracle_budget, cfg.seed)
        .map_err(|e| ExperimentError::Failed(e.to_string()))?;
    let ms = t0.elapsed().as_secs_f64() * 1e3;
    let cert = certify_design(&sc, &r_d, &sol);

    // deterministic trace CSV: byte-identical across reruns with one seed
    let mut trace = format!(
        "# config_digest = {digest}\n# code_version = {CODE_VERSION}\nmu,gamma_b,objective,status\n"
    );
    for p in &sol.per_mu_trace {
        let _ = writeln!(
            trace,
            "{},{},{},{}",
            fmt_f64(p.mu),
            fmt_f64(p.gamma_b),
            fmt_f64(p.objective),
            sanitize(&p.status),
        );
    }
    fs::write(out_dir.join("single_trace.csv"), &trace)?;

    let solution_json: serde_json::Value =
        serde_json::from_str(&sol.to_json_string()).expect("solution json");
    let report_json = json!({
        "experiment": "single-solve",
        "config_digest": digest,
        "code_version": CODE_VERSION,
        "scenario_digest": scenario_digest(&sc),
        "solve_ms": ms,
        "certificate": cert,
        "solution": solution_json,
    });
    write_json(&out_dir.join("single_solution.json"), &report_json)?;

    let monotonicity = sol.gamma_monotonicity_violations(1e-5);
    let mut text = String::new();
    let _ = writeln!(text, "single solve: {}", scenario_digest(&sc));
    let _ = writeln!(
        text,
        "  mu* = {:.6e}, eta* = {:.6e}, zeta* = {:.6e}",
        sol.mu_star, sol.eta_star, sol.zeta_star
    );
    let _ = writeln!(
        text,
        "  certified worst-case secrecy rate (SDR bound): {:.6} bit/s/Hz",
        sol.sdr_bound_rate
    );
    let _ = writeln!(
        text,
        "  rank-one certified rate: {:.6} bit/s/Hz (rank ratio {:.3e}{})",
        sol.rank_one_certified_rate,
        sol.rank_ratio,
        if sol.randomized { ", randomized" } else { "" }
    );
    let _ = writeln!(
        text,
        "  oracle worst-case secrecy: SDR {:.6}, rank-one {:.6}",
        sol.oracle_sdr.secrecy_rate, sol.oracle_rank_one.secrecy_rate
    );
    let _ = writeln!(
        text,
        "  probes: {} ({} monotonicity flags), wall time {:.1} ms",
        sol.inner_solves,
        monotonicity.len(),
        ms
    );
    let _ = writeln!(text, "  certificate pass: {}", cert.pass);
    for d in &cert.details {
        let _ = writeln!(text, "    ! {d}");
    }
    Ok((text, report_json))
}

// ---------------------------------------------------------------------------
// small statistics helpers
// ---------------------------------------------------------------------------

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        f64::NAN
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap());
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            out[idx[k]] = avg;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation (ties get average ranks).
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    if x.len() < 2 {
        return f64::NAN;
    }
    let rx = ranks(x);
    let ry = ranks(y);
    let mx = mean(&rx);
    let my = mean(&ry);
    let mut num = 0.0;
    let mut dx = 0.0;
    let mut dy = 0.0;
    for (a, b) in rx.iter().zip(ry.iter()) {
        num += (a - mx) * (b - my);
        dx += (a - mx).powi(2);
        dy += (b - my).powi(2);
    }
    if dx == 0.0 || dy == 0.0 {
        return f64::NAN;
    }
    num / (dx * dy).sqrt()
}
