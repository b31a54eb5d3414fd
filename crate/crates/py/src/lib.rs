//! Python bindings: scenario construction, the two-layer design, the
//! worst-case oracle, and radar detection metrics.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use secoex::algorithm::{self, DesignSolution, SearchGrid};
use secoex::linalg::HermitianMatrix;
use secoex::radar::{self, design_ideal_covariance, BeampatternSpec};
use secoex::scenario::{self, ScenarioTemplate};
use secoex::secrecy;

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// Coexistence scenario: powers, noise, nominal channels, error radii.
#[pyclass(name = "Scenario", from_py_object)]
#[derive(Clone)]
struct PyScenario {
    inner: scenario::Scenario,
}

#[pymethods]
impl PyScenario {
    /// Samples a scenario from a TOML template (empty string = defaults).
    #[staticmethod]
    #[pyo3(signature = (template_toml, seed))]
    fn sample(template_toml: &str, seed: u64) -> PyResult<Self> {
        let template: ScenarioTemplate = if template_toml.trim().is_empty() {
            ScenarioTemplate::default()
        } else {
            toml::from_str(template_toml).map_err(|e| PyValueError::new_err(e.to_string()))?
        };
        Ok(Self {
            inner: template.sample(seed),
        })
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: scenario::Scenario::from_toml_str(text)
                .map_err(|e| PyValueError::new_err(e.to_string()))?,
        })
    }

    fn to_toml(&self) -> String {
        self.inner.to_toml_string()
    }

    /// Copy with every error radius set to zero (non-robust baseline).
    fn with_zero_radii(&self) -> Self {
        Self {
            inner: self.inner.with_zero_radii(),
        }
    }

    #[getter]
    fn n_bs(&self) -> usize {
        self.inner.n_bs
    }

    #[getter]
    fn m_radar(&self) -> usize {
        self.inner.m_radar
    }

    #[getter]
    fn p_c(&self) -> f64 {
        self.inner.p_c
    }

    #[getter]
    fn p_r(&self) -> f64 {
        self.inner.p_r
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(n_bs={}, m_radar={}, p_c={:.1} mW, p_r={:.1} mW)",
            self.inner.n_bs, self.inner.m_radar, self.inner.p_c, self.inner.p_r
        )
    }
}

/// Result of the two-layer design: certified SDR solution plus the
/// extracted rank-one beamformer and the full outer-search trace.
#[pyclass(name = "Design")]
struct PyDesign {
    inner: DesignSolution,
}

fn cvec_py(v: &secoex::CVector) -> Vec<(f64, f64)> {
    v.iter().map(|z| (z.re, z.im)).collect()
}

fn herm_py(h: &HermitianMatrix) -> Vec<Vec<(f64, f64)>> {
    let d = h.dim();
    let m = h.matrix();
    (0..d)
        .map(|i| (0..d).map(|j| (m[(i, j)].re, m[(i, j)].im)).collect())
        .collect()
}

#[pymethods]
impl PyDesign {
    #[getter]
    fn mu_star(&self) -> f64 {
        self.inner.mu_star
    }

    #[getter]
    fn eta_star(&self) -> f64 {
        self.inner.eta_star
    }

    #[getter]
    fn objective(&self) -> f64 {
        self.inner.objective
    }

    /// Certified worst-case secrecy rate of the SDR design, bit/s/Hz.
    #[getter]
    fn sdr_bound_rate(&self) -> f64 {
        self.inner.sdr_bound_rate
    }

    #[getter]
    fn rank_one_certified_rate(&self) -> f64 {
        self.inner.rank_one_certified_rate
    }

    #[getter]
    fn rank_ratio(&self) -> f64 {
        self.inner.rank_ratio
    }

    /// Extracted transmit beamformer as a list of (re, im) pairs.
    fn beamformer(&self) -> Vec<(f64, f64)> {
        cvec_py(&self.inner.t)
    }

    /// Radar covariance as a nested list of (re, im) pairs.
    fn radar_covariance(&self) -> Vec<Vec<(f64, f64)>> {
        herm_py(&self.inner.r_x)
    }

    /// Transmit power radiated toward `theta_deg` by the radar covariance.
    fn beampattern(&self, theta_deg: f64) -> f64 {
        radar::beampattern(&self.inner.r_x, theta_deg)
    }

    /// Outer-search trace as (mu, gamma_b, objective, status) tuples.
    fn trace(&self) -> Vec<(f64, f64, f64, String)> {
        self.inner
            .per_mu_trace
            .iter()
            .map(|p| (p.mu, p.gamma_b, p.objective, p.status.clone()))
            .collect()
    }

    fn to_json(&self) -> String {
        self.inner.to_json_string()
    }

    fn __repr__(&self) -> String {
        format!(
            "Design(mu_star={:.4e}, rate={:.4} bit/s/Hz, rank_ratio={:.2e})",
            self.inner.mu_star, self.inner.sdr_bound_rate, self.inner.rank_ratio
        )
    }
}

/// Runs the full two-layer robust design for one scenario.
#[pyfunction]
#[pyo3(signature = (sc, grid_points=16, refinement=1, oracle_budget=512, seed=0))]
fn design(
    sc: &PyScenario,
    grid_points: usize,
    refinement: usize,
    oracle_budget: usize,
    seed: u64,
) -> PyResult<PyDesign> {
    let spec = BeampatternSpec::indicator(sc.inner.mainlobe);
    let r_d = design_ideal_covariance(&spec, sc.inner.p_r, sc.inner.m_radar).map_err(err)?;
    let grid = SearchGrid {
        points: grid_points,
        refinement,
        ..SearchGrid::default()
    };
    let sol = algorithm::run(&sc.inner, &r_d, &grid, oracle_budget, seed).map_err(err)?;
    Ok(PyDesign { inner: sol })
}

/// Sampled worst-case secrecy rate of a design under the scenario's
/// error balls: returns (secrecy_rate, gamma_b, gamma_e).
#[pyfunction]
#[pyo3(signature = (sc, design, budget=1024, seed=0))]
fn worst_case_secrecy(
    sc: &PyScenario,
    design: &PyDesign,
    budget: usize,
    seed: u64,
) -> (f64, f64, f64) {
    let t1 = HermitianMatrix::outer(&design.inner.t);
    let rep = secrecy::worst_case_secrecy(&sc.inner, &t1, &design.inner.r_x, budget, seed);
    (rep.secrecy_rate, rep.gamma_b, rep.gamma_e)
}

/// GLRT detection probability for non-centrality `rho` at false-alarm
/// rate `p_fa`.
#[pyfunction]
fn detection_probability(rho: f64, p_fa: f64) -> PyResult<f64> {
    Ok(radar::detection_probability(rho, p_fa).map_err(err)?.p_d)
}

/// Closed-form upper bound on the Eve-SINR cap worth searching.
#[pyfunction]
fn mu_upper_bound(sc: &PyScenario) -> f64 {
    algorithm::mu_upper_bound(&sc.inner)
}

/// ULA steering vector at `theta_deg` as (re, im) pairs.
#[pyfunction]
fn steering_vector(theta_deg: f64, count: usize) -> Vec<(f64, f64)> {
    cvec_py(&scenario::steering_vector(theta_deg, count))
}

/// Default scenario template in TOML form.
#[pyfunction]
fn default_template_toml() -> String {
    toml::to_string_pretty(&ScenarioTemplate::default()).expect("template serializes")
}

#[pymodule]
fn secoex_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScenario>()?;
    m.add_class::<PyDesign>()?;
    m.add_function(wrap_pyfunction!(design, m)?)?;
    m.add_function(wrap_pyfunction!(worst_case_secrecy, m)?)?;
    m.add_function(wrap_pyfunction!(detection_probability, m)?)?;
    m.add_function(wrap_pyfunction!(mu_upper_bound, m)?)?;
    m.add_function(wrap_pyfunction!(steering_vector, m)?)?;
    m.add_function(wrap_pyfunction!(default_template_toml, m)?)?;
    m.add("__version__", secoex::experiments::CODE_VERSION)?;
    Ok(())
}
