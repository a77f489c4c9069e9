//! Python bindings: channel geometry, PAM metrics, Monte-Carlo oracles, the
//! action space and episode runs.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use lumisec::channel::{self, Luminaire, Receiver, Vec3};
use lumisec::config::SystemConfig;
use lumisec::experiment::{self, Mode, TimeSlotLog};
use lumisec::metrics::{self, GaussianMixture, QuadratureConfig, UtilityWeights};
use lumisec::oracle;
use lumisec::qlearn;
use lumisec::signal::{self, EffectiveGain, PamConstellation, Precoder};

create_exception!(pylumisec, LumisecError, PyValueError);

fn err(e: lumisec::Error) -> PyErr {
    LumisecError::new_err(e.to_string())
}

fn load_config(path: Option<PathBuf>) -> PyResult<SystemConfig> {
    match path {
        Some(p) => SystemConfig::load(&p),
        None => SystemConfig::parse(lumisec::config::DEFAULT_CONFIG),
    }
    .map_err(err)
}

fn parse_mode(mode: &str, weights: Option<Vec<f64>>) -> PyResult<Mode> {
    let order = |s: &str| s.parse::<u32>().map_err(|_| PyValueError::new_err(format!("bad mode {mode:?}")));
    match (mode, weights) {
        ("adaptive", None) => Ok(Mode::Adaptive),
        (m, None) if m.starts_with("fixed") => Ok(Mode::FixedOrder(order(&m[5..])?)),
        (m, Some(weights)) if m.starts_with("static") => Ok(Mode::FixedBoth { order: order(&m[6..])?, weights }),
        _ => Err(PyValueError::new_err(format!(
            "mode must be 'adaptive', 'fixed<M>', or 'static<M>' with weights; got {mode:?}"
        ))),
    }
}

/// Lambertian emission order for a semi-angle at half illuminance (degrees).
#[pyfunction]
fn lambertian_order(semi_angle_deg: f64) -> PyResult<f64> {
    channel::lambertian_order(semi_angle_deg).map_err(err)
}

/// Line-of-sight DC gain from a ceiling luminaire to an upward-facing receiver.
#[pyfunction]
#[pyo3(signature = (luminaire, receiver, semi_angle_deg=60.0, area_m2=1e-4, fov_deg=60.0, filter_gain=1.0, refractive_index=1.5))]
fn los_gain(
    luminaire: [f64; 3],
    receiver: [f64; 3],
    semi_angle_deg: f64,
    area_m2: f64,
    fov_deg: f64,
    filter_gain: f64,
    refractive_index: f64,
) -> PyResult<f64> {
    let lum = Luminaire::new(Vec3::from(luminaire), semi_angle_deg).map_err(err)?;
    let rx = Receiver::new(Vec3::from(receiver), area_m2, fov_deg, filter_gain, refractive_index).map_err(err)?;
    channel::los_gain(&lum, &rx).map_err(err)
}

/// `(points, avg_symbol_energy)` of M-PAM with peak amplitude `amplitude`.
#[pyfunction]
fn constellation(order: u32, amplitude: f64) -> PyResult<(Vec<f64>, f64)> {
    let c = PamConstellation::with_amplitude(order, amplitude).map_err(err)?;
    Ok((c.points().to_vec(), c.avg_symbol_energy()))
}

/// Differential entropy (bits) of an equiprobable Gaussian mixture.
#[pyfunction]
fn mixture_entropy(means: Vec<f64>, sigma: f64) -> PyResult<f64> {
    let mix = GaussianMixture::new(means, sigma).map_err(err)?;
    metrics::mixture_entropy(&mix, &QuadratureConfig::default()).map_err(err)
}

#[pyfunction]
fn mutual_information(order: u32, amplitude: f64, gain: f64, sigma: f64) -> PyResult<f64> {
    let c = PamConstellation::with_amplitude(order, amplitude).map_err(err)?;
    metrics::mutual_information(&c, EffectiveGain(gain), sigma, &QuadratureConfig::default()).map_err(err)
}

#[pyfunction]
fn secrecy_capacity(
    order: u32,
    amplitude: f64,
    gain_bob: f64,
    sigma_bob: f64,
    gain_eve: f64,
    sigma_eve: f64,
) -> PyResult<f64> {
    let c = PamConstellation::with_amplitude(order, amplitude).map_err(err)?;
    metrics::secrecy_capacity(
        &c,
        EffectiveGain(gain_bob),
        sigma_bob,
        EffectiveGain(gain_eve),
        sigma_eve,
        &QuadratureConfig::default(),
    )
    .map_err(err)
}

#[pyfunction]
fn pam_ber(order: u32, gain: f64, sigma: f64, avg_symbol_energy: f64) -> PyResult<f64> {
    signal::check_order(order).map_err(err)?;
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(PyValueError::new_err("sigma must be positive"));
    }
    Ok(metrics::pam_ber(order, EffectiveGain(gain), sigma, avg_symbol_energy))
}

/// Monte-Carlo BER of Gray-mapped PAM: `(estimate, standard_error)`.
#[pyfunction]
#[pyo3(signature = (order, gain, sigma, avg_symbol_energy, n_symbols=1_000_000, seed=0))]
fn mc_ber(
    order: u32,
    gain: f64,
    sigma: f64,
    avg_symbol_energy: f64,
    n_symbols: usize,
    seed: u64,
) -> PyResult<(f64, f64)> {
    let r = oracle::mc_ber_oracle(order, gain, sigma, avg_symbol_energy, n_symbols, seed).map_err(err)?;
    Ok((r.estimate, r.std_error))
}

/// Monte-Carlo mixture entropy (bits): `(estimate, standard_error)`.
#[pyfunction]
#[pyo3(signature = (means, sigma, n_samples=1_000_000, seed=0))]
fn mc_entropy(means: Vec<f64>, sigma: f64, n_samples: usize, seed: u64) -> (f64, f64) {
    let r = oracle::mc_entropy_oracle(&means, sigma, n_samples, seed);
    (r.estimate, r.std_error)
}

#[pyfunction]
#[pyo3(signature = (secrecy_capacity, ber_bob, ber_eve, delta=10.0, zeta=5.0))]
fn utility(secrecy_capacity: f64, ber_bob: f64, ber_eve: f64, delta: f64, zeta: f64) -> PyResult<f64> {
    let w = UtilityWeights::new(delta, zeta).map_err(err)?;
    Ok(metrics::utility(secrecy_capacity, ber_bob, ber_eve, &w))
}

/// Joint (modulation order, quantized precoder) actions.
#[pyclass(frozen)]
struct ActionSpace(qlearn::ActionSpace);

#[pymethods]
impl ActionSpace {
    #[new]
    #[pyo3(signature = (orders=vec![2, 4, 8, 16, 32, 64], num_leds=4, levels=2))]
    fn new(orders: Vec<u32>, num_leds: usize, levels: u32) -> PyResult<Self> {
        qlearn::ActionSpace::quantized(&orders, num_leds, levels).map(Self).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    /// `(order, weights)` for an action index.
    fn decode(&self, index: usize) -> PyResult<(u32, Vec<f64>)> {
        if index >= self.0.len() {
            return Err(PyValueError::new_err(format!("action {index} out of range")));
        }
        let a = self.0.decode(index);
        Ok((self.0.order(a), self.0.precoder(a).weights().to_vec()))
    }
}

/// A configured room with one Bob/Eve placement.
#[pyclass(frozen)]
struct Scenario {
    inner: experiment::Scenario,
    config: SystemConfig,
}

#[pymethods]
impl Scenario {
    /// Setups from a TOML file, or the bundled defaults.
    #[staticmethod]
    #[pyo3(signature = (config_path=None))]
    fn load(config_path: Option<PathBuf>) -> PyResult<Vec<Scenario>> {
        let config = load_config(config_path)?;
        Ok(config
            .scenarios()
            .map_err(err)?
            .into_iter()
            .map(|inner| Scenario { inner, config: config.clone() })
            .collect())
    }

    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    #[getter]
    fn h_bob(&self) -> Vec<f64> {
        self.inner.h_bob().gains().to_vec()
    }

    #[getter]
    fn h_eve(&self) -> Vec<f64> {
        self.inner.h_eve().gains().to_vec()
    }

    #[getter]
    fn sigma_bob(&self) -> f64 {
        self.inner.bob.sigma
    }

    #[getter]
    fn sigma_eve(&self) -> f64 {
        self.inner.eve.sigma
    }

    /// Secrecy capacity, both BERs and utility for one action.
    fn metrics<'py>(&self, py: Python<'py>, order: u32, weights: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
        let cfg = self.config.run_config(Mode::Adaptive).map_err(err)?;
        let c = signal::build_constellation(order, &self.inner.drive).map_err(err)?;
        let w = Precoder::new(weights).map_err(err)?;
        let m = self.inner.metrics(&c, &w, &cfg.weights, &cfg.quadrature, cfg.clamp_secrecy).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("secrecy_capacity", m.secrecy_capacity)?;
        d.set_item("ber_bob", m.ber_bob)?;
        d.set_item("ber_eve", m.ber_eve)?;
        d.set_item("utility", m.utility)?;
        Ok(d)
    }

    /// Runs one learning episode. `mode` is `adaptive`, `fixed<M>` or
    /// `static<M>` (which also needs `weights`).
    #[pyo3(signature = (mode="adaptive", seed=None, num_slots=None, weights=None))]
    fn run(
        &self,
        py: Python<'_>,
        mode: &str,
        seed: Option<u64>,
        num_slots: Option<usize>,
        weights: Option<Vec<f64>>,
    ) -> PyResult<Episode> {
        let mut cfg = self.config.run_config(parse_mode(mode, weights)?).map_err(err)?;
        cfg.seed = seed.unwrap_or(cfg.seed);
        cfg.num_slots = num_slots.unwrap_or(cfg.num_slots);
        let window = cfg.summary_window.min(cfg.num_slots);
        let logs = py.detach(|| experiment::run_episode(&self.inner, &cfg)).map_err(err)?;
        Ok(Episode { logs, window })
    }
}

/// Per-slot log of one episode.
#[pyclass(frozen)]
struct Episode {
    logs: Vec<TimeSlotLog>,
    window: usize,
}

#[pymethods]
impl Episode {
    fn __len__(&self) -> usize {
        self.logs.len()
    }

    /// Column name to list of values, matching the CSV columns.
    fn columns<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        let col = |f: fn(&TimeSlotLog) -> f64| self.logs.iter().map(f).collect::<Vec<f64>>();
        d.set_item("slot", self.logs.iter().map(|l| l.slot).collect::<Vec<_>>())?;
        d.set_item("M", self.logs.iter().map(|l| l.order).collect::<Vec<_>>())?;
        let n = self.logs.first().map_or(0, |l| l.weights.len());
        for i in 0..n {
            d.set_item(format!("w_{}", i + 1), self.logs.iter().map(|l| l.weights[i]).collect::<Vec<_>>())?;
        }
        d.set_item("C_s_bits", col(|l| l.secrecy_capacity))?;
        d.set_item("ber_bob", col(|l| l.ber_bob))?;
        d.set_item("ber_eve", col(|l| l.ber_eve))?;
        d.set_item("utility", col(|l| l.utility))?;
        d.set_item("epsilon", col(|l| l.epsilon))?;
        d.set_item("greedy", self.logs.iter().map(|l| l.greedy).collect::<Vec<_>>())?;
        Ok(d)
    }

    /// Final-window means of the metrics plus the greedy fraction.
    #[pyo3(signature = (window=None))]
    fn summary<'py>(&self, py: Python<'py>, window: Option<usize>) -> PyResult<Bound<'py, PyDict>> {
        let s = experiment::summarize(&self.logs, window.unwrap_or(self.window)).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("window", s.window)?;
        d.set_item("secrecy_capacity", s.secrecy_capacity.mean)?;
        d.set_item("ber_bob", s.ber_bob.mean)?;
        d.set_item("ber_eve", s.ber_eve.mean)?;
        d.set_item("utility", s.utility.mean)?;
        d.set_item("greedy_fraction", s.greedy_fraction)?;
        d.set_item("modal_order", s.modal_action.order)?;
        d.set_item("modal_weights", s.modal_action.weights)?;
        Ok(d)
    }

    fn write_csv(&self, path: PathBuf) -> PyResult<()> {
        let n = self.logs.first().map_or(0, |l| l.weights.len());
        let file =
            std::fs::File::create(&path).map_err(|e| LumisecError::new_err(format!("{}: {e}", path.display())))?;
        lumisec::output::write_csv(&self.logs, n, std::io::BufWriter::new(file)).map_err(err)
    }
}

#[pymodule]
fn pylumisec(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("LumisecError", m.py().get_type::<LumisecError>())?;
    m.add_class::<ActionSpace>()?;
    m.add_class::<Scenario>()?;
    m.add_class::<Episode>()?;
    m.add_function(wrap_pyfunction!(lambertian_order, m)?)?;
    m.add_function(wrap_pyfunction!(los_gain, m)?)?;
    m.add_function(wrap_pyfunction!(constellation, m)?)?;
    m.add_function(wrap_pyfunction!(mixture_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(mutual_information, m)?)?;
    m.add_function(wrap_pyfunction!(secrecy_capacity, m)?)?;
    m.add_function(wrap_pyfunction!(pam_ber, m)?)?;
    m.add_function(wrap_pyfunction!(mc_ber, m)?)?;
    m.add_function(wrap_pyfunction!(mc_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(utility, m)?)?;
    Ok(())
}
