//! Python module `pointint`.

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use pointint_core::bogolyubov as bog;
use pointint_core::gaussian::{self, Field};
use pointint_core::greenfn::{self, PointInteractionConfig, Resolvent};
use pointint_core::oracle::transfer::TransferGreen;
use pointint_core::tau::{self as tau_mod, Localization};
use pointint_core::Error;

create_exception!(pointint, PointIntError, PyException);
create_exception!(pointint, ValidationError, PointIntError);
create_exception!(pointint, NumericalError, PointIntError);

fn to_py(e: Error) -> PyErr {
    let msg = format!("{}: {e}", e.kind());
    if e.is_validation() {
        ValidationError::new_err(msg)
    } else {
        NumericalError::new_err(msg)
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for Result<T, Error> {
    fn py(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

/// Spectral parameter `m` with `E = -m²`; requires `Re m > 0`.
#[pyclass(name = "SpectralParameter", frozen, from_py_object)]
#[derive(Clone)]
struct PySpectral(greenfn::SpectralParameter);

#[pymethods]
impl PySpectral {
    #[new]
    fn new(m: Complex64) -> PyResult<Self> {
        greenfn::SpectralParameter::new(m).py().map(PySpectral)
    }

    #[getter]
    fn m(&self) -> Complex64 {
        self.0.m()
    }

    #[getter]
    fn energy(&self) -> Complex64 {
        self.0.energy()
    }

    fn __repr__(&self) -> String {
        format!("SpectralParameter({})", self.0.m())
    }
}

/// Sorted points `a_j` with strengths `V_j`.
#[pyclass(name = "PointConfig", frozen, from_py_object)]
#[derive(Clone)]
struct PyConfig(PointInteractionConfig);

#[pymethods]
impl PyConfig {
    #[new]
    fn new(points: Vec<(f64, f64)>) -> PyResult<Self> {
        PointInteractionConfig::from_pairs(&points).py().map(PyConfig)
    }

    #[getter]
    fn positions(&self) -> Vec<f64> {
        self.0.positions().to_vec()
    }

    #[getter]
    fn strengths(&self) -> Vec<f64> {
        self.0.strengths().to_vec()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("PointConfig({:?})", self.0.pairs().collect::<Vec<_>>())
    }
}

/// Parameters `(λ, μ, ν)` of the normal-ordered operator family.
#[pyclass(name = "BogolyubovParams", frozen, from_py_object)]
#[derive(Clone)]
struct PyParams(bog::BogolyubovParams);

#[pymethods]
impl PyParams {
    #[new]
    #[pyo3(signature = (lam, mu, nu))]
    fn new(lam: Complex64, mu: Complex64, nu: Complex64) -> PyResult<Self> {
        bog::BogolyubovParams::new(lam, mu, nu).py().map(PyParams)
    }

    #[staticmethod]
    fn delta(strength: f64, sp: &PySpectral) -> PyResult<Self> {
        bog::delta_params(strength, &sp.0).py().map(PyParams)
    }

    #[staticmethod]
    fn from_sl2(alpha: Complex64, beta: Complex64, gamma: Complex64, delta: Complex64) -> PyResult<Self> {
        let s = bog::Sl2Element::new(alpha, beta, gamma, delta).py()?;
        bog::params_from_sl2(&s).py().map(PyParams)
    }

    #[getter]
    fn lam(&self) -> Complex64 {
        self.0.lambda
    }

    #[getter]
    fn mu(&self) -> Complex64 {
        self.0.mu
    }

    #[getter]
    fn nu(&self) -> Complex64 {
        self.0.nu
    }

    /// `(α, β, γ, δ)` of the induced map on `(a, a†)`.
    fn sl2(&self) -> PyResult<(Complex64, Complex64, Complex64, Complex64)> {
        let s = bog::sl2_from_params(&self.0).py()?;
        Ok((s.alpha, s.beta, s.gamma, s.delta))
    }

    fn evolve(&self, x: f64, sp: &PySpectral) -> Self {
        PyParams(bog::evolve(&self.0, x, &sp.0))
    }

    fn __repr__(&self) -> String {
        format!("BogolyubovParams(lam={}, mu={}, nu={})", self.0.lambda, self.0.mu, self.0.nu)
    }
}

#[pyfunction]
fn free_green(sp: &PySpectral, x: f64, y: f64) -> Complex64 {
    greenfn::free_green(&sp.0, x, y)
}

#[pyfunction]
fn resolvent_kernel(sp: &PySpectral, cfg: &PyConfig, x: f64, y: f64) -> PyResult<Complex64> {
    greenfn::resolvent_kernel(&sp.0, &cfg.0, x, y).py()
}

/// Kernel on the product grid `xs × ys`, row-major in `x`.
#[pyfunction]
fn resolvent_grid(sp: &PySpectral, cfg: &PyConfig, xs: Vec<f64>, ys: Vec<f64>) -> PyResult<Vec<Vec<Complex64>>> {
    let r = Resolvent::new(&sp.0, &cfg.0).py()?;
    Ok(xs.iter().map(|&x| ys.iter().map(|&y| r.kernel(x, y)).collect()).collect())
}

#[pyfunction]
fn transfer_green(sp: &PySpectral, cfg: &PyConfig, x: f64, y: f64) -> PyResult<Complex64> {
    TransferGreen::new(&sp.0, &cfg.0).py()?.kernel(x, y).py()
}

#[pyfunction]
#[pyo3(signature = (sp, cfg, x, y, dim = bog::DEFAULT_FOCK_DIM))]
fn resolvent_via_fields(sp: &PySpectral, cfg: &PyConfig, x: f64, y: f64, dim: usize) -> PyResult<Complex64> {
    Ok(bog::FieldResolvent::new(&sp.0, &cfg.0, dim).py()?.kernel(x, y))
}

#[pyfunction]
fn one_point(sp: &PySpectral, strength: f64) -> PyResult<Complex64> {
    greenfn::one_point(&sp.0, strength).py()
}

#[pyfunction]
#[pyo3(signature = (sp, cfg, route = "det"))]
fn correlator(sp: &PySpectral, cfg: &PyConfig, route: &str) -> PyResult<Complex64> {
    match route {
        "det" => greenfn::correlator_det(&sp.0, &cfg.0).py(),
        "fusion" => bog::delta_correlator_fused(&sp.0, &cfg.0).py(),
        other => Err(ValidationError::new_err(format!("unknown correlator route '{other}'"))),
    }
}

#[pyfunction]
#[pyo3(signature = (k, l, p, route = "closed"))]
fn form_factor(k: usize, l: usize, p: &PyParams, route: &str) -> PyResult<Complex64> {
    match route {
        "closed" => bog::form_factor(k, l, &p.0).py(),
        "recursive" => bog::form_factor_recursive(k, l, &p.0).py(),
        other => Err(ValidationError::new_err(format!("unknown form factor route '{other}'"))),
    }
}

#[pyfunction]
fn matrix_element(k: usize, l: usize, p: &PyParams) -> PyResult<Complex64> {
    bog::matrix_element(k, l, &p.0).py()
}

/// `O₁O₂ = c₁₂ O₃`; returns `(params₃, c₁₂)`.
#[pyfunction]
fn fuse(p1: &PyParams, p2: &PyParams) -> PyResult<(PyParams, Complex64)> {
    let f = bog::fuse(&p1.0, &p2.0).py()?;
    Ok((PyParams(f.params), f.c12))
}

#[pyfunction]
fn two_point(p1: &PyParams, p2: &PyParams, a1: f64, a2: f64, sp: &PySpectral) -> PyResult<Complex64> {
    bog::two_point(&p1.0, &p2.0, a1, a2, &sp.0).py()
}

/// Vacuum expectation of the ordered product of `(params, position)` insertions.
#[pyfunction]
fn n_point(insertions: Vec<(PyParams, f64)>, sp: &PySpectral) -> PyResult<Complex64> {
    let ins: Vec<bog::FieldInsertion> = insertions.into_iter().map(|(p, x)| bog::FieldInsertion::new(p.0, x)).collect();
    bog::n_point_correlator(&ins, &sp.0).py()
}

#[pyfunction]
#[pyo3(signature = (sp, cfg, route = "collapsed"))]
fn tau(sp: &PySpectral, cfg: &PyConfig, route: &str) -> PyResult<Complex64> {
    match route {
        "collapsed" => tau_mod::tau_collapsed(&sp.0, &cfg.0).py(),
        "m" => tau_mod::tau_via_m(&sp.0, &Localization::default_for(&cfg.0), &cfg.0).py(),
        "cross-ratio" => tau_mod::tau_via_cross_ratio(&sp.0, &Localization::default_for(&cfg.0), &cfg.0).py(),
        other => Err(ValidationError::new_err(format!("unknown tau route '{other}'"))),
    }
}

/// `(tau, (correlator / ∏ one-point)^-2)`.
#[pyfunction]
fn fin_check(sp: &PySpectral, cfg: &PyConfig) -> PyResult<(Complex64, Complex64)> {
    tau_mod::fin_check(&sp.0, &cfg.0).py()
}

/// Determinant identities and Monte Carlo moments for a random positive form.
#[pyfunction]
#[pyo3(signature = (field = "real", dim_a = 2, dim_b = 1, samples = 200_000, seed = gaussian::DEFAULT_MC_SEED))]
fn gaussian_check<'py>(
    py: Python<'py>,
    field: &str,
    dim_a: usize,
    dim_b: usize,
    samples: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    use rand::SeedableRng;
    let field = match field {
        "real" => Field::Real,
        "complex" => Field::Complex,
        other => return Err(ValidationError::new_err(format!("unknown field '{other}'"))),
    };
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let q = gaussian::random_form(&mut rng, field, dim_a, dim_b, true);
    let d = gaussian::schur_determinants(&q).py()?;
    let report = py.detach(|| gaussian::moment_check_mc(&q, samples, seed)).py()?;
    let out = PyDict::new(py);
    out.set_item("schur_rel_residual", d.residual() / d.joint.norm())?;
    out.set_item("max_z", report.max_z_score())?;
    out.set_item("passed", report.passed())?;
    let checks: Vec<(String, f64, f64, f64)> =
        report.checks.iter().map(|c| (c.name.clone(), c.estimate, c.expected, c.std_error)).collect();
    out.set_item("checks", checks)?;
    Ok(out)
}

#[pymodule]
fn pointint(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("PointIntError", py.get_type::<PointIntError>())?;
    m.add("ValidationError", py.get_type::<ValidationError>())?;
    m.add("NumericalError", py.get_type::<NumericalError>())?;
    m.add_class::<PySpectral>()?;
    m.add_class::<PyConfig>()?;
    m.add_class::<PyParams>()?;
    m.add_function(wrap_pyfunction!(free_green, m)?)?;
    m.add_function(wrap_pyfunction!(resolvent_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(resolvent_grid, m)?)?;
    m.add_function(wrap_pyfunction!(transfer_green, m)?)?;
    m.add_function(wrap_pyfunction!(resolvent_via_fields, m)?)?;
    m.add_function(wrap_pyfunction!(one_point, m)?)?;
    m.add_function(wrap_pyfunction!(correlator, m)?)?;
    m.add_function(wrap_pyfunction!(form_factor, m)?)?;
    m.add_function(wrap_pyfunction!(matrix_element, m)?)?;
    m.add_function(wrap_pyfunction!(fuse, m)?)?;
    m.add_function(wrap_pyfunction!(two_point, m)?)?;
    m.add_function(wrap_pyfunction!(n_point, m)?)?;
    m.add_function(wrap_pyfunction!(tau, m)?)?;
    m.add_function(wrap_pyfunction!(fin_check, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_check, m)?)?;
    Ok(())
}
