//! Python bindings: adelic toric bundles, their invariants and the check runner.

use std::path::PathBuf;

use okounkov_cli::{Overrides, RunError};
use okounkov_core::convex_geom;
use okounkov_core::invariants::{AdelicBundle, ChebyshevTable, Evaluator};
use okounkov_core::linear_series::{Exponent, ToricSeries};
use okounkov_core::metrics_arch::ArchMetric;
use okounkov_core::metrics_nonarch::NonArchWeight;
use okounkov_core::rational;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn core_err(e: okounkov_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// `(prime, [(slope, offset), ...])`.
type WeightArg = (u64, Vec<(Vec<i64>, i64)>);

#[pyclass(name = "Bundle", module = "okounkov")]
struct PyBundle {
    eval: Evaluator,
}

impl PyBundle {
    fn wrap(bundle: AdelicBundle) -> Self {
        Self {
            eval: Evaluator::new(bundle),
        }
    }

    fn bundle(&self) -> &AdelicBundle {
        self.eval.bundle()
    }
}

#[pymethods]
impl PyBundle {
    /// Fubini–Study bundle on the toric variety of `projective=d` or of the
    /// lattice polytope with `vertices` (origin among them). `weights` is a
    /// list of `(prime, [(slope, offset), ...])`, each weight the minimum of
    /// its affine pieces.
    #[new]
    #[pyo3(signature = (projective=None, vertices=None, weights=Vec::new(), shift=0.0, max_level=None))]
    fn new(
        projective: Option<usize>,
        vertices: Option<Vec<Vec<i64>>>,
        weights: Vec<WeightArg>,
        shift: f64,
        max_level: Option<u32>,
    ) -> PyResult<Self> {
        let series = match (projective, vertices) {
            (Some(d), None) => ToricSeries::projective(d),
            (None, Some(v)) => ToricSeries::from_vertices(v),
            _ => {
                return Err(PyValueError::new_err(
                    "give exactly one of projective= or vertices=",
                ))
            }
        }
        .map_err(core_err)?;
        let series = match max_level {
            Some(m) => series.with_max_level(m),
            None => series,
        };
        let arch = ArchMetric::fubini_study(&series).with_shift(shift);
        let weights = weights
            .into_iter()
            .map(|(p, pieces)| NonArchWeight::new(p, pieces))
            .collect::<okounkov_core::Result<_>>()
            .map_err(core_err)?;
        Ok(Self::wrap(
            AdelicBundle::new(series, arch, weights).map_err(core_err)?,
        ))
    }

    #[getter]
    fn dim(&self) -> usize {
        self.bundle().dim()
    }

    #[getter]
    fn max_level(&self) -> u32 {
        self.bundle().series().max_level()
    }

    fn basis_size(&self, m: u32) -> usize {
        self.bundle().series().basis_size(m)
    }

    /// Lex-ordered exponents of the level-`m` basis.
    fn level_basis(&self, m: u32) -> PyResult<Vec<Vec<u32>>> {
        let basis = self.eval.level_basis(m).map_err(core_err)?;
        Ok(basis.iter().map(|e| e.entries().to_vec()).collect())
    }

    /// Vertices of the Okounkov body as exact fraction strings.
    #[pyo3(signature = (m_max=4))]
    fn okounkov_body(&self, m_max: u32) -> PyResult<Vec<Vec<String>>> {
        let body = convex_geom::okounkov_body(self.bundle().series(), m_max).map_err(core_err)?;
        Ok(body
            .vertices()
            .iter()
            .map(|v| v.iter().map(|x| x.to_string()).collect())
            .collect())
    }

    /// Exact Euclidean volume of the Okounkov body, as a fraction string.
    fn body_volume(&self) -> String {
        self.bundle().series().polytope().volume().value.to_string()
    }

    fn body_volume_f64(&self) -> f64 {
        rational::to_f64(&self.bundle().series().polytope().volume().value)
    }

    /// `F(m, β)` summed over all places.
    fn f_total(&self, m: u32, exponent: Vec<u32>) -> PyResult<f64> {
        Ok(self
            .eval
            .f_total(m, &Exponent::new(exponent))
            .map_err(core_err)?
            .total)
    }

    /// Arithmetic degree of `H⁰(mL)` with the `L²` metric.
    fn deg_h0(&self, m: u32) -> PyResult<f64> {
        Ok(self.eval.deg_h0(m).map_err(core_err)?.total)
    }

    fn chi_l2(&self, m: u32) -> PyResult<f64> {
        self.eval.chi_l2(m).map_err(core_err)
    }

    /// One dict per level with keys `m, n_m, deg, chi_l2, minus_sum_f`.
    fn chi_series<'py>(
        &self,
        py: Python<'py>,
        levels: Vec<u32>,
    ) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let rows = py
            .detach(|| self.eval.chi_series(&levels))
            .map_err(core_err)?;
        rows.iter()
            .map(|r| {
                let d = PyDict::new(py);
                d.set_item("m", r.m)?;
                d.set_item("n_m", r.n_m)?;
                d.set_item("deg", r.deg)?;
                d.set_item("chi_l2", r.chi_l2)?;
                d.set_item("minus_sum_f", r.minus_sum_f)?;
                Ok(d)
            })
            .collect()
    }

    /// Fitted Chebyshev limits `c(α)` on the grid of the given level, keyed
    /// by `α` coordinates.
    fn chebyshev<'py>(
        &self,
        py: Python<'py>,
        grid_level: u32,
        schedule: Vec<u32>,
    ) -> PyResult<Vec<(Vec<f64>, f64)>> {
        let table = py
            .detach(|| ChebyshevTable::build(&self.eval, grid_level, &schedule))
            .map_err(core_err)?;
        Ok(table
            .entries
            .values()
            .map(|e| (e.alpha.clone(), e.c_value))
            .collect())
    }

    fn multiple(&self, k: u32) -> PyResult<Self> {
        Ok(Self::wrap(self.bundle().multiple(k).map_err(core_err)?))
    }

    fn tensor(&self, other: &PyBundle) -> PyResult<Self> {
        Ok(Self::wrap(
            self.bundle().tensor(other.bundle()).map_err(core_err)?,
        ))
    }

    fn __repr__(&self) -> String {
        let b = self.bundle();
        let primes: Vec<String> = b.finite().iter().map(|w| w.prime().to_string()).collect();
        format!(
            "Bundle(dim={}, max_level={}, primes=[{}])",
            b.dim(),
            b.series().max_level(),
            primes.join(", ")
        )
    }
}

/// Validates a JSON configuration; returns the list of problems (empty when
/// valid).
#[pyfunction]
fn validate(config: &str) -> Vec<String> {
    match okounkov_cli::parse_config(config) {
        Ok(_) => Vec::new(),
        Err(errs) => errs.iter().map(|e| e.to_string()).collect(),
    }
}

/// Runs the configured checks, writing reports under `out`; returns
/// `{check: verdict}`.
#[pyfunction]
#[pyo3(signature = (config, out, checks=None, max_level=None))]
fn run(
    py: Python<'_>,
    config: &str,
    out: PathBuf,
    checks: Option<Vec<String>>,
    max_level: Option<u32>,
) -> PyResult<Vec<(String, String)>> {
    let overrides = Overrides {
        max_level,
        out: Some(out),
        checks,
    };
    let cfg = okounkov_cli::parse_config_with(config, &overrides).map_err(|errs| {
        PyValueError::new_err(
            errs.iter()
                .map(|e| e.to_string())
                .collect::<Vec<_>>()
                .join("\n"),
        )
    })?;
    let outcome = py
        .detach(|| okounkov_cli::run(&cfg))
        .map_err(|e: RunError| PyRuntimeError::new_err(e.to_string()))?;
    Ok(outcome
        .results
        .iter()
        .map(|(c, v)| (c.clone(), v.as_str().to_string()))
        .collect())
}

#[pymodule]
fn okounkov(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBundle>()?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
