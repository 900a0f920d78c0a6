//! Python bindings. Vertices cross the boundary as `(x, y)` tuples of ints.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use trapwalk::experiments::{census_horizontal, census_vertical, DEFAULT_MAX_CENSUS_ORDER};
use trapwalk::geometry::{Configuration, FractalConfig, Location, Vertex, WarmupConfig};
use trapwalk::network::{self, Bias};
use trapwalk::walker::{self, StopRule, WalkOptions};

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn bias(beta: f64) -> PyResult<Bias> {
    Bias::new(beta).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn vx(v: (i128, i128)) -> Vertex {
    Vertex::new(v.0, v.1)
}

fn tuple(v: Vertex) -> (i128, i128) {
    (v.x, v.y)
}

#[pyclass(name = "Walk", get_all, frozen)]
struct PyWalk {
    position: (i128, i128),
    time: u64,
    speed: f64,
    first_passage: Vec<u64>,
    trap_visits: usize,
    time_on_path: u64,
    time_off_path: u64,
    checkpoints: Vec<(u64, (i128, i128))>,
}

impl PyWalk {
    fn from_record(r: walker::WalkRecord) -> Self {
        PyWalk {
            position: tuple(r.final_state.position),
            time: r.elapsed(),
            speed: r.speed(),
            trap_visits: r.trap_visits.len(),
            time_on_path: r.time_on_path,
            time_off_path: r.time_off_path,
            checkpoints: r.checkpoints.iter().map(|&(t, v)| (t, tuple(v))).collect(),
            first_passage: r.first_passage,
        }
    }
}

fn walk_on<C: Configuration>(
    cfg: &C,
    start: (i128, i128),
    beta: f64,
    t_max: u64,
    seed: u64,
    stream: u64,
    checkpoints: Vec<u64>,
) -> PyResult<PyWalk> {
    let b = bias(beta)?;
    let mut rng = walker::replicate_rng(seed, stream);
    let options = WalkOptions { time_checkpoints: checkpoints, ..WalkOptions::standard() };
    walker::run(vx(start), cfg, &b, t_max, StopRule::Horizon, &options, &mut rng)
        .map(PyWalk::from_record)
        .map_err(err)
}

#[pyclass(name = "WarmupConfig", frozen)]
struct PyWarmup(WarmupConfig);

#[pymethods]
impl PyWarmup {
    #[new]
    #[pyo3(signature = (alpha=1.0))]
    fn new(alpha: f64) -> PyResult<Self> {
        WarmupConfig::new(alpha).map(PyWarmup).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[staticmethod]
    fn naked() -> Self {
        PyWarmup(WarmupConfig::naked())
    }

    fn neighbors(&self, v: (i128, i128)) -> PyResult<Vec<(i128, i128)>> {
        Ok(self.0.neighbors(vx(v)).map_err(err)?.iter().map(|u| tuple(*u)).collect())
    }

    fn anchor_x(&self, n: u64) -> Option<i128> {
        self.0.anchor_x(n)
    }

    #[pyo3(signature = (v, beta, horizon=200))]
    fn escape_probability(&self, v: (i128, i128), beta: f64, horizon: i128) -> PyResult<(f64, f64)> {
        let p = network::escape_probability(vx(v), &self.0, &bias(beta)?, horizon).map_err(err)?;
        Ok((p.lo, p.hi))
    }

    #[pyo3(signature = (beta, t_max, seed, stream=0, start=(0, 0), checkpoints=vec![]))]
    fn walk(
        &self,
        beta: f64,
        t_max: u64,
        seed: u64,
        stream: u64,
        start: (i128, i128),
        checkpoints: Vec<u64>,
    ) -> PyResult<PyWalk> {
        walk_on(&self.0, start, beta, t_max, seed, stream, checkpoints)
    }
}

#[pyclass(name = "FractalConfig", frozen)]
struct PyFractal(FractalConfig);

#[pymethods]
impl PyFractal {
    #[new]
    #[pyo3(signature = (gamma, max_order=8))]
    fn new(gamma: f64, max_order: u32) -> PyResult<Self> {
        FractalConfig::new(gamma, max_order).map(PyFractal).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn b(&self, k: u32) -> PyResult<i128> {
        self.check(k)?;
        Ok(self.0.b(k))
    }

    fn entrance_len(&self, k: u32) -> PyResult<i128> {
        self.check(k)?;
        Ok(self.0.entrance_len(k))
    }

    fn core_len(&self, k: u32) -> PyResult<i128> {
        self.check(k)?;
        Ok(self.0.core_len(k))
    }

    fn neighbors(&self, v: (i128, i128)) -> PyResult<Vec<(i128, i128)>> {
        Ok(self.0.neighbors(vx(v)).map_err(err)?.iter().map(|u| tuple(*u)).collect())
    }

    /// `(kind, order)` with kind one of "main", "abutment", "trap", "absent".
    fn locate(&self, v: (i128, i128)) -> PyResult<(&'static str, Option<u32>)> {
        Ok(match self.0.locate(vx(v)).map_err(err)? {
            Location::MainPart(b) => ("main", Some(b.order)),
            Location::Abutment(b) => ("abutment", Some(b.order)),
            Location::Trap { branch, .. } => ("trap", Some(branch.order)),
            Location::Absent => ("absent", None),
        })
    }

    #[pyo3(signature = (start=(0, 3), up_to_order=5))]
    fn path_to_infinity(&self, start: (i128, i128), up_to_order: u32) -> PyResult<Vec<(u32, i128)>> {
        self.0.path_to_infinity(vx(start), up_to_order).map_err(err)
    }

    #[pyo3(signature = (v, beta, horizon=200))]
    fn escape_probability(&self, v: (i128, i128), beta: f64, horizon: i128) -> PyResult<(f64, f64)> {
        let p = network::escape_probability(vx(v), &self.0, &bias(beta)?, horizon).map_err(err)?;
        Ok((p.lo, p.hi))
    }

    /// Exact census probability as `(numerator, denominator)`.
    #[pyo3(signature = (k, n=None))]
    fn census(&self, k: u32, n: Option<u32>) -> PyResult<(i128, i128)> {
        let r = match n {
            None => census_vertical(&self.0, k).map_err(err)?,
            Some(n) => census_horizontal(&self.0, k, n, DEFAULT_MAX_CENSUS_ORDER).map_err(err)?,
        };
        Ok((*r.probability.numer(), *r.probability.denom()))
    }

    #[pyo3(signature = (beta, t_max, seed, stream=0, start=(0, 3), checkpoints=vec![]))]
    fn walk(
        &self,
        beta: f64,
        t_max: u64,
        seed: u64,
        stream: u64,
        start: (i128, i128),
        checkpoints: Vec<u64>,
    ) -> PyResult<PyWalk> {
        walk_on(&self.0, start, beta, t_max, seed, stream, checkpoints)
    }
}

impl PyFractal {
    fn check(&self, k: u32) -> PyResult<()> {
        if k == 0 || k > self.0.max_order() {
            return Err(PyValueError::new_err(format!("order {k} outside 1..={}", self.0.max_order())));
        }
        Ok(())
    }
}

#[pyfunction]
fn hit_core_probability(entrance_len: u64, beta: f64) -> PyResult<f64> {
    Ok(network::hit_core_probability(entrance_len, &bias(beta)?))
}

#[pyfunction]
fn cone_return_time_bound(beta: f64) -> PyResult<f64> {
    Ok(network::cone_return_time_bound(&bias(beta)?))
}

#[pymodule]
fn trapwalk_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyWarmup>()?;
    m.add_class::<PyFractal>()?;
    m.add_class::<PyWalk>()?;
    m.add_function(wrap_pyfunction!(hit_core_probability, m)?)?;
    m.add_function(wrap_pyfunction!(cone_return_time_bound, m)?)?;
    Ok(())
}
