//! Python module `flatkb_py`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use flatkb::assembly::{build_flat_klein, build_flat_torus, Assembly, KleinParams, TorusParams};
use flatkb::cw_complex::cofactors_3x4;
use flatkb::frames::{make_tube_frame, AxisLabel, FrameKind};
use flatkb::interval::Interval;
use flatkb::io::parse_angle;
use flatkb::tables::{compute_tables, VeeParams};
use flatkb::tube_joint::{generate_parameters, verify_flat, FlatVerdict};

fn runtime(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// Closed interval with outward-rounded arithmetic.
#[pyclass(name = "Interval", frozen, from_py_object)]
#[derive(Clone, Copy)]
pub struct PyInterval(pub Interval);

#[pymethods]
impl PyInterval {
    #[new]
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    fn new(lo: f64, hi: f64) -> PyResult<Self> {
        if !(lo <= hi) {
            return Err(PyValueError::new_err(format!("empty interval [{lo}, {hi}]")));
        }
        Ok(PyInterval(Interval::new(lo, hi)))
    }

    /// Enclosure of the real number nearest to `x`.
    #[staticmethod]
    fn input(x: f64) -> Self {
        PyInterval(Interval::input(x))
    }

    #[getter]
    fn lo(&self) -> f64 {
        self.0.lo()
    }

    #[getter]
    fn hi(&self) -> f64 {
        self.0.hi()
    }

    #[getter]
    fn mid(&self) -> f64 {
        self.0.mid()
    }

    #[getter]
    fn radius(&self) -> f64 {
        self.0.radius()
    }

    fn contains(&self, x: f64) -> bool {
        self.0.contains(x)
    }

    fn sign(&self) -> String {
        self.0.sign().to_string()
    }

    fn sqrt(&self) -> PyResult<Self> {
        self.0.sqrt().map(PyInterval).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn __add__(&self, o: &PyInterval) -> Self {
        PyInterval(self.0 + o.0)
    }

    fn __sub__(&self, o: &PyInterval) -> Self {
        PyInterval(self.0 - o.0)
    }

    fn __mul__(&self, o: &PyInterval) -> Self {
        PyInterval(self.0 * o.0)
    }

    fn __truediv__(&self, o: &PyInterval) -> PyResult<Self> {
        self.0.checked_div(o.0).map(PyInterval).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn __neg__(&self) -> Self {
        PyInterval(-self.0)
    }

    fn __repr__(&self) -> String {
        format!("Interval({:e}, {:e})", self.0.lo(), self.0.hi())
    }
}

/// Outcome of building a closed surface.
#[pyclass(frozen)]
pub struct Surface {
    #[pyo3(get)]
    verdict: String,
    #[pyo3(get)]
    topology: String,
    #[pyo3(get)]
    orientable: bool,
    #[pyo3(get)]
    reversing_seams: usize,
    #[pyo3(get)]
    glued: (usize, usize),
    #[pyo3(get)]
    merged: (usize, usize),
    #[pyo3(get)]
    intersection_segments: Option<usize>,
    #[pyo3(get)]
    embedded: Option<bool>,
    #[pyo3(get)]
    vertices: Vec<[f64; 3]>,
    #[pyo3(get)]
    faces: Vec<Vec<usize>>,
    report: String,
}

#[pymethods]
impl Surface {
    /// Full verification report as JSON text.
    fn report_json(&self) -> String {
        self.report.clone()
    }

    fn __repr__(&self) -> String {
        format!("Surface({}, {}, merged {}V/{}F)", self.topology, self.verdict, self.merged.0, self.merged.1)
    }
}

fn surface(a: Assembly) -> PyResult<Surface> {
    let r = &a.report;
    let name = |v: serde_json::Value| v.as_str().unwrap_or_default().to_string();
    let m = &a.merged;
    Ok(Surface {
        verdict: name(serde_json::to_value(r.verdict).map_err(runtime)?),
        topology: name(serde_json::to_value(r.topology.classification).map_err(runtime)?),
        orientable: r.topology.orientable,
        reversing_seams: r.reversing_seams,
        glued: (r.glued.vertices, r.glued.faces),
        merged: (r.merged.vertices, r.merged.faces),
        intersection_segments: r.intersections.as_ref().map(|i| i.segments),
        embedded: r.embedded,
        vertices: m.vertices().iter().map(|p| [p.x, p.y, p.z]).collect(),
        faces: m.faces().to_vec(),
        report: serde_json::to_string(r).map_err(runtime)?,
    })
}

#[pyfunction]
#[pyo3(signature = (n=8, l=1.0, phi=4.5, alpha=1.0, gamma=2.0, intersections=true))]
fn build_torus(n: usize, l: f64, phi: f64, alpha: f64, gamma: f64, intersections: bool) -> PyResult<Surface> {
    let p = TorusParams { n, l, phi, alpha, gamma };
    surface(build_flat_torus(&p, None, intersections).map_err(runtime)?)
}

#[pyfunction]
#[pyo3(signature = (alpha1=3.1, gamma1=2.5, alpha0=1.0, gamma0=1.0, intersections=true))]
fn build_klein(alpha1: f64, gamma1: f64, alpha0: f64, gamma0: f64, intersections: bool) -> PyResult<Surface> {
    let p = KleinParams { alpha1, gamma1, alpha0, gamma0, ..KleinParams::default() };
    surface(build_flat_klein(&p, None, intersections).map_err(runtime)?)
}

/// Parameter vectors `(alphas, gammas)` of a vee joint with inverted labelling, plus its flatness verdict.
#[pyfunction]
#[pyo3(signature = (n=6, l=4.0, theta="pi/3", phi="pi", psi="3pi/2", k=3, alpha=3.1, gamma=2.5))]
#[allow(clippy::too_many_arguments)]
fn generate_vee(
    n: usize,
    l: f64,
    theta: &str,
    phi: &str,
    psi: &str,
    k: usize,
    alpha: f64,
    gamma: f64,
) -> PyResult<(Vec<f64>, Vec<f64>, bool)> {
    let ang = |s: &str| parse_angle(s).map_err(|e| PyValueError::new_err(e.to_string()));
    let tf = make_tube_frame(FrameKind::Vee, n, l, ang(theta)?, ang(phi)?, ang(psi)?, AxisLabel::Inverted).map_err(runtime)?;
    let jp = generate_parameters(&tf, k, alpha, gamma).map_err(runtime)?;
    let tj = flatkb::tube_joint::build_tube_joint(&tf, &jp).map_err(runtime)?;
    let flat = verify_flat(&tj).verdict == FlatVerdict::Flat;
    Ok((jp.alphas, jp.gammas, flat))
}

/// The default vee-joint listings as JSON text.
#[pyfunction]
fn tables_json() -> PyResult<String> {
    serde_json::to_string(&compute_tables(&VeeParams::default()).map_err(runtime)?).map_err(runtime)
}

/// Signed 3x3 minors of the 3x4 matrix with the given columns; they annihilate the matrix.
#[pyfunction]
fn cofactors(columns: [[f64; 3]; 4]) -> [f64; 4] {
    cofactors_3x4(&columns)
}

#[pyfunction(name = "parse_angle")]
fn parse_angle_py(s: &str) -> PyResult<f64> {
    parse_angle(s).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
fn flatkb_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInterval>()?;
    m.add_class::<Surface>()?;
    m.add_function(wrap_pyfunction!(build_torus, m)?)?;
    m.add_function(wrap_pyfunction!(build_klein, m)?)?;
    m.add_function(wrap_pyfunction!(generate_vee, m)?)?;
    m.add_function(wrap_pyfunction!(tables_json, m)?)?;
    m.add_function(wrap_pyfunction!(cofactors, m)?)?;
    m.add_function(wrap_pyfunction!(parse_angle_py, m)?)?;
    Ok(())
}
