//! Python module `densegen`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use densegen::bttree::displacement_oracle;
use densegen::density::{certify_dense, verify_certificate, CertifyConfig, DensityCertificate};
use densegen::experiments::{
    density_experiment, normalize_experiment, normalize_tuple, treeaut_experiment, trial_rng, DensityFamily,
    ExperimentConfig, TupleFamily,
};
use densegen::localfield::{FieldSpec, LocalFieldElement};
use densegen::nielsen::{membership_o, reduce_to_elliptic, MarkedTuple, NielsenWord};
use densegen::prg::{check_census_budget, orbit_census, FiniteKind, FiniteMatrixGroup, DEFAULT_TUPLE_BUDGET};
use densegen::psl2::{IsometryClass, LengthLaw, ProjectiveMatrix};
use densegen::treeaut::{RegularTree, TreePortrait};

pyo3::create_exception!(
    densegen,
    RefusalError,
    PyRuntimeError,
    "A precision, depth or budget limit was reached."
);

fn err(e: densegen::Error) -> PyErr {
    if e.is_refusal() {
        RefusalError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn class_tuple(c: IsometryClass) -> (&'static str, u32) {
    match c {
        IsometryClass::Elliptic => ("elliptic", 0),
        IsometryClass::Hyperbolic(l) => ("hyperbolic", l),
    }
}

/// A local field `Q_p` or `F_p((t))` at fixed relative precision.
#[pyclass(name = "FieldSpec", frozen, eq, hash, skip_from_py_object)]
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
struct PyFieldSpec(FieldSpec);

#[pymethods]
impl PyFieldSpec {
    /// Parses `kind:p:N`, e.g. `padic:5:32`.
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        text.parse().map(PyFieldSpec).map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (p, precision = 32))]
    fn padic(p: u32, precision: u32) -> PyResult<Self> {
        FieldSpec::padic(p, precision).map(PyFieldSpec).map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (p, precision = 32))]
    fn laurent(p: u32, precision: u32) -> PyResult<Self> {
        FieldSpec::laurent(p, precision).map(PyFieldSpec).map_err(err)
    }

    #[getter]
    fn p(&self) -> u32 {
        self.0.p()
    }

    #[getter]
    fn precision(&self) -> u32 {
        self.0.precision()
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("FieldSpec('{}')", self.0)
    }
}

#[pyclass(name = "Element", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyElement(LocalFieldElement);

#[pymethods]
impl PyElement {
    #[staticmethod]
    fn decode(field: &PyFieldSpec, text: &str) -> PyResult<Self> {
        LocalFieldElement::decode(field.0, text).map(PyElement).map_err(err)
    }

    #[staticmethod]
    fn from_int(field: &PyFieldSpec, n: i64) -> Self {
        PyElement(LocalFieldElement::from_i64(field.0, n))
    }

    fn encode(&self) -> String {
        self.0.encode()
    }

    /// `None` for zero at the tracked precision.
    fn valuation(&self) -> Option<i64> {
        self.0.val()
    }

    fn known_precision(&self) -> i64 {
        self.0.known_prec()
    }

    fn inv(&self) -> PyResult<Self> {
        self.0.inv().map(PyElement).map_err(err)
    }

    fn eq_at_precision(&self, other: &PyElement) -> bool {
        self.0.eq_at_precision(&other.0)
    }

    fn __add__(&self, other: &PyElement) -> Self {
        PyElement(&self.0 + &other.0)
    }

    fn __sub__(&self, other: &PyElement) -> Self {
        PyElement(&self.0 - &other.0)
    }

    fn __mul__(&self, other: &PyElement) -> Self {
        PyElement(&self.0 * &other.0)
    }

    fn __neg__(&self) -> Self {
        PyElement(-&self.0)
    }

    fn __str__(&self) -> String {
        self.0.encode()
    }

    fn __repr__(&self) -> String {
        format!("Element('{}')", self.0.encode())
    }
}

/// An element of PSL2 over a local field.
#[pyclass(name = "Matrix", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyMatrix(ProjectiveMatrix);

#[pymethods]
impl PyMatrix {
    #[staticmethod]
    fn decode(field: &PyFieldSpec, text: &str) -> PyResult<Self> {
        ProjectiveMatrix::decode(field.0, text).map(PyMatrix).map_err(err)
    }

    #[staticmethod]
    fn identity(field: &PyFieldSpec) -> Self {
        PyMatrix(ProjectiveMatrix::identity(field.0))
    }

    /// `diag(π^m, π^-m)`.
    #[staticmethod]
    fn cartan(field: &PyFieldSpec, m: i64) -> Self {
        PyMatrix(ProjectiveMatrix::cartan(field.0, m))
    }

    /// Hyperbolic sample with translation length `2m`; `m` is drawn from a
    /// truncated geometric law when omitted.
    #[staticmethod]
    #[pyo3(signature = (field, seed, m = None))]
    fn sample_hyperbolic(field: &PyFieldSpec, seed: u64, m: Option<u32>) -> PyResult<Self> {
        let law = match m {
            Some(0) => return Err(PyValueError::new_err("m must be at least 1")),
            Some(m) => LengthLaw::Fixed(m),
            None => LengthLaw::default(),
        };
        Ok(PyMatrix(ProjectiveMatrix::sample_hyperbolic(
            field.0,
            &mut trial_rng(seed, 0),
            law,
        )))
    }

    #[staticmethod]
    fn sample_elliptic(field: &PyFieldSpec, seed: u64) -> Self {
        PyMatrix(ProjectiveMatrix::sample_elliptic(field.0, &mut trial_rng(seed, 0)))
    }

    #[staticmethod]
    fn sample_compact(field: &PyFieldSpec, seed: u64) -> Self {
        PyMatrix(ProjectiveMatrix::sample_compact(field.0, &mut trial_rng(seed, 0)))
    }

    #[getter]
    fn field(&self) -> PyFieldSpec {
        PyFieldSpec(self.0.spec())
    }

    fn encode(&self) -> String {
        self.0.encode()
    }

    /// `("elliptic", 0)` or `("hyperbolic", ℓ)` from the trace valuation.
    fn classify(&self) -> PyResult<(&'static str, u32)> {
        self.0.classify().map(class_tuple).map_err(err)
    }

    /// The same classification computed by walking the tree.
    fn classify_on_tree(&self) -> PyResult<(&'static str, u32)> {
        displacement_oracle(&self.0).map(class_tuple).map_err(err)
    }

    fn trace(&self) -> PyElement {
        PyElement(self.0.trace())
    }

    fn inverse(&self) -> Self {
        PyMatrix(self.0.invert())
    }

    fn pow(&self, n: i64) -> PyResult<Self> {
        self.0.pow(n).map(PyMatrix).map_err(err)
    }

    fn eq_at_precision(&self, other: &PyMatrix) -> bool {
        self.0.eq_at_precision(&other.0)
    }

    fn __matmul__(&self, other: &PyMatrix) -> PyResult<Self> {
        self.0.compose(&other.0).map(PyMatrix).map_err(err)
    }

    fn __str__(&self) -> String {
        self.0.encode()
    }
}

/// An automorphism of the (q+1)-regular tree known on a ball around the root.
#[pyclass(name = "Portrait", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyPortrait(TreePortrait);

#[pymethods]
impl PyPortrait {
    /// Translation by `2m` along the axis through the root.
    #[staticmethod]
    fn canonical_shift(q: u32, m: u32, depth: u32) -> PyResult<Self> {
        let tree = RegularTree::new(q).map_err(err)?;
        TreePortrait::canonical_shift(tree, m, depth)
            .map(PyPortrait)
            .map_err(err)
    }

    #[staticmethod]
    fn sample_stabilizer(q: u32, depth: u32, seed: u64) -> PyResult<Self> {
        let tree = RegularTree::new(q).map_err(err)?;
        TreePortrait::sample_stabilizer(tree, &mut trial_rng(seed, 0), depth)
            .map(PyPortrait)
            .map_err(err)
    }

    #[staticmethod]
    fn deserialize(text: &str) -> PyResult<Self> {
        TreePortrait::deserialize(text).map(PyPortrait).map_err(err)
    }

    fn serialize(&self) -> String {
        self.0.serialize()
    }

    #[getter]
    fn depth(&self) -> u32 {
        self.0.depth()
    }

    fn classify(&self) -> PyResult<(&'static str, u32)> {
        self.0.classify().map(class_tuple).map_err(err)
    }

    fn inverse(&self) -> PyResult<Self> {
        self.0.invert().map(PyPortrait).map_err(err)
    }

    fn __matmul__(&self, other: &PyPortrait) -> PyResult<Self> {
        self.0.compose(&other.0).map(PyPortrait).map_err(err)
    }
}

fn tuple_of(entries: &[PyRef<'_, PyMatrix>]) -> PyResult<MarkedTuple<ProjectiveMatrix>> {
    MarkedTuple::new(entries.iter().map(|m| m.0.clone()).collect()).map_err(err)
}

/// Nielsen word making the first entry elliptic.
#[pyfunction]
#[pyo3(signature = (entries, budget = 10_000))]
fn reduce(entries: Vec<PyRef<'_, PyMatrix>>, budget: usize) -> PyResult<String> {
    let t = tuple_of(&entries)?;
    reduce_to_elliptic(&t, budget).map(|w| w.to_string()).map_err(err)
}

/// Nielsen word after which the first two entries generate a non-compact group.
#[pyfunction]
#[pyo3(signature = (entries, budget = 10_000, radius = 6))]
fn normalize(entries: Vec<PyRef<'_, PyMatrix>>, budget: usize, radius: u32) -> PyResult<String> {
    let t = tuple_of(&entries)?;
    let (r, n, _) = normalize_tuple(&t, budget, radius).map_err(err)?;
    Ok(r.concat(&n).to_string())
}

/// Applies a Nielsen word and returns the encoded entries.
#[pyfunction]
fn apply_word(entries: Vec<PyRef<'_, PyMatrix>>, word: &str) -> PyResult<Vec<PyMatrix>> {
    let t = tuple_of(&entries)?;
    let w: NielsenWord = word.parse().map_err(err)?;
    Ok(t.apply_word(&w)
        .map_err(err)?
        .into_entries()
        .into_iter()
        .map(PyMatrix)
        .collect())
}

/// Whether entries `i` and `j` (1-based) generate a non-compact group.
#[pyfunction]
#[pyo3(signature = (entries, i = 1, j = 2))]
fn in_normal_form(entries: Vec<PyRef<'_, PyMatrix>>, i: usize, j: usize) -> PyResult<bool> {
    membership_o(&tuple_of(&entries)?, i, j).map_err(err)
}

/// Density certificate as text.
#[pyfunction]
#[pyo3(signature = (generators, word_length = 6, level = 1))]
fn certify(generators: Vec<PyRef<'_, PyMatrix>>, word_length: usize, level: u32) -> PyResult<String> {
    let gens: Vec<_> = generators.iter().map(|m| m.0.clone()).collect();
    certify_dense(&gens, CertifyConfig { word_length, level })
        .map(|c| c.to_string())
        .map_err(err)
}

/// Problems found when re-checking a certificate; empty means valid.
#[pyfunction]
fn verify(generators: Vec<PyRef<'_, PyMatrix>>, certificate: &str) -> PyResult<Vec<String>> {
    let gens: Vec<_> = generators.iter().map(|m| m.0.clone()).collect();
    let cert: DensityCertificate = certificate.parse().map_err(err)?;
    verify_certificate(&gens, &cert).map_err(err)
}

/// `(orbits on generating tuples, report text)` for SL2 or PSL2 over F_p.
#[pyfunction]
#[pyo3(signature = (group, p, k, limit = DEFAULT_TUPLE_BUDGET))]
fn prg_census(py: Python<'_>, group: &str, p: u32, k: usize, limit: u128) -> PyResult<(usize, String)> {
    let kind: FiniteKind = group.parse().map_err(err)?;
    check_census_budget(kind, p, k, limit).map_err(err)?;
    py.detach(|| {
        let g = FiniteMatrixGroup::new(kind, p)?;
        let r = orbit_census(&g, k, limit)?;
        Ok((r.generating_orbits, r.to_text()))
    })
    .map_err(err)
}

fn run_config(field: &str, trials: u64, seed: u64, threads: usize) -> PyResult<ExperimentConfig> {
    Ok(ExperimentConfig {
        field: field.parse().map_err(err)?,
        trials,
        seed,
        threads,
        ..Default::default()
    })
}

/// JSON lines of the density experiment; `family` is `generic` or `subfield`.
#[pyfunction]
#[pyo3(signature = (field = "padic:5:32", trials = 100, seed = 0, threads = 0, family = "generic", k = 2))]
fn experiment_density(
    py: Python<'_>,
    field: &str,
    trials: u64,
    seed: u64,
    threads: usize,
    family: &str,
    k: usize,
) -> PyResult<String> {
    let family = match family {
        "generic" => DensityFamily::Generic,
        "subfield" => DensityFamily::Subfield,
        _ => return Err(PyValueError::new_err(format!("unknown family `{family}`"))),
    };
    let cfg = ExperimentConfig {
        k,
        ..run_config(field, trials, seed, threads)?
    };
    py.detach(|| density_experiment(&cfg, family).map(|r| r.to_jsonl()))
        .map_err(err)
}

/// JSON lines of the normalization experiment.
#[pyfunction]
#[pyo3(signature = (field = "padic:5:32", trials = 100, seed = 0, threads = 0, k = 3))]
fn experiment_normalize(
    py: Python<'_>,
    field: &str,
    trials: u64,
    seed: u64,
    threads: usize,
    k: usize,
) -> PyResult<String> {
    let cfg = ExperimentConfig {
        k,
        ..run_config(field, trials, seed, threads)?
    };
    py.detach(|| normalize_experiment(&cfg, TupleFamily::Alternating).map(|r| r.to_jsonl()))
        .map_err(err)
}

/// JSON lines of the tree portrait experiment.
#[pyfunction]
#[pyo3(signature = (q = 2, depth = 12, trials = 100, seed = 0, threads = 0))]
fn experiment_treeaut(py: Python<'_>, q: u32, depth: u32, trials: u64, seed: u64, threads: usize) -> PyResult<String> {
    let cfg = ExperimentConfig {
        q,
        depth,
        ..run_config("padic:5:32", trials, seed, threads)?
    };
    py.detach(|| treeaut_experiment(&cfg).map(|r| r.to_jsonl()))
        .map_err(err)
}

#[pymodule]
#[pyo3(name = "densegen")]
fn densegen_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("RefusalError", m.py().get_type::<RefusalError>())?;
    m.add_class::<PyFieldSpec>()?;
    m.add_class::<PyElement>()?;
    m.add_class::<PyMatrix>()?;
    m.add_class::<PyPortrait>()?;
    m.add_function(wrap_pyfunction!(reduce, m)?)?;
    m.add_function(wrap_pyfunction!(normalize, m)?)?;
    m.add_function(wrap_pyfunction!(apply_word, m)?)?;
    m.add_function(wrap_pyfunction!(in_normal_form, m)?)?;
    m.add_function(wrap_pyfunction!(certify, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(prg_census, m)?)?;
    m.add_function(wrap_pyfunction!(experiment_density, m)?)?;
    m.add_function(wrap_pyfunction!(experiment_normalize, m)?)?;
    m.add_function(wrap_pyfunction!(experiment_treeaut, m)?)?;
    Ok(())
}
