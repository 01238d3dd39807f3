//! Python bindings over the matching engine.  Small objects cross the
//! boundary as JSON strings in the same formats the CLI reads and writes;
//! the heavyweight ones (network, hypergraph, solution) are wrapped.

use pyo3::exceptions::PyRuntimeError;
use pyo3::prelude::*;

use mtr_core::feasibility::{
    phase_one, phase_two, reduce_base_matches, Hypergraph as CoreHypergraph, ReductionConfig,
};
use mtr_core::network::{build_network as net_build, NetworkSpec, RoadTransitNetwork};
use mtr_core::oracle::{self, ThreeDMInstance};
use mtr_core::sim::{self, run_solver, Algo, Scenario, SolverOpts};
use mtr_core::solvers::Solution as CoreSolution;
use mtr_core::trips::{generate_interval as trips_generate, GenerationProfile, TripFile};

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// Road grid with the rail/bus overlay.
#[pyclass(frozen)]
struct Network {
    inner: RoadTransitNetwork,
}

#[pymethods]
impl Network {
    #[getter]
    fn n_nodes(&self) -> usize {
        self.inner.nodes.len()
    }

    #[getter]
    fn n_stations(&self) -> usize {
        self.inner.stations.len()
    }

    /// Car travel time in seconds between two nodes.
    fn travel_time(&self, from: usize, to: usize) -> PyResult<u32> {
        self.inner.travel_time(from, to).map_err(err)
    }

    /// Transit-only benchmark duration in seconds.
    fn transit_duration(&self, from: usize, to: usize) -> PyResult<u32> {
        Ok(self
            .inner
            .fastest_transit_route(from, to, 0)
            .map_err(err)?
            .duration)
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Network {
            inner: RoadTransitNetwork::from_json(text).map_err(err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Network({} nodes, {} stations, {} areas)",
            self.inner.nodes.len(),
            self.inner.stations.len(),
            self.inner.areas.len()
        )
    }
}

/// Feasible-match hypergraph: one edge per (driver, rider set, type).
#[pyclass(frozen)]
struct Hypergraph {
    inner: CoreHypergraph,
}

#[pymethods]
impl Hypergraph {
    #[getter]
    fn n_edges(&self) -> usize {
        self.inner.n_edges()
    }

    #[getter]
    fn n_drivers(&self) -> usize {
        self.inner.driver_ids().len()
    }

    #[getter]
    fn n_riders(&self) -> usize {
        self.inner.rider_ids().len()
    }

    /// One edge as a JSON object.
    fn edge(&self, id: usize) -> PyResult<String> {
        let e = self.inner.edge(id).map_err(err)?;
        serde_json::to_string(e).map_err(err)
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Hypergraph {
            inner: CoreHypergraph::from_json(text).map_err(err)?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.n_edges()
    }

    fn __repr__(&self) -> String {
        format!(
            "Hypergraph({} edges, {} drivers, {} riders)",
            self.inner.n_edges(),
            self.inner.driver_ids().len(),
            self.inner.rider_ids().len()
        )
    }
}

/// Disjoint set of chosen matches.
#[pyclass(frozen)]
struct Solution {
    inner: CoreSolution,
}

#[pymethods]
impl Solution {
    /// Served rider count (the objective).
    #[getter]
    fn value(&self) -> u32 {
        self.inner.value
    }

    #[getter]
    fn matches(&self) -> Vec<usize> {
        self.inner.matches.clone()
    }

    #[getter]
    fn served(&self) -> Vec<usize> {
        self.inner.served.clone()
    }

    #[getter]
    fn solver(&self) -> String {
        self.inner.solver.clone()
    }

    #[getter]
    fn optimal(&self) -> bool {
        self.inner.optimal
    }

    #[getter]
    fn elapsed(&self) -> f64 {
        self.inner.elapsed
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&self.inner).map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Solution {
            inner: serde_json::from_str(text).map_err(err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Solution({} riders via {} matches, solver {:?}, optimal={})",
            self.inner.value,
            self.inner.matches.len(),
            self.inner.solver,
            self.inner.optimal
        )
    }
}

/// Builds the synthetic network; `spec_json` overrides the built-in layout.
#[pyfunction]
#[pyo3(signature = (seed, spec_json=None))]
fn build_network(seed: u64, spec_json: Option<&str>) -> PyResult<Network> {
    let spec = match spec_json {
        Some(text) => serde_json::from_str::<NetworkSpec>(text).map_err(err)?,
        None => NetworkSpec::default_spec(),
    };
    Ok(Network {
        inner: net_build(seed, &spec).map_err(err)?,
    })
}

/// One interval of trips as a trip-file JSON string.  The default profile
/// matches the CLI: twelve 15-minute intervals of one hundred trips.
#[pyfunction]
#[pyo3(signature = (network, t, seed, profile_json=None))]
fn generate_interval(
    network: &Network,
    t: u32,
    seed: u64,
    profile_json: Option<&str>,
) -> PyResult<String> {
    let profile = match profile_json {
        Some(text) => serde_json::from_str::<GenerationProfile>(text).map_err(err)?,
        None => GenerationProfile::standard(12, vec![100; 12]),
    };
    let (drivers, riders) = trips_generate(&profile, &network.inner, t, seed).map_err(err)?;
    TripFile {
        interval: t,
        drivers,
        riders,
    }
    .to_json()
    .map_err(err)
}

/// Enumerates feasible matches for a trip file, optionally applying a named
/// reduction preset (small1..huge3) between the two phases.
#[pyfunction]
#[pyo3(signature = (network, trips_json, reduction=None))]
fn compute_matches(
    network: &Network,
    trips_json: &str,
    reduction: Option<&str>,
) -> PyResult<Hypergraph> {
    let file = TripFile::from_json(trips_json).map_err(err)?;
    let net = &network.inner;
    let base = phase_one(&file.drivers, &file.riders, net).map_err(err)?;
    let (reduced, y_cap) = match reduction {
        Some(name) => {
            let cfg = ReductionConfig::preset(name)
                .ok_or_else(|| err(format!("unknown reduction preset {name:?}")))?;
            let r = reduce_base_matches(&base, &cfg, &file.drivers, &file.riders, net)
                .map_err(err)?;
            (r, cfg.y)
        }
        None => (base, None),
    };
    Ok(Hypergraph {
        inner: phase_two(&reduced, &file.drivers, &file.riders, net, y_cap).map_err(err)?,
    })
}

/// Runs one solver: exact, impgreedy, lpr, greedy, anyimp, bestimp or
/// squareimp.
#[pyfunction]
#[pyo3(signature = (h, algo="impgreedy", seed=0, time_limit=None, improve_limit=None, alpha_factor=None, conflict_budget=None))]
fn solve(
    h: &Hypergraph,
    algo: &str,
    seed: u64,
    time_limit: Option<f64>,
    improve_limit: Option<f64>,
    alpha_factor: Option<f64>,
    conflict_budget: Option<usize>,
) -> PyResult<Solution> {
    let algo = Algo::parse(algo).map_err(err)?;
    let mut opts = SolverOpts {
        seed,
        time_limit,
        ..SolverOpts::default()
    };
    if let Some(v) = improve_limit {
        opts.improve_limit = v;
    }
    if let Some(v) = alpha_factor {
        opts.alpha_factor = v;
    }
    if let Some(v) = conflict_budget {
        opts.pair_budget = v;
    }
    Ok(Solution {
        inner: run_solver(&h.inner, algo, &opts).map_err(err)?,
    })
}

/// Structural checks plus, when a network and the trips are given, a full
/// route replay.  Returns `(ok, diagnostic)`.
#[pyfunction]
#[pyo3(signature = (h, solution, network=None, trips_json=None))]
fn verify(
    h: &Hypergraph,
    solution: &Solution,
    network: Option<&Network>,
    trips_json: Option<&str>,
) -> PyResult<(bool, Option<String>)> {
    let trips = match trips_json {
        Some(text) => {
            let file = TripFile::from_json(text).map_err(err)?;
            let mut all = file.drivers;
            all.extend(file.riders);
            all
        }
        None => Vec::new(),
    };
    let report = oracle::verify_solution(
        &h.inner,
        &solution.inner,
        network.map(|n| &n.inner),
        &trips,
    )
    .map_err(err)?;
    Ok((report.ok, report.diagnostic))
}

/// Exhaustive optimum of a small hypergraph.
#[pyfunction]
fn brute_force_opt(h: &Hypergraph) -> PyResult<u32> {
    oracle::brute_force_opt(&h.inner).map_err(err)
}

/// Parses a three-dimensional-matching instance (first line `q`, then one
/// `a b c` triple per line) into an abstract hypergraph.
#[pyfunction]
fn from_3dm(text: &str) -> PyResult<Hypergraph> {
    let inst = ThreeDMInstance::parse(text).map_err(err)?;
    Ok(Hypergraph {
        inner: oracle::from_3dm(&inst).map_err(err)?,
    })
}

/// Runs a whole scenario; returns the per-interval CSV report and the
/// summary as a JSON object.
#[pyfunction]
fn run_simulation(scenario_json: &str) -> PyResult<(String, String)> {
    let scn = Scenario::from_json(scenario_json).map_err(err)?;
    let (reports, summary) = sim::run_simulation(&scn).map_err(err)?;
    let csv = sim::reports_to_csv(&reports);
    let summary = serde_json::to_string_pretty(&summary).map_err(err)?;
    Ok((csv, summary))
}

#[pymodule]
fn mtr_python(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Network>()?;
    m.add_class::<Hypergraph>()?;
    m.add_class::<Solution>()?;
    m.add_function(wrap_pyfunction!(build_network, m)?)?;
    m.add_function(wrap_pyfunction!(generate_interval, m)?)?;
    m.add_function(wrap_pyfunction!(compute_matches, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force_opt, m)?)?;
    m.add_function(wrap_pyfunction!(from_3dm, m)?)?;
    m.add_function(wrap_pyfunction!(run_simulation, m)?)?;
    Ok(())
}
