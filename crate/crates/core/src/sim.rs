//! Interval-driven batch simulation: generate trips for each interval of
//! the day, enumerate and reduce feasible matches, solve, verify, and
//! aggregate metrics.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feasibility::{phase_one, phase_two, reduce_base_matches, Hypergraph, ReductionConfig};
use crate::network::{build_network, NetworkSpec, RoadTransitNetwork};
use crate::oracle::{replay_edge, verify_solution};
use crate::setpacking::{self, SetAlgo, DEFAULT_ALPHA_FACTOR, DEFAULT_CONFLICT_PAIR_BUDGET, DEFAULT_IMPROVE_LIMIT};
use crate::solvers::{imp_greedy, lpr_round, solve_exact, solve_lp, Solution};
use crate::trips::{generate_interval, GenerationProfile, Trip};
use crate::TripId;

/// Per-interval outcome.  Wall-clock fields are informational and excluded
/// from the CSV emission so reports stay byte-reproducible.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntervalReport {
    pub interval: u32,
    pub riders_total: usize,
    pub riders_served: usize,
    /// Seconds saved across served riders against their transit baseline.
    pub time_saved_total: u64,
    /// `(served + |D|) / |D|`; absent when the interval has no drivers.
    pub occupancy_rate: Option<f64>,
    /// Idle drivers over all drivers; absent when there are none.
    pub vacancy_rate: Option<f64>,
    pub solver_time: f64,
    /// Base match enumeration plus reduction, seconds.
    pub alg1_time: f64,
    /// Extension to multi-rider matches, seconds.
    pub alg2_time: f64,
    pub edges_before_reduction: usize,
    pub edges_after_reduction: usize,
}

/// Which algorithm assigns riders each interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algo {
    Exact,
    ImpGreedy,
    Lpr,
    Greedy,
    AnyImp,
    BestImp,
    SquareImp,
}

impl Algo {
    pub fn parse(s: &str) -> Result<Algo> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "exact" => Algo::Exact,
            "impgreedy" => Algo::ImpGreedy,
            "lpr" => Algo::Lpr,
            "greedy" => Algo::Greedy,
            "anyimp" => Algo::AnyImp,
            "bestimp" => Algo::BestImp,
            "squareimp" => Algo::SquareImp,
            _ => {
                return Err(Error::InvalidConfig(format!(
                    "unknown algorithm {s:?}; expected exact, impgreedy, lpr, greedy, anyimp, bestimp or squareimp"
                )))
            }
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Algo::Exact => "exact",
            Algo::ImpGreedy => "impgreedy",
            Algo::Lpr => "lpr",
            Algo::Greedy => "greedy",
            Algo::AnyImp => "anyimp",
            Algo::BestImp => "bestimp",
            Algo::SquareImp => "squareimp",
        }
    }
}

/// Reduction setting in a scenario file: either a preset name such as
/// `"medium4"` or an inline configuration object.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ReductionRef {
    Preset(String),
    Inline(ReductionConfig),
}

impl ReductionRef {
    pub fn resolve(&self) -> Result<ReductionConfig> {
        match self {
            ReductionRef::Preset(name) => ReductionConfig::preset(name)
                .ok_or_else(|| Error::InvalidConfig(format!("unknown reduction preset {name:?}"))),
            ReductionRef::Inline(cfg) => {
                cfg.validate()?;
                Ok(cfg.clone())
            }
        }
    }
}

/// A complete simulation description, loadable from JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    /// Synthetic network recipe; the standard one when absent.
    #[serde(default)]
    pub network: Option<NetworkSpec>,
    pub profile: GenerationProfile,
    pub reduction: ReductionRef,
    pub algorithm: String,
    /// Uniform acceptance-threshold override for every generated rider.
    #[serde(default)]
    pub theta: Option<f64>,
    /// Exact-solver time limit in seconds.
    #[serde(default)]
    pub time_limit: Option<f64>,
    #[serde(default)]
    pub improve_limit: Option<f64>,
    #[serde(default)]
    pub alpha_factor: Option<f64>,
    #[serde(default)]
    pub pair_budget: Option<usize>,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.profile.validate()?;
        self.reduction.resolve()?;
        Algo::parse(&self.algorithm)?;
        if let Some(th) = self.theta {
            if !(th > 0.0 && th <= 1.0) {
                return Err(Error::InvalidConfig(
                    "threshold override must lie in (0, 1]".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let scn: Scenario = serde_json::from_str(text)?;
        scn.validate()?;
        Ok(scn)
    }
}

/// Knobs forwarded to the chosen solver.
#[derive(Debug, Clone)]
pub struct SolverOpts {
    pub time_limit: Option<f64>,
    pub improve_limit: f64,
    pub alpha_factor: f64,
    pub pair_budget: usize,
    /// Rounding seed for `lpr`.
    pub seed: u64,
}

impl Default for SolverOpts {
    fn default() -> Self {
        SolverOpts {
            time_limit: None,
            improve_limit: DEFAULT_IMPROVE_LIMIT,
            alpha_factor: DEFAULT_ALPHA_FACTOR,
            pair_budget: DEFAULT_CONFLICT_PAIR_BUDGET,
            seed: 0,
        }
    }
}

/// Runs one algorithm on a hypergraph.
pub fn run_solver(h: &Hypergraph, algo: Algo, opts: &SolverOpts) -> Result<Solution> {
    match algo {
        Algo::Exact => solve_exact(h, opts.time_limit),
        Algo::ImpGreedy => Ok(imp_greedy(h)),
        Algo::Lpr => {
            let frac = solve_lp(h)?;
            lpr_round(h, &frac, opts.seed)
        }
        Algo::Greedy | Algo::AnyImp | Algo::BestImp | Algo::SquareImp => {
            let sa = match algo {
                Algo::Greedy => SetAlgo::Greedy,
                Algo::AnyImp => SetAlgo::AnyImp,
                Algo::BestImp => SetAlgo::BestImp,
                _ => SetAlgo::SquareImp,
            };
            setpacking::solve(h, sa, opts.pair_budget, opts.improve_limit, opts.alpha_factor)
        }
    }
}

/// Occupancy, vacancy, and time-saved numbers for one solved interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub riders_served: usize,
    pub time_saved_total: u64,
    pub occupancy_rate: Option<f64>,
    pub vacancy_rate: Option<f64>,
}

/// Computes the interval metrics for a verified solution.  Time saved per
/// rider is the transit baseline minus the replayed on-route duration;
/// edges without geometry contribute nothing.
pub fn compute_metrics(
    h: &Hypergraph,
    sol: &Solution,
    drivers: &[Trip],
    riders: &[Trip],
    net: &RoadTransitNetwork,
) -> Result<Metrics> {
    let nd = drivers.len();
    let assigned = sol.matches.len();
    let (occupancy_rate, vacancy_rate) = if nd == 0 {
        (None, None)
    } else {
        (
            Some((sol.value as f64 + nd as f64) / nd as f64),
            Some((nd - assigned) as f64 / nd as f64),
        )
    };
    let mut table: HashMap<TripId, &Trip> = HashMap::new();
    for t in drivers.iter().chain(riders.iter()) {
        table.insert(t.id, t);
    }
    let mut time_saved_total = 0u64;
    for &e in &sol.matches {
        let edge = h.edge(e)?;
        if edge.station.is_none() {
            continue;
        }
        let durations = replay_edge(edge, net, &table).map_err(|msg| Error::VerificationFailed {
            interval: 0,
            violation: format!("edge {e}: {msg}"),
        })?;
        for (&r, &dur) in edge.riders.iter().zip(&durations) {
            let trip = table.get(&r).ok_or(Error::DanglingEdge(e))?;
            let baseline = net.transit_duration(trip.origin, trip.dest)?;
            time_saved_total += u64::from(baseline) - u64::from(dur.min(baseline));
        }
    }
    Ok(Metrics {
        riders_served: sol.value as usize,
        time_saved_total,
        occupancy_rate,
        vacancy_rate,
    })
}

fn interval_seed(seed: u64, t: u32) -> u64 {
    seed ^ (t as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Day-level aggregation over the interval reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub scenario: String,
    pub algorithm: String,
    pub intervals: u32,
    pub riders_total: u64,
    pub riders_served: u64,
    pub time_saved_total: u64,
    /// Seconds; total saved over the interval count.
    pub avg_saved_per_interval: f64,
    /// Seconds; total saved over total served.
    pub avg_saved_per_rider: f64,
    pub avg_occupancy: Option<f64>,
    pub avg_vacancy: Option<f64>,
    pub edges_before_total: u64,
    pub edges_after_total: u64,
    pub solver_time_total: f64,
}

pub fn summarize(scenario: &str, algorithm: &str, reports: &[IntervalReport]) -> Summary {
    let riders_total: u64 = reports.iter().map(|r| r.riders_total as u64).sum();
    let riders_served: u64 = reports.iter().map(|r| r.riders_served as u64).sum();
    let time_saved_total: u64 = reports.iter().map(|r| r.time_saved_total).sum();
    let mean = |vals: Vec<f64>| {
        if vals.is_empty() {
            None
        } else {
            Some(vals.iter().sum::<f64>() / vals.len() as f64)
        }
    };
    Summary {
        scenario: scenario.to_string(),
        algorithm: algorithm.to_string(),
        intervals: reports.len() as u32,
        riders_total,
        riders_served,
        time_saved_total,
        avg_saved_per_interval: if reports.is_empty() {
            0.0
        } else {
            time_saved_total as f64 / reports.len() as f64
        },
        avg_saved_per_rider: if riders_served == 0 {
            0.0
        } else {
            time_saved_total as f64 / riders_served as f64
        },
        avg_occupancy: mean(reports.iter().filter_map(|r| r.occupancy_rate).collect()),
        avg_vacancy: mean(reports.iter().filter_map(|r| r.vacancy_rate).collect()),
        edges_before_total: reports.iter().map(|r| r.edges_before_reduction as u64).sum(),
        edges_after_total: reports.iter().map(|r| r.edges_after_reduction as u64).sum(),
        solver_time_total: reports.iter().map(|r| r.solver_time).sum(),
    }
}

/// Human-readable summary block; time-saved rows are reported in minutes.
pub fn render_summary(s: &Summary) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "scenario: {} (algorithm {})", s.scenario, s.algorithm);
    let _ = writeln!(out, "intervals: {}", s.intervals);
    let _ = writeln!(out, "riders served: {} / {}", s.riders_served, s.riders_total);
    let _ = writeln!(
        out,
        "total time saved: {:.2} min",
        s.time_saved_total as f64 / 60.0
    );
    let _ = writeln!(
        out,
        "avg time saved of served riders per interval: {:.2} min",
        s.avg_saved_per_interval / 60.0
    );
    let _ = writeln!(
        out,
        "avg time saved per served rider: {:.2} min",
        s.avg_saved_per_rider / 60.0
    );
    match s.avg_occupancy {
        Some(v) => {
            let _ = writeln!(out, "avg occupancy rate: {v:.4}");
        }
        None => {
            let _ = writeln!(out, "avg occupancy rate: n/a");
        }
    }
    match s.avg_vacancy {
        Some(v) => {
            let _ = writeln!(out, "avg vacancy rate: {v:.4}");
        }
        None => {
            let _ = writeln!(out, "avg vacancy rate: n/a");
        }
    }
    let _ = writeln!(
        out,
        "feasible matches: {} before reduction, {} after",
        s.edges_before_total, s.edges_after_total
    );
    let _ = writeln!(out, "solver time: {:.3} s", s.solver_time_total);
    out
}

fn fmt_rate(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.4}")).unwrap_or_default()
}

/// CSV emission with a fixed column order; wall-clock columns are omitted
/// so identical scenario + seed gives byte-identical output.
pub fn reports_to_csv(reports: &[IntervalReport]) -> String {
    let mut out = String::from(
        "interval,riders_total,riders_served,time_saved_total,occupancy_rate,vacancy_rate,edges_before_reduction,edges_after_reduction\n",
    );
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.interval,
            r.riders_total,
            r.riders_served,
            r.time_saved_total,
            fmt_rate(r.occupancy_rate),
            fmt_rate(r.vacancy_rate),
            r.edges_before_reduction,
            r.edges_after_reduction
        );
    }
    out
}

/// Runs the whole day: one batch per interval, independently matched and
/// solved, with every solution re-verified before it counts.
pub fn run_simulation(scn: &Scenario) -> Result<(Vec<IntervalReport>, Summary)> {
    scn.validate()?;
    let spec = scn.network.clone().unwrap_or_else(NetworkSpec::default_spec);
    let net = build_network(scn.seed, &spec)?;
    let reduction = scn.reduction.resolve()?;
    let algo = Algo::parse(&scn.algorithm)?;
    let mut reports = Vec::new();

    for t in 0..scn.profile.intervals_per_day {
        let (drivers, mut riders) = generate_interval(&scn.profile, &net, t, scn.seed)?;
        if let Some(th) = scn.theta {
            for r in &mut riders {
                r.threshold = Some(th);
            }
        }

        let alg1_start = Instant::now();
        let base = phase_one(&drivers, &riders, &net)?;
        let edges_before = base.n_edges();
        let reduced = reduce_base_matches(&base, &reduction, &drivers, &riders, &net)?;
        let edges_after = reduced.n_edges();
        let alg1_time = alg1_start.elapsed().as_secs_f64();

        let alg2_start = Instant::now();
        let h = phase_two(&reduced, &drivers, &riders, &net, reduction.y)?;
        let alg2_time = alg2_start.elapsed().as_secs_f64();

        let opts = SolverOpts {
            time_limit: scn.time_limit,
            improve_limit: scn.improve_limit.unwrap_or(DEFAULT_IMPROVE_LIMIT),
            alpha_factor: scn.alpha_factor.unwrap_or(DEFAULT_ALPHA_FACTOR),
            pair_budget: scn.pair_budget.unwrap_or(DEFAULT_CONFLICT_PAIR_BUDGET),
            seed: interval_seed(scn.seed, t),
        };
        let sol = run_solver(&h, algo, &opts)?;

        let mut all_trips = drivers.clone();
        all_trips.extend(riders.iter().cloned());
        let report = verify_solution(&h, &sol, Some(&net), &all_trips)?;
        if !report.ok {
            return Err(Error::VerificationFailed {
                interval: t,
                violation: report.diagnostic.unwrap_or_default(),
            });
        }
        let metrics = compute_metrics(&h, &sol, &drivers, &riders, &net).map_err(|e| match e {
            Error::VerificationFailed { violation, .. } => {
                Error::VerificationFailed { interval: t, violation }
            }
            other => other,
        })?;

        reports.push(IntervalReport {
            interval: t,
            riders_total: riders.len(),
            riders_served: metrics.riders_served,
            time_saved_total: metrics.time_saved_total,
            occupancy_rate: metrics.occupancy_rate,
            vacancy_rate: metrics.vacancy_rate,
            solver_time: sol.elapsed,
            alg1_time,
            alg2_time,
            edges_before_reduction: edges_before,
            edges_after_reduction: edges_after,
        });
    }

    let summary = summarize(&scn.name, algo.name(), &reports);
    Ok((reports, summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feasibility::FeasibleMatch;
    use crate::network::{Area, AreaKind, Line, Node, RoadEdge, TransitMode};
    use crate::trips::{MatchType, TripKind};

    fn desk_scenario(algorithm: &str, trips_per_interval: u32, intervals: u32) -> Scenario {
        Scenario {
            name: "desk".into(),
            seed: 11,
            network: None,
            profile: GenerationProfile::standard(
                intervals,
                vec![trips_per_interval; intervals as usize],
            ),
            reduction: ReductionRef::Preset("medium4".into()),
            algorithm: algorithm.into(),
            theta: None,
            time_limit: None,
            improve_limit: None,
            alpha_factor: None,
            pair_budget: None,
        }
    }

    /// Minimal three-node line network for metric arithmetic tests.
    fn tiny_net() -> RoadTransitNetwork {
        let nodes = (0..3)
            .map(|i| Node {
                id: i,
                x: i as f64 * 1000.0,
                y: 0.0,
            })
            .collect();
        let mut road_edges = Vec::new();
        for i in 0..2 {
            road_edges.push(RoadEdge {
                from: i,
                to: i + 1,
                secs: 100,
            });
            road_edges.push(RoadEdge {
                from: i + 1,
                to: i,
                secs: 100,
            });
        }
        RoadTransitNetwork::assemble(
            nodes,
            road_edges,
            vec![0, 2],
            vec![Line {
                name: "l".into(),
                mode: TransitMode::Rail,
                stations: vec![0, 2],
            }],
            vec![
                Area {
                    name: "a".into(),
                    kind: AreaKind::DesignatedHub,
                    nodes: vec![0, 1],
                },
                Area {
                    name: "b".into(),
                    kind: AreaKind::Urban,
                    nodes: vec![2],
                },
            ],
            2.0,
            2.0,
            500.0,
        )
        .unwrap()
    }

    fn abstract_edge(driver: TripId, riders: Vec<TripId>) -> FeasibleMatch {
        let weight = riders.len() as u32;
        FeasibleMatch {
            driver,
            riders,
            route: vec![],
            station: None,
            match_type: MatchType::Type1,
            weight,
        }
    }

    fn stub_driver(id: TripId) -> Trip {
        Trip {
            id,
            kind: TripKind::Driver,
            origin: 0,
            dest: 2,
            seats: Some(3),
            detour: Some(300),
            preferred_path: None,
            max_stops: Some(3),
            earliest_depart: 0,
            latest_arrive: 10_000,
            max_duration: 10_000,
            threshold: None,
            match_types: vec![MatchType::Type1],
        }
    }

    fn stub_rider(id: TripId) -> Trip {
        Trip {
            id,
            kind: TripKind::Rider,
            origin: 0,
            dest: 2,
            seats: None,
            detour: None,
            preferred_path: None,
            max_stops: None,
            earliest_depart: 0,
            latest_arrive: 10_000,
            max_duration: 10_000,
            threshold: Some(0.8),
            match_types: vec![MatchType::Type1],
        }
    }

    /// 10 drivers, 8 assigned covering 17 riders, 2 idle.
    #[test]
    fn occupancy_and_vacancy_arithmetic() {
        let net = tiny_net();
        let sizes = [3, 3, 3, 2, 2, 2, 1, 1];
        let mut edges = Vec::new();
        let mut next_rider = 0;
        for (i, &k) in sizes.iter().enumerate() {
            let riders: Vec<TripId> = (next_rider..next_rider + k).collect();
            next_rider += k;
            edges.push(abstract_edge(100 + i, riders));
        }
        let h = Hypergraph::from_edges(edges).unwrap();
        let drivers: Vec<Trip> = (0..10).map(|i| stub_driver(100 + i)).collect();
        let riders: Vec<Trip> = (0..17).map(stub_rider).collect();
        let sol = Solution {
            matches: (0..8).collect(),
            served: (0..17).collect(),
            value: 17,
            solver: "test".into(),
            elapsed: 0.0,
            optimal: false,
        };
        let m = compute_metrics(&h, &sol, &drivers, &riders, &net).unwrap();
        assert_eq!(m.riders_served, 17);
        assert_eq!(m.time_saved_total, 0); // abstract edges carry no routes
        assert!((m.occupancy_rate.unwrap() - 2.7).abs() < 1e-12);
        assert!((m.vacancy_rate.unwrap() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn no_drivers_leaves_rates_absent() {
        let net = tiny_net();
        let h = Hypergraph::from_edges(vec![]).unwrap();
        let sol = Solution {
            matches: vec![],
            served: vec![],
            value: 0,
            solver: "test".into(),
            elapsed: 0.0,
            optimal: true,
        };
        let m = compute_metrics(&h, &sol, &[], &[], &net).unwrap();
        assert_eq!(m.occupancy_rate, None);
        assert_eq!(m.vacancy_rate, None);
    }

    #[test]
    fn idle_day_reports_all_zeros() {
        let scn = desk_scenario("exact", 0, 3);
        let (reports, summary) = run_simulation(&scn).unwrap();
        assert_eq!(reports.len(), 3);
        for r in &reports {
            assert_eq!(r.riders_total, 0);
            assert_eq!(r.riders_served, 0);
            assert_eq!(r.time_saved_total, 0);
            assert_eq!(r.occupancy_rate, None);
            assert_eq!(r.vacancy_rate, None);
            assert_eq!(r.edges_before_reduction, 0);
            assert_eq!(r.edges_after_reduction, 0);
        }
        assert_eq!(summary.riders_served, 0);
        assert_eq!(summary.avg_saved_per_rider, 0.0);
    }

    #[test]
    fn scenario_json_accepts_presets_and_inline_reductions() {
        let scn = desk_scenario("impgreedy", 16, 2);
        let text = scn.to_json().unwrap();
        let back = Scenario::from_json(&text).unwrap();
        assert_eq!(back.name, "desk");
        assert!(matches!(back.reduction, ReductionRef::Preset(ref p) if p == "medium4"));

        let inline = r#"{
            "name": "inline",
            "seed": 1,
            "profile": PROFILE,
            "reduction": { "x_pct": 30.0, "y": 600, "z": 20 },
            "algorithm": "impgreedy"
        }"#
        .replace(
            "PROFILE",
            &serde_json::to_string(&scn.profile).unwrap(),
        );
        let parsed = Scenario::from_json(&inline).unwrap();
        let cfg = parsed.reduction.resolve().unwrap();
        assert_eq!(cfg.y, Some(600));
        assert_eq!(cfg.z, Some(20));

        let mut bad = desk_scenario("nosuch", 16, 2);
        assert!(bad.validate().is_err());
        bad = desk_scenario("exact", 16, 2);
        bad.theta = Some(1.5);
        assert!(bad.validate().is_err());
    }

    #[test]
    fn exact_dominates_impgreedy_every_interval() {
        let exact = run_simulation(&desk_scenario("exact", 36, 3)).unwrap().0;
        let greedy = run_simulation(&desk_scenario("impgreedy", 36, 3)).unwrap().0;
        assert_eq!(exact.len(), greedy.len());
        for (e, g) in exact.iter().zip(&greedy) {
            assert_eq!(e.riders_total, g.riders_total);
            assert_eq!(e.edges_before_reduction, g.edges_before_reduction);
            assert!(e.riders_served >= g.riders_served, "interval {}", e.interval);
        }
        assert!(exact.iter().map(|r| r.riders_served).sum::<usize>() > 0);
    }

    #[test]
    fn conflict_graph_greedy_matches_imp_greedy_in_simulation() {
        let a = run_simulation(&desk_scenario("impgreedy", 36, 3)).unwrap().0;
        let b = run_simulation(&desk_scenario("greedy", 36, 3)).unwrap().0;
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.riders_served, y.riders_served, "interval {}", x.interval);
        }
    }

    #[test]
    fn served_riders_save_time_at_low_thresholds() {
        let mut scn = desk_scenario("exact", 36, 3);
        scn.theta = Some(0.8);
        let (reports, summary) = run_simulation(&scn).unwrap();
        assert!(summary.riders_served > 0);
        for r in &reports {
            if r.riders_served > 0 {
                assert!(r.time_saved_total > 0, "interval {}", r.interval);
            }
            if let Some(o) = r.occupancy_rate {
                assert!(o >= 1.0);
            }
            if let Some(v) = r.vacancy_rate {
                assert!((0.0..=1.0).contains(&v));
            }
            assert!(r.riders_served <= r.riders_total);
        }
        assert!(summary.avg_saved_per_rider > 0.0);
    }

    #[test]
    fn identical_scenarios_emit_identical_csv() {
        let scn = desk_scenario("lpr", 32, 3);
        let (a, _) = run_simulation(&scn).unwrap();
        let (b, _) = run_simulation(&scn).unwrap();
        let ca = reports_to_csv(&a);
        let cb = reports_to_csv(&b);
        assert_eq!(ca, cb);
        assert!(ca.starts_with(
            "interval,riders_total,riders_served,time_saved_total,occupancy_rate,vacancy_rate,edges_before_reduction,edges_after_reduction\n"
        ));
        assert_eq!(ca.lines().count(), 4);
    }

    #[test]
    fn summary_and_render_shape() {
        let scn = desk_scenario("anyimp", 32, 2);
        let (reports, summary) = run_simulation(&scn).unwrap();
        assert_eq!(summary.intervals, 2);
        assert_eq!(
            summary.riders_total,
            reports.iter().map(|r| r.riders_total as u64).sum::<u64>()
        );
        let text = render_summary(&summary);
        assert!(text.contains("riders served"));
        assert!(text.contains("min"));
        assert!(text.contains("algorithm anyimp"));
    }
}
