//! Command-line front end: generate trips, enumerate matches, solve, run
//! whole-day simulations, and summarize report files.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mtr_core::feasibility::{phase_one, phase_two, reduce_base_matches, Hypergraph, ReductionConfig};
use mtr_core::network::{build_network, NetworkSpec, RoadTransitNetwork};
use mtr_core::oracle::verify_solution;
use mtr_core::setpacking::{DEFAULT_ALPHA_FACTOR, DEFAULT_CONFLICT_PAIR_BUDGET, DEFAULT_IMPROVE_LIMIT};
use mtr_core::sim::{
    compute_metrics, render_summary, reports_to_csv, run_simulation, run_solver, summarize, Algo,
    IntervalReport, Scenario, SolverOpts,
};
use mtr_core::trips::{generate_interval, GenerationProfile, TripFile};
use mtr_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "mtr",
    version,
    about = "Matching and batch simulation for transit-integrated ridesharing"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build the synthetic network and generate one interval of trips.
    Generate {
        /// Master seed for network and trips.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Network recipe JSON; the built-in layout when absent.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Generation profile JSON; a standard profile when absent.
        #[arg(long)]
        profile: Option<PathBuf>,
        /// Intervals per day for the standard profile.
        #[arg(long, default_value_t = 12)]
        intervals: u32,
        /// Trips per interval for the standard profile.
        #[arg(long, default_value_t = 100)]
        count: u32,
        /// Which interval to generate.
        #[arg(long, default_value_t = 0)]
        interval: u32,
        /// Write the trips file here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the built network as JSON.
        #[arg(long)]
        network_out: Option<PathBuf>,
    },
    /// Enumerate feasible matches for a trips file.
    Match {
        /// Trips file produced by `generate`.
        #[arg(long)]
        trips: PathBuf,
        /// Network JSON; rebuilt from --seed and the built-in spec when absent.
        #[arg(long)]
        network: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Reduction preset name (small1..huge3); no reduction when absent.
        #[arg(long)]
        reduction: Option<String>,
        /// Write the match hypergraph here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a solver over a match hypergraph.
    Solve {
        /// Hypergraph JSON produced by `match`.
        #[arg(long)]
        matches: PathBuf,
        /// exact, impgreedy, lpr, greedy, anyimp, bestimp or squareimp.
        #[arg(long, default_value = "impgreedy")]
        algo: String,
        /// Time limit in seconds for the exact solver.
        #[arg(long)]
        time_limit: Option<f64>,
        /// Rounding seed for lpr.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Per-improvement search budget in seconds for the packing algorithms.
        #[arg(long, default_value_t = DEFAULT_IMPROVE_LIMIT)]
        improve_limit: f64,
        /// Improvement factor for the packing algorithms.
        #[arg(long, default_value_t = DEFAULT_ALPHA_FACTOR)]
        alpha_factor: f64,
        /// Conflict-graph memory guard: maximum intersecting edge pairs.
        #[arg(long, default_value_t = DEFAULT_CONFLICT_PAIR_BUDGET)]
        conflict_budget: usize,
        /// Trips file; verifies the solution against it when given.
        #[arg(long)]
        trips: Option<PathBuf>,
        /// Network JSON for route replay during verification.
        #[arg(long)]
        network: Option<PathBuf>,
        /// Write the solution here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a scenario for a whole day and emit the CSV report.
    Simulate {
        /// Scenario JSON.
        #[arg(long)]
        scenario: PathBuf,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Override the scenario's algorithm.
        #[arg(long)]
        algo: Option<String>,
        /// Override the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the acceptance threshold for every rider.
        #[arg(long)]
        theta: Option<f64>,
    },
    /// Summarize a CSV report produced by `simulate`.
    Report {
        #[arg(long)]
        csv: PathBuf,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => {
            fs::write(p, text)?;
            Ok(())
        }
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn load_network(path: Option<&PathBuf>, seed: u64) -> Result<RoadTransitNetwork> {
    match path {
        Some(p) => RoadTransitNetwork::from_json(&read(p)?),
        None => build_network(seed, &NetworkSpec::default_spec()),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Generate {
            seed,
            spec,
            profile,
            intervals,
            count,
            interval,
            out,
            network_out,
        } => {
            let spec = match spec {
                Some(p) => serde_json::from_str(&read(&p)?)?,
                None => NetworkSpec::default_spec(),
            };
            let profile = match profile {
                Some(p) => GenerationProfile::from_json(&read(&p)?)?,
                None => GenerationProfile::standard(intervals, vec![count; intervals as usize]),
            };
            let net = build_network(seed, &spec)?;
            if let Some(p) = network_out {
                fs::write(&p, net.to_json()?)?;
                eprintln!(
                    "network: {} nodes, {} stations -> {}",
                    net.nodes.len(),
                    net.stations.len(),
                    p.display()
                );
            }
            let (drivers, riders) = generate_interval(&profile, &net, interval, seed)?;
            eprintln!(
                "interval {interval}: {} drivers, {} riders",
                drivers.len(),
                riders.len()
            );
            let file = TripFile {
                interval,
                drivers,
                riders,
            };
            emit(out.as_ref(), &file.to_json()?)
        }
        Cmd::Match {
            trips,
            network,
            seed,
            reduction,
            out,
        } => {
            let file = TripFile::from_json(&read(&trips)?)?;
            let net = load_network(network.as_ref(), seed)?;
            let base = phase_one(&file.drivers, &file.riders, &net)?;
            let (reduced, y_cap) = match reduction.as_deref() {
                Some(name) => {
                    let cfg = ReductionConfig::preset(name).ok_or_else(|| {
                        Error::InvalidConfig(format!("unknown reduction preset {name:?}"))
                    })?;
                    let r = reduce_base_matches(&base, &cfg, &file.drivers, &file.riders, &net)?;
                    (r, cfg.y)
                }
                None => (base.clone(), None),
            };
            let h = phase_two(&reduced, &file.drivers, &file.riders, &net, y_cap)?;
            eprintln!(
                "base matches: {} before reduction, {} after; {} total after extension",
                base.n_edges(),
                reduced.n_edges(),
                h.n_edges()
            );
            emit(out.as_ref(), &h.to_json()?)
        }
        Cmd::Solve {
            matches,
            algo,
            time_limit,
            seed,
            improve_limit,
            alpha_factor,
            conflict_budget,
            trips,
            network,
            out,
        } => {
            let h = Hypergraph::from_json(&read(&matches)?)?;
            let algo = Algo::parse(&algo)?;
            let opts = SolverOpts {
                time_limit,
                improve_limit,
                alpha_factor,
                pair_budget: conflict_budget,
                seed,
            };
            let sol = run_solver(&h, algo, &opts)?;
            eprintln!(
                "solver {}: {} riders served, {} matches, optimal={}, {:.3}s",
                sol.solver,
                sol.value,
                sol.matches.len(),
                sol.optimal,
                sol.elapsed
            );
            if let Some(tp) = trips {
                let file = TripFile::from_json(&read(&tp)?)?;
                let net = match network.as_ref() {
                    Some(p) => Some(RoadTransitNetwork::from_json(&read(p)?)?),
                    None => None,
                };
                let mut all = file.drivers.clone();
                all.extend(file.riders.iter().cloned());
                let report = verify_solution(&h, &sol, net.as_ref(), &all)?;
                if !report.ok {
                    return Err(Error::VerificationFailed {
                        interval: file.interval,
                        violation: report.diagnostic.unwrap_or_default(),
                    });
                }
                if let Some(net) = net.as_ref() {
                    let m = compute_metrics(&h, &sol, &file.drivers, &file.riders, net)?;
                    eprintln!(
                        "verified; time saved {}s, occupancy {}, vacancy {}",
                        m.time_saved_total,
                        m.occupancy_rate.map_or("n/a".into(), |v| format!("{v:.4}")),
                        m.vacancy_rate.map_or("n/a".into(), |v| format!("{v:.4}")),
                    );
                } else {
                    eprintln!("verified (no network given: route replay skipped)");
                }
            }
            emit(out.as_ref(), &serde_json::to_string_pretty(&sol)?)
        }
        Cmd::Simulate {
            scenario,
            csv,
            algo,
            seed,
            theta,
        } => {
            let mut scn = Scenario::from_json(&read(&scenario)?)?;
            if let Some(a) = algo {
                scn.algorithm = a;
            }
            if let Some(s) = seed {
                scn.seed = s;
            }
            if let Some(t) = theta {
                scn.theta = Some(t);
            }
            let (reports, summary) = run_simulation(&scn)?;
            eprint!("{}", render_summary(&summary));
            match csv {
                Some(p) => {
                    fs::write(&p, reports_to_csv(&reports))?;
                    Ok(())
                }
                None => {
                    print!("{}", reports_to_csv(&reports));
                    Ok(())
                }
            }
        }
        Cmd::Report { csv } => {
            let text = read(&csv)?;
            let reports = parse_csv(&text)?;
            let name = csv
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "report".into());
            let summary = summarize(&name, "csv", &reports);
            print!("{}", render_summary(&summary));
            Ok(())
        }
    }
}

/// Reads back the eight fixed CSV columns; rate cells may be empty.
fn parse_csv(text: &str) -> Result<Vec<IntervalReport>> {
    let bad = |line: &str| Error::InvalidConfig(format!("malformed report line: {line}"));
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad(""))?;
    if !header.starts_with("interval,riders_total,riders_served,time_saved_total") {
        return Err(Error::InvalidConfig("unrecognized report header".into()));
    }
    let mut reports = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 8 {
            return Err(bad(line));
        }
        let rate = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| bad(line))
            }
        };
        reports.push(IntervalReport {
            interval: cols[0].parse().map_err(|_| bad(line))?,
            riders_total: cols[1].parse().map_err(|_| bad(line))?,
            riders_served: cols[2].parse().map_err(|_| bad(line))?,
            time_saved_total: cols[3].parse().map_err(|_| bad(line))?,
            occupancy_rate: rate(cols[4])?,
            vacancy_rate: rate(cols[5])?,
            solver_time: 0.0,
            alg1_time: 0.0,
            alg2_time: 0.0,
            edges_before_reduction: cols[6].parse().map_err(|_| bad(line))?,
            edges_after_reduction: cols[7].parse().map_err(|_| bad(line))?,
        });
    }
    Ok(reports)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
