//! Assignment over the match hypergraph: the LP relaxation, exact
//! branch-and-bound on top of it, randomized rounding, and the one-pass
//! greedy.  Everything is deterministic for a given input (and seed, for the
//! rounding).

use std::collections::HashMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feasibility::Hypergraph;
use crate::simplex::DenseLp;
use crate::trips::MatchType;
use crate::{EdgeId, TripId};

/// An integral assignment: pairwise-disjoint matches and the riders they
/// serve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    /// Selected edge ids, ascending.
    pub matches: Vec<EdgeId>,
    /// Served rider ids, ascending.
    pub served: Vec<TripId>,
    /// Total weight; equals the served-rider count.
    pub value: u32,
    pub solver: String,
    /// Wall-clock seconds spent producing this solution.
    pub elapsed: f64,
    /// Whether the result is provably optimal.
    pub optimal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionalSolution {
    /// Per-edge LP value, indexed by edge id.
    pub x: Vec<f64>,
    pub objective: f64,
}

/// Builds a `Solution` from chosen edges, checking disjointness on the way;
/// overlapping matches are a solver bug, not an input condition.
pub(crate) fn assemble(
    h: &Hypergraph,
    mut matches: Vec<EdgeId>,
    solver: &str,
    start: Instant,
    optimal: bool,
) -> Solution {
    matches.sort_unstable();
    let mut served = Vec::new();
    let mut drivers = Vec::new();
    let mut value = 0u32;
    for &e in &matches {
        let edge = &h.edges()[e];
        drivers.push(edge.driver);
        served.extend(edge.riders.iter().copied());
        value += edge.weight;
    }
    served.sort_unstable();
    drivers.sort_unstable();
    assert!(
        served.windows(2).all(|w| w[0] < w[1]) && drivers.windows(2).all(|w| w[0] < w[1]),
        "{solver} produced overlapping matches"
    );
    Solution {
        matches,
        served,
        value,
        solver: solver.into(),
        elapsed: start.elapsed().as_secs_f64(),
        optimal,
    }
}

/// The relaxation restricted to `free` edge ids; returns the objective and
/// the values aligned with `free`.
fn lp_over(h: &Hypergraph, free: &[EdgeId]) -> Result<(f64, Vec<f64>)> {
    if free.is_empty() {
        return Ok((0.0, vec![]));
    }
    let pos: HashMap<EdgeId, usize> = free.iter().enumerate().map(|(k, &e)| (e, k)).collect();
    let c: Vec<f64> = free.iter().map(|&e| h.edges()[e].weight as f64).collect();
    let mut lp = DenseLp::new(c);
    for &t in h.driver_ids().iter().chain(h.rider_ids()) {
        let coeffs: Vec<(usize, f64)> = h
            .edges_of(t)
            .iter()
            .filter_map(|e| pos.get(e).map(|&k| (k, 1.0)))
            .collect();
        if !coeffs.is_empty() {
            lp.add_row(&coeffs, 1.0)?;
        }
    }
    let s = lp.solve()?;
    Ok((s.objective, s.x))
}

/// LP relaxation of the packing ILP: one variable per edge in [0,1], one
/// row per trip (drivers and riders alike) capping its incident mass at 1.
pub fn solve_lp(h: &Hypergraph) -> Result<FractionalSolution> {
    let all: Vec<EdgeId> = (0..h.n_edges()).collect();
    let (objective, x) = lp_over(h, &all)?;
    Ok(FractionalSolution { x, objective })
}

fn greedy_pick(h: &Hypergraph) -> Vec<EdgeId> {
    let mut order: Vec<EdgeId> = (0..h.n_edges()).collect();
    order.sort_by_key(|&e| (std::cmp::Reverse(h.edges()[e].weight), e));
    let mut alive = vec![true; h.n_edges()];
    let mut chosen = Vec::new();
    for e in order {
        if !alive[e] {
            continue;
        }
        chosen.push(e);
        for t in h.edges()[e].trips() {
            for &e2 in h.edges_of(t) {
                alive[e2] = false;
            }
        }
    }
    chosen
}

/// Greedy over rider counts: repeatedly take the heaviest surviving edge
/// (ties to the lowest id) and knock out everything it touches.  Guarantees
/// at least half the optimum.
pub fn imp_greedy(h: &Hypergraph) -> Solution {
    let start = Instant::now();
    let chosen = greedy_pick(h);
    assemble(h, chosen, "impgreedy", start, false)
}

/// Exact branch-and-bound: depth-first, branching the most fractional edge
/// to 1 first, pruning on the rounded-down LP bound against the incumbent.
/// On timeout the best incumbent is returned with `optimal = false`.
pub fn solve_exact(h: &Hypergraph, time_limit: Option<f64>) -> Result<Solution> {
    let start = Instant::now();
    let n = h.n_edges();
    if n == 0 {
        return Ok(assemble(h, vec![], "exact", start, true));
    }

    // Greedy warm start so pruning bites from the first node.
    let mut best = greedy_pick(h);
    let mut best_value: u32 = best.iter().map(|&e| h.edges()[e].weight).sum();
    let mut proven = true;

    struct Node {
        banned: Vec<bool>,
        chosen: Vec<EdgeId>,
        value: u32,
    }
    let mut stack = vec![Node {
        banned: vec![false; n],
        chosen: vec![],
        value: 0,
    }];
    while let Some(node) = stack.pop() {
        if let Some(limit) = time_limit {
            if start.elapsed().as_secs_f64() > limit {
                proven = false;
                break;
            }
        }
        let free: Vec<EdgeId> = (0..n).filter(|&e| !node.banned[e]).collect();
        let (lp_obj, x) = lp_over(h, &free)?;
        let bound = node.value as f64 + lp_obj;
        if (bound + 1e-6).floor() as u32 <= best_value {
            continue;
        }
        // Branch the free edge closest to 1/2; none fractional means the LP
        // solved the node outright.
        let mut branch: Option<EdgeId> = None;
        let mut score = f64::INFINITY;
        for (k, &e) in free.iter().enumerate() {
            let v = x[k];
            if v > 1e-6 && v < 1.0 - 1e-6 {
                let s = (v - 0.5).abs();
                if s < score {
                    score = s;
                    branch = Some(e);
                }
            }
        }
        match branch {
            None => {
                let mut chosen = node.chosen.clone();
                for (k, &e) in free.iter().enumerate() {
                    if x[k] > 0.5 {
                        chosen.push(e);
                    }
                }
                let value: u32 = chosen.iter().map(|&e| h.edges()[e].weight).sum();
                if value > best_value {
                    best_value = value;
                    best = chosen;
                }
            }
            Some(e) => {
                let mut banned0 = node.banned.clone();
                banned0[e] = true;
                // The x_e = 0 child goes first so the x_e = 1 child pops first.
                stack.push(Node {
                    banned: banned0,
                    chosen: node.chosen.clone(),
                    value: node.value,
                });
                let mut banned1 = node.banned;
                for t in h.edges()[e].trips() {
                    for &e2 in h.edges_of(t) {
                        banned1[e2] = true;
                    }
                }
                let mut chosen1 = node.chosen;
                chosen1.push(e);
                stack.push(Node {
                    banned: banned1,
                    chosen: chosen1,
                    value: node.value + h.edges()[e].weight,
                });
            }
        }
    }
    Ok(assemble(h, best, "exact", start, proven))
}

fn subset_index(h: &Hypergraph) -> HashMap<(TripId, MatchType, Vec<TripId>), EdgeId> {
    let mut map = HashMap::new();
    for (id, e) in h.edges().iter().enumerate() {
        map.entry((e.driver, e.match_type, e.riders.clone()))
            .or_insert(id);
    }
    map
}

/// Randomized rounding of an LP solution: each driver independently samples
/// one incident edge with probability x_e (none with the leftover mass);
/// riders landing in several sampled matches stay with the lowest driver id
/// and are trimmed from the rest.  Trimmed matches map back to the edge with
/// the reduced rider set, which downward closure guarantees to exist.
pub fn lpr_round(h: &Hypergraph, frac: &FractionalSolution, seed: u64) -> Result<Solution> {
    let start = Instant::now();
    if frac.x.len() != h.n_edges() {
        return Err(Error::InvalidSpec(
            "fractional solution does not match the hypergraph".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sampled: Vec<EdgeId> = Vec::new();
    for &d in h.driver_ids() {
        let cands: Vec<EdgeId> = h
            .edges_of(d)
            .iter()
            .copied()
            .filter(|&e| frac.x[e] > 1e-9)
            .collect();
        if cands.is_empty() {
            continue;
        }
        let u: f64 = rng.random();
        let mut cum = 0.0;
        for &e in &cands {
            cum += frac.x[e];
            if u < cum {
                sampled.push(e);
                break;
            }
        }
    }
    // First claim wins; drivers are scanned in ascending id order.
    let mut claimed: HashMap<TripId, usize> = HashMap::new();
    for (k, &e) in sampled.iter().enumerate() {
        for &r in &h.edges()[e].riders {
            claimed.entry(r).or_insert(k);
        }
    }
    let index = subset_index(h);
    let mut final_edges = Vec::new();
    for (k, &e) in sampled.iter().enumerate() {
        let edge = &h.edges()[e];
        let keep: Vec<TripId> = edge
            .riders
            .iter()
            .copied()
            .filter(|r| claimed[r] == k)
            .collect();
        if keep.is_empty() {
            continue;
        }
        if keep.len() == edge.riders.len() {
            final_edges.push(e);
            continue;
        }
        match index.get(&(edge.driver, edge.match_type, keep)) {
            Some(&e2) => final_edges.push(e2),
            None => return Err(Error::ClosureViolation { driver: edge.driver }),
        }
    }
    Ok(assemble(h, final_edges, "lpr", start, false))
}
