//! Weighted set packing on the conflict graph: a greedy maximum-weight
//! independent set plus claw-based local search in three flavours.

use std::cmp::Reverse;
use std::collections::BTreeSet;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::feasibility::Hypergraph;
use crate::solvers::{assemble, Solution};

/// Refuse conflict graphs above this many vertex pairs (memory guard).
pub const DEFAULT_CONFLICT_PAIR_BUDGET: usize = 10_000_000;
/// Per-improvement search budget in seconds.
pub const DEFAULT_IMPROVE_LIMIT: f64 = 10.0;
/// Smallest improvement factor: accept only strictly better swaps.
pub const DEFAULT_ALPHA_FACTOR: f64 = 1.0 + 1e-9;

/// One vertex per hyperedge; vertices are adjacent when their hyperedges
/// share any trip.
#[derive(Debug, Clone)]
pub struct ConflictGraph {
    weights: Vec<u32>,
    adj: Vec<Vec<usize>>,
    n_pairs: usize,
}

impl ConflictGraph {
    /// Assembles a graph from explicit parts; neighbor lists must be
    /// strictly ascending, symmetric, and free of self-loops.
    pub fn from_parts(weights: Vec<u32>, adj: Vec<Vec<usize>>) -> Result<Self> {
        if weights.len() != adj.len() {
            return Err(Error::InvalidConfig(
                "conflict graph needs one neighbor list per vertex".into(),
            ));
        }
        let n = weights.len();
        for (v, list) in adj.iter().enumerate() {
            for (i, &u) in list.iter().enumerate() {
                if u >= n || u == v {
                    return Err(Error::InvalidConfig(format!(
                        "bad neighbor {u} on vertex {v}"
                    )));
                }
                if i > 0 && list[i - 1] >= u {
                    return Err(Error::InvalidConfig(format!(
                        "neighbor list of vertex {v} is not strictly ascending"
                    )));
                }
                if adj[u].binary_search(&v).is_err() {
                    return Err(Error::InvalidConfig(format!(
                        "adjacency {v}-{u} is not symmetric"
                    )));
                }
            }
        }
        let n_pairs = adj.iter().map(Vec::len).sum::<usize>() / 2;
        Ok(ConflictGraph {
            weights,
            adj,
            n_pairs,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.weights.len()
    }

    pub fn n_pairs(&self) -> usize {
        self.n_pairs
    }

    pub fn weight(&self, v: usize) -> u32 {
        self.weights[v]
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn adjacent(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }
}

/// Builds the conflict graph of a hypergraph, aborting once the number of
/// distinct intersecting pairs exceeds `pair_budget`.
pub fn to_conflict_graph(h: &Hypergraph, pair_budget: usize) -> Result<ConflictGraph> {
    let n = h.n_edges();
    let mut sets: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    let mut pairs = 0usize;
    let trips = h
        .driver_ids()
        .iter()
        .chain(h.rider_ids().iter())
        .copied()
        .collect::<Vec<_>>();
    for t in trips {
        let incident = h.edges_of(t);
        for (i, &a) in incident.iter().enumerate() {
            for &b in &incident[i + 1..] {
                if sets[a].insert(b) {
                    sets[b].insert(a);
                    pairs += 1;
                    if pairs > pair_budget {
                        return Err(Error::ConflictGraphBudget {
                            pairs,
                            budget: pair_budget,
                        });
                    }
                }
            }
        }
    }
    let weights = h.edges().iter().map(|e| e.weight).collect();
    let adj = sets.into_iter().map(|s| s.into_iter().collect()).collect();
    Ok(ConflictGraph {
        weights,
        adj,
        n_pairs: pairs,
    })
}

/// Maximal independent set by repeated max-weight selection (ties to the
/// lowest vertex id), eliminating the chosen vertex's neighborhood.
pub fn greedy_mwis(g: &ConflictGraph) -> Vec<usize> {
    let n = g.n_vertices();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| (Reverse(g.weights[v]), v));
    let mut alive = vec![true; n];
    let mut picked = Vec::new();
    for v in order {
        if !alive[v] {
            continue;
        }
        picked.push(v);
        for &u in &g.adj[v] {
            alive[u] = false;
        }
    }
    picked.sort_unstable();
    picked
}

/// How an improving claw is chosen within a pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImproveMode {
    /// First improving talon set in enumeration order.
    Any,
    /// Best squared-weight gain over a full scan.
    Best,
    /// Squared-weight criterion, first hit — coincides with [`Any`] at the
    /// smallest improvement factor.
    Square,
}

enum Scan {
    Found(Vec<usize>),
    Exhausted,
    TimedOut,
}

/// Claw local search.  Starting from an independent set, repeatedly replace
/// N(T) ∩ I with an improving talon set T until none is found or a single
/// improvement search exceeds `improve_time_limit` seconds.  Returns the
/// best set seen by linear weight.
pub fn local_search(
    g: &ConflictGraph,
    start: &[usize],
    mode: ImproveMode,
    improve_time_limit: f64,
    alpha_factor: f64,
) -> Result<Vec<usize>> {
    if alpha_factor <= 1.0 {
        return Err(Error::InvalidConfig(
            "improvement factor must exceed 1".into(),
        ));
    }
    let n = g.n_vertices();
    let mut in_set = vec![false; n];
    for &v in start {
        if v >= n {
            return Err(Error::InvalidConfig(format!("vertex {v} out of range")));
        }
        if in_set[v] {
            return Err(Error::NotIndependent(v, v));
        }
        in_set[v] = true;
    }
    for &v in start {
        for &u in &g.adj[v] {
            if in_set[u] {
                return Err(Error::NotIndependent(v.min(u), v.max(u)));
            }
        }
    }

    let k = g.weights.iter().max().map_or(1, |&w| w as usize + 1);
    let mut best: Vec<usize> = start.to_vec();
    best.sort_unstable();
    let mut best_weight: u64 = best.iter().map(|&v| g.weights[v] as u64).sum();
    let mut current_weight = best_weight;

    loop {
        let scan = find_improvement(g, &in_set, k, mode, improve_time_limit, alpha_factor);
        let talons = match scan {
            Scan::Found(t) => t,
            Scan::Exhausted | Scan::TimedOut => break,
        };
        for &t in &talons {
            for &u in &g.adj[t] {
                if in_set[u] {
                    in_set[u] = false;
                    current_weight -= g.weights[u] as u64;
                }
            }
        }
        for &t in &talons {
            in_set[t] = true;
            current_weight += g.weights[t] as u64;
        }
        if current_weight > best_weight {
            best_weight = current_weight;
            best = (0..n).filter(|&v| in_set[v]).collect();
        }
    }
    Ok(best)
}

/// One improvement search: centers in vertex-id order, talon sets in
/// lexicographic id order, talons drawn from the center's neighborhood,
/// outside I and mutually non-adjacent, at most k of them.
fn find_improvement(
    g: &ConflictGraph,
    in_set: &[bool],
    k: usize,
    mode: ImproveMode,
    limit: f64,
    alpha: f64,
) -> Scan {
    let clock = Instant::now();
    let mut best_talons: Option<Vec<usize>> = None;
    let mut best_gain = 0.0f64;
    for center in 0..g.n_vertices() {
        if clock.elapsed().as_secs_f64() >= limit {
            return Scan::TimedOut;
        }
        let candidates: Vec<usize> = g.adj[center]
            .iter()
            .copied()
            .filter(|&v| !in_set[v])
            .collect();
        let mut talons = Vec::new();
        if let Some(found) = extend_talons(
            g,
            in_set,
            k,
            mode,
            alpha,
            &candidates,
            0,
            &mut talons,
            &mut best_talons,
            &mut best_gain,
            &clock,
            limit,
        ) {
            return found;
        }
    }
    match best_talons {
        Some(t) => Scan::Found(t),
        None => Scan::Exhausted,
    }
}

#[allow(clippy::too_many_arguments)]
fn extend_talons(
    g: &ConflictGraph,
    in_set: &[bool],
    k: usize,
    mode: ImproveMode,
    alpha: f64,
    candidates: &[usize],
    from: usize,
    talons: &mut Vec<usize>,
    best_talons: &mut Option<Vec<usize>>,
    best_gain: &mut f64,
    clock: &Instant,
    limit: f64,
) -> Option<Scan> {
    if !talons.is_empty() {
        let gain = improvement_gain(g, in_set, talons, alpha);
        if gain > 0.0 {
            match mode {
                ImproveMode::Any | ImproveMode::Square => {
                    return Some(Scan::Found(talons.clone()));
                }
                ImproveMode::Best => {
                    if gain > *best_gain || best_talons.is_none() {
                        *best_gain = gain;
                        *best_talons = Some(talons.clone());
                    }
                }
            }
        }
    }
    if talons.len() == k {
        return None;
    }
    for (i, &v) in candidates.iter().enumerate().skip(from) {
        if clock.elapsed().as_secs_f64() >= limit {
            return Some(Scan::TimedOut);
        }
        if talons.iter().any(|&t| g.adjacent(t, v)) {
            continue;
        }
        talons.push(v);
        let found = extend_talons(
            g,
            in_set,
            k,
            mode,
            alpha,
            candidates,
            i + 1,
            talons,
            best_talons,
            best_gain,
            clock,
            limit,
        );
        talons.pop();
        if found.is_some() {
            return found;
        }
    }
    None
}

/// Squared-weight gain of swapping in T: Σ w(T)² − α · Σ w(N(T) ∩ I)²;
/// positive means improving.
fn improvement_gain(g: &ConflictGraph, in_set: &[bool], talons: &[usize], alpha: f64) -> f64 {
    let gained: f64 = talons
        .iter()
        .map(|&t| (g.weights[t] as f64).powi(2))
        .sum();
    let mut displaced = BTreeSet::new();
    for &t in talons {
        for &u in &g.adj[t] {
            if in_set[u] {
                displaced.insert(u);
            }
        }
    }
    let lost: f64 = displaced
        .iter()
        .map(|&u| (g.weights[u] as f64).powi(2))
        .sum();
    gained - alpha * lost
}

/// Which packing heuristic to run on the conflict graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetAlgo {
    Greedy,
    AnyImp,
    BestImp,
    SquareImp,
}

impl SetAlgo {
    pub fn name(self) -> &'static str {
        match self {
            SetAlgo::Greedy => "greedy",
            SetAlgo::AnyImp => "anyimp",
            SetAlgo::BestImp => "bestimp",
            SetAlgo::SquareImp => "squareimp",
        }
    }
}

/// Full pipeline: conflict graph, greedy seed, optional local search.
pub fn solve(
    h: &Hypergraph,
    algo: SetAlgo,
    pair_budget: usize,
    improve_time_limit: f64,
    alpha_factor: f64,
) -> Result<Solution> {
    let start = Instant::now();
    let g = to_conflict_graph(h, pair_budget)?;
    let seed = greedy_mwis(&g);
    let picked = match algo {
        SetAlgo::Greedy => seed,
        SetAlgo::AnyImp => local_search(&g, &seed, ImproveMode::Any, improve_time_limit, alpha_factor)?,
        SetAlgo::BestImp => local_search(&g, &seed, ImproveMode::Best, improve_time_limit, alpha_factor)?,
        SetAlgo::SquareImp => {
            local_search(&g, &seed, ImproveMode::Square, improve_time_limit, alpha_factor)?
        }
    };
    Ok(assemble(h, picked, algo.name(), start, false))
}
