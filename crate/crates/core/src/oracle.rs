//! Ground-truth machinery: exhaustive optimum, an independent feasibility
//! verifier that replays routes from scratch, and the 3DM reduction used to
//! generate adversarial instances.

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::error::{Error, Result};
use crate::feasibility::{FeasibleMatch, Hypergraph};
use crate::network::{scale_secs, RoadTransitNetwork};
use crate::solvers::Solution;
use crate::trips::{MatchType, Trip};
use crate::{NodeId, TripId};

/// Edge-count ceiling for the exhaustive search (~4M subsets worst case).
pub const BRUTE_FORCE_CAP: usize = 22;

/// Exact maximum total weight over all pairwise-disjoint edge subsets.
pub fn brute_force_opt(h: &Hypergraph) -> Result<u32> {
    brute_force_opt_with_cap(h, BRUTE_FORCE_CAP)
}

pub fn brute_force_opt_with_cap(h: &Hypergraph, cap: usize) -> Result<u32> {
    if h.n_edges() > cap {
        return Err(Error::BruteForceCap {
            edges: h.n_edges(),
            cap,
        });
    }
    fn rec(h: &Hypergraph, k: usize, used: &mut HashSet<TripId>) -> u32 {
        if k == h.n_edges() {
            return 0;
        }
        let skip = rec(h, k + 1, used);
        let e = &h.edges()[k];
        if e.trips().all(|t| !used.contains(&t)) {
            for t in e.trips() {
                used.insert(t);
            }
            let take = e.weight + rec(h, k + 1, used);
            for t in e.trips() {
                used.remove(&t);
            }
            skip.max(take)
        } else {
            skip
        }
    }
    Ok(rec(h, 0, &mut HashSet::new()))
}

/// True when every multi-rider edge has all of its one-smaller subsets
/// present for the same driver and match type.
pub fn check_downward_closure(h: &Hypergraph) -> bool {
    let sets: HashSet<(TripId, MatchType, &[TripId])> = h
        .edges()
        .iter()
        .map(|e| (e.driver, e.match_type, e.riders.as_slice()))
        .collect();
    h.edges().iter().all(|e| {
        if e.riders.len() < 2 {
            return true;
        }
        e.riders.iter().all(|skip| {
            let sub: Vec<TripId> = e.riders.iter().copied().filter(|r| r != skip).collect();
            sets.contains(&(e.driver, e.match_type, sub.as_slice()))
        })
    })
}

/// A three-dimensional matching instance over index sets of size `q`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThreeDMInstance {
    pub q: usize,
    pub triples: Vec<(usize, usize, usize)>,
}

impl ThreeDMInstance {
    pub fn new(q: usize, triples: Vec<(usize, usize, usize)>) -> Result<Self> {
        let inst = ThreeDMInstance { q, triples };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        if self.q == 0 {
            return Err(Error::InvalidConfig("3DM instance needs q >= 1".into()));
        }
        for &(a, b, c) in &self.triples {
            if a >= self.q || b >= self.q || c >= self.q {
                return Err(Error::InvalidConfig(format!(
                    "3DM triple ({a}, {b}, {c}) out of range for q = {}",
                    self.q
                )));
            }
        }
        Ok(())
    }

    /// Text format: the first non-empty line is `q`, each following
    /// non-empty line one zero-based triple `a b c`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let q: usize = lines
            .next()
            .ok_or_else(|| Error::InvalidConfig("empty 3DM input".into()))?
            .parse()
            .map_err(|_| Error::InvalidConfig("3DM input must start with q".into()))?;
        let mut triples = Vec::new();
        for line in lines {
            let parts: Vec<usize> = line
                .split_whitespace()
                .map(|w| {
                    w.parse()
                        .map_err(|_| Error::InvalidConfig(format!("bad 3DM triple line: {line}")))
                })
                .collect::<Result<_>>()?;
            let [a, b, c] = parts[..] else {
                return Err(Error::InvalidConfig(format!(
                    "3DM triple line needs three fields: {line}"
                )));
            };
            triples.push((a, b, c));
        }
        Self::new(q, triples)
    }
}

/// The reduction to a match hypergraph: drivers are A (capacity 2), riders
/// are B shifted by q and C shifted by 2q; each triple contributes its pair
/// edge and the two singletons, so the result is downward closed.  Edges
/// carry no geometry.
pub fn from_3dm(inst: &ThreeDMInstance) -> Result<Hypergraph> {
    inst.validate()?;
    let q = inst.q;
    let mut edges = Vec::new();
    let mut seen = HashSet::new();
    for &(a, b, c) in &inst.triples {
        let rb = q + b;
        let rc = 2 * q + c;
        for riders in [vec![rb, rc], vec![rb], vec![rc]] {
            if seen.insert((a, riders.clone())) {
                let weight = riders.len() as u32;
                edges.push(FeasibleMatch {
                    driver: a,
                    riders,
                    route: vec![],
                    station: None,
                    match_type: MatchType::Type1,
                    weight,
                });
            }
        }
    }
    Hypergraph::from_edges(edges)
}

/// Outcome of a verification run: `ok` with no diagnostic, or the first
/// violated constraint by name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyReport {
    pub ok: bool,
    pub diagnostic: Option<String>,
}

impl VerifyReport {
    fn fail(msg: String) -> Self {
        VerifyReport {
            ok: false,
            diagnostic: Some(msg),
        }
    }
    fn pass() -> Self {
        VerifyReport {
            ok: true,
            diagnostic: None,
        }
    }
}

/// Independent re-check of a solution: disjointness over drivers and riders,
/// served-set and value accounting, and a from-scratch replay of every route
/// with its own time arithmetic.  Replay is skipped for edges without
/// geometry (abstract instances) and when no network is supplied.
pub fn verify_solution(
    h: &Hypergraph,
    sol: &Solution,
    net: Option<&RoadTransitNetwork>,
    trips: &[Trip],
) -> Result<VerifyReport> {
    for &e in &sol.matches {
        if e >= h.n_edges() {
            return Err(Error::DanglingEdge(e));
        }
    }
    let mut drivers = HashSet::new();
    let mut riders = HashSet::new();
    for &e in &sol.matches {
        let edge = &h.edges()[e];
        if !drivers.insert(edge.driver) {
            return Ok(VerifyReport::fail(format!(
                "driver disjointness: trip {} appears in two matches",
                edge.driver
            )));
        }
        for &r in &edge.riders {
            if !riders.insert(r) {
                return Ok(VerifyReport::fail(format!(
                    "rider disjointness: rider {r} appears in two matches"
                )));
            }
        }
    }
    let mut served: Vec<TripId> = riders.iter().copied().collect();
    served.sort_unstable();
    if served != sol.served {
        return Ok(VerifyReport::fail("served set mismatch".into()));
    }
    if sol.value as usize != served.len() {
        return Ok(VerifyReport::fail(format!(
            "value mismatch: value {} vs {} served riders",
            sol.value,
            served.len()
        )));
    }
    if let Some(net) = net {
        let table: HashMap<TripId, &Trip> = trips.iter().map(|t| (t.id, t)).collect();
        for &e in &sol.matches {
            let edge = &h.edges()[e];
            if edge.station.is_none() {
                continue;
            }
            if let Err(msg) = replay_edge(edge, net, &table) {
                return Ok(VerifyReport::fail(format!("edge {e}: {msg}")));
            }
        }
    }
    Ok(VerifyReport::pass())
}

/// Replays one match from nothing but the route, the trip table, and the
/// network.  On success returns each rider's on-route duration in rider
/// order; on failure the first violated constraint by name.
pub(crate) fn replay_edge(
    edge: &FeasibleMatch,
    net: &RoadTransitNetwork,
    table: &HashMap<TripId, &Trip>,
) -> std::result::Result<Vec<u32>, String> {
    let driver = table
        .get(&edge.driver)
        .ok_or_else(|| format!("unknown trip {}", edge.driver))?;
    let mut riders = Vec::new();
    for &r in &edge.riders {
        riders.push(*table.get(&r).ok_or_else(|| format!("unknown trip {r}"))?);
    }
    let mt = edge.match_type;
    if !driver.is_driver() {
        return Err(format!("trip {} is not a driver", driver.id));
    }
    if riders.iter().any(|r| r.is_driver()) {
        return Err("a driver is listed as a rider".into());
    }
    if edge.riders.len() as u32 > driver.capacity() {
        return Err("capacity exceeded".into());
    }
    if !driver.allows(mt) || riders.iter().any(|r| !r.allows(mt)) {
        return Err("match type not allowed".into());
    }
    let stops: BTreeSet<NodeId> = riders
        .iter()
        .map(|r| match mt {
            MatchType::Type1 => r.origin,
            MatchType::Type2 => r.dest,
        })
        .collect();
    if stops.len() as u32 > driver.stops_limit() {
        return Err("stop budget exceeded".into());
    }
    let route = &edge.route;
    if route.len() < 2 || route[0] != driver.origin || *route.last().unwrap() != driver.dest {
        return Err("route endpoints do not match the driver trip".into());
    }
    let s = edge.station.expect("replay only runs on concrete edges");

    // Pure drive times along the route.
    let mut cum = vec![0u32; route.len()];
    for i in 1..route.len() {
        let leg = net
            .travel_time(route[i - 1], route[i])
            .map_err(|_| "illegal route leg".to_string())?;
        cum[i] = cum[i - 1] + leg;
    }
    // Transfer index: the last visit for a Type 1 route (pick-ups precede
    // it), the first for Type 2 (drop-offs follow it).
    let s_pos = match mt {
        MatchType::Type1 => route.iter().rposition(|&v| v == s),
        MatchType::Type2 => route.iter().position(|&v| v == s),
    }
    .ok_or_else(|| "station not on route".to_string())?;

    let z = driver.detour.unwrap_or(0);
    let base = match &driver.preferred_path {
        Some(p) => net
            .path_time(p)
            .map_err(|_| "illegal preferred path".to_string())?,
        None => net
            .travel_time(driver.origin, driver.dest)
            .map_err(|_| "no direct drive".to_string())?,
    };
    let gamma = driver.max_duration.min(base + z);

    // Per-rider transit legs and acceptance budgets.
    let mut access = Vec::new(); // T2: transit to the station
    let mut onward = Vec::new(); // T1: transit from the station
    let mut caps = Vec::new();
    for r in &riders {
        let baseline = net
            .transit_duration(r.origin, r.dest)
            .map_err(|_| format!("rider {} has no transit benchmark", r.id))?;
        caps.push(
            r.max_duration
                .min(scale_secs(baseline, r.accept_threshold())),
        );
        match mt {
            MatchType::Type1 => onward.push(
                net.transit_duration(s, r.dest)
                    .map_err(|_| format!("rider {} has no transit leg from the station", r.id))?,
            ),
            MatchType::Type2 => access.push(
                net.transit_duration(r.origin, s)
                    .map_err(|_| format!("rider {} has no transit leg to the station", r.id))?,
            ),
        }
    }

    // Each rider boards (Type 1) or alights (Type 2) at a route position
    // holding their node on the correct side of the transfer.  Co-located
    // riders make the slotting ambiguous, so accept if any injective
    // assignment passes; diagnostics come from the canonical one.
    let mut slot_choices: Vec<Vec<usize>> = Vec::new();
    for r in &riders {
        let node = match mt {
            MatchType::Type1 => r.origin,
            MatchType::Type2 => r.dest,
        };
        let range: Vec<usize> = match mt {
            MatchType::Type1 => (0..=s_pos).collect(),
            MatchType::Type2 => (s_pos..route.len() - 1).collect(),
        };
        let occs: Vec<usize> = range.into_iter().filter(|&i| route[i] == node).collect();
        if occs.is_empty() {
            return Err(format!(
                "rider {} is on the wrong side of the transfer",
                r.id
            ));
        }
        slot_choices.push(occs);
    }

    let mut first_failure: Option<String> = None;
    let mut assignment = vec![0usize; riders.len()];
    let mut used = HashSet::new();
    let mut durations = None;
    try_assignments(
        0,
        &mut assignment,
        &mut used,
        &slot_choices,
        &mut first_failure,
        &mut durations,
        &|slots| {
            check_times(
                driver, &riders, mt, &cum, s_pos, gamma, &access, &onward, &caps, slots,
            )
        },
    );
    durations.ok_or_else(|| first_failure.unwrap_or_else(|| "no feasible boarding assignment".into()))
}

/// Depth-first product over per-rider slot candidates; injective only.
fn try_assignments(
    k: usize,
    assignment: &mut Vec<usize>,
    used: &mut HashSet<usize>,
    choices: &[Vec<usize>],
    first_failure: &mut Option<String>,
    durations: &mut Option<Vec<u32>>,
    check: &dyn Fn(&[usize]) -> std::result::Result<Vec<u32>, String>,
) -> bool {
    if k == choices.len() {
        match check(assignment) {
            Ok(d) => {
                *durations = Some(d);
                return true;
            }
            Err(msg) => {
                first_failure.get_or_insert(msg);
                return false;
            }
        }
    }
    for &slot in &choices[k] {
        if used.insert(slot) {
            assignment[k] = slot;
            if try_assignments(
                k + 1,
                assignment,
                used,
                choices,
                first_failure,
                durations,
                check,
            ) {
                return true;
            }
            used.remove(&slot);
        }
    }
    false
}

#[allow(clippy::too_many_arguments)]
fn check_times(
    driver: &Trip,
    riders: &[&Trip],
    mt: MatchType,
    cum: &[u32],
    s_pos: usize,
    gamma: u32,
    access: &[u32],
    onward: &[u32],
    caps: &[u32],
    slots: &[usize],
) -> std::result::Result<Vec<u32>, String> {
    let end = cum[cum.len() - 1];
    // Latest departure that still meets every rider.
    let mut eta = driver.earliest_depart as i64;
    for (y, r) in riders.iter().enumerate() {
        let ready = match mt {
            MatchType::Type1 => r.earliest_depart as i64 - cum[slots[y]] as i64,
            MatchType::Type2 => (r.earliest_depart + access[y]) as i64 - cum[s_pos] as i64,
        };
        eta = eta.max(ready);
    }
    let eta = eta as u32;
    if eta + end > driver.latest_arrive {
        return Err("driver arrival window".into());
    }
    if end > gamma {
        return Err("driver duration budget".into());
    }
    let mut durations = Vec::with_capacity(riders.len());
    for (y, r) in riders.iter().enumerate() {
        match mt {
            MatchType::Type1 => {
                let arrive = eta + cum[s_pos] + onward[y];
                if arrive > r.latest_arrive {
                    return Err(format!("rider {} arrival window", r.id));
                }
                let dur = (cum[s_pos] - cum[slots[y]]) + onward[y];
                if dur > caps[y] {
                    return Err(format!("acceptable-route inequality for rider {}", r.id));
                }
                durations.push(dur);
            }
            MatchType::Type2 => {
                let arrive = eta + cum[slots[y]];
                if arrive > r.latest_arrive {
                    return Err(format!("rider {} arrival window", r.id));
                }
                let dur = access[y] + (cum[slots[y]] - cum[s_pos]);
                if dur > caps[y] {
                    return Err(format!("acceptable-route inequality for rider {}", r.id));
                }
                durations.push(dur);
            }
        }
    }
    Ok(durations)
}
