//! Feasible-match enumeration.
//!
//! Matching runs in two phases over a snapshot of announced trips: phase one
//! finds every driver-rider pair that can share a leg through a transfer
//! station (base matches), phase two grows those pairs into multi-rider
//! matches, reusing the stored route of the smaller match and inserting one
//! rider at a time.  An optional reduction pass prunes base matches between
//! the phases so dense instances stay tractable.
//!
//! All iteration orders are fixed (drivers in input order, riders by label,
//! stations by node id, orderings lexicographic), so the produced edge list
//! is deterministic for a given input.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{scale_secs, RoadTransitNetwork};
use crate::trips::{MatchType, Trip};
use crate::{EdgeId, NodeId, TripId};

/// A transfer station a trip can reach in time, with the earliest moment the
/// trip can be there.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StationTimeTuple {
    pub station: NodeId,
    pub earliest_arrival: u32,
}

/// One feasible match: a driver, the riders it can serve together, and the
/// route that serves them.  Type 1 routes run (origin, pick-ups..., station,
/// destination); Type 2 routes run (origin, station, drop-offs...,
/// destination).  `station` is absent only for abstract instances that carry
/// no geometry (see the oracle module).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeasibleMatch {
    pub driver: TripId,
    /// Rider ids, ascending.
    pub riders: Vec<TripId>,
    pub route: Vec<NodeId>,
    pub station: Option<NodeId>,
    pub match_type: MatchType,
    pub weight: u32,
}

impl FeasibleMatch {
    /// All trips touched by this match: the driver and every rider.
    pub fn trips(&self) -> impl Iterator<Item = TripId> + '_ {
        std::iter::once(self.driver).chain(self.riders.iter().copied())
    }
}

/// The bipartite hypergraph of feasible matches.  Vertices are exactly the
/// trips that occur in some edge, so the graph never holds isolated vertices.
#[derive(Debug, Clone, Default)]
pub struct Hypergraph {
    edges: Vec<FeasibleMatch>,
    incidence: HashMap<TripId, Vec<EdgeId>>,
    driver_ids: Vec<TripId>,
    rider_ids: Vec<TripId>,
}

#[derive(Serialize, Deserialize)]
struct HypergraphFile {
    edges: Vec<FeasibleMatch>,
}

impl Hypergraph {
    pub fn from_edges(edges: Vec<FeasibleMatch>) -> Result<Self> {
        let mut incidence: HashMap<TripId, Vec<EdgeId>> = HashMap::new();
        let mut driver_ids = BTreeSet::new();
        let mut rider_ids = BTreeSet::new();
        for (id, e) in edges.iter().enumerate() {
            if e.riders.is_empty() {
                return Err(Error::InvalidSpec(format!("edge {id} has no riders")));
            }
            if e.riders.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidSpec(format!(
                    "edge {id} riders must be ascending and distinct"
                )));
            }
            if e.riders.contains(&e.driver) {
                return Err(Error::InvalidSpec(format!(
                    "edge {id} lists its driver as a rider"
                )));
            }
            if e.weight as usize != e.riders.len() {
                return Err(Error::InvalidSpec(format!(
                    "edge {id} weight {} != rider count {}",
                    e.weight,
                    e.riders.len()
                )));
            }
            driver_ids.insert(e.driver);
            rider_ids.extend(e.riders.iter().copied());
            for t in e.trips() {
                incidence.entry(t).or_default().push(id);
            }
        }
        Ok(Hypergraph {
            edges,
            incidence,
            driver_ids: driver_ids.into_iter().collect(),
            rider_ids: rider_ids.into_iter().collect(),
        })
    }

    pub fn edges(&self) -> &[FeasibleMatch] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> Result<&FeasibleMatch> {
        self.edges.get(id).ok_or(Error::DanglingEdge(id))
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edge ids containing the trip, ascending.
    pub fn edges_of(&self, trip: TripId) -> &[EdgeId] {
        self.incidence.get(&trip).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn driver_ids(&self) -> &[TripId] {
        &self.driver_ids
    }

    pub fn rider_ids(&self) -> &[TripId] {
        &self.rider_ids
    }

    /// True when any edge lacks geometry (route replay is impossible).
    pub fn is_abstract(&self) -> bool {
        self.edges.iter().any(|e| e.station.is_none())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&HypergraphFile {
            edges: self.edges.clone(),
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: HypergraphFile = serde_json::from_str(text)?;
        Self::from_edges(file.edges)
    }
}

/// Pruning caps applied between the two phases: keep `x_pct` percent of each
/// driver's base matches, at most `y` feasible matches per driver, and at
/// most `z` base matches per rider.  `None` means unlimited.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReductionConfig {
    pub x_pct: f64,
    pub y: Option<usize>,
    pub z: Option<usize>,
}

impl ReductionConfig {
    pub fn unlimited() -> Self {
        ReductionConfig {
            x_pct: 100.0,
            y: None,
            z: None,
        }
    }

    /// The named caps used throughout the experiments.
    pub fn preset(name: &str) -> Option<Self> {
        let (x_pct, y, z) = match name.to_ascii_lowercase().as_str() {
            "small1" => (20.0, 300, 10),
            "small2" => (20.0, 600, 10),
            "small3" => (20.0, 300, 20),
            "small4" => (20.0, 600, 20),
            "medium1" => (30.0, 300, 10),
            "medium2" => (30.0, 600, 10),
            "medium3" => (30.0, 300, 20),
            "medium4" => (30.0, 600, 20),
            "large1" => (40.0, 300, 10),
            "large2" => (40.0, 600, 10),
            "large3" => (40.0, 300, 20),
            "large4" => (40.0, 600, 20),
            "huge1" => (100.0, 600, 10),
            "huge2" => (100.0, 2500, 20),
            "huge3" => (100.0, 10000, 30),
            _ => return None,
        };
        Some(ReductionConfig {
            x_pct,
            y: Some(y),
            z: Some(z),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_pct > 0.0 && self.x_pct <= 100.0) {
            return Err(Error::InvalidConfig(
                "reduction percentage must lie in (0, 100]".into(),
            ));
        }
        if self.y == Some(0) || self.z == Some(0) {
            return Err(Error::InvalidConfig(
                "reduction caps must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Per-trip preprocessing

/// A trip's feasible stations for one role, with the leg times the match
/// checks need: `access` is the time from the trip's origin to the station
/// (car for drivers and Type 1 riders, transit for Type 2 riders); `onward`
/// is the time from the station to the trip's destination (car for drivers
/// and Type 2 riders, transit for Type 1 riders).
#[derive(Debug, Clone, Default)]
struct StationSet {
    stations: Vec<NodeId>,
    access: HashMap<NodeId, u32>,
    onward: HashMap<NodeId, u32>,
}

impl StationSet {
    fn tuples(&self, alpha: u32) -> Vec<StationTimeTuple> {
        self.stations
            .iter()
            .map(|&s| StationTimeTuple {
                station: s,
                earliest_arrival: alpha + self.access[&s],
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
enum DriverMode {
    /// Routes are searched over stations and pick-up orders.
    Search,
    /// Zero-detour driver with a declared path through a station: the route
    /// is pinned to that path.
    Fixed { station_pos: usize },
    /// Zero-detour path with no station on it: no match can place a transfer.
    NoStation,
}

#[derive(Debug, Clone)]
struct DriverPrep {
    gamma: u32,
    mode: DriverMode,
    sdo: StationSet,
}

#[derive(Debug, Clone)]
struct RiderPrep {
    /// min(max duration, theta * fastest transit duration): the right-hand
    /// side of the acceptable-route inequality.
    cap: u32,
    sdo: BTreeMap<MatchType, StationSet>,
}

/// Shared state for one matching run: the network, the trip table, and all
/// per-trip station preprocessing.
pub struct MatchContext<'a> {
    net: &'a RoadTransitNetwork,
    drivers: &'a [Trip],
    trips: BTreeMap<TripId, &'a Trip>,
    driver_prep: HashMap<TripId, DriverPrep>,
    rider_prep: HashMap<TripId, RiderPrep>,
    rider_ids: Vec<TripId>,
}

impl<'a> MatchContext<'a> {
    pub fn new(
        net: &'a RoadTransitNetwork,
        drivers: &'a [Trip],
        riders: &'a [Trip],
    ) -> Result<Self> {
        let mut trips = BTreeMap::new();
        for t in drivers.iter().chain(riders) {
            t.validate()?;
            if trips.insert(t.id, t).is_some() {
                return Err(Error::InvalidTrip {
                    id: t.id,
                    reason: "duplicate trip id".into(),
                });
            }
        }
        for d in drivers {
            if !d.is_driver() {
                return Err(Error::InvalidTrip {
                    id: d.id,
                    reason: "rider listed among drivers".into(),
                });
            }
        }
        for r in riders {
            if r.is_driver() {
                return Err(Error::InvalidTrip {
                    id: r.id,
                    reason: "driver listed among riders".into(),
                });
            }
        }

        let mut stations: Vec<NodeId> = net.stations.clone();
        stations.sort_unstable();
        stations.dedup();

        let mut driver_prep = HashMap::new();
        for d in drivers {
            driver_prep.insert(d.id, prep_driver(d, net, &stations)?);
        }
        let mut rider_prep = HashMap::new();
        for r in riders {
            rider_prep.insert(r.id, prep_rider(r, net, &stations));
        }
        Ok(MatchContext {
            net,
            drivers,
            trips,
            driver_prep,
            rider_prep,
            rider_ids: riders.iter().map(|r| r.id).collect(),
        })
    }

    pub fn trip(&self, id: TripId) -> Result<&Trip> {
        self.trips.get(&id).copied().ok_or(Error::InvalidTrip {
            id,
            reason: "unknown trip id".into(),
        })
    }

    fn t(&self, u: NodeId, v: NodeId) -> Result<u32> {
        self.net.travel_time(u, v)
    }

    /// Phase one: every feasible single-rider match, grouped by driver in
    /// input order, Type 1 before Type 2 within a driver, riders in input
    /// order within a type.
    pub fn phase_one(&self) -> Result<Hypergraph> {
        let mut edges = Vec::new();
        for driver in self.drivers {
            for mt in [MatchType::Type1, MatchType::Type2] {
                if !driver.allows(mt) {
                    continue;
                }
                for &rid in &self.rider_ids {
                    let rider = self.trip(rid)?;
                    if !rider.allows(mt) {
                        continue;
                    }
                    if let Some(m) = self.try_pair(driver, rider, mt)? {
                        edges.push(m);
                    }
                }
            }
        }
        Hypergraph::from_edges(edges)
    }

    /// Base match search for one (driver, rider, type): stations ascending,
    /// first feasible wins.
    fn try_pair(
        &self,
        driver: &Trip,
        rider: &Trip,
        mt: MatchType,
    ) -> Result<Option<FeasibleMatch>> {
        let dp = &self.driver_prep[&driver.id];
        let rp = &self.rider_prep[&rider.id];
        let Some(rsdo) = rp.sdo.get(&mt) else {
            return Ok(None);
        };
        match dp.mode {
            DriverMode::NoStation => return Ok(None),
            DriverMode::Fixed { station_pos } => {
                return self.try_pair_fixed(driver, rider, mt, dp, rp, station_pos)
            }
            DriverMode::Search => {}
        }

        for &s in &dp.sdo.stations {
            if !rsdo.access.contains_key(&s) {
                continue;
            }
            let t_sdi = dp.sdo.onward[&s];
            let feasible = match mt {
                MatchType::Type1 => {
                    // Drive to the rider, then together to the station; the
                    // rider rides transit from there.
                    let t_oioj = self.t(driver.origin, rider.origin)?;
                    let t_ojs = rsdo.access[&s];
                    let t1 = t_oioj + t_ojs;
                    let t2 = t_ojs;
                    let eta =
                        eta_from(driver.earliest_depart, &[(rider.earliest_depart, t_oioj)]);
                    let t = eta + t1;
                    let that_sdj = rsdo.onward[&s];
                    t + t_sdi <= driver.latest_arrive
                        && t1 + t_sdi <= dp.gamma
                        && t + that_sdj <= rider.latest_arrive
                        && t2 + that_sdj <= rp.cap
                }
                MatchType::Type2 => {
                    // The rider takes transit to the station and is driven
                    // from there to their destination.
                    let t_ois = dp.sdo.access[&s];
                    let that_ojs = rsdo.access[&s];
                    let t_sdj = rsdo.onward[&s];
                    let t_djdi = self.t(rider.dest, driver.dest)?;
                    let eta = eta_from(
                        driver.earliest_depart,
                        &[(rider.earliest_depart + that_ojs, t_ois)],
                    );
                    let t = eta + t_ois;
                    t + t_sdj + t_djdi <= driver.latest_arrive
                        && t_ois + t_sdj + t_djdi <= dp.gamma
                        && t + t_sdj <= rider.latest_arrive
                        && that_ojs + t_sdj <= rp.cap
                }
            };
            if feasible {
                let route = match mt {
                    MatchType::Type1 => vec![driver.origin, rider.origin, s, driver.dest],
                    MatchType::Type2 => vec![driver.origin, s, rider.dest, driver.dest],
                };
                return Ok(Some(FeasibleMatch {
                    driver: driver.id,
                    riders: vec![rider.id],
                    route,
                    station: Some(s),
                    match_type: mt,
                    weight: 1,
                }));
            }
        }
        Ok(None)
    }

    /// Base match against a pinned route: the rider must already be on the
    /// declared path, on the correct side of its station.
    fn try_pair_fixed(
        &self,
        driver: &Trip,
        rider: &Trip,
        mt: MatchType,
        dp: &DriverPrep,
        rp: &RiderPrep,
        station_pos: usize,
    ) -> Result<Option<FeasibleMatch>> {
        let path = driver
            .preferred_path
            .as_ref()
            .expect("fixed mode has a path");
        let s = path[station_pos];
        let rsdo = &rp.sdo[&mt];
        if !rsdo.access.contains_key(&s) {
            return Ok(None);
        }
        let leg = |a: usize, b: usize| self.net.path_time(&path[a..=b]);
        let t_full = leg(0, path.len() - 1)?;
        let t_to_s = leg(0, station_pos)?;
        let t_s_end = t_full - t_to_s;
        let feasible = match mt {
            MatchType::Type1 => {
                let Some(idx) = path[..=station_pos].iter().position(|&v| v == rider.origin)
                else {
                    return Ok(None);
                };
                let cum = leg(0, idx)?;
                let t2 = t_to_s - cum;
                let eta = eta_from(driver.earliest_depart, &[(rider.earliest_depart, cum)]);
                let t = eta + t_to_s;
                let that_sdj = rsdo.onward[&s];
                t + t_s_end <= driver.latest_arrive
                    && t_full <= dp.gamma
                    && t + that_sdj <= rider.latest_arrive
                    && t2 + that_sdj <= rp.cap
            }
            MatchType::Type2 => {
                let Some(off) = path[station_pos..].iter().position(|&v| v == rider.dest)
                else {
                    return Ok(None);
                };
                let idx = station_pos + off;
                let t_s_dj = leg(station_pos, idx)?;
                let that_ojs = rsdo.access[&s];
                let eta = eta_from(
                    driver.earliest_depart,
                    &[(rider.earliest_depart + that_ojs, t_to_s)],
                );
                let t = eta + t_to_s;
                t + t_s_end <= driver.latest_arrive
                    && t_full <= dp.gamma
                    && t + t_s_dj <= rider.latest_arrive
                    && that_ojs + t_s_dj <= rp.cap
            }
        };
        Ok(feasible.then(|| FeasibleMatch {
            driver: driver.id,
            riders: vec![rider.id],
            route: path.clone(),
            station: Some(s),
            match_type: mt,
            weight: 1,
        }))
    }

    /// Try to grow `m` by one rider.  Stations common to the whole party are
    /// scanned in ascending node order; within a station, the candidate
    /// orders are the insertions of `j` into the stored route, tried in
    /// lexicographic rider-label order.  First feasible wins.
    pub fn feasible_insert(&self, m: &FeasibleMatch, j: TripId) -> Result<Option<FeasibleMatch>> {
        let driver = self.trip(m.driver)?;
        assert!(
            (m.riders.len() as u32) < driver.capacity(),
            "feasible_insert requires spare capacity"
        );
        assert!(!m.riders.contains(&j), "rider already in match");
        let new_rider = self.trip(j)?;
        let mt = m.match_type;
        let dp = &self.driver_prep[&m.driver];
        if matches!(dp.mode, DriverMode::NoStation) {
            return Ok(None);
        }

        // Stop budget: distinct pick-up (Type 1) or drop-off (Type 2) nodes
        // over the grown party.
        let mut unique = BTreeSet::new();
        for &rid in m.riders.iter().chain(std::iter::once(&j)) {
            let tr = self.trip(rid)?;
            unique.insert(match mt {
                MatchType::Type1 => tr.origin,
                MatchType::Type2 => tr.dest,
            });
        }
        if unique.len() as u32 > driver.stops_limit() {
            return Ok(None);
        }

        if let DriverMode::Fixed { station_pos } = dp.mode {
            return self.insert_fixed(m, driver, dp, new_rider, station_pos);
        }

        // Riders in stored route order, then every insertion of j, tried in
        // lexicographic order of the resulting label sequences.
        let member_ids = self.route_rider_order(m)?;
        let mut orderings: Vec<Vec<TripId>> = (0..=member_ids.len())
            .map(|pos| {
                let mut o = member_ids.clone();
                o.insert(pos, j);
                o
            })
            .collect();
        orderings.sort();

        // Intersection of the driver's stations with every rider's.
        let mut common: Vec<NodeId> = dp.sdo.stations.clone();
        for &rid in m.riders.iter().chain(std::iter::once(&j)) {
            let Some(rsdo) = self.rider_prep[&rid].sdo.get(&mt) else {
                return Ok(None);
            };
            common.retain(|s| rsdo.access.contains_key(s));
        }

        for &s in &common {
            for order in &orderings {
                if let Some(m2) = self.check_order(driver, dp, order, s, mt)? {
                    return Ok(Some(m2));
                }
            }
        }
        Ok(None)
    }

    /// Evaluate one (station, rider order) candidate for the given type.
    fn check_order(
        &self,
        driver: &Trip,
        dp: &DriverPrep,
        order: &[TripId],
        s: NodeId,
        mt: MatchType,
    ) -> Result<Option<FeasibleMatch>> {
        let p = order.len();
        let trips: Vec<&Trip> = order
            .iter()
            .map(|&id| self.trip(id))
            .collect::<Result<_>>()?;
        let feasible;
        let route;
        match mt {
            MatchType::Type1 => {
                // cum[y]: travel from the driver's origin to pick-up y.
                let nodes: Vec<NodeId> = trips.iter().map(|t| t.origin).collect();
                let mut cum = vec![0u32; p];
                let mut prev = driver.origin;
                let mut acc = 0u32;
                for (y, &v) in nodes.iter().enumerate() {
                    acc += self.t(prev, v)?;
                    cum[y] = acc;
                    prev = v;
                }
                let t_ps = self.t(nodes[p - 1], s)?;
                let t_i = cum[p - 1] + t_ps;
                let waits: Vec<(u32, u32)> = trips
                    .iter()
                    .zip(&cum)
                    .map(|(tr, &c)| (tr.earliest_depart, c))
                    .collect();
                let eta = eta_from(driver.earliest_depart, &waits);
                let t = eta + t_i;
                let t_sdi = dp.sdo.onward[&s];
                feasible = t + t_sdi <= driver.latest_arrive
                    && t_i + t_sdi <= dp.gamma
                    && trips.iter().enumerate().all(|(y, tr)| {
                        let rp = &self.rider_prep[&tr.id];
                        let that = rp.sdo[&mt].onward[&s];
                        let t_jy = (cum[p - 1] - cum[y]) + t_ps;
                        t + that <= tr.latest_arrive && t_jy + that <= rp.cap
                    });
                let mut r = Vec::with_capacity(p + 3);
                r.push(driver.origin);
                r.extend(&nodes);
                r.push(s);
                r.push(driver.dest);
                route = r;
            }
            MatchType::Type2 => {
                // cumdrop[y]: travel from the station to drop-off y.
                let nodes: Vec<NodeId> = trips.iter().map(|t| t.dest).collect();
                let mut cumdrop = vec![0u32; p];
                let mut prev = s;
                let mut acc = 0u32;
                for (y, &v) in nodes.iter().enumerate() {
                    acc += self.t(prev, v)?;
                    cumdrop[y] = acc;
                    prev = v;
                }
                let t_ois = dp.sdo.access[&s];
                let waits: Vec<(u32, u32)> = trips
                    .iter()
                    .map(|tr| {
                        let rp = &self.rider_prep[&tr.id];
                        (tr.earliest_depart + rp.sdo[&mt].access[&s], t_ois)
                    })
                    .collect();
                let eta = eta_from(driver.earliest_depart, &waits);
                let t = eta + t_ois;
                let t_pd = self.t(nodes[p - 1], driver.dest)?;
                feasible = t + cumdrop[p - 1] + t_pd <= driver.latest_arrive
                    && t_ois + cumdrop[p - 1] + t_pd <= dp.gamma
                    && trips.iter().enumerate().all(|(y, tr)| {
                        let rp = &self.rider_prep[&tr.id];
                        let that_ojs = rp.sdo[&mt].access[&s];
                        t + cumdrop[y] <= tr.latest_arrive && that_ojs + cumdrop[y] <= rp.cap
                    });
                let mut r = Vec::with_capacity(p + 3);
                r.push(driver.origin);
                r.push(s);
                r.extend(&nodes);
                r.push(driver.dest);
                route = r;
            }
        }
        if !feasible {
            return Ok(None);
        }
        let mut riders: Vec<TripId> = order.to_vec();
        riders.sort_unstable();
        Ok(Some(FeasibleMatch {
            driver: driver.id,
            riders,
            route,
            station: Some(s),
            match_type: mt,
            weight: p as u32,
        }))
    }

    /// Insertion against a pinned route: the party's order is the path
    /// order, the station is the declared one.
    fn insert_fixed(
        &self,
        m: &FeasibleMatch,
        driver: &Trip,
        dp: &DriverPrep,
        new_rider: &Trip,
        station_pos: usize,
    ) -> Result<Option<FeasibleMatch>> {
        let path = driver
            .preferred_path
            .as_ref()
            .expect("fixed mode has a path");
        let s = path[station_pos];
        let mt = m.match_type;
        let mut members: Vec<TripId> = m.riders.clone();
        members.push(new_rider.id);
        members.sort_unstable();

        // Locate every rider on the path, on the correct side of the station.
        let mut placed: Vec<(usize, TripId)> = Vec::new();
        for &rid in &members {
            let tr = self.trip(rid)?;
            let on_station = self.rider_prep[&rid]
                .sdo
                .get(&mt)
                .map_or(false, |x| x.access.contains_key(&s));
            if !on_station {
                return Ok(None);
            }
            let idx = match mt {
                MatchType::Type1 => path[..=station_pos].iter().position(|&v| v == tr.origin),
                MatchType::Type2 => path[station_pos..]
                    .iter()
                    .position(|&v| v == tr.dest)
                    .map(|off| station_pos + off),
            };
            let Some(idx) = idx else { return Ok(None) };
            placed.push((idx, rid));
        }
        placed.sort_unstable();

        let leg = |a: usize, b: usize| self.net.path_time(&path[a..=b]);
        let t_full = leg(0, path.len() - 1)?;
        let t_to_s = leg(0, station_pos)?;
        let t_s_end = t_full - t_to_s;
        let feasible = match mt {
            MatchType::Type1 => {
                let mut waits = Vec::new();
                for &(idx, rid) in &placed {
                    waits.push((self.trip(rid)?.earliest_depart, leg(0, idx)?));
                }
                let eta = eta_from(driver.earliest_depart, &waits);
                let t = eta + t_to_s;
                let mut ok = t + t_s_end <= driver.latest_arrive && t_full <= dp.gamma;
                for &(idx, rid) in &placed {
                    let tr = self.trip(rid)?;
                    let rp = &self.rider_prep[&rid];
                    let that = rp.sdo[&mt].onward[&s];
                    let t_jy = t_to_s - leg(0, idx)?;
                    ok = ok && t + that <= tr.latest_arrive && t_jy + that <= rp.cap;
                }
                ok
            }
            MatchType::Type2 => {
                let mut waits = Vec::new();
                for &(_, rid) in &placed {
                    let tr = self.trip(rid)?;
                    let rp = &self.rider_prep[&rid];
                    waits.push((tr.earliest_depart + rp.sdo[&mt].access[&s], t_to_s));
                }
                let eta = eta_from(driver.earliest_depart, &waits);
                let t = eta + t_to_s;
                let mut ok = t + t_s_end <= driver.latest_arrive && t_full <= dp.gamma;
                for &(idx, rid) in &placed {
                    let tr = self.trip(rid)?;
                    let rp = &self.rider_prep[&rid];
                    let t_s_dj = leg(station_pos, idx)?;
                    ok = ok
                        && t + t_s_dj <= tr.latest_arrive
                        && rp.sdo[&mt].access[&s] + t_s_dj <= rp.cap;
                }
                ok
            }
        };
        Ok(feasible.then(|| FeasibleMatch {
            driver: driver.id,
            riders: members.clone(),
            route: path.clone(),
            station: Some(s),
            match_type: mt,
            weight: members.len() as u32,
        }))
    }

    /// Rider ids in the order the stored route visits them; co-located
    /// riders take label order.
    fn route_rider_order(&self, m: &FeasibleMatch) -> Result<Vec<TripId>> {
        if let DriverMode::Fixed { .. } = self.driver_prep[&m.driver].mode {
            // Pinned routes serve riders in path order; the sorted rider set
            // is all the insertion step needs.
            return Ok(m.riders.clone());
        }
        let p = m.riders.len();
        let nodes: &[NodeId] = match m.match_type {
            MatchType::Type1 => &m.route[1..1 + p],
            MatchType::Type2 => &m.route[2..2 + p],
        };
        let mut remaining: Vec<TripId> = m.riders.clone();
        let mut order = Vec::with_capacity(p);
        for &v in nodes {
            let pos = remaining
                .iter()
                .position(|&rid| {
                    self.trips.get(&rid).map_or(false, |t| match m.match_type {
                        MatchType::Type1 => t.origin == v,
                        MatchType::Type2 => t.dest == v,
                    })
                })
                .ok_or_else(|| Error::InvalidSpec("route does not visit its riders".into()))?;
            order.push(remaining.remove(pos));
        }
        Ok(order)
    }

    /// Phase two: grow every base match set by set, keeping downward closure,
    /// optionally capping each driver at `y_cap` total edges.
    pub fn phase_two(&self, base: &Hypergraph, y_cap: Option<usize>) -> Result<Hypergraph> {
        let mut out = Vec::new();
        for driver in self.drivers {
            let p_max = driver.stops_limit().min(driver.capacity()) as usize;
            let budget = y_cap.unwrap_or(usize::MAX);
            let mut count = 0usize;
            for mt in [MatchType::Type1, MatchType::Type2] {
                let base_edges: Vec<&FeasibleMatch> = base
                    .edges_of(driver.id)
                    .iter()
                    .map(|&e| &base.edges()[e])
                    .filter(|e| e.match_type == mt)
                    .collect();
                if base_edges.is_empty() {
                    continue;
                }
                // Retained singletons form the p = 1 layer.
                let mut omega_prev: Vec<FeasibleMatch> = Vec::new();
                for e in base_edges {
                    if count >= budget {
                        break;
                    }
                    out.push((*e).clone());
                    omega_prev.push((*e).clone());
                    count += 1;
                }
                let mut single_riders: Vec<TripId> =
                    omega_prev.iter().map(|e| e.riders[0]).collect();
                single_riders.sort_unstable();
                let mut prev_sets: HashSet<Vec<TripId>> =
                    omega_prev.iter().map(|e| e.riders.clone()).collect();

                for _p in 2..=p_max {
                    if count >= budget || omega_prev.is_empty() {
                        break;
                    }
                    let mut omega_next: Vec<FeasibleMatch> = Vec::new();
                    'parents: for parent in &omega_prev {
                        let max_r = *parent.riders.last().expect("nonempty riders");
                        for &j in single_riders.iter().filter(|&&j| j > max_r) {
                            // Every sibling subset must already be feasible,
                            // or no superset can be.
                            let closed = parent.riders.iter().all(|&q| {
                                let mut sib: Vec<TripId> = parent
                                    .riders
                                    .iter()
                                    .copied()
                                    .filter(|&r| r != q)
                                    .collect();
                                sib.push(j);
                                sib.sort_unstable();
                                prev_sets.contains(&sib)
                            });
                            if !closed {
                                continue;
                            }
                            if let Some(m2) = self.feasible_insert(parent, j)? {
                                out.push(m2.clone());
                                omega_next.push(m2);
                                count += 1;
                                if count >= budget {
                                    break 'parents;
                                }
                            }
                        }
                    }
                    prev_sets = omega_next.iter().map(|e| e.riders.clone()).collect();
                    omega_prev = omega_next;
                }
            }
        }
        Hypergraph::from_edges(out)
    }

    /// The base-match reduction pass; see [`ReductionConfig`].
    pub fn reduce_base_matches(
        &self,
        h: &Hypergraph,
        cfg: &ReductionConfig,
    ) -> Result<Hypergraph> {
        cfg.validate()?;
        assert!(
            h.edges().iter().all(|e| e.weight == 1),
            "reduction applies to base matches only"
        );
        let edges = h.edges();
        let mut removed = vec![false; edges.len()];
        let mut rider_count: HashMap<TripId, usize> = HashMap::new();
        for e in edges {
            *rider_count.entry(e.riders[0]).or_insert(0) += 1;
        }
        let mut driver_edges: BTreeMap<TripId, Vec<EdgeId>> = BTreeMap::new();
        for (id, e) in edges.iter().enumerate() {
            driver_edges.entry(e.driver).or_default().push(id);
        }
        // Heaviest drivers first; ties by id keep the pass deterministic.
        let mut order: Vec<(TripId, usize)> =
            driver_edges.iter().map(|(&d, v)| (d, v.len())).collect();
        order.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));

        for (driver, len) in order {
            if len < 10 {
                continue;
            }
            let ei = &driver_edges[&driver];
            let target = ((len as f64) * cfg.x_pct / 100.0).ceil() as usize;
            let mut cur = len;
            // Step 1: shed riders that are matched plenty elsewhere.
            if let Some(z) = cfg.z {
                let mut scan: Vec<EdgeId> = ei.clone();
                scan.sort_by(|&a, &b| {
                    let (ra, rb) = (edges[a].riders[0], edges[b].riders[0]);
                    rider_count[&rb].cmp(&rider_count[&ra]).then(ra.cmp(&rb))
                });
                for e in scan {
                    let j = edges[e].riders[0];
                    if rider_count[&j] > z {
                        removed[e] = true;
                        *rider_count.get_mut(&j).unwrap() -= 1;
                        cur -= 1;
                    }
                }
            }
            // Step 2: trim the farthest riders down to the percentage cap.
            if cur > target {
                let mut keyed: Vec<(u32, TripId, EdgeId)> = Vec::new();
                for &e in ei.iter().filter(|&&e| !removed[e]) {
                    let edge = &edges[e];
                    let rider = self.trip(edge.riders[0])?;
                    let d = self.t(self.trip(edge.driver)?.origin, rider.origin)?;
                    keyed.push((d, edge.riders[0], e));
                }
                keyed.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
                for (_, _, e) in keyed {
                    if cur <= target {
                        break;
                    }
                    removed[e] = true;
                    *rider_count.get_mut(&edges[e].riders[0]).unwrap() -= 1;
                    cur -= 1;
                }
            }
        }
        let kept: Vec<FeasibleMatch> = edges
            .iter()
            .enumerate()
            .filter(|(id, _)| !removed[*id])
            .map(|(_, e)| e.clone())
            .collect();
        Hypergraph::from_edges(kept)
    }
}

/// Latest driver departure that still reaches every pick-up no earlier than
/// that rider's earliest departure: the driver never waits, so total travel
/// time is minimal.
fn eta_from(driver_alpha: u32, rider_offsets: &[(u32, u32)]) -> u32 {
    let mut eta = driver_alpha as i64;
    for &(alpha, cum) in rider_offsets {
        eta = eta.max(alpha as i64 - cum as i64);
    }
    eta as u32
}

fn prep_driver(d: &Trip, net: &RoadTransitNetwork, stations: &[NodeId]) -> Result<DriverPrep> {
    let detour = d.detour.unwrap_or(0);
    let (gamma, mode) = match &d.preferred_path {
        Some(path) => {
            if path.len() < 2 || path[0] != d.origin || *path.last().unwrap() != d.dest {
                return Err(Error::InvalidTrip {
                    id: d.id,
                    reason: "preferred path must run origin to destination".into(),
                });
            }
            let tp = net.path_time(path)?;
            let gamma = d.max_duration.min(tp + detour);
            let mode = if detour == 0 {
                match path.iter().position(|&v| net.is_station(v)) {
                    Some(pos) => DriverMode::Fixed { station_pos: pos },
                    None => DriverMode::NoStation,
                }
            } else {
                DriverMode::Search
            };
            (gamma, mode)
        }
        None => {
            let tod = net.travel_time(d.origin, d.dest)?;
            (d.max_duration.min(tod + detour), DriverMode::Search)
        }
    };
    let mut sdo = StationSet::default();
    for &s in stations {
        let (Ok(t_os), Ok(t_sd)) = (net.travel_time(d.origin, s), net.travel_time(s, d.dest))
        else {
            continue;
        };
        let arrive = d.earliest_depart + t_os;
        if arrive + t_sd <= d.latest_arrive && t_os + t_sd <= gamma {
            sdo.stations.push(s);
            sdo.access.insert(s, t_os);
            sdo.onward.insert(s, t_sd);
        }
    }
    Ok(DriverPrep { gamma, mode, sdo })
}

fn prep_rider(r: &Trip, net: &RoadTransitNetwork, stations: &[NodeId]) -> RiderPrep {
    let Ok(baseline) = net.transit_duration(r.origin, r.dest) else {
        // Without a transit benchmark there is no acceptable-route budget.
        return RiderPrep {
            cap: 0,
            sdo: BTreeMap::new(),
        };
    };
    let cap = r
        .max_duration
        .min(scale_secs(baseline, r.accept_threshold()));
    let mut sdo = BTreeMap::new();
    for mt in [MatchType::Type1, MatchType::Type2] {
        if !r.allows(mt) {
            continue;
        }
        let mut set = StationSet::default();
        for &s in stations {
            let (access, onward) = match mt {
                MatchType::Type1 => {
                    let (Ok(a), Ok(o)) = (
                        net.travel_time(r.origin, s),
                        net.transit_duration(s, r.dest),
                    ) else {
                        continue;
                    };
                    (a, o)
                }
                MatchType::Type2 => {
                    let (Ok(a), Ok(o)) = (
                        net.transit_duration(r.origin, s),
                        net.travel_time(s, r.dest),
                    ) else {
                        continue;
                    };
                    (a, o)
                }
            };
            let arrive = r.earliest_depart + access;
            if arrive + onward <= r.latest_arrive && access + onward <= cap {
                set.stations.push(s);
                set.access.insert(s, access);
                set.onward.insert(s, onward);
            }
        }
        sdo.insert(mt, set);
    }
    RiderPrep { cap, sdo }
}

// ---------------------------------------------------------------------------
// Free-function entry points

/// Feasible transfer stations for one trip in one role.  Drivers have the
/// same set for both types.
pub fn station_time_tuples(
    trip: &Trip,
    net: &RoadTransitNetwork,
    mt: MatchType,
) -> Vec<StationTimeTuple> {
    let mut stations: Vec<NodeId> = net.stations.clone();
    stations.sort_unstable();
    stations.dedup();
    if trip.is_driver() {
        match prep_driver(trip, net, &stations) {
            Ok(dp) => dp.sdo.tuples(trip.earliest_depart),
            Err(_) => Vec::new(),
        }
    } else {
        prep_rider(trip, net, &stations)
            .sdo
            .get(&mt)
            .map(|s| s.tuples(trip.earliest_depart))
            .unwrap_or_default()
    }
}

/// Latest departure for a pick-up prefix `(l_0..l_p)`; `riders[y-1]` is
/// collected at `prefix[y]`.
pub fn latest_departure(
    prefix: &[NodeId],
    driver: &Trip,
    riders: &[&Trip],
    net: &RoadTransitNetwork,
) -> Result<u32> {
    assert_eq!(
        prefix.len(),
        riders.len() + 1,
        "one node per pick-up plus the origin"
    );
    let mut waits = Vec::with_capacity(riders.len());
    let mut cum = 0u32;
    for (y, r) in riders.iter().enumerate() {
        cum += net.travel_time(prefix[y], prefix[y + 1])?;
        waits.push((r.earliest_depart, cum));
    }
    Ok(eta_from(driver.earliest_depart, &waits))
}

/// Phase one over full trip lists.
pub fn phase_one(
    drivers: &[Trip],
    riders: &[Trip],
    net: &RoadTransitNetwork,
) -> Result<Hypergraph> {
    MatchContext::new(net, drivers, riders)?.phase_one()
}

/// Phase two over a base-match hypergraph.
pub fn phase_two(
    h: &Hypergraph,
    drivers: &[Trip],
    riders: &[Trip],
    net: &RoadTransitNetwork,
    y_cap: Option<usize>,
) -> Result<Hypergraph> {
    MatchContext::new(net, drivers, riders)?.phase_two(h, y_cap)
}

/// Reduction pass over a base-match hypergraph.
pub fn reduce_base_matches(
    h: &Hypergraph,
    cfg: &ReductionConfig,
    drivers: &[Trip],
    riders: &[Trip],
    net: &RoadTransitNetwork,
) -> Result<Hypergraph> {
    MatchContext::new(net, drivers, riders)?.reduce_base_matches(h, cfg)
}
