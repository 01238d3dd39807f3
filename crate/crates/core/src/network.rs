//! Synthetic road network with a public-transit overlay.
//!
//! The road graph is a set of per-area street grids stitched together with
//! arterial edges.  Transit service is modelled on top of it: a rail backbone
//! plus bus feeders, where the in-vehicle time between two stops is the car
//! travel time scaled by a mode constant (>1).  All durations are integer
//! seconds, rounded half-up.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap, VecDeque};
use std::sync::{Arc, Mutex, OnceLock};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::NodeId;

/// Scale an integer duration by a factor, rounding half-up.  The small bias
/// keeps products like 1.15 * 750 (exactly 862.5 in decimal) on the half-up
/// side despite binary representation error.
pub fn scale_secs(secs: u32, factor: f64) -> u32 {
    (secs as f64 * factor + 0.5 + 1e-9).floor() as u32
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitMode {
    Rail,
    Bus,
}

impl std::fmt::Display for TransitMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TransitMode::Rail => write!(f, "rail"),
            TransitMode::Bus => write!(f, "bus"),
        }
    }
}

/// Role of an area in the layout: the central hub and remote designated
/// areas attach directly to rail; urban areas reach rail by bus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AreaKind {
    DesignatedHub,
    DesignatedRemote,
    Urban,
}

impl AreaKind {
    pub fn is_designated(self) -> bool {
        !matches!(self, AreaKind::Urban)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoadEdge {
    pub from: NodeId,
    pub to: NodeId,
    pub secs: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Line {
    pub name: String,
    pub mode: TransitMode,
    pub stations: Vec<NodeId>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Area {
    pub name: String,
    pub kind: AreaKind,
    pub nodes: Vec<NodeId>,
}

/// One leg of a transit route: ride `mode` from `from` to `to`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransitLeg {
    pub from: NodeId,
    pub to: NodeId,
    pub mode: TransitMode,
    pub secs: u32,
}

/// Fastest transit route between two nodes.  Duration does not depend on the
/// departure time under this schedule-free model; `depart` is only recorded.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransitRoute {
    pub legs: Vec<TransitLeg>,
    pub depart: u32,
    pub duration: u32,
}

const PATH_CACHE_CAP: usize = 1024;

#[derive(Default)]
struct PathCache {
    map: HashMap<NodeId, (u64, Arc<Vec<Option<u32>>>)>,
    tick: u64,
}

/// Road graph, transit lines, and area partition.  Shortest-path queries are
/// memoized per source node behind a mutex, so a shared reference can be used
/// from several workers.
#[derive(Serialize, Deserialize)]
pub struct RoadTransitNetwork {
    pub nodes: Vec<Node>,
    pub road_edges: Vec<RoadEdge>,
    pub stations: Vec<NodeId>,
    pub lines: Vec<Line>,
    pub areas: Vec<Area>,
    pub eps_rail: f64,
    pub eps_bus: f64,
    /// Areas whose centroids are within this distance count as adjacent.
    pub adjacency_radius: f64,

    #[serde(skip)]
    out_adj: OnceLock<Vec<Vec<(NodeId, u32)>>>,
    #[serde(skip)]
    node_area: OnceLock<Vec<usize>>,
    #[serde(skip)]
    area_centers: OnceLock<Vec<(f64, f64)>>,
    #[serde(skip)]
    area_station: OnceLock<Vec<Option<NodeId>>>,
    #[serde(skip)]
    rail_stations: OnceLock<BTreeSet<NodeId>>,
    #[serde(skip)]
    station_set: OnceLock<BTreeSet<NodeId>>,
    #[serde(skip)]
    station_adj: OnceLock<BTreeMap<NodeId, Vec<(NodeId, TransitMode)>>>,
    #[serde(skip)]
    path_cache: Mutex<PathCache>,
}

impl std::fmt::Debug for RoadTransitNetwork {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RoadTransitNetwork")
            .field("nodes", &self.nodes.len())
            .field("road_edges", &self.road_edges.len())
            .field("stations", &self.stations.len())
            .field("lines", &self.lines.len())
            .field("areas", &self.areas.len())
            .finish()
    }
}

impl RoadTransitNetwork {
    /// Assemble a network from parts, validating every structural invariant.
    #[allow(clippy::too_many_arguments)]
    pub fn assemble(
        nodes: Vec<Node>,
        road_edges: Vec<RoadEdge>,
        stations: Vec<NodeId>,
        lines: Vec<Line>,
        areas: Vec<Area>,
        eps_rail: f64,
        eps_bus: f64,
        adjacency_radius: f64,
    ) -> Result<Self> {
        let net = RoadTransitNetwork {
            nodes,
            road_edges,
            stations,
            lines,
            areas,
            eps_rail,
            eps_bus,
            adjacency_radius,
            out_adj: OnceLock::new(),
            node_area: OnceLock::new(),
            area_centers: OnceLock::new(),
            area_station: OnceLock::new(),
            rail_stations: OnceLock::new(),
            station_set: OnceLock::new(),
            station_adj: OnceLock::new(),
            path_cache: Mutex::new(PathCache::default()),
        };
        net.validate()?;
        Ok(net)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        if n == 0 {
            return Err(Error::InvalidSpec("network has no nodes".into()));
        }
        for (i, node) in self.nodes.iter().enumerate() {
            if node.id != i {
                return Err(Error::InvalidSpec(format!(
                    "node ids must be dense and ordered; found {} at slot {i}",
                    node.id
                )));
            }
        }
        if self.eps_rail <= 1.0 || self.eps_bus <= 1.0 {
            return Err(Error::InvalidSpec(
                "transit scale constants must be greater than 1".into(),
            ));
        }
        for e in &self.road_edges {
            if e.from >= n || e.to >= n {
                return Err(Error::InvalidSpec(format!(
                    "road edge {}->{} references unknown node",
                    e.from, e.to
                )));
            }
            if e.secs == 0 {
                return Err(Error::InvalidSpec(format!(
                    "road edge {}->{} has non-positive travel time",
                    e.from, e.to
                )));
            }
        }
        let mut seen = vec![false; n];
        for s in &self.stations {
            if *s >= n {
                return Err(Error::InvalidSpec(format!("station {s} is not a node")));
            }
        }
        for a in &self.areas {
            if a.nodes.is_empty() {
                return Err(Error::InvalidSpec(format!("area {} has no nodes", a.name)));
            }
            for &v in &a.nodes {
                if v >= n {
                    return Err(Error::InvalidSpec(format!(
                        "area {} references unknown node {v}",
                        a.name
                    )));
                }
                if seen[v] {
                    return Err(Error::InvalidSpec(format!(
                        "node {v} belongs to more than one area"
                    )));
                }
                seen[v] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidSpec("areas must partition all nodes".into()));
        }
        let station_set: BTreeSet<NodeId> = self.stations.iter().copied().collect();
        for line in &self.lines {
            if line.stations.len() < 2 {
                return Err(Error::InvalidSpec(format!(
                    "line {} needs at least two stations",
                    line.name
                )));
            }
            for w in line.stations.windows(2) {
                if w[0] == w[1] {
                    return Err(Error::InvalidSpec(format!(
                        "line {} repeats station {} consecutively",
                        line.name, w[0]
                    )));
                }
            }
            for s in &line.stations {
                if !station_set.contains(s) {
                    return Err(Error::InvalidSpec(format!(
                        "line {} stop {s} is not marked as a station",
                        line.name
                    )));
                }
            }
        }
        // Every area must expose at least one station.
        for a in &self.areas {
            if !a.nodes.iter().any(|v| station_set.contains(v)) {
                return Err(Error::InvalidSpec(format!(
                    "area {} contains no station",
                    a.name
                )));
            }
        }
        self.check_strong_connectivity()?;
        self.check_backbone()?;
        Ok(())
    }

    fn check_strong_connectivity(&self) -> Result<()> {
        let n = self.nodes.len();
        let mut fwd = vec![Vec::new(); n];
        let mut bwd = vec![Vec::new(); n];
        for e in &self.road_edges {
            fwd[e.from].push(e.to);
            bwd[e.to].push(e.from);
        }
        for adj in [&fwd, &bwd] {
            let mut seen = vec![false; n];
            let mut queue = VecDeque::from([0usize]);
            seen[0] = true;
            let mut count = 1;
            while let Some(v) = queue.pop_front() {
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        count += 1;
                        queue.push_back(w);
                    }
                }
            }
            if count != n {
                return Err(Error::InvalidSpec(
                    "road graph is not strongly connected".into(),
                ));
            }
        }
        Ok(())
    }

    /// Every station must reach a rail station by following line hops.
    fn check_backbone(&self) -> Result<()> {
        let mut adj: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for line in &self.lines {
            for w in line.stations.windows(2) {
                adj.entry(w[0]).or_default().push(w[1]);
                adj.entry(w[1]).or_default().push(w[0]);
            }
        }
        let rail: BTreeSet<NodeId> = self
            .lines
            .iter()
            .filter(|l| l.mode == TransitMode::Rail)
            .flat_map(|l| l.stations.iter().copied())
            .collect();
        if rail.is_empty() {
            return Err(Error::InvalidSpec("no rail line in spec".into()));
        }
        let mut reach: BTreeSet<NodeId> = rail.clone();
        let mut queue: VecDeque<NodeId> = rail.into_iter().collect();
        while let Some(s) = queue.pop_front() {
            for &t in adj.get(&s).map(|v| v.as_slice()).unwrap_or(&[]) {
                if reach.insert(t) {
                    queue.push_back(t);
                }
            }
        }
        for s in &self.stations {
            if !reach.contains(s) {
                return Err(Error::InvalidSpec(format!(
                    "station {s} is disconnected from the rail backbone"
                )));
            }
        }
        Ok(())
    }

    fn out_adj(&self) -> &Vec<Vec<(NodeId, u32)>> {
        self.out_adj.get_or_init(|| {
            let mut adj = vec![Vec::new(); self.nodes.len()];
            for e in &self.road_edges {
                adj[e.from].push((e.to, e.secs));
            }
            adj
        })
    }

    fn dijkstra(&self, src: NodeId) -> Vec<Option<u32>> {
        let adj = self.out_adj();
        let mut dist: Vec<Option<u32>> = vec![None; self.nodes.len()];
        let mut heap = BinaryHeap::new();
        dist[src] = Some(0);
        heap.push(Reverse((0u32, src)));
        while let Some(Reverse((d, v))) = heap.pop() {
            if dist[v] != Some(d) {
                continue;
            }
            for &(w, secs) in &adj[v] {
                let nd = d + secs;
                if dist[w].map_or(true, |cur| nd < cur) {
                    dist[w] = Some(nd);
                    heap.push(Reverse((nd, w)));
                }
            }
        }
        dist
    }

    fn dist_table(&self, src: NodeId) -> Arc<Vec<Option<u32>>> {
        let mut cache = self.path_cache.lock().unwrap();
        cache.tick += 1;
        let tick = cache.tick;
        if let Some(entry) = cache.map.get_mut(&src) {
            entry.0 = tick;
            return entry.1.clone();
        }
        drop(cache);
        let table = Arc::new(self.dijkstra(src));
        let mut cache = self.path_cache.lock().unwrap();
        if cache.map.len() >= PATH_CACHE_CAP {
            if let Some((&evict, _)) = cache.map.iter().min_by_key(|(_, (t, _))| *t) {
                cache.map.remove(&evict);
            }
        }
        cache.map.insert(src, (tick, table.clone()));
        table
    }

    /// Shortest car travel time between two nodes, in seconds.
    pub fn travel_time(&self, from: NodeId, to: NodeId) -> Result<u32> {
        if from >= self.nodes.len() || to >= self.nodes.len() {
            return Err(Error::NoPath { from, to });
        }
        if from == to {
            return Ok(0);
        }
        self.dist_table(from)[to].ok_or(Error::NoPath { from, to })
    }

    /// Shortest travel time along an ordered node path (sum of pairwise legs).
    pub fn path_time(&self, path: &[NodeId]) -> Result<u32> {
        let mut total = 0u32;
        for w in path.windows(2) {
            total += self.travel_time(w[0], w[1])?;
        }
        Ok(total)
    }

    fn station_set(&self) -> &BTreeSet<NodeId> {
        self.station_set
            .get_or_init(|| self.stations.iter().copied().collect())
    }

    pub fn is_station(&self, v: NodeId) -> bool {
        self.station_set().contains(&v)
    }

    fn rail_station_set(&self) -> &BTreeSet<NodeId> {
        self.rail_stations.get_or_init(|| {
            self.lines
                .iter()
                .filter(|l| l.mode == TransitMode::Rail)
                .flat_map(|l| l.stations.iter().copied())
                .collect()
        })
    }

    fn node_area_map(&self) -> &Vec<usize> {
        self.node_area.get_or_init(|| {
            let mut map = vec![usize::MAX; self.nodes.len()];
            for (i, a) in self.areas.iter().enumerate() {
                for &v in &a.nodes {
                    map[v] = i;
                }
            }
            map
        })
    }

    pub fn area_of(&self, v: NodeId) -> usize {
        self.node_area_map()[v]
    }

    fn centers(&self) -> &Vec<(f64, f64)> {
        self.area_centers.get_or_init(|| {
            self.areas
                .iter()
                .map(|a| {
                    let (mut sx, mut sy) = (0.0, 0.0);
                    for &v in &a.nodes {
                        sx += self.nodes[v].x;
                        sy += self.nodes[v].y;
                    }
                    (sx / a.nodes.len() as f64, sy / a.nodes.len() as f64)
                })
                .collect()
        })
    }

    /// Whether two areas are the same or geometrically adjacent.
    pub fn areas_adjacent(&self, a: usize, b: usize) -> bool {
        if a == b {
            return true;
        }
        let c = self.centers();
        let (dx, dy) = (c[a].0 - c[b].0, c[a].1 - c[b].1);
        (dx * dx + dy * dy).sqrt() <= self.adjacency_radius
    }

    /// The access station of an area (its first station node).
    pub fn area_station(&self, area: usize) -> Option<NodeId> {
        self.area_station.get_or_init(|| {
            self.areas
                .iter()
                .map(|a| {
                    a.nodes
                        .iter()
                        .copied()
                        .filter(|v| self.is_station(*v))
                        .min()
                })
                .collect()
        })[area]
    }

    /// In-vehicle transit time between two stations that share a line of the
    /// given mode: the car travel time scaled by the mode constant.
    pub fn transit_time(&self, s1: NodeId, s2: NodeId, mode: TransitMode) -> Result<u32> {
        let on_common_line = self
            .lines
            .iter()
            .filter(|l| l.mode == mode)
            .any(|l| l.stations.contains(&s1) && l.stations.contains(&s2));
        if !on_common_line {
            return Err(Error::NoCommonLine {
                a: s1,
                b: s2,
                mode: mode.to_string(),
            });
        }
        if s1 == s2 {
            return Ok(0);
        }
        let eps = match mode {
            TransitMode::Rail => self.eps_rail,
            TransitMode::Bus => self.eps_bus,
        };
        Ok(scale_secs(self.travel_time(s1, s2)?, eps))
    }

    fn station_adj(&self) -> &BTreeMap<NodeId, Vec<(NodeId, TransitMode)>> {
        self.station_adj.get_or_init(|| {
            let mut adj: BTreeMap<NodeId, Vec<(NodeId, TransitMode)>> = BTreeMap::new();
            for line in &self.lines {
                for w in line.stations.windows(2) {
                    adj.entry(w[0]).or_default().push((w[1], line.mode));
                    adj.entry(w[1]).or_default().push((w[0], line.mode));
                }
            }
            adj
        })
    }

    fn line_leg_time(&self, s1: NodeId, s2: NodeId, mode: TransitMode) -> Option<u32> {
        let eps = match mode {
            TransitMode::Rail => self.eps_rail,
            TransitMode::Bus => self.eps_bus,
        };
        self.travel_time(s1, s2).ok().map(|t| scale_secs(t, eps))
    }

    /// The boarding leg for a node that is not itself a station: designated
    /// areas attach directly to rail at their own station; urban nodes take a
    /// bus to the nearest rail station.
    fn access_leg(&self, o: NodeId) -> Result<TransitLeg> {
        let area = &self.areas[self.area_of(o)];
        if area.kind.is_designated() {
            let hub = self.area_station(self.area_of(o)).ok_or_else(|| {
                Error::InvalidSpec(format!("area {} has no station", area.name))
            })?;
            Ok(TransitLeg {
                from: o,
                to: hub,
                mode: TransitMode::Rail,
                secs: scale_secs(self.travel_time(o, hub)?, self.eps_rail),
            })
        } else {
            let mut best: Option<(u32, NodeId)> = None;
            for &s in self.rail_station_set() {
                let t = self.travel_time(o, s)?;
                if best.map_or(true, |(bt, bs)| t < bt || (t == bt && s < bs)) {
                    best = Some((t, s));
                }
            }
            let (t, s) = best.ok_or(Error::NoTransitRoute { from: o, to: o })?;
            Ok(TransitLeg {
                from: o,
                to: s,
                mode: TransitMode::Bus,
                secs: scale_secs(t, self.eps_bus),
            })
        }
    }

    /// Mirror of [`access_leg`] for leaving the transit system at `d`.
    fn egress_leg(&self, d: NodeId) -> Result<TransitLeg> {
        let area = &self.areas[self.area_of(d)];
        if area.kind.is_designated() {
            let hub = self.area_station(self.area_of(d)).ok_or_else(|| {
                Error::InvalidSpec(format!("area {} has no station", area.name))
            })?;
            Ok(TransitLeg {
                from: hub,
                to: d,
                mode: TransitMode::Rail,
                secs: scale_secs(self.travel_time(hub, d)?, self.eps_rail),
            })
        } else {
            let mut best: Option<(u32, NodeId)> = None;
            for &s in self.rail_station_set() {
                let t = self.travel_time(s, d)?;
                if best.map_or(true, |(bt, bs)| t < bt || (t == bt && s < bs)) {
                    best = Some((t, s));
                }
            }
            let (t, s) = best.ok_or(Error::NoTransitRoute { from: d, to: d })?;
            Ok(TransitLeg {
                from: s,
                to: d,
                mode: TransitMode::Bus,
                secs: scale_secs(t, self.eps_bus),
            })
        }
    }

    /// Fastest transit route from `o` to `d`.  Boarding at a non-station node
    /// uses the access rule above; alighting mirrors it.
    pub fn fastest_transit_route(&self, o: NodeId, d: NodeId, depart: u32) -> Result<TransitRoute> {
        if o == d {
            return Ok(TransitRoute {
                legs: Vec::new(),
                depart,
                duration: 0,
            });
        }
        let (start, access) = if self.is_station(o) {
            (o, None)
        } else {
            let leg = self.access_leg(o)?;
            (leg.to, Some(leg))
        };
        let (goal, egress) = if self.is_station(d) {
            (d, None)
        } else {
            let leg = self.egress_leg(d)?;
            (leg.from, Some(leg))
        };

        // Dijkstra over the station graph; ties broken by station id.
        let adj = self.station_adj();
        let mut dist: BTreeMap<NodeId, u32> = BTreeMap::new();
        let mut prev: BTreeMap<NodeId, (NodeId, TransitMode, u32)> = BTreeMap::new();
        let mut heap = BinaryHeap::new();
        dist.insert(start, 0);
        heap.push(Reverse((0u32, start)));
        while let Some(Reverse((dd, s))) = heap.pop() {
            if dist.get(&s) != Some(&dd) {
                continue;
            }
            if s == goal {
                break;
            }
            for &(t, mode) in adj.get(&s).map(|v| v.as_slice()).unwrap_or(&[]) {
                if let Some(leg) = self.line_leg_time(s, t, mode) {
                    let nd = dd + leg;
                    if dist.get(&t).map_or(true, |&cur| nd < cur) {
                        dist.insert(t, nd);
                        prev.insert(t, (s, mode, leg));
                        heap.push(Reverse((nd, t)));
                    }
                }
            }
        }
        if !dist.contains_key(&goal) {
            return Err(Error::NoTransitRoute { from: o, to: d });
        }
        let mut mid = Vec::new();
        let mut cur = goal;
        while cur != start {
            let (p, mode, secs) = prev[&cur];
            mid.push(TransitLeg {
                from: p,
                to: cur,
                mode,
                secs,
            });
            cur = p;
        }
        mid.reverse();

        let mut legs = Vec::new();
        if let Some(leg) = access {
            legs.push(leg);
        }
        legs.extend(mid);
        if let Some(leg) = egress {
            legs.push(leg);
        }
        let duration = legs.iter().map(|l| l.secs).sum();
        Ok(TransitRoute {
            legs,
            depart,
            duration,
        })
    }

    /// Transit duration from `o` to `d`; handy shorthand over the full route.
    pub fn transit_duration(&self, o: NodeId, d: NodeId) -> Result<u32> {
        Ok(self.fastest_transit_route(o, d, 0)?.duration)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let net: RoadTransitNetwork = serde_json::from_str(text)?;
        net.validate()?;
        Ok(net)
    }
}

// ---------------------------------------------------------------------------
// Spec-driven construction

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AreaSpec {
    pub name: String,
    pub kind: AreaKind,
    /// Which radial ring the area sits on (0 = center).
    pub ring: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LineSpec {
    pub name: String,
    /// Ordered area names; the line stops at each area's station.
    pub areas: Vec<String>,
}

/// Declarative description of a synthetic network.  The same spec always
/// yields the same topology; the seed only perturbs node coordinates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub grid_rows: usize,
    pub grid_cols: usize,
    /// Meters between neighboring grid nodes.
    pub spacing: f64,
    /// Coordinate jitter as a fraction of `spacing`.
    pub coord_jitter: f64,
    /// Car speed on area streets, m/s.
    pub street_speed: f64,
    /// Car speed on inter-area arterials, m/s.
    pub arterial_speed: f64,
    /// Radius of each ring, meters (index 0 is the center).
    pub ring_radius: Vec<f64>,
    pub adjacency_radius: f64,
    pub eps_rail: f64,
    pub eps_bus: f64,
    pub areas: Vec<AreaSpec>,
    pub rail_lines: Vec<LineSpec>,
    pub bus_lines: Vec<LineSpec>,
}

impl NetworkSpec {
    /// Default layout: one downtown hub, nineteen urban areas on a ring, two
    /// remote designated areas further out, four rail lines and bus feeders.
    pub fn default_spec() -> Self {
        let mut areas = vec![AreaSpec {
            name: "downtown".into(),
            kind: AreaKind::DesignatedHub,
            ring: 0,
        }];
        for k in 0..19 {
            areas.push(AreaSpec {
                name: format!("urban{k:02}"),
                kind: AreaKind::Urban,
                ring: 1,
            });
        }
        areas.push(AreaSpec {
            name: "airport_west".into(),
            kind: AreaKind::DesignatedRemote,
            ring: 2,
        });
        areas.push(AreaSpec {
            name: "airport_east".into(),
            kind: AreaKind::DesignatedRemote,
            ring: 2,
        });

        let rail = |name: &str, stops: &[&str]| LineSpec {
            name: name.into(),
            areas: stops.iter().map(|s| s.to_string()).collect(),
        };
        let rail_lines = vec![
            rail("rail_w", &["downtown", "urban00", "urban01", "airport_west"]),
            rail("rail_n", &["downtown", "urban04", "urban05"]),
            rail("rail_e", &["downtown", "urban09", "urban10", "airport_east"]),
            rail("rail_s", &["downtown", "urban14", "urban15"]),
        ];
        // Feeders from off-rail urban areas to the angularly closest rail stop.
        let feeders = [
            ("urban02", "urban01"),
            ("urban03", "urban04"),
            ("urban06", "urban05"),
            ("urban07", "urban05"),
            ("urban08", "urban09"),
            ("urban11", "urban10"),
            ("urban12", "urban10"),
            ("urban13", "urban14"),
            ("urban16", "urban15"),
            ("urban17", "urban15"),
            ("urban18", "urban00"),
        ];
        let bus_lines = feeders
            .iter()
            .enumerate()
            .map(|(i, (from, to))| LineSpec {
                name: format!("bus{i:02}"),
                areas: vec![from.to_string(), to.to_string()],
            })
            .collect();

        NetworkSpec {
            grid_rows: 3,
            grid_cols: 3,
            spacing: 400.0,
            coord_jitter: 0.3,
            street_speed: 8.5,
            arterial_speed: 16.0,
            ring_radius: vec![0.0, 6000.0, 12000.0],
            adjacency_radius: 2500.0,
            eps_rail: 1.15,
            eps_bus: 2.0,
            areas,
            rail_lines,
            bus_lines,
        }
    }
}

/// Build a network from a spec.  Deterministic in `(seed, spec)`.
pub fn build_network(seed: u64, spec: &NetworkSpec) -> Result<RoadTransitNetwork> {
    let hubs = spec
        .areas
        .iter()
        .filter(|a| a.kind == AreaKind::DesignatedHub)
        .count();
    let remotes = spec
        .areas
        .iter()
        .filter(|a| a.kind == AreaKind::DesignatedRemote)
        .count();
    let urban = spec.areas.iter().filter(|a| a.kind == AreaKind::Urban).count();
    if hubs < 1 || remotes < 2 || urban < 4 {
        return Err(Error::InvalidSpec(format!(
            "layout needs >=1 hub, >=2 remote and >=4 urban areas; got {hubs}/{remotes}/{urban}"
        )));
    }
    if spec.grid_rows == 0 || spec.grid_cols == 0 {
        return Err(Error::InvalidSpec("grid dimensions must be positive".into()));
    }
    if spec.street_speed <= 0.0 || spec.arterial_speed <= 0.0 {
        return Err(Error::InvalidSpec("speeds must be positive".into()));
    }
    let area_index: HashMap<&str, usize> = spec
        .areas
        .iter()
        .enumerate()
        .map(|(i, a)| (a.name.as_str(), i))
        .collect();
    if area_index.len() != spec.areas.len() {
        return Err(Error::InvalidSpec("duplicate area name".into()));
    }
    for line in spec.rail_lines.iter().chain(&spec.bus_lines) {
        if line.areas.len() < 2 {
            return Err(Error::InvalidSpec(format!(
                "line {} needs at least two areas",
                line.name
            )));
        }
        for a in &line.areas {
            if !area_index.contains_key(a.as_str()) {
                return Err(Error::InvalidSpec(format!(
                    "line {} references unknown area {a}",
                    line.name
                )));
            }
        }
    }
    for a in &spec.areas {
        if a.ring >= spec.ring_radius.len() {
            return Err(Error::InvalidSpec(format!(
                "area {} sits on undefined ring {}",
                a.name, a.ring
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Place areas: ring slots in spec order.
    let mut ring_count = vec![0usize; spec.ring_radius.len()];
    for a in &spec.areas {
        ring_count[a.ring] += 1;
    }
    let mut ring_slot = vec![0usize; spec.ring_radius.len()];
    let mut centers = Vec::with_capacity(spec.areas.len());
    for a in &spec.areas {
        let slot = ring_slot[a.ring];
        ring_slot[a.ring] += 1;
        let r = spec.ring_radius[a.ring];
        let angle = 2.0 * std::f64::consts::PI * slot as f64 / ring_count[a.ring].max(1) as f64;
        centers.push((r * angle.cos(), r * angle.sin()));
    }

    // Per-area street grids.
    let (rows, cols) = (spec.grid_rows, spec.grid_cols);
    let mut nodes = Vec::new();
    let mut areas = Vec::new();
    let mut hub_node = Vec::with_capacity(spec.areas.len());
    for (ai, aspec) in spec.areas.iter().enumerate() {
        let base = nodes.len();
        let (cx, cy) = centers[ai];
        let mut area_nodes = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let gx = (c as f64 - (cols as f64 - 1.0) / 2.0) * spec.spacing;
                let gy = (r as f64 - (rows as f64 - 1.0) / 2.0) * spec.spacing;
                let jx = (rng.random::<f64>() - 0.5) * spec.coord_jitter * spec.spacing;
                let jy = (rng.random::<f64>() - 0.5) * spec.coord_jitter * spec.spacing;
                let id = nodes.len();
                nodes.push(Node {
                    id,
                    x: cx + gx + jx,
                    y: cy + gy + jy,
                });
                area_nodes.push(id);
            }
        }
        hub_node.push(base + (rows / 2) * cols + cols / 2);
        areas.push(Area {
            name: aspec.name.clone(),
            kind: aspec.kind,
            nodes: area_nodes,
        });
    }

    let euclid = |nodes: &[Node], a: usize, b: usize| -> f64 {
        let (dx, dy) = (nodes[a].x - nodes[b].x, nodes[a].y - nodes[b].y);
        (dx * dx + dy * dy).sqrt()
    };
    let mut road_edges = Vec::new();
    let push_pair = |nodes: &[Node], a: usize, b: usize, speed: f64, edges: &mut Vec<RoadEdge>| {
        let secs = ((euclid(nodes, a, b) / speed) + 0.5).floor().max(1.0) as u32;
        edges.push(RoadEdge { from: a, to: b, secs });
        edges.push(RoadEdge { from: b, to: a, secs });
    };
    for (ai, _) in spec.areas.iter().enumerate() {
        let base = ai * rows * cols;
        for r in 0..rows {
            for c in 0..cols {
                let v = base + r * cols + c;
                if c + 1 < cols {
                    push_pair(&nodes, v, v + 1, spec.street_speed, &mut road_edges);
                }
                if r + 1 < rows {
                    push_pair(&nodes, v, v + cols, spec.street_speed, &mut road_edges);
                }
            }
        }
    }

    // Arterials: consecutive line areas plus ring neighbors.
    let mut arterials: BTreeSet<(usize, usize)> = BTreeSet::new();
    let link = |a: usize, b: usize, arterials: &mut BTreeSet<(usize, usize)>| {
        arterials.insert((a.min(b), a.max(b)));
    };
    for line in spec.rail_lines.iter().chain(&spec.bus_lines) {
        for w in line.areas.windows(2) {
            link(area_index[w[0].as_str()], area_index[w[1].as_str()], &mut arterials);
        }
    }
    for ring in 0..spec.ring_radius.len() {
        let members: Vec<usize> = spec
            .areas
            .iter()
            .enumerate()
            .filter(|(_, a)| a.ring == ring)
            .map(|(i, _)| i)
            .collect();
        if members.len() >= 2 {
            for i in 0..members.len() {
                let j = (i + 1) % members.len();
                if members.len() == 2 && i == 1 {
                    break;
                }
                link(members[i], members[j], &mut arterials);
            }
        }
    }
    for &(a, b) in &arterials {
        push_pair(&nodes, hub_node[a], hub_node[b], spec.arterial_speed, &mut road_edges);
    }

    // Stations: the hub node of every area that appears on a line; keep the
    // invariant that every area exposes one by requiring line coverage.
    let mut on_line = vec![false; spec.areas.len()];
    for line in spec.rail_lines.iter().chain(&spec.bus_lines) {
        for a in &line.areas {
            on_line[area_index[a.as_str()]] = true;
        }
    }
    if let Some((i, _)) = on_line.iter().enumerate().find(|(_, v)| !**v) {
        return Err(Error::InvalidSpec(format!(
            "area {} is on no line; its station would be disconnected from the rail backbone",
            spec.areas[i].name
        )));
    }
    let stations: Vec<NodeId> = {
        let set: BTreeSet<NodeId> = hub_node.iter().copied().collect();
        set.into_iter().collect()
    };
    let lines = spec
        .rail_lines
        .iter()
        .map(|l| (l, TransitMode::Rail))
        .chain(spec.bus_lines.iter().map(|l| (l, TransitMode::Bus)))
        .map(|(l, mode)| Line {
            name: l.name.clone(),
            mode,
            stations: l.areas.iter().map(|a| hub_node[area_index[a.as_str()]]).collect(),
        })
        .collect();

    RoadTransitNetwork::assemble(
        nodes,
        road_edges,
        stations,
        lines,
        areas,
        spec.eps_rail,
        spec.eps_bus,
        spec.adjacency_radius,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Bellman-Ford over the raw edge list; independent of the Dijkstra path.
    fn bellman_ford(net: &RoadTransitNetwork, src: NodeId) -> Vec<Option<u64>> {
        let n = net.nodes.len();
        let mut dist = vec![None; n];
        dist[src] = Some(0u64);
        for _ in 0..n {
            let mut changed = false;
            for e in &net.road_edges {
                if let Some(d) = dist[e.from] {
                    let nd = d + e.secs as u64;
                    if dist[e.to].map_or(true, |cur| nd < cur) {
                        dist[e.to] = Some(nd);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        dist
    }

    fn two_edge_net() -> RoadTransitNetwork {
        // 0 -> 1 -> 2 plus return edges so the graph is strongly connected.
        let nodes = (0..3)
            .map(|id| Node {
                id,
                x: id as f64,
                y: 0.0,
            })
            .collect();
        let mut road_edges = Vec::new();
        for (a, b, secs) in [(0, 1, 300), (1, 2, 450)] {
            road_edges.push(RoadEdge { from: a, to: b, secs });
            road_edges.push(RoadEdge { from: b, to: a, secs });
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
            vec![Area {
                name: "a".into(),
                kind: AreaKind::DesignatedHub,
                nodes: vec![0, 1, 2],
            }],
            1.15,
            2.0,
            100.0,
        )
        .unwrap()
    }

    #[test]
    fn travel_time_same_node_is_zero() {
        let net = two_edge_net();
        assert_eq!(net.travel_time(1, 1).unwrap(), 0);
    }

    #[test]
    fn travel_time_two_edge_path() {
        let net = two_edge_net();
        assert_eq!(net.travel_time(0, 2).unwrap(), 750);
    }

    #[test]
    fn transit_time_scales_rail_and_bus() {
        let mut net = two_edge_net();
        net.lines.push(Line {
            name: "b".into(),
            mode: TransitMode::Bus,
            stations: vec![0, 2],
        });
        // rail: 1.15 * 750 = 862.5 -> 863 (half-up); with t=1000 -> 1150.
        assert_eq!(net.transit_time(0, 2, TransitMode::Rail).unwrap(), 863);
        assert_eq!(net.transit_time(0, 2, TransitMode::Bus).unwrap(), 1500);
        assert_eq!(scale_secs(1000, 1.15), 1150);
        assert_eq!(scale_secs(600, 2.0), 1200);
    }

    #[test]
    fn transit_time_same_station_zero() {
        let net = two_edge_net();
        assert_eq!(net.transit_time(0, 0, TransitMode::Rail).unwrap(), 0);
    }

    #[test]
    fn transit_time_requires_common_line() {
        let net = two_edge_net();
        assert!(matches!(
            net.transit_time(0, 2, TransitMode::Bus),
            Err(Error::NoCommonLine { .. })
        ));
    }

    #[test]
    fn default_spec_builds_deterministically() {
        let spec = NetworkSpec::default_spec();
        let a = build_network(1, &spec).unwrap();
        let b = build_network(1, &spec).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        assert_eq!(a.areas.len(), 22);
    }

    #[test]
    fn different_seed_same_topology_different_coords() {
        let spec = NetworkSpec::default_spec();
        let a = build_network(1, &spec).unwrap();
        let b = build_network(2, &spec).unwrap();
        assert_eq!(a.nodes.len(), b.nodes.len());
        assert_eq!(a.stations, b.stations);
        assert_eq!(
            a.lines.iter().map(|l| &l.stations).collect::<Vec<_>>(),
            b.lines.iter().map(|l| &l.stations).collect::<Vec<_>>()
        );
        let moved = a
            .nodes
            .iter()
            .zip(&b.nodes)
            .any(|(x, y)| x.x != y.x || x.y != y.y);
        assert!(moved, "seed should perturb coordinates");
    }

    #[test]
    fn dijkstra_matches_bellman_ford_oracle() {
        let spec = NetworkSpec::default_spec();
        let net = build_network(1, &spec).unwrap();
        for src in [0usize, 5, 40, 100, 150] {
            let oracle = bellman_ford(&net, src);
            for to in (0..net.nodes.len()).step_by(7) {
                let got = net.travel_time(src, to).unwrap() as u64;
                assert_eq!(Some(got), oracle[to], "src {src} to {to}");
            }
        }
    }

    #[test]
    fn triangle_inequality_on_sampled_triples() {
        let spec = NetworkSpec::default_spec();
        let net = build_network(1, &spec).unwrap();
        let n = net.nodes.len();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let (a, b, c) = (
                rng.random_range(0..n),
                rng.random_range(0..n),
                rng.random_range(0..n),
            );
            let ab = net.travel_time(a, b).unwrap();
            let bc = net.travel_time(b, c).unwrap();
            let ac = net.travel_time(a, c).unwrap();
            assert!(ac <= ab + bc, "triangle violated {a},{b},{c}");
        }
    }

    #[test]
    fn transit_dominates_driving() {
        // For every station pair on a common line, transit time >= car time,
        // and full transit routes are never faster than driving.
        let spec = NetworkSpec::default_spec();
        let net = build_network(1, &spec).unwrap();
        for line in &net.lines {
            for w in line.stations.windows(2) {
                let t = net.travel_time(w[0], w[1]).unwrap();
                let tt = net.transit_time(w[0], w[1], line.mode).unwrap();
                assert!(tt >= t);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let o = rng.random_range(0..net.nodes.len());
            let d = rng.random_range(0..net.nodes.len());
            let dur = net.transit_duration(o, d).unwrap();
            assert!(dur >= net.travel_time(o, d).unwrap());
        }
    }

    #[test]
    fn zero_leg_route_for_same_node() {
        let spec = NetworkSpec::default_spec();
        let net = build_network(1, &spec).unwrap();
        let urban_node = net.areas[1].nodes[0];
        let r = net.fastest_transit_route(urban_node, urban_node, 120).unwrap();
        assert!(r.legs.is_empty());
        assert_eq!(r.duration, 0);
        assert_eq!(r.depart, 120);
    }

    #[test]
    fn designated_origin_boards_rail_first() {
        let spec = NetworkSpec::default_spec();
        let net = build_network(1, &spec).unwrap();
        let downtown = net.areas.iter().position(|a| a.kind == AreaKind::DesignatedHub).unwrap();
        let airport = net.areas.iter().position(|a| a.kind == AreaKind::DesignatedRemote).unwrap();
        let o = net.areas[downtown].nodes[0];
        let d = net.areas[airport].nodes[2];
        let r = net.fastest_transit_route(o, d, 0).unwrap();
        assert_eq!(r.legs.first().unwrap().mode, TransitMode::Rail);
        assert_eq!(r.duration, r.legs.iter().map(|l| l.secs).sum::<u32>());
    }

    #[test]
    fn urban_origin_takes_bus_to_nearest_rail() {
        let spec = NetworkSpec::default_spec();
        let net = build_network(1, &spec).unwrap();
        // urban02 is a feeder area; any non-station node boards by bus.
        let area = net.areas.iter().position(|a| a.name == "urban02").unwrap();
        let o = *net.areas[area]
            .nodes
            .iter()
            .find(|v| !net.is_station(**v))
            .unwrap();
        let hub_area = net.areas.iter().position(|a| a.kind == AreaKind::DesignatedHub).unwrap();
        let d = net.areas[hub_area].nodes[0];
        let r = net.fastest_transit_route(o, d, 0).unwrap();
        let first = r.legs.first().unwrap();
        assert_eq!(first.mode, TransitMode::Bus);
        assert!(net.rail_station_set().contains(&first.to));
        // and that is the nearest rail station by car time
        let best = net
            .rail_station_set()
            .iter()
            .map(|&s| (net.travel_time(o, s).unwrap(), s))
            .min()
            .unwrap();
        assert_eq!(first.to, best.1);
    }

    /// Exhaustive enumeration of simple paths over the station graph,
    /// independent of the Dijkstra used by `fastest_transit_route`.
    fn exhaustive_transit_duration(net: &RoadTransitNetwork, o: NodeId, d: NodeId) -> u32 {
        let (start, access_cost) = if net.is_station(o) {
            (o, 0)
        } else {
            let leg = net.access_leg(o).unwrap();
            (leg.to, leg.secs)
        };
        let (goal, egress_cost) = if net.is_station(d) {
            (d, 0)
        } else {
            let leg = net.egress_leg(d).unwrap();
            (leg.from, leg.secs)
        };
        let adj = net.station_adj();
        let mut best = u32::MAX;
        let mut stack = vec![(start, 0u32, vec![start])];
        while let Some((s, cost, path)) = stack.pop() {
            if cost >= best {
                continue;
            }
            if s == goal {
                best = cost;
                continue;
            }
            for &(t, mode) in adj.get(&s).map(|v| v.as_slice()).unwrap_or(&[]) {
                if path.contains(&t) {
                    continue;
                }
                if let Some(leg) = net.line_leg_time(s, t, mode) {
                    let mut p = path.clone();
                    p.push(t);
                    stack.push((t, cost + leg, p));
                }
            }
        }
        access_cost + best + egress_cost
    }

    #[test]
    fn fastest_route_matches_exhaustive_enumeration() {
        let spec = NetworkSpec::default_spec();
        let net = build_network(1, &spec).unwrap();
        let hub_area = net.areas.iter().position(|a| a.kind == AreaKind::DesignatedHub).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..25 {
            let ua = 1 + rng.random_range(0..19);
            let o = net.areas[ua].nodes[rng.random_range(0..9)];
            let d = net.areas[hub_area].nodes[rng.random_range(0..9)];
            let got = net.fastest_transit_route(o, d, 0).unwrap();
            let want = exhaustive_transit_duration(&net, o, d);
            assert_eq!(got.duration, want, "o={o} d={d}");
            // legs must be contiguous
            for w in got.legs.windows(2) {
                assert_eq!(w[0].to, w[1].from);
            }
        }
    }

    #[test]
    fn disconnected_line_placement_rejected() {
        let mut spec = NetworkSpec::default_spec();
        // urban02's feeder is dropped: its station can no longer reach rail.
        spec.bus_lines.retain(|l| l.name != "bus00");
        let err = build_network(1, &spec).unwrap_err();
        assert!(matches!(err, Error::InvalidSpec(_)));
        let msg = err.to_string();
        assert!(msg.contains("disconnected") || msg.contains("no line"), "{msg}");
    }

    #[test]
    fn network_json_roundtrip() {
        let spec = NetworkSpec::default_spec();
        let net = build_network(1, &spec).unwrap();
        let text = net.to_json().unwrap();
        let back = RoadTransitNetwork::from_json(&text).unwrap();
        assert_eq!(net.to_json().unwrap(), back.to_json().unwrap());
    }

    #[test]
    fn area_adjacency_uses_centroid_distance() {
        let spec = NetworkSpec::default_spec();
        let net = build_network(1, &spec).unwrap();
        // ring neighbors are adjacent, downtown and the ring are not
        let u0 = net.areas.iter().position(|a| a.name == "urban00").unwrap();
        let u1 = net.areas.iter().position(|a| a.name == "urban01").unwrap();
        let dt = net.areas.iter().position(|a| a.name == "downtown").unwrap();
        assert!(net.areas_adjacent(u0, u1));
        assert!(net.areas_adjacent(u0, u0));
        assert!(!net.areas_adjacent(dt, u0));
    }
}
