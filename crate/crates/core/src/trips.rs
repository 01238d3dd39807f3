//! Trip types and seeded per-interval generation.
//!
//! A day is split into fixed-length intervals.  Each interval draws riders
//! first (pickup/dropoff areas from period-specific band distributions over
//! the areas), then drivers at a 1:N ratio following the rider demand.  All
//! draws come from one stream seeded by `(seed, t)`, so a generated interval
//! is a pure function of `(profile, network, t, seed)`.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{scale_secs, AreaKind, RoadTransitNetwork};
use crate::{NodeId, TripId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TripKind {
    Driver,
    Rider,
}

/// How a rider can be combined with a driver: carried first and dropped at a
/// station (`Type1`), or picked up at a station after riding transit (`Type2`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchType {
    Type1,
    Type2,
}

/// A single announced trip.  Driver-only fields (`seats`, `detour`,
/// `preferred_path`, `max_stops`) and the rider-only acceptance `threshold`
/// are optional and absent for the other kind.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trip {
    pub id: TripId,
    pub kind: TripKind,
    pub origin: NodeId,
    pub dest: NodeId,
    /// Seats the driver offers (capacity n >= 1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seats: Option<u32>,
    /// Driver detour budget in seconds (z).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detour: Option<u32>,
    /// Optional fixed path the driver intends to follow.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preferred_path: Option<Vec<NodeId>>,
    /// Max number of distinct pickup (Type 1) / dropoff (Type 2) stops.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_stops: Option<u32>,
    /// Earliest departure, seconds from the start of the day.
    pub earliest_depart: u32,
    /// Latest acceptable arrival.
    pub latest_arrive: u32,
    /// Max trip duration the announcer tolerates.
    pub max_duration: u32,
    /// Rider acceptance threshold in (0, 1].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    pub match_types: Vec<MatchType>,
}

impl Trip {
    pub fn is_driver(&self) -> bool {
        self.kind == TripKind::Driver
    }

    /// Seats offered; zero for riders.
    pub fn capacity(&self) -> u32 {
        self.seats.unwrap_or(0)
    }

    /// Stop limit; zero for riders.
    pub fn stops_limit(&self) -> u32 {
        self.max_stops.unwrap_or(0)
    }

    /// Acceptance threshold; 1 for drivers.
    pub fn accept_threshold(&self) -> f64 {
        self.threshold.unwrap_or(1.0)
    }

    pub fn allows(&self, mt: MatchType) -> bool {
        self.match_types.contains(&mt)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |reason: &str| {
            Err(Error::InvalidTrip {
                id: self.id,
                reason: reason.into(),
            })
        };
        if self.earliest_depart >= self.latest_arrive {
            return fail("earliest departure must precede latest arrival");
        }
        if self.max_duration == 0 {
            return fail("max duration must be positive");
        }
        if self.match_types.is_empty() {
            return fail("at least one match type required");
        }
        match self.kind {
            TripKind::Driver => {
                if self.capacity() == 0 {
                    return fail("driver must offer at least one seat");
                }
                if self.max_stops.is_none() {
                    return fail("driver must declare a stop limit");
                }
                if self.detour.is_none() {
                    return fail("driver must declare a detour budget");
                }
                if self.threshold.is_some() {
                    return fail("threshold is rider-only");
                }
            }
            TripKind::Rider => {
                let th = self.accept_threshold();
                if !(th > 0.0 && th <= 1.0) {
                    return fail("rider threshold must lie in (0, 1]");
                }
                if self.seats.is_some() || self.detour.is_some() || self.max_stops.is_some() {
                    return fail("seats/detour/stops are driver-only");
                }
            }
        }
        Ok(())
    }
}

/// JSON trip file: one generated interval.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TripFile {
    pub interval: u32,
    pub drivers: Vec<Trip>,
    pub riders: Vec<Trip>,
}

impl TripFile {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: TripFile = serde_json::from_str(text)?;
        for t in f.drivers.iter().chain(&f.riders) {
            t.validate()?;
        }
        Ok(f)
    }
}

// ---------------------------------------------------------------------------
// Demand model

/// Distance band of an area from the demand hot spot, measured in standard
/// deviations of a normal distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Band {
    Within2Sd,
    Sd2To3Sd,
    Beyond3Sd,
}

impl Band {
    /// Two-sided standard normal mass of the band.
    pub fn mass(self) -> f64 {
        match self {
            Band::Within2Sd => 0.95450,
            Band::Sd2To3Sd => 0.04280,
            Band::Beyond3Sd => 0.00270,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Band::Within2Sd => "within_2sd",
            Band::Sd2To3Sd => "sd2_to_3sd",
            Band::Beyond3Sd => "beyond_3sd",
        }
    }
}

/// Turn a band assignment into per-area probabilities: each occupied band's
/// normal mass is split uniformly among its areas, then the total is
/// renormalized over the occupied bands.  A band that is declared but holds
/// no areas is an error.
pub fn band_distribution(bands: &BTreeMap<Band, Vec<usize>>) -> Result<BTreeMap<usize, f64>> {
    if bands.is_empty() {
        return Err(Error::InvalidConfig("no bands declared".into()));
    }
    let mut total = 0.0;
    for (band, areas) in bands {
        if areas.is_empty() {
            return Err(Error::EmptyBand(band.name().into()));
        }
        total += band.mass();
    }
    let mut probs = BTreeMap::new();
    for (band, areas) in bands {
        let p = band.mass() / total / areas.len() as f64;
        for &a in areas {
            if probs.insert(a, p).is_some() {
                return Err(Error::InvalidConfig(format!(
                    "area {a} assigned to more than one band"
                )));
            }
        }
    }
    debug_assert!((probs.values().sum::<f64>() - 1.0).abs() < 1e-12);
    Ok(probs)
}

/// Band assignment by area role.  "Uniform over all areas" is expressed by
/// putting every role in the same band.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BandPattern {
    pub downtown: Band,
    pub airports: Band,
    pub urban: Band,
}

impl BandPattern {
    pub fn uniform() -> Self {
        BandPattern {
            downtown: Band::Within2Sd,
            airports: Band::Within2Sd,
            urban: Band::Within2Sd,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PeriodBands {
    pub pickup: BandPattern,
    pub dropoff: BandPattern,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Period {
    MorningRush,
    MorningNormal,
    Noon,
    AfternoonNormal,
    AfternoonRush,
    Evening,
}

/// Pickup/dropoff band maps for the six day periods.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeriodTable {
    pub morning_rush: PeriodBands,
    pub morning_normal: PeriodBands,
    pub noon: PeriodBands,
    pub afternoon_normal: PeriodBands,
    pub afternoon_rush: PeriodBands,
    pub evening: PeriodBands,
}

impl PeriodTable {
    /// Band maps transcribed from the demand description: rush hours flow
    /// toward downtown in the morning and outward in the afternoon.
    pub fn standard() -> Self {
        use Band::*;
        let p = |downtown, airports, urban| BandPattern {
            downtown,
            airports,
            urban,
        };
        PeriodTable {
            morning_rush: PeriodBands {
                pickup: BandPattern::uniform(),
                dropoff: p(Within2Sd, Sd2To3Sd, Beyond3Sd),
            },
            morning_normal: PeriodBands {
                pickup: p(Sd2To3Sd, Beyond3Sd, Within2Sd),
                dropoff: BandPattern::uniform(),
            },
            noon: PeriodBands {
                pickup: BandPattern::uniform(),
                dropoff: BandPattern::uniform(),
            },
            afternoon_normal: PeriodBands {
                pickup: p(Within2Sd, Within2Sd, Sd2To3Sd),
                dropoff: p(Sd2To3Sd, Sd2To3Sd, Within2Sd),
            },
            afternoon_rush: PeriodBands {
                pickup: p(Within2Sd, Sd2To3Sd, Beyond3Sd),
                dropoff: p(Beyond3Sd, Sd2To3Sd, Within2Sd),
            },
            evening: PeriodBands {
                pickup: p(Sd2To3Sd, Beyond3Sd, Within2Sd),
                dropoff: p(Sd2To3Sd, Beyond3Sd, Within2Sd),
            },
        }
    }

    pub fn bands_for(&self, period: Period) -> PeriodBands {
        match period {
            Period::MorningRush => self.morning_rush,
            Period::MorningNormal => self.morning_normal,
            Period::Noon => self.noon,
            Period::AfternoonNormal => self.afternoon_normal,
            Period::AfternoonRush => self.afternoon_rush,
            Period::Evening => self.evening,
        }
    }
}

/// Mix over the three capacity classes low [1,3], mid [3,5], high [4,6].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CapacityMix {
    pub low: f64,
    pub mid: f64,
    pub high: f64,
}

const CAPACITY_RANGES: [(u32, u32); 3] = [(1, 3), (3, 5), (4, 6)];

/// Everything the generator needs besides the network.  Every field except
/// the interval count and the count curve has a standard default, so profile
/// JSON can stay minimal.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerationProfile {
    /// Interval length in seconds.
    #[serde(default = "defaults::interval_length")]
    pub interval_length: u32,
    pub intervals_per_day: u32,
    /// Total trips (riders + drivers) per interval.
    pub count_curve: Vec<u32>,
    /// `[drivers, riders]`, e.g. `[1, 3]` for one driver per three riders.
    #[serde(default = "defaults::ratio")]
    pub driver_rider_ratio: [u32; 2],
    #[serde(default = "PeriodTable::standard")]
    pub period_table: PeriodTable,
    #[serde(default = "defaults::mix_peak")]
    pub capacity_mix_peak: CapacityMix,
    #[serde(default = "defaults::mix_offpeak")]
    pub capacity_mix_offpeak: CapacityMix,
    #[serde(default = "defaults::theta")]
    pub theta_default: f64,
    /// Chance a driver heads to a remote designated area.
    #[serde(default = "defaults::airport_prob")]
    pub airport_dest_prob: f64,
}

mod defaults {
    use super::CapacityMix;

    pub fn interval_length() -> u32 {
        900
    }
    pub fn ratio() -> [u32; 2] {
        [1, 3]
    }
    pub fn mix_peak() -> CapacityMix {
        CapacityMix {
            low: 0.95,
            mid: 0.05,
            high: 0.0,
        }
    }
    pub fn mix_offpeak() -> CapacityMix {
        CapacityMix {
            low: 0.8,
            mid: 0.1,
            high: 0.1,
        }
    }
    pub fn theta() -> f64 {
        0.8
    }
    pub fn airport_prob() -> f64 {
        0.05
    }
}

/// Hour of day at which the simulated day starts.
pub const DAY_START_HOUR: u32 = 6;

impl GenerationProfile {
    pub fn standard(intervals: u32, count_curve: Vec<u32>) -> Self {
        GenerationProfile {
            interval_length: defaults::interval_length(),
            intervals_per_day: intervals,
            count_curve,
            driver_rider_ratio: defaults::ratio(),
            period_table: PeriodTable::standard(),
            capacity_mix_peak: defaults::mix_peak(),
            capacity_mix_offpeak: defaults::mix_offpeak(),
            theta_default: defaults::theta(),
            airport_dest_prob: defaults::airport_prob(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count_curve.len() != self.intervals_per_day as usize {
            return Err(Error::InvalidConfig(format!(
                "count_curve has {} entries for {} intervals",
                self.count_curve.len(),
                self.intervals_per_day
            )));
        }
        if self.driver_rider_ratio[0] != 1 || self.driver_rider_ratio[1] == 0 {
            return Err(Error::InvalidConfig(
                "driver_rider_ratio must be [1, n] with n >= 1".into(),
            ));
        }
        if !(self.theta_default > 0.0 && self.theta_default <= 1.0) {
            return Err(Error::InvalidConfig("theta must lie in (0, 1]".into()));
        }
        for mix in [self.capacity_mix_peak, self.capacity_mix_offpeak] {
            let s = mix.low + mix.mid + mix.high;
            if (s - 1.0).abs() > 1e-9 || mix.low < 0.0 || mix.mid < 0.0 || mix.high < 0.0 {
                return Err(Error::InvalidConfig("capacity mix must sum to 1".into()));
            }
        }
        if !(0.0..=1.0).contains(&self.airport_dest_prob) {
            return Err(Error::InvalidConfig("airport probability out of range".into()));
        }
        if self.interval_length == 0 || self.intervals_per_day == 0 {
            return Err(Error::InvalidConfig("empty day".into()));
        }
        Ok(())
    }

    /// Seconds from day start at which interval `t` begins.
    pub fn interval_start(&self, t: u32) -> u32 {
        t * self.interval_length
    }

    fn hour_of(&self, t: u32) -> f64 {
        DAY_START_HOUR as f64 + (self.interval_start(t) as f64) / 3600.0
    }

    pub fn period_of(&self, t: u32) -> Period {
        let h = self.hour_of(t);
        if h < 10.0 {
            Period::MorningRush
        } else if h < 12.0 {
            Period::MorningNormal
        } else if h < 14.0 {
            Period::Noon
        } else if h < 17.0 {
            Period::AfternoonNormal
        } else if h < 20.0 {
            Period::AfternoonRush
        } else {
            Period::Evening
        }
    }

    /// Peak hours: 7-10 in the morning, 17-20 in the afternoon.
    pub fn is_peak(&self, t: u32) -> bool {
        let h = self.hour_of(t);
        (7.0..10.0).contains(&h) || (17.0..20.0).contains(&h)
    }

    /// Riders for interval `t`: the ratio share of the curve, rounded half-up.
    pub fn riders_for(&self, t: u32) -> u32 {
        let total = self.count_curve[t as usize] as u64;
        let r = self.driver_rider_ratio[1] as u64;
        ((2 * total * r + (r + 1)) / (2 * (r + 1))) as u32
    }

    /// Trips generated in the last four intervals depart immediately.
    fn alpha_is_immediate(&self, t: u32) -> bool {
        t + 4 >= self.intervals_per_day
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: GenerationProfile = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }
}

fn interval_rng(seed: u64, t: u32) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (t as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

struct AreaRoles {
    downtown: Vec<usize>,
    airports: Vec<usize>,
    urban: Vec<usize>,
}

fn area_roles(net: &RoadTransitNetwork) -> AreaRoles {
    let mut roles = AreaRoles {
        downtown: Vec::new(),
        airports: Vec::new(),
        urban: Vec::new(),
    };
    for (i, a) in net.areas.iter().enumerate() {
        match a.kind {
            AreaKind::DesignatedHub => roles.downtown.push(i),
            AreaKind::DesignatedRemote => roles.airports.push(i),
            AreaKind::Urban => roles.urban.push(i),
        }
    }
    roles
}

fn pattern_to_bands(
    pattern: BandPattern,
    roles: &AreaRoles,
    include_airports: bool,
) -> BTreeMap<Band, Vec<usize>> {
    let mut map: BTreeMap<Band, Vec<usize>> = BTreeMap::new();
    for &a in &roles.downtown {
        map.entry(pattern.downtown).or_default().push(a);
    }
    if include_airports {
        for &a in &roles.airports {
            map.entry(pattern.airports).or_default().push(a);
        }
    }
    for &a in &roles.urban {
        map.entry(pattern.urban).or_default().push(a);
    }
    for v in map.values_mut() {
        v.sort_unstable();
    }
    map
}

fn sample_area(probs: &BTreeMap<usize, f64>, rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (&a, &p) in probs {
        acc += p;
        last = a;
        if u < acc {
            return a;
        }
    }
    last
}

const REJECT_ATTEMPTS: usize = 1000;

/// Generate one interval of trips.  Returns `(drivers, riders)`.
pub fn generate_interval(
    profile: &GenerationProfile,
    net: &RoadTransitNetwork,
    t: u32,
    seed: u64,
) -> Result<(Vec<Trip>, Vec<Trip>)> {
    profile.validate()?;
    if t >= profile.intervals_per_day {
        return Err(Error::InvalidInterval {
            t,
            max: profile.intervals_per_day,
        });
    }
    let mut rng = interval_rng(seed, t);
    let roles = area_roles(net);
    let period = profile.period_of(t);
    let bands = profile.period_table.bands_for(period);
    let pick_probs = band_distribution(&pattern_to_bands(bands.pickup, &roles, true))?;
    let drop_probs = band_distribution(&pattern_to_bands(bands.dropoff, &roles, true))?;
    // Driver destinations: airports are drawn with a fixed probability, the
    // rest follows the rider dropoff pattern over non-airport areas.
    let drop_probs_land = band_distribution(&pattern_to_bands(bands.dropoff, &roles, false))?;

    let start = profile.interval_start(t);
    let immediate = profile.alpha_is_immediate(t);
    let peak = profile.is_peak(t);
    let match_types = if peak {
        match period {
            Period::MorningRush => vec![MatchType::Type1],
            _ => vec![MatchType::Type2],
        }
    } else {
        vec![MatchType::Type1, MatchType::Type2]
    };

    let n_areas = net.areas.len();
    let mut area_riders = vec![0u32; n_areas];
    let a_t = profile.riders_for(t);
    let mut riders = Vec::with_capacity(a_t as usize);
    let mut next_id: TripId = 0;

    for _ in 0..a_t {
        let pick_area = sample_area(&pick_probs, &mut rng);
        let o = net.areas[pick_area].nodes
            [rng.random_range(0..net.areas[pick_area].nodes.len())];
        let mut drop_area = None;
        for _ in 0..REJECT_ATTEMPTS {
            let cand = sample_area(&drop_probs, &mut rng);
            if !net.areas_adjacent(pick_area, cand) {
                drop_area = Some(cand);
                break;
            }
        }
        let drop_area = drop_area.ok_or_else(|| {
            Error::InvalidConfig("cannot sample a non-adjacent dropoff area".into())
        })?;
        let d = net.areas[drop_area].nodes
            [rng.random_range(0..net.areas[drop_area].nodes.len())];
        let alpha = if immediate {
            start
        } else {
            start + rng.random_range(0..=2 * profile.interval_length)
        };
        let transit = net.fastest_transit_route(o, d, alpha)?;
        riders.push(Trip {
            id: next_id,
            kind: TripKind::Rider,
            origin: o,
            dest: d,
            seats: None,
            detour: None,
            preferred_path: None,
            max_stops: None,
            earliest_depart: alpha,
            latest_arrive: alpha + transit.duration,
            max_duration: transit.duration,
            threshold: Some(profile.theta_default),
            match_types: match_types.clone(),
        });
        area_riders[pick_area] += 1;
        next_id += 1;
    }

    // Drivers per area: riders/ratio with the remainder carried area to area.
    let ratio = profile.driver_rider_ratio[1];
    let mut drivers = Vec::new();
    let mix = if peak {
        profile.capacity_mix_peak
    } else {
        profile.capacity_mix_offpeak
    };
    let mut carry = 0u32;
    for area in 0..n_areas {
        carry += area_riders[area];
        let n_drivers = carry / ratio;
        carry %= ratio;
        for _ in 0..n_drivers {
            let o = net.areas[area].nodes[rng.random_range(0..net.areas[area].nodes.len())];
            let mut dest_area = None;
            for _ in 0..REJECT_ATTEMPTS {
                let cand = if !roles.airports.is_empty()
                    && rng.random::<f64>() < profile.airport_dest_prob
                {
                    roles.airports[rng.random_range(0..roles.airports.len())]
                } else {
                    sample_area(&drop_probs_land, &mut rng)
                };
                if !net.areas_adjacent(area, cand) {
                    dest_area = Some(cand);
                    break;
                }
            }
            let dest_area = dest_area.ok_or_else(|| {
                Error::InvalidConfig("cannot sample a non-adjacent driver destination".into())
            })?;
            let d = net.areas[dest_area].nodes
                [rng.random_range(0..net.areas[dest_area].nodes.len())];
            let u: f64 = rng.random();
            let class = if u < mix.low {
                0
            } else if u < mix.low + mix.mid {
                1
            } else {
                2
            };
            let (lo, hi) = CAPACITY_RANGES[class];
            let n = rng.random_range(lo..=hi);
            let delta = if n <= 3 { n } else { rng.random_range(n - 2..=n) };
            let t_od = net.travel_time(o, d)?;
            let z_hi = (2 * t_od).min(1200).max(300);
            let z = rng.random_range(300..=z_hi);
            let alpha = if immediate {
                start
            } else {
                start + rng.random_range(0..=2 * profile.interval_length)
            };
            drivers.push(Trip {
                id: a_t as TripId + drivers.len() as TripId,
                kind: TripKind::Driver,
                origin: o,
                dest: d,
                seats: Some(n),
                detour: Some(z),
                preferred_path: None,
                max_stops: Some(delta),
                earliest_depart: alpha,
                latest_arrive: alpha + scale_secs(t_od + z, 1.5),
                max_duration: t_od + z,
                threshold: None,
                match_types: match_types.clone(),
            });
        }
    }

    Ok((drivers, riders))
}
