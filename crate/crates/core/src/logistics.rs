//! Business layer: delivery patterns, inventory costs and vehicle data.

use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::seed;

/// Working days, Monday first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Weekday {
    Monday,
    Tuesday,
    Wednesday,
    Thursday,
    Friday,
}

impl Weekday {
    pub const ALL: [Weekday; 5] = [
        Weekday::Monday,
        Weekday::Tuesday,
        Weekday::Wednesday,
        Weekday::Thursday,
        Weekday::Friday,
    ];

    /// Bit of this day inside a pattern id. Monday is the most significant
    /// of the five bits, Friday the least.
    pub const fn bit(self) -> u8 {
        1 << (4 - self as u8)
    }

    pub const fn index(self) -> usize {
        self as usize
    }

    pub fn short_name(self) -> &'static str {
        match self {
            Weekday::Monday => "Mon",
            Weekday::Tuesday => "Tue",
            Weekday::Wednesday => "Wed",
            Weekday::Thursday => "Thu",
            Weekday::Friday => "Fri",
        }
    }
}

/// Number of working days in the planning week.
pub const WORKING_DAYS: usize = 5;

/// Highest delivery frequency (days per week).
pub const MAX_FREQUENCY: u8 = WORKING_DAYS as u8;

#[derive(Debug, Clone, PartialEq)]
pub enum LogisticsError {
    InadmissiblePattern(u8),
    InadmissibleFrequency { shop: usize, frequency: u8 },
    ShopOutOfRange { shop: usize, n_shops: usize },
    InvalidTable { shop: usize, reason: &'static str },
    InvalidProfile(&'static str),
    InvalidVehicle(&'static str),
}

impl fmt::Display for LogisticsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogisticsError::InadmissiblePattern(id) => write!(f, "pattern {id} is not admissible"),
            LogisticsError::InadmissibleFrequency { shop, frequency } => {
                write!(f, "frequency {frequency} is not admissible for shop {shop}")
            }
            LogisticsError::ShopOutOfRange { shop, n_shops } => {
                write!(f, "shop {shop} out of range 1..={n_shops}")
            }
            LogisticsError::InvalidTable { shop, reason } => {
                write!(f, "invalid inventory data for shop {shop}: {reason}")
            }
            LogisticsError::InvalidProfile(reason) => write!(f, "invalid generator profile: {reason}"),
            LogisticsError::InvalidVehicle(reason) => write!(f, "invalid vehicle config: {reason}"),
        }
    }
}

impl core::error::Error for LogisticsError {}

/// Weekly delivery pattern: a 5-bit day mask restricted to the business
/// approved set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pattern(u8);

/// The eleven admissible pattern ids.
pub const ADMISSIBLE_IDS: [u8; 11] = [5, 9, 10, 11, 13, 17, 18, 21, 23, 29, 31];

impl Pattern {
    pub fn new(id: u8) -> Result<Self, LogisticsError> {
        if ADMISSIBLE_IDS.contains(&id) {
            Ok(Pattern(id))
        } else {
            Err(LogisticsError::InadmissiblePattern(id))
        }
    }

    pub fn all() -> impl Iterator<Item = Pattern> {
        ADMISSIBLE_IDS.iter().map(|&id| Pattern(id))
    }

    /// Admissible patterns with exactly `frequency` delivery days.
    pub fn with_frequency(frequency: u8) -> impl Iterator<Item = Pattern> {
        Self::all().filter(move |p| p.frequency() == frequency)
    }

    pub const fn id(self) -> u8 {
        self.0
    }

    pub const fn frequency(self) -> u8 {
        self.0.count_ones() as u8
    }

    pub const fn serves(self, day: Weekday) -> bool {
        self.0 & day.bit() != 0
    }

    pub fn days(self) -> impl Iterator<Item = Weekday> {
        Weekday::ALL.into_iter().filter(move |&d| self.serves(d))
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Days served by pattern `id`.
pub fn pattern_days(id: u8) -> Result<Vec<Weekday>, LogisticsError> {
    Ok(Pattern::new(id)?.days().collect())
}

pub fn pattern_frequency(id: u8) -> Result<u8, LogisticsError> {
    Ok(Pattern::new(id)?.frequency())
}

/// Inventory cost and delivery size of one shop at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InventoryEntry {
    /// Euro per week.
    pub cost: f64,
    /// Roll containers per delivery.
    pub delivery_size: u32,
}

/// Per-frequency entries of one shop, index `f - 1` for frequency `f`.
pub type ShopRow = [Option<InventoryEntry>; WORKING_DAYS];

/// Inventory cost and delivery size per shop and frequency. Missing
/// entries are inadmissible frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct InventoryTable {
    rows: Vec<ShopRow>,
}

impl InventoryTable {
    /// `rows[k]` describes shop `k + 1`.
    pub fn new(rows: Vec<ShopRow>) -> Result<Self, LogisticsError> {
        for (k, row) in rows.iter().enumerate() {
            let shop = k + 1;
            if row.iter().all(Option::is_none) {
                return Err(LogisticsError::InvalidTable {
                    shop,
                    reason: "no admissible frequency",
                });
            }
            let mut prev: Option<f64> = None;
            for e in row.iter().flatten() {
                if !e.cost.is_finite() || e.cost < 0.0 {
                    return Err(LogisticsError::InvalidTable {
                        shop,
                        reason: "cost must be finite and non-negative",
                    });
                }
                if e.delivery_size == 0 {
                    return Err(LogisticsError::InvalidTable {
                        shop,
                        reason: "delivery size must be at least one roll container",
                    });
                }
                if prev.is_some_and(|p| e.cost > p) {
                    return Err(LogisticsError::InvalidTable {
                        shop,
                        reason: "cost increases with frequency",
                    });
                }
                prev = Some(e.cost);
            }
        }
        Ok(Self { rows })
    }

    /// Builds a table from `(shop, frequency, entry)` records.
    pub fn from_records(
        n_shops: usize,
        records: impl IntoIterator<Item = (usize, u8, InventoryEntry)>,
    ) -> Result<Self, LogisticsError> {
        let mut rows = alloc::vec![[None; WORKING_DAYS]; n_shops];
        for (shop, frequency, entry) in records {
            if shop == 0 || shop > n_shops {
                return Err(LogisticsError::ShopOutOfRange { shop, n_shops });
            }
            if frequency == 0 || frequency > MAX_FREQUENCY {
                return Err(LogisticsError::InadmissibleFrequency { shop, frequency });
            }
            let slot = &mut rows[shop - 1][frequency as usize - 1];
            if slot.is_some() {
                return Err(LogisticsError::InvalidTable {
                    shop,
                    reason: "duplicate frequency",
                });
            }
            *slot = Some(entry);
        }
        Self::new(rows)
    }

    pub fn n_shops(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, shop: usize) -> Result<&ShopRow, LogisticsError> {
        shop.checked_sub(1)
            .and_then(|k| self.rows.get(k))
            .ok_or(LogisticsError::ShopOutOfRange {
                shop,
                n_shops: self.rows.len(),
            })
    }

    /// Cost and delivery size of `shop` (node index, 1-based) served
    /// `frequency` days a week.
    pub fn lookup(&self, shop: usize, frequency: u8) -> Result<InventoryEntry, LogisticsError> {
        let row = self.row(shop)?;
        frequency
            .checked_sub(1)
            .and_then(|f| row.get(f as usize).copied().flatten())
            .ok_or(LogisticsError::InadmissibleFrequency { shop, frequency })
    }

    /// Iterates `(shop, frequency, entry)` in shop then frequency order.
    pub fn records(&self) -> impl Iterator<Item = (usize, u8, InventoryEntry)> + '_ {
        self.rows.iter().enumerate().flat_map(|(k, row)| {
            row.iter()
                .enumerate()
                .filter_map(move |(f, e)| e.map(|e| (k + 1, f as u8 + 1, e)))
        })
    }

    /// Patterns whose frequency is admissible for `shop`.
    pub fn admissible_patterns(&self, shop: usize) -> Result<Vec<Pattern>, LogisticsError> {
        let row = self.row(shop)?;
        Ok(Pattern::all()
            .filter(|p| row[p.frequency() as usize - 1].is_some())
            .collect())
    }

    pub fn max_delivery_size(&self) -> u32 {
        self.records()
            .map(|(_, _, e)| e.delivery_size)
            .max()
            .unwrap_or(0)
    }
}

/// Vehicle fleet parameters (homogeneous fleet).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleConfig {
    /// Roll containers.
    pub capacity: u32,
    /// Euro per km.
    pub cost_per_km: f64,
    /// km/h.
    pub speed: f64,
    /// Hours per shop visited.
    pub unload_time: f64,
    /// Hours per route.
    pub max_work_time: f64,
}

impl Default for VehicleConfig {
    fn default() -> Self {
        Self {
            capacity: 12,
            cost_per_km: 0.6,
            speed: 60.0,
            unload_time: 0.25,
            max_work_time: 8.0,
        }
    }
}

impl VehicleConfig {
    pub fn validate(&self) -> Result<(), LogisticsError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if self.capacity == 0 {
            return Err(LogisticsError::InvalidVehicle("capacity must be positive"));
        }
        if !positive(self.cost_per_km) {
            return Err(LogisticsError::InvalidVehicle("cost per km must be positive"));
        }
        if !positive(self.speed) {
            return Err(LogisticsError::InvalidVehicle("speed must be positive"));
        }
        if !positive(self.unload_time) {
            return Err(LogisticsError::InvalidVehicle("unload time must be positive"));
        }
        if !positive(self.max_work_time) {
            return Err(LogisticsError::InvalidVehicle("max work time must be positive"));
        }
        Ok(())
    }
}

/// Parameters of the synthetic inventory table generator.
///
/// Each shop gets a contiguous range of admissible frequencies inside
/// `[min_frequency, max_frequency]`, whole-euro costs drawn from
/// `[cost_min, cost_max]` and sorted so cost never rises with frequency,
/// and a weekly volume `v` from which the delivery size at frequency `f` is
/// `ceil(v / f)` clamped to `[1, capacity]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorProfile {
    pub cost_min: f64,
    pub cost_max: f64,
    pub min_frequency: u8,
    pub max_frequency: u8,
    pub weekly_volume_min: u32,
    pub weekly_volume_max: u32,
    pub capacity: u32,
}

impl Default for GeneratorProfile {
    fn default() -> Self {
        Self {
            cost_min: 280.0,
            cost_max: 340.0,
            min_frequency: 2,
            max_frequency: 5,
            weekly_volume_min: 4,
            weekly_volume_max: 10,
            capacity: 12,
        }
    }
}

impl GeneratorProfile {
    pub fn validate(&self) -> Result<(), LogisticsError> {
        if !(self.cost_min.is_finite() && self.cost_max.is_finite()) {
            return Err(LogisticsError::InvalidProfile("cost band must be finite"));
        }
        if self.cost_min < 0.0 || self.cost_min > self.cost_max {
            return Err(LogisticsError::InvalidProfile("cost band must satisfy 0 <= min <= max"));
        }
        if libm::ceil(self.cost_min) > libm::floor(self.cost_max) {
            return Err(LogisticsError::InvalidProfile("cost band contains no whole euro value"));
        }
        if self.min_frequency == 0
            || self.min_frequency > self.max_frequency
            || self.max_frequency > MAX_FREQUENCY
        {
            return Err(LogisticsError::InvalidProfile(
                "frequencies must satisfy 1 <= min <= max <= 5",
            ));
        }
        if self.weekly_volume_min == 0 || self.weekly_volume_min > self.weekly_volume_max {
            return Err(LogisticsError::InvalidProfile(
                "weekly volume must satisfy 1 <= min <= max",
            ));
        }
        if self.capacity == 0 {
            return Err(LogisticsError::InvalidProfile("capacity must be positive"));
        }
        Ok(())
    }
}

/// Generates a reproducible inventory table for `n_shops` shops.
pub fn synth_inventory_table(
    seed: u64,
    n_shops: usize,
    profile: &GeneratorProfile,
) -> Result<InventoryTable, LogisticsError> {
    profile.validate()?;
    if n_shops == 0 {
        return Err(LogisticsError::InvalidProfile("at least one shop is required"));
    }
    let mut rng = seed::stream(seed, &[0x1a_b1e]);
    let lo_cost = libm::ceil(profile.cost_min) as i64;
    let hi_cost = libm::floor(profile.cost_max) as i64;
    let mut rows = Vec::with_capacity(n_shops);
    for _ in 0..n_shops {
        let f_lo = rng.gen_range(profile.min_frequency..=profile.max_frequency);
        let f_hi = rng.gen_range(f_lo..=profile.max_frequency);
        let volume = rng.gen_range(profile.weekly_volume_min..=profile.weekly_volume_max);
        let mut costs: Vec<i64> = (f_lo..=f_hi)
            .map(|_| rng.gen_range(lo_cost..=hi_cost))
            .collect();
        costs.sort_unstable_by(|a, b| b.cmp(a));
        let mut row: ShopRow = [None; WORKING_DAYS];
        for (f, cost) in (f_lo..=f_hi).zip(costs) {
            let size = volume.div_ceil(f as u32).clamp(1, profile.capacity);
            row[f as usize - 1] = Some(InventoryEntry {
                cost: cost as f64,
                delivery_size: size,
            });
        }
        rows.push(row);
    }
    InventoryTable::new(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use Weekday::*;

    fn entry(cost: f64, delivery_size: u32) -> Option<InventoryEntry> {
        Some(InventoryEntry {
            cost,
            delivery_size,
        })
    }

    /// Shop 1, shop 2 and shop N of the published example table.
    fn example_table() -> InventoryTable {
        InventoryTable::new(vec![
            [None, None, None, entry(336.0, 2), entry(325.0, 2)],
            [None, None, None, entry(335.0, 2), entry(325.0, 2)],
            [None, entry(311.0, 3), entry(293.0, 2), entry(286.0, 2), entry(284.0, 1)],
        ])
        .unwrap()
    }

    #[test]
    fn pattern_days_examples() {
        assert_eq!(pattern_days(21).unwrap(), vec![Monday, Wednesday, Friday]);
        assert_eq!(
            pattern_days(31).unwrap(),
            vec![Monday, Tuesday, Wednesday, Thursday, Friday]
        );
        assert_eq!(pattern_days(5).unwrap(), vec![Wednesday, Friday]);
        assert_eq!(pattern_days(1), Err(LogisticsError::InadmissiblePattern(1)));
    }

    #[test]
    fn pattern_frequency_examples() {
        assert_eq!(pattern_frequency(23), Ok(4));
        assert_eq!(pattern_frequency(10), Ok(2));
        assert_eq!(pattern_frequency(31), Ok(5));
        assert!(pattern_frequency(0).is_err());
        assert!(pattern_frequency(32).is_err());
    }

    #[test]
    fn lookup_examples() {
        let t = example_table();
        let n = t.n_shops();
        let e = t.lookup(n, 4).unwrap();
        assert_eq!((e.cost, e.delivery_size), (286.0, 2));
        let e = t.lookup(1, 5).unwrap();
        assert_eq!((e.cost, e.delivery_size), (325.0, 2));
        assert_eq!(
            t.lookup(1, 2),
            Err(LogisticsError::InadmissibleFrequency {
                shop: 1,
                frequency: 2
            })
        );
        assert!(matches!(t.lookup(0, 4), Err(LogisticsError::ShopOutOfRange { .. })));
        assert!(matches!(t.lookup(4, 4), Err(LogisticsError::ShopOutOfRange { .. })));
    }

    #[test]
    fn admissible_patterns_follow_frequencies() {
        let t = example_table();
        let ids: Vec<u8> = t.admissible_patterns(1).unwrap().iter().map(|p| p.id()).collect();
        assert_eq!(ids, vec![23, 29, 31]);
        assert_eq!(t.admissible_patterns(3).unwrap().len(), 11);
    }

    #[test]
    fn table_rejects_bad_rows() {
        assert!(InventoryTable::new(vec![[None; 5]]).is_err());
        assert!(InventoryTable::new(vec![[None, entry(10.0, 1), entry(11.0, 1), None, None]]).is_err());
        assert!(InventoryTable::new(vec![[None, entry(10.0, 0), None, None, None]]).is_err());
        assert!(InventoryTable::from_records(1, [(1, 6, InventoryEntry { cost: 1.0, delivery_size: 1 })]).is_err());
    }

    #[test]
    fn generator_is_deterministic_and_in_band() {
        let profile = GeneratorProfile::default();
        let a = synth_inventory_table(42, 31, &profile).unwrap();
        let b = synth_inventory_table(42, 31, &profile).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, synth_inventory_table(43, 31, &profile).unwrap());
        for (_, f, e) in a.records() {
            assert!((280.0..=340.0).contains(&e.cost));
            assert!((2..=5).contains(&f));
            assert!((1..=12).contains(&e.delivery_size));
        }
    }

    #[test]
    fn generator_rejects_bad_profiles() {
        let bad = GeneratorProfile {
            cost_min: 10.0,
            cost_max: 5.0,
            ..GeneratorProfile::default()
        };
        assert!(synth_inventory_table(1, 3, &bad).is_err());
        let bad = GeneratorProfile {
            max_frequency: 6,
            ..GeneratorProfile::default()
        };
        assert!(synth_inventory_table(1, 3, &bad).is_err());
        assert!(synth_inventory_table(1, 0, &GeneratorProfile::default()).is_err());
    }

    #[test]
    fn vehicle_defaults_are_valid() {
        assert!(VehicleConfig::default().validate().is_ok());
        let v = VehicleConfig {
            speed: 0.0,
            ..VehicleConfig::default()
        };
        assert!(v.validate().is_err());
    }
}
