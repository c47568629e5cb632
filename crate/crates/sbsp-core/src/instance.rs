//! Problem instances: schools with arrival-window lengths and route lengths
//! on a discrete horizon of start slots, plus the four parametric generator
//! families used by the experiment harness.
//!
//! An instance lives on the inverted timeline: slot `1` is the earliest start
//! option and slot `M` the latest. Route lengths already include any constant
//! transition time (see [`Instance::with_transition_time`]).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised while constructing, loading, or generating instances.
#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("M must be at least 1")]
    EmptyHorizon,
    #[error("instance has no schools")]
    NoSchools,
    #[error("school {school} has no routes")]
    NoRoutes { school: usize },
    #[error("school {school} route {route} has zero length")]
    ZeroLengthRoute { school: usize, route: usize },
    #[error("school {school} route {route} has length {length} > M = {slots}")]
    RouteTooLong {
        school: usize,
        route: usize,
        length: u32,
        slots: u32,
    },
    #[error("invalid generator parameters: {0}")]
    InvalidGenerator(String),
    #[error("malformed instance document: {0}")]
    Malformed(String),
}

/// One school: its time-window length `l` and its route lengths.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct School {
    /// Window length `l`: the maximum spread allowed among the school's
    /// route start slots (inverted timeline).
    #[serde(rename = "l")]
    pub window: u32,
    /// Length of each route in slots. The list length is the school's
    /// route count.
    #[serde(rename = "routes")]
    pub route_lengths: Vec<u32>,
}

impl School {
    pub fn new(window: u32, route_lengths: Vec<u32>) -> Self {
        School {
            window,
            route_lengths,
        }
    }

    /// Number of routes attached to this school.
    pub fn num_routes(&self) -> usize {
        self.route_lengths.len()
    }
}

/// A full problem instance: the number of start slots `M` and the schools.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instance {
    /// Number of start-time slots `M`; starts are chosen in `1..=M`.
    #[serde(rename = "M")]
    pub slots: u32,
    pub schools: Vec<School>,
}

/// Aggregate figures derived from an instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceStats {
    /// Largest route count over all schools.
    pub gamma_max: u32,
    /// Largest route length over all routes.
    pub k_max: u32,
    /// Total number of routes across schools.
    pub total_routes: usize,
}

impl Instance {
    /// Build a validated instance. Route lengths above `M` are truncated to
    /// `M` and window lengths above `M` are clamped to `M`; empty school or
    /// route lists are rejected.
    pub fn new(slots: u32, schools: Vec<School>) -> Result<Self, InstanceError> {
        Self::build(slots, schools, true)
    }

    /// Like [`Instance::new`] but rejects route lengths above `M` instead of
    /// truncating them.
    pub fn new_strict(slots: u32, schools: Vec<School>) -> Result<Self, InstanceError> {
        Self::build(slots, schools, false)
    }

    fn build(slots: u32, mut schools: Vec<School>, truncate: bool) -> Result<Self, InstanceError> {
        if slots == 0 {
            return Err(InstanceError::EmptyHorizon);
        }
        if schools.is_empty() {
            return Err(InstanceError::NoSchools);
        }
        for (n, school) in schools.iter_mut().enumerate() {
            if school.route_lengths.is_empty() {
                return Err(InstanceError::NoRoutes { school: n });
            }
            for (i, len) in school.route_lengths.iter_mut().enumerate() {
                if *len == 0 {
                    return Err(InstanceError::ZeroLengthRoute { school: n, route: i });
                }
                if *len > slots {
                    if truncate {
                        *len = slots;
                    } else {
                        return Err(InstanceError::RouteTooLong {
                            school: n,
                            route: i,
                            length: *len,
                            slots,
                        });
                    }
                }
            }
            // A window of M already spans the whole horizon; larger values are
            // equivalent, so clamp rather than reject.
            if school.window > slots {
                school.window = slots;
            }
        }
        Ok(Instance { slots, schools })
    }

    /// Parse an instance from its JSON document, truncating over-long routes.
    pub fn from_json(bytes: &[u8]) -> Result<Self, InstanceError> {
        let raw: Instance = serde_json::from_slice(bytes)
            .map_err(|e| InstanceError::Malformed(e.to_string()))?;
        Self::new(raw.slots, raw.schools)
    }

    /// Parse an instance, rejecting routes longer than `M`.
    pub fn from_json_strict(bytes: &[u8]) -> Result<Self, InstanceError> {
        let raw: Instance = serde_json::from_slice(bytes)
            .map_err(|e| InstanceError::Malformed(e.to_string()))?;
        Self::new_strict(raw.slots, raw.schools)
    }

    /// Serialize to the canonical JSON document
    /// `{"M": int, "schools": [{"l": int, "routes": [int, ...]}, ...]}`.
    pub fn to_json(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("instance serialization cannot fail")
    }

    /// Fold a constant transition time into every route length, truncating
    /// at `M`.
    pub fn with_transition_time(&self, delta: u32) -> Instance {
        let schools = self
            .schools
            .iter()
            .map(|s| School {
                window: s.window,
                route_lengths: s
                    .route_lengths
                    .iter()
                    .map(|&r| (r.saturating_add(delta)).min(self.slots))
                    .collect(),
            })
            .collect();
        Instance {
            slots: self.slots,
            schools,
        }
    }

    /// Compute the derived maxima and totals.
    pub fn stats(&self) -> InstanceStats {
        let gamma_max = self
            .schools
            .iter()
            .map(|s| s.num_routes() as u32)
            .max()
            .unwrap_or(0);
        let k_max = self
            .schools
            .iter()
            .flat_map(|s| s.route_lengths.iter().copied())
            .max()
            .unwrap_or(0);
        InstanceStats {
            gamma_max,
            k_max,
            total_routes: self.total_routes(),
        }
    }

    pub fn num_schools(&self) -> usize {
        self.schools.len()
    }

    pub fn total_routes(&self) -> usize {
        self.schools.iter().map(|s| s.num_routes()).sum()
    }

    /// Iterate `(school, route, length)` in canonical order.
    pub fn routes(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        self.schools.iter().enumerate().flat_map(|(n, s)| {
            s.route_lengths
                .iter()
                .enumerate()
                .map(move |(i, &r)| (n, i, r))
        })
    }

    /// Copy of the instance with every window length forced to zero
    /// (the co-start special case).
    pub fn with_zero_windows(&self) -> Instance {
        Instance {
            slots: self.slots,
            schools: self
                .schools
                .iter()
                .map(|s| School::new(0, s.route_lengths.clone()))
                .collect(),
        }
    }
}

/// Generator family; each fixes the distributions of route counts, window
/// lengths, and route lengths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// Route counts, windows, and route lengths all uniform up to their maxima.
    Base,
    /// Windows restricted to a third of the horizon.
    ShortWindow,
    /// Route counts restricted to a third of the maximum. The name follows
    /// the literal parameter formula; see [`GeneratorSpec::short_route_alt`]
    /// for the alternate reading that shortens route lengths instead.
    ShortRouteLiteral,
    /// Half the schools draw few routes, the other half many.
    MixedSchool,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::Base,
        Family::ShortWindow,
        Family::ShortRouteLiteral,
        Family::MixedSchool,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Family::Base => "base",
            Family::ShortWindow => "short-window",
            Family::ShortRouteLiteral => "short-route",
            Family::MixedSchool => "mixed-school",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = InstanceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "base" => Ok(Family::Base),
            "short-window" => Ok(Family::ShortWindow),
            "short-route" => Ok(Family::ShortRouteLiteral),
            "mixed-school" => Ok(Family::MixedSchool),
            other => Err(InstanceError::InvalidGenerator(format!(
                "unknown family {other:?} (expected base, short-window, short-route, mixed-school)"
            ))),
        }
    }
}

/// Problem dimensions: a numbered size class or explicit `(M, N, Γ_max)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SizeClass {
    /// One of the four standard size rows.
    Numbered(u8),
    Explicit {
        slots: u32,
        schools: u32,
        gamma_max: u32,
    },
}

/// `(M, N, Γ_max)` for the standard numbered sizes.
pub const SIZE_TABLE: [(u32, u32, u32); 4] = [(10, 5, 50), (30, 50, 50), (50, 50, 100), (50, 100, 100)];

impl SizeClass {
    /// Resolve to concrete `(M, N, Γ_max)`.
    pub fn dimensions(&self) -> Result<(u32, u32, u32), InstanceError> {
        match *self {
            SizeClass::Numbered(k) => {
                if (1..=4).contains(&k) {
                    Ok(SIZE_TABLE[(k - 1) as usize])
                } else {
                    Err(InstanceError::InvalidGenerator(format!(
                        "size class {k} out of range 1..=4"
                    )))
                }
            }
            SizeClass::Explicit {
                slots,
                schools,
                gamma_max,
            } => {
                if slots == 0 || schools == 0 || gamma_max == 0 {
                    Err(InstanceError::InvalidGenerator(
                        "explicit size parameters must be positive".into(),
                    ))
                } else {
                    Ok((slots, schools, gamma_max))
                }
            }
        }
    }
}

/// Full description of a random instance draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub size: SizeClass,
    pub family: Family,
    pub seed: u64,
    /// Alternate short-route reading: with [`Family::ShortRouteLiteral`],
    /// draw route lengths from `[1, round(M/3)]` and keep route counts at the
    /// base range. Off by default.
    #[serde(default)]
    pub short_route_alt: bool,
}

impl GeneratorSpec {
    pub fn new(size: SizeClass, family: Family, seed: u64) -> Self {
        GeneratorSpec {
            size,
            family,
            seed,
            short_route_alt: false,
        }
    }
}

/// Endpoint of a uniform draw, rounded to the nearest integer and clamped
/// below at 1 so counts and lengths stay positive.
fn rounded_endpoint(value: f64) -> u32 {
    let r = value.round();
    if r < 1.0 {
        1
    } else {
        r as u32
    }
}

/// Integer uniform over the rounded-endpoint interval `[a, b]`.
fn draw(rng: &mut ChaCha8Rng, a: f64, b: f64) -> u32 {
    let lo = rounded_endpoint(a);
    let hi = rounded_endpoint(b).max(lo);
    rng.gen_range(lo..=hi)
}

/// Draw a random instance. The draw order is fixed (per school: route count,
/// then window, then each route length), so output is a pure function of the
/// spec.
pub fn generate(spec: &GeneratorSpec) -> Result<Instance, InstanceError> {
    let (slots, num_schools, gamma_max) = spec.size.dimensions()?;
    let m = slots as f64;
    let g = gamma_max as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut schools = Vec::with_capacity(num_schools as usize);
    for n in 0..num_schools {
        let gamma = match spec.family {
            Family::Base | Family::ShortWindow => draw(&mut rng, 1.0, g),
            Family::ShortRouteLiteral => {
                if spec.short_route_alt {
                    draw(&mut rng, 1.0, g)
                } else {
                    draw(&mut rng, 1.0, g / 3.0)
                }
            }
            // 1-based school index n+1; first floor(N/2) schools take the
            // low range, the rest the high range.
            Family::MixedSchool => {
                if n + 1 <= num_schools / 2 {
                    draw(&mut rng, 1.0, g / 3.0)
                } else {
                    draw(&mut rng, 2.0 * g / 3.0, g)
                }
            }
        };
        let window = match spec.family {
            Family::ShortWindow => draw(&mut rng, 1.0, m / 3.0),
            _ => draw(&mut rng, 1.0, m),
        };
        let route_hi = if spec.family == Family::ShortRouteLiteral && spec.short_route_alt {
            m / 3.0
        } else {
            m
        };
        let route_lengths = (0..gamma)
            .map(|_| draw(&mut rng, 1.0, route_hi))
            .collect();
        schools.push(School::new(window, route_lengths));
    }
    Instance::new(slots, schools)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_size_1_ranges() {
        let spec = GeneratorSpec::new(SizeClass::Numbered(1), Family::Base, 42);
        let inst = generate(&spec).unwrap();
        assert_eq!(inst.slots, 10);
        assert_eq!(inst.num_schools(), 5);
        for s in &inst.schools {
            assert!((1..=50).contains(&(s.num_routes() as u32)));
            assert!((1..=10).contains(&s.window));
            for &r in &s.route_lengths {
                assert!((1..=10).contains(&r));
            }
        }
    }

    #[test]
    fn degenerate_explicit_size_collapses_ranges() {
        let spec = GeneratorSpec::new(
            SizeClass::Explicit {
                slots: 1,
                schools: 1,
                gamma_max: 1,
            },
            Family::Base,
            7,
        );
        let inst = generate(&spec).unwrap();
        assert_eq!(inst.slots, 1);
        assert_eq!(inst.schools.len(), 1);
        assert_eq!(inst.schools[0].route_lengths, vec![1]);
        assert_eq!(inst.schools[0].window, 1);
    }

    #[test]
    fn generation_is_deterministic() {
        for family in Family::ALL {
            let spec = GeneratorSpec::new(SizeClass::Numbered(1), family, 123);
            assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        }
    }

    #[test]
    fn mixed_school_split() {
        let spec = GeneratorSpec::new(
            SizeClass::Explicit {
                slots: 10,
                schools: 9,
                gamma_max: 30,
            },
            Family::MixedSchool,
            5,
        );
        let inst = generate(&spec).unwrap();
        // N = 9: schools 1..=4 low range, 5..=9 high range (1-based).
        for (idx, school) in inst.schools.iter().enumerate() {
            let gamma = school.num_routes() as u32;
            if idx < 4 {
                assert!((1..=10).contains(&gamma), "low-block gamma {gamma}");
            } else {
                assert!((20..=30).contains(&gamma), "high-block gamma {gamma}");
            }
        }
    }

    #[test]
    fn short_window_range() {
        let spec = GeneratorSpec::new(SizeClass::Numbered(1), Family::ShortWindow, 99);
        let inst = generate(&spec).unwrap();
        for s in &inst.schools {
            assert!((1..=3).contains(&s.window)); // round(10/3) = 3
        }
    }

    #[test]
    fn short_route_literal_restricts_counts_not_lengths() {
        let spec = GeneratorSpec::new(SizeClass::Numbered(1), Family::ShortRouteLiteral, 99);
        let inst = generate(&spec).unwrap();
        for s in &inst.schools {
            assert!((1..=17).contains(&(s.num_routes() as u32))); // round(50/3) = 17
        }
    }

    #[test]
    fn short_route_alt_restricts_lengths() {
        let mut spec = GeneratorSpec::new(SizeClass::Numbered(1), Family::ShortRouteLiteral, 99);
        spec.short_route_alt = true;
        let inst = generate(&spec).unwrap();
        for s in &inst.schools {
            for &r in &s.route_lengths {
                assert!((1..=3).contains(&r));
            }
        }
    }

    #[test]
    fn save_is_canonical() {
        let inst = Instance::new(3, vec![School::new(1, vec![2])]).unwrap();
        assert_eq!(
            String::from_utf8(inst.to_json()).unwrap(),
            r#"{"M":3,"schools":[{"l":1,"routes":[2]}]}"#
        );
    }

    #[test]
    fn load_rejects_empty_routes() {
        let err = Instance::from_json(br#"{"M":3,"schools":[{"l":1,"routes":[]}]}"#).unwrap_err();
        assert_eq!(err.to_string(), "school 0 has no routes");
    }

    #[test]
    fn load_rejects_unknown_fields_and_negatives() {
        assert!(Instance::from_json(br#"{"M":3,"schools":[{"l":1,"routes":[2],"x":1}]}"#).is_err());
        assert!(Instance::from_json(br#"{"M":3,"schools":[{"l":-1,"routes":[2]}]}"#).is_err());
    }

    #[test]
    fn strict_load_rejects_long_routes() {
        let doc = br#"{"M":3,"schools":[{"l":1,"routes":[5]}]}"#;
        assert!(matches!(
            Instance::from_json_strict(doc),
            Err(InstanceError::RouteTooLong { school: 0, route: 0, length: 5, slots: 3 })
        ));
        // Default load truncates instead.
        assert_eq!(
            Instance::from_json(doc).unwrap().schools[0].route_lengths,
            vec![3]
        );
    }

    #[test]
    fn transition_time_shifts_and_truncates() {
        let inst = Instance::new(10, vec![School::new(2, vec![3, 9])]).unwrap();
        let shifted = inst.with_transition_time(1);
        assert_eq!(shifted.schools[0].route_lengths, vec![4, 10]);
        let big = inst.with_transition_time(5);
        assert_eq!(big.schools[0].route_lengths, vec![8, 10]);
        assert_eq!(inst.with_transition_time(0), inst);
    }

    #[test]
    fn stats_maxima() {
        let inst = Instance::new(
            8,
            vec![
                School::new(1, vec![3, 7]),
                School::new(0, vec![2, 5, 1, 1, 1]),
                School::new(2, vec![2]),
            ],
        )
        .unwrap();
        let stats = inst.stats();
        assert_eq!(stats.gamma_max, 5);
        assert_eq!(stats.k_max, 7);
        assert_eq!(stats.total_routes, 8);
    }

    #[test]
    fn roundtrip_generated_corpus() {
        for family in Family::ALL {
            for seed in 0..25 {
                let spec = GeneratorSpec::new(SizeClass::Numbered(1), family, seed);
                let inst = generate(&spec).unwrap();
                let back = Instance::from_json(&inst.to_json()).unwrap();
                assert_eq!(inst, back);
            }
        }
    }
}
