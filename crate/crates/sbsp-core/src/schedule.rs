//! Start-time schedules on the inverted timeline: load profiles, minimum bus
//! counts, explicit greedy bus assignments, feasibility checks, and the map
//! back to the original arrival-time view.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::Instance;

/// Whether load counting stops at slot `M` (matching the model's load rows)
/// or covers every slot a route can occupy (`M + K_max - 1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HorizonMode {
    Paper,
    Extended,
}

impl std::str::FromStr for HorizonMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paper" => Ok(HorizonMode::Paper),
            "extended" => Ok(HorizonMode::Extended),
            other => Err(format!("unknown horizon mode {other:?}")),
        }
    }
}

/// One start slot per route, `starts[school][route] ∈ 1..=M`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartSchedule {
    pub starts: Vec<Vec<u32>>,
}

impl StartSchedule {
    pub fn new(starts: Vec<Vec<u32>>) -> Self {
        StartSchedule { starts }
    }

    /// Schedule placing every route of school `n` at `school_starts[n]`.
    pub fn co_start(inst: &Instance, school_starts: &[u32]) -> Self {
        let starts = inst
            .schools
            .iter()
            .zip(school_starts)
            .map(|(s, &t)| vec![t; s.num_routes()])
            .collect();
        StartSchedule { starts }
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, serde_json::Error> {
        serde_json::from_slice(bytes)
    }

    pub fn to_json(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("schedule serialization cannot fail")
    }
}

/// Route counts per unit interval over the chosen horizon.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadProfile {
    /// `loads[t-1]` = number of routes active during `[t, t+1]`.
    pub loads: Vec<u32>,
    pub mode: HorizonMode,
}

/// Explicit route-to-bus assignment; routes on one bus occupy disjoint
/// closed slot spans.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BusAssignment {
    /// `bus_of[school][route]` = bus index.
    pub bus_of: Vec<Vec<usize>>,
    pub bus_count: usize,
}

/// First reason a schedule fails the window or range conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    StartOutOfRange {
        school: usize,
        route: usize,
        start: u32,
    },
    /// Two routes of one school spread wider than the window allows.
    WindowExceeded {
        school: usize,
        route_lo: usize,
        route_hi: usize,
        spread: u32,
        window: u32,
    },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            Violation::StartOutOfRange {
                school,
                route,
                start,
            } => write!(f, "school {school} route {route} starts at {start}, outside 1..=M"),
            Violation::WindowExceeded {
                school,
                route_lo,
                route_hi,
                spread,
                window,
            } => write!(
                f,
                "school {school} routes {route_lo} and {route_hi} spread {spread} > window {window}"
            ),
        }
    }
}

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("schedule has {got} schools, instance has {expected}")]
    SchoolCountMismatch { expected: usize, got: usize },
    #[error("school {school}: schedule has {got} starts, instance has {expected} routes")]
    RouteCountMismatch {
        school: usize,
        expected: usize,
        got: usize,
    },
    #[error("infeasible schedule: {0}")]
    Infeasible(Violation),
}

/// Outcome of a feasibility check; violations are data, not errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feasibility {
    Feasible,
    Infeasible(Violation),
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible)
    }
}

fn validate_shape(inst: &Instance, sched: &StartSchedule) -> Result<(), ScheduleError> {
    if sched.starts.len() != inst.num_schools() {
        return Err(ScheduleError::SchoolCountMismatch {
            expected: inst.num_schools(),
            got: sched.starts.len(),
        });
    }
    for (n, (school, starts)) in inst.schools.iter().zip(&sched.starts).enumerate() {
        if starts.len() != school.num_routes() {
            return Err(ScheduleError::RouteCountMismatch {
                school: n,
                expected: school.num_routes(),
                got: starts.len(),
            });
        }
    }
    Ok(())
}

/// Count active routes per unit interval. A route starting at `t` with
/// length `r` occupies the closed slot span `[t, t+r-1]`.
pub fn load_profile(
    inst: &Instance,
    sched: &StartSchedule,
    mode: HorizonMode,
) -> Result<LoadProfile, ScheduleError> {
    validate_shape(inst, sched)?;
    let horizon = match mode {
        HorizonMode::Paper => inst.slots,
        HorizonMode::Extended => inst.slots + inst.stats().k_max.saturating_sub(1),
    };
    let mut loads = vec![0u32; horizon as usize];
    for (n, i, len) in inst.routes() {
        let start = sched.starts[n][i];
        if start < 1 || start > inst.slots {
            return Err(ScheduleError::Infeasible(Violation::StartOutOfRange {
                school: n,
                route: i,
                start,
            }));
        }
        let end = (start + len - 1).min(horizon);
        for t in start..=end {
            loads[(t - 1) as usize] += 1;
        }
    }
    Ok(LoadProfile { loads, mode })
}

/// Peak of a load profile; this equals the minimum fleet size for the
/// schedule it came from.
pub fn bus_count(profile: &LoadProfile) -> u32 {
    profile.loads.iter().copied().max().unwrap_or(0)
}

/// Greedily pack routes onto buses in start order (ties: longer route first,
/// then school, then route index). A bus is reusable when its last route
/// ends strictly before the next start. The resulting count matches the
/// extended-horizon peak load.
pub fn assign_buses(inst: &Instance, sched: &StartSchedule) -> Result<BusAssignment, ScheduleError> {
    validate_shape(inst, sched)?;
    if let Feasibility::Infeasible(v) = check_feasible(inst, sched)? {
        return Err(ScheduleError::Infeasible(v));
    }

    let mut order: Vec<(usize, usize, u32, u32)> = inst
        .routes()
        .map(|(n, i, len)| (n, i, sched.starts[n][i], len))
        .collect();
    order.sort_by_key(|&(n, i, start, len)| (start, std::cmp::Reverse(len), n, i));

    let mut bus_of: Vec<Vec<usize>> = inst
        .schools
        .iter()
        .map(|s| vec![usize::MAX; s.num_routes()])
        .collect();
    let mut bus_last_end: Vec<u32> = Vec::new();
    for (n, i, start, len) in order {
        let end = start + len - 1;
        let slot = bus_last_end.iter().position(|&e| e < start);
        let bus = match slot {
            Some(b) => {
                bus_last_end[b] = end;
                b
            }
            None => {
                bus_last_end.push(end);
                bus_last_end.len() - 1
            }
        };
        bus_of[n][i] = bus;
    }
    Ok(BusAssignment {
        bus_count: bus_last_end.len(),
        bus_of,
    })
}

/// Check the range and window conditions, reporting the first violation in
/// school order.
pub fn check_feasible(inst: &Instance, sched: &StartSchedule) -> Result<Feasibility, ScheduleError> {
    validate_shape(inst, sched)?;
    for (n, (school, starts)) in inst.schools.iter().zip(&sched.starts).enumerate() {
        for (i, &t) in starts.iter().enumerate() {
            if t < 1 || t > inst.slots {
                return Ok(Feasibility::Infeasible(Violation::StartOutOfRange {
                    school: n,
                    route: i,
                    start: t,
                }));
            }
        }
        let (mut lo_idx, mut hi_idx) = (0usize, 0usize);
        for (i, &t) in starts.iter().enumerate() {
            if t < starts[lo_idx] {
                lo_idx = i;
            }
            if t > starts[hi_idx] {
                hi_idx = i;
            }
        }
        let spread = starts[hi_idx] - starts[lo_idx];
        if spread > school.window {
            return Ok(Feasibility::Infeasible(Violation::WindowExceeded {
                school: n,
                route_lo: lo_idx,
                route_hi: hi_idx,
                spread,
                window: school.window,
            }));
        }
    }
    Ok(Feasibility::Feasible)
}

/// Schedule in the original arrival-time view.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrivalSchedule {
    pub view: String,
    /// `arrivals[school][route]` = arrival slot on the original timeline.
    pub arrivals: Vec<Vec<u32>>,
}

/// Map a feasible start schedule back to the original timeline: inverted
/// slot `t` becomes arrival `M + 1 - t`. Applying the map twice is the
/// identity.
pub fn to_arrival_view(
    inst: &Instance,
    sched: &StartSchedule,
) -> Result<ArrivalSchedule, ScheduleError> {
    if let Feasibility::Infeasible(v) = check_feasible(inst, sched)? {
        return Err(ScheduleError::Infeasible(v));
    }
    let arrivals = sched
        .starts
        .iter()
        .map(|row| row.iter().map(|&t| inst.slots + 1 - t).collect())
        .collect();
    Ok(ArrivalSchedule {
        view: "arrival".to_string(),
        arrivals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::School;

    fn inst(slots: u32, schools: Vec<School>) -> Instance {
        Instance::new(slots, schools).unwrap()
    }

    #[test]
    fn single_route_profile() {
        let inst = inst(3, vec![School::new(0, vec![2])]);
        let sched = StartSchedule::new(vec![vec![1]]);
        let p = load_profile(&inst, &sched, HorizonMode::Paper).unwrap();
        assert_eq!(p.loads, vec![1, 1, 0]);
    }

    #[test]
    fn overlapping_routes_profile() {
        let inst = inst(3, vec![School::new(2, vec![2, 2])]);
        let sched = StartSchedule::new(vec![vec![1, 2]]);
        let p = load_profile(&inst, &sched, HorizonMode::Paper).unwrap();
        assert_eq!(p.loads, vec![1, 2, 1]);
        assert_eq!(bus_count(&p), 2);
    }

    #[test]
    fn extended_horizon_covers_overhang() {
        let inst = inst(3, vec![School::new(0, vec![2])]);
        let sched = StartSchedule::new(vec![vec![3]]);
        let ext = load_profile(&inst, &sched, HorizonMode::Extended).unwrap();
        assert_eq!(ext.loads, vec![0, 0, 1, 1]);
        let paper = load_profile(&inst, &sched, HorizonMode::Paper).unwrap();
        assert_eq!(paper.loads, vec![0, 0, 1]);
    }

    #[test]
    fn empty_profile_has_zero_buses() {
        assert_eq!(
            bus_count(&LoadProfile {
                loads: vec![0, 0],
                mode: HorizonMode::Paper
            }),
            0
        );
    }

    #[test]
    fn disjoint_routes_share_a_bus() {
        let inst = inst(3, vec![School::new(2, vec![1, 1])]);
        let sched = StartSchedule::new(vec![vec![1, 2]]);
        let a = assign_buses(&inst, &sched).unwrap();
        assert_eq!(a.bus_count, 1);
        assert_eq!(a.bus_of[0][0], a.bus_of[0][1]);
    }

    #[test]
    fn overlap_forces_second_bus() {
        let inst = inst(3, vec![School::new(2, vec![2, 2])]);
        let sched = StartSchedule::new(vec![vec![1, 2]]);
        let a = assign_buses(&inst, &sched).unwrap();
        assert_eq!(a.bus_count, 2);
    }

    #[test]
    fn feasibility_window_rules() {
        let zero = inst(5, vec![School::new(0, vec![1, 1])]);
        let ok = StartSchedule::new(vec![vec![2, 2]]);
        assert!(check_feasible(&zero, &ok).unwrap().is_feasible());

        let bad = StartSchedule::new(vec![vec![2, 3]]);
        match check_feasible(&zero, &bad).unwrap() {
            Feasibility::Infeasible(Violation::WindowExceeded {
                school: 0,
                spread: 1,
                window: 0,
                ..
            }) => {}
            other => panic!("unexpected {other:?}"),
        }

        let two = inst(5, vec![School::new(2, vec![1, 1])]);
        let edge = StartSchedule::new(vec![vec![1, 3]]);
        assert!(check_feasible(&two, &edge).unwrap().is_feasible());
    }

    #[test]
    fn arrival_map_and_window() {
        let inst = inst(10, vec![School::new(2, vec![1, 1])]);
        let sched = StartSchedule::new(vec![vec![4, 5]]);
        let view = to_arrival_view(&inst, &sched).unwrap();
        assert_eq!(view.arrivals, vec![vec![7, 6]]);
        assert_eq!(view.view, "arrival");
        // School start = latest arrival; all arrivals inside [s - l, s].
        let s = *view.arrivals[0].iter().max().unwrap();
        for &a in &view.arrivals[0] {
            assert!(a >= s - 2 && a <= s);
        }
    }

    #[test]
    fn double_inversion_is_identity() {
        let inst = inst(10, vec![School::new(3, vec![2, 4]), School::new(1, vec![1])]);
        let sched = StartSchedule::new(vec![vec![4, 6], vec![9]]);
        let once = to_arrival_view(&inst, &sched).unwrap();
        let twice: Vec<Vec<u32>> = once
            .arrivals
            .iter()
            .map(|row| row.iter().map(|&t| inst.slots + 1 - t).collect())
            .collect();
        assert_eq!(twice, sched.starts);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let inst = inst(3, vec![School::new(0, vec![1])]);
        let sched = StartSchedule::new(vec![vec![1], vec![2]]);
        assert!(matches!(
            load_profile(&inst, &sched, HorizonMode::Paper),
            Err(ScheduleError::SchoolCountMismatch { .. })
        ));
    }
}
