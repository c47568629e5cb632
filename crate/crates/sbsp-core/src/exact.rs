//! Brute-force exact oracle for tiny instances and exhaustive enumeration of
//! a single school's integral start vectors. Everything the approximation
//! and integrality claims are anchored against runs through here.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{Instance, School};
use crate::schedule::{HorizonMode, StartSchedule};

#[derive(Debug, Error)]
pub enum ExactError {
    #[error("instance too large for exhaustive search: {routes} routes, {slots} slots (limits {max_routes}, {max_slots}); pass the override to force it")]
    TooLarge {
        routes: usize,
        slots: u32,
        max_routes: usize,
        max_slots: u32,
    },
    #[error("school too large to enumerate: {gamma} routes over {slots} slots")]
    SchoolTooLarge { gamma: usize, slots: u32 },
}

/// Search limits; the size guard keeps accidental exponential blowups out.
#[derive(Debug, Clone)]
pub struct ExactLimits {
    pub max_nodes: u64,
    /// Accept instances beyond the tiny-size guard.
    pub allow_large: bool,
    /// Warm-start incumbent, e.g. from the greedy or rounding pipeline.
    pub warm_start: Option<StartSchedule>,
}

impl Default for ExactLimits {
    fn default() -> Self {
        ExactLimits {
            max_nodes: 20_000_000,
            allow_large: false,
            warm_start: None,
        }
    }
}

const MAX_ROUTES: usize = 9;
const MAX_SLOTS: u32 = 6;
const ENUM_MAX_GAMMA: usize = 3;
const ENUM_MAX_SLOTS: u32 = 5;

/// Certified optimum with a witnessing schedule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactResult {
    pub opt: u32,
    pub schedule: StartSchedule,
    pub nodes_explored: u64,
    pub mode: HorizonMode,
    /// False when the node budget ran out; `opt` is then only an upper bound.
    pub certified: bool,
}

struct Search<'a> {
    inst: &'a Instance,
    /// `(school, route, length)` in search order: schools by descending
    /// route count, routes by descending length.
    order: Vec<Vec<(usize, u32)>>,
    school_order: Vec<usize>,
    loads: Vec<u32>,
    clip: u32,
    best: u32,
    best_starts: Vec<Vec<u32>>,
    current: Vec<Vec<u32>>,
    nodes: u64,
    max_nodes: u64,
    exhausted: bool,
}

impl<'a> Search<'a> {
    fn place(&mut self, school_idx: usize, route_idx: usize, current_max: u32) {
        if self.exhausted {
            return;
        }
        if school_idx == self.school_order.len() {
            if current_max < self.best {
                self.best = current_max;
                self.best_starts = self.current.clone();
            }
            return;
        }
        let school = self.school_order[school_idx];
        if route_idx == self.order[school_idx].len() {
            self.place(school_idx + 1, 0, current_max);
            return;
        }
        let window = self.inst.schools[school].window;
        // Placed siblings anchor the feasible slot range.
        let placed: Vec<u32> = self.current[school]
            .iter()
            .take(route_idx)
            .copied()
            .collect();
        let (lo, hi) = if placed.is_empty() {
            (1, self.inst.slots)
        } else {
            let min = *placed.iter().min().unwrap();
            let max = *placed.iter().max().unwrap();
            (max.saturating_sub(window).max(1), (min + window).min(self.inst.slots))
        };
        let (_, len) = self.order[school_idx][route_idx];
        for start in lo..=hi {
            self.nodes += 1;
            if self.nodes > self.max_nodes {
                self.exhausted = true;
                return;
            }
            let end = (start + len - 1).min(self.clip);
            let mut new_max = current_max;
            for t in start..=end {
                let l = &mut self.loads[(t - 1) as usize];
                *l += 1;
                new_max = new_max.max(*l);
            }
            // Any completion only raises the peak; prune at the incumbent.
            if new_max < self.best {
                self.current[school][route_idx] = start;
                self.place(school_idx, route_idx + 1, new_max);
            }
            for t in start..=end {
                self.loads[(t - 1) as usize] -= 1;
            }
            if self.exhausted {
                return;
            }
        }
    }
}

/// Depth-first search over per-route start slots, school by school, pruning
/// on the incumbent peak load. Returns the certified optimum under the
/// chosen horizon mode.
pub fn exact_opt(
    inst: &Instance,
    mode: HorizonMode,
    limits: &ExactLimits,
) -> Result<ExactResult, ExactError> {
    let total_routes = inst.total_routes();
    if !limits.allow_large && (total_routes > MAX_ROUTES || inst.slots > MAX_SLOTS) {
        return Err(ExactError::TooLarge {
            routes: total_routes,
            slots: inst.slots,
            max_routes: MAX_ROUTES,
            max_slots: MAX_SLOTS,
        });
    }

    let horizon = match mode {
        HorizonMode::Paper => inst.slots,
        HorizonMode::Extended => inst.slots + inst.stats().k_max.saturating_sub(1),
    };
    // Fail-first ordering: big schools first, long routes first.
    let mut school_order: Vec<usize> = (0..inst.num_schools()).collect();
    school_order.sort_by_key(|&n| (std::cmp::Reverse(inst.schools[n].num_routes()), n));
    let order: Vec<Vec<(usize, u32)>> = school_order
        .iter()
        .map(|&n| {
            let mut routes: Vec<(usize, u32)> = inst.schools[n]
                .route_lengths
                .iter()
                .copied()
                .enumerate()
                .collect();
            routes.sort_by_key(|&(i, len)| (std::cmp::Reverse(len), i));
            routes
        })
        .collect();

    // Incumbent: warm start when given, else everything at slot 1.
    let fallback = StartSchedule::co_start(inst, &vec![1; inst.num_schools()]);
    let seed_sched = limits.warm_start.as_ref().unwrap_or(&fallback);
    let seed_profile = crate::schedule::load_profile(inst, seed_sched, mode).expect("shape");
    let incumbent = crate::schedule::bus_count(&seed_profile);

    let mut search = Search {
        inst,
        order,
        school_order: school_order.clone(),
        loads: vec![0; horizon as usize],
        clip: horizon,
        best: incumbent + 1,
        best_starts: Vec::new(),
        current: inst
            .schools
            .iter()
            .map(|s| vec![0; s.num_routes()])
            .collect(),
        nodes: 0,
        max_nodes: limits.max_nodes,
        exhausted: false,
    };
    search.place(0, 0, 0);

    // The search stores route starts in search order per school; map back.
    let (opt, starts) = if search.best_starts.is_empty() {
        (incumbent, seed_sched.starts.clone())
    } else {
        let mut starts: Vec<Vec<u32>> = inst
            .schools
            .iter()
            .map(|s| vec![0; s.num_routes()])
            .collect();
        for (si, &school) in school_order.iter().enumerate() {
            for (ri, &(orig_route, _)) in search.order[si].iter().enumerate() {
                starts[school][orig_route] = search.best_starts[school][ri];
            }
        }
        (search.best, starts)
    };

    Ok(ExactResult {
        opt,
        schedule: StartSchedule::new(starts),
        nodes_explored: search.nodes,
        mode,
        certified: !search.exhausted,
    })
}

/// All integral start vectors of one school: every tuple in `[1, M]^Γ` whose
/// spread stays within the window, in lexicographic order.
pub fn enumerate_school_points(school: &School, slots: u32) -> Result<Vec<Vec<u32>>, ExactError> {
    let gamma = school.num_routes();
    if gamma > ENUM_MAX_GAMMA || slots > ENUM_MAX_SLOTS {
        return Err(ExactError::SchoolTooLarge { gamma, slots });
    }
    let mut out = Vec::new();
    let mut current = vec![1u32; gamma];
    loop {
        let min = *current.iter().min().unwrap();
        let max = *current.iter().max().unwrap();
        if max - min <= school.window {
            out.push(current.clone());
        }
        // Odometer increment.
        let mut k = gamma;
        loop {
            if k == 0 {
                return Ok(out);
            }
            k -= 1;
            if current[k] < slots {
                current[k] += 1;
                for v in &mut current[k + 1..] {
                    *v = 1;
                }
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::{assign_buses, check_feasible};

    #[test]
    fn co_start_is_forced_by_zero_window() {
        let inst = Instance::new(3, vec![School::new(0, vec![1, 1])]).unwrap();
        let res = exact_opt(&inst, HorizonMode::Paper, &ExactLimits::default()).unwrap();
        assert_eq!(res.opt, 2);
        assert!(res.certified);
    }

    #[test]
    fn window_allows_staggering() {
        let inst = Instance::new(2, vec![School::new(1, vec![1, 1])]).unwrap();
        let res = exact_opt(&inst, HorizonMode::Paper, &ExactLimits::default()).unwrap();
        assert_eq!(res.opt, 1);
    }

    #[test]
    fn schools_stagger_across() {
        let inst =
            Instance::new(2, vec![School::new(0, vec![1]), School::new(0, vec![1])]).unwrap();
        let res = exact_opt(&inst, HorizonMode::Paper, &ExactLimits::default()).unwrap();
        assert_eq!(res.opt, 1);
    }

    #[test]
    fn witness_attains_the_optimum() {
        for seed in 0..30 {
            let inst = crate::instance::generate(&crate::instance::GeneratorSpec::new(
                crate::instance::SizeClass::Explicit { slots: 4, schools: 3, gamma_max: 2 },
                crate::instance::Family::Base,
                seed,
            ))
            .unwrap();
            for mode in [HorizonMode::Paper, HorizonMode::Extended] {
                let res = exact_opt(&inst, mode, &ExactLimits::default()).unwrap();
                assert!(res.certified);
                assert!(check_feasible(&inst, &res.schedule).unwrap().is_feasible());
                let profile = crate::schedule::load_profile(&inst, &res.schedule, mode).unwrap();
                assert_eq!(crate::schedule::bus_count(&profile), res.opt);
            }
        }
    }

    #[test]
    fn oracle_matches_exhaustive_bus_assignment() {
        // Independent route: enumerate every feasible schedule outright and
        // take the best explicit bus assignment.
        for seed in 0..15 {
            let inst = crate::instance::generate(&crate::instance::GeneratorSpec::new(
                crate::instance::SizeClass::Explicit { slots: 3, schools: 2, gamma_max: 2 },
                crate::instance::Family::Base,
                seed,
            ))
            .unwrap();
            let res = exact_opt(&inst, HorizonMode::Extended, &ExactLimits::default()).unwrap();
            let mut best = u32::MAX;
            let total: usize = inst.total_routes();
            let m = inst.slots;
            let combos = (m as u64).pow(total as u32);
            for code in 0..combos {
                let mut c = code;
                let mut starts: Vec<Vec<u32>> = Vec::new();
                for school in &inst.schools {
                    let mut row = Vec::new();
                    for _ in 0..school.num_routes() {
                        row.push((c % m as u64) as u32 + 1);
                        c /= m as u64;
                    }
                    starts.push(row);
                }
                let sched = StartSchedule::new(starts);
                if check_feasible(&inst, &sched).unwrap().is_feasible() {
                    best = best.min(assign_buses(&inst, &sched).unwrap().bus_count as u32);
                }
            }
            assert_eq!(res.opt, best, "seed {seed}");
        }
    }

    #[test]
    fn node_budget_degrades_gracefully() {
        let inst = Instance::new(
            6,
            vec![School::new(2, vec![2, 3]), School::new(1, vec![1, 2]), School::new(0, vec![4])],
        )
        .unwrap();
        let limits = ExactLimits { max_nodes: 5, ..ExactLimits::default() };
        let res = exact_opt(&inst, HorizonMode::Paper, &limits).unwrap();
        assert!(!res.certified);
        // Still a valid schedule and an upper bound.
        assert!(check_feasible(&inst, &res.schedule).unwrap().is_feasible());
        let full = exact_opt(&inst, HorizonMode::Paper, &ExactLimits::default()).unwrap();
        assert!(full.certified);
        assert!(full.opt <= res.opt);
    }

    #[test]
    fn size_guard_triggers() {
        let inst = Instance::new(7, vec![School::new(0, vec![1; 10])]).unwrap();
        assert!(matches!(
            exact_opt(&inst, HorizonMode::Paper, &ExactLimits::default()),
            Err(ExactError::TooLarge { .. })
        ));
        let forced = exact_opt(
            &inst,
            HorizonMode::Paper,
            &ExactLimits { allow_large: true, ..ExactLimits::default() },
        )
        .unwrap();
        assert_eq!(forced.opt, 10);
    }

    #[test]
    fn school_point_counts() {
        let s1 = School::new(0, vec![1]);
        assert_eq!(
            enumerate_school_points(&s1, 3).unwrap(),
            vec![vec![1], vec![2], vec![3]]
        );
        let s2 = School::new(0, vec![1, 1]);
        assert_eq!(
            enumerate_school_points(&s2, 2).unwrap(),
            vec![vec![1, 1], vec![2, 2]]
        );
        let s3 = School::new(1, vec![1, 1]);
        assert_eq!(enumerate_school_points(&s3, 3).unwrap().len(), 7);
        let too_big = School::new(0, vec![1; 4]);
        assert!(enumerate_school_points(&too_big, 3).is_err());
    }
}
