//! Model builders.
//!
//! `build_lp3s` produces the running-sum formulation used for every
//! production solve; `build_ssp_lp` the shared-start relaxation of the
//! zero-window problem; `build_lp3x` the start-indicator formulation,
//! kept only to cross-validate the running-sum optimum at tiny sizes.

use crate::instance::Instance;
use crate::schedule::HorizonMode;

use super::{LpError, LpModel, ModelKind, Row, Sense, VarKey, MAX_ROWS, ROW_WARN};

fn horizon(inst: &Instance, mode: HorizonMode) -> u32 {
    match mode {
        HorizonMode::Paper => inst.slots,
        HorizonMode::Extended => inst.slots + inst.stats().k_max.saturating_sub(1),
    }
}

/// Number of window-coupling rows kept for one school: ordered route pairs
/// times the slots whose shifted right end stays below `M`. Rows whose right
/// side lands on the final slot are omitted; the completion rows pin that
/// variable to 1, so they cannot cut anything.
fn window_rows_per_school(gamma: u128, window: u32, slots: u32) -> u128 {
    let nonvacuous = slots.saturating_sub(window + 1) as u128;
    gamma * gamma.saturating_sub(1) * nonvacuous
}

fn estimated_rows_lp3s(inst: &Instance, mode: HorizonMode) -> u128 {
    let m = inst.slots as u128;
    let mut rows = horizon(inst, mode) as u128;
    for school in &inst.schools {
        let gamma = school.num_routes() as u128;
        rows += window_rows_per_school(gamma, school.window, inst.slots);
        rows += gamma * (m - 1); // monotonicity
        rows += gamma; // completion
    }
    rows
}

fn check_size(rows: u128, name: &str) -> Result<(), LpError> {
    if rows > MAX_ROWS {
        return Err(LpError::TooLarge { rows });
    }
    if rows > ROW_WARN {
        log::warn!("{name}: {rows} rows estimated, above the {ROW_WARN} soft guard");
    }
    Ok(())
}

/// Build the running-sum model: one variable per (school, route, slot) plus
/// the max-load column; window-coupling, monotonicity, completion, and load
/// rows; objective is the max-load column alone.
pub fn build_lp3s(inst: &Instance, mode: HorizonMode) -> Result<LpModel, LpError> {
    check_size(estimated_rows_lp3s(inst, mode), "lp3s")?;
    let m = inst.slots;
    let mut model = LpModel::new(
        "SBSP_LP3S".to_string(),
        ModelKind::PrefixSbsp,
        inst.schools.iter().map(|s| s.num_routes()).collect(),
        m,
    );

    for (n, school) in inst.schools.iter().enumerate() {
        for i in 0..school.num_routes() {
            for slot in 1..=m {
                model.add_var(VarKey::Prefix { school: n, route: i, slot }, 0.0, 1.0);
            }
        }
    }
    let z = model.add_var(VarKey::MaxLoad, 0.0, f64::INFINITY);
    // Crash start: the greedy co-start schedule is feasible for every
    // coupling, monotonicity, and completion row (only the load rows need
    // the objective column raised), and it sits far closer to the optimum
    // than any all-ones corner, which cuts simplex iterations hard.
    let crash = crate::greedy::greedy_search(inst).schedule;
    for (n, school) in inst.schools.iter().enumerate() {
        let start = crash.starts[n][0];
        for i in 0..school.num_routes() {
            for slot in start..=m {
                let col = (model
                    .col(VarKey::Prefix { school: n, route: i, slot }))
                .expect("prefix column");
                model.start_at_upper[col] = true;
            }
        }
    }

    let prefix_col = |model: &LpModel, n: usize, i: usize, slot: u32| {
        model
            .col(VarKey::Prefix { school: n, route: i, slot })
            .expect("prefix column")
    };

    // Window coupling: a route's mass by slot t never exceeds any sibling's
    // mass by slot t + l. Rows whose right side is the pinned final slot are
    // vacuous and skipped.
    for (n, school) in inst.schools.iter().enumerate() {
        let gamma = school.num_routes();
        for i in 0..gamma {
            for j in 0..gamma {
                if i == j {
                    continue;
                }
                for t in 1..=m {
                    let rhs_slot = (t + school.window).min(m);
                    if rhs_slot == m {
                        break; // later t only move the right side further up
                    }
                    model.rows.push(Row {
                        name: format!("R3e_{n}_{i}_{j}_{t}"),
                        coeffs: sorted2(
                            (prefix_col(&model, n, i, t), 1.0),
                            (prefix_col(&model, n, j, rhs_slot), -1.0),
                        ),
                        sense: Sense::Le,
                        rhs: 0.0,
                    });
                }
            }
        }
    }

    // Monotonicity of running sums.
    for (n, school) in inst.schools.iter().enumerate() {
        for i in 0..school.num_routes() {
            for slot in 2..=m {
                model.rows.push(Row {
                    name: format!("R3f_{n}_{i}_{slot}"),
                    coeffs: sorted2(
                        (prefix_col(&model, n, i, slot - 1), 1.0),
                        (prefix_col(&model, n, i, slot), -1.0),
                    ),
                    sense: Sense::Le,
                    rhs: 0.0,
                });
            }
        }
    }

    // Every route's full mass is 1.
    for (n, school) in inst.schools.iter().enumerate() {
        for i in 0..school.num_routes() {
            model.rows.push(Row {
                name: format!("R3g_{n}_{i}"),
                coeffs: vec![(prefix_col(&model, n, i, m), 1.0)],
                sense: Sense::Eq,
                rhs: 1.0,
            });
        }
    }

    // Load rows: active mass during [t, t+1] is the running sum at t minus
    // the running sum just before the route could have started, indices
    // clipped to the horizon and slot 0 meaning zero.
    for t in 1..=horizon(inst, mode) {
        let mut coeffs = Vec::new();
        for (n, i, len) in inst.routes() {
            let hi = t.min(m);
            let lo = t.saturating_sub(len).min(m);
            if hi == lo {
                continue;
            }
            coeffs.push((prefix_col(&model, n, i, hi), 1.0));
            if lo >= 1 {
                coeffs.push((prefix_col(&model, n, i, lo), -1.0));
            }
        }
        coeffs.push((z, -1.0));
        coeffs.sort_unstable_by_key(|&(c, _)| c);
        model.rows.push(Row {
            name: format!("R3i_{t}"),
            coeffs,
            sense: Sense::Le,
            rhs: 0.0,
        });
    }

    model.objective = vec![(z, 1.0)];
    Ok(model)
}

/// Build the shared-start relaxation: one variable per (school, slot), an
/// assignment row per school, and a load row per slot in which each route
/// contributes the school variable over its own coverage window.
pub fn build_ssp_lp(inst: &Instance) -> Result<LpModel, LpError> {
    let m = inst.slots;
    let mut model = LpModel::new(
        "SSP_LP2".to_string(),
        ModelKind::SharedStartSsp,
        inst.schools.iter().map(|s| s.num_routes()).collect(),
        m,
    );
    for n in 0..inst.num_schools() {
        for slot in 1..=m {
            model.add_var(VarKey::Start { school: n, route: 0, slot }, 0.0, 1.0);
        }
    }
    let z = model.add_var(VarKey::MaxLoad, 0.0, f64::INFINITY);
    let start_col = |n: usize, slot: u32| (n as u32 * m + slot - 1) as usize;
    // Parking each school on the final slot satisfies the assignment rows.
    for n in 0..inst.num_schools() {
        model.start_at_upper[start_col(n, m)] = true;
    }

    for n in 0..inst.num_schools() {
        model.rows.push(Row {
            name: format!("R2a_{n}"),
            coeffs: (1..=m).map(|slot| (start_col(n, slot), 1.0)).collect(),
            sense: Sense::Eq,
            rhs: 1.0,
        });
    }

    let mut acc = vec![0.0f64; model.num_vars];
    for t in 1..=m {
        for (n, _i, len) in inst.routes() {
            let from = (t + 1).saturating_sub(len).max(1);
            for s in from..=t {
                acc[start_col(n, s)] += 1.0;
            }
        }
        let mut coeffs: Vec<(usize, f64)> = acc
            .iter()
            .enumerate()
            .filter(|&(_, &a)| a != 0.0)
            .map(|(c, &a)| (c, a))
            .collect();
        coeffs.push((z, -1.0));
        model.rows.push(Row {
            name: format!("R2b_{t}"),
            coeffs,
            sense: Sense::Le,
            rhs: 0.0,
        });
        acc.iter_mut().for_each(|a| *a = 0.0);
    }

    model.objective = vec![(z, 1.0)];
    Ok(model)
}

/// Build the start-indicator formulation (tiny-size cross-checks only):
/// assignment rows, load rows, and pairwise prefix-window rows with the same
/// vacuity omission as the running-sum builder.
pub fn build_lp3x(inst: &Instance, mode: HorizonMode) -> Result<LpModel, LpError> {
    let m = inst.slots;
    let mut rows_estimate = 0u128;
    for school in &inst.schools {
        let gamma = school.num_routes() as u128;
        rows_estimate += gamma; // assignment
        rows_estimate += window_rows_per_school(gamma, school.window, m);
    }
    rows_estimate += horizon(inst, mode) as u128;
    check_size(rows_estimate, "lp3x")?;

    let mut model = LpModel::new(
        "SBSP_LP3X".to_string(),
        ModelKind::StartSbsp,
        inst.schools.iter().map(|s| s.num_routes()).collect(),
        m,
    );
    for (n, school) in inst.schools.iter().enumerate() {
        for i in 0..school.num_routes() {
            for slot in 1..=m {
                model.add_var(VarKey::Start { school: n, route: i, slot }, 0.0, 1.0);
            }
        }
    }
    let z = model.add_var(VarKey::MaxLoad, 0.0, f64::INFINITY);
    let start_col = |model: &LpModel, n: usize, i: usize, slot: u32| {
        model
            .col(VarKey::Start { school: n, route: i, slot })
            .expect("start column")
    };
    // Parking each route on the final slot satisfies the assignment rows.
    for (n, school) in inst.schools.iter().enumerate() {
        for i in 0..school.num_routes() {
            let c = model
                .col(VarKey::Start { school: n, route: i, slot: m })
                .expect("start column");
            model.start_at_upper[c] = true;
        }
    }

    for (n, school) in inst.schools.iter().enumerate() {
        for i in 0..school.num_routes() {
            model.rows.push(Row {
                name: format!("R3a_{n}_{i}"),
                coeffs: (1..=m)
                    .map(|slot| (start_col(&model, n, i, slot), 1.0))
                    .collect(),
                sense: Sense::Eq,
                rhs: 1.0,
            });
        }
    }

    for t in 1..=horizon(inst, mode) {
        let mut coeffs = Vec::new();
        for (n, i, len) in inst.routes() {
            let from = (t + 1).saturating_sub(len).max(1);
            for s in from..=t.min(m) {
                coeffs.push((start_col(&model, n, i, s), 1.0));
            }
        }
        coeffs.push((z, -1.0));
        coeffs.sort_unstable_by_key(|&(c, _)| c);
        model.rows.push(Row {
            name: format!("R3b_{t}"),
            coeffs,
            sense: Sense::Le,
            rhs: 0.0,
        });
    }

    for (n, school) in inst.schools.iter().enumerate() {
        let gamma = school.num_routes();
        for i in 0..gamma {
            for j in 0..gamma {
                if i == j {
                    continue;
                }
                for t in 1..=m {
                    let rhs_slot = (t + school.window).min(m);
                    if rhs_slot == m {
                        break;
                    }
                    let mut coeffs: Vec<(usize, f64)> = (1..=t)
                        .map(|s| (start_col(&model, n, i, s), 1.0))
                        .collect();
                    coeffs.extend((1..=rhs_slot).map(|s| (start_col(&model, n, j, s), -1.0)));
                    coeffs.sort_unstable_by_key(|&(c, _)| c);
                    model.rows.push(Row {
                        name: format!("R3c_{n}_{i}_{j}_{t}"),
                        coeffs,
                        sense: Sense::Le,
                        rhs: 0.0,
                    });
                }
            }
        }
    }

    model.objective = vec![(z, 1.0)];
    Ok(model)
}

/// Running-sum polytope of a single school: window-coupling, monotonicity,
/// and completion rows with `[0, 1]` bounds; no load rows, no objective.
/// Route lengths play no part. Used by the vertex-integrality checks.
pub fn build_school_polytope(gamma: usize, window: u32, slots: u32) -> LpModel {
    let mut model = LpModel::new(
        "SCHOOL_PS".to_string(),
        ModelKind::SchoolPolytope,
        vec![gamma],
        slots,
    );
    for i in 0..gamma {
        for slot in 1..=slots {
            model.add_var(VarKey::Prefix { school: 0, route: i, slot }, 0.0, 1.0);
        }
    }
    for flag in &mut model.start_at_upper {
        *flag = true;
    }
    let col = |i: usize, slot: u32| (i as u32 * slots + slot - 1) as usize;
    for i in 0..gamma {
        for j in 0..gamma {
            if i == j {
                continue;
            }
            for t in 1..=slots {
                let rhs_slot = (t + window).min(slots);
                if rhs_slot == slots {
                    break;
                }
                model.rows.push(Row {
                    name: format!("R3e_0_{i}_{j}_{t}"),
                    coeffs: sorted2((col(i, t), 1.0), (col(j, rhs_slot), -1.0)),
                    sense: Sense::Le,
                    rhs: 0.0,
                });
            }
        }
    }
    for i in 0..gamma {
        for slot in 2..=slots {
            model.rows.push(Row {
                name: format!("R3f_0_{i}_{slot}"),
                coeffs: sorted2((col(i, slot - 1), 1.0), (col(i, slot), -1.0)),
                sense: Sense::Le,
                rhs: 0.0,
            });
        }
    }
    for i in 0..gamma {
        model.rows.push(Row {
            name: format!("R3g_0_{i}"),
            coeffs: vec![(col(i, slots), 1.0)],
            sense: Sense::Eq,
            rhs: 1.0,
        });
    }
    model
}

fn sorted2(a: (usize, f64), b: (usize, f64)) -> Vec<(usize, f64)> {
    if a.0 <= b.0 {
        vec![a, b]
    } else {
        vec![b, a]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::School;

    fn tally(model: &LpModel, tag: &str) -> usize {
        model.row_tallies().get(tag).copied().unwrap_or(0)
    }

    #[test]
    fn tiny_model_tallies() {
        // One school, two routes of length 1, window 1, three slots.
        let inst = Instance::new(3, vec![School::new(1, vec![1, 1])]).unwrap();
        let model = build_lp3s(&inst, HorizonMode::Paper).unwrap();
        assert_eq!(model.num_vars, 7); // 6 running sums + max load
        assert_eq!(tally(&model, "R3f"), 4);
        assert_eq!(tally(&model, "R3g"), 2);
        // Window rows survive only for t with t + window < M: t = 1, both
        // ordered pairs.
        assert_eq!(tally(&model, "R3e"), 2);
        assert_eq!(tally(&model, "R3i"), 3);
    }

    #[test]
    fn single_route_school_has_no_window_rows() {
        let inst = Instance::new(3, vec![School::new(1, vec![2])]).unwrap();
        let model = build_lp3s(&inst, HorizonMode::Paper).unwrap();
        assert_eq!(tally(&model, "R3e"), 0);
    }

    #[test]
    fn full_window_suppresses_all_window_rows() {
        let inst = Instance::new(4, vec![School::new(3, vec![1, 2, 1])]).unwrap();
        let model = build_lp3s(&inst, HorizonMode::Paper).unwrap();
        assert_eq!(tally(&model, "R3e"), 0);
    }

    #[test]
    fn extended_mode_adds_overhang_rows() {
        let inst = Instance::new(3, vec![School::new(0, vec![2])]).unwrap();
        let paper = build_lp3s(&inst, HorizonMode::Paper).unwrap();
        let ext = build_lp3s(&inst, HorizonMode::Extended).unwrap();
        assert_eq!(tally(&paper, "R3i"), 3);
        assert_eq!(tally(&ext, "R3i"), 4);
    }

    #[test]
    fn row_counts_match_direct_enumeration() {
        for seed in 0..100 {
            let inst = crate::instance::generate(&crate::instance::GeneratorSpec::new(
                crate::instance::SizeClass::Explicit {
                    slots: 6,
                    schools: 4,
                    gamma_max: 4,
                },
                crate::instance::Family::Base,
                seed,
            ))
            .unwrap();
            let model = build_lp3s(&inst, HorizonMode::Paper).unwrap();
            let m = inst.slots;
            let mut expect_e = 0usize;
            let mut expect_f = 0usize;
            let mut expect_g = 0usize;
            for school in &inst.schools {
                let gamma = school.num_routes();
                for _i in 0..gamma {
                    for _j in 0..gamma - 1 {
                        for t in 1..=m {
                            if (t + school.window).min(m) < m {
                                expect_e += 1;
                            }
                        }
                    }
                }
                expect_f += gamma * (m as usize - 1);
                expect_g += gamma;
            }
            assert_eq!(tally(&model, "R3e"), expect_e);
            assert_eq!(tally(&model, "R3f"), expect_f);
            assert_eq!(tally(&model, "R3g"), expect_g);
            assert_eq!(tally(&model, "R3i"), m as usize);
            assert_eq!(
                model.num_rows(),
                expect_e + expect_f + expect_g + m as usize
            );
        }
    }

    #[test]
    fn ssp_model_shares_one_variable_block_per_school() {
        let inst = Instance::new(2, vec![School::new(0, vec![1, 1, 1])]).unwrap();
        let model = build_ssp_lp(&inst).unwrap();
        assert_eq!(model.num_vars, 3); // two slots + max load
        // Load row at slot 1 must carry coefficient 3 on the slot-1 variable.
        let row = model.rows.iter().find(|r| r.name == "R2b_1").unwrap();
        let c = model
            .col(VarKey::Start { school: 0, route: 0, slot: 1 })
            .unwrap();
        assert_eq!(row.coeffs.iter().find(|&&(col, _)| col == c).unwrap().1, 3.0);
    }

    #[test]
    fn oversized_model_is_rejected() {
        let schools = vec![School::new(0, vec![1; 3000]); 600];
        let inst = Instance::new(3000, schools).unwrap();
        assert!(matches!(
            build_lp3s(&inst, HorizonMode::Paper),
            Err(LpError::TooLarge { .. })
        ));
    }
}
