//! Fractional schedules: per-route start-mass marginals and their running
//! sums, read off a feasible model solution.

use serde::{Deserialize, Serialize};

use super::{LpError, LpModel, ModelKind, VarKey};

/// Tolerance for the feasibility gate when accepting a solution vector.
pub const FEAS_TOL: f64 = 1e-7;
/// Tolerance for cleanup: snapping, clamping, and renormalization.
pub const CLEAN_TOL: f64 = 1e-9;

/// Marginal start distributions `x` and running sums per route, with the
/// model optimum.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FractionalSchedule {
    /// `x[school][route][slot-1]`: probability the route starts at the slot.
    pub x: Vec<Vec<Vec<f64>>>,
    /// `prefix[school][route][slot-1]`: running sum of `x` up to the slot;
    /// nondecreasing and ending at 1.
    pub prefix: Vec<Vec<Vec<f64>>>,
    /// Objective value of the solved relaxation.
    pub z_lp: f64,
}

impl FractionalSchedule {
    pub fn slots(&self) -> usize {
        self.x
            .first()
            .and_then(|s| s.first())
            .map_or(0, |r| r.len())
    }

    pub fn num_schools(&self) -> usize {
        self.x.len()
    }

    pub fn route_x(&self, school: usize, route: usize) -> &[f64] {
        &self.x[school][route]
    }

    pub fn route_prefix(&self, school: usize, route: usize) -> &[f64] {
        &self.prefix[school][route]
    }
}

/// Finite differences of a running-sum vector (`prefix[-1]` taken as 0).
/// Rejects decreases beyond tolerance; clamps smaller ones to zero mass.
pub fn x_from_s(prefix: &[f64]) -> Result<Vec<f64>, LpError> {
    let mut out = Vec::with_capacity(prefix.len());
    let mut prev = 0.0;
    for (m, &s) in prefix.iter().enumerate() {
        let diff = s - prev;
        if diff < -CLEAN_TOL {
            return Err(LpError::NumericalDrift(format!(
                "running sum decreases by {:.3e} at slot {}",
                -diff,
                m + 1
            )));
        }
        out.push(diff.max(0.0));
        prev = s;
    }
    Ok(out)
}

/// Running sums of a mass vector. Rejects negative mass beyond tolerance;
/// clamps smaller negatives to zero.
pub fn s_from_x(x: &[f64]) -> Result<Vec<f64>, LpError> {
    let mut out = Vec::with_capacity(x.len());
    let mut acc = 0.0;
    for (m, &v) in x.iter().enumerate() {
        if v < -CLEAN_TOL {
            return Err(LpError::NumericalDrift(format!(
                "negative mass {:.3e} at slot {}",
                -v,
                m + 1
            )));
        }
        acc += v.max(0.0);
        out.push(acc);
    }
    Ok(out)
}

/// Clean a raw running-sum vector: snap to 0/1 within tolerance, restore
/// monotonicity across sub-tolerance dips, and pin the final entry to 1.
fn clean_prefix(raw: &mut [f64]) -> Result<(), LpError> {
    let last = raw.len() - 1;
    if (raw[last] - 1.0).abs() > CLEAN_TOL {
        return Err(LpError::NumericalDrift(format!(
            "final running sum {} is not 1",
            raw[last]
        )));
    }
    raw[last] = 1.0;
    let mut prev = 0.0;
    for v in raw.iter_mut() {
        if v.abs() <= CLEAN_TOL {
            *v = 0.0;
        } else if (*v - 1.0).abs() <= CLEAN_TOL {
            *v = 1.0;
        }
        if *v < prev {
            if prev - *v > CLEAN_TOL {
                return Err(LpError::NumericalDrift(format!(
                    "running sum decreases by {:.3e}",
                    prev - *v
                )));
            }
            *v = prev;
        }
        prev = *v;
    }
    Ok(())
}

/// Read a fractional schedule off a solution vector for `model`. The vector
/// is first checked feasible within `FEAS_TOL` (rows) and `CLEAN_TOL`
/// (bounds); extraction then applies the cleanup tolerances.
pub fn extract_fractional(model: &LpModel, values: &[f64]) -> Result<FractionalSchedule, LpError> {
    assert_eq!(values.len(), model.num_vars, "solution length mismatch");
    if let Some((row, violation)) = model.worst_violation(values, FEAS_TOL) {
        return Err(LpError::SolutionInfeasible {
            row: row.name.clone(),
            violation,
        });
    }
    for (c, (&v, &(lo, hi))) in values.iter().zip(&model.bounds).enumerate() {
        let viol = (lo - v).max(v - hi);
        if viol > CLEAN_TOL {
            return Err(LpError::BoundViolated {
                column: model.col_name(c),
                violation: viol,
            });
        }
    }

    let m = model.slots;
    let z_lp = model.objective_value(values);
    let mut x = Vec::with_capacity(model.shape.len());
    let mut prefix = Vec::with_capacity(model.shape.len());

    for (n, &routes) in model.shape.iter().enumerate() {
        let mut school_x = Vec::with_capacity(routes);
        let mut school_prefix = Vec::with_capacity(routes);
        for i in 0..routes {
            let mut pref: Vec<f64> = match model.kind {
                ModelKind::PrefixSbsp | ModelKind::SchoolPolytope => (1..=m)
                    .map(|slot| {
                        values[model
                            .col(VarKey::Prefix { school: n, route: i, slot })
                            .expect("prefix column")]
                    })
                    .collect(),
                ModelKind::SharedStartSsp => {
                    let masses: Vec<f64> = (1..=m)
                        .map(|slot| {
                            values[model
                                .col(VarKey::Start { school: n, route: 0, slot })
                                .expect("shared start column")]
                        })
                        .collect();
                    s_from_x(&masses)?
                }
                ModelKind::StartSbsp => {
                    let masses: Vec<f64> = (1..=m)
                        .map(|slot| {
                            values[model
                                .col(VarKey::Start { school: n, route: i, slot })
                                .expect("start column")]
                        })
                        .collect();
                    s_from_x(&masses)?
                }
                ModelKind::Imported => return Err(LpError::NotASchedule(model.kind)),
            };
            clean_prefix(&mut pref)?;
            school_x.push(x_from_s(&pref)?);
            school_prefix.push(pref);
        }
        x.push(school_x);
        prefix.push(school_prefix);
    }

    Ok(FractionalSchedule { x, prefix, z_lp })
}
