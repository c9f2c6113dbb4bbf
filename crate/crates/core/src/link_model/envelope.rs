//! Range, dominance and lower-envelope queries over a set of radios.

use super::{energy_per_byte, EnergyPerByte, LinkError, RadioModel};
use std::cmp::Ordering;

const RANGE_REL_TOL: f64 = 1e-6;
const CROSSOVER_ABS_TOL_M: f64 = 1e-4;
const CROSSOVER_SCAN_POINTS: usize = 1024;
// Left end used in place of d -> 0+.
const NEAR_ZERO_FRACTION: f64 = 1e-9;

/// Cheapest radio at one grid distance.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopePoint {
    pub distance_m: f64,
    pub radio_id: String,
    pub energy: EnergyPerByte,
}

/// Energy per byte at vanishing distance, `E_tx * (L + H) / L`.
pub fn energy_floor(model: &RadioModel) -> f64 {
    model.energy_per_frame * f64::from(model.frame_bits()) / f64::from(model.payload_bits)
}

/// Largest `d` with `pred(d)` true, given `pred` is true near 0 and turns
/// false at most once before `upper`.
fn bisect_last_true(upper: f64, pred: impl Fn(f64) -> bool) -> f64 {
    let mut lo = upper * NEAR_ZERO_FRACTION;
    // Probe just inside the open upper end.
    let top = upper * (1.0 - 1e-12);
    if pred(top) {
        return upper;
    }
    let mut hi = top;
    while hi - lo > RANGE_REL_TOL * hi {
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Largest distance at which `model` stays within `e_max` µJ per byte.
///
/// Returns `model.max_distance` when the budget holds over the whole
/// validity interval.
pub fn operational_range(model: &RadioModel, e_max: f64) -> Result<f64, LinkError> {
    let floor = energy_floor(model);
    if !(e_max > floor) {
        return Err(LinkError::BelowFloor {
            radio: model.id.clone(),
            e_max,
            floor,
        });
    }
    let budget = EnergyPerByte::Finite(e_max);
    Ok(bisect_last_true(model.max_distance, |d| {
        energy_per_byte(model, d).map(|e| e <= budget).unwrap_or(false)
    }))
}

/// Operational range of a hybrid radio that always uses its cheapest member.
pub fn system_operational_range(models: &[RadioModel], e_max: f64) -> Result<f64, LinkError> {
    let upper = common_upper(models)?;
    let best_floor = models.iter().map(energy_floor).fold(f64::INFINITY, f64::min);
    if !(e_max > best_floor) {
        return Err(LinkError::BelowFloor {
            radio: "system".to_string(),
            e_max,
            floor: best_floor,
        });
    }
    let budget = EnergyPerByte::Finite(e_max);
    Ok(bisect_last_true(upper, |d| {
        models.iter().any(|m| {
            energy_per_byte(m, d)
                .map(|e| e <= budget)
                .unwrap_or(false)
        })
    }))
}

fn common_upper(models: &[RadioModel]) -> Result<f64, LinkError> {
    if models.is_empty() {
        return Err(LinkError::Empty("model list"));
    }
    Ok(models
        .iter()
        .map(|m| m.max_distance)
        .fold(f64::INFINITY, f64::min))
}

/// True when at every grid point some radio in `others` is strictly cheaper
/// than `candidate`. Such a radio adds nothing to a hybrid design.
pub fn is_dominated(
    candidate: &RadioModel,
    others: &[RadioModel],
    grid: &[f64],
) -> Result<bool, LinkError> {
    if grid.is_empty() {
        return Err(LinkError::Empty("distance grid"));
    }
    for &d in grid {
        let own = energy_per_byte(candidate, d)?;
        let mut beaten = false;
        for other in others {
            if energy_per_byte(other, d)? < own {
                beaten = true;
            }
        }
        if !beaten {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Cheapest radio per grid distance. Ties go to the earlier model.
pub fn lower_envelope(
    models: &[RadioModel],
    grid: &[f64],
) -> Result<Vec<EnvelopePoint>, LinkError> {
    if models.is_empty() {
        return Err(LinkError::Empty("model list"));
    }
    if grid.is_empty() {
        return Err(LinkError::Empty("distance grid"));
    }
    grid.iter()
        .map(|&d| {
            let mut best: Option<(&RadioModel, EnergyPerByte)> = None;
            for m in models {
                let e = energy_per_byte(m, d)?;
                match best {
                    Some((_, b)) if e >= b => {}
                    _ => best = Some((m, e)),
                }
            }
            let (m, energy) = best.expect("non-empty model list");
            Ok(EnvelopePoint {
                distance_m: d,
                radio_id: m.id.clone(),
                energy,
            })
        })
        .collect()
}

/// Distance where the energy-per-byte curves of two radios cross.
///
/// The shared validity interval is scanned at 1024 points; exactly one sign
/// change of the energy difference is required, which is then refined by
/// bisection to 0.1 mm.
pub fn crossover_distance(first: &RadioModel, second: &RadioModel) -> Result<f64, LinkError> {
    let upper = first.max_distance.min(second.max_distance);
    let compare = |d: f64| -> Result<Ordering, LinkError> {
        Ok(energy_per_byte(first, d)?.cmp(&energy_per_byte(second, d)?))
    };

    let step = upper / (CROSSOVER_SCAN_POINTS + 1) as f64;
    let mut last: Option<(f64, Ordering)> = None;
    let mut bracket = None;
    let mut changes = 0;
    for k in 1..=CROSSOVER_SCAN_POINTS {
        let d = step * k as f64;
        let sign = compare(d)?;
        if sign == Ordering::Equal {
            continue;
        }
        if let Some((prev_d, prev_sign)) = last {
            if prev_sign != sign {
                changes += 1;
                bracket.get_or_insert((prev_d, d, prev_sign));
            }
        }
        last = Some((d, sign));
    }

    let (mut lo, mut hi, left_sign) = match (changes, bracket) {
        (1, Some(b)) => b,
        (0, _) => {
            return Err(LinkError::NoCrossover {
                first: first.id.clone(),
                second: second.id.clone(),
            })
        }
        _ => {
            return Err(LinkError::MultipleCrossovers {
                first: first.id.clone(),
                second: second.id.clone(),
                changes,
            })
        }
    };
    while hi - lo > CROSSOVER_ABS_TOL_M {
        let mid = 0.5 * (lo + hi);
        if compare(mid)? == left_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
