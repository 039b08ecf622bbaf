//! Fluid-flow companion model.
//!
//! Work arrives and is served as continuous flow at piecewise-constant
//! rates. Within each constant-rate piece the workload moves linearly at
//! `alpha - beta`, pinned at the empty (`x = 0`) and full (`x = theta`)
//! boundaries; overflow spills at rate `alpha - beta` while the buffer is
//! pinned full. Trajectories are therefore exact closed-form polylines and
//! the loss volume is an exact sum of products, which makes the derivative
//! check against finite differences essentially noise-free.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Constant inflow/outflow rates holding from `start` until the next
/// segment (or the horizon).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSegment {
    pub start: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// Piecewise-constant rate inputs over a finite horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluidModel {
    pub segments: Vec<RateSegment>,
    pub t_f: f64,
    /// Initial workload volume.
    #[serde(default)]
    pub x0: f64,
}

impl FluidModel {
    pub fn new(segments: Vec<RateSegment>, t_f: f64, x0: f64) -> Result<Self> {
        if !(t_f > 0.0) {
            return Err(Error::parameter(format!("horizon must be positive, got {t_f}")));
        }
        if segments.is_empty() {
            return Err(Error::parameter("at least one rate segment is required"));
        }
        if segments[0].start != 0.0 {
            return Err(Error::parameter("first rate segment must start at 0"));
        }
        for (i, seg) in segments.iter().enumerate() {
            if !seg.alpha.is_finite() || !seg.beta.is_finite() || seg.alpha < 0.0 || seg.beta < 0.0
            {
                return Err(Error::parameter(format!(
                    "segment {i} rates must be finite and nonnegative"
                )));
            }
            if i > 0 && seg.start <= segments[i - 1].start {
                return Err(Error::parameter(format!(
                    "segment starts must be strictly increasing at index {i}"
                )));
            }
            if seg.start >= t_f {
                return Err(Error::parameter(format!(
                    "segment {i} starts at {} beyond the horizon {t_f}",
                    seg.start
                )));
            }
        }
        if !(x0 >= 0.0) {
            return Err(Error::parameter(format!("initial workload must be nonnegative, got {x0}")));
        }
        Ok(FluidModel { segments, t_f, x0 })
    }

    /// Parse the JSON document form:
    /// `{"t_f": ..., "x0": ..., "segments": [{"start":..., "alpha":..., "beta":...}, ...]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: FluidModel = serde_json::from_str(text)
            .map_err(|e| Error::parameter(format!("invalid fluid model JSON: {e}")))?;
        FluidModel::new(raw.segments, raw.t_f, raw.x0)
    }
}

/// One linear piece of the workload trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySegment {
    pub start: f64,
    pub end: f64,
    pub x_start: f64,
    pub x_end: f64,
}

/// Trajectory, loss volume, and lossy busy-period count for one buffer size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluidResult {
    pub theta: f64,
    pub loss_volume: f64,
    /// Count of busy periods (maximal spans with positive workload)
    /// containing at least one overflow interval.
    #[serde(rename = "N")]
    pub n_lossy: u64,
    /// Epochs where the dynamics mode changes: segment boundaries and
    /// boundary hitting times.
    pub breakpoints: Vec<f64>,
    pub trajectory: Vec<TrajectorySegment>,
    /// Total outflow volume, for conservation checks.
    pub outflow: f64,
}

/// Integrate the flow dynamics exactly for buffer size `theta`.
pub fn simulate_fluid(model: &FluidModel, theta: f64) -> Result<FluidResult> {
    if !(theta > 0.0) {
        return Err(Error::parameter(format!("buffer size must be positive, got {theta}")));
    }
    if model.x0 > theta {
        return Err(Error::parameter(format!(
            "initial workload {} exceeds buffer size {theta}",
            model.x0
        )));
    }

    let mut t = 0.0;
    let mut x = model.x0;
    let mut loss = 0.0;
    let mut outflow = 0.0;
    let mut breakpoints = vec![0.0];
    let mut trajectory: Vec<TrajectorySegment> = Vec::new();
    // Spans pinned full with positive spill, for lossy-period detection.
    let mut loss_intervals: Vec<(f64, f64)> = Vec::new();

    for (i, seg) in model.segments.iter().enumerate() {
        let seg_end = model.segments.get(i + 1).map(|s| s.start).unwrap_or(model.t_f);
        if seg_end <= t {
            continue;
        }
        let slope = seg.alpha - seg.beta;
        while t < seg_end {
            // Resolve the dynamics mode at (t, x) for this piece.
            let (dx, out_rate, spill) = if x <= 0.0 && slope <= 0.0 {
                (0.0, seg.alpha, 0.0) // empty: inflow passes straight through
            } else if x >= theta && slope >= 0.0 {
                (0.0, seg.beta, slope) // full: excess inflow spills
            } else {
                (slope, seg.beta, 0.0)
            };
            // Time at which this mode ends within the piece.
            let next = if dx > 0.0 {
                ((theta - x) / dx + t).min(seg_end)
            } else if dx < 0.0 {
                ((0.0 - x) / dx + t).min(seg_end)
            } else {
                seg_end
            };
            let dt = next - t;
            if dt <= 0.0 {
                // Boundary hit exactly at t; re-enter with the pinned mode.
                x = if dx > 0.0 { theta } else { 0.0 };
                continue;
            }
            let x_next = (x + dx * dt).clamp(0.0, theta);
            trajectory.push(TrajectorySegment { start: t, end: next, x_start: x, x_end: x_next });
            outflow += out_rate * dt;
            if spill > 0.0 {
                loss += spill * dt;
                loss_intervals.push((t, next));
            }
            if next < seg_end {
                breakpoints.push(next);
            }
            t = next;
            x = x_next;
        }
        if seg_end < model.t_f {
            breakpoints.push(seg_end);
        }
    }
    breakpoints.push(model.t_f);
    breakpoints.dedup();

    let n_lossy = count_lossy_periods(&trajectory, &loss_intervals);

    Ok(FluidResult { theta, loss_volume: loss, n_lossy, breakpoints, trajectory, outflow })
}

/// Busy periods are maximal spans where the workload is positive; a span
/// pinned at zero for positive duration is idle, while an isolated touch of
/// zero does not split a period. A period is lossy when it contains an
/// overflow interval.
fn count_lossy_periods(trajectory: &[TrajectorySegment], loss_intervals: &[(f64, f64)]) -> u64 {
    let mut periods: Vec<(f64, f64)> = Vec::new();
    let mut open: Option<f64> = None;
    for piece in trajectory {
        let positive = piece.x_start > 0.0 || piece.x_end > 0.0;
        if positive {
            if open.is_none() {
                open = Some(piece.start);
            }
        } else if let Some(begin) = open.take() {
            periods.push((begin, piece.start));
        }
    }
    if let Some(begin) = open {
        let end = trajectory.last().map(|p| p.end).unwrap_or(begin);
        periods.push((begin, end));
    }
    periods
        .iter()
        .filter(|&&(b, e)| {
            loss_intervals.iter().any(|&(ls, le)| ls >= b && le <= e && le > ls)
        })
        .count() as u64
}

/// Surrogate derivative of the fluid loss volume with respect to the buffer
/// size: `-N`, the negated count of lossy busy periods.
pub fn fluid_ipa(result: &FluidResult) -> f64 {
    -(result.n_lossy as f64)
}

/// Outcome of a central finite-difference check of the fluid derivative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdCheck {
    /// `|(L(theta+delta) - L(theta-delta)) / (2 delta) - (-N)| / max(1, N)`.
    pub discrepancy: f64,
    /// Set when the lossy-period count differs between `theta - delta` and
    /// `theta + delta`: the derivative jumps somewhere inside the stencil
    /// and the check is flagged rather than failed.
    pub degenerate: bool,
}

/// Compare the surrogate derivative at `theta` against a central finite
/// difference with half-width `delta`.
pub fn finite_diff_check(model: &FluidModel, theta: f64, delta: f64) -> Result<FdCheck> {
    if !(delta > 0.0 && delta < theta) {
        return Err(Error::parameter(format!(
            "stencil half-width must satisfy 0 < delta < theta (delta = {delta}, theta = {theta})"
        )));
    }
    let center = simulate_fluid(model, theta)?;
    let hi = simulate_fluid(model, theta + delta)?;
    let lo = simulate_fluid(model, theta - delta)?;
    let fd = (hi.loss_volume - lo.loss_volume) / (2.0 * delta);
    let ipa = fluid_ipa(&center);
    let discrepancy = (fd - ipa).abs() / 1.0_f64.max(center.n_lossy as f64);
    Ok(FdCheck { discrepancy, degenerate: hi.n_lossy != lo.n_lossy })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp_model() -> FluidModel {
        // Constant alpha=2, beta=1 on [0, 10].
        FluidModel::new(vec![RateSegment { start: 0.0, alpha: 2.0, beta: 1.0 }], 10.0, 0.0)
            .unwrap()
    }

    fn dip_model() -> FluidModel {
        // alpha = 2 on [0,4) and [6,10), alpha = 0 on [4,6); beta = 1.
        FluidModel::new(
            vec![
                RateSegment { start: 0.0, alpha: 2.0, beta: 1.0 },
                RateSegment { start: 4.0, alpha: 0.0, beta: 1.0 },
                RateSegment { start: 6.0, alpha: 2.0, beta: 1.0 },
            ],
            10.0,
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn ramp_fills_and_overflows() {
        let r = simulate_fluid(&ramp_model(), 3.0).unwrap();
        assert_eq!(r.loss_volume, 7.0); // pinned full on [3, 10] at rate 1
        assert_eq!(r.n_lossy, 1);
        assert!(r.breakpoints.contains(&3.0));
        assert_eq!(fluid_ipa(&r), -1.0);
    }

    #[test]
    fn dip_keeps_a_single_busy_period() {
        let r = simulate_fluid(&dip_model(), 3.0).unwrap();
        assert!((r.loss_volume - 3.0).abs() < 1e-12); // [3,4) at 1 plus [8,10) at 1
        assert_eq!(r.n_lossy, 1); // x(6) = 1 > 0, so one busy period
        assert_eq!(fluid_ipa(&r), -1.0);
    }

    #[test]
    fn underloaded_model_is_loss_free() {
        let m = FluidModel::new(
            vec![RateSegment { start: 0.0, alpha: 1.0, beta: 2.0 }],
            10.0,
            0.0,
        )
        .unwrap();
        let r = simulate_fluid(&m, 2.0).unwrap();
        assert_eq!(r.loss_volume, 0.0);
        assert_eq!(r.n_lossy, 0);
        assert_eq!(fluid_ipa(&r), 0.0);
    }

    #[test]
    fn finite_difference_matches_on_fixtures() {
        for model in [ramp_model(), dip_model()] {
            let check = finite_diff_check(&model, 3.0, 1e-4).unwrap();
            assert!(!check.degenerate);
            assert!(check.discrepancy <= 1e-9, "discrepancy {}", check.discrepancy);
        }
    }

    #[test]
    fn finite_difference_on_loss_free_model() {
        let m = FluidModel::new(
            vec![RateSegment { start: 0.0, alpha: 1.0, beta: 2.0 }],
            10.0,
            0.0,
        )
        .unwrap();
        let check = finite_diff_check(&m, 2.0, 1e-4).unwrap();
        assert_eq!(check.discrepancy, 0.0);
    }

    #[test]
    fn conservation_holds_on_fixtures() {
        for (model, theta) in [(ramp_model(), 3.0), (dip_model(), 3.0), (dip_model(), 9.0)] {
            let r = simulate_fluid(&model, theta).unwrap();
            let mut inflow = 0.0;
            for (i, seg) in model.segments.iter().enumerate() {
                let end = model.segments.get(i + 1).map(|s| s.start).unwrap_or(model.t_f);
                inflow += seg.alpha * (end - seg.start);
            }
            let x_end = r.trajectory.last().map(|p| p.x_end).unwrap_or(model.x0);
            let balance = model.x0 + inflow - r.outflow - r.loss_volume - x_end;
            assert!(balance.abs() < 1e-9, "balance {balance}");
        }
    }

    #[test]
    fn grazing_contact_is_not_lossy() {
        // alpha == beta with the buffer full: the workload grazes the
        // boundary without spilling.
        let m = FluidModel::new(
            vec![
                RateSegment { start: 0.0, alpha: 2.0, beta: 1.0 },
                RateSegment { start: 3.0, alpha: 1.0, beta: 1.0 },
                RateSegment { start: 5.0, alpha: 0.0, beta: 1.0 },
            ],
            8.0,
            0.0,
        )
        .unwrap();
        let r = simulate_fluid(&m, 3.0).unwrap();
        assert_eq!(r.loss_volume, 0.0);
        assert_eq!(r.n_lossy, 0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let m = ramp_model();
        assert!(simulate_fluid(&m, 0.0).is_err());
        let with_x0 =
            FluidModel::new(vec![RateSegment { start: 0.0, alpha: 1.0, beta: 1.0 }], 5.0, 4.0)
                .unwrap();
        assert!(simulate_fluid(&with_x0, 3.0).is_err());
        assert!(finite_diff_check(&m, 3.0, 3.5).is_err());
    }

    #[test]
    fn parses_model_json() {
        let text = r#"{"t_f": 10.0, "x0": 0.0, "segments": [
            {"start": 0.0, "alpha": 2.0, "beta": 1.0},
            {"start": 4.0, "alpha": 0.0, "beta": 1.0}
        ]}"#;
        let m = FluidModel::from_json(text).unwrap();
        assert_eq!(m.segments.len(), 2);
        assert_eq!(m.t_f, 10.0);
    }

    #[test]
    fn bounds_hold_along_trajectory() {
        let r = simulate_fluid(&dip_model(), 3.0).unwrap();
        for piece in &r.trajectory {
            assert!(piece.x_start >= 0.0 && piece.x_start <= 3.0);
            assert!(piece.x_end >= 0.0 && piece.x_end <= 3.0);
        }
    }
}
