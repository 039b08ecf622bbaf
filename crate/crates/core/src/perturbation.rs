//! Event-driven tracking of the nominal/perturbed occupancy difference.
//!
//! Running the queue at capacity `k` and again at `k + 1` on the same trace
//! leaves the two paths identical until the smaller system discards a job
//! that the larger one absorbs. The tracker walks only the nominal path and
//! maintains two auxiliary variables:
//!
//! * `psi` (0 or 1): set to 1 when an absorption is declared, cleared at the
//!   next busy-period start. While `psi = 1`, further losses hit both
//!   systems and are not absorptions.
//! * `zeta` in `[0, s]`: the lag of the nominal service schedule behind the
//!   perturbed one while the absorbed job's work is outstanding. `zeta = s`
//!   encodes a fully caught-up schedule (or a server at rest since time 0).
//!
//! An absorption ("type-1 event") is declared at a loss epoch `t_a` when
//! `psi = 0` and `zeta > s - (t_a - t_0)`, with `t_0` the start of the
//! service in progress; it sets `psi = 1`, `zeta = 0`. A busy-period start
//! ("type-2 event") at `t_b` after an idle gap ending a period at `tau_e`
//! sets `psi = 0`, `zeta = min(t_b - tau_e + zeta, s)`.
//!
//! Internally the lag is carried as the absolute epoch at which the larger
//! system's in-progress service completes, advanced with the same `+ s`
//! chain the simulator itself uses. That keeps every comparison and every
//! predicted boundary bit-identical to the coupled run's epochs; the `zeta`
//! segments are derived for reporting.
//!
//! From this state the tracker predicts the occupancy difference
//! `x(k+1, t) - x(k, t)` as a 0/1 step function: 1 from an absorption to the
//! end of its busy period; within later service periods, 1 until the larger
//! system's completion boundary and 0 for the rest of the period; and 1
//! after a busy period ends until the outstanding work drains. The
//! prediction is exercised against the brute-force coupled difference by
//! the verification suite rather than trusted; see `coupled::verify_lemma1`
//! for its measured domain of validity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::queue::{evolve, PathEventKind, QueueParams};
use crate::trace::ArrivalTrace;

/// A piecewise-constant value: holds from `start` until the next segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment<T> {
    pub start: f64,
    pub value: T,
}

/// Auxiliary-variable evolution and predicted occupancy difference for one
/// nominal path at capacity `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationLog {
    pub k: u32,
    /// Epochs of declared absorptions (losses the larger system admits).
    pub type1_epochs: Vec<f64>,
    /// Epochs of busy-period starts (arrivals into an empty system).
    pub type2_epochs: Vec<f64>,
    /// Schedule-lag variable, piecewise constant over `[0, t_f]`.
    pub zeta_segments: Vec<Segment<f64>>,
    /// Absorption flag, piecewise constant over `[0, t_f]`.
    pub psi_segments: Vec<Segment<u8>>,
    /// Number of absorptions.
    #[serde(rename = "N_1")]
    pub n_type1: u64,
    /// Intervals `[start, end)` where the occupancy difference is
    /// predicted to be 1; 0 elsewhere.
    pub delta_x_segments: Vec<(f64, f64)>,
    /// Horizon, kept for range checks.
    pub t_f: f64,
    /// Service time, kept for invariant checks.
    pub s: f64,
}

/// Schedule relationship between the two coupled systems.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Sync {
    /// Service schedules coincide; no outstanding absorbed work.
    Aligned,
    /// The larger system is one service behind, completing at `p`.
    Lagged { p: f64 },
}

struct SegmentList<T: Copy + PartialEq> {
    segments: Vec<Segment<T>>,
}

impl<T: Copy + PartialEq> SegmentList<T> {
    fn new(start: f64, value: T) -> Self {
        SegmentList { segments: vec![Segment { start, value }] }
    }
    fn set(&mut self, start: f64, value: T) {
        let last = self.segments.last_mut().expect("nonempty");
        if last.value == value {
            return;
        }
        if last.start == start {
            last.value = value;
            let n = self.segments.len();
            if n >= 2 && self.segments[n - 2].value == value {
                self.segments.pop();
            }
        } else {
            self.segments.push(Segment { start, value });
        }
    }
}

/// Builder for half-open unit intervals, coalescing adjacent marks.
struct IntervalMarks {
    intervals: Vec<(f64, f64)>,
}

impl IntervalMarks {
    fn new() -> Self {
        IntervalMarks { intervals: Vec::new() }
    }
    fn mark(&mut self, start: f64, end: f64) {
        if !(end > start) {
            return;
        }
        if let Some(last) = self.intervals.last_mut() {
            if start <= last.1 {
                if end > last.1 {
                    last.1 = end;
                }
                return;
            }
        }
        self.intervals.push((start, end));
    }
}

/// Per busy period: the lag state on entry and the absorption epoch, if any.
#[derive(Debug, Clone, Copy)]
struct PeriodState {
    entry: Sync,
    absorbed_at: Option<f64>,
}

/// Walk the nominal path at capacity `params.k`, producing the auxiliary
/// variable evolution, the absorption count, and the predicted occupancy
/// difference.
pub fn track(trace: &ArrivalTrace, params: &QueueParams) -> Result<PerturbationLog> {
    if trace.t_f != params.t_f {
        return Err(Error::parameter(format!(
            "trace horizon {} does not match queue horizon {}",
            trace.t_f, params.t_f
        )));
    }
    let s = params.s;
    let path = evolve(trace, params);

    let mut sync = Sync::Aligned;
    let mut psi = false;
    let mut zeta = s;
    let mut zeta_segs = SegmentList::new(0.0, s);
    let mut psi_segs = SegmentList::new(0.0, 0u8);
    let mut type1 = Vec::new();
    let mut type2 = Vec::new();

    let mut period_states: Vec<PeriodState> = Vec::new();
    let mut current: Option<PeriodState> = None;
    let mut last_empty = 0.0;

    for ev in &path.events {
        match ev.kind {
            PathEventKind::Admit { x_after } => {
                if x_after == 1 {
                    // Busy-period start. If the outstanding work drained
                    // during the idle gap, the schedules have re-merged.
                    if let Sync::Lagged { p } = sync {
                        if ev.t >= p {
                            sync = Sync::Aligned;
                        }
                    }
                    psi = false;
                    zeta = (ev.t - last_empty + zeta).min(s);
                    zeta_segs.set(ev.t, zeta);
                    psi_segs.set(ev.t, 0);
                    type2.push(ev.t);
                    if let Some(state) = current.take() {
                        period_states.push(state);
                    }
                    current = Some(PeriodState { entry: sync, absorbed_at: None });
                }
            }
            PathEventKind::Loss { head_departure } => {
                // Absorption test: the loss must fall after the larger
                // system's completion boundary in the current service
                // period. Both sides of each comparison are epochs built
                // from the same `max(..) + s` chains as the simulators.
                let absorbed = !psi
                    && match sync {
                        Sync::Aligned => ev.t + s > head_departure,
                        Sync::Lagged { p } => ev.t > p,
                    };
                if absorbed {
                    psi = true;
                    zeta = 0.0;
                    zeta_segs.set(ev.t, 0.0);
                    psi_segs.set(ev.t, 1);
                    type1.push(ev.t);
                    sync = Sync::Aligned;
                    if let Some(state) = current.as_mut() {
                        state.absorbed_at = Some(ev.t);
                    }
                }
            }
            PathEventKind::Depart { x_after } => {
                // The lagging completion chain advances one service per
                // nominal completion.
                if let Sync::Lagged { p } = &mut sync {
                    *p += s;
                }
                if x_after == 0 {
                    last_empty = ev.t;
                    let absorbed_here =
                        current.as_ref().map_or(false, |c| c.absorbed_at.is_some());
                    if absorbed_here {
                        // The absorbed job starts service as the period ends.
                        sync = Sync::Lagged { p: ev.t + s };
                    }
                }
            }
        }
    }
    if let Some(state) = current.take() {
        period_states.push(state);
    }
    debug_assert_eq!(period_states.len(), path.busy_periods.len());

    // Assemble the predicted 0/1 difference per busy period.
    let mut marks = IntervalMarks::new();
    for (idx, bp) in path.busy_periods.iter().enumerate() {
        let state = period_states[idx];
        let next_start =
            path.busy_periods.get(idx + 1).map(|b| b.start).unwrap_or(params.t_f);
        let mut post: Option<f64> = None;
        match state.entry {
            Sync::Aligned => {
                if let Some(t1) = state.absorbed_at {
                    marks.mark(t1, bp.end);
                    post = Some(bp.end + s);
                }
            }
            Sync::Lagged { p: mut boundary } => {
                for &tau in &bp.service_starts {
                    if state.absorbed_at.is_some_and(|t1| tau >= t1) {
                        break;
                    }
                    marks.mark(tau, boundary.min(bp.end));
                    boundary += s;
                }
                match state.absorbed_at {
                    Some(t1) => {
                        marks.mark(t1, bp.end);
                        post = Some(bp.end + s);
                    }
                    None => post = Some(boundary),
                }
            }
        }
        if let Some(p) = post {
            marks.mark(bp.end, p.min(next_start));
        }
    }

    Ok(PerturbationLog {
        k: params.k,
        n_type1: type1.len() as u64,
        type1_epochs: type1,
        type2_epochs: type2,
        zeta_segments: zeta_segs.segments,
        psi_segments: psi_segs.segments,
        delta_x_segments: marks.intervals,
        t_f: params.t_f,
        s,
    })
}

impl PerturbationLog {
    /// Absorption epochs declared while the service schedules were offset
    /// (lag strictly between 0 and `s`). Outside these, the single-extra-job
    /// coupling is exact; after one, the larger system can carry two
    /// outstanding jobs and the tracked prediction is no longer reliable.
    pub fn lagged_absorptions(&self) -> Vec<f64> {
        self.type1_epochs
            .iter()
            .copied()
            .filter(|&t1| {
                let zeta_before = self
                    .zeta_segments
                    .iter()
                    .take_while(|seg| seg.start < t1)
                    .last()
                    .map(|seg| seg.value)
                    .unwrap_or(self.s);
                zeta_before > 0.0 && zeta_before < self.s
            })
            .collect()
    }
}

/// Predicted occupancy difference `x(k+1, t) - x(k, t)` at time `t`,
/// read from the tracked segments (right-continuous).
pub fn predict_delta_x(log: &PerturbationLog, t: f64) -> Result<u32> {
    if !(0.0..=log.t_f).contains(&t) {
        return Err(Error::parameter(format!(
            "query time {t} outside horizon [0, {}]",
            log.t_f
        )));
    }
    let inside = log
        .delta_x_segments
        .iter()
        .take_while(|(start, _)| *start <= t)
        .any(|&(start, end)| t >= start && t < end);
    Ok(inside as u32)
}
