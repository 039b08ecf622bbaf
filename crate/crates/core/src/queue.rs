//! G/D/1/k finite-capacity FIFO queue over a finite horizon.
//!
//! The simulator is driven directly by the arrival epochs: with a single
//! server and a constant service time, the departure schedule of admitted
//! jobs follows the recurrence `d_i = max(a_i, d_prev) + s`, so no event
//! calendar is needed. Capacity `k` counts jobs in the whole system (server
//! plus buffer); an arrival at `t` is admitted iff the occupancy just before
//! `t` is below `k`, and is counted lost otherwise. Departures at an epoch
//! are processed before an arrival at the same epoch, which realizes the
//! left-limit occupancy test.

use std::collections::VecDeque;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::trace::ArrivalTrace;

/// Queue parameters: total capacity, constant service time, horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueueParams {
    /// System capacity in jobs (server plus buffer), at least 1.
    pub k: u32,
    /// Service time, seconds, positive.
    pub s: f64,
    /// Horizon end, seconds, positive.
    pub t_f: f64,
}

impl QueueParams {
    pub fn new(k: u32, s: f64, t_f: f64) -> Result<Self> {
        if k < 1 {
            return Err(Error::parameter("capacity k must be at least 1"));
        }
        if !(s > 0.0) {
            return Err(Error::parameter(format!("service time must be positive, got {s}")));
        }
        if !(t_f > 0.0) {
            return Err(Error::parameter(format!("horizon must be positive, got {t_f}")));
        }
        Ok(QueueParams { k, s, t_f })
    }
}

/// Idle time before a busy period. The first busy period of a run has no
/// predecessor; the sentinel marks a server that has been at rest since
/// time zero and classifies with the "idle at least s" bucket.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PrecedingIdle {
    Initial,
    Gap(f64),
}

impl PrecedingIdle {
    /// True when the idle time before the period is shorter than `s`.
    pub fn shorter_than(&self, s: f64) -> bool {
        match self {
            PrecedingIdle::Initial => false,
            PrecedingIdle::Gap(g) => *g < s,
        }
    }
}

impl Serialize for PrecedingIdle {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            PrecedingIdle::Initial => serializer.serialize_str("INITIAL"),
            PrecedingIdle::Gap(g) => serializer.serialize_f64(*g),
        }
    }
}

impl<'de> Deserialize<'de> for PrecedingIdle {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct IdleVisitor;
        impl<'de> Visitor<'de> for IdleVisitor {
            type Value = PrecedingIdle;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a number of seconds or the string \"INITIAL\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<PrecedingIdle, E> {
                Ok(PrecedingIdle::Gap(v))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<PrecedingIdle, E> {
                Ok(PrecedingIdle::Gap(v as f64))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<PrecedingIdle, E> {
                Ok(PrecedingIdle::Gap(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<PrecedingIdle, E> {
                if v == "INITIAL" {
                    Ok(PrecedingIdle::Initial)
                } else {
                    Err(E::custom(format!("unexpected idle marker {v:?}")))
                }
            }
        }
        deserializer.deserialize_any(IdleVisitor)
    }
}

/// One maximal interval during which the system is nonempty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusyPeriodRecord {
    /// Period start (an admission into an empty system).
    pub start: f64,
    /// Period end: the departure that empties the system, or the horizon.
    pub end: f64,
    /// Whether any arrival was lost during the period.
    pub lossy: bool,
    pub preceding_idle: PrecedingIdle,
    /// Epochs of arrivals lost during this period.
    pub loss_epochs: Vec<f64>,
}

/// What happened at one epoch of the sample path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Arrival,
    Loss,
    Departure,
}

/// Time-ordered log entry with the occupancy after the event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventLogEntry {
    pub t: f64,
    pub kind: EventKind,
    pub x: u32,
}

/// Loss and busy-period statistics of one simulated sample path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub params: QueueParams,
    /// Number of arrivals discarded at a full system.
    pub n_lost: u64,
    /// Lost work: `n_lost * s`.
    pub loss_volume: f64,
    pub busy_periods: Vec<BusyPeriodRecord>,
    /// Count of lossy busy periods.
    #[serde(rename = "N")]
    pub n_lossy: u64,
    /// Lossy busy periods whose preceding idle time was shorter than `s`.
    #[serde(rename = "N_s")]
    pub n_lossy_short_idle: u64,
    /// Lossy busy periods preceded by idle time of at least `s`
    /// (the first period counts here).
    #[serde(rename = "N_ell")]
    pub n_lossy_long_idle: u64,
    pub event_log: Vec<EventLogEntry>,
}

/// Internal path representation shared by the simulator and the
/// perturbation tracker.
#[derive(Debug, Clone)]
pub(crate) struct QueuePath {
    pub events: Vec<PathEvent>,
    pub busy_periods: Vec<BusyPeriod>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct PathEvent {
    pub t: f64,
    pub kind: PathEventKind,
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum PathEventKind {
    /// Admitted arrival; `x_after` is the occupancy including this job.
    Admit { x_after: u32 },
    /// Rejected arrival at a full system; `head_departure` is the departure
    /// epoch of the job in service at that moment.
    Loss { head_departure: f64 },
    /// Service completion within the horizon.
    Depart { x_after: u32 },
}

#[derive(Debug, Clone)]
pub(crate) struct BusyPeriod {
    pub start: f64,
    pub end: f64,
    pub loss_epochs: Vec<f64>,
    /// Epochs at which a service began within this period, in order.
    pub service_starts: Vec<f64>,
}

/// Run the queue recurrence over the trace.
pub(crate) fn evolve(trace: &ArrivalTrace, params: &QueueParams) -> QueuePath {
    let k = params.k as usize;
    let s = params.s;
    let t_f = params.t_f;

    // Departure epochs of jobs currently in the system, ascending.
    let mut in_system: VecDeque<f64> = VecDeque::new();
    let mut events = Vec::new();
    let mut busy_periods: Vec<BusyPeriod> = Vec::new();
    let mut open: Option<BusyPeriod> = None;

    let drain = |until: f64,
                     in_system: &mut VecDeque<f64>,
                     events: &mut Vec<PathEvent>,
                     busy_periods: &mut Vec<BusyPeriod>,
                     open: &mut Option<BusyPeriod>| {
        while let Some(&d) = in_system.front() {
            if d > until {
                break;
            }
            in_system.pop_front();
            let x_after = in_system.len() as u32;
            events.push(PathEvent { t: d, kind: PathEventKind::Depart { x_after } });
            if x_after == 0 {
                let mut bp = open.take().expect("departure outside a busy period");
                bp.end = d;
                busy_periods.push(bp);
            } else {
                // Next service begins immediately at this departure.
                open.as_mut().expect("busy period open").service_starts.push(d);
            }
        }
    };

    for &t in &trace.arrivals {
        drain(t, &mut in_system, &mut events, &mut busy_periods, &mut open);
        let x = in_system.len();
        if x == k {
            let head = *in_system.front().expect("full system has a job in service");
            events.push(PathEvent { t, kind: PathEventKind::Loss { head_departure: head } });
            open.as_mut().expect("loss inside a busy period").loss_epochs.push(t);
        } else {
            let departure = match in_system.back() {
                Some(&last) => last + s,
                None => {
                    open = Some(BusyPeriod {
                        start: t,
                        end: t_f,
                        loss_epochs: Vec::new(),
                        service_starts: vec![t],
                    });
                    t + s
                }
            };
            in_system.push_back(departure);
            events.push(PathEvent { t, kind: PathEventKind::Admit { x_after: in_system.len() as u32 } });
        }
    }
    drain(t_f, &mut in_system, &mut events, &mut busy_periods, &mut open);
    if let Some(mut bp) = open.take() {
        // Jobs still in the system are abandoned at the horizon; the period
        // closes at t_f. A period opened exactly at t_f would be empty and
        // is not recorded.
        if bp.start < t_f {
            bp.end = t_f;
            busy_periods.push(bp);
        }
    }

    QueuePath { events, busy_periods }
}

/// Simulate the queue on a trace and collect loss and busy-period statistics.
pub fn simulate(trace: &ArrivalTrace, params: &QueueParams) -> Result<SimResult> {
    if trace.t_f != params.t_f {
        return Err(Error::parameter(format!(
            "trace horizon {} does not match queue horizon {}",
            trace.t_f, params.t_f
        )));
    }
    let path = evolve(trace, params);

    let mut event_log = Vec::with_capacity(path.events.len());
    let mut n_lost = 0u64;
    for ev in &path.events {
        let (kind, x) = match ev.kind {
            PathEventKind::Admit { x_after } => (EventKind::Arrival, x_after),
            PathEventKind::Loss { .. } => {
                n_lost += 1;
                (EventKind::Loss, params.k)
            }
            PathEventKind::Depart { x_after } => (EventKind::Departure, x_after),
        };
        event_log.push(EventLogEntry { t: ev.t, kind, x });
    }

    let mut busy_periods = Vec::with_capacity(path.busy_periods.len());
    let mut n_lossy = 0u64;
    let mut n_lossy_short = 0u64;
    let mut n_lossy_long = 0u64;
    let mut prev_end: Option<f64> = None;
    for bp in &path.busy_periods {
        let preceding_idle = match prev_end {
            None => PrecedingIdle::Initial,
            Some(e) => PrecedingIdle::Gap(bp.start - e),
        };
        let lossy = !bp.loss_epochs.is_empty();
        if lossy {
            n_lossy += 1;
            if preceding_idle.shorter_than(params.s) {
                n_lossy_short += 1;
            } else {
                n_lossy_long += 1;
            }
        }
        busy_periods.push(BusyPeriodRecord {
            start: bp.start,
            end: bp.end,
            lossy,
            preceding_idle,
            loss_epochs: bp.loss_epochs.clone(),
        });
        prev_end = Some(bp.end);
    }

    Ok(SimResult {
        params: *params,
        n_lost,
        loss_volume: n_lost as f64 * params.s,
        busy_periods,
        n_lossy,
        n_lossy_short_idle: n_lossy_short,
        n_lossy_long_idle: n_lossy_long,
        event_log,
    })
}

/// Surrogate derivative of the loss volume with respect to the buffer size,
/// computed from the discrete sample path: `-s * N` where `N` is the number
/// of lossy busy periods.
pub fn ipa_derivative(result: &SimResult) -> f64 {
    -result.params.s * result.n_lossy as f64
}

/// Surrogate derivative of the total cost `L(k) + a*k`.
pub fn cost_derivative(result: &SimResult, a: f64) -> Result<f64> {
    if a < 0.0 {
        return Err(Error::parameter(format!("buffer-unit cost must be nonnegative, got {a}")));
    }
    Ok(ipa_derivative(result) + a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::ArrivalTrace;

    pub(crate) fn trace_a() -> ArrivalTrace {
        ArrivalTrace::from_epochs(&[0.0, 0.5, 2.0], 3.0)
    }
    pub(crate) fn trace_b() -> ArrivalTrace {
        ArrivalTrace::from_epochs(&[0.0, 0.5, 1.3, 1.8, 2.1], 3.5)
    }
    pub(crate) fn trace_c() -> ArrivalTrace {
        ArrivalTrace::from_epochs(&[0.0, 0.5, 1.3, 1.8], 3.0)
    }

    fn params(k: u32, s: f64, t_f: f64) -> QueueParams {
        QueueParams::new(k, s, t_f).unwrap()
    }

    #[test]
    fn trace_a_at_capacity_one() {
        let r = simulate(&trace_a(), &params(1, 1.0, 3.0)).unwrap();
        assert_eq!(r.n_lost, 1);
        assert_eq!(r.loss_volume, 1.0);
        assert_eq!(r.busy_periods.len(), 2);
        let bp0 = &r.busy_periods[0];
        assert_eq!((bp0.start, bp0.end), (0.0, 1.0));
        assert!(bp0.lossy);
        assert_eq!(bp0.preceding_idle, PrecedingIdle::Initial);
        assert_eq!(bp0.loss_epochs, vec![0.5]);
        let bp1 = &r.busy_periods[1];
        assert_eq!((bp1.start, bp1.end), (2.0, 3.0));
        assert!(!bp1.lossy);
        assert_eq!(r.n_lossy, 1);
        assert_eq!(r.n_lossy_short_idle, 0);
        assert_eq!(r.n_lossy_long_idle, 1);
    }

    #[test]
    fn trace_c_at_capacity_one() {
        let r = simulate(&trace_c(), &params(1, 1.0, 3.0)).unwrap();
        assert_eq!(r.n_lost, 2);
        assert_eq!(r.loss_volume, 2.0);
        assert_eq!(r.n_lossy, 2);
        assert_eq!(r.n_lossy_short_idle, 1); // idle [1, 1.3) of length 0.3 < 1
        assert_eq!(r.n_lossy_long_idle, 1); // first period, INITIAL rule
        assert_eq!(r.busy_periods[1].preceding_idle, PrecedingIdle::Gap(1.3 - 1.0));
    }

    #[test]
    fn trace_b_at_capacity_two() {
        let r = simulate(&trace_b(), &params(2, 1.0, 3.5)).unwrap();
        assert_eq!(r.n_lost, 1);
        let losses: Vec<f64> = r
            .busy_periods
            .iter()
            .flat_map(|bp| bp.loss_epochs.iter().copied())
            .collect();
        assert_eq!(losses, vec![1.8]);
    }

    #[test]
    fn empty_trace_is_loss_free() {
        let t = ArrivalTrace::from_epochs(&[], 5.0);
        let r = simulate(&t, &params(3, 1.0, 5.0)).unwrap();
        assert_eq!(r.n_lost, 0);
        assert_eq!(r.loss_volume, 0.0);
        assert_eq!(r.n_lossy, 0);
        assert!(r.busy_periods.is_empty());
        assert!(r.event_log.is_empty());
    }

    #[test]
    fn mismatched_horizon_is_rejected() {
        let t = trace_a();
        let err = simulate(&t, &params(1, 1.0, 4.0)).unwrap_err();
        assert!(matches!(err, Error::Parameter(_)));
    }

    #[test]
    fn ipa_derivative_examples() {
        let c = simulate(&trace_c(), &params(1, 1.0, 3.0)).unwrap();
        assert_eq!(ipa_derivative(&c), -2.0);
        let a = simulate(&trace_a(), &params(1, 1.0, 3.0)).unwrap();
        assert_eq!(ipa_derivative(&a), -1.0);
        let loss_free = simulate(&trace_a(), &params(3, 1.0, 3.0)).unwrap();
        assert_eq!(ipa_derivative(&loss_free), 0.0);
    }

    #[test]
    fn cost_derivative_examples() {
        let loss_free = simulate(&trace_a(), &params(3, 1.0, 3.0)).unwrap();
        assert_eq!(cost_derivative(&loss_free, 0.2).unwrap(), 0.2);
        let c = simulate(&trace_c(), &params(1, 1.0, 3.0)).unwrap();
        assert_eq!(cost_derivative(&c, 0.2).unwrap(), -1.8);
        let a = simulate(&trace_a(), &params(1, 1.0, 3.0)).unwrap();
        assert_eq!(cost_derivative(&a, 1.0).unwrap(), 0.0);
        assert!(cost_derivative(&a, -0.1).is_err());
    }

    #[test]
    fn event_log_respects_capacity_bounds() {
        let r = simulate(&trace_b(), &params(1, 1.0, 3.5)).unwrap();
        for ev in &r.event_log {
            assert!(ev.x <= 1);
        }
        // Departures at an epoch precede arrivals at the same epoch.
        for w in r.event_log.windows(2) {
            assert!(w[0].t <= w[1].t);
        }
    }

    #[test]
    fn preceding_idle_serde_roundtrip() {
        let init = serde_json::to_string(&PrecedingIdle::Initial).unwrap();
        assert_eq!(init, "\"INITIAL\"");
        let gap = serde_json::to_string(&PrecedingIdle::Gap(0.25)).unwrap();
        assert_eq!(gap, "0.25");
        assert_eq!(
            serde_json::from_str::<PrecedingIdle>("\"INITIAL\"").unwrap(),
            PrecedingIdle::Initial
        );
        assert_eq!(serde_json::from_str::<PrecedingIdle>("0.25").unwrap(), PrecedingIdle::Gap(0.25));
    }

    #[test]
    fn sim_result_serializes_with_stat_field_names() {
        let r = simulate(&trace_c(), &params(1, 1.0, 3.0)).unwrap();
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["N"], 2);
        assert_eq!(json["N_s"], 1);
        assert_eq!(json["N_ell"], 1);
        assert_eq!(json["n_lost"], 2);
        let back: SimResult = serde_json::from_value(json).unwrap();
        assert_eq!(back, r);
    }
}
