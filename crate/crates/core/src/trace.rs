//! Arrival workloads.
//!
//! A trace is the common random input shared by every simulation that wants
//! to be compared against another one: the nominal and perturbed runs of a
//! coupled pair both consume the identical arrival epochs.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Where a trace came from, for reproducibility records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    /// Generated in-process from the pinned ChaCha12 generator.
    Seeded { seed: u64, rate: f64, generator: String },
    /// Loaded from an external file of epochs.
    ExternalFile { path: String },
    /// Built directly from a literal list (test fixtures).
    Literal,
}

/// An ordered list of arrival epochs over a finite horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrivalTrace {
    /// Strictly increasing arrival epochs, each in `[0, t_f]`.
    pub arrivals: Vec<f64>,
    /// Horizon end, seconds.
    pub t_f: f64,
    pub provenance: Provenance,
}

impl ArrivalTrace {
    /// Build a trace from raw epochs, validating the ordering invariants.
    pub fn new(arrivals: Vec<f64>, t_f: f64, provenance: Provenance) -> Result<Self> {
        if !(t_f > 0.0) {
            return Err(Error::parameter(format!("horizon must be positive, got {t_f}")));
        }
        for (i, &a) in arrivals.iter().enumerate() {
            if !a.is_finite() || a < 0.0 || a > t_f {
                return Err(Error::parameter(format!(
                    "arrival {i} at {a} outside horizon [0, {t_f}]"
                )));
            }
            if i > 0 && a <= arrivals[i - 1] {
                return Err(Error::parameter(format!(
                    "arrivals must be strictly increasing; epoch {a} at index {i} does not exceed {}",
                    arrivals[i - 1]
                )));
            }
        }
        Ok(ArrivalTrace { arrivals, t_f, provenance })
    }

    /// Fixture helper: literal epochs, panicking on invalid input.
    pub fn from_epochs(arrivals: &[f64], t_f: f64) -> Self {
        Self::new(arrivals.to_vec(), t_f, Provenance::Literal).expect("valid literal trace")
    }

    pub fn len(&self) -> usize {
        self.arrivals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrivals.is_empty()
    }
}

/// Generate a Poisson arrival trace: i.i.d. exponential interarrival times
/// drawn by inverse transform from the seeded generator. Deterministic for a
/// fixed `(rate, t_f, seed)` triple.
pub fn generate_poisson_trace(rate: f64, t_f: f64, seed: u64) -> Result<ArrivalTrace> {
    if !(rate > 0.0) {
        return Err(Error::parameter(format!("arrival rate must be positive, got {rate}")));
    }
    if !(t_f > 0.0) {
        return Err(Error::parameter(format!("horizon must be positive, got {t_f}")));
    }
    let mut rng = rng::seeded_rng(seed);
    let mut arrivals = Vec::with_capacity((rate * t_f) as usize + 16);
    let mut t = 0.0;
    loop {
        t += rng::exponential(&mut rng, rate);
        if t > t_f {
            break;
        }
        arrivals.push(t);
    }
    ArrivalTrace::new(
        arrivals,
        t_f,
        Provenance::Seeded { seed, rate, generator: "chacha12/seed_from_u64".to_string() },
    )
}

/// Load a trace from a plain-text file: one decimal arrival epoch per line,
/// ascending. Blank lines are rejected; an empty file is a valid empty trace.
pub fn load_trace(path: impl AsRef<Path>, t_f: f64) -> Result<ArrivalTrace> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let mut arrivals = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let epoch: f64 = line.trim().parse().map_err(|_| Error::TraceFormat {
            line: lineno,
            message: format!("not a decimal epoch: {line:?}"),
        })?;
        if !epoch.is_finite() || epoch < 0.0 || epoch > t_f {
            return Err(Error::TraceFormat {
                line: lineno,
                message: format!("epoch {epoch} outside horizon [0, {t_f}]"),
            });
        }
        if let Some(&prev) = arrivals.last() {
            if epoch <= prev {
                return Err(Error::TraceFormat {
                    line: lineno,
                    message: format!("epoch {epoch} does not exceed previous epoch {prev}"),
                });
            }
        }
        arrivals.push(epoch);
    }
    ArrivalTrace::new(
        arrivals,
        t_f,
        Provenance::ExternalFile { path: path.display().to_string() },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_generation_is_deterministic() {
        let a = generate_poisson_trace(90.0, 20.0, 1).unwrap();
        let b = generate_poisson_trace(90.0, 20.0, 1).unwrap();
        assert_eq!(a, b);
        // Expected count is rate * t_f = 1800; allow a wide stochastic band
        // for the single realization.
        let n = a.len() as f64;
        assert!((n - 1800.0).abs() < 5.0 * 1800.0_f64.sqrt(), "count was {n}");
    }

    #[test]
    fn vanishing_horizon_is_nearly_empty() {
        let t = generate_poisson_trace(90.0, 0.0001, 1).unwrap();
        assert!(t.len() <= 1, "got {} arrivals", t.len());
    }

    #[test]
    fn replicated_mean_count_matches_rate_times_horizon() {
        // Law-of-large-numbers check over 1000 seeds.
        let mut total = 0usize;
        let reps = 1000;
        for seed in 1..=reps {
            total += generate_poisson_trace(90.0, 20.0, seed).unwrap().len();
        }
        let mean = total as f64 / reps as f64;
        assert!((mean - 1800.0).abs() < 3.0 * 1800.0_f64.sqrt(), "mean count {mean}");
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(generate_poisson_trace(0.0, 1.0, 1).is_err());
        assert!(generate_poisson_trace(1.0, 0.0, 1).is_err());
        assert!(generate_poisson_trace(-3.0, 1.0, 1).is_err());
    }

    #[test]
    fn load_trace_parses_and_validates() {
        let dir = std::env::temp_dir();
        let good = dir.join("lossq_trace_good.txt");
        std::fs::write(&good, "0.0\n0.5\n2.0\n").unwrap();
        let t = load_trace(&good, 3.0).unwrap();
        assert_eq!(t.arrivals, vec![0.0, 0.5, 2.0]);
        assert_eq!(t.t_f, 3.0);

        let bad = dir.join("lossq_trace_bad.txt");
        std::fs::write(&bad, "1.0\n0.5\n").unwrap();
        match load_trace(&bad, 3.0) {
            Err(Error::TraceFormat { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected format error, got {other:?}"),
        }

        let empty = dir.join("lossq_trace_empty.txt");
        std::fs::write(&empty, "").unwrap();
        let t = load_trace(&empty, 3.0).unwrap();
        assert!(t.is_empty());
    }

    #[test]
    fn load_trace_rejects_out_of_range() {
        let dir = std::env::temp_dir();
        let p = dir.join("lossq_trace_range.txt");
        std::fs::write(&p, "0.5\n4.0\n").unwrap();
        match load_trace(&p, 3.0) {
            Err(Error::TraceFormat { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected format error, got {other:?}"),
        }
    }
}
