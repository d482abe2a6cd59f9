//! Truncated regeneration cycles for a K-queue wireless downlink under
//! MaxWeight scheduling.
//!
//! Slotted time; departures before arrivals within a slot; the all-zero queue
//! vector is the regeneration state. Packets carry their arrival slot in FIFO
//! timestamp buffers, and a delay violation is counted when a packet from a
//! watched queue departs with slot - arrival_slot >= d by the cycle end.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::discrete_quantile;
use crate::seed::SeedStream;

#[derive(Debug, Error, PartialEq)]
pub enum WirelessError {
    /// Timestamp buffer capacity exceeded; configuration error, capacity
    /// must be at least M * A_max.
    #[error("timestamp buffer overflow at queue {queue}")]
    BufferOverflow { queue: usize },
    #[error("invalid wireless parameters: {0}")]
    BadParams(&'static str),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WirelessParams {
    /// Per-queue arrival pmf over {0..A_max}.
    pub arrival_pmfs: Vec<Vec<f64>>,
    /// Per-queue channel-rate pmf over {0..mu_max}.
    pub channel_pmfs: Vec<Vec<f64>>,
    /// Queues (0-based) whose arrivals are monitored.
    pub subset_i: Vec<usize>,
    /// Delay threshold in slots.
    pub threshold_d: u64,
    /// Truncation horizon in slots.
    pub horizon_m: u64,
}

impl WirelessParams {
    pub fn k(&self) -> usize {
        self.arrival_pmfs.len()
    }

    pub fn a_max(&self) -> u64 {
        self.arrival_pmfs
            .iter()
            .map(|p| (p.len() - 1) as u64)
            .max()
            .unwrap_or(0)
    }

    pub fn validate(&self) -> Result<(), WirelessError> {
        if self.arrival_pmfs.is_empty() || self.arrival_pmfs.len() != self.channel_pmfs.len() {
            return Err(WirelessError::BadParams("need K matching pmf vectors"));
        }
        if self.subset_i.is_empty() || self.subset_i.iter().any(|&i| i >= self.k()) {
            return Err(WirelessError::BadParams(
                "subset must be nonempty and within 0..K",
            ));
        }
        for pmf in self.arrival_pmfs.iter().chain(self.channel_pmfs.iter()) {
            let sum: f64 = pmf.iter().sum();
            if pmf.is_empty() || (sum - 1.0).abs() > 1e-12 || pmf.iter().any(|p| *p < 0.0) {
                return Err(WirelessError::BadParams("pmf invalid"));
            }
        }
        if self.horizon_m < 1 {
            return Err(WirelessError::BadParams("horizon must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WirelessCycleStats {
    /// Arrivals to watched queues up to the cycle end.
    pub n_m: u64,
    /// Delay-threshold violations among those arrivals that departed by the
    /// cycle end.
    pub j_m: u64,
    /// Cycle end slot, or M if truncated.
    pub t_m: u64,
    pub truncated: bool,
}

/// MaxWeight schedule: argmax_i Q_i * mu_i, ties toward the lowest index.
pub fn maxweight_schedule(queues: &[u64], rates: &[u64]) -> usize {
    debug_assert_eq!(queues.len(), rates.len());
    let mut best = 0usize;
    let mut best_w = queues[0] * rates[0];
    for i in 1..queues.len() {
        let w = queues[i] * rates[i];
        if w > best_w {
            best = i;
            best_w = w;
        }
    }
    best
}

// One slot of the dynamics; shared by the cycle evaluator and the long-run
// simulator. Draw order per slot: arrivals 0..K then channels 0..K.
pub(crate) struct WirelessState {
    pub queues: Vec<u64>,
    pub buffers: Vec<VecDeque<u64>>,
    capacity: usize,
    watch: Vec<bool>,
}

impl WirelessState {
    pub fn new(params: &WirelessParams) -> Self {
        let k = params.k();
        let capacity = (params.horizon_m * params.a_max()) as usize;
        let mut watch = vec![false; k];
        for &i in &params.subset_i {
            watch[i] = true;
        }
        WirelessState {
            queues: vec![0; k],
            buffers: (0..k).map(|_| VecDeque::new()).collect(),
            capacity,
            watch,
        }
    }

    /// Advance one slot at time `t`; returns (new watched arrivals,
    /// new watched violations among departures this slot).
    pub fn step(
        &mut self,
        t: u64,
        params: &WirelessParams,
        stream: &mut SeedStream,
    ) -> Result<(u64, u64), WirelessError> {
        let k = params.k();
        let arrivals: Vec<u64> = (0..k)
            .map(|i| discrete_quantile(&params.arrival_pmfs[i], stream.draw_f64()) as u64)
            .collect();
        let rates: Vec<u64> = (0..k)
            .map(|i| discrete_quantile(&params.channel_pmfs[i], stream.draw_f64()) as u64)
            .collect();

        let scheduled = maxweight_schedule(&self.queues, &rates);
        let departures = self.queues[scheduled].min(rates[scheduled]);

        let mut violations = 0u64;
        for _ in 0..departures {
            let arrived_at = self.buffers[scheduled]
                .pop_front()
                .expect("buffer shorter than queue length");
            if self.watch[scheduled] && t - arrived_at >= params.threshold_d {
                violations += 1;
            }
        }
        self.queues[scheduled] -= departures;

        let mut watched_arrivals = 0u64;
        for i in 0..k {
            self.queues[i] += arrivals[i];
            for _ in 0..arrivals[i] {
                if self.buffers[i].len() >= self.capacity {
                    return Err(WirelessError::BufferOverflow { queue: i });
                }
                self.buffers[i].push_back(t);
            }
            if self.watch[i] {
                watched_arrivals += arrivals[i];
            }
        }
        Ok((watched_arrivals, violations))
    }

    pub fn all_empty(&self) -> bool {
        self.queues.iter().all(|&q| q == 0)
    }
}

/// Evaluate one truncated cycle starting from the all-zero queue vector.
pub fn evaluate_wireless_cycle(
    stream: &mut SeedStream,
    params: &WirelessParams,
) -> Result<WirelessCycleStats, WirelessError> {
    debug_assert_eq!(stream.call_index(), 0, "cycle requires a fresh stream");
    let mut state = WirelessState::new(params);
    let mut n_m = 0u64;
    let mut j_m = 0u64;
    let mut t = 0u64;
    while t < params.horizon_m {
        let (arr, viol) = state.step(t, params, stream)?;
        n_m += arr;
        j_m += viol;
        if state.all_empty() {
            return Ok(WirelessCycleStats {
                n_m,
                j_m,
                t_m: t + 1,
                truncated: false,
            });
        }
        t += 1;
    }
    Ok(WirelessCycleStats {
        n_m,
        j_m,
        t_m: params.horizon_m,
        truncated: true,
    })
}

/// Untruncated cycle for tail measurements; errors if `cap` binds.
pub fn evaluate_full_wireless_cycle(
    stream: &mut SeedStream,
    params: &WirelessParams,
    cap: u64,
) -> Result<WirelessCycleStats, WirelessError> {
    let mut expanded = params.clone();
    expanded.horizon_m = cap;
    let stats = evaluate_wireless_cycle(stream, &expanded)?;
    if stats.truncated {
        return Err(WirelessError::BadParams("safety cap bound in full cycle"));
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_hand_values() {
        assert_eq!(maxweight_schedule(&[3, 2], &[1, 2]), 1);
        assert_eq!(maxweight_schedule(&[2, 2], &[1, 1]), 0);
        assert_eq!(maxweight_schedule(&[0, 0], &[5, 5]), 0);
    }

    fn det_pmf(value: usize, max: usize) -> Vec<f64> {
        let mut p = vec![0.0; max + 1];
        p[value] = 1.0;
        p
    }

    #[test]
    fn zero_arrivals_regenerate_in_one_slot() {
        let params = WirelessParams {
            arrival_pmfs: vec![det_pmf(0, 1), det_pmf(0, 1)],
            channel_pmfs: vec![det_pmf(1, 1), det_pmf(1, 1)],
            subset_i: vec![0, 1],
            threshold_d: 1,
            horizon_m: 5,
        };
        params.validate().unwrap();
        let mut s = SeedStream::fork_cycle(0, 0);
        let stats = evaluate_wireless_cycle(&mut s, &params).unwrap();
        assert_eq!(
            stats,
            WirelessCycleStats {
                n_m: 0,
                j_m: 0,
                t_m: 1,
                truncated: false
            }
        );
    }

    #[test]
    fn unit_rate_hand_trace() {
        // K = 1, one arrival and one unit of service per slot: every packet
        // departs the slot after it arrives (delay 1); the queue never
        // empties, so the horizon binds.
        let params = WirelessParams {
            arrival_pmfs: vec![det_pmf(1, 1)],
            channel_pmfs: vec![det_pmf(1, 1)],
            subset_i: vec![0],
            threshold_d: 0,
            horizon_m: 4,
        };
        let mut s = SeedStream::fork_cycle(0, 0);
        let stats = evaluate_wireless_cycle(&mut s, &params).unwrap();
        assert_eq!(stats.t_m, 4);
        assert!(stats.truncated);
        assert_eq!(stats.n_m, 4);
        assert_eq!(stats.j_m, 3);

        // All delays equal 1 slot, so a threshold of 2 is never hit.
        let strict = WirelessParams {
            threshold_d: 2,
            ..params
        };
        let mut s = SeedStream::fork_cycle(0, 0);
        assert_eq!(evaluate_wireless_cycle(&mut s, &strict).unwrap().j_m, 0);
    }

    fn light_traffic() -> WirelessParams {
        WirelessParams {
            arrival_pmfs: vec![vec![0.7, 0.3], vec![0.8, 0.2]],
            channel_pmfs: vec![vec![0.2, 0.8], vec![0.2, 0.8]],
            subset_i: vec![0],
            threshold_d: 2,
            horizon_m: 200,
        }
    }

    #[test]
    fn flow_conservation_and_counts() {
        let params = light_traffic();
        for cycle in 0..300 {
            let mut s = SeedStream::fork_cycle(11, cycle);
            let stats = evaluate_wireless_cycle(&mut s, &params).unwrap();
            assert!(stats.j_m <= stats.n_m);
            assert!(stats.t_m <= params.horizon_m);
            if !stats.truncated {
                // Ended at the all-zero state: every arrival departed.
                let mut s2 = SeedStream::fork_cycle(11, cycle);
                let mut state = WirelessState::new(&params);
                for t in 0..stats.t_m {
                    state.step(t, &params, &mut s2).unwrap();
                }
                assert!(state.all_empty());
                assert!(state.buffers.iter().all(|b| b.is_empty()));
            }
        }
    }

    #[test]
    fn timestamps_nondecreasing_in_buffers() {
        let params = light_traffic();
        let mut s = SeedStream::fork_cycle(13, 2);
        let mut state = WirelessState::new(&params);
        for t in 0..50 {
            state.step(t, &params, &mut s).unwrap();
            for b in &state.buffers {
                assert!(b.iter().zip(b.iter().skip(1)).all(|(a, c)| a <= c));
            }
            for (q, b) in state.queues.iter().zip(&state.buffers) {
                assert_eq!(*q as usize, b.len());
            }
        }
    }
}
