//! Exact-jump simulation of the N-agent chain whose fluid limit is the
//! kinetic equation.
//!
//! Transitions, per agent:
//! * off-target agents in `jc` migrate to `u(j, c)` at rate `λ` (agents
//!   already at their target generate no event);
//! * `jS → jI` at rate `q^j_-` (pressure) plus `Σ_k β_kj n_kI / N` (peers);
//! * `jI → jS` at rate `q^j_+`.
//!
//! Each replication draws from its own ChaCha8 stream: the master seed
//! selects the key, `(n_index << 32) | replication` the stream.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{integrate_forward, DynamicsError, TimeGrid};
use crate::model::{state_index, Compartment, MixedState, ModelParams, StationaryControl};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct CountVector(Vec<u64>);

impl CountVector {
    pub fn new(counts: Vec<u64>) -> Self {
        Self(counts)
    }

    /// Largest-remainder rounding of `x · n`: floors first, then hands the
    /// leftover agents to the largest fractional parts (ties to the lower
    /// index). The total is exactly `n`.
    pub fn from_fractions(x: &MixedState, n: u64) -> Self {
        let scaled: Vec<f64> = x.as_slice().iter().map(|v| v * n as f64).collect();
        let mut counts: Vec<u64> = scaled.iter().map(|v| v.floor() as u64).collect();
        let assigned: u64 = counts.iter().sum();
        let mut order: Vec<usize> = (0..counts.len()).collect();
        order.sort_by(|&a, &b| {
            let ra = scaled[a] - scaled[a].floor();
            let rb = scaled[b] - scaled[b].floor();
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        let leftover = n.saturating_sub(assigned) as usize;
        for &m in order.iter().cycle().take(leftover) {
            counts[m] += 1;
        }
        Self(counts)
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }

    pub fn fractions(&self) -> Vec<f64> {
        let n = self.total() as f64;
        self.0.iter().map(|&c| c as f64 / n).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpKind {
    Migration,
    PressureInfection,
    PeerInfection,
    Recovery,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JumpEvent {
    pub time: f64,
    pub kind: JumpKind,
    /// State indices in the `(1I, 1S, 2I, 2S, …)` layout, 0-based.
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Channel {
    kind: JumpKind,
    from: usize,
    to: usize,
    rate: f64,
}

fn channels(p: &ModelParams, n: &[u64], u: &StationaryControl, out: &mut Vec<Channel>) {
    out.clear();
    let total = n.iter().sum::<u64>() as f64;
    for j in 0..p.d {
        for c in Compartment::BOTH {
            let target = u.target(j, c);
            let from = state_index(j, c);
            if target != j && n[from] > 0 {
                out.push(Channel {
                    kind: JumpKind::Migration,
                    from,
                    to: state_index(target, c),
                    rate: p.lambda * n[from] as f64,
                });
            }
        }
        let ii = state_index(j, Compartment::I);
        let is = state_index(j, Compartment::S);
        if n[is] > 0 {
            let peers: f64 = (0..p.d)
                .map(|k| p.beta[k][j] * n[state_index(k, Compartment::I)] as f64)
                .sum::<f64>()
                / total;
            for (kind, rate) in [
                (JumpKind::PressureInfection, p.q_minus[j]),
                (JumpKind::PeerInfection, peers),
            ] {
                out.push(Channel {
                    kind,
                    from: is,
                    to: ii,
                    rate: rate * n[is] as f64,
                });
            }
        }
        if n[ii] > 0 {
            out.push(Channel {
                kind: JumpKind::Recovery,
                from: ii,
                to: is,
                rate: p.q_plus[j] * n[ii] as f64,
            });
        }
    }
}

/// Expected instantaneous drift of `n / N` at count state `n`.
pub fn drift(p: &ModelParams, n: &CountVector, u: &StationaryControl) -> Vec<f64> {
    let total = n.total() as f64;
    let mut buf = Vec::new();
    channels(p, n.as_slice(), u, &mut buf);
    let mut out = vec![0.0; n.as_slice().len()];
    for ch in &buf {
        out[ch.from] -= ch.rate / total;
        out[ch.to] += ch.rate / total;
    }
    out
}

/// Gillespie direct method up to `t_end`; `observe(t, n)` runs after every
/// jump with the post-jump state.
fn gillespie<R: Rng, F: FnMut(&JumpEvent, &[u64])>(
    p: &ModelParams,
    n0: &CountVector,
    u: &StationaryControl,
    t_end: f64,
    rng: &mut R,
    mut observe: F,
) {
    let mut n = n0.as_slice().to_vec();
    let mut t = 0.0;
    let mut buf = Vec::new();
    loop {
        channels(p, &n, u, &mut buf);
        let total: f64 = buf.iter().map(|c| c.rate).sum();
        if total.is_nan() || total <= 0.0 {
            return;
        }
        let wait: f64 = rng.sample::<f64, _>(Exp1) / total;
        t += wait;
        if t > t_end {
            return;
        }
        let mut pick = rng.random::<f64>() * total;
        let mut chosen = buf[buf.len() - 1];
        for ch in &buf {
            if pick < ch.rate {
                chosen = *ch;
                break;
            }
            pick -= ch.rate;
        }
        n[chosen.from] -= 1;
        n[chosen.to] += 1;
        observe(
            &JumpEvent {
                time: t,
                kind: chosen.kind,
                from: chosen.from,
                to: chosen.to,
            },
            &n,
        );
    }
}

/// A right-continuous piecewise-constant count path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CtmcPath {
    pub initial: CountVector,
    pub t_end: f64,
    pub events: Vec<JumpEvent>,
}

impl CtmcPath {
    /// Counts at each of `times` (ascending, within `[0, t_end]`).
    pub fn sample(&self, times: &[f64]) -> Vec<CountVector> {
        let mut n = self.initial.as_slice().to_vec();
        let mut next = 0;
        times
            .iter()
            .map(|&t| {
                while next < self.events.len() && self.events[next].time <= t {
                    let e = &self.events[next];
                    n[e.from] -= 1;
                    n[e.to] += 1;
                    next += 1;
                }
                CountVector(n.clone())
            })
            .collect()
    }

    pub fn terminal(&self) -> CountVector {
        self.sample(&[self.t_end]).pop().expect("one sample")
    }

    /// Total time spent in each state over `[0, t_end]`.
    pub fn occupation_times(&self) -> Vec<f64> {
        let mut n = self.initial.as_slice().to_vec();
        let mut acc = vec![0.0; n.len()];
        let mut last = 0.0;
        for e in &self.events {
            for (a, &c) in acc.iter_mut().zip(&n) {
                *a += c as f64 * (e.time - last);
            }
            last = e.time;
            n[e.from] -= 1;
            n[e.to] += 1;
        }
        for (a, &c) in acc.iter_mut().zip(&n) {
            *a += c as f64 * (self.t_end - last);
        }
        acc
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Simulates the N-agent chain on `[0, t_end]` from `n0` with the control
/// frozen at `u`. Rates are not validated: zero rates are allowed.
pub fn simulate_ctmc(
    p: &ModelParams,
    n0: &CountVector,
    u: &StationaryControl,
    t_end: f64,
    seed: u64,
) -> CtmcPath {
    simulate_stream(p, n0, u, t_end, seed, 0)
}

/// As [`simulate_ctmc`] on an explicit stream of the seed's generator.
pub fn simulate_stream(
    p: &ModelParams,
    n0: &CountVector,
    u: &StationaryControl,
    t_end: f64,
    seed: u64,
    stream: u64,
) -> CtmcPath {
    let mut rng = stream_rng(seed, stream);
    let mut events = Vec::new();
    gillespie(p, n0, u, t_end, &mut rng, |e, _| events.push(*e));
    CtmcPath {
        initial: n0.clone(),
        t_end,
        events,
    }
}

/// Stream used for replication `rep` at the `n_index`-th population size.
pub fn replication_stream(n_index: usize, rep: usize) -> u64 {
    ((n_index as u64) << 32) | rep as u64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LlnRow {
    pub n: u64,
    pub replications: usize,
    /// Mean over replications of `max_t |n(t)/N - x(t)|` on the grid nodes.
    pub mean_error: f64,
    /// Standard error of the mean; absent for a single replication.
    pub std_error: Option<f64>,
}

/// Sup-norm distance between the scaled chain and the ODE path, averaged
/// over independent replications, for each population size.
pub fn lln_error(
    p: &ModelParams,
    u: &StationaryControl,
    x0: &MixedState,
    grid: &TimeGrid,
    n_list: &[u64],
    replications: usize,
    seed: u64,
) -> Result<Vec<LlnRow>, DynamicsError> {
    let ode = integrate_forward(p, x0, u, grid)?;
    let times = grid.times();
    let rows = n_list
        .iter()
        .enumerate()
        .map(|(idx, &n)| {
            let n0 = CountVector::from_fractions(x0, n);
            let errors: Vec<f64> = (0..replications)
                .into_par_iter()
                .map(|rep| {
                    let mut rng = stream_rng(seed, replication_stream(idx, rep));
                    sup_error(p, &n0, u, &times, &ode, &mut rng)
                })
                .collect();
            summarize(n, &errors)
        })
        .collect();
    Ok(rows)
}

fn sup_error<R: Rng>(
    p: &ModelParams,
    n0: &CountVector,
    u: &StationaryControl,
    times: &[f64],
    ode: &[MixedState],
    rng: &mut R,
) -> f64 {
    let total = n0.total() as f64;
    let mut worst: f64 = 0.0;
    let mut node = 0;
    let mut current = n0.as_slice().to_vec();
    let mut flush = |upto: f64, counts: &[u64], node: &mut usize| {
        while *node < times.len() && times[*node] < upto {
            for (c, x) in counts.iter().zip(ode[*node].as_slice()) {
                worst = worst.max((*c as f64 / total - x).abs());
            }
            *node += 1;
        }
    };
    let t_end = *times.last().expect("non-empty grid");
    gillespie(p, n0, u, t_end, rng, |e, n| {
        flush(e.time, &current, &mut node);
        current.copy_from_slice(n);
    });
    flush(f64::INFINITY, &current, &mut node);
    worst
}

fn summarize(n: u64, errors: &[f64]) -> LlnRow {
    let r = errors.len();
    let mean = errors.iter().sum::<f64>() / r as f64;
    let std_error = (r >= 2).then(|| {
        let var = errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (r - 1) as f64;
        (var / r as f64).sqrt()
    });
    LlnRow {
        n,
        replications: r,
        mean_error: mean,
        std_error,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::kinetic_field;

    fn p0() -> ModelParams {
        ModelParams {
            d: 2,
            lambda: 100.0,
            delta: 0.1,
            q_plus: vec![0.5, 0.6],
            q_minus: vec![0.5, 0.3],
            beta: vec![vec![0.2, 0.05], vec![0.05, 0.05]],
            w_i: vec![2.0, 3.0],
            w_s: vec![1.0, 2.5],
        }
    }

    #[test]
    fn largest_remainder_keeps_the_total() {
        let x = MixedState::new(vec![0.3335, 0.3335, 0.333, 0.0]).unwrap();
        let n = CountVector::from_fractions(&x, 10);
        assert_eq!(n.total(), 10);
        assert_eq!(n.as_slice(), &[4, 3, 3, 0]);
    }

    #[test]
    fn drift_is_the_kinetic_field() {
        let p = p0();
        let n = CountVector::new(vec![7, 11, 5, 2]);
        for u in [
            StationaryControl::single(2, 0),
            StationaryControl::mixed(2, 1, 0),
        ] {
            let x = n.fractions();
            let lhs = drift(&p, &n, &u);
            let rhs = kinetic_field(&p, &x, &u);
            for (a, b) in lhs.iter().zip(&rhs) {
                assert!((a - b).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn frozen_chain_without_rates() {
        let mut p = p0();
        p.lambda = 0.0;
        p.q_plus = vec![0.0; 2];
        p.q_minus = vec![0.0; 2];
        p.beta = vec![vec![0.0; 2]; 2];
        let n0 = CountVector::new(vec![1, 2, 3, 4]);
        let path = simulate_ctmc(&p, &n0, &StationaryControl::single(2, 0), 10.0, 1);
        assert!(path.events.is_empty());
        assert_eq!(path.terminal(), n0);
    }

    #[test]
    fn same_seed_same_path() {
        let p = p0();
        let n0 = CountVector::new(vec![10, 10, 10, 10]);
        let u = StationaryControl::single(2, 0);
        let a = simulate_ctmc(&p, &n0, &u, 2.0, 9);
        assert_eq!(a, simulate_ctmc(&p, &n0, &u, 2.0, 9));
        assert_ne!(a, simulate_ctmc(&p, &n0, &u, 2.0, 10));
    }
}
