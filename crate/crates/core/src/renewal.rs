//! Stationary discrete-time renewal processes on the nonnegative integers:
//! interarrival laws, the renewal-density recursion, residual times and the
//! constructive miss-probability bound.

use crate::error::{Error, Result};
use crate::rng::UniformStream;

/// Support cap when a law has an infinite tail (geometric); pmf mass beyond
/// this index is negligible for every beta we accept.
const TAIL_CAP: usize = 4096;

/// Law of the gap `T_{i+1} - T_i >= 1`.
#[derive(Debug, Clone)]
pub enum InterarrivalLaw {
    /// `P{gap = j} = beta (1-beta)^{j-1}`; the memoryless case, event density
    /// `beta`.
    Geometric { beta: f64 },
    /// Mass `p1` at `k1` and `1 - p1` at `k2`.
    TwoPoint { k1: usize, k2: usize, p1: f64 },
    /// Explicit pmf, `pmf[j-1] = P{gap = j}`.
    Pmf(Vec<f64>),
}

impl InterarrivalLaw {
    pub fn validate(&self) -> Result<()> {
        match self {
            InterarrivalLaw::Geometric { beta } => {
                if !(*beta > 0.0 && *beta < 1.0) {
                    return Err(Error::Domain(format!("geometric beta = {beta} outside (0,1)")));
                }
            }
            InterarrivalLaw::TwoPoint { k1, k2, p1 } => {
                if *k1 == 0 || *k2 == 0 {
                    return Err(Error::Domain("two-point gaps must be >= 1".into()));
                }
                if !(*p1 >= 0.0 && *p1 <= 1.0) {
                    return Err(Error::Domain(format!("two-point p1 = {p1} outside [0,1]")));
                }
            }
            InterarrivalLaw::Pmf(pmf) => {
                if pmf.is_empty() || pmf.iter().any(|&x| x < 0.0) {
                    return Err(Error::Domain("pmf must be nonempty and nonnegative".into()));
                }
                let s: f64 = pmf.iter().sum();
                if (s - 1.0).abs() > 1e-9 {
                    return Err(Error::Domain(format!("pmf sums to {s}")));
                }
            }
        }
        Ok(())
    }

    /// `P{gap = j}` for `j >= 1`.
    pub fn pmf(&self, j: usize) -> f64 {
        if j == 0 {
            return 0.0;
        }
        match self {
            InterarrivalLaw::Geometric { beta } => beta * (1.0 - beta).powi(j as i32 - 1),
            InterarrivalLaw::TwoPoint { k1, k2, p1 } => {
                let mut v = 0.0;
                if j == *k1 {
                    v += p1;
                }
                if j == *k2 {
                    v += 1.0 - p1;
                }
                v
            }
            InterarrivalLaw::Pmf(pmf) => pmf.get(j - 1).copied().unwrap_or(0.0),
        }
    }

    /// Largest gap with non-negligible mass.
    pub fn support_cap(&self) -> usize {
        match self {
            InterarrivalLaw::Geometric { .. } => TAIL_CAP,
            InterarrivalLaw::TwoPoint { k1, k2, .. } => *k1.max(k2),
            InterarrivalLaw::Pmf(pmf) => pmf.len(),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            InterarrivalLaw::Geometric { beta } => 1.0 / beta,
            InterarrivalLaw::TwoPoint { k1, k2, p1 } => {
                *p1 * *k1 as f64 + (1.0 - p1) * *k2 as f64
            }
            InterarrivalLaw::Pmf(pmf) => {
                pmf.iter().enumerate().map(|(i, &m)| (i + 1) as f64 * m).sum()
            }
        }
    }

    /// Event density `beta = 1 / mean`.
    pub fn rate(&self) -> f64 {
        1.0 / self.mean()
    }

    /// Tail `F(k) = P{gap > k}`.
    pub fn tail(&self, k: usize) -> f64 {
        match self {
            InterarrivalLaw::Geometric { beta } => (1.0 - beta).powi(k as i32),
            _ => {
                let cap = self.support_cap();
                ((k + 1)..=cap).map(|j| self.pmf(j)).sum()
            }
        }
    }

    /// Summed tail `Fbar(k) = sum_{j >= k} F(j)`.
    pub fn summed_tail(&self, k: usize) -> f64 {
        match self {
            InterarrivalLaw::Geometric { beta } => (1.0 - beta).powi(k as i32) / beta,
            _ => {
                let cap = self.support_cap();
                (k..=cap).map(|j| self.tail(j)).sum()
            }
        }
    }

    /// Renewal densities `beta_k = P{N(k) = 1 | T_1 = 0}` for `k = 0..=kmax`,
    /// by the discrete renewal recursion `beta_k = sum_j f(j) beta_{k-j}`.
    pub fn renewal_density(&self, kmax: usize) -> Vec<f64> {
        let cap = self.support_cap();
        let mut beta = vec![0.0; kmax + 1];
        beta[0] = 1.0;
        for k in 1..=kmax {
            let mut acc = 0.0;
            for j in 1..=k.min(cap) {
                acc += self.pmf(j) * beta[k - j];
            }
            beta[k] = acc;
        }
        beta
    }

    /// Stationary delay law `P{T_1 = k} = beta F(k)`, sampled by inversion.
    fn sample_delay(&self, u: f64) -> usize {
        let rate = self.rate();
        let mut acc = 0.0;
        for k in 0..=(self.support_cap() + 1) {
            acc += rate * self.tail(k);
            if u < acc {
                return k;
            }
        }
        self.support_cap() + 1
    }

    fn sample_gap(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for j in 1..=self.support_cap() {
            acc += self.pmf(j);
            if u < acc {
                return j;
            }
        }
        self.support_cap()
    }

    /// Event times of the stationary process restricted to `[0, horizon]`.
    pub fn sample_stationary(&self, horizon: usize, stream: &UniformStream) -> Vec<usize> {
        let mut times = Vec::new();
        let mut t = self.sample_delay(stream.uniform(0));
        let mut ctr = 1u64;
        while t <= horizon {
            times.push(t);
            t += self.sample_gap(stream.uniform(ctr));
            ctr += 1;
        }
        times
    }
}

/// Summary statistics of a realized event-time sequence.
#[derive(Debug, Clone)]
pub struct RenewalStats {
    pub times: Vec<usize>,
    pub interarrivals: Vec<usize>,
    /// Empirical rate: events per unit span.
    pub beta_hat: f64,
}

impl RenewalStats {
    pub fn from_times(times: &[usize], span: usize) -> Result<Self> {
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Structure("event times must be strictly increasing".into()));
        }
        let interarrivals = times.windows(2).map(|w| w[1] - w[0]).collect();
        let beta_hat = if span == 0 { 0.0 } else { times.len() as f64 / span as f64 };
        Ok(RenewalStats { times: times.to_vec(), interarrivals, beta_hat })
    }

    /// Residual time `S_n = next event after or at n, minus n`... the over
    /// jump convention: strictly the first event `> n` minus `n`, so `>= 1`.
    pub fn residual_at(&self, n: usize) -> Option<usize> {
        self.times.iter().find(|&&t| t > n).map(|&t| t - n)
    }
}

/// `N(A)`: how many event times fall in the finite set `A`.
pub fn counting_measure(times: &[usize], a: &[usize]) -> usize {
    times.iter().filter(|t| a.contains(t)).count()
}

/// Monte Carlo estimate of `P{N(A) = 0}` for the stationary process, with
/// binomial standard error.
pub fn miss_probability(
    law: &InterarrivalLaw,
    a: &[usize],
    trials: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if trials < 1000 {
        return Err(Error::Domain("need at least 10^3 trials".into()));
    }
    law.validate()?;
    let horizon = a.iter().copied().max().unwrap_or(0);
    let root = UniformStream::new(seed);
    let mut misses = 0usize;
    for trial in 0..trials {
        let times = law.sample_stationary(horizon, &root.substream(trial as u64));
        if counting_measure(&times, a) == 0 {
            misses += 1;
        }
    }
    let est = misses as f64 / trials as f64;
    let se = (est * (1.0 - est) / trials as f64).sqrt();
    Ok((est, se))
}

/// The three-term bound
/// `(1-delta)^l + (l-1) Fbar([n/l] - n0) + P{T_1 > [n/l] - n0}`.
pub fn epsilon_bound(
    law: &InterarrivalLaw,
    n: usize,
    ell: usize,
    delta: f64,
    n0: usize,
) -> Result<f64> {
    law.validate()?;
    if ell < 1 || ell >= n {
        return Err(Error::Domain(format!("need 1 <= l < n, got l = {ell}, n = {n}")));
    }
    let beta = law.rate();
    if !(delta > 0.0 && delta < beta) {
        return Err(Error::Domain(format!("need 0 < delta < beta = {beta}, got {delta}")));
    }
    let cut = n / ell;
    if cut <= n0 {
        return Ok(1.0); // vacuous regime
    }
    let cut = cut - n0;
    let fbar = law.summed_tail(cut);
    // stationary delay tail: P{T_1 > t} = beta * Fbar(t + 1)
    let delay_tail = (law.rate() * law.summed_tail(cut + 1)).min(1.0);
    let bound = (1.0 - delta).powi(ell as i32) + (ell as f64 - 1.0) * fbar + delay_tail;
    Ok(bound.min(1.0))
}

/// First index past which the renewal density stays above `delta`.
pub fn density_threshold_index(law: &InterarrivalLaw, delta: f64) -> usize {
    let horizon = 8 * law.support_cap().max(16);
    let beta_k = law.renewal_density(horizon);
    let mut n0 = 0usize;
    for (k, &b) in beta_k.iter().enumerate().skip(1) {
        if b <= delta {
            n0 = k;
        }
    }
    n0
}

/// The constructive `eps(n)`: the three-term bound with `delta = beta/2`,
/// `n0` from the exact density recursion, minimized over a grid of `l`.
pub fn epsilon_min(law: &InterarrivalLaw, n: usize) -> f64 {
    if n < 2 {
        return 1.0;
    }
    let beta = law.rate();
    let delta = beta / 2.0;
    let n0 = density_threshold_index(law, delta);
    let mut best = 1.0f64;
    let mut ell = 1usize;
    while ell < n {
        if let Ok(b) = epsilon_bound(law, n, ell, delta, n0) {
            best = best.min(b);
        }
        ell += 1 + ell / 4; // geometric-ish grid keeps this cheap for large n
    }
    best
}

/// Exact residual tail `F_n(k) = sum_{j=0}^n F(j+k) beta_{n-j}` (conditioned
/// on an event at time 0).
pub fn residual_tail_exact(law: &InterarrivalLaw, n: usize, k: usize) -> f64 {
    let beta_k = law.renewal_density(n);
    (0..=n).map(|j| law.tail(j + k) * beta_k[n - j]).sum()
}

/// Empirical residual tail at lag `k` from `trials` simulated processes
/// started with an event at 0.
pub fn residual_tail_empirical(
    law: &InterarrivalLaw,
    n: usize,
    k: usize,
    trials: usize,
    seed: u64,
) -> f64 {
    let root = UniformStream::new(seed);
    let mut hits = 0usize;
    for trial in 0..trials {
        let stream = root.substream(trial as u64);
        // conditioned start: event at 0, then iid gaps
        let mut t = 0usize;
        let mut ctr = 0u64;
        while t <= n {
            t += law.sample_gap(stream.uniform(ctr));
            ctr += 1;
        }
        // t is now the first event strictly past n; S_n = t - n
        if t - n > k {
            hits += 1;
        }
    }
    hits as f64 / trials as f64
}
