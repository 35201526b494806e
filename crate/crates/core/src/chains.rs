//! Chains with complete connections and summable decay: kernel families, the
//! interval construction driven by iid uniforms, path sampling and
//! regeneration-time detection.
//!
//! All pasts are passed newest-first: index 0 of a past slice is the symbol at
//! time -1. Beyond the finitely supplied past, each family resolves the tail
//! by its own convention (see [`TailMode`]).

use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupSpec};
use crate::rng::UniformStream;

/// Numerical slack for interval lengths and normalization checks.
pub const LENGTH_TOL: f64 = 1e-12;

/// Default certified false-positive budget for regeneration detection.
pub const DEFAULT_TAIL_TOL: f64 = 1e-6;

/// Hard cap on the adaptive layout truncation depth.
const MAX_LAYOUT_K: usize = 1 << 14;

/// Cap on `q^k` prefix enumeration when computing the exact `a_k` minimum.
const A_ENUM_CAP: u64 = 1 << 14;

/// How unseen past coordinates are resolved when evaluating a kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailMode {
    /// Family default (Markov: initial-past padding; mixture: default symbol).
    DefaultTail,
    /// Exact infimum over all tails.
    WorstCase,
    /// Exact supremum over all tails.
    BestCase,
}

/// Product kernel: iid draws from a fixed law on `G`.
#[derive(Debug, Clone)]
pub struct ProductKernel {
    /// `pi[i]` is the mass of the element with index `i`.
    pub probs: Vec<f64>,
}

/// Order-`k0` Markov kernel given by a full transition table.
#[derive(Debug, Clone)]
pub struct MarkovKernel {
    pub order: usize,
    /// Row per past tuple (mixed-radix index, newest-first digit order),
    /// each row a law on `G`.
    pub table: Vec<Vec<f64>>,
    /// Padding for conditioning deeper than the supplied past (cycled).
    pub initial_past: Vec<GroupElement>,
}

/// Infinite-memory mixture: a uniform floor plus geometrically weighted
/// single-site lookbacks,
/// `P(g|w) = d0/q + (1-d0) * sum_j (1-rho) rho^{j-1} f_j(g | w_{-j})`.
#[derive(Debug, Clone)]
pub struct GeometricMixtureKernel {
    pub delta0: f64,
    pub rho: f64,
    /// `tables[t][w][g]`; lookback `j` uses table `min(j, len) - 1`.
    pub tables: Vec<Vec<Vec<f64>>>,
    /// Value assumed for unseen coordinates under [`TailMode::DefaultTail`].
    pub default_symbol: GroupElement,
}

#[derive(Debug, Clone)]
pub enum KernelFamily {
    Product(ProductKernel),
    Markov(MarkovKernel),
    GeometricMixture(GeometricMixtureKernel),
}

/// A conditional law `P(g | past)` over a fixed group, with computable decay
/// sequence `gamma_m` and computable worst-case conditionals.
#[derive(Debug, Clone)]
pub struct Kernel {
    spec: GroupSpec,
    family: KernelFamily,
}

fn validate_dist(v: &[f64], what: &str, q: usize) -> Result<()> {
    if v.len() != q {
        return Err(Error::Config(format!("{what}: expected {q} probabilities, got {}", v.len())));
    }
    if v.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::Config(format!("{what}: negative or non-finite entry")));
    }
    let s: f64 = v.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("{what}: probabilities sum to {s}, not 1")));
    }
    if v.iter().any(|&x| x <= 0.0) {
        return Err(Error::Config(format!(
            "{what}: zero mass breaks complete connections"
        )));
    }
    Ok(())
}

impl Kernel {
    pub fn product(spec: GroupSpec, probs: Vec<f64>) -> Result<Self> {
        validate_dist(&probs, "product kernel", spec.order() as usize)?;
        Ok(Kernel { spec, family: KernelFamily::Product(ProductKernel { probs }) })
    }

    pub fn uniform_product(spec: GroupSpec) -> Self {
        let q = spec.order() as usize;
        Kernel {
            family: KernelFamily::Product(ProductKernel { probs: vec![1.0 / q as f64; q] }),
            spec,
        }
    }

    pub fn markov(
        spec: GroupSpec,
        order: usize,
        table: Vec<Vec<f64>>,
        initial_past: Vec<GroupElement>,
    ) -> Result<Self> {
        if order == 0 {
            return Err(Error::Config("markov order must be >= 1".into()));
        }
        let q = spec.order() as usize;
        let rows = q
            .checked_pow(order as u32)
            .ok_or_else(|| Error::Capacity("markov state space overflows".into()))?;
        if table.len() != rows {
            return Err(Error::Config(format!(
                "markov table has {} rows, expected q^k0 = {rows}",
                table.len()
            )));
        }
        for (i, row) in table.iter().enumerate() {
            validate_dist(row, &format!("markov row {i}"), q)?;
        }
        if initial_past.is_empty() {
            return Err(Error::Config("markov kernel needs a nonempty initial past".into()));
        }
        Ok(Kernel {
            spec,
            family: KernelFamily::Markov(MarkovKernel { order, table, initial_past }),
        })
    }

    pub fn geometric_mixture(
        spec: GroupSpec,
        delta0: f64,
        rho: f64,
        tables: Vec<Vec<Vec<f64>>>,
        default_symbol: GroupElement,
    ) -> Result<Self> {
        if !(delta0 > 0.0 && delta0 < 1.0) {
            return Err(Error::Config(format!("delta0 = {delta0} outside (0,1)")));
        }
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::Config(format!("rho = {rho} outside (0,1)")));
        }
        if tables.is_empty() {
            return Err(Error::Config("mixture needs at least one table".into()));
        }
        let q = spec.order() as usize;
        for (t, table) in tables.iter().enumerate() {
            if table.len() != q {
                return Err(Error::Config(format!("mixture table {t}: expected {q} rows")));
            }
            for (w, row) in table.iter().enumerate() {
                validate_dist(row, &format!("mixture table {t} row {w}"), q)?;
            }
        }
        Ok(Kernel {
            spec,
            family: KernelFamily::GeometricMixture(GeometricMixtureKernel {
                delta0,
                rho,
                tables,
                default_symbol,
            }),
        })
    }

    pub fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    pub fn family(&self) -> &KernelFamily {
        &self.family
    }

    /// Depth beyond which the conditional law is insensitive to the past
    /// (exactly for Markov, to below `1e-15` relative mass for the mixture).
    pub fn relevant_depth(&self) -> usize {
        match &self.family {
            KernelFamily::Product(_) => 0,
            KernelFamily::Markov(k) => k.order,
            KernelFamily::GeometricMixture(k) => {
                let mut d = k.tables.len();
                while k.rho.powi(d as i32) > 1e-15 && d < 4096 {
                    d += 1;
                }
                d
            }
        }
    }

    /// `P(g | past)` with the tail resolved per `mode`. `WorstCase` and
    /// `BestCase` are the exact inf/sup over all tails extending `past`.
    pub fn eval(&self, g: &GroupElement, past: &[GroupElement], mode: TailMode) -> f64 {
        let gi = self.spec.index_of(g) as usize;
        self.eval_idx(gi, past, mode)
    }

    pub fn eval_idx(&self, gi: usize, past: &[GroupElement], mode: TailMode) -> f64 {
        match &self.family {
            KernelFamily::Product(k) => k.probs[gi],
            KernelFamily::Markov(k) => self.eval_markov(k, gi, past, mode),
            KernelFamily::GeometricMixture(k) => self.eval_mixture(k, gi, past, mode),
        }
    }

    fn eval_markov(&self, k: &MarkovKernel, gi: usize, past: &[GroupElement], mode: TailMode) -> f64 {
        let q = self.spec.order();
        if past.len() >= k.order {
            return k.table[self.row_index(k, past, |_| unreachable!())][gi];
        }
        match mode {
            TailMode::DefaultTail => {
                let pad = |depth: usize| {
                    let i = depth - past.len();
                    k.initial_past[i % k.initial_past.len()].clone()
                };
                k.table[self.row_index(k, past, pad)][gi]
            }
            TailMode::WorstCase | TailMode::BestCase => {
                let free = k.order - past.len();
                let combos = q.pow(free as u32);
                let mut best = if mode == TailMode::WorstCase { f64::MAX } else { f64::MIN };
                for c in 0..combos {
                    let mut idx = c;
                    let filler: Vec<GroupElement> = (0..free)
                        .map(|_| {
                            let e = self.spec.element_at(idx % q);
                            idx /= q;
                            e
                        })
                        .collect();
                    let v = k.table[self.row_index(k, past, |d| filler[d - past.len()].clone())][gi];
                    best = if mode == TailMode::WorstCase { best.min(v) } else { best.max(v) };
                }
                best
            }
        }
    }

    /// Mixed-radix row index for the `order` newest past symbols, with `pad`
    /// supplying symbols deeper than the given slice.
    fn row_index(
        &self,
        k: &MarkovKernel,
        past: &[GroupElement],
        pad: impl Fn(usize) -> GroupElement,
    ) -> usize {
        let q = self.spec.order() as usize;
        let mut idx = 0usize;
        for depth in (0..k.order).rev() {
            let sym = if depth < past.len() { past[depth].clone() } else { pad(depth) };
            idx = idx * q + self.spec.index_of(&sym) as usize;
        }
        idx
    }

    fn eval_mixture(
        &self,
        k: &GeometricMixtureKernel,
        gi: usize,
        past: &[GroupElement],
        mode: TailMode,
    ) -> f64 {
        let table_for = |j: usize| &k.tables[j.min(k.tables.len()) - 1];
        let site_value = |j: usize| -> f64 {
            // lookback j >= 1; past[j-1] if seen, else per tail mode
            if j - 1 < past.len() {
                let wi = self.spec.index_of(&past[j - 1]) as usize;
                table_for(j)[wi][gi]
            } else {
                match mode {
                    TailMode::DefaultTail => {
                        let wi = self.spec.index_of(&k.default_symbol) as usize;
                        table_for(j)[wi][gi]
                    }
                    TailMode::WorstCase => table_for(j)
                        .iter()
                        .map(|row| row[gi])
                        .fold(f64::MAX, f64::min),
                    TailMode::BestCase => table_for(j)
                        .iter()
                        .map(|row| row[gi])
                        .fold(f64::MIN, f64::max),
                }
            }
        };
        let depth = self.relevant_depth().max(past.len().min(4096));
        let mut acc = 0.0;
        for j in 1..=depth {
            let lambda = (1.0 - k.rho) * k.rho.powi(j as i32 - 1);
            acc += lambda * site_value(j);
        }
        // closed-form remainder: all deeper sites use the deepest table and
        // are unseen, so their common value factors out of the geometric tail
        acc += k.rho.powi(depth as i32) * site_value(depth + 1);
        k.delta0 / self.spec.order() as f64 + (1.0 - k.delta0) * acc
    }

    /// Decay bound `gamma_m`: sup over pasts agreeing on `m` coordinates of
    /// the relative change of the conditional law.
    pub fn gamma(&self, m: usize) -> f64 {
        match &self.family {
            KernelFamily::Product(_) => 0.0,
            KernelFamily::Markov(k) => {
                if m >= k.order {
                    0.0
                } else {
                    self.markov_gamma_exact(k, m)
                }
            }
            KernelFamily::GeometricMixture(k) => {
                let spread = mixture_max_spread(k);
                let bound = (1.0 - k.delta0) * k.rho.powi(m as i32) * spread
                    / (k.delta0 / self.spec.order() as f64);
                bound
            }
        }
    }

    fn markov_gamma_exact(&self, k: &MarkovKernel, m: usize) -> f64 {
        // sup over prefix in G^m and pairs of completions of |P/P' - 1|
        let q = self.spec.order() as usize;
        let prefixes = q.pow(m as u32);
        let free = k.order - m;
        let combos = q.pow(free as u32);
        let mut worst: f64 = 0.0;
        for pre in 0..prefixes {
            for ca in 0..combos {
                for cb in 0..combos {
                    let ra = pre + ca * prefixes;
                    let rb = pre + cb * prefixes;
                    for g in 0..q {
                        let ratio = k.table[ra][g] / k.table[rb][g] - 1.0;
                        worst = worst.max(ratio.abs());
                    }
                }
            }
        }
        worst
    }

    /// Closed-form upper bound for `sum_{j >= m} gamma_j`.
    pub fn gamma_tail_sum(&self, m: usize) -> f64 {
        match &self.family {
            KernelFamily::Product(_) => 0.0,
            KernelFamily::Markov(k) => (m..k.order).map(|j| self.gamma(j)).sum(),
            KernelFamily::GeometricMixture(k) => {
                let spread = mixture_max_spread(k);
                let c = (1.0 - k.delta0) * spread / (k.delta0 / self.spec.order() as f64);
                c * k.rho.powi(m as i32) / (1.0 - k.rho)
            }
        }
    }

    /// Global infimum `inf P(z | v)` over all symbols and pasts; this is the
    /// per-element level `-1` slice length `a_{-1}(g|w)`.
    pub fn global_inf(&self) -> f64 {
        let q = self.spec.order() as usize;
        (0..q)
            .map(|g| self.eval_idx(g, &[], TailMode::WorstCase))
            .fold(f64::MAX, f64::min)
    }

    /// Row `a_k(g|w)` for every `g`: the infimum of `P(g | w_{-1..-k}, tail)`.
    /// `k = past.len()`; for `k = 0` this is `a_0(g)`.
    pub fn a_row(&self, past: &[GroupElement]) -> Vec<f64> {
        let q = self.spec.order() as usize;
        (0..q).map(|g| self.eval_idx(g, past, TailMode::WorstCase)).collect()
    }

    /// The scalar sequence driving detection, indexed so `entry[j] = a_{j-1}`:
    /// `entry[0] = |B_{-1}| = q * inf P`, and for `k >= 0`
    /// `entry[k+1] = a_k = min_w sum_g a_k(g|w)`, computed exactly while the
    /// prefix enumeration stays within cap and bounded below by `1 - gamma_k`
    /// beyond. The result is clamped nondecreasing, which keeps every entry a
    /// valid lower bound of the true `a_k`.
    pub fn a_seq(&self, len: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(len);
        if len == 0 {
            return out;
        }
        out.push(self.spec.order() as f64 * self.global_inf());
        let mut saturated = false;
        for k in 0..len.saturating_sub(1) {
            if saturated {
                let prev = *out.last().unwrap();
                out.push(prev);
                continue;
            }
            let exact = self.a_scalar_exact(k);
            let v = match exact {
                Some(v) => v,
                None => 1.0 - self.gamma(k).min(1.0),
            };
            let prev = *out.last().unwrap();
            let v = v.max(prev).min(1.0);
            out.push(v);
            if 1.0 - v < 1e-15 {
                saturated = true;
            }
        }
        out
    }

    /// `min_w sum_g a_k(g|w)` by exact prefix enumeration, or `None` when the
    /// enumeration would exceed the cap.
    fn a_scalar_exact(&self, k: usize) -> Option<f64> {
        match &self.family {
            KernelFamily::Product(p) => {
                if k == 0 {
                    // a_0(g) = pi(g) already
                    Some(p.probs.iter().sum())
                } else {
                    Some(1.0)
                }
            }
            KernelFamily::Markov(mk) => {
                let eff = k.min(mk.order); // stabilizes at the order
                self.enumerated_a_min(eff)
            }
            KernelFamily::GeometricMixture(_) => {
                let q = self.spec.order();
                if (q as f64).powi(k as i32) <= A_ENUM_CAP as f64 {
                    self.enumerated_a_min(k)
                } else {
                    None
                }
            }
        }
    }

    fn enumerated_a_min(&self, k: usize) -> Option<f64> {
        let q = self.spec.order();
        let combos = (q as f64).powi(k as i32);
        if combos > A_ENUM_CAP as f64 {
            return None;
        }
        let combos = combos as u64;
        let mut best = f64::MAX;
        for c in 0..combos {
            let mut idx = c;
            let past: Vec<GroupElement> = (0..k)
                .map(|_| {
                    let e = self.spec.element_at(idx % q);
                    idx /= q;
                    e
                })
                .collect();
            let s: f64 = self.a_row(&past).iter().sum();
            best = best.min(s);
        }
        Some(best)
    }

    /// `beta = a_{-1} a_0 a_1 ...`, the regeneration density.
    pub fn beta(&self) -> f64 {
        let depth = self.relevant_depth() + 2;
        self.a_seq(depth.max(64)).iter().product()
    }
}

fn mixture_max_spread(k: &GeometricMixtureKernel) -> f64 {
    let mut spread: f64 = 0.0;
    for table in &k.tables {
        let q = table.len();
        for g in 0..q {
            let col: Vec<f64> = table.iter().map(|row| row[g]).collect();
            let mx = col.iter().cloned().fold(f64::MIN, f64::max);
            let mn = col.iter().cloned().fold(f64::MAX, f64::min);
            spread = spread.max(mx - mn);
        }
    }
    spread
}

/// The packed interval layout for one conditioning past, levels
/// `k = -1, 0, ..., K`, elements in index order within each level.
#[derive(Debug, Clone)]
pub struct IntervalLayout {
    pub truncation_k: usize,
    /// `lengths[level][g]`, level 0 holding `k = -1`.
    pub lengths: Vec<Vec<f64>>,
    /// `a_k(g|w)` rows matching `lengths` (level 0 repeats the global inf).
    pub a_rows: Vec<Vec<f64>>,
    /// Total covered mass `sum_g a_K(g|w)`.
    pub total: f64,
}

impl IntervalLayout {
    /// Locates `u` in the packed layout; intervals are half-open `[lo, hi)`.
    /// Returns `(level_k, element_index)` with `level_k = -1` for the uniform
    /// slice, or `None` when `u` lies beyond the covered mass.
    pub fn locate(&self, u: f64) -> Option<(i64, usize)> {
        let mut lo = 0.0;
        for (level, row) in self.lengths.iter().enumerate() {
            for (g, &len) in row.iter().enumerate() {
                let hi = lo + len;
                if u >= lo && u < hi {
                    return Some((level as i64 - 1, g));
                }
                lo = hi;
            }
        }
        None
    }

    /// Coverage of the union of levels `<= k`: `sum_g a_k(g|w)`.
    pub fn coverage_through(&self, k: i64) -> f64 {
        let level = (k + 1) as usize;
        self.lengths[..=level].iter().flatten().sum()
    }
}

/// Builds the layout for the given past (newest-first) truncated at level `K`.
pub fn build_layout(kernel: &Kernel, past: &[GroupElement], truncation_k: usize) -> Result<IntervalLayout> {
    let q = kernel.spec().order() as usize;
    let inf = kernel.global_inf();
    let mut a_rows = vec![vec![inf; q]];
    let mut lengths = vec![vec![inf; q]];
    let mut prev = vec![inf; q];
    for k in 0..=truncation_k {
        let known = k.min(past.len());
        // beyond the supplied past the conditioning symbols follow the
        // family's default-tail convention, so extend explicitly
        let row = if k <= past.len() {
            kernel.a_row(&past[..known])
        } else {
            let mut ext: Vec<GroupElement> = past.to_vec();
            while ext.len() < k {
                ext.push(default_extension_symbol(kernel, ext.len()));
            }
            kernel.a_row(&ext)
        };
        let mut level = Vec::with_capacity(q);
        for g in 0..q {
            let b = row[g] - prev[g];
            if b < -LENGTH_TOL {
                return Err(Error::KernelInconsistency(format!(
                    "a_{k}(g|w) decreased by {} at g index {g}",
                    -b
                )));
            }
            level.push(b.max(0.0));
        }
        prev = row.clone();
        a_rows.push(row);
        lengths.push(level);
    }
    let total = lengths.iter().flatten().sum();
    Ok(IntervalLayout { truncation_k, lengths, a_rows, total })
}

fn default_extension_symbol(kernel: &Kernel, depth: usize) -> GroupElement {
    match kernel.family() {
        KernelFamily::Product(_) => kernel.spec().zero(),
        KernelFamily::Markov(k) => k.initial_past[depth % k.initial_past.len()].clone(),
        KernelFamily::GeometricMixture(k) => k.default_symbol.clone(),
    }
}

/// A sampled trajectory with its uniforms and detected regeneration times.
#[derive(Debug, Clone)]
pub struct RegenSample {
    pub past: Vec<GroupElement>,
    pub xs: Vec<GroupElement>,
    pub us: Vec<f64>,
    pub seed: u64,
    /// Times whose finite-horizon check passed with certified tail bound.
    pub regens: Vec<usize>,
    /// Certified false-positive bound per detected time.
    pub tail_bounds: Vec<f64>,
    /// Times passing the finite check but with unachievable tail tolerance.
    pub candidates: Vec<usize>,
    pub tail_tol: f64,
}

/// Samples `x_0..x_{N-1}` from the kernel conditioned on `past` and detects
/// regenerations with the default tail tolerance.
pub fn sample_path(kernel: &Kernel, past: &[GroupElement], n: usize, seed: u64) -> Result<RegenSample> {
    sample_path_with(kernel, past, n, seed, DEFAULT_TAIL_TOL)
}

pub fn sample_path_with(
    kernel: &Kernel,
    past: &[GroupElement],
    n: usize,
    seed: u64,
    tail_tol: f64,
) -> Result<RegenSample> {
    if n == 0 {
        return Err(Error::Domain("need N >= 1".into()));
    }
    let stream = UniformStream::new(seed);
    let depth_cap = kernel.relevant_depth() + 1;
    let mut xs: Vec<GroupElement> = Vec::with_capacity(n);
    let mut us = Vec::with_capacity(n);
    // realized past window, newest-first, bounded by the relevant depth
    let mut window: Vec<GroupElement> = past.iter().take(depth_cap).cloned().collect();
    for t in 0..n {
        let u = stream.uniform(t as u64);
        us.push(u);
        let x = locate_symbol(kernel, &window, u)?;
        window.insert(0, x.clone());
        window.truncate(depth_cap);
        xs.push(x);
    }
    let mut sample = RegenSample {
        past: past.to_vec(),
        xs,
        us,
        seed,
        regens: Vec::new(),
        tail_bounds: Vec::new(),
        candidates: Vec::new(),
        tail_tol,
    };
    let det = detect_regenerations(&sample.us, kernel, tail_tol);
    sample.regens = det.regens;
    sample.tail_bounds = det.tail_bounds;
    sample.candidates = det.candidates;
    Ok(sample)
}

fn locate_symbol(kernel: &Kernel, window: &[GroupElement], u: f64) -> Result<GroupElement> {
    let mut k = 4usize;
    loop {
        let layout = build_layout(kernel, window, k)?;
        if let Some((_, g)) = layout.locate(u) {
            return Ok(kernel.spec().element_at(g as u64));
        }
        if u < layout.total {
            // boundary rounding; assign to the last interval
            return Ok(kernel.spec().element_at(kernel.spec().order() - 1));
        }
        if k >= MAX_LAYOUT_K {
            return Err(Error::Capacity(format!(
                "uniform {u} not covered at truncation K = {k}"
            )));
        }
        k *= 2;
    }
}

/// Result of scanning a uniform sequence for regeneration times.
#[derive(Debug, Clone)]
pub struct Detection {
    pub regens: Vec<usize>,
    pub tail_bounds: Vec<f64>,
    pub candidates: Vec<usize>,
}

/// Times `n` with `U_{n+j} <= a_{j-1}` for every in-horizon `j`, split by
/// whether the unobservable tail `sum_{j : n+j >= N} (1 - a_{j-1})`, bounded
/// through `gamma`, fits inside `tail_tol`.
pub fn detect_regenerations(us: &[f64], kernel: &Kernel, tail_tol: f64) -> Detection {
    let n = us.len();
    let thresholds = kernel.a_seq(n);
    // past j_eff every threshold sits within 1e-15 of 1; since thresholds are
    // nondecreasing, failures out there require a uniform above that floor,
    // which we pre-collect instead of scanning per candidate
    let j_eff = thresholds
        .iter()
        .position(|&t| 1.0 - t < 1e-15)
        .unwrap_or(thresholds.len())
        .max(1);
    let floor = thresholds.get(j_eff).copied().unwrap_or(1.0);
    let near_one: Vec<usize> = us
        .iter()
        .enumerate()
        .filter(|(_, &u)| u > floor)
        .map(|(i, _)| i)
        .collect();
    let mut regens = Vec::new();
    let mut tail_bounds = Vec::new();
    let mut candidates = Vec::new();
    'outer: for t in 0..n {
        let horizon = (n - t).min(j_eff);
        for j in 0..horizon {
            if us[t + j] > thresholds[j] {
                continue 'outer;
            }
        }
        for &m in &near_one {
            if m >= t + horizon && us[m] > thresholds[m - t] {
                continue 'outer;
            }
        }
        let tail = kernel.gamma_tail_sum(n - t - 1);
        if tail <= tail_tol {
            regens.push(t);
            tail_bounds.push(tail);
        } else {
            candidates.push(t);
        }
    }
    Detection { regens, tail_bounds, candidates }
}

/// Consecutive inter-regeneration blocks `(x_{T_i}, ..., x_{T_{i+1}-1})`.
pub fn regeneration_blocks(sample: &RegenSample) -> Vec<Vec<GroupElement>> {
    if sample.regens.len() < 2 {
        return Vec::new();
    }
    sample
        .regens
        .windows(2)
        .map(|w| sample.xs[w[0]..w[1]].to_vec())
        .collect()
}
