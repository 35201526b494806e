//! Finite abelian p-group arithmetic, Lucas binomials, p-expansions and the
//! digit combinatorics behind the density-one index sets.
//!
//! A group is represented in structure-theorem form, as a product of cyclic
//! p-power groups `Z_{p^{e_1}} x ... x Z_{p^{e_d}}`. Scalars act
//! per coordinate through `n mod p^{e_i}`.

use crate::error::{Error, Result};

/// Default cap on brute-force state counts (`q^l` for the system-(S) checker).
pub const DEFAULT_ENUM_CAP: u128 = 1 << 20;

/// A finite abelian group of order `p^(e_1+...+e_d)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupSpec {
    p: u64,
    exponents: Vec<u32>,
    moduli: Vec<u64>,
    q: u64,
    r: u32,
}

impl GroupSpec {
    pub fn new(p: u64, exponents: &[u32]) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::Structure(format!("{p} is not prime")));
        }
        if exponents.is_empty() {
            return Err(Error::Structure("at least one cyclic factor required".into()));
        }
        if exponents.iter().any(|&e| e == 0) {
            return Err(Error::Structure("cyclic factor exponents must be >= 1".into()));
        }
        let mut q: u64 = 1;
        let mut moduli = Vec::with_capacity(exponents.len());
        for &e in exponents {
            let mut m: u64 = 1;
            for _ in 0..e {
                m = m
                    .checked_mul(p)
                    .ok_or_else(|| Error::Capacity("group order overflows u64".into()))?;
                q = q
                    .checked_mul(p)
                    .ok_or_else(|| Error::Capacity("group order overflows u64".into()))?;
            }
            moduli.push(m);
        }
        let r = *exponents.iter().max().unwrap();
        Ok(GroupSpec { p, exponents: exponents.to_vec(), moduli, q, r })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    /// Group order `q = p^(sum e_i)`.
    pub fn order(&self) -> u64 {
        self.q
    }

    /// Exponent power `r = max e_i`, so `p^r * g = 0` for every `g`.
    pub fn exponent_power(&self) -> u32 {
        self.r
    }

    /// `p^r`, the modulus through which every scalar action factors.
    pub fn scalar_modulus(&self) -> u64 {
        self.p.pow(self.r)
    }

    pub fn dims(&self) -> usize {
        self.exponents.len()
    }

    pub fn zero(&self) -> GroupElement {
        GroupElement { coords: vec![0; self.moduli.len()] }
    }

    pub fn element(&self, coords: &[u64]) -> Result<GroupElement> {
        if coords.len() != self.moduli.len() {
            return Err(Error::Structure(format!(
                "element has {} coordinates, group has {} factors",
                coords.len(),
                self.moduli.len()
            )));
        }
        Ok(GroupElement {
            coords: coords.iter().zip(&self.moduli).map(|(c, m)| c % m).collect(),
        })
    }

    /// Mixed-radix rank of an element in `0..q`; the enumeration order used
    /// everywhere an ordering of `G` is needed.
    pub fn index_of(&self, g: &GroupElement) -> u64 {
        let mut idx = 0u64;
        for (c, m) in g.coords.iter().zip(&self.moduli) {
            idx = idx * m + c;
        }
        idx
    }

    pub fn element_at(&self, mut idx: u64) -> GroupElement {
        let mut coords = vec![0u64; self.moduli.len()];
        for i in (0..self.moduli.len()).rev() {
            coords[i] = idx % self.moduli[i];
            idx /= self.moduli[i];
        }
        GroupElement { coords }
    }

    /// All `q` elements in index order.
    pub fn elements(&self) -> impl Iterator<Item = GroupElement> + '_ {
        (0..self.q).map(move |i| self.element_at(i))
    }

    pub fn add(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement> {
        if a.coords.len() != self.moduli.len() || b.coords.len() != self.moduli.len() {
            return Err(Error::Structure("dimension mismatch in group addition".into()));
        }
        Ok(GroupElement {
            coords: a
                .coords
                .iter()
                .zip(&b.coords)
                .zip(&self.moduli)
                .map(|((x, y), m)| (x + y) % m)
                .collect(),
        })
    }

    pub fn neg(&self, a: &GroupElement) -> GroupElement {
        GroupElement {
            coords: a
                .coords
                .iter()
                .zip(&self.moduli)
                .map(|(x, m)| (m - x) % m)
                .collect(),
        }
    }

    /// `n . g` by per-coordinate modular multiplication; agrees with repeated
    /// addition.
    pub fn scalar_mul(&self, n: u64, g: &GroupElement) -> GroupElement {
        GroupElement {
            coords: g
                .coords
                .iter()
                .zip(&self.moduli)
                .map(|(x, m)| ((n % m) as u128 * *x as u128 % *m as u128) as u64)
                .collect(),
        }
    }

    /// True iff `g -> a.g` is a bijection of `G`, i.e. `a mod p != 0`.
    pub fn is_unit_scalar(&self, a: u64) -> bool {
        a % self.p != 0
    }
}

/// An element of a [`GroupSpec`], coordinate `i` reduced into `[0, p^{e_i})`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroupElement {
    coords: Vec<u64>,
}

impl GroupElement {
    pub fn coords(&self) -> &[u64] {
        &self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&c| c == 0)
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// `(m choose k) mod p` by Lucas' theorem: the digitwise product of binomials
/// of base-p digits, with `(r choose s) = 0` when `r < s`.
pub fn lucas_binomial(mut m: u64, mut k: u64, p: u64) -> u64 {
    debug_assert!(is_prime(p));
    let mut acc = 1u64;
    while m > 0 || k > 0 {
        let (mi, ki) = (m % p, k % p);
        if ki > mi {
            return 0;
        }
        acc = acc * small_binomial_mod(mi, ki, p) % p;
        m /= p;
        k /= p;
    }
    acc
}

/// `(m choose k) mod p` for `m, k < p`, by the multiplicative formula.
fn small_binomial_mod(m: u64, k: u64, p: u64) -> u64 {
    let mut num = 1u64;
    let mut den = 1u64;
    for i in 0..k {
        num = num * ((m - i) % p) % p;
        den = den * ((i + 1) % p) % p;
    }
    num * mod_inverse(den, p) % p
}

fn mod_inverse(a: u64, p: u64) -> u64 {
    // Fermat: a^(p-2) mod p.
    mod_pow(a, p - 2, p)
}

pub fn mod_pow(base: u64, mut exp: u64, modulus: u64) -> u64 {
    if modulus == 1 {
        return 0;
    }
    let m = modulus as u128;
    let mut acc = 1u128;
    let mut b = base as u128 % m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        exp >>= 1;
    }
    acc as u64
}

/// Base-p expansion of `m` together with its support.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PExpansion {
    pub m: u64,
    pub p: u64,
    /// Digit `i` is the coefficient of `p^i`; trailing zeros trimmed.
    pub digits: Vec<u64>,
    /// `I(m) = {i : m_i != 0}`, increasing.
    pub support: Vec<u32>,
    /// Support sorted decreasing: `delta_1 > delta_2 > ...`.
    pub deltas: Vec<u32>,
}

impl PExpansion {
    /// `s_m = |I(m)|`.
    pub fn support_size(&self) -> usize {
        self.support.len()
    }

    pub fn digit(&self, i: u32) -> u64 {
        self.digits.get(i as usize).copied().unwrap_or(0)
    }

    /// `delta_{1,m} = floor(log_p m)` for `m >= 1`.
    pub fn leading_power(&self) -> Option<u32> {
        self.deltas.first().copied()
    }
}

pub fn p_expansion(m: u64, p: u64) -> PExpansion {
    debug_assert!(is_prime(p));
    let mut digits = Vec::new();
    let mut x = m;
    while x > 0 {
        digits.push(x % p);
        x /= p;
    }
    let support: Vec<u32> = digits
        .iter()
        .enumerate()
        .filter(|(_, &d)| d != 0)
        .map(|(i, _)| i as u32)
        .collect();
    let mut deltas = support.clone();
    deltas.reverse();
    PExpansion { m, p, digits, support, deltas }
}

/// `log_p log_p M`, the threshold scale of the density sets.
pub fn log_log_base_p(m: u64, p: u64) -> f64 {
    let lp = (p as f64).ln();
    ((m as f64).ln() / lp).ln() / lp
}

/// Counts `m <= M` with `|I(m)| >= alpha * log_p log_p M`.
///
/// Returns `(count, count / M)`.
pub fn density_set(big_m: u64, alpha: f64, p: u64) -> Result<(u64, f64)> {
    if big_m < 16 {
        return Err(Error::Domain(format!("M = {big_m} too small, need M >= 16")));
    }
    let threshold = alpha * log_log_base_p(big_m, p);
    let mut count = 0u64;
    for m in 0..=big_m {
        if p_expansion(m, p).support_size() as f64 >= threshold {
            count += 1;
        }
    }
    Ok((count, count as f64 / big_m as f64))
}

/// Positions `n <= delta_1` with digit `m_n < p - 1`, increasing
/// (`beta_{1,m} < beta_{2,m} < ...`); `G_m` is their count.
pub fn sub_maximal_digit_positions(exp: &PExpansion) -> Vec<u32> {
    match exp.leading_power() {
        None => Vec::new(),
        Some(d1) => (0..=d1).filter(|&n| exp.digit(n) < exp.p - 1).collect(),
    }
}

/// Membership in `R'_M`: at least `log_p(2(l+1))` sub-maximal digit positions,
/// and the one at index `floor(log_p 2(l+1))` lies below `eps * log_p log_p M`.
pub fn in_r_prime(m: u64, big_m: u64, ell: u64, eps: f64, p: u64) -> bool {
    if m == 0 {
        return false;
    }
    let exp = p_expansion(m, p);
    let betas = sub_maximal_digit_positions(&exp);
    let lp = (p as f64).ln();
    let needed = (2.0 * (ell as f64 + 1.0)).ln() / lp;
    if (betas.len() as f64) < needed {
        return false;
    }
    let idx = needed.floor() as usize;
    if idx == 0 {
        // Index-0 pin is vacuous; only the count condition bites.
        return true;
    }
    (betas[idx - 1] as f64) <= eps * log_log_base_p(big_m, p)
}

/// Membership in `R''_M`: leading power above `eps * loglog M` and at least
/// `eps' * loglog M` support points in `[eps * loglog M, delta_1]`.
pub fn in_r_double_prime(m: u64, big_m: u64, eps: f64, eps_prime: f64, p: u64) -> bool {
    if m == 0 {
        return false;
    }
    let exp = p_expansion(m, p);
    let ll = log_log_base_p(big_m, p);
    let d1 = exp.leading_power().unwrap();
    if (d1 as f64) <= eps * ll {
        return false;
    }
    let high = exp
        .support
        .iter()
        .filter(|&&i| (i as f64) >= eps * ll && i <= d1)
        .count();
    (high as f64) >= eps_prime * ll
}

/// Exact sizes of `R'_M` and `R''_M` by enumeration of every `m <= M`.
pub fn density_sets_prime(
    big_m: u64,
    ell: u64,
    eps: f64,
    eps_prime: f64,
    p: u64,
) -> Result<(u64, u64)> {
    if big_m < 16 {
        return Err(Error::Domain(format!("M = {big_m} too small, need M >= 16")));
    }
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::Domain(format!("eps = {eps} outside (0, 1/2)")));
    }
    if eps_prime <= 0.0 {
        return Err(Error::Domain(format!("eps' = {eps_prime} must be positive")));
    }
    let mut n_prime = 0u64;
    let mut n_double = 0u64;
    for m in 0..=big_m {
        if in_r_prime(m, big_m, ell, eps, p) {
            n_prime += 1;
        }
        if in_r_double_prime(m, big_m, eps, eps_prime, p) {
            n_double += 1;
        }
    }
    Ok((n_prime, n_double))
}

/// Validates condition (H'): `a_ii != 0 mod p` and `a_ij = 0 mod p` for `i < j`.
pub fn validate_h_prime(matrix: &[Vec<u64>], p: u64) -> Result<()> {
    let l = matrix.len();
    if matrix.iter().any(|row| row.len() != l) {
        return Err(Error::Structure("system matrix must be square".into()));
    }
    for (i, row) in matrix.iter().enumerate() {
        if row[i] % p == 0 {
            return Err(Error::Precondition(format!(
                "(H') fails: a[{i}][{i}] = {} is 0 mod {p}",
                row[i]
            )));
        }
        for (j, &a) in row.iter().enumerate() {
            if j > i && a % p != 0 {
                return Err(Error::Precondition(format!(
                    "(H') fails: a[{i}][{j}] = {a} is not 0 mod {p}"
                )));
            }
        }
    }
    Ok(())
}

/// Brute-force check that `A . g = 0` over `G^l` has only the zero solution,
/// for an (H') matrix. Lemma-level contract: this is true for every such matrix.
pub fn check_system_s(matrix: &[Vec<u64>], spec: &GroupSpec) -> Result<bool> {
    check_system_s_with_cap(matrix, spec, DEFAULT_ENUM_CAP)
}

pub fn check_system_s_with_cap(matrix: &[Vec<u64>], spec: &GroupSpec, cap: u128) -> Result<bool> {
    validate_h_prime(matrix, spec.p())?;
    let l = matrix.len();
    let states = (spec.order() as u128)
        .checked_pow(l as u32)
        .ok_or_else(|| Error::Capacity("q^l overflows".into()))?;
    if states > cap {
        return Err(Error::Capacity(format!(
            "q^l = {states} exceeds enumeration cap {cap}"
        )));
    }
    let q = spec.order();
    let mut idx = vec![0u64; l];
    loop {
        let g: Vec<GroupElement> = idx.iter().map(|&i| spec.element_at(i)).collect();
        if !g.iter().all(|e| e.is_zero()) {
            let mut all_rows_zero = true;
            for row in matrix {
                let mut acc = spec.zero();
                for (a, gj) in row.iter().zip(&g) {
                    acc = spec.add(&acc, &spec.scalar_mul(*a, gj))?;
                }
                if !acc.is_zero() {
                    all_rows_zero = false;
                    break;
                }
            }
            if all_rows_zero {
                return Ok(false);
            }
        }
        // next vector in G^l
        let mut carry = true;
        for d in idx.iter_mut() {
            *d += 1;
            if *d == q {
                *d = 0;
            } else {
                carry = false;
                break;
            }
        }
        if carry {
            break;
        }
    }
    Ok(true)
}
