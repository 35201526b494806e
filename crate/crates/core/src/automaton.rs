//! The two-cell additive automaton `(phi x)_n = mu.x_n + nu.x_{n+1}` on finite
//! windows, and its closed-form iterate through binomial coefficients.

use crate::error::{Error, Result};
use crate::group::{lucas_binomial, GroupElement, GroupSpec};

/// Automaton parameters; `mu` and `nu` must be units mod `p`.
#[derive(Debug, Clone)]
pub struct AutomatonParams {
    mu: u64,
    nu: u64,
    spec: GroupSpec,
}

impl AutomatonParams {
    pub fn new(mu: u64, nu: u64, spec: GroupSpec) -> Result<Self> {
        if !spec.is_unit_scalar(mu) {
            return Err(Error::Precondition(format!(
                "mu = {mu} is not coprime to p = {}",
                spec.p()
            )));
        }
        if !spec.is_unit_scalar(nu) {
            return Err(Error::Precondition(format!(
                "nu = {nu} is not coprime to p = {}",
                spec.p()
            )));
        }
        Ok(AutomatonParams { mu, nu, spec })
    }

    pub fn mu(&self) -> u64 {
        self.mu
    }

    pub fn nu(&self) -> u64 {
        self.nu
    }

    pub fn spec(&self) -> &GroupSpec {
        &self.spec
    }
}

/// A finite indexed window of group elements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Word {
    start: i64,
    elems: Vec<GroupElement>,
}

impl Word {
    pub fn new(start: i64, elems: Vec<GroupElement>) -> Result<Self> {
        if elems.is_empty() {
            return Err(Error::Structure("word must be nonempty".into()));
        }
        Ok(Word { start, elems })
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn elems(&self) -> &[GroupElement] {
        &self.elems
    }

    /// Element at absolute index `i` (panics outside the window).
    pub fn at(&self, i: i64) -> &GroupElement {
        &self.elems[(i - self.start) as usize]
    }
}

/// One application of phi: `out[n] = mu.w[n] + nu.w[n+1]`, output one shorter.
pub fn step(w: &Word, params: &AutomatonParams) -> Result<Word> {
    if w.len() < 2 {
        return Err(Error::Domain("window of length < 2 cannot be stepped".into()));
    }
    let spec = params.spec();
    let mut out = Vec::with_capacity(w.len() - 1);
    for pair in w.elems.windows(2) {
        let a = spec.scalar_mul(params.mu, &pair[0]);
        let b = spec.scalar_mul(params.nu, &pair[1]);
        out.push(spec.add(&a, &b)?);
    }
    Word::new(w.start, out)
}

/// `phi^m` on a window; requires `|w| >= m + 1`.
pub fn iterate(w: &Word, m: usize, params: &AutomatonParams) -> Result<Word> {
    if w.len() < m + 1 {
        return Err(Error::Domain(format!(
            "window of length {} cannot absorb {m} steps",
            w.len()
        )));
    }
    let mut cur = w.clone();
    for _ in 0..m {
        cur = step(&cur, params)?;
    }
    Ok(cur)
}

/// The coefficient row of `phi^m`: `c_k = C(m,k) mu^{m-k} nu^k mod p^r`,
/// with a companion flag marking the Lucas-unit positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoeffVector {
    pub m: usize,
    /// Length `m + 1`, entries reduced mod `p^r`.
    pub coeffs: Vec<u64>,
    /// `unit[k]` iff `C(m,k) != 0 mod p` (then `c_k` acts bijectively on `G`).
    pub unit: Vec<bool>,
}

/// Builds the coefficient row from scratch in `O(m^2)` Pascal additions mod
/// `p^r`. Scans over consecutive `m` should use [`CoeffRow`] instead.
pub fn coefficients(m: usize, params: &AutomatonParams) -> CoeffVector {
    let mut row = CoeffRow::new(params);
    for _ in 0..m {
        row.advance();
    }
    row.into_coeff_vector()
}

/// Incrementally maintained coefficient row; `advance` costs `O(m)`.
#[derive(Debug, Clone)]
pub struct CoeffRow {
    m: usize,
    /// Plain binomials `C(m,k) mod p^r`.
    binom: Vec<u64>,
    modulus: u64,
    mu: u64,
    nu: u64,
    p: u64,
}

impl CoeffRow {
    pub fn new(params: &AutomatonParams) -> Self {
        let modulus = params.spec().scalar_modulus();
        CoeffRow {
            m: 0,
            binom: vec![1 % modulus],
            modulus,
            mu: params.mu() % modulus,
            nu: params.nu() % modulus,
            p: params.spec().p(),
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Pascal step to row `m + 1`, mod `p^r`.
    pub fn advance(&mut self) {
        let n = self.binom.len();
        let mut next = Vec::with_capacity(n + 1);
        next.push(self.binom[0]);
        for k in 1..n {
            next.push((self.binom[k - 1] + self.binom[k]) % self.modulus);
        }
        next.push(self.binom[n - 1]);
        self.binom = next;
        self.m += 1;
    }

    /// `c_k = C(m,k) mu^{m-k} nu^k mod p^r` for the current row.
    pub fn coeff(&self, k: usize) -> u64 {
        let e_mu = crate::group::mod_pow(self.mu, (self.m - k) as u64, self.modulus);
        let e_nu = crate::group::mod_pow(self.nu, k as u64, self.modulus);
        (((self.binom[k] as u128 * e_mu as u128) % self.modulus as u128)
            * e_nu as u128
            % self.modulus as u128) as u64
    }

    pub fn unit(&self, k: usize) -> bool {
        lucas_binomial(self.m as u64, k as u64, self.p) != 0
    }

    /// All coefficients of the current row, with the `mu`/`nu` power ladders
    /// built incrementally (O(m) total instead of O(m log m)).
    pub fn coeffs_vec(&self) -> Vec<u64> {
        let n = self.binom.len();
        let m128 = self.modulus as u128;
        let mut nu_pow = Vec::with_capacity(n);
        let mut acc = 1u64 % self.modulus;
        for _ in 0..n {
            nu_pow.push(acc);
            acc = (acc as u128 * self.nu as u128 % m128) as u64;
        }
        let mut out = vec![0u64; n];
        let mut mu_acc = 1u64 % self.modulus;
        for k in (0..n).rev() {
            out[k] = ((self.binom[k] as u128 * mu_acc as u128 % m128)
                * nu_pow[k] as u128
                % m128) as u64;
            mu_acc = (mu_acc as u128 * self.mu as u128 % m128) as u64;
        }
        out
    }

    pub fn into_coeff_vector(self) -> CoeffVector {
        let coeffs = self.coeffs_vec();
        let unit: Vec<bool> = (0..=self.m).map(|k| self.unit(k)).collect();
        CoeffVector { m: self.m, coeffs, unit }
    }
}

/// `(phi^m w)_i` through the binomial formula; must equal `iterate(w, m)[i]`.
pub fn apply_closed_form(
    w: &Word,
    m: usize,
    i: i64,
    params: &AutomatonParams,
) -> Result<GroupElement> {
    let lo = w.start();
    let hi = w.start() + w.len() as i64 - 1;
    if i < lo || i + m as i64 > hi {
        return Err(Error::Domain(format!(
            "closed form needs indices {i}..={}, window covers {lo}..={hi}",
            i + m as i64
        )));
    }
    let spec = params.spec();
    let row = coefficients(m, params);
    let mut acc = spec.zero();
    for (k, &c) in row.coeffs.iter().enumerate() {
        let term = spec.scalar_mul(c, w.at(i + k as i64));
        acc = spec.add(&acc, &term)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::UniformStream;

    fn params(p: u64, exps: &[u32], mu: u64, nu: u64) -> AutomatonParams {
        AutomatonParams::new(mu, nu, GroupSpec::new(p, exps).unwrap()).unwrap()
    }

    fn word_from(spec: &GroupSpec, start: i64, idx: &[u64]) -> Word {
        Word::new(start, idx.iter().map(|&i| spec.element_at(i)).collect()).unwrap()
    }

    fn random_word(spec: &GroupSpec, len: usize, seed: u64) -> Word {
        let u = UniformStream::new(seed);
        let elems = (0..len)
            .map(|n| spec.element_at((u.uniform(n as u64) * spec.order() as f64) as u64))
            .collect();
        Word::new(0, elems).unwrap()
    }

    #[test]
    fn rejects_non_unit_mu_nu() {
        let spec = GroupSpec::new(2, &[1]).unwrap();
        assert!(AutomatonParams::new(2, 1, spec.clone()).is_err());
        assert!(AutomatonParams::new(1, 4, spec).is_err());
    }

    #[test]
    fn step_is_xor_for_mod2() {
        let pr = params(2, &[1], 1, 1);
        let w = word_from(pr.spec(), 0, &[1, 0, 1]);
        let out = step(&w, &pr).unwrap();
        assert_eq!(out, word_from(pr.spec(), 0, &[1, 1]));
    }

    #[test]
    fn step_on_constant_word() {
        let pr = params(3, &[2], 2, 2);
        let spec = pr.spec();
        let g = spec.element(&[5]).unwrap();
        let w = Word::new(0, vec![g.clone(); 4]).unwrap();
        let out = step(&w, &pr).unwrap();
        let expect = spec.scalar_mul(4, &g);
        assert!(out.elems().iter().all(|e| *e == expect));
    }

    #[test]
    fn step_hand_example_z3() {
        let pr = params(3, &[1], 1, 2);
        let w = word_from(pr.spec(), 0, &[1, 2, 0]);
        let out = step(&w, &pr).unwrap();
        assert_eq!(out, word_from(pr.spec(), 0, &[2, 2]));
    }

    #[test]
    fn step_needs_two_cells() {
        let pr = params(2, &[1], 1, 1);
        let w = word_from(pr.spec(), 0, &[1]);
        assert!(step(&w, &pr).is_err());
    }

    #[test]
    fn iterate_zero_is_identity() {
        let pr = params(2, &[2], 3, 1);
        let w = random_word(pr.spec(), 10, 7);
        assert_eq!(iterate(&w, 0, &pr).unwrap(), w);
        assert!(iterate(&w, 10, &pr).is_err());
    }

    #[test]
    fn power_of_two_steps_reduce_to_two_terms() {
        // p = 2, mu = nu = 1: (phi^{2^k} x)_0 = x_0 + x_{2^k}.
        let pr = params(2, &[1], 1, 1);
        let spec = pr.spec().clone();
        for k in 0..5u32 {
            let m = 1usize << k;
            let w = random_word(&spec, m + 3, 1000 + k as u64);
            let out = iterate(&w, m, &pr).unwrap();
            let expect = spec.add(w.at(0), w.at(m as i64)).unwrap();
            assert_eq!(*out.at(0), expect);
        }
    }

    #[test]
    fn all_ones_row_sums_whole_window() {
        // p = 2, mu = nu = 1, m = 2^k - 1: (phi^m x)_0 = sum of x_0..x_m.
        let pr = params(2, &[1], 1, 1);
        let spec = pr.spec().clone();
        for k in 1..5u32 {
            let m = (1usize << k) - 1;
            let w = random_word(&spec, m + 2, 2000 + k as u64);
            let out = iterate(&w, m, &pr).unwrap();
            let mut sum = spec.zero();
            for l in 0..=m {
                sum = spec.add(&sum, w.at(l as i64)).unwrap();
            }
            assert_eq!(*out.at(0), sum);
        }
    }

    #[test]
    fn coefficient_examples() {
        let pr = params(2, &[1], 1, 1);
        let c0 = coefficients(0, &pr);
        assert_eq!(c0.coeffs, vec![1]);

        let pr4 = params(2, &[2], 3, 1);
        let c1 = coefficients(1, &pr4);
        assert_eq!(c1.coeffs, vec![3, 1]);

        let c4 = coefficients(4, &pr);
        assert_eq!(c4.unit, vec![true, false, false, false, true]);
    }

    #[test]
    fn boundary_coefficients_are_units() {
        let pr = params(3, &[2], 2, 4);
        let modulus = pr.spec().scalar_modulus();
        for m in 0..30usize {
            let c = coefficients(m, &pr);
            assert_eq!(c.coeffs[0], crate::group::mod_pow(2, m as u64, modulus));
            assert_eq!(c.coeffs[m], crate::group::mod_pow(4, m as u64, modulus));
            assert!(c.unit[0] && c.unit[m]);
        }
    }

    #[test]
    fn closed_form_matches_iterate() {
        for (p, exps, mu, nu) in [
            (2u64, vec![1u32], 1u64, 1u64),
            (2, vec![2], 3, 1),
            (3, vec![1], 1, 2),
            (2, vec![1, 1], 1, 3),
        ] {
            let pr = params(p, &exps, mu, nu);
            let spec = pr.spec().clone();
            for trial in 0..40u64 {
                let m = (trial % 17) as usize;
                let w = random_word(&spec, m + 4, 31 * trial + p);
                let out = iterate(&w, m, &pr).unwrap();
                for i in 0..out.len() {
                    assert_eq!(
                        apply_closed_form(&w, m, i as i64, &pr).unwrap(),
                        *out.at(i as i64)
                    );
                }
            }
        }
    }

    #[test]
    fn closed_form_coverage_error() {
        let pr = params(2, &[1], 1, 1);
        let w = random_word(pr.spec(), 4, 5);
        assert!(apply_closed_form(&w, 4, 0, &pr).is_err());
        assert!(apply_closed_form(&w, 1, 3, &pr).is_err());
        assert!(apply_closed_form(&w, 1, -1, &pr).is_err());
    }

    #[test]
    fn step_is_a_homomorphism() {
        let pr = params(2, &[2], 3, 1);
        let spec = pr.spec().clone();
        let w1 = random_word(&spec, 8, 11);
        let w2 = random_word(&spec, 8, 13);
        let sum = Word::new(
            0,
            w1.elems()
                .iter()
                .zip(w2.elems())
                .map(|(a, b)| spec.add(a, b).unwrap())
                .collect(),
        )
        .unwrap();
        let lhs = step(&sum, &pr).unwrap();
        let s1 = step(&w1, &pr).unwrap();
        let s2 = step(&w2, &pr).unwrap();
        for i in 0..lhs.len() {
            let i = i as i64;
            assert_eq!(*lhs.at(i), spec.add(s1.at(i), s2.at(i)).unwrap());
        }
    }
}
