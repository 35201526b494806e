//! C ABI for the simulation core. Objects are exposed as opaque handles that
//! must be released with the matching `_free` function; fallible calls return
//! a status code and record a message retrievable with
//! `ga_last_error_message`. The header is generated at build time into
//! `include/gautomata.h`.

use std::cell::RefCell;
use std::os::raw::c_char;
use std::slice;

use gautomata::automaton::AutomatonParams;
use gautomata::cesaro::{self, ScanMode};
use gautomata::chains::{self, RegenSample};
use gautomata::error::Error;
use gautomata::group::{self, GroupSpec};
use gautomata::renewal::{self, InterarrivalLaw};

/// Success.
pub const GA_OK: i32 = 0;
/// Invalid argument, parse error, or domain violation.
pub const GA_ERR_INVALID: i32 = 2;
/// A size or enumeration cap was exceeded.
pub const GA_ERR_CAPACITY: i32 = 3;
/// An internal consistency check failed.
pub const GA_ERR_VALIDATION: i32 = 4;
/// A null handle or pointer was passed.
pub const GA_ERR_NULL: i32 = 5;

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn fail(e: Error) -> i32 {
    let code = e.exit_code();
    LAST_ERROR.with(|s| *s.borrow_mut() = e.to_string());
    code
}

fn fail_null() -> i32 {
    LAST_ERROR.with(|s| *s.borrow_mut() = "null pointer argument".into());
    GA_ERR_NULL
}

/// Copies the message of the most recent error on this thread into `buf`
/// (NUL-terminated, truncated to `cap`). Returns the untruncated length.
///
/// # Safety
/// `buf` must point to at least `cap` writable bytes, or be null (query mode).
#[no_mangle]
pub unsafe extern "C" fn ga_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|s| {
        let msg = s.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            let out = slice::from_raw_parts_mut(buf as *mut u8, cap);
            out[..n].copy_from_slice(&bytes[..n]);
            out[n] = 0;
        }
        bytes.len()
    })
}

/// Opaque finite abelian p-group descriptor.
pub struct GaGroup(GroupSpec);
/// Opaque conditional kernel (chain with complete connections).
pub struct GaKernel(chains::Kernel);
/// Opaque sampled trajectory with detected regeneration times.
pub struct GaSample(RegenSample, GroupSpec);

/// Creates the group `prod Z_{p^{e_i}}` from `exponents[0..len]`.
///
/// # Safety
/// `exponents` must point to `len` readable `u32`s; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ga_group_new(
    p: u64,
    exponents: *const u32,
    len: usize,
    out: *mut *mut GaGroup,
) -> i32 {
    if exponents.is_null() || out.is_null() {
        return fail_null();
    }
    let exps = slice::from_raw_parts(exponents, len);
    match GroupSpec::new(p, exps) {
        Ok(spec) => {
            *out = Box::into_raw(Box::new(GaGroup(spec)));
            GA_OK
        }
        Err(e) => fail(e),
    }
}

/// Releases a group handle. Null is a no-op.
///
/// # Safety
/// `h` must be a handle from `ga_group_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ga_group_free(h: *mut GaGroup) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Number of elements of the group; 0 on a null handle.
///
/// # Safety
/// `h` must be a live group handle or null.
#[no_mangle]
pub unsafe extern "C" fn ga_group_order(h: *const GaGroup) -> u64 {
    if h.is_null() {
        return 0;
    }
    (*h).0.order()
}

/// 1 when the scalar acts invertibly (is coprime to p), else 0.
///
/// # Safety
/// `h` must be a live group handle or null.
#[no_mangle]
pub unsafe extern "C" fn ga_group_is_unit_scalar(h: *const GaGroup, a: u64) -> i32 {
    if h.is_null() {
        return 0;
    }
    i32::from((*h).0.is_unit_scalar(a))
}

/// The binomial coefficient `(m choose k)` reduced mod the prime `p`,
/// computed digit-wise. Returns `u64::MAX` when `p` is not prime.
#[no_mangle]
pub extern "C" fn ga_binomial_mod_p(m: u64, k: u64, p: u64) -> u64 {
    if !group::is_prime(p) {
        return u64::MAX;
    }
    group::lucas_binomial(m, k, p)
}

/// Creates a memoryless product kernel with symbol probabilities
/// `probs[0..order]`.
///
/// # Safety
/// `probs` must point to `len` readable doubles; `out` must be writable;
/// `g` must be a live group handle.
#[no_mangle]
pub unsafe extern "C" fn ga_kernel_product_new(
    g: *const GaGroup,
    probs: *const f64,
    len: usize,
    out: *mut *mut GaKernel,
) -> i32 {
    if g.is_null() || probs.is_null() || out.is_null() {
        return fail_null();
    }
    let p = slice::from_raw_parts(probs, len).to_vec();
    match chains::Kernel::product((*g).0.clone(), p) {
        Ok(k) => {
            *out = Box::into_raw(Box::new(GaKernel(k)));
            GA_OK
        }
        Err(e) => fail(e),
    }
}

/// Creates an order-`k0` Markov kernel. `rows` is a flat row-major
/// `order^k0 x order` stochastic matrix; `initial_past[0..k0]` are element
/// indices padding short histories.
///
/// # Safety
/// `rows` must hold `order^k0 * order` doubles, `initial_past` must hold `k0`
/// indices; `g` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ga_kernel_markov_new(
    g: *const GaGroup,
    k0: usize,
    rows: *const f64,
    initial_past: *const u64,
    out: *mut *mut GaKernel,
) -> i32 {
    if g.is_null() || rows.is_null() || initial_past.is_null() || out.is_null() {
        return fail_null();
    }
    let spec = (*g).0.clone();
    let q = spec.order() as usize;
    let nrows = q.pow(k0 as u32);
    let flat = slice::from_raw_parts(rows, nrows * q);
    let table: Vec<Vec<f64>> = flat.chunks(q).map(<[f64]>::to_vec).collect();
    let past_idx = slice::from_raw_parts(initial_past, k0);
    let past: Vec<_> = past_idx.iter().map(|&i| spec.element_at(i % spec.order())).collect();
    match chains::Kernel::markov(spec, k0, table, past) {
        Ok(k) => {
            *out = Box::into_raw(Box::new(GaKernel(k)));
            GA_OK
        }
        Err(e) => fail(e),
    }
}

/// Releases a kernel handle. Null is a no-op.
///
/// # Safety
/// `h` must be a handle from a kernel constructor not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ga_kernel_free(h: *mut GaKernel) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Exact regeneration density `beta = a_{-1} a_0 a_1 ...`; NaN on null.
///
/// # Safety
/// `h` must be a live kernel handle or null.
#[no_mangle]
pub unsafe extern "C" fn ga_kernel_beta(h: *const GaKernel) -> f64 {
    if h.is_null() {
        return f64::NAN;
    }
    (*h).0.beta()
}

/// Samples `n` steps of the chain started from the element indices
/// `past[0..past_len]`, detecting regeneration times with certified tail
/// tolerance `tail_tol` (pass 0 for the default).
///
/// # Safety
/// `past` must hold `past_len` indices (may be null when `past_len` is 0);
/// `k` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ga_sample_path(
    k: *const GaKernel,
    past: *const u64,
    past_len: usize,
    n: usize,
    seed: u64,
    tail_tol: f64,
    out: *mut *mut GaSample,
) -> i32 {
    if k.is_null() || out.is_null() || (past.is_null() && past_len > 0) {
        return fail_null();
    }
    let kernel = &(*k).0;
    let spec = kernel.spec().clone();
    let past: Vec<_> = if past_len == 0 {
        Vec::new()
    } else {
        slice::from_raw_parts(past, past_len)
            .iter()
            .map(|&i| spec.element_at(i % spec.order()))
            .collect()
    };
    let tol = if tail_tol > 0.0 { tail_tol } else { chains::DEFAULT_TAIL_TOL };
    match chains::sample_path_with(kernel, &past, n, seed, tol) {
        Ok(s) => {
            *out = Box::into_raw(Box::new(GaSample(s, spec)));
            GA_OK
        }
        Err(e) => fail(e),
    }
}

/// Releases a sample handle. Null is a no-op.
///
/// # Safety
/// `h` must be a handle from `ga_sample_path` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ga_sample_free(h: *mut GaSample) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Trajectory length.
///
/// # Safety
/// `h` must be a live sample handle or null.
#[no_mangle]
pub unsafe extern "C" fn ga_sample_len(h: *const GaSample) -> usize {
    if h.is_null() {
        return 0;
    }
    (*h).0.xs.len()
}

/// Element index of the symbol at time `t`, or `u64::MAX` out of range.
///
/// # Safety
/// `h` must be a live sample handle or null.
#[no_mangle]
pub unsafe extern "C" fn ga_sample_symbol(h: *const GaSample, t: usize) -> u64 {
    if h.is_null() || t >= (*h).0.xs.len() {
        return u64::MAX;
    }
    let s = &*h;
    s.1.index_of(&s.0.xs[t])
}

/// Driving uniform at time `t`, or NaN out of range.
///
/// # Safety
/// `h` must be a live sample handle or null.
#[no_mangle]
pub unsafe extern "C" fn ga_sample_uniform(h: *const GaSample, t: usize) -> f64 {
    if h.is_null() || t >= (*h).0.us.len() {
        return f64::NAN;
    }
    (&(*h).0.us)[t]
}

/// Number of certified regeneration times.
///
/// # Safety
/// `h` must be a live sample handle or null.
#[no_mangle]
pub unsafe extern "C" fn ga_sample_regen_count(h: *const GaSample) -> usize {
    if h.is_null() {
        return 0;
    }
    (*h).0.regens.len()
}

/// The `i`-th regeneration time, or `usize::MAX` out of range.
///
/// # Safety
/// `h` must be a live sample handle or null.
#[no_mangle]
pub unsafe extern "C" fn ga_sample_regen_time(h: *const GaSample, i: usize) -> usize {
    if h.is_null() || i >= (*h).0.regens.len() {
        return usize::MAX;
    }
    (&(*h).0.regens)[i]
}

/// Exact total-variation distance between the Cesaro average over `m < big_m`
/// of the joint law of the automaton iterates at offsets `j[0..j_len]` and the
/// uniform law, for the automaton `(phi x)_n = mu x_n + nu x_{n+1}`.
///
/// # Safety
/// `k` must be live; `past` must hold `past_len` indices (or be null with
/// `past_len` 0); `j` must hold `j_len` offsets; `out_tv` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ga_cesaro_tv_exact(
    k: *const GaKernel,
    past: *const u64,
    past_len: usize,
    mu: u64,
    nu: u64,
    j: *const usize,
    j_len: usize,
    big_m: u64,
    out_tv: *mut f64,
) -> i32 {
    if k.is_null() || j.is_null() || out_tv.is_null() || (past.is_null() && past_len > 0) {
        return fail_null();
    }
    let kernel = &(*k).0;
    let spec = kernel.spec().clone();
    let past: Vec<_> = if past_len == 0 {
        Vec::new()
    } else {
        slice::from_raw_parts(past, past_len)
            .iter()
            .map(|&i| spec.element_at(i % spec.order()))
            .collect()
    };
    let j_set = slice::from_raw_parts(j, j_len).to_vec();
    let params = match AutomatonParams::new(mu, nu, spec) {
        Ok(p) => p,
        Err(e) => return fail(e),
    };
    match cesaro::cesaro_scan(kernel, &past, &params, &j_set, &[big_m], ScanMode::Exact, 0) {
        Ok(rep) => {
            *out_tv = rep.tv[0];
            GA_OK
        }
        Err(e) => fail(e),
    }
}

/// Optimized three-term uniformity bound for a geometric interarrival law with
/// event density `beta`, over a window of `n` indices. NaN on bad input.
#[no_mangle]
pub extern "C" fn ga_epsilon_min_geometric(beta: f64, n: usize) -> f64 {
    if !(beta > 0.0 && beta < 1.0) || n < 2 {
        return f64::NAN;
    }
    renewal::epsilon_min(&InterarrivalLaw::Geometric { beta }, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_round_trip() {
        unsafe {
            let exps = [1u32, 1];
            let mut g: *mut GaGroup = std::ptr::null_mut();
            assert_eq!(ga_group_new(2, exps.as_ptr(), 2, &mut g), GA_OK);
            assert_eq!(ga_group_order(g), 4);
            assert_eq!(ga_group_is_unit_scalar(g, 3), 1);
            assert_eq!(ga_group_is_unit_scalar(g, 2), 0);
            ga_group_free(g);
        }
    }

    #[test]
    fn error_reporting() {
        unsafe {
            let exps = [1u32];
            let mut g: *mut GaGroup = std::ptr::null_mut();
            assert_eq!(ga_group_new(4, exps.as_ptr(), 1, &mut g), GA_ERR_INVALID);
            let mut buf = [0i8; 128];
            let n = ga_last_error_message(buf.as_mut_ptr(), buf.len());
            assert!(n > 0);
        }
    }

    #[test]
    fn binomial_is_pure() {
        assert_eq!(ga_binomial_mod_p(10, 4, 2), 0);
        assert_eq!(ga_binomial_mod_p(10, 2, 2), 1);
        assert_eq!(ga_binomial_mod_p(10, 2, 6), u64::MAX);
    }

    #[test]
    fn sample_and_cesaro_round_trip() {
        unsafe {
            let exps = [1u32];
            let mut g: *mut GaGroup = std::ptr::null_mut();
            assert_eq!(ga_group_new(2, exps.as_ptr(), 1, &mut g), GA_OK);
            let rows = [0.7f64, 0.3, 0.3, 0.7];
            let init = [0u64];
            let mut k: *mut GaKernel = std::ptr::null_mut();
            assert_eq!(
                ga_kernel_markov_new(g, 1, rows.as_ptr(), init.as_ptr(), &mut k),
                GA_OK
            );
            assert!((ga_kernel_beta(k) - 0.36).abs() < 1e-12);

            let past = [0u64];
            let mut s: *mut GaSample = std::ptr::null_mut();
            assert_eq!(
                ga_sample_path(k, past.as_ptr(), 1, 5000, 42, 0.0, &mut s),
                GA_OK
            );
            assert_eq!(ga_sample_len(s), 5000);
            let r = ga_sample_regen_count(s);
            assert!(r > 1000, "{r}");
            assert!(ga_sample_regen_time(s, 0) < ga_sample_regen_time(s, 1));
            assert!(ga_sample_uniform(s, 0) >= 0.0);
            assert!(ga_sample_symbol(s, 0) < 2);
            ga_sample_free(s);

            let j = [0usize, 1];
            let mut tv = f64::NAN;
            assert_eq!(
                ga_cesaro_tv_exact(k, past.as_ptr(), 1, 1, 1, j.as_ptr(), 2, 512, &mut tv),
                GA_OK
            );
            assert!(tv > 0.0 && tv < 0.05, "{tv}");
            ga_kernel_free(k);
            ga_group_free(g);
        }
    }

    #[test]
    fn epsilon_bound_behaves() {
        let e = ga_epsilon_min_geometric(0.36, 64);
        assert!(e > 0.0 && e < 1.0);
        assert!(ga_epsilon_min_geometric(1.5, 64).is_nan());
    }
}
