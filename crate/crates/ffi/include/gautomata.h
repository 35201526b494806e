#ifndef GAUTOMATA_H
#define GAUTOMATA_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Success.
 */
#define GA_OK 0

/**
 * Invalid argument, parse error, or domain violation.
 */
#define GA_ERR_INVALID 2

/**
 * A size or enumeration cap was exceeded.
 */
#define GA_ERR_CAPACITY 3

/**
 * An internal consistency check failed.
 */
#define GA_ERR_VALIDATION 4

/**
 * A null handle or pointer was passed.
 */
#define GA_ERR_NULL 5

/**
 * Opaque finite abelian p-group descriptor.
 */
typedef struct GaGroup GaGroup;

/**
 * Opaque conditional kernel (chain with complete connections).
 */
typedef struct GaKernel GaKernel;

/**
 * Opaque sampled trajectory with detected regeneration times.
 */
typedef struct GaSample GaSample;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the message of the most recent error on this thread into `buf`
 * (NUL-terminated, truncated to `cap`). Returns the untruncated length.
 *
 * # Safety
 * `buf` must point to at least `cap` writable bytes, or be null (query mode).
 */
size_t ga_last_error_message(char *buf, size_t cap);

/**
 * Creates the group `prod Z_{p^{e_i}}` from `exponents[0..len]`.
 *
 * # Safety
 * `exponents` must point to `len` readable `u32`s; `out` must be writable.
 */
int32_t ga_group_new(uint64_t p, const uint32_t *exponents, size_t len, GaGroup **out);

/**
 * Releases a group handle. Null is a no-op.
 *
 * # Safety
 * `h` must be a handle from `ga_group_new` not yet freed.
 */
void ga_group_free(GaGroup *h);

/**
 * Number of elements of the group; 0 on a null handle.
 *
 * # Safety
 * `h` must be a live group handle or null.
 */
uint64_t ga_group_order(const GaGroup *h);

/**
 * 1 when the scalar acts invertibly (is coprime to p), else 0.
 *
 * # Safety
 * `h` must be a live group handle or null.
 */
int32_t ga_group_is_unit_scalar(const GaGroup *h, uint64_t a);

/**
 * The binomial coefficient `(m choose k)` reduced mod the prime `p`,
 * computed digit-wise. Returns `u64::MAX` when `p` is not prime.
 */
uint64_t ga_binomial_mod_p(uint64_t m, uint64_t k, uint64_t p);

/**
 * Creates a memoryless product kernel with symbol probabilities
 * `probs[0..order]`.
 *
 * # Safety
 * `probs` must point to `len` readable doubles; `out` must be writable;
 * `g` must be a live group handle.
 */
int32_t ga_kernel_product_new(const GaGroup *g, const double *probs, size_t len, GaKernel **out);

/**
 * Creates an order-`k0` Markov kernel. `rows` is a flat row-major
 * `order^k0 x order` stochastic matrix; `initial_past[0..k0]` are element
 * indices padding short histories.
 *
 * # Safety
 * `rows` must hold `order^k0 * order` doubles, `initial_past` must hold `k0`
 * indices; `g` must be live and `out` writable.
 */
int32_t ga_kernel_markov_new(const GaGroup *g,
                             size_t k0,
                             const double *rows,
                             const uint64_t *initial_past,
                             GaKernel **out);

/**
 * Releases a kernel handle. Null is a no-op.
 *
 * # Safety
 * `h` must be a handle from a kernel constructor not yet freed.
 */
void ga_kernel_free(GaKernel *h);

/**
 * Exact regeneration density `beta = a_{-1} a_0 a_1 ...`; NaN on null.
 *
 * # Safety
 * `h` must be a live kernel handle or null.
 */
double ga_kernel_beta(const GaKernel *h);

/**
 * Samples `n` steps of the chain started from the element indices
 * `past[0..past_len]`, detecting regeneration times with certified tail
 * tolerance `tail_tol` (pass 0 for the default).
 *
 * # Safety
 * `past` must hold `past_len` indices (may be null when `past_len` is 0);
 * `k` must be live and `out` writable.
 */
int32_t ga_sample_path(const GaKernel *k,
                       const uint64_t *past,
                       size_t past_len,
                       size_t n,
                       uint64_t seed,
                       double tail_tol,
                       GaSample **out);

/**
 * Releases a sample handle. Null is a no-op.
 *
 * # Safety
 * `h` must be a handle from `ga_sample_path` not yet freed.
 */
void ga_sample_free(GaSample *h);

/**
 * Trajectory length.
 *
 * # Safety
 * `h` must be a live sample handle or null.
 */
size_t ga_sample_len(const GaSample *h);

/**
 * Element index of the symbol at time `t`, or `u64::MAX` out of range.
 *
 * # Safety
 * `h` must be a live sample handle or null.
 */
uint64_t ga_sample_symbol(const GaSample *h, size_t t);

/**
 * Driving uniform at time `t`, or NaN out of range.
 *
 * # Safety
 * `h` must be a live sample handle or null.
 */
double ga_sample_uniform(const GaSample *h, size_t t);

/**
 * Number of certified regeneration times.
 *
 * # Safety
 * `h` must be a live sample handle or null.
 */
size_t ga_sample_regen_count(const GaSample *h);

/**
 * The `i`-th regeneration time, or `usize::MAX` out of range.
 *
 * # Safety
 * `h` must be a live sample handle or null.
 */
size_t ga_sample_regen_time(const GaSample *h, size_t i);

/**
 * Exact total-variation distance between the Cesaro average over `m < big_m`
 * of the joint law of the automaton iterates at offsets `j[0..j_len]` and the
 * uniform law, for the automaton `(phi x)_n = mu x_n + nu x_{n+1}`.
 *
 * # Safety
 * `k` must be live; `past` must hold `past_len` indices (or be null with
 * `past_len` 0); `j` must hold `j_len` offsets; `out_tv` must be writable.
 */
int32_t ga_cesaro_tv_exact(const GaKernel *k,
                           const uint64_t *past,
                           size_t past_len,
                           uint64_t mu,
                           uint64_t nu,
                           const size_t *j,
                           size_t j_len,
                           uint64_t big_m,
                           double *out_tv);

/**
 * Optimized three-term uniformity bound for a geometric interarrival law with
 * event density `beta`, over a window of `n` indices. NaN on bad input.
 */
double ga_epsilon_min_geometric(double beta, size_t n);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GAUTOMATA_H */
