#ifndef WORKFLUCT_H
#define WORKFLUCT_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum WfStatus {
  WF_STATUS_OK = 0,
  WF_STATUS_NULL_POINTER = 1,
  WF_STATUS_INVALID_ARGUMENT = 2,
  WF_STATUS_DIMENSION_MISMATCH = 3,
  WF_STATUS_SINGULAR_MODEL = 4,
  WF_STATUS_INCONSISTENT_DATA = 5,
  WF_STATUS_CONTRACT_VIOLATION = 6,
  WF_STATUS_INTERNAL = 7,
} WfStatus;

// Values accepted by the `kind` argument of the protocol constructors.
typedef enum WfDriveKind {
  WF_DRIVE_KIND_BARE = 0,
  WF_DRIVE_KIND_COUNTER_DIABATIC = 1,
} WfDriveKind;

// Opaque drive protocol.
typedef struct WfProtocol WfProtocol;

// Statistics of `e^{−βW}` for one protocol and temperature.
typedef struct WfWorkStats {
  double mean_exp_work;
  double variance_exp_work;
  // `e^{−βΔF}` from the endpoint partition functions.
  double exact_mean;
  // kHz
  double delta_f_khz;
  double jarzynski_residual;
  double unitarity_defect;
  uintptr_t n_steps;
} WfWorkStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *wf_version(void);

// Message describing the last failure on this thread, or an empty string
// after a successful call. Valid until the next `wf_` call on this thread.
const char *wf_last_error_message(void);

// Cosine ramp `X(t) = x_max·(1 − cos(πt/τ))/2` against a static `Z`, both
// in kHz, over `tau_ms`. `kind` is a `WfDriveKind` value.
//
// # Safety
// `out` must be null or point to writable storage for one pointer. The
// handle written there must be released with `wf_protocol_free`.
enum WfStatus wf_protocol_new(double z_khz,
                              double x_max_khz,
                              double tau_ms,
                              int32_t kind,
                              struct WfProtocol **out);

// Piecewise-linear ramp through `n_knots` points `(s[k], fraction[k])`,
// with `s` running from 0 to 1 and `X = x_max·fraction`.
//
// # Safety
// `s` and `fraction` must each point to `n_knots` readable doubles; `out`
// as for `wf_protocol_new`.
enum WfStatus wf_protocol_new_piecewise(double z_khz,
                                        double x_max_khz,
                                        double tau_ms,
                                        int32_t kind,
                                        const double *s,
                                        const double *fraction,
                                        uintptr_t n_knots,
                                        struct WfProtocol **out);

// Reference drive: `Z = 5/√3` kHz, `x_max = 5` kHz, cosine ramp.
//
// # Safety
// As for `wf_protocol_new`.
enum WfStatus wf_protocol_reference(double tau_ms, int32_t kind, struct WfProtocol **out);

// Releases a handle. Null is ignored.
//
// # Safety
// `p` must be null or a handle from a `wf_protocol_new*` call that has not
// been freed.
void wf_protocol_free(struct WfProtocol *p);

// `H(t)` in kHz as 2x2 row-major real and imaginary parts.
//
// # Safety
// `p` must be a live handle; `out_re` and `out_im` must each hold 4 doubles.
enum WfStatus wf_protocol_hamiltonian(const struct WfProtocol *p,
                                      double t_ms,
                                      double *out_re,
                                      double *out_im);

// Default midpoint step count for this protocol.
//
// # Safety
// `p` must be a live handle; `out` must be writable.
enum WfStatus wf_protocol_default_steps(const struct WfProtocol *p, uintptr_t *out);

// Adiabatic parameter `Γ` of a bare protocol and the time where it peaks.
// `n_samples = 0` selects the default grid.
//
// # Safety
// `p` must be a live handle; `gamma` must be writable; `argmax_ms` may be null.
enum WfStatus wf_protocol_gamma(const struct WfProtocol *p,
                                uintptr_t n_samples,
                                double *gamma,
                                double *argmax_ms);

// Transition probabilities `out[2m + n] = p(m → n)` between the eigenbases
// of `H(0)` and `H(τ)`. `n_steps = 0` selects the default step count.
//
// # Safety
// `p` must be a live handle; `out` must hold 4 doubles.
enum WfStatus wf_protocol_transitions(const struct WfProtocol *p, uintptr_t n_steps, double *out);

// Two-point-measurement statistics at inverse temperature `beta_z / Z`.
//
// # Safety
// `p` must be a live handle; `out` must be writable.
enum WfStatus wf_protocol_work_stats(const struct WfProtocol *p,
                                     uintptr_t n_steps,
                                     double beta_z,
                                     struct WfWorkStats *out);

// Applies a column-stochastic confusion matrix `t[i·dim + j] = p(i | j)` to
// a probability vector.
//
// # Safety
// `t` must hold `dim²` doubles; `p` and `out` must hold `dim` doubles.
enum WfStatus wf_readout_apply(uintptr_t dim, const double *t, const double *p, double *out);

// Corrects measured initial populations `p0_exp` and conditional
// probabilities `pc_exp[i·dim + j] = p(final i | initial j)` for readout
// errors. Writes the joint table `joint_out[m·dim + n]` (initial `m`, final
// `n`) and, if non-null, the probability mass moved by clamping.
//
// # Safety
// `t`, `pc_exp` and `joint_out` must hold `dim²` doubles; `p0_exp` must
// hold `dim`; `clamped_mass` may be null.
enum WfStatus wf_readout_correct(uintptr_t dim,
                                 const double *t,
                                 const double *p0_exp,
                                 const double *pc_exp,
                                 double *joint_out,
                                 double *clamped_mass);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WORKFLUCT_H */
