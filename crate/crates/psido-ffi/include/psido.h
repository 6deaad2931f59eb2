/* C interface for the psido calculus library. */

#ifndef PSIDO_H
#define PSIDO_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.  `Numeric` and `Config` align with the CLI
// process exit codes for the same failures.
typedef enum PsidoStatus {
  PSIDO_STATUS_OK = 0,
  // Numeric failure (singular matrix, divergent solve, resolution...).
  PSIDO_STATUS_NUMERIC = 2,
  // Bad configuration or malformed data.
  PSIDO_STATUS_CONFIG = 3,
  // A required pointer argument was null.
  PSIDO_STATUS_NULL_POINTER = 4,
  // Internal invariant violation caught at the boundary.
  PSIDO_STATUS_PANIC = 5,
} PsidoStatus;

// A sampled function on a base lattice.
typedef struct PsidoGridFn PsidoGridFn;

// An operator kernel sampled on a product lattice.
typedef struct PsidoKernel PsidoKernel;

// A geometry: model name plus its parameters.
typedef struct PsidoModel PsidoModel;

// A pinned quantization: model, frame, density, ordering parameter.
typedef struct PsidoSpec PsidoSpec;

// A symbol sampled on base x covariable lattices.
typedef struct PsidoSymbol PsidoSymbol;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version string; static storage, never freed.
const char *psido_version(void);

// Description of the most recent failure on this thread.  Valid until the
// next failing call on the same thread; empty string if nothing failed yet.
const char *psido_last_error_message(void);

// Create a model: `euclidean_standard`, `euclidean_deformed`,
// `hyperbolic_exp`, or `hyperbolic_frame_flat`.  `sigma` and `deformation`
// only matter for the deformed model.
//
// # Safety
// `name` must be a valid C string; `out` must be a valid pointer.
enum PsidoStatus psido_model_new(const char *name,
                                 size_t dim,
                                 double sigma,
                                 double deformation,
                                 struct PsidoModel **out);

// # Safety
// `model` must come from `psido_model_new` (or be null).
void psido_model_free(struct PsidoModel *model);

// Dimension of the model, 0 if `model` is null.
//
// # Safety
// `model` must be a live handle or null.
size_t psido_model_dim(const struct PsidoModel *model);

// Randomized spot check of the midpoint-consistency identity of the model's
// linearization.  Writes the largest residual and whether it clears the
// 1e-7 gate.
//
// # Safety
// All pointers must be valid.
enum PsidoStatus psido_check_h_psi(const struct PsidoModel *model,
                                   size_t samples,
                                   uint64_t seed,
                                   double *max_residual,
                                   int32_t *pass);

// Create a quantization spec.  `base` (length `dim`) may be null for the
// origin; `basis` (length `dim * dim`, row-major) may be null for the
// identity.  `density_kind`: 0 Riemannian, 1 Lebesgue in the frame chart.
//
// # Safety
// Non-null array arguments must have the stated lengths.
enum PsidoStatus psido_spec_new(const struct PsidoModel *model,
                                const double *base,
                                const double *basis,
                                double lambda,
                                int32_t density_kind,
                                struct PsidoSpec **out);

// # Safety
// `spec` must come from `psido_spec_new` (or be null).
void psido_spec_free(struct PsidoSpec *spec);

// Create a sampled function from `n^dim` interleaved complex samples on the
// uniform lattice of half-width `extent`.
//
// # Safety
// `values` must hold `2 * n^dim` doubles; `out` must be valid.
enum PsidoStatus psido_gridfn_new(size_t dim,
                                  double extent,
                                  size_t n,
                                  const double *values,
                                  struct PsidoGridFn **out);

// # Safety
// `f` must come from a gridfn constructor (or be null).
void psido_gridfn_free(struct PsidoGridFn *f);

// Number of complex samples, 0 on null.
//
// # Safety
// `f` must be a live handle or null.
size_t psido_gridfn_len(const struct PsidoGridFn *f);

// Lattice shape of a sampled function.
//
// # Safety
// All pointers must be valid.
enum PsidoStatus psido_gridfn_shape(const struct PsidoGridFn *f,
                                    size_t *dim,
                                    double *extent,
                                    size_t *n);

// Copy all samples out as interleaved doubles.
//
// # Safety
// `buf` must hold at least `2 * capacity_pairs` doubles.
enum PsidoStatus psido_gridfn_read(const struct PsidoGridFn *f, double *buf, size_t capacity_pairs);

// Load a sampled function from the library's grid file format.
//
// # Safety
// `path` must be a valid C string; `out` must be valid.
enum PsidoStatus psido_gridfn_load(const char *path, struct PsidoGridFn **out);

// Write a sampled function; refuses to overwrite unless `force` is nonzero.
//
// # Safety
// `f` must be live; `path` a valid C string.
enum PsidoStatus psido_gridfn_save(const struct PsidoGridFn *f, const char *path, int32_t force);

// Create a symbol from `base_n^dim * cov_n^dim` interleaved complex samples
// (base-major).  `sigma`, `l`, `m` annotate the growth class.
//
// # Safety
// `values` must hold `2 * base_n^dim * cov_n^dim` doubles; `out` valid.
enum PsidoStatus psido_symbol_new(size_t dim,
                                  double base_extent,
                                  size_t base_n,
                                  double cov_extent,
                                  size_t cov_n,
                                  double sigma,
                                  double l,
                                  double m,
                                  const double *values,
                                  struct PsidoSymbol **out);

// # Safety
// `a` must come from a symbol constructor (or be null).
void psido_symbol_free(struct PsidoSymbol *a);

// Number of complex samples, 0 on null.
//
// # Safety
// `a` must be a live handle or null.
size_t psido_symbol_len(const struct PsidoSymbol *a);

// Lattice shape of a symbol.
//
// # Safety
// All pointers must be valid.
enum PsidoStatus psido_symbol_shape(const struct PsidoSymbol *a,
                                    size_t *dim,
                                    double *base_extent,
                                    size_t *base_n,
                                    double *cov_extent,
                                    size_t *cov_n);

// Copy all samples out as interleaved doubles (base-major).
//
// # Safety
// `buf` must hold at least `2 * capacity_pairs` doubles.
enum PsidoStatus psido_symbol_read(const struct PsidoSymbol *a, double *buf, size_t capacity_pairs);

// # Safety
// `path` must be a valid C string; `out` valid.
enum PsidoStatus psido_symbol_load(const char *path, struct PsidoSymbol **out);

// # Safety
// `a` must be live; `path` a valid C string.
enum PsidoStatus psido_symbol_save(const struct PsidoSymbol *a, const char *path, int32_t force);

// # Safety
// `k` must come from a kernel constructor (or be null).
void psido_kernel_free(struct PsidoKernel *k);

// Number of complex samples, 0 on null.
//
// # Safety
// `k` must be a live handle or null.
size_t psido_kernel_len(const struct PsidoKernel *k);

// Copy all samples out as interleaved doubles (first-lattice-major).
//
// # Safety
// `buf` must hold at least `2 * capacity_pairs` doubles.
enum PsidoStatus psido_kernel_read(const struct PsidoKernel *k, double *buf, size_t capacity_pairs);

// # Safety
// `path` must be a valid C string; `out` valid.
enum PsidoStatus psido_kernel_load(const char *path, struct PsidoKernel **out);

// # Safety
// `k` must be live; `path` a valid C string.
enum PsidoStatus psido_kernel_save(const struct PsidoKernel *k, const char *path, int32_t force);

// Apply the operator of symbol `a` to the sampled function `v`.
//
// # Safety
// All handles must be live; `out` valid.
enum PsidoStatus psido_apply(const struct PsidoSpec *spec,
                             const struct PsidoSymbol *a,
                             const struct PsidoGridFn *v,
                             struct PsidoGridFn **out);

// Build the Schwartz kernel of the operator of symbol `a`.
//
// # Safety
// All handles must be live; `out` valid.
enum PsidoStatus psido_kernel_from_symbol(const struct PsidoSpec *spec,
                                          const struct PsidoSymbol *a,
                                          struct PsidoKernel **out);

// Recover the symbol of a kernel on a fresh base lattice of half-width
// `extent` and size `n`; `sigma`, `l`, `m` annotate the output class.
//
// # Safety
// All handles must be live; `out` valid.
enum PsidoStatus psido_symbol_from_kernel(const struct PsidoSpec *spec,
                                          const struct PsidoKernel *k,
                                          double extent,
                                          size_t n,
                                          double sigma,
                                          double l,
                                          double m,
                                          struct PsidoSymbol **out);

// Symbol of the operator product via the kernel route.  `symmetrized`
// nonzero averages the extreme orderings instead of using the spec's.
//
// # Safety
// All handles must be live; `out` valid.
enum PsidoStatus psido_moyal(const struct PsidoSpec *spec,
                             const struct PsidoSymbol *a,
                             const struct PsidoSymbol *b,
                             int32_t symmetrized,
                             struct PsidoSymbol **out);

// Truncated expansion of the product symbol (order 0, 1, or 2; the spec
// must sit at ordering parameter 0).
//
// # Safety
// All handles must be live; `out` valid.
enum PsidoStatus psido_expansion(const struct PsidoSpec *spec,
                                 const struct PsidoSymbol *a,
                                 const struct PsidoSymbol *b,
                                 size_t order,
                                 struct PsidoSymbol **out);

// Re-express a symbol at ordering parameter `lambda_to`, keeping `order`
// correction terms.  The source ordering is the spec's.
//
// # Safety
// All handles must be live; `out` valid.
enum PsidoStatus psido_lambda_convert(const struct PsidoSpec *spec,
                                      const struct PsidoSymbol *a,
                                      double lambda_to,
                                      size_t order,
                                      struct PsidoSymbol **out);

// Run one hypothesis suite on the model with identity frames:
// `transitions` (frames at the origin and one unit along the first axis),
// `linearization`, `invertibility`, or `composition-control`.
// `eps`/`eta` shape the invertibility sweep and are ignored elsewhere.
// If `report_path` is non-null the report and a CSV of raw samples are
// written there (existing files are overwritten).  `verdict` receives 1 if
// every sub-check passed.
//
// # Safety
// `model` must be live; strings valid; `verdict` valid.
enum PsidoStatus psido_verify(const struct PsidoModel *model,
                              const char *suite,
                              double sigma,
                              size_t max_order,
                              double eps,
                              double eta,
                              const char *report_path,
                              int32_t *verdict);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PSIDO_H */
