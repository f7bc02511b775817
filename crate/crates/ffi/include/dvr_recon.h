#ifndef DVR_RECON_H
#define DVR_RECON_H

#include <stddef.h>
#include <stdint.h>

typedef enum DvrStatus {
  DVR_STATUS_OK = 0,
  DVR_STATUS_NULL_POINTER = 1,
  DVR_STATUS_DOMAIN = 2,
  DVR_STATUS_RESOLUTION = 3,
  DVR_STATUS_DIMENSION = 4,
  DVR_STATUS_DEGENERATE = 5,
  DVR_STATUS_CONFIG = 6,
  DVR_STATUS_WINDOW = 7,
  DVR_STATUS_CONSISTENCY = 8,
  DVR_STATUS_IO = 9,
  DVR_STATUS_PANIC = 10,
} DvrStatus;

typedef struct DvrBasisHandle DvrBasisHandle;

typedef struct DvrEnvironment DvrEnvironment;

typedef struct DvrField DvrField;

typedef struct DvrModes DvrModes;

typedef struct DvrReconstruction DvrReconstruction;

/**
 * Waveguide parameters in m, m/s, g/cm³ and dB·s²/m.
 */
typedef struct DvrEnvironmentParams {
  double c0;
  double delta_c;
  double z_c;
  double delta_z;
  double c_b;
  double water_depth;
  double basement_depth;
  double rho_wat;
  double rho_sed;
  double att_coeff;
} DvrEnvironmentParams;

typedef struct DvrComplex {
  double re;
  double im;
} DvrComplex;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message on this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length excluding the NUL,
 * or 0 when there is no error.
 *
 * `buf` must be null or valid for `len` bytes.
 */
size_t dvr_last_error_message(char *buf, size_t len);

/**
 * `out` must be valid for writes.
 */
enum DvrStatus dvr_environment_default_params(struct DvrEnvironmentParams *out);

/**
 * `params` must point to a valid struct and `out` be valid for writes.
 */
enum DvrStatus dvr_environment_new(const struct DvrEnvironmentParams *params,
                                   struct DvrEnvironment **out);

/**
 * `env` must be null or a handle from `dvr_environment_new`, freed once.
 */
void dvr_environment_free(struct DvrEnvironment *env);

/**
 * `out` must be valid for writes.
 */
enum DvrStatus dvr_basis_new(size_t j_max, double l_eff, struct DvrBasisHandle **out);

/**
 * Basis with hydrophone spacing `dz` on a fictitious depth reaching the
 * basement of `env`.
 *
 * `env` must be a live handle and `out` valid for writes.
 */
enum DvrStatus dvr_basis_for_spacing(const struct DvrEnvironment *env,
                                     double dz,
                                     struct DvrBasisHandle **out);

/**
 * `basis` must be null or a live handle, freed once.
 */
void dvr_basis_free(struct DvrBasisHandle *basis);

/**
 * `basis` must be a live handle and `out` valid for writes.
 */
enum DvrStatus dvr_basis_size(const struct DvrBasisHandle *basis, size_t *j_max, double *l_eff);

/**
 * Writes all `j_max` DVR depths.
 *
 * `basis` must be a live handle and `buf` valid for `len` doubles.
 */
enum DvrStatus dvr_basis_depths(const struct DvrBasisHandle *basis, double *buf, size_t len);

/**
 * Number of DVR depths in `[0, h]`, i.e. hydrophones in the water column.
 *
 * `basis` must be a live handle and `out` valid for writes.
 */
enum DvrStatus dvr_basis_hydrophones(const struct DvrBasisHandle *basis, double h, size_t *out);

/**
 * `env` must be a live handle and `out` valid for writes.
 */
enum DvrStatus dvr_modes_solve(const struct DvrEnvironment *env,
                               double f_hz,
                               struct DvrModes **out);

/**
 * `modes` must be null or a live handle, freed once.
 */
void dvr_modes_free(struct DvrModes *modes);

/**
 * `modes` must be a live handle and `out` valid for writes.
 */
enum DvrStatus dvr_modes_count(const struct DvrModes *modes, size_t *out);

/**
 * Horizontal wavenumbers in rad/m, descending.
 *
 * `modes` must be a live handle and `buf` valid for `len` doubles.
 */
enum DvrStatus dvr_modes_wavenumbers(const struct DvrModes *modes, double *buf, size_t len);

/**
 * Modal attenuations in Np/m.
 *
 * `modes` must be a live handle and `buf` valid for `len` doubles.
 */
enum DvrStatus dvr_modes_attenuations(const struct DvrModes *modes, double *buf, size_t len);

/**
 * CW field of a point source at depth `z_s` and range `r` on the mode grid.
 *
 * `env` and `modes` must be live handles and `out` valid for writes.
 */
enum DvrStatus dvr_cw_field(const struct DvrEnvironment *env,
                            const struct DvrModes *modes,
                            double z_s,
                            double r,
                            struct DvrField **out);

/**
 * `field` must be null or a live handle, freed once.
 */
void dvr_field_free(struct DvrField *field);

/**
 * `field` must be a live handle and `out` valid for writes.
 */
enum DvrStatus dvr_field_value(const struct DvrField *field, double z, struct DvrComplex *out);

/**
 * Samples `field` at the basis depths in `[0, h]`; `len` must equal the
 * hydrophone count.
 *
 * Handles must be live and `buf` valid for `len` values.
 */
enum DvrStatus dvr_sample_field(const struct DvrField *field,
                                const struct DvrBasisHandle *basis,
                                double h,
                                struct DvrComplex *buf,
                                size_t len);

/**
 * Reconstruction from the first `len` hydrophones, shallowest first.
 *
 * `basis` must be a live handle, `samples` valid for `len` values and
 * `out` valid for writes.
 */
enum DvrStatus dvr_reconstruct(const struct DvrBasisHandle *basis,
                               const struct DvrComplex *samples,
                               size_t len,
                               struct DvrReconstruction **out);

/**
 * `rec` must be null or a live handle, freed once.
 */
void dvr_reconstruction_free(struct DvrReconstruction *rec);

/**
 * `rec` must be a live handle and `out` valid for writes.
 */
enum DvrStatus dvr_reconstruction_eval(const struct DvrReconstruction *rec,
                                       double z,
                                       struct DvrComplex *out);

/**
 * Fidelity of a reconstruction against the exact field over `[0, h]`.
 *
 * Handles must be live and `out` valid for writes.
 */
enum DvrStatus dvr_fidelity_cw(const struct DvrField *field,
                               const struct DvrReconstruction *rec,
                               double h,
                               double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DVR_RECON_H */
