/* C interface for the surfmem surface-code memory laboratory.
 *
 * Every function returns an error code (SM_OK = 0) and reports results
 * through out-pointers. On failure, sm_last_error() holds a message for the
 * calling thread until its next failing call. Handles are opaque and must
 * be released with their matching *_free function (null-safe).
 */

#ifndef SURFMEM_H
#define SURFMEM_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define SM_OK 0
#define SM_ERR_INVALID 1
#define SM_ERR_IO 2
#define SM_ERR_RUNTIME 3
#define SM_ERR_PANIC 4

/* Opaque handles. */
typedef struct SmLayout SmLayout;
typedef struct SmCircuit SmCircuit;
typedef struct SmBatch SmBatch;
typedef struct SmDecoder SmDecoder;
typedef struct SmModel SmModel;

/* Message of the most recent error on this thread. */
const char *sm_last_error(void);

/* Rotated surface-code layout for odd distance >= 3.
 * variant: 0 = zxxz, 1 = standard. */
int32_t sm_layout_new(size_t distance, uint8_t variant, SmLayout **out);
void sm_layout_free(SmLayout *layout);

/* Memory-experiment circuit with uniform circuit-level noise attached.
 * basis: 0 = Z, 1 = X. bitstring: d*d bytes of 0/1, or NULL for all zeros.
 * eta may be INFINITY. pm_ancilla/pm_data > 0 enable analog readout. */
int32_t sm_circuit_new(const SmLayout *layout, size_t rounds, uint8_t basis,
                       const uint8_t *bitstring, double p, double eta,
                       double pm_ancilla, double pm_data, SmCircuit **out);
void sm_circuit_free(SmCircuit *circuit);

/* Line-oriented text form of the circuit; free with sm_string_free. */
int32_t sm_circuit_to_text(const SmCircuit *circuit, char **out);
void sm_string_free(char *s);

/* Monte Carlo sampling. */
int32_t sm_sample(const SmCircuit *circuit, size_t shots, uint64_t seed,
                  SmBatch **out);
void sm_batch_free(SmBatch *batch);
int32_t sm_batch_shots(const SmBatch *batch, size_t *out);
int32_t sm_batch_save(const SmBatch *batch, const char *path);
int32_t sm_batch_load(const char *path, SmBatch **out);

/* Exact minimum-weight perfect matching decoding. corrections/true_flips
 * receive one 0/1 byte per shot; soft != 0 selects soft matching. */
int32_t sm_decoder_new(const SmCircuit *circuit, SmDecoder **out);
void sm_decoder_free(SmDecoder *decoder);
int32_t sm_decode_batch(const SmDecoder *decoder, const SmCircuit *circuit,
                        const SmBatch *batch, uint8_t soft,
                        uint8_t *corrections, uint8_t *true_flips);

/* Recurrent decoder models. */
int32_t sm_model_load(const char *path, SmModel **out);
void sm_model_free(SmModel *model);
int32_t sm_model_decode_batch(const SmModel *model, const SmCircuit *circuit,
                              const SmBatch *batch, uint8_t soft,
                              uint8_t *corrections, uint8_t *true_flips);

/* Digest of a run-configuration file. */
int32_t sm_config_digest(const char *path, uint64_t *out);

#ifdef __cplusplus
}
#endif

#endif /* SURFMEM_H */
