#ifndef BVTRANSFER_H
#define BVTRANSFER_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Every check passed. */
#define BVT_OK 0
/* A report was produced and at least one check failed, or the engine hit an
   internal inconsistency. */
#define BVT_VERIFICATION_FAILED 1
/* The input could not be used: parse, structural or precondition error. */
#define BVT_INPUT_ERROR 2
/* A required pointer argument was null. */
#define BVT_NULL_POINTER 3
/* The engine panicked. */
#define BVT_INTERNAL 4

/* Opaque handle to a parsed problem. */
typedef struct BvtProblem BvtProblem;

/* Parses a problem from JSON text. A non-zero max_weight overrides the
   file's truncation window. Release *out with bvt_problem_free. */
int32_t bvt_problem_from_json(const char *json, uint32_t max_weight, BvtProblem **out);

/* Releases a problem handle. Null is ignored. */
void bvt_problem_free(BvtProblem *problem);

/* Validates the space and the master equation. *report receives the JSON
   report, released with bvt_string_free. */
int32_t bvt_check(const BvtProblem *problem, char **report);

/* Computes the effective action. route is "hpl", "feynman", "alt" or "all";
   NULL means "hpl". seed drives the random sweep samples. */
int32_t bvt_transfer(const BvtProblem *problem, const char *route, uint64_t seed, char **report);

/* Computes the exactness witness between the action and its transfer. */
int32_t bvt_homotopy(const BvtProblem *problem, char **report);

/* Releases a string returned by this library. Null is ignored. */
void bvt_string_free(char *s);

/* Message describing the last failed call on this thread, or NULL. Valid
   until the next call into this library on the same thread. */
const char *bvt_last_error(void);

#ifdef __cplusplus
}
#endif

#endif /* BVTRANSFER_H */
