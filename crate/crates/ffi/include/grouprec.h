#ifndef GROUPREC_H
#define GROUPREC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum GrStatus {
  GR_STATUS_OK = 0,
  GR_STATUS_NULL_POINTER = 1,
  GR_STATUS_INVALID_UTF8 = 2,
  GR_STATUS_DIMENSION = 3,
  GR_STATUS_PARSE = 4,
  GR_STATUS_VALIDATION = 5,
  GR_STATUS_DEGENERATE = 6,
  GR_STATUS_CONFIG = 7,
  GR_STATUS_TRANSPORT = 8,
  GR_STATUS_IO = 9,
  GR_STATUS_JSON = 10,
  GR_STATUS_BUFFER_TOO_SMALL = 11,
  GR_STATUS_INVALID_ARGUMENT = 12,
  GR_STATUS_PANIC = 13,
} GrStatus;

typedef enum GrStrategy {
  GR_STRATEGY_ADD = 0,
  GR_STRATEGY_MPL = 1,
  GR_STRATEGY_LMS = 2,
  // Approval voting; the threshold argument applies.
  GR_STRATEGY_APP = 3,
} GrStrategy;

typedef enum GrGain {
  GR_GAIN_LINEAR = 0,
  GR_GAIN_BINARY = 1,
} GrGain;

// Opaque explanation ruleset.
typedef struct GrRuleSet GrRuleSet;

// Opaque group scenario.
typedef struct GrScenario GrScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty after a success.
// Valid until the next call into this library from the same thread.
const char *gr_last_error(void);

// Library version as a static NUL-terminated string.
const char *gr_version(void);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void gr_string_free(char *s);

// Seeded random scenario with `num_users` users and `num_items` items.
//
// # Safety
// `out` must be a valid pointer.
enum GrStatus gr_scenario_generate(size_t num_users,
                                   size_t num_items,
                                   uint64_t seed,
                                   struct GrScenario **out_scenario);

// Parses a tab-separated rating table.
//
// # Safety
// `table` must be a NUL-terminated string; `out_scenario` a valid pointer.
enum GrStatus gr_scenario_parse_table(const char *table, struct GrScenario **out_scenario);

// Renders the scenario as the tab-separated table shown to generators.
//
// # Safety
// `scenario` must be a live handle; `out_table` a valid pointer.
enum GrStatus gr_scenario_render_table(const struct GrScenario *scenario, char **out_table);

// # Safety
// `scenario` must come from this library and not have been freed. Null is ignored.
void gr_scenario_free(struct GrScenario *scenario);

// # Safety
// `scenario` must be a live handle; the out-pointers must be valid.
enum GrStatus gr_scenario_dims(const struct GrScenario *scenario,
                               size_t *out_users,
                               size_t *out_items);

// # Safety
// `scenario` must be a live handle; `out_rating` a valid pointer.
enum GrStatus gr_scenario_rating(const struct GrScenario *scenario,
                                 size_t user,
                                 size_t item,
                                 uint8_t *out_rating);

// Top-`k` items under a strategy, written as 0-based item indices and scores
// into caller buffers of `capacity` entries. `out_len` receives min(k, I);
// when that exceeds `capacity`, nothing is written and `BufferTooSmall` is returned.
//
// # Safety
// `scenario` must be a live handle; `out_items` and `out_scores` must hold
// `capacity` entries (`out_scores` may be null); `out_len` must be valid.
enum GrStatus gr_aggregate(const struct GrScenario *scenario,
                           enum GrStrategy kind,
                           uint8_t app_threshold,
                           size_t k,
                           size_t *out_items,
                           double *out_scores,
                           size_t capacity,
                           size_t *out_len);

// NDCG@k of a candidate list (0-based item indices) against a strategy.
//
// # Safety
// `scenario` must be a live handle; `candidate` must hold `len` entries;
// `out_ndcg` must be valid.
enum GrStatus gr_ndcg(const struct GrScenario *scenario,
                      enum GrStrategy kind,
                      uint8_t app_threshold,
                      const size_t *candidate,
                      size_t len,
                      size_t k,
                      enum GrGain gain,
                      double *out_ndcg);

// Mean pairwise user distance divided by its maximum, in [0, 1].
//
// # Safety
// `scenario` must be a live handle; `out_distance` must be valid.
enum GrStatus gr_normalized_distance(const struct GrScenario *scenario, double *out_distance);

// The shipped default ruleset.
//
// # Safety
// `out_rules` must be a valid pointer.
enum GrStatus gr_ruleset_default(struct GrRuleSet **out_rules);

// A ruleset from its JSON text.
//
// # Safety
// `json` must be a NUL-terminated string; `out_rules` a valid pointer.
enum GrStatus gr_ruleset_from_json(const char *json, struct GrRuleSet **out_rules);

// # Safety
// `rules` must come from this library and not have been freed. Null is ignored.
void gr_ruleset_free(struct GrRuleSet *rules);

// Classifies an explanation; the verdict is returned as a JSON string.
//
// # Safety
// `rules` must be a live handle; `explanation` a NUL-terminated string;
// `out_json` a valid pointer.
enum GrStatus gr_classify_explanation(const struct GrRuleSet *rules,
                                      const char *explanation,
                                      char **out_json);

// Parses raw generator output against a scenario; the parsed response
// (including its status) is returned as a JSON string.
//
// # Safety
// `scenario` must be a live handle; `raw_text` a NUL-terminated string;
// `out_json` a valid pointer.
enum GrStatus gr_parse_response(const struct GrScenario *scenario,
                                const char *raw_text,
                                size_t k,
                                char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GROUPREC_H */
