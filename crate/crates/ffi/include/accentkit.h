#ifndef ACCENTKIT_H
#define ACCENTKIT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AkStatus {
  AK_STATUS_OK = 0,
  AK_STATUS_NULL_POINTER = 1,
  AK_STATUS_INVALID_UTF8 = 2,
  AK_STATUS_PARSE = 3,
  AK_STATUS_VALIDATION = 4,
  AK_STATUS_INVALID_ARGUMENT = 5,
  AK_STATUS_RENDER = 6,
  AK_STATUS_PANIC = 7,
} AkStatus;

typedef enum AkCategory {
  AK_CATEGORY_SLIGHT = 0,
  AK_CATEGORY_AVERAGE = 1,
  AK_CATEGORY_STRONG = 2,
} AkCategory;

typedef struct AkAlignments AkAlignments;

typedef struct AkInventory AkInventory;

typedef struct AkParams AkParams;

typedef struct AkPosteriors AkPosteriors;

typedef struct AkRender AkRender;

typedef struct AkScores AkScores;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread; empty if none. The pointer
// stays valid until the next failing call on the same thread.
const char *ak_last_error(void);

// # Safety
// `s` must be null or a string returned by this library.
void ak_string_free(char *s);

// # Safety
// `text` must be a NUL-terminated string; `out` must be writable.
enum AkStatus ak_inventory_parse(const char *text, struct AkInventory **out);

// # Safety
// `inv` must be a live handle or null.
size_t ak_inventory_num_phones(const struct AkInventory *inv);

// # Safety
// `inv` must be null or a handle from [`ak_inventory_parse`], freed once.
void ak_inventory_free(struct AkInventory *inv);

// # Safety
// `text` must be a NUL-terminated string; `out` must be writable.
enum AkStatus ak_posteriors_parse(const char *text, struct AkPosteriors **out);

// # Safety
// `set` must be a live handle or null.
size_t ak_posteriors_len(const struct AkPosteriors *set);

// # Safety
// `set` must be null or a handle from [`ak_posteriors_parse`], freed once.
void ak_posteriors_free(struct AkPosteriors *set);

// # Safety
// `text` must be a NUL-terminated string; `out` must be writable.
enum AkStatus ak_alignments_parse(const char *text, struct AkAlignments **out);

// # Safety
// `set` must be a live handle or null.
size_t ak_alignments_num_segments(const struct AkAlignments *set);

// # Safety
// `set` must be null or a handle from [`ak_alignments_parse`], freed once.
void ak_alignments_free(struct AkAlignments *set);

// Scores a corpus, normalizing over the batch between the given
// percentiles (0 and 100 for plain min-max).
//
// # Safety
// Input handles must be live; `out` must be writable.
enum AkStatus ak_score(const struct AkPosteriors *post,
                       const struct AkAlignments *align,
                       const struct AkInventory *inv,
                       double clip_low_pct,
                       double clip_high_pct,
                       struct AkScores **out);

// Scores a corpus with fixed normalization bounds in GoP units.
//
// # Safety
// Input handles must be live; `out` must be writable.
enum AkStatus ak_score_frozen(const struct AkPosteriors *post,
                              const struct AkAlignments *align,
                              const struct AkInventory *inv,
                              double lo,
                              double hi,
                              struct AkScores **out);

// # Safety
// `scores` must be a live handle or null.
size_t ak_scores_len(const struct AkScores *scores);

// # Safety
// `scores` must be live; `lo` and `hi` writable.
enum AkStatus ak_scores_bounds(const struct AkScores *scores, double *lo, double *hi);

// # Safety
// `scores` must be live; the three outputs writable.
enum AkStatus ak_scores_record(const struct AkScores *scores,
                               size_t index,
                               double *lpp,
                               double *gop,
                               double *intensity);

// Intensity table as tab-separated text.
//
// # Safety
// `scores` must be live; `out` writable. Free the string with
// [`ak_string_free`].
enum AkStatus ak_scores_tsv(const struct AkScores *scores, char **out);

// # Safety
// `scores` must be null or a handle from a scoring call, freed once.
void ak_scores_free(struct AkScores *scores);

// # Safety
// `out` must be writable.
enum AkStatus ak_categorize(double intensity, enum AkCategory *out);

// Seeded toy-sized renderer parameters.
//
// # Safety
// `out` must be writable.
enum AkStatus ak_params_init_toy(uint64_t seed, struct AkParams **out);

// # Safety
// `text` must be a NUL-terminated checkpoint; `out` writable.
enum AkStatus ak_params_load(const char *text, struct AkParams **out);

// # Safety
// `params` must be live; `out` writable.
enum AkStatus ak_params_save(const struct AkParams *params, char **out);

// # Safety
// `params` must be null or a handle from this library, freed once.
void ak_params_free(struct AkParams *params);

// Renders `n` phonemes. `ids` and `scores` may be null when `n` is 0.
//
// # Safety
// `params` must be live; `ids` and `scores` must point to `n` values.
enum AkStatus ak_render(const struct AkParams *params,
                        const size_t *ids,
                        const double *scores,
                        size_t n,
                        struct AkRender **out);

// # Safety
// `r` must be a live handle or null.
size_t ak_render_num_phonemes(const struct AkRender *r);

// # Safety
// `r` must be a live handle or null.
size_t ak_render_num_frames(const struct AkRender *r);

// # Safety
// `r` must be a live handle or null.
size_t ak_render_mel_channels(const struct AkRender *r);

// Copies the per-phoneme pitch; `len` must equal the phoneme count.
//
// # Safety
// `r` must be live; `buf` must hold `len` values.
enum AkStatus ak_render_pitch(const struct AkRender *r, double *buf, size_t len);

// # Safety
// `r` must be live; `buf` must hold `len` values.
enum AkStatus ak_render_energy(const struct AkRender *r, double *buf, size_t len);

// # Safety
// `r` must be live; `buf` must hold `len` values.
enum AkStatus ak_render_durations(const struct AkRender *r, size_t *buf, size_t len);

// Copies the row-major `frames x channels` mel matrix.
//
// # Safety
// `r` must be live; `buf` must hold `len` values.
enum AkStatus ak_render_mel(const struct AkRender *r, double *buf, size_t len);

// # Safety
// `r` must be live; `out` writable.
enum AkStatus ak_render_phoneme_csv(const struct AkRender *r, char **out);

// # Safety
// `r` must be live; `out` writable.
enum AkStatus ak_render_frame_csv(const struct AkRender *r, char **out);

// # Safety
// `r` must be null or a handle from [`ak_render`], freed once.
void ak_render_free(struct AkRender *r);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ACCENTKIT_H */
