#ifndef WORDAXES_H
#define WORDAXES_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum WaxStatus {
  WAX_STATUS_OK = 0,
  WAX_STATUS_NULL_POINTER = 1,
  WAX_STATUS_INVALID_UTF8 = 2,
  WAX_STATUS_IO = 3,
  WAX_STATUS_PARSE = 4,
  WAX_STATUS_FORMAT = 5,
  WAX_STATUS_CONFIG = 6,
  WAX_STATUS_OUT_OF_VOCABULARY = 7,
  WAX_STATUS_EMPTY = 8,
  WAX_STATUS_DEGENERATE = 9,
  WAX_STATUS_DIMENSION_MISMATCH = 10,
  WAX_STATUS_BUFFER_TOO_SMALL = 11,
  WAX_STATUS_PANIC = 12,
  WAX_STATUS_OTHER = 13,
} WaxStatus;

// A semantic dimension or linear classifier.
typedef struct WaxDimension WaxDimension;

// A loaded embedding model with its unit-normalized vectors.
typedef struct WaxModel WaxModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread, or NULL.
//
// The pointer stays valid until the next failing call on the same thread.
const char *wax_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *wax_version(void);

// Frees a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must come from this library and not have been freed already.
void wax_string_free(char *s);

// Loads a model in native, word2vec binary or text format.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum WaxStatus wax_model_load(const char *path, struct WaxModel **out);

// Releases a model. NULL is ignored.
//
// # Safety
// `model` must come from [`wax_model_load`] and not have been freed.
void wax_model_free(struct WaxModel *model);

// Vocabulary size, or 0 for NULL.
//
// # Safety
// `model` must be NULL or a live handle.
size_t wax_model_vocab_size(const struct WaxModel *model);

// Vector dimensionality, or 0 for NULL.
//
// # Safety
// `model` must be NULL or a live handle.
size_t wax_model_dim(const struct WaxModel *model);

// Copies the word at `index` into `buf` (NUL-terminated). `needed`
// receives the required size including the terminator.
//
// # Safety
// `buf` must point to `len` writable bytes (or be NULL with `len` 0).
enum WaxStatus wax_model_word(const struct WaxModel *model,
                              size_t index,
                              char *buf,
                              size_t len,
                              size_t *needed);

// Copies the raw (unnormalized) vector of `word` into `out[0..len]`;
// `len` must equal the model dimension.
//
// # Safety
// `out` must point to `len` writable floats.
enum WaxStatus wax_model_word_vector(const struct WaxModel *model,
                                     const char *word,
                                     float *out,
                                     size_t len);

// Cosine similarity of two words.
//
// # Safety
// Pointers must be valid; strings NUL-terminated.
enum WaxStatus wax_model_cosine(const struct WaxModel *model,
                                const char *a,
                                const char *b,
                                double *out);

// The `k` nearest neighbors of `word` as a JSON array of
// `{"word", "index", "similarity"}` objects, written to `*out_json`.
//
// # Safety
// Pointers must be valid; free the result with [`wax_string_free`].
enum WaxStatus wax_model_neighbors(const struct WaxModel *model,
                                   const char *word,
                                   size_t k,
                                   char **out_json);

// Solves `a : b :: c : ?` and writes the answer as a new string.
//
// # Safety
// Pointers must be valid; free the result with [`wax_string_free`].
enum WaxStatus wax_model_analogy(const struct WaxModel *model,
                                 const char *a,
                                 const char *b,
                                 const char *c,
                                 char **out_word,
                                 double *out_similarity);

// Extracts a dimension from a lexicon file. `method` is `larsen`,
// `bolukbasi` or `svm`.
//
// # Safety
// Pointers must be valid; strings NUL-terminated.
enum WaxStatus wax_dimension_extract(const struct WaxModel *model,
                                     const char *lexicon_path,
                                     const char *method,
                                     struct WaxDimension **out);

// Loads a dimension JSON file written by the command-line tool.
//
// # Safety
// Pointers must be valid; strings NUL-terminated.
enum WaxStatus wax_dimension_load(const char *path, struct WaxDimension **out);

// Writes a dimension as JSON.
//
// # Safety
// Pointers must be valid; strings NUL-terminated.
enum WaxStatus wax_dimension_save(const struct WaxDimension *dim, const char *path);

// Releases a dimension. NULL is ignored.
//
// # Safety
// `dim` must come from this library and not have been freed.
void wax_dimension_free(struct WaxDimension *dim);

// Signed score of `word`: cosine with the axis, or the SVM decision value.
//
// # Safety
// Pointers must be valid; strings NUL-terminated.
enum WaxStatus wax_dimension_project(const struct WaxModel *model,
                                     const struct WaxDimension *dim,
                                     const char *word,
                                     double *out);

// Cosine between two axes. Classifiers are rejected with
// `WAX_STATUS_CONFIG`.
//
// # Safety
// Pointers must be valid.
enum WaxStatus wax_dimension_similarity(const struct WaxDimension *a,
                                        const struct WaxDimension *b,
                                        double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WORDAXES_H */
