/* C interface to the mrscp multi-result supercompiler.
 *
 * Ownership rules:
 *   - every handle produced by mrscp_program_parse / mrscp_supercompile
 *     must be released with the matching *_free function;
 *   - every returned char* must be released with mrscp_string_free;
 *   - handles are immutable after creation and may be shared across
 *     threads.
 *
 * All functions returning MrscpStatus leave a human-readable explanation
 * in mrscp_last_error_message() on failure. The message is thread-local
 * and valid until the next failing call on the same thread.
 */

#ifndef MRSCP_H
#define MRSCP_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum MrscpStatus {
    MRSCP_OK = 0,
    MRSCP_NULL_ARGUMENT = 1,
    MRSCP_INVALID_UTF8 = 2,
    MRSCP_PARSE_ERROR = 3,
    MRSCP_NO_TARGET_EXPRESSION = 4,
    MRSCP_NODE_BUDGET_EXCEEDED = 5,
    MRSCP_EMPTY_RESULT_SET = 6,
    MRSCP_INVALID_QUERY = 7
} MrscpStatus;

typedef enum MrscpQuery {
    MRSCP_QUERY_FIRST = 0,
    MRSCP_QUERY_LAST = 1,
    MRSCP_QUERY_MIN_ALL_NODES = 2,
    MRSCP_QUERY_MAX_ALL_NODES = 3,
    MRSCP_QUERY_MIN_SKIP_UNFOLD = 4,
    MRSCP_QUERY_MAX_SKIP_UNFOLD = 5
} MrscpQuery;

/* A parsed program together with its target expression. */
typedef struct MrscpProgram MrscpProgram;

/* The compact set of all residual graphs of one supercompilation run. */
typedef struct MrscpGraphSet MrscpGraphSet;

/* Message of the last failure on this thread; do not free. */
const char *mrscp_last_error_message(void);

/* Parses a program (with its `expression:` target) from NUL-terminated
 * UTF-8 source into *out. */
MrscpStatus mrscp_program_parse(const char *source, MrscpProgram **out);

void mrscp_program_free(MrscpProgram *program);

/* Pretty-prints the program and its target expression; NULL on NULL
 * input. Free with mrscp_string_free. */
char *mrscp_program_render(const MrscpProgram *program);

/* Supercompiles the program's target expression into the set of all
 * residual graphs. max_nodes caps the internal node count; 0 selects the
 * default of 10^7. */
MrscpStatus mrscp_supercompile(const MrscpProgram *program,
                               uint64_t max_nodes,
                               MrscpGraphSet **out);

void mrscp_graphset_free(MrscpGraphSet *set);

/* Number of graphs in the set as a decimal string (the count routinely
 * exceeds 64 bits); NULL on NULL input. Free with mrscp_string_free. */
char *mrscp_graphset_count(const MrscpGraphSet *set);

/* Runs a single-result query, residualizes the selected graph, and stores
 * the pretty-printed residual program in *out_program (free with
 * mrscp_string_free). out_size may be NULL; otherwise it receives the
 * graph size under the query's measure (node count for First/Last). */
MrscpStatus mrscp_query_residual(const MrscpGraphSet *set,
                                 MrscpQuery query,
                                 uint64_t *out_size,
                                 char **out_program);

/* Renders the whole graph set in Graphviz DOT syntax; NULL on NULL
 * input. Free with mrscp_string_free. */
char *mrscp_graphset_dot(const MrscpGraphSet *set);

/* Releases a string returned by this library. NULL is ignored. */
void mrscp_string_free(char *s);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* MRSCP_H */
