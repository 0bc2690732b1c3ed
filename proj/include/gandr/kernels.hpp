#pragma once

// Query-against-corpus scoring. Both kernels write out[d] = dot(query, doc d)
// and sum each document's matched terms in ascending term-id order, so their
// results are bitwise identical. The serial one is the reference.

#include <span>

#include "gandr/tfidf.hpp"

namespace gandr::kernels {

// Accumulates over the inverted postings of the query's terms.
void score_serial(const TfidfIndex& index, const SparseVector& query, std::span<double> out);

// OpenMP over contiguous document blocks, each walking its slice of the
// postings.
void score_parallel(const TfidfIndex& index, const SparseVector& query, std::span<double> out);

enum class Kernel { Serial, Parallel, Auto };

// Auto picks Parallel for large corpora when not already inside a parallel
// region.
void score(Kernel kernel, const TfidfIndex& index, const SparseVector& query,
           std::span<double> out);

}  // namespace gandr::kernels
