#include "gandr/kernels.hpp"

#include <algorithm>
#include <cassert>

#include <omp.h>

namespace gandr::kernels {

namespace {
constexpr std::size_t kParallelThreshold = 8192;
}

void score_serial(const TfidfIndex& index, const SparseVector& query, std::span<double> out) {
  assert(out.size() == index.num_documents());
  std::fill(out.begin(), out.end(), 0.0);
  for (const auto& q : query.entries) {
    for (const auto& p : index.postings(q.term)) out[p.doc] += q.weight * p.weight;
  }
}

void score_parallel(const TfidfIndex& index, const SparseVector& query, std::span<double> out) {
  assert(out.size() == index.num_documents());
  const std::size_t n = index.num_documents();
#pragma omp parallel
  {
    // Each thread owns a contiguous block of documents and walks the part of
    // every posting list that falls inside it.
    const auto threads = static_cast<std::size_t>(omp_get_num_threads());
    const auto t = static_cast<std::size_t>(omp_get_thread_num());
    const std::size_t lo = n * t / threads;
    const std::size_t hi = n * (t + 1) / threads;
    std::fill(out.begin() + lo, out.begin() + hi, 0.0);
    for (const auto& q : query.entries) {
      const auto postings = index.postings(q.term);
      auto it = std::lower_bound(postings.begin(), postings.end(), lo,
                                 [](const Posting& p, std::size_t doc) { return p.doc < doc; });
      for (; it != postings.end() && it->doc < hi; ++it) out[it->doc] += q.weight * it->weight;
    }
  }
}

void score(Kernel kernel, const TfidfIndex& index, const SparseVector& query,
           std::span<double> out) {
  if (kernel == Kernel::Auto) {
    kernel = (index.num_documents() >= kParallelThreshold && !omp_in_parallel() &&
              omp_get_max_threads() > 1)
                 ? Kernel::Parallel
                 : Kernel::Serial;
  }
  if (kernel == Kernel::Parallel) {
    score_parallel(index, query, out);
  } else {
    score_serial(index, query, out);
  }
}

}  // namespace gandr::kernels
