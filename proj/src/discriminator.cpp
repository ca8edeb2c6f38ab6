#include "pairdisc/discriminator.hpp"

#include <cmath>
#include <limits>

namespace pairdisc {

GlobalLossResult global_loss(const Matd& e_p, const Matd& e_g, double margin, bool gated) {
  const Index N = e_p.rows();
  const Index d = e_p.cols();
  if (e_g.rows() != N || e_g.cols() != d)
    throw std::invalid_argument("global_loss: e_p/e_g shape mismatch");
  if (N < 2) throw std::invalid_argument("global_loss: batch must have N >= 2");

  Matd dots(N, N);
  dots.noalias() = e_p * e_g.transpose();
  if (!dots.allFinite()) throw NumericError("global_loss: non-finite dot products");

  GlobalLossResult res;
  res.de_p = Matd::Zero(N, d);
  res.de_g = Matd::Zero(N, d);
  res.min_abs_margin = std::numeric_limits<double>::infinity();

  Matd active = Matd::Zero(N, N);
  for (Index i = 0; i < N; ++i) {
    for (Index j = 0; j < N; ++j) {
      if (i == j) continue;
      const double m = dots(i, j) - dots(i, i) + margin;
      res.min_abs_margin = std::min(res.min_abs_margin, std::abs(m));
      if (m > 0) res.value += m;
      active(i, j) = gated ? (m > 0 ? 1.0 : 0.0) : 1.0;
    }
  }

  // Per active (i,j): de_p[i] += e_g[j] - e_g[i]; de_g[j] += e_p[i];
  // de_g[i] -= e_p[i].
  Vecd row_counts = active.rowwise().sum();
  res.de_p.noalias() = active * e_g;
  res.de_p -= row_counts.asDiagonal() * e_g;
  res.de_g.noalias() = active.transpose() * e_p;
  res.de_g -= row_counts.asDiagonal() * e_p;
  return res;
}

double global_loss_bruteforce(const Matd& e_p, const Matd& e_g, double margin) {
  const Index N = e_p.rows();
  const Index d = e_p.cols();
  double total = 0;
  for (Index i = 0; i < N; ++i) {
    for (Index j = 0; j < N; ++j) {
      if (i == j) continue;
      double dot_ij = 0, dot_ii = 0;
      for (Index k = 0; k < d; ++k) {
        dot_ij += e_p(i, k) * e_g(j, k);
        dot_ii += e_p(i, k) * e_g(i, k);
      }
      const double m = dot_ij - dot_ii + margin;
      if (m > 0) total += m;
    }
  }
  return total;
}

BatchEmbeddings embed_pair_batch(const ParameterStore& store, const std::string& prefix,
                                 const std::vector<Matd>& soft_sequences,
                                 const std::vector<TokenSequence>& targets) {
  if (soft_sequences.size() != targets.size())
    throw std::invalid_argument("embed_pair_batch: list length mismatch");
  const Index N = static_cast<Index>(targets.size());
  if (N < 2) throw std::invalid_argument("embed_pair_batch: batch must have N >= 2");

  const Index d = store.value(prefix + "lstm.Wh").dim(0);
  BatchEmbeddings out;
  out.e_p.resize(N, d);
  out.e_g.resize(N, d);
  out.p_caches.resize(static_cast<std::size_t>(N));
  out.g_caches.resize(static_cast<std::size_t>(N));
  for (Index i = 0; i < N; ++i) {
    const auto u = static_cast<std::size_t>(i);
    out.e_p.row(i) = encode_soft(store, prefix, soft_sequences[u], &out.p_caches[u]);
    out.e_g.row(i) = encode(store, prefix, targets[u], &out.g_caches[u]);
  }
  return out;
}

}  // namespace pairdisc
