#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "pairdisc/param_store.hpp"

namespace pairdisc {

// A loss evaluation plus the distance to the nearest hinge kink
// (+inf when the loss has no hinge terms).
struct LossEval {
  double value = 0;
  double kink_distance = std::numeric_limits<double>::infinity();
};

using LossFn = std::function<LossEval(const ParameterStore&)>;

struct Coord {
  std::string name;
  Index index;
};

struct GradCheckReport {
  double max_rel_error = 0;
  Coord worst;
  std::size_t checked = 0;
  std::size_t skipped_kink = 0;
};

inline std::vector<Coord> all_coords(const ParameterStore& store) {
  std::vector<Coord> out;
  store.for_each([&](const std::string& name, const ParamEntry& e) {
    for (Index i = 0; i < e.value.size(); ++i) out.push_back({name, i});
  });
  return out;
}

// Well-conditioned evaluation point for finite-difference checks: weight
// magnitudes bounded away from zero so true gradients stay well above the
// ~ulp(L)/h noise floor of a central difference. At the training init scale
// (0.08) many exact gradients sit near 1e-9, which no estimator can resolve
// at h = 1e-5.
inline void init_for_gradcheck(ParameterStore& store, std::uint64_t seed) {
  store.for_each([&](const std::string& name, ParamEntry& e) {
    Rng rng(mix_seed(seed, name));
    for (Index i = 0; i < e.value.size(); ++i) {
      const double magnitude = 0.35 + 0.55 * rng.uniform();
      e.value[i] = (rng.next() & 1) ? magnitude : -magnitude;
    }
  });
}

inline std::vector<Coord> sample_coords(const ParameterStore& store, std::size_t n, Rng& rng) {
  std::vector<Coord> all = all_coords(store);
  rng.shuffle(all);
  if (all.size() > n) all.resize(n);
  std::sort(all.begin(), all.end(), [](const Coord& a, const Coord& b) {
    return a.name != b.name ? a.name < b.name : a.index < b.index;
  });
  return all;
}

// Central-difference check of the analytic gradients already accumulated in
// store.grad against loss_fn, which must be a pure function of the values.
// Coordinates whose +/-h evaluations come within 10h of a hinge kink are
// skipped; max(0,.) has no usable derivative there.
inline GradCheckReport finite_diff_check(const LossFn& loss_fn, ParameterStore& store, double h,
                                         const std::vector<Coord>& coords) {
  if (!(h > 0)) throw std::invalid_argument("finite_diff_check: h must be > 0");
  const LossEval base = loss_fn(store);

  GradCheckReport rep;
  for (const Coord& c : coords) {
    ParamEntry& e = store.entry(c.name);
    const double saved = e.value[c.index];
    e.value[c.index] = saved + h;
    const LossEval up = loss_fn(store);
    e.value[c.index] = saved - h;
    const LossEval down = loss_fn(store);
    e.value[c.index] = saved;

    const double kink = std::min({base.kink_distance, up.kink_distance, down.kink_distance});
    if (kink < 10 * h) {
      ++rep.skipped_kink;
      continue;
    }
    const double numeric = (up.value - down.value) / (2 * h);
    const double analytic = e.grad[c.index];
    const double rel =
        std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
    if (rel > rep.max_rel_error) {
      rep.max_rel_error = rel;
      rep.worst = c;
    }
    ++rep.checked;
  }

  const LossEval recheck = loss_fn(store);
  if (recheck.value != base.value)
    throw std::logic_error("finite_diff_check: loss_fn is not deterministic");
  return rep;
}

}  // namespace pairdisc
