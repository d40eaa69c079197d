#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "kgx/embeddings.hpp"

namespace kgx::testing {

struct GradCheckCase {
  ModelKind kind;
  int norm;
  Loss loss;
  double label;
  double l2;
  std::vector<double> s, p, o;
};

inline GradCheckCase random_case(ModelKind kind, int norm, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> dim(1, 12);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  GradCheckCase c{kind, norm, kind == ModelKind::kTransE ? Loss::kMargin : Loss::kLogistic,
                  std::bernoulli_distribution(0.5)(rng) ? 1.0 : -1.0,
                  kind == ModelKind::kTransE ? 0.0 : 0.01, {}, {}, {}};
  const int d = dim(rng);
  const std::size_t w = kind == ModelKind::kComplEx ? 2 * d : d;
  for (auto* v : {&c.s, &c.p, &c.o}) {
    v->resize(w);
    for (auto& x : *v) x = u(rng);
  }
  return c;
}

// max over slots of |analytic - numeric| / max(|analytic|, |numeric|, 1), using
// central differences on the per-fact loss.
inline double gradient_relative_error(const GradCheckCase& c, double h = 1e-6) {
  const auto g = fact_loss_gradient(c.kind, c.norm, c.loss, c.label, c.l2, c.s, c.p, c.o);
  auto s = c.s, p = c.p, o = c.o;
  auto loss = [&] { return fact_loss(c.kind, c.norm, c.loss, c.label, c.l2, s, p, o); };
  double worst = 0.0;
  auto check = [&](std::vector<double>& v, const std::vector<double>& analytic) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double keep = v[i];
      v[i] = keep + h;
      const double up = loss();
      v[i] = keep - h;
      const double down = loss();
      v[i] = keep;
      const double numeric = (up - down) / (2 * h);
      const double scale = std::max({std::abs(analytic[i]), std::abs(numeric), 1.0});
      worst = std::max(worst, std::abs(analytic[i] - numeric) / scale);
    }
  };
  check(s, g.subject);
  check(p, g.predicate);
  check(o, g.object);
  return worst;
}

// TransE with l1 is not differentiable where a residual component is zero;
// such draws are not meaningful gradient checks.
inline bool near_kink(const GradCheckCase& c, double h = 1e-4) {
  if (c.kind != ModelKind::kTransE) return false;
  double sq = 0.0;
  for (std::size_t i = 0; i < c.s.size(); ++i) {
    const double r = c.s[i] + c.p[i] - c.o[i];
    if (c.norm == 1 && std::abs(r) < h) return true;
    sq += r * r;
  }
  return sq < h;
}

}  // namespace kgx::testing
