#pragma once

// Central finite differences against analytic gradients.

#include "gaxnet/nn/param_store.hpp"
#include "gaxnet/types.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace fd {

using gaxnet::Index;
using gaxnet::Matrix;

inline constexpr double kStep = 1e-4;
inline constexpr double kTolerance = 1e-4;

// |a - n| / max(|a|, |n|), with a 1e-6 floor so entries that are zero
// up to rounding do not dominate.
inline double rel_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
}

struct Report {
  double worst = 0.0;
  std::string where;
  int checked = 0;
};

/// Checks `count` entries of `value` (all when count <= 0 or the matrix
/// is smaller), perturbing in place and restoring.
inline void check(Report& rep, const std::string& name, Matrix& value, const Matrix& analytic,
                  const std::function<double()>& loss, int count, std::mt19937_64& rng) {
  std::vector<Index> idx(std::size_t(value.size()));
  for (Index i = 0; i < value.size(); ++i) idx[std::size_t(i)] = i;
  if (count > 0 && count < value.size()) {
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(std::size_t(count));
  }
  for (Index i : idx) {
    double& x = value.data()[i];
    const double keep = x;
    x = keep + kStep;
    const double up = loss();
    x = keep - kStep;
    const double down = loss();
    x = keep;
    const double numeric = (up - down) / (2.0 * kStep);
    const double err = rel_error(analytic.data()[i], numeric);
    ++rep.checked;
    if (err > rep.worst) {
      rep.worst = err;
      rep.where = name + "[" + std::to_string(i) + "] analytic=" + std::to_string(analytic.data()[i]) +
                  " numeric=" + std::to_string(numeric);
    }
  }
}

/// Every parameter of a store; `analytic` grads must already be in place.
inline void check_store(Report& rep, gaxnet::nn::ParamStore& store, const std::function<double()>& loss, int count,
                        std::mt19937_64& rng) {
  std::vector<std::pair<std::string, gaxnet::nn::Param<double>*>> params;
  store.for_each([&](const std::string& name, gaxnet::nn::Param<double>& p) { params.emplace_back(name, &p); });
  for (auto& [name, p] : params) {
    const Matrix analytic = p->grad;
    check(rep, name, p->value, analytic, loss, count, rng);
  }
}

inline Matrix random_matrix(Index rows, Index cols, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

}  // namespace fd
