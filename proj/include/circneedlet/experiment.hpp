#pragma once

// Replication engine over a (j, t) grid of needlet coefficient experiments.
// Every replication draws from its own stream derived from (seed, j, t, rep),
// so results do not depend on thread count or on which cells run together.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "circneedlet/bounds.hpp"
#include "circneedlet/coefficients.hpp"
#include "circneedlet/error.hpp"
#include "circneedlet/fields.hpp"
#include "circneedlet/needlet.hpp"
#include "circneedlet/rng.hpp"
#include "circneedlet/stats.hpp"

namespace circneedlet {

struct ExperimentGrid {
  std::vector<double> t_values{50.0, 100.0, 150.0};
  double R_per_t = 10.0;
  std::vector<int> j_values{10, 20, 30};
  NeedletParams params;
  double center = std::numbers::pi;
  DensitySpec density;
  std::size_t n_reps = 500;
  std::uint64_t seed = 20240601;
  SampleCoordinates mode = SampleCoordinates::poissonized;
  bool compute_bounds = false;

  void validate() const {
    params.validate();
    if (t_values.empty() || j_values.empty()) throw ArgumentError("ExperimentGrid: empty t or j list");
    if (n_reps < 100) throw ArgumentError("ExperimentGrid: n_reps must be >= 100");
    if (!(R_per_t > 0.0)) throw ArgumentError("ExperimentGrid: R must be positive");
    for (double t : t_values) {
      if (!(t > 0.0)) throw ArgumentError("ExperimentGrid: t values must be positive");
    }
  }
};

struct CellResult {
  int j = 0;
  double t = 0.0;
  double R_t = 0.0;
  std::size_t n_reps = 0;
  std::vector<double> values;
  double mean = 0.0;
  double var = 0.0;
  double W = 0.0;
  double p_value = 0.0;
  double W1 = 0.0;
  double b = 0.0;
  double sigma2 = 0.0;
  std::optional<double> wasserstein_rhs;
  std::string error;  // empty when the cell succeeded

  bool ok() const { return error.empty(); }
  double effective_sample_size(double B) const { return std::pow(B, -static_cast<double>(j)) * R_t; }
};

inline std::uint64_t replication_seed(std::uint64_t root, int j, double t, std::size_t rep) {
  return derive_seed(root, {tag_of(static_cast<long long>(j)), tag_of(t), static_cast<std::uint64_t>(rep)});
}

// Needlet of level j centered at x with the arc length 1/Q_j of that level.
inline NeedletSpec grid_spec(const NeedletParams& p, int j, double center) {
  const std::size_t Q = arc_count(p, j);
  return make_spec(p, j, center, 1.0 / static_cast<double>(Q));
}

// Runs fn(i) for i in [0, n) on up to `threads` workers.
inline void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, n))));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n || failed.load()) return;
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

inline void summarize_cell(CellResult& c) {
  c.mean = mean(c.values);
  c.var = variance(c.values);
  const auto sw = shapiro_wilk(c.values);
  c.W = sw.W;
  c.p_value = sw.p_value;
  c.W1 = empirical_wasserstein_normal(c.values);
}

// One β̃ (or fixed-n coordinate) draw for a prepared cell.
inline double replicate(const CoefficientMoments& m, const CircleDensity& d, double R_t, SampleCoordinates mode,
                        std::uint64_t seed) {
  Stream rng(seed);
  if (mode == SampleCoordinates::poissonized) {
    PoissonFieldConfig cfg{R_t, d, seed};
    const PointSample s = sample_poisson(cfg, rng);
    return beta_tilde(s, m, R_t);
  }
  const auto n = static_cast<std::size_t>(std::llround(R_t));
  const PointSample s = sample_iid(d, n, rng);
  const std::size_t q0 = 0;
  return depoissonized_vector(s, std::span(&q0, 1), std::span(&m, 1)).front();
}

// Cells are (j, t) in j-major order. A failure while preparing or summarizing
// a cell is stored in CellResult::error and the remaining cells still run.
inline std::vector<CellResult> run_grid(const ExperimentGrid& g, unsigned threads = 1) {
  g.validate();
  const CircleDensity d = builtin_density(g.density);
  struct Prepared {
    std::optional<CoefficientMoments> m;
  };
  std::vector<CellResult> cells;
  std::vector<Prepared> prep;
  for (int j : g.j_values) {
    for (double t : g.t_values) {
      CellResult c;
      c.j = j;
      c.t = t;
      c.R_t = g.R_per_t * t;
      c.n_reps = g.n_reps;
      Prepared pr;
      try {
        pr.m = population_moments(grid_spec(g.params, j, g.center), d);
        c.b = pr.m->b;
        c.sigma2 = pr.m->sigma2;
        if (g.mode == SampleCoordinates::depoissonized && std::llround(c.R_t) < 1) {
          throw ArgumentError("run_grid: fixed-n mode needs R_t >= 1");
        }
      } catch (const Error& e) {
        c.error = e.what();
      }
      cells.push_back(std::move(c));
      prep.push_back(std::move(pr));
    }
  }

  std::vector<std::size_t> live;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i].ok()) {
      cells[i].values.assign(g.n_reps, 0.0);
      live.push_back(i);
    }
  }
  parallel_for(live.size() * g.n_reps, threads, [&](std::size_t task) {
    const std::size_t ci = live[task / g.n_reps];
    const std::size_t rep = task % g.n_reps;
    CellResult& c = cells[ci];
    c.values[rep] = replicate(*prep[ci].m, d, c.R_t, g.mode, replication_seed(g.seed, c.j, c.t, rep));
  });

  for (std::size_t ci : live) {
    CellResult& c = cells[ci];
    try {
      summarize_cell(c);
      if (g.compute_bounds) c.wasserstein_rhs = wasserstein_rhs(*prep[ci].m, d, c.R_t);
    } catch (const Error& e) {
      c.error = e.what();
    }
  }
  return cells;
}

}  // namespace circneedlet
