#include "warfgate/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "warfgate/error.hpp"

namespace warfgate {

namespace {

// Rows above this count are computed on demand instead of caching the full Gram matrix.
constexpr std::size_t kFullGramLimit = 4000;

class KernelRows {
public:
  KernelRows(const KernelSpec& spec, const FeatureMatrix& x) : spec_(spec), x_(x), n_(x.rows()) {
    if (n_ <= kFullGramLimit) {
      gram_ = gram_matrix(spec, x);
      for (std::size_t i = 0; i < n_; ++i) diag_.push_back(gram_(i, i));
    } else {
      for (std::size_t i = 0; i < n_; ++i) diag_.push_back(kernel_eval(spec, x.row(i), x.row(i)));
      for (auto& s : slots_) s.values.resize(n_);
    }
  }

  double diag(std::size_t i) const { return diag_[i]; }

  // slot selects one of two row buffers so that rows i and j can be held together.
  std::span<const double> row(std::size_t i, int slot) {
    if (gram_.n) return gram_.row(i);
    auto& s = slots_[slot];
    if (s.index != i) {
      for (std::size_t k = 0; k < n_; ++k) s.values[k] = kernel_eval(spec_, x_.row(i), x_.row(k));
      s.index = i;
    }
    return s.values;
  }

private:
  struct Slot {
    std::size_t index = std::numeric_limits<std::size_t>::max();
    std::vector<double> values;
  };
  const KernelSpec& spec_;
  const FeatureMatrix& x_;
  std::size_t n_;
  GramMatrix gram_;
  std::vector<double> diag_;
  Slot slots_[2];
};

void check_training_input(const FeatureMatrix& x) {
  if (!x.has_labels()) throw DomainError("training matrix has no labels");
  if (x.empty()) throw DegenerateError("degenerate labels: no training rows");
  const auto& z = x.labels();
  const bool has_pos = std::find(z.begin(), z.end(), 1) != z.end();
  const bool has_neg = std::find(z.begin(), z.end(), -1) != z.end();
  if (!has_pos || !has_neg) {
    throw DegenerateError(std::string("degenerate labels: every training example is ") + (has_pos ? "+1" : "-1"));
  }
}

}  // namespace

SvmModel train(const FeatureMatrix& x, const KernelSpec& kernel, const TrainConfig& cfg) {
  check_training_input(x);
  validate(kernel);
  if (!(cfg.c_regularization > 0.0)) throw DomainError("C must be > 0");
  if (!(cfg.kkt_tolerance > 0.0)) throw DomainError("kkt tolerance must be > 0");
  if (cfg.max_passes < 1) throw DomainError("max_passes must be >= 1");

  const std::size_t n = x.rows();
  const auto& z = x.labels();
  const auto n_pos = static_cast<std::size_t>(std::count(z.begin(), z.end(), 1));
  const std::size_t n_neg = n - n_pos;

  double w_pos = 1.0, w_neg = 1.0;
  if (cfg.class_weights) {
    std::tie(w_pos, w_neg) = *cfg.class_weights;
    if (!(w_pos > 0.0 && w_neg > 0.0)) throw DomainError("class weights must be positive");
  } else if (cfg.balance_classes) {
    w_pos = static_cast<double>(n) / (2.0 * static_cast<double>(n_pos));
    w_neg = static_cast<double>(n) / (2.0 * static_cast<double>(n_neg));
  }
  const double c_pos = cfg.c_regularization * w_pos;
  const double c_neg = cfg.c_regularization * w_neg;
  auto bound = [&](std::size_t i) { return z[i] > 0 ? c_pos : c_neg; };

  KernelRows k(kernel, x);
  std::vector<double> alpha(n, 0.0);
  std::vector<double> f(n, 0.0);  // f_k = sum_l alpha_l z_l K(l, k), the decision value without bias

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(cfg.seed);
  std::shuffle(order.begin(), order.end(), rng);

  // s_k = z_k - f_k. Ascent along alpha_i += z_i t, alpha_j -= z_j t has slope s_i - s_j.
  auto in_up = [&](std::size_t t) { return z[t] > 0 ? alpha[t] < bound(t) : alpha[t] > 0.0; };
  auto in_low = [&](std::size_t t) { return z[t] > 0 ? alpha[t] > 0.0 : alpha[t] < bound(t); };
  struct Pair {
    std::size_t i, j;
    double s_max, s_min;
  };
  auto select = [&] {
    Pair p{n, n, -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    for (std::size_t t : order) {
      const double s = z[t] - f[t];
      if (in_up(t) && s > p.s_max) {
        p.s_max = s;
        p.i = t;
      }
      if (in_low(t) && s < p.s_min) {
        p.s_min = s;
        p.j = t;
      }
    }
    return p;
  };

  // Rounding can leave a multiplier a few ulps inside a bound; such a vector would
  // otherwise count as free and distort the bias.
  auto snap = [&](std::size_t t) {
    const double eps = cfg.numeric_epsilon * bound(t);
    if (alpha[t] <= eps) alpha[t] = 0.0;
    else if (alpha[t] >= bound(t) - eps) alpha[t] = bound(t);
  };

  auto limits = [&](std::size_t i, std::size_t j) {
    const double limit_i = z[i] > 0 ? bound(i) - alpha[i] : alpha[i];
    const double limit_j = z[j] > 0 ? alpha[j] : bound(j) - alpha[j];
    return std::pair{limit_i, limit_j};
  };
  // Moves alpha_i by z_i * step and alpha_j by -z_j * step, keeping f current.
  auto apply = [&](std::size_t i, std::size_t j, double step) {
    const auto [limit_i, limit_j] = limits(i, j);
    alpha[i] += z[i] * step;
    alpha[j] -= z[j] * step;
    if (step == limit_i) alpha[i] = z[i] > 0 ? bound(i) : 0.0;
    if (step == limit_j) alpha[j] = z[j] > 0 ? 0.0 : bound(j);
    snap(i);
    snap(j);
    const auto ki = k.row(i, 0);
    const auto kj = k.row(j, 1);
    for (std::size_t t = 0; t < n; ++t) f[t] += step * (ki[t] - kj[t]);
  };

  auto recompute_f = [&] {
    std::fill(f.begin(), f.end(), 0.0);
    for (std::size_t l = 0; l < n; ++l) {
      if (alpha[l] == 0.0) continue;
      const auto kl = k.row(l, 0);
      for (std::size_t t = 0; t < n; ++t) f[t] += alpha[l] * z[l] * kl[t];
    }
  };
  auto objective = [&] {
    double sum_alpha = 0.0, quad = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      sum_alpha += alpha[t];
      quad += alpha[t] * z[t] * f[t];
    }
    return sum_alpha - 0.5 * quad;
  };

  const std::size_t max_iter = static_cast<std::size_t>(cfg.max_passes) * n;
  // Runs pairwise ascent from the current alpha; f is rebuilt on entry and exit so that
  // bias and objective do not inherit update drift.
  auto solve = [&] {
    recompute_f();
    std::size_t it = 0;
    bool done = false;
    for (; it < max_iter; ++it) {
      const Pair p = select();
      if (p.i == n || p.j == n || p.s_max - p.s_min < cfg.kkt_tolerance) {
        done = true;
        break;
      }
      const std::size_t i = p.i, j = p.j;
      const double eta = k.diag(i) + k.diag(j) - 2.0 * k.row(i, 0)[j];
      const auto [limit_i, limit_j] = limits(i, j);
      const double limit = std::min(limit_i, limit_j);
      // Non-positive curvature (indefinite kernels): the objective is convex along the
      // direction, so the far end of the feasible segment is best.
      apply(i, j, eta > cfg.numeric_epsilon ? std::min((p.s_max - p.s_min) / eta, limit) : limit);
    }
    recompute_f();
    return std::pair{it, done};
  };

  auto [iter, converged] = solve();

  // With an indefinite kernel the dual is not concave and ascent can stop at a local
  // maximum. Restart from seeded feasible points and keep the best converged result.
  if (std::holds_alternative<SigmoidKernel>(kernel) && cfg.indefinite_restarts > 0) {
    std::vector<double> best_alpha = alpha;
    double best = objective();
    bool best_converged = converged;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int r = 0; r < cfg.indefinite_restarts; ++r) {
      double pos = 0.0, neg = 0.0;
      for (std::size_t t = 0; t < n; ++t) {
        alpha[t] = unit(rng) * bound(t);
        (z[t] > 0 ? pos : neg) += alpha[t];
      }
      // Scale the heavier class down so that sum alpha_i z_i = 0.
      const double scale_pos = pos > neg ? neg / pos : 1.0, scale_neg = neg > pos ? pos / neg : 1.0;
      for (std::size_t t = 0; t < n; ++t) {
        alpha[t] *= z[t] > 0 ? scale_pos : scale_neg;
        snap(t);
      }
      const auto [it, done] = solve();
      iter += it;
      const double obj = objective();
      if (done && (!best_converged || obj > best)) {
        best = obj;
        best_alpha = alpha;
        best_converged = true;
      }
    }
    alpha = best_alpha;
    converged = best_converged;
    recompute_f();
  }
  const Pair final_pair = select();

  double free_sum = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    if (alpha[t] > 0.0 && alpha[t] < bound(t)) {
      free_sum += z[t] - f[t];
      ++n_free;
    }
  }
  double b = 0.0;
  if (n_free > 0) {
    b = free_sum / static_cast<double>(n_free);
  } else if (final_pair.i != n && final_pair.j != n) {
    b = 0.5 * (final_pair.s_max + final_pair.s_min);
  } else {
    b = final_pair.i != n ? final_pair.s_max : final_pair.s_min;
  }

  SvmModel m;
  m.kernel = kernel;
  m.feature_names = x.feature_names();
  m.scaler = x.scaler();
  m.bias = b;
  m.c_regularization = cfg.c_regularization;
  m.c_positive = c_pos;
  m.c_negative = c_neg;
  m.converged = converged;
  m.max_kkt_violation =
      (final_pair.i != n && final_pair.j != n) ? std::max(0.0, final_pair.s_max - final_pair.s_min) : 0.0;
  m.iterations = iter;

  m.dual_objective = objective();

  for (std::size_t t = 0; t < n; ++t) {
    if (alpha[t] <= cfg.numeric_epsilon) continue;
    const auto r = x.row(t);
    m.support_vectors.insert(m.support_vectors.end(), r.begin(), r.end());
    m.alphas.push_back(alpha[t]);
    m.sv_labels.push_back(z[t]);
  }
  return m;
}

double decision_value_standardized(const SvmModel& model, std::span<const double> zrow) {
  if (zrow.size() != model.n_features()) {
    throw DomainError("model expects " + std::to_string(model.n_features()) + " features, got " +
                      std::to_string(zrow.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < model.n_support(); ++i) {
    acc += model.alphas[i] * model.sv_labels[i] * kernel_eval(model.kernel, model.support_vector(i), zrow);
  }
  return acc + model.bias;
}

double decision_value(const SvmModel& model, std::span<const double> raw) {
  if (raw.size() != model.n_features()) {
    throw DomainError("model expects " + std::to_string(model.n_features()) + " features, got " +
                      std::to_string(raw.size()));
  }
  return decision_value_standardized(model, model.scaler.apply(raw));
}

int predict(const SvmModel& model, std::span<const double> raw) { return sign_label(decision_value(model, raw)); }

double dual_objective(const GramMatrix& g, std::span<const int> z, std::span<const double> a) {
  double linear = 0.0, quad = 0.0;
  for (std::size_t i = 0; i < g.n; ++i) {
    linear += a[i];
    for (std::size_t j = 0; j < g.n; ++j) quad += a[i] * a[j] * z[i] * z[j] * g(i, j);
  }
  return linear - 0.5 * quad;
}

}  // namespace warfgate
