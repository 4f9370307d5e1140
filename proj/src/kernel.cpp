#include "warfgate/kernel.hpp"

#include <cmath>
#include <sstream>

#include "text_util.hpp"
#include "warfgate/error.hpp"

namespace warfgate {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double dot(std::span<const double> x, std::span<const double> y) {
  long double acc = 0.0L;
  for (std::size_t k = 0; k < x.size(); ++k) acc += static_cast<long double>(x[k]) * y[k];
  return static_cast<double>(acc);
}

double squared_distance(std::span<const double> x, std::span<const double> y) {
  long double acc = 0.0L;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const long double d = static_cast<long double>(x[k]) - y[k];
    acc += d * d;
  }
  return static_cast<double>(acc);
}

}  // namespace

void validate(const KernelSpec& spec) {
  std::visit(overloaded{
                 [](const LinearKernel&) {},
                 [](const PolynomialKernel& k) {
                   if (k.degree < 1) throw DomainError("polynomial kernel degree must be >= 1");
                 },
                 [](const SigmoidKernel& k) {
                   if (!std::isfinite(k.theta)) throw DomainError("sigmoid kernel theta must be finite");
                 },
                 [](const RbfKernel& k) {
                   if (!(k.delta > 0.0)) throw DomainError("rbf kernel delta must be > 0");
                 },
                 [](const AnovaKernel& k) {
                   if (!(k.sigma > 0.0)) throw DomainError("anova kernel sigma must be > 0");
                   if (k.d < 1) throw DomainError("anova kernel d must be >= 1");
                   if (k.n_dims < 1) throw DomainError("anova kernel n_dims must be >= 1");
                 },
             },
             spec);
}

std::string to_string(const KernelSpec& spec) {
  return std::visit(overloaded{
                        [](const LinearKernel&) { return std::string("linear"); },
                        [](const PolynomialKernel& k) {
                          return "poly:" + std::to_string(k.degree) + ":" + text::format_real(k.offset);
                        },
                        [](const SigmoidKernel& k) { return "sigmoid:" + text::format_real(k.theta); },
                        [](const RbfKernel& k) { return "rbf:" + text::format_real(k.delta); },
                        [](const AnovaKernel& k) {
                          return "anova:" + text::format_real(k.sigma) + ":" + std::to_string(k.d) + ":" +
                                 std::to_string(k.n_dims);
                        },
                    },
                    spec);
}

KernelSpec parse_kernel(const std::string& textual) {
  const auto parts = text::split_any(textual, ":");
  const std::string name = text::lower(text::trim(parts[0]));
  auto real = [&](std::size_t i, double fallback) {
    if (i >= parts.size()) return fallback;
    auto v = text::parse_real(parts[i]);
    if (!v) throw UsageError("bad kernel parameter in '" + textual + "'");
    return *v;
  };
  auto integer = [&](std::size_t i, int fallback) {
    const double v = real(i, fallback);
    if (v != std::floor(v)) throw UsageError("kernel parameter must be an integer in '" + textual + "'");
    return static_cast<int>(v);
  };
  KernelSpec spec;
  if (name == "linear" && parts.size() == 1) {
    spec = LinearKernel{};
  } else if ((name == "poly" || name == "polynomial") && parts.size() <= 3) {
    spec = PolynomialKernel{integer(1, 2), real(2, 1.0)};
  } else if ((name == "sigmoid" || name == "mlp") && parts.size() <= 2) {
    spec = SigmoidKernel{real(1, 0.0)};
  } else if ((name == "rbf" || name == "gaussian") && parts.size() <= 2) {
    spec = RbfKernel{real(1, 1.0)};
  } else if (name == "anova" && parts.size() == 4) {
    spec = AnovaKernel{real(1, 1.0), integer(2, 1), integer(3, 0)};
  } else {
    throw UsageError("unknown kernel '" + textual + "' (expected linear, poly:D:C, sigmoid:T, rbf:S, anova:S:D:N)");
  }
  try {
    validate(spec);
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
  return spec;
}

double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw DomainError("kernel arguments differ in dimension: " + std::to_string(x.size()) + " vs " +
                      std::to_string(y.size()));
  }
  return std::visit(overloaded{
                        [&](const LinearKernel&) { return dot(x, y); },
                        [&](const PolynomialKernel& k) { return std::pow(dot(x, y) + k.offset, k.degree); },
                        [&](const SigmoidKernel& k) { return std::tanh(dot(x, y) + k.theta); },
                        [&](const RbfKernel& k) { return std::exp(-squared_distance(x, y) / (2.0 * k.delta * k.delta)); },
                        [&](const AnovaKernel& k) {
                          if (static_cast<std::size_t>(k.n_dims) != x.size()) {
                            throw DomainError("anova kernel expects " + std::to_string(k.n_dims) +
                                              " dimensions, got " + std::to_string(x.size()));
                          }
                          long double acc = 0.0L;
                          for (std::size_t i = 0; i < x.size(); ++i) {
                            const double diff = x[i] - y[i];
                            acc += std::pow(std::exp(-k.sigma * diff * diff), k.d);
                          }
                          return static_cast<double>(acc);
                        },
                    },
                    spec);
}

GramMatrix gram_matrix(const KernelSpec& spec, const FeatureMatrix& x) {
  if (x.empty()) throw DomainError("gram_matrix: empty input");
  GramMatrix g;
  g.n = x.rows();
  g.values.resize(g.n * g.n);
  for (std::size_t i = 0; i < g.n; ++i) {
    for (std::size_t j = i; j < g.n; ++j) {
      const double v = kernel_eval(spec, x.row(i), x.row(j));
      g.values[i * g.n + j] = v;
      g.values[j * g.n + i] = v;
    }
  }
  return g;
}

}  // namespace warfgate
