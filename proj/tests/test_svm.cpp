#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "support.hpp"
#include "warfgate/error.hpp"
#include "warfgate/svm.hpp"

using namespace warfgate;

namespace {

FeatureMatrix two_points() { return FeatureMatrix::from_rows({{0, 0}, {2, 2}}, {-1, 1}); }

double dv(const SvmModel& m, std::vector<double> x) { return decision_value(m, x); }

// Full multiplier vector (zeros for non-support rows), matched by exact row equality.
std::vector<double> full_alphas(const SvmModel& m, const FeatureMatrix& x) {
  std::vector<double> a(x.rows(), 0.0);
  std::vector<bool> used(m.n_support(), false);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t s = 0; s < m.n_support(); ++s) {
      if (used[s] || m.sv_labels[s] != x.label(i)) continue;
      const auto sv = m.support_vector(s);
      if (std::equal(sv.begin(), sv.end(), x.row(i).begin())) {
        a[i] = m.alphas[s];
        used[s] = true;
        break;
      }
    }
  }
  return a;
}

}  // namespace

TEST_CASE("two-point linear problem") {
  const auto m = train(two_points(), LinearKernel{}, testing::oracle_train_config(1000.0));
  REQUIRE(m.n_support() == 2);
  CHECK(m.alphas[0] == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(m.alphas[1] == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(m.bias == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(m.dual_objective == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(dv(m, {2, 2}) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(dv(m, {0, 0}) == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(std::abs(dv(m, {1, 1})) < 1e-9);
  // Effective w = (0.5, 0.5): the boundary is x1 + x2 = 2.
  CHECK(dv(m, {3, -1}) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(dv(m, {4, 0}) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("reference solver on the two-point problem") {
  const auto ref = reference_dual_solve(two_points(), LinearKernel{}, 1000.0);
  CHECK(ref.alphas[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(ref.alphas[1] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(ref.objective == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(ref.bias == doctest::Approx(-1.0).epsilon(1e-12));

  const auto clipped = reference_dual_solve(two_points(), LinearKernel{}, 0.1);
  CHECK(clipped.alphas[0] == doctest::Approx(0.1));
  CHECK(clipped.alphas[1] == doctest::Approx(0.1));
  // 2(0.1) - 4(0.1)^2
  CHECK(clipped.objective == doctest::Approx(0.16));

  const auto smo = train(two_points(), LinearKernel{}, testing::oracle_train_config(0.1));
  CHECK(smo.alphas[0] == 0.1);
  CHECK(smo.alphas[1] == 0.1);

  CHECK_THROWS(reference_dual_solve(FeatureMatrix::from_rows({{0, 0}}, {1}), LinearKernel{}, 1.0));
  std::vector<std::vector<double>> rows(13, std::vector<double>{0.0});
  std::vector<int> labels(13, 1);
  labels[0] = -1;
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i][0] = static_cast<double>(i);
  CHECK_THROWS(reference_dual_solve(FeatureMatrix::from_rows(rows, labels), LinearKernel{}, 1.0));
}

TEST_CASE("XOR with a degree-2 polynomial kernel") {
  const auto x = FeatureMatrix::from_rows({{0, 0}, {1, 1}, {0, 1}, {1, 0}}, {-1, -1, 1, 1});
  const auto m = train(x, PolynomialKernel{2, 1.0}, testing::oracle_train_config(1000.0));
  for (std::size_t i = 0; i < x.rows(); ++i) CHECK(predict(m, x.row(i)) == x.label(i));
  const auto ref = reference_dual_solve(x, PolynomialKernel{2, 1.0}, 1000.0);
  CHECK(m.dual_objective == doctest::Approx(ref.objective).epsilon(1e-8));
}

TEST_CASE("single-class input is degenerate") {
  const auto x = FeatureMatrix::from_rows({{0}, {1}, {2}}, {1, 1, 1});
  CHECK_THROWS_AS(train(x, LinearKernel{}, TrainConfig{}), DegenerateError);
  CHECK_THROWS_AS(train(FeatureMatrix::from_rows({{0}, {1}}), LinearKernel{}, TrainConfig{}), Error);
}

TEST_CASE("sign rule and dimension checks") {
  CHECK(sign_label(2.3) == 1);
  CHECK(sign_label(-0.1) == -1);
  CHECK(sign_label(0.0) == 1);
  CHECK(sign_label(-0.0) == 1);
  const auto m = train(two_points(), LinearKernel{}, testing::oracle_train_config(1000.0));
  CHECK_THROWS_AS(dv(m, {1}), DomainError);
}

TEST_CASE("equality and box constraints, KKT conditions") {
  std::mt19937_64 rng(404);
  for (std::size_t t = 0; t < 60; ++t) {
    const auto inst = testing::random_dual_instance(rng, t);
    TrainConfig cfg = testing::oracle_train_config(inst.c);
    cfg.kkt_tolerance = 1e-6;
    cfg.balance_classes = t % 2 == 0;
    const auto m = train(inst.x, inst.kernel, cfg);
    double balance = 0.0;
    for (std::size_t s = 0; s < m.n_support(); ++s) {
      const double bound = m.sv_labels[s] > 0 ? m.c_positive : m.c_negative;
      CHECK(m.alphas[s] > 0.0);
      CHECK(m.alphas[s] <= bound);
      balance += m.alphas[s] * m.sv_labels[s];
    }
    CHECK(std::abs(balance) <= 1e-8);
    if (!m.converged || std::holds_alternative<SigmoidKernel>(inst.kernel)) continue;
    const auto a = full_alphas(m, inst.x);
    for (std::size_t i = 0; i < inst.x.rows(); ++i) {
      const double margin = inst.x.label(i) * decision_value_standardized(m, inst.x.row(i));
      const double bound = inst.x.label(i) > 0 ? m.c_positive : m.c_negative;
      if (a[i] == 0.0) {
        CHECK(margin >= 1.0 - 1e-5);
      } else if (a[i] == bound) {
        CHECK(margin <= 1.0 + 1e-5);
      } else {
        CHECK(std::abs(margin - 1.0) <= 1e-5);
      }
    }
  }
}

TEST_CASE("oracle agreement on PSD kernels") {
  std::mt19937_64 rng(91);
  int compared = 0;
  for (std::size_t t = 0; t < 75; ++t) {
    const auto inst = testing::random_dual_instance(rng, t);
    if (std::holds_alternative<SigmoidKernel>(inst.kernel)) continue;
    const auto m = train(inst.x, inst.kernel, testing::oracle_train_config(inst.c));
    const auto ref = reference_dual_solve(inst.x, inst.kernel, inst.c);
    CHECK(m.dual_objective == doctest::Approx(ref.objective).epsilon(1e-6));
    ++compared;
  }
  CHECK(compared == 60);
}

TEST_CASE("large C on separable data fits every point with margin") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g(0.0, 0.5);
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (int i = 0; i < 40; ++i) {
    const int z = i % 2 ? 1 : -1;
    rows.push_back({2.0 * z + g(rng), 2.0 * z + g(rng)});
    labels.push_back(z);
  }
  const auto x = FeatureMatrix::from_rows(rows, labels);
  TrainConfig cfg;
  cfg.c_regularization = 1e4;
  for (const KernelSpec& k : {KernelSpec{LinearKernel{}}, KernelSpec{PolynomialKernel{2, 1.0}}, KernelSpec{RbfKernel{1.0}}}) {
    const auto m = train(x, k, cfg);
    for (std::size_t i = 0; i < x.rows(); ++i) CHECK(x.label(i) * decision_value(m, x.row(i)) >= 1.0 - 1e-3);
  }
}

TEST_CASE("class weights scale the box bounds") {
  const auto x = FeatureMatrix::from_rows({{0}, {0.1}, {0.2}, {1}}, {-1, -1, -1, 1});
  TrainConfig cfg;
  cfg.c_regularization = 2.0;
  const auto balanced = train(x, LinearKernel{}, cfg);
  CHECK(balanced.c_negative == doctest::Approx(2.0 * 4.0 / 6.0));
  CHECK(balanced.c_positive == doctest::Approx(2.0 * 4.0 / 2.0));
  cfg.balance_classes = false;
  const auto plain = train(x, LinearKernel{}, cfg);
  CHECK(plain.c_negative == 2.0);
  CHECK(plain.c_positive == 2.0);
  cfg.class_weights = std::pair{3.0, 0.5};
  const auto explicit_w = train(x, LinearKernel{}, cfg);
  CHECK(explicit_w.c_positive == 6.0);
  CHECK(explicit_w.c_negative == 1.0);
}

TEST_CASE("non-convergence is reported, not thrown") {
  const auto split = testing::prepare_synthetic(300, 2);
  std::vector<int> labels;
  for (std::size_t i = 0; i < split.train.size(); ++i) labels.push_back(i % 2 ? 1 : -1);
  const auto x = encode_features(split.train, split.features).with_labels(labels);
  TrainConfig cfg;
  cfg.c_regularization = 100.0;
  cfg.max_passes = 1;
  const auto m = train(x, LinearKernel{}, cfg);
  CHECK_FALSE(m.converged);
  CHECK(m.max_kkt_violation > cfg.kkt_tolerance);
}

TEST_CASE("determinism and bit-exact model files") {
  const auto split = testing::prepare_synthetic(400, 6);
  std::vector<int> labels;
  for (const auto& r : split.train) labels.push_back(r.flag(Binary::valve_replacement) == 1 || r.age_decade >= 7 ? 1 : -1);
  const auto x = encode_features(split.train, split.features).with_labels(labels);
  TrainConfig cfg;
  cfg.seed = 5;
  const auto a = train(x, PolynomialKernel{2, 1.0}, cfg);
  const auto b = train(x, PolynomialKernel{2, 1.0}, cfg);
  CHECK(a.alphas == b.alphas);
  CHECK(a.bias == b.bias);
  CHECK(model_to_text(a) == model_to_text(b));

  std::istringstream in(model_to_text(a));
  const auto loaded = load_model(in);
  CHECK(model_to_text(loaded) == model_to_text(a));
  CHECK(model_version(loaded) == model_version(a));
  const auto test = encode_features(split.test, split.features, x.scaler());
  for (std::size_t i = 0; i < test.rows(); ++i) {
    CHECK(decision_value_standardized(loaded, test.row(i)) == decision_value_standardized(a, test.row(i)));
  }
}

TEST_CASE("model file errors") {
  std::istringstream empty("");
  CHECK_THROWS_AS(load_model(empty), SchemaError);
  std::istringstream wrong("warfgate-svm 99\n");
  CHECK_THROWS_AS(load_model(wrong), SchemaError);
  CHECK_THROWS(load_model_file("/nonexistent/model.svm"));
}

TEST_CASE("sigmoid restarts never lower the dual objective") {
  std::mt19937_64 rng(2718);
  for (std::size_t t = 0; t < 150; ++t) {
    const auto inst = testing::random_dual_instance(rng, t);
    if (!std::holds_alternative<SigmoidKernel>(inst.kernel)) continue;
    auto single = testing::oracle_train_config(inst.c);
    single.indefinite_restarts = 0;
    const auto one = train(inst.x, inst.kernel, single);
    const auto multi = train(inst.x, inst.kernel, testing::oracle_train_config(inst.c));
    CHECK(multi.converged);
    CHECK(multi.dual_objective >= one.dual_objective - 1e-9);
    double balance = 0.0;
    for (std::size_t s = 0; s < multi.n_support(); ++s) balance += multi.alphas[s] * multi.sv_labels[s];
    CHECK(std::abs(balance) <= 1e-8);
  }
}
