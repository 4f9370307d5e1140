#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "warfgate/error.hpp"
#include "warfgate/svm.hpp"

namespace warfgate {

namespace {
constexpr std::size_t kMaxReferenceRows = 12;
}

ReferenceDualSolution reference_dual_solve(const FeatureMatrix& x, const KernelSpec& kernel, double c) {
  if (!x.has_labels()) throw DomainError("reference_dual_solve: matrix has no labels");
  const std::size_t n = x.rows();
  if (n < 2) throw DegenerateError("reference_dual_solve: need at least two rows");
  if (n > kMaxReferenceRows) {
    throw DomainError("reference_dual_solve: " + std::to_string(n) + " rows exceeds the limit of " +
                      std::to_string(kMaxReferenceRows));
  }
  if (!(c > 0.0)) throw DomainError("reference_dual_solve: C must be > 0");
  const auto& z = x.labels();
  if (std::find(z.begin(), z.end(), 1) == z.end() || std::find(z.begin(), z.end(), -1) == z.end()) {
    throw DegenerateError("reference_dual_solve: both classes required");
  }

  const GramMatrix g = gram_matrix(kernel, x);
  Eigen::MatrixXd q(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) q(i, j) = z[i] * z[j] * g(i, j);
  }
  auto objective = [&](const Eigen::VectorXd& a) { return a.sum() - 0.5 * a.dot(q * a); };

  const double feas_tol = 1e-9 * std::max(1.0, c);
  // 0 = at zero, 1 = at C, 2 = free
  std::vector<int> state(n, 0);
  std::vector<std::size_t> free_idx;
  ReferenceDualSolution best;
  best.objective = -std::numeric_limits<double>::infinity();

  for (;;) {
    free_idx.clear();
    Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
    long signed_at_c = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (state[i] == 2) free_idx.push_back(i);
      if (state[i] == 1) {
        a(i) = c;
        signed_at_c += z[i];
      }
    }
    const std::size_t nf = free_idx.size();
    bool feasible = false;
    if (nf == 0) {
      feasible = signed_at_c == 0;
    } else {
      // Stationarity on the free block plus the equality constraint:
      //   Q_FF a_F + z_F nu = 1 - Q_FB a_B,   z_F' a_F = -z_B' a_B
      Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(nf + 1, nf + 1);
      Eigen::VectorXd rhs(nf + 1);
      for (std::size_t r = 0; r < nf; ++r) {
        const std::size_t i = free_idx[r];
        for (std::size_t s = 0; s < nf; ++s) kkt(r, s) = q(i, free_idx[s]);
        kkt(r, nf) = z[i];
        kkt(nf, r) = z[i];
        rhs(r) = 1.0 - q.row(i).dot(a);
      }
      rhs(nf) = -static_cast<double>(signed_at_c) * c;
      Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
      if (lu.isInvertible()) {
        const Eigen::VectorXd sol = lu.solve(rhs);
        feasible = true;
        for (std::size_t r = 0; r < nf; ++r) {
          const double v = sol(r);
          if (v < -feas_tol || v > c + feas_tol) {
            feasible = false;
            break;
          }
          a(free_idx[r]) = std::clamp(v, 0.0, c);
        }
      }
    }
    if (feasible) {
      const double obj = objective(a);
      if (obj > best.objective) {
        best.objective = obj;
        best.alphas.assign(a.data(), a.data() + n);
      }
    }

    std::size_t pos = 0;
    while (pos < n && state[pos] == 2) state[pos++] = 0;
    if (pos == n) break;
    ++state[pos];
  }

  // Canonical bias from the chosen multipliers: mean margin residual over vectors strictly
  // inside the box, else the midpoint of the KKT interval. A free block whose solution lands
  // on a bound would otherwise pin b to one arbitrary end of that interval.
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  double free_sum = 0.0;
  std::size_t n_free = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double fi = 0.0;
    for (std::size_t j = 0; j < n; ++j) fi += best.alphas[j] * z[j] * g(j, i);
    const double s = z[i] - fi;
    const double a = best.alphas[i];
    if (a > feas_tol && a < c - feas_tol) {
      free_sum += s;
      ++n_free;
      continue;
    }
    const bool at_zero = a <= feas_tol;
    // z=+1 at 0 or z=-1 at C need b >= s; the other two cases need b <= s.
    if ((z[i] > 0) == at_zero) lower = std::max(lower, s);
    else upper = std::min(upper, s);
  }
  if (n_free > 0) best.bias = free_sum / static_cast<double>(n_free);
  else if (std::isfinite(lower) && std::isfinite(upper)) best.bias = 0.5 * (lower + upper);
  else best.bias = std::isfinite(lower) ? lower : upper;
  return best;
}

}  // namespace warfgate
