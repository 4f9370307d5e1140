#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "text_util.hpp"
#include "warfgate/error.hpp"
#include "warfgate/svm.hpp"

namespace warfgate {

// Layout:
//   warfgate-svm 1
//   kernel <spec>
//   c_regularization / c_positive / c_negative / bias / converged / max_kkt_violation /
//   dual_objective / iterations   (one "key value" line each)
//   features <d>
//   <name> <mean> <scale>          (d lines)
//   support_vectors <s>
//   <label> <alpha> <v_1> ... <v_d> (s lines)
//   end
void save_model(std::ostream& out, const SvmModel& m) {
  using text::format_exact;
  out << kModelFormat << ' ' << kModelFormatVersion << '\n';
  out << "kernel " << to_string(m.kernel) << '\n';
  out << "c_regularization " << format_exact(m.c_regularization) << '\n';
  out << "c_positive " << format_exact(m.c_positive) << '\n';
  out << "c_negative " << format_exact(m.c_negative) << '\n';
  out << "bias " << format_exact(m.bias) << '\n';
  out << "converged " << (m.converged ? 1 : 0) << '\n';
  out << "max_kkt_violation " << format_exact(m.max_kkt_violation) << '\n';
  out << "dual_objective " << format_exact(m.dual_objective) << '\n';
  out << "iterations " << m.iterations << '\n';
  out << "features " << m.n_features() << '\n';
  for (std::size_t j = 0; j < m.n_features(); ++j) {
    out << m.feature_names[j] << ' ' << format_exact(m.scaler.mean[j]) << ' ' << format_exact(m.scaler.scale[j])
        << '\n';
  }
  out << "support_vectors " << m.n_support() << '\n';
  for (std::size_t i = 0; i < m.n_support(); ++i) {
    out << m.sv_labels[i] << ' ' << format_exact(m.alphas[i]);
    for (double v : m.support_vector(i)) out << ' ' << format_exact(v);
    out << '\n';
  }
  out << "end\n";
}

std::string model_to_text(const SvmModel& model) {
  std::ostringstream os;
  save_model(os, model);
  return os.str();
}

namespace {

class ModelReader {
public:
  explicit ModelReader(std::istream& in) : in_(in) {}

  std::vector<std::string> next_line() {
    std::string line;
    while (std::getline(in_, line)) {
      ++lineno_;
      text::strip_cr(line);
      if (text::trim(line).empty()) continue;
      std::vector<std::string> toks;
      std::istringstream ls(line);
      for (std::string t; ls >> t;) toks.push_back(t);
      return toks;
    }
    fail("unexpected end of model file");
  }

  std::vector<std::string> expect(const std::string& key, std::size_t n_values) {
    auto toks = next_line();
    if (toks.empty() || toks[0] != key || toks.size() != n_values + 1) {
      fail("expected '" + key + "' with " + std::to_string(n_values) + " value(s)");
    }
    return toks;
  }

  double real(const std::string& tok) {
    auto v = text::parse_real(tok);
    if (!v) fail("bad number '" + tok + "'");
    return *v;
  }

  std::size_t count(const std::string& tok) {
    const double v = real(tok);
    if (v < 0 || v != std::floor(v)) fail("bad count '" + tok + "'");
    return static_cast<std::size_t>(v);
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw SchemaError("model file line " + std::to_string(lineno_) + ": " + what);
  }

private:
  std::istream& in_;
  std::size_t lineno_ = 0;
};

}  // namespace

SvmModel load_model(std::istream& in) {
  ModelReader r(in);
  auto head = r.next_line();
  if (head.size() != 2 || head[0] != kModelFormat) r.fail("not a warfgate-svm model");
  if (head[1] != std::to_string(kModelFormatVersion)) r.fail("unsupported model format version " + head[1]);

  SvmModel m;
  try {
    m.kernel = parse_kernel(r.expect("kernel", 1)[1]);
  } catch (const UsageError& e) {
    r.fail(e.what());
  }
  m.c_regularization = r.real(r.expect("c_regularization", 1)[1]);
  m.c_positive = r.real(r.expect("c_positive", 1)[1]);
  m.c_negative = r.real(r.expect("c_negative", 1)[1]);
  m.bias = r.real(r.expect("bias", 1)[1]);
  m.converged = r.real(r.expect("converged", 1)[1]) != 0.0;
  m.max_kkt_violation = r.real(r.expect("max_kkt_violation", 1)[1]);
  m.dual_objective = r.real(r.expect("dual_objective", 1)[1]);
  m.iterations = r.count(r.expect("iterations", 1)[1]);

  const std::size_t d = r.count(r.expect("features", 1)[1]);
  m.scaler = Scaler::identity(d);
  for (std::size_t j = 0; j < d; ++j) {
    auto toks = r.next_line();
    if (toks.size() != 3) r.fail("feature line needs name, mean, scale");
    m.feature_names.push_back(toks[0]);
    m.scaler.mean[j] = r.real(toks[1]);
    m.scaler.scale[j] = r.real(toks[2]);
    if (!(m.scaler.scale[j] > 0.0)) r.fail("feature scale must be positive");
  }
  const std::size_t s = r.count(r.expect("support_vectors", 1)[1]);
  m.support_vectors.reserve(s * d);
  for (std::size_t i = 0; i < s; ++i) {
    auto toks = r.next_line();
    if (toks.size() != d + 2) r.fail("support vector line needs label, alpha and " + std::to_string(d) + " values");
    const double label = r.real(toks[0]);
    if (label != 1.0 && label != -1.0) r.fail("support vector label must be -1 or +1");
    m.sv_labels.push_back(static_cast<int>(label));
    m.alphas.push_back(r.real(toks[1]));
    for (std::size_t j = 0; j < d; ++j) m.support_vectors.push_back(r.real(toks[2 + j]));
  }
  if (r.next_line() != std::vector<std::string>{"end"}) r.fail("expected 'end'");
  return m;
}

SvmModel load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open model file '" + path + "'");
  return load_model(in);
}

std::string model_version(const SvmModel& model) {
  const std::string textual = model_to_text(model);
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : textual) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(kModelFormat) + "/" + std::to_string(kModelFormatVersion) + "#" + buf;
}

}  // namespace warfgate
