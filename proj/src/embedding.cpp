#include <cmath>

#include "ctxlab/errors.hpp"
#include "ctxlab/model.hpp"
#include "ctxlab/text.hpp"

namespace ctxlab {

DeterministicTfProvider::DeterministicTfProvider(int dimension) : dimension_(dimension) {
  if (dimension <= 0) throw ContractViolation("embedding dimension must be positive");
}

int DeterministicTfProvider::bucket(const std::string& term) const {
  return static_cast<int>(text::fnv1a64(term) % static_cast<std::uint64_t>(dimension_));
}

std::vector<double> DeterministicTfProvider::embed(const std::string& input) const {
  if (input.empty()) throw ContractViolation("embed: empty text");
  auto terms = text::tf_terms(input);
  if (terms.empty()) throw ContractViolation("embed: text has no terms");
  std::vector<double> v(static_cast<size_t>(dimension_), 0.0);
  for (const auto& term : terms) {
    v[static_cast<size_t>(bucket(term))] += 1.0;
  }
  double norm_sq = 0.0;
  for (double x : v) norm_sq += x * x;
  double norm = std::sqrt(norm_sq);
  for (double& x : v) x /= norm;
  return v;
}

std::string DeterministicTfProvider::identity() const {
  return "deterministic_tf:" + std::to_string(dimension_);
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ContractViolation("cosine: dimension mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw ContractViolation("cosine: zero vector");
  double value = dot / (std::sqrt(na) * std::sqrt(nb));
  if (value > 1.0) value = 1.0;
  if (value < -1.0) value = -1.0;
  return value;
}

} // namespace ctxlab
