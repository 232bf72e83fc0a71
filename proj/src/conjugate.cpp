#include "dirimult/conjugate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_set>

#include "dirimult/error.hpp"
#include "dirimult/special_functions.hpp"

namespace dirimult {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_same_size(std::size_t lhs, std::size_t rhs, const char* where) {
  if (lhs != rhs) {
    throw ValidationError(std::string(where) + ": dimension mismatch (" +
                          std::to_string(lhs) + " vs " + std::to_string(rhs) + ")");
  }
}

void require_simplex(std::span<const double> theta, bool open, const char* where) {
  double sum = 0.0;
  for (double t : theta) {
    if (!std::isfinite(t) || t < 0.0 || (open && t == 0.0)) {
      throw ValidationError(std::string(where) + ": point outside the simplex");
    }
    sum += t;
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance) {
    throw ValidationError(std::string(where) + ": components do not sum to 1");
  }
}

double sum_of(std::span<const double> values) {
  return std::accumulate(values.begin(), values.end(), 0.0);
}

}  // namespace

Typology::Typology(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.size() < 2) {
    throw ValidationError("typology needs at least two categories");
  }
  std::unordered_set<std::string> seen;
  for (const auto& label : labels_) {
    if (label.empty()) throw ValidationError("typology: empty category label");
    if (!seen.insert(label).second) {
      throw ValidationError("typology: duplicate category label '" + label + "'");
    }
  }
}

Typology Typology::numbered(std::size_t j) {
  std::vector<std::string> labels;
  labels.reserve(j);
  for (std::size_t k = 1; k <= j; ++k) labels.push_back(std::to_string(k));
  return Typology(std::move(labels));
}

CountVector::CountVector(std::vector<std::int64_t> counts) : counts_(std::move(counts)) {
  for (auto c : counts_) {
    if (c < 0) throw ValidationError("count vector: negative count");
    total_ += c;
  }
}

CountVector CountVector::zeros(std::size_t j) {
  return CountVector(std::vector<std::int64_t>(j, 0));
}

CountVector CountVector::operator+(const CountVector& other) const {
  require_same_size(size(), other.size(), "count sum");
  std::vector<std::int64_t> out(counts_);
  for (std::size_t j = 0; j < out.size(); ++j) out[j] += other.counts_[j];
  return CountVector(std::move(out));
}

CountVector CountVector::operator-(const CountVector& other) const {
  require_same_size(size(), other.size(), "count difference");
  std::vector<std::int64_t> out(counts_);
  for (std::size_t j = 0; j < out.size(); ++j) out[j] -= other.counts_[j];
  return CountVector(std::move(out));
}

DirichletParams::DirichletParams(std::vector<double> alpha)
    : DirichletParams(alpha, sum_of(alpha)) {}

DirichletParams::DirichletParams(std::vector<double> alpha, double alpha_plus)
    : alpha_(std::move(alpha)), alpha_plus_(alpha_plus) {
  if (alpha_.size() < 2) {
    throw ValidationError("Dirichlet parameters need at least two components");
  }
  for (double a : alpha_) {
    if (!(a > 0.0) || !std::isfinite(a)) {
      throw ValidationError("Dirichlet parameters must be finite and strictly positive");
    }
  }
  const double summed = sum_of(alpha_);
  const double slack = 4.0 * std::numeric_limits<double>::epsilon() *
                       static_cast<double>(alpha_.size()) * summed;
  if (!std::isfinite(alpha_plus_) || std::abs(alpha_plus_ - summed) > slack) {
    throw ValidationError("Dirichlet alpha_plus disagrees with the sum of alpha");
  }
}

std::string_view to_string(PriorFamily family) noexcept {
  switch (family) {
    case PriorFamily::perks: return "perks";
    case PriorFamily::jeffreys: return "jeffreys";
    case PriorFamily::laplace: return "laplace";
    case PriorFamily::haldane: return "haldane";
  }
  return "perks";
}

PriorFamily parse_prior_family(std::string_view name) {
  for (auto family : {PriorFamily::perks, PriorFamily::jeffreys, PriorFamily::laplace,
                      PriorFamily::haldane}) {
    if (name == to_string(family)) return family;
  }
  throw ValidationError("unknown prior family '" + std::string(name) + "'");
}

double prior_concentration(PriorFamily family, std::size_t j) {
  if (j < 2) throw ValidationError("prior needs at least two categories");
  switch (family) {
    case PriorFamily::perks: return 1.0 / static_cast<double>(j);
    case PriorFamily::jeffreys: return 0.5;
    case PriorFamily::laplace: return 1.0;
    case PriorFamily::haldane: return 0.0;
  }
  throw ValidationError("unknown prior family");
}

DirichletParams perks_prior(const Typology& typology) {
  const std::size_t j = typology.size();
  return DirichletParams(std::vector<double>(j, prior_concentration(PriorFamily::perks, j)),
                         1.0);
}

DirichletParams prior_for(PriorFamily family, const Typology& typology) {
  if (family == PriorFamily::perks) return perks_prior(typology);
  if (family == PriorFamily::haldane) {
    throw ValidationError("the Haldane prior is improper and has no density");
  }
  const std::size_t j = typology.size();
  const double c = prior_concentration(family, j);
  return DirichletParams(std::vector<double>(j, c), c * static_cast<double>(j));
}

DirichletParams posterior_update(const DirichletParams& prior, const CountVector& data) {
  require_same_size(prior.size(), data.size(), "posterior_update");
  std::vector<double> alpha(prior.alpha().begin(), prior.alpha().end());
  for (std::size_t j = 0; j < alpha.size(); ++j) alpha[j] += static_cast<double>(data[j]);
  return DirichletParams(std::move(alpha),
                         prior.alpha_plus() + static_cast<double>(data.total()));
}

DirichletParams posterior_from_counts(PriorFamily family, const CountVector& data) {
  const std::size_t j = data.size();
  const double c = prior_concentration(family, j);
  std::vector<double> alpha(j);
  for (std::size_t k = 0; k < j; ++k) {
    alpha[k] = c + static_cast<double>(data[k]);
    if (!(alpha[k] > 0.0)) {
      throw ValidationError(std::string("the ") + std::string(to_string(family)) +
                            " prior leaves category " + std::to_string(k + 1) +
                            " with zero concentration; it was never observed");
    }
  }
  const double plus = (family == PriorFamily::perks ? 1.0 : c * static_cast<double>(j)) +
                      static_cast<double>(data.total());
  return DirichletParams(std::move(alpha), plus);
}

double log_multinomial_coefficient(const CountVector& data) {
  double out = log_factorial(data.total());
  for (auto c : data.counts()) out -= log_factorial(c);
  return out;
}

double log_multinomial_pmf(std::span<const double> theta, const CountVector& data) {
  require_same_size(theta.size(), data.size(), "log_multinomial_pmf");
  require_simplex(theta, false, "log_multinomial_pmf");
  double out = log_multinomial_coefficient(data);
  for (std::size_t j = 0; j < theta.size(); ++j) {
    if (data[j] == 0) continue;  // 0 * log 0 := 0
    if (theta[j] == 0.0) return -kInf;
    out += static_cast<double>(data[j]) * std::log(theta[j]);
  }
  return out;
}

double log_dirichlet_pdf(const DirichletParams& params, std::span<const double> theta) {
  require_same_size(params.size(), theta.size(), "log_dirichlet_pdf");
  for (std::size_t j = 0; j < theta.size(); ++j) {
    if (theta[j] == 0.0 && params[j] < 1.0) {
      throw ValidationError("log_dirichlet_pdf: density is infinite on this boundary");
    }
  }
  require_simplex(theta, true, "log_dirichlet_pdf");
  double out = log_gamma(params.alpha_plus());
  for (std::size_t j = 0; j < theta.size(); ++j) {
    out += (params[j] - 1.0) * std::log(theta[j]) - log_gamma(params[j]);
  }
  return out;
}

BetaMarginal marginal_beta(const DirichletParams& params, std::size_t j) {
  if (j >= params.size()) {
    throw ValidationError("marginal_beta: category index " + std::to_string(j) +
                          " out of range");
  }
  BetaMarginal m;
  m.a = params[j];
  m.b = params.alpha_plus() - params[j];
  const double total = params.alpha_plus();
  m.mean = m.a / total;
  m.variance = m.a * m.b / (total * total * (total + 1.0));
  return m;
}

double log_beta_pdf(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw ValidationError("log_beta_pdf: shapes must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw ValidationError("log_beta_pdf: x outside [0, 1]");
  const double log_norm = log_gamma(a + b) - log_gamma(a) - log_gamma(b);
  auto edge = [&](double shape) {
    if (shape < 1.0) return kInf;
    if (shape > 1.0) return -kInf;
    return log_norm;
  };
  if (x == 0.0) return edge(a);
  if (x == 1.0) return edge(b);
  return log_norm + (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x);
}

MeanTable::MeanTable(std::size_t categories, std::size_t classes)
    : categories_(categories), classes_(classes), values_(categories * classes, 0.0) {}

MeanTable posterior_mean_table(std::span<const DirichletParams> posteriors) {
  if (posteriors.empty()) throw ValidationError("posterior_mean_table: empty model");
  const std::size_t j = posteriors.front().size();
  MeanTable table(j, posteriors.size());
  for (std::size_t i = 0; i < posteriors.size(); ++i) {
    require_same_size(posteriors[i].size(), j, "posterior_mean_table");
    for (std::size_t k = 0; k < j; ++k) {
      table(k, i) = posteriors[i][k] / posteriors[i].alpha_plus();
    }
  }
  return table;
}

}  // namespace dirimult
