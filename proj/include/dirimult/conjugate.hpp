#pragma once

// Dirichlet-multinomial conjugate machinery: category sets, count vectors,
// Dirichlet parameters, the non-informative prior families, the posterior
// update and the marginal Beta summaries of a Dirichlet.
//
// Category indices are 0-based throughout the C++ API.

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dirimult {

/// Absolute tolerance on |sum(theta) - 1| for simplex membership.
inline constexpr double kSimplexTolerance = 1e-12;

/// Ordered, fixed set of J >= 2 distinct category identifiers.
class Typology {
 public:
  explicit Typology(std::vector<std::string> labels);

  /// Categories labelled "1".."J".
  static Typology numbered(std::size_t j);

  std::size_t size() const noexcept { return labels_.size(); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::string& label(std::size_t j) const { return labels_.at(j); }

  bool operator==(const Typology&) const = default;

 private:
  std::vector<std::string> labels_;
};

/// Non-negative integer tallies over the categories of a typology.
class CountVector {
 public:
  CountVector() = default;
  explicit CountVector(std::vector<std::int64_t> counts);
  CountVector(std::initializer_list<std::int64_t> counts)
      : CountVector(std::vector<std::int64_t>(counts)) {}

  /// All-zero vector of length j.
  static CountVector zeros(std::size_t j);

  std::size_t size() const noexcept { return counts_.size(); }
  std::int64_t total() const noexcept { return total_; }
  std::int64_t operator[](std::size_t j) const { return counts_.at(j); }
  std::span<const std::int64_t> counts() const noexcept { return counts_; }

  /// Componentwise sum; throws ValidationError on length mismatch.
  CountVector operator+(const CountVector& other) const;
  /// Componentwise difference; throws ValidationError if any entry would go negative.
  CountVector operator-(const CountVector& other) const;

  bool operator==(const CountVector&) const = default;

 private:
  std::vector<std::int64_t> counts_;
  std::int64_t total_ = 0;
};

/// Strictly positive Dirichlet concentration vector with its maintained sum.
class DirichletParams {
 public:
  explicit DirichletParams(std::vector<double> alpha);
  /// Uses the supplied total instead of re-summing; it must agree with the
  /// sum of alpha to rounding.
  DirichletParams(std::vector<double> alpha, double alpha_plus);

  std::size_t size() const noexcept { return alpha_.size(); }
  double operator[](std::size_t j) const { return alpha_.at(j); }
  std::span<const double> alpha() const noexcept { return alpha_; }
  double alpha_plus() const noexcept { return alpha_plus_; }

  bool operator==(const DirichletParams&) const = default;

 private:
  std::vector<double> alpha_;
  double alpha_plus_ = 0.0;
};

/// Marginal Be(a, b) of one Dirichlet component.
struct BetaMarginal {
  double a = 0.0;
  double b = 0.0;
  double mean = 0.0;
  double variance = 0.0;
};

/// Non-informative symmetric Dirichlet priors. Perks is the default.
enum class PriorFamily { perks, jeffreys, laplace, haldane };

std::string_view to_string(PriorFamily family) noexcept;
PriorFamily parse_prior_family(std::string_view name);

/// Per-category concentration of the symmetric prior: 1/J for Perks,
/// 1/2 for Jeffreys, 1 for Bayes-Laplace and 0 for the improper Haldane.
double prior_concentration(PriorFamily family, std::size_t j);

/// Dir(1/J, ..., 1/J) with alpha_plus exactly 1.
DirichletParams perks_prior(const Typology& typology);

/// Proper prior of the given family. Haldane has no proper form and is rejected.
DirichletParams prior_for(PriorFamily family, const Typology& typology);

/// Conjugate update: alpha_j + y_j, alpha_plus + n.
DirichletParams posterior_update(const DirichletParams& prior, const CountVector& data);

/// Posterior straight from a prior family and a count vector. This is the
/// only route to a Haldane posterior, which is valid only when every
/// category has been observed.
DirichletParams posterior_from_counts(PriorFamily family, const CountVector& data);

/// log n! - sum log y_j!
double log_multinomial_coefficient(const CountVector& data);

/// log Mn(y | theta, n). Categories with theta_j = 0 and y_j = 0 contribute 0;
/// theta_j = 0 with y_j > 0 gives -inf.
double log_multinomial_pmf(std::span<const double> theta, const CountVector& data);

/// log Dir(theta | alpha) on the open simplex.
double log_dirichlet_pdf(const DirichletParams& params, std::span<const double> theta);

/// Be(alpha_j, alpha_plus - alpha_j) with its mean and variance.
BetaMarginal marginal_beta(const DirichletParams& params, std::size_t j);

/// log Be(x | a, b) for x in [0, 1]; +inf at a boundary where the density diverges.
double log_beta_pdf(double a, double b, double x);

/// Posterior means, one column per class, one row per category.
class MeanTable {
 public:
  MeanTable(std::size_t categories, std::size_t classes);

  std::size_t categories() const noexcept { return categories_; }
  std::size_t classes() const noexcept { return classes_; }
  double operator()(std::size_t category, std::size_t klass) const {
    return values_.at(category * classes_ + klass);
  }
  double& operator()(std::size_t category, std::size_t klass) {
    return values_.at(category * classes_ + klass);
  }

 private:
  std::size_t categories_;
  std::size_t classes_;
  std::vector<double> values_;
};

MeanTable posterior_mean_table(std::span<const DirichletParams> posteriors);

}  // namespace dirimult
