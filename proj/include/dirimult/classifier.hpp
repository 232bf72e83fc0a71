#pragma once

// Posterior predictive classification of count vectors: each class holds a
// Dirichlet posterior over category proportions, a query is scored by its
// Dirichlet-multinomial (Polya) likelihood under every class, and Bayes'
// rule with the class prior turns the scores into a distribution.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dirimult/conjugate.hpp"

namespace dirimult {

/// Probability of each class before looking at a query. Sums to 1 within 1e-12.
class ClassPrior {
 public:
  explicit ClassPrior(std::vector<double> probs);

  static ClassPrior uniform(std::size_t classes);

  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_.at(i); }
  std::span<const double> probs() const noexcept { return probs_; }

  bool operator==(const ClassPrior&) const = default;

 private:
  std::vector<double> probs_;
};

/// Per-class posteriors over a shared typology, plus the class prior.
class FittedModel {
 public:
  FittedModel(Typology typology, std::vector<std::string> class_labels,
              std::vector<DirichletParams> posteriors, ClassPrior prior,
              PriorFamily family = PriorFamily::perks);

  const Typology& typology() const noexcept { return typology_; }
  const std::vector<std::string>& class_labels() const noexcept { return class_labels_; }
  const std::vector<DirichletParams>& posteriors() const noexcept { return posteriors_; }
  const ClassPrior& prior() const noexcept { return prior_; }
  /// Prior family the posteriors were built from; informational.
  PriorFamily family() const noexcept { return family_; }
  std::size_t num_classes() const noexcept { return class_labels_.size(); }

  bool operator==(const FittedModel&) const = default;

 private:
  Typology typology_;
  std::vector<std::string> class_labels_;
  std::vector<DirichletParams> posteriors_;
  ClassPrior prior_;
  PriorFamily family_;
};

/// Builds a model from per-class pooled counts under a prior family.
FittedModel fit_model(const Typology& typology, std::vector<std::string> class_labels,
                      std::span<const CountVector> class_counts, ClassPrior prior,
                      PriorFamily family = PriorFamily::perks);

struct Classification {
  std::vector<double> log_likelihoods;
  std::vector<double> log_unnormalized;
  std::vector<double> probs;
  std::size_t argmax = 0;
  std::string argmax_label;
  std::vector<std::string> warnings;
};

/// One element of a batch: either a classification or the reason there is none.
struct BatchEntry {
  std::optional<Classification> result;
  std::string flag;

  bool ok() const noexcept { return result.has_value(); }
};

inline constexpr const char* kNoEvidenceFlag = "no evidence: zero-count query";

/// log P(y* | alpha) for the Dirichlet-multinomial, including the
/// multinomial coefficient. Rejects zero-total queries.
double log_predictive_likelihood(const DirichletParams& posterior, const CountVector& query);

/// Class proportions among labelled sites, in the order of `classes`.
ClassPrior empirical_class_prior(std::span<const std::string> site_labels,
                                 std::span<const std::string> classes);

Classification classify(const FittedModel& model, const CountVector& query);

/// Classifies each query in order. Zero-count and mis-sized queries are
/// flagged instead of aborting the batch.
std::vector<BatchEntry> classify_batch(const FittedModel& model,
                                       std::span<const CountVector> queries);

}  // namespace dirimult
