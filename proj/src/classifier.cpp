#include "dirimult/classifier.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "dirimult/error.hpp"
#include "dirimult/special_functions.hpp"

namespace dirimult {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kPriorSumTolerance = 1e-12;

}  // namespace

ClassPrior::ClassPrior(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw ValidationError("class prior: no classes");
  double sum = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("class prior: entry outside [0, 1]");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kPriorSumTolerance) {
    throw ValidationError("class prior: probabilities do not sum to 1");
  }
}

ClassPrior ClassPrior::uniform(std::size_t classes) {
  if (classes == 0) throw ValidationError("class prior: no classes");
  return ClassPrior(std::vector<double>(classes, 1.0 / static_cast<double>(classes)));
}

FittedModel::FittedModel(Typology typology, std::vector<std::string> class_labels,
                         std::vector<DirichletParams> posteriors, ClassPrior prior,
                         PriorFamily family)
    : typology_(std::move(typology)),
      class_labels_(std::move(class_labels)),
      posteriors_(std::move(posteriors)),
      prior_(std::move(prior)),
      family_(family) {
  if (class_labels_.size() < 2) throw ValidationError("model needs at least two classes");
  std::unordered_set<std::string> seen;
  for (const auto& label : class_labels_) {
    if (label.empty()) throw ValidationError("model: empty class label");
    if (!seen.insert(label).second) {
      throw ValidationError("model: duplicate class label '" + label + "'");
    }
  }
  if (posteriors_.size() != class_labels_.size() || prior_.size() != class_labels_.size()) {
    throw ValidationError("model: class labels, posteriors and prior differ in length");
  }
  for (const auto& p : posteriors_) {
    if (p.size() != typology_.size()) {
      throw ValidationError("model: posterior dimension does not match the typology");
    }
  }
}

FittedModel fit_model(const Typology& typology, std::vector<std::string> class_labels,
                      std::span<const CountVector> class_counts, ClassPrior prior,
                      PriorFamily family) {
  if (class_counts.size() != class_labels.size()) {
    throw ValidationError("fit_model: one count vector per class is required");
  }
  std::vector<DirichletParams> posteriors;
  posteriors.reserve(class_counts.size());
  for (const auto& counts : class_counts) {
    if (counts.size() != typology.size()) {
      throw ValidationError("fit_model: count vector does not match the typology");
    }
    posteriors.push_back(posterior_from_counts(family, counts));
  }
  return FittedModel(typology, std::move(class_labels), std::move(posteriors),
                     std::move(prior), family);
}

double log_predictive_likelihood(const DirichletParams& posterior, const CountVector& query) {
  if (posterior.size() != query.size()) {
    throw ValidationError("log_predictive_likelihood: dimension mismatch (" +
                          std::to_string(posterior.size()) + " vs " +
                          std::to_string(query.size()) + ")");
  }
  if (query.total() < 1) {
    throw ValidationError("log_predictive_likelihood: zero-count query carries no evidence");
  }
  const double n = static_cast<double>(query.total());
  double out = log_multinomial_coefficient(query) + log_gamma(posterior.alpha_plus()) -
               log_gamma(posterior.alpha_plus() + n);
  for (std::size_t j = 0; j < query.size(); ++j) {
    if (query[j] == 0) continue;
    out += log_gamma(posterior[j] + static_cast<double>(query[j])) - log_gamma(posterior[j]);
  }
  return out;
}

ClassPrior empirical_class_prior(std::span<const std::string> site_labels,
                                 std::span<const std::string> classes) {
  if (site_labels.empty()) throw ValidationError("empirical_class_prior: no sites");
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < classes.size(); ++i) index.emplace(classes[i], i);
  std::vector<std::size_t> tally(classes.size(), 0);
  for (const auto& label : site_labels) {
    auto it = index.find(label);
    if (it == index.end()) {
      throw ValidationError("empirical_class_prior: unknown class '" + label + "'");
    }
    ++tally[it->second];
  }
  const double total = static_cast<double>(site_labels.size());
  std::vector<double> probs(classes.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    probs[i] = static_cast<double>(tally[i]) / total;
  }
  return ClassPrior(std::move(probs));
}

Classification classify(const FittedModel& model, const CountVector& query) {
  const std::size_t classes = model.num_classes();
  Classification out;
  out.log_likelihoods.resize(classes);
  out.log_unnormalized.resize(classes);
  std::size_t supported = 0;
  for (std::size_t i = 0; i < classes; ++i) {
    out.log_likelihoods[i] = log_predictive_likelihood(model.posteriors()[i], query);
    const double prior = model.prior()[i];
    if (prior > 0.0) {
      ++supported;
      out.log_unnormalized[i] = out.log_likelihoods[i] + std::log(prior);
    } else {
      out.log_unnormalized[i] = kNegInf;
    }
  }
  if (supported == 0) throw ValidationError("classify: every class has zero prior weight");
  if (supported == 1) {
    out.warnings.emplace_back("only one class has positive prior weight; the result is forced");
  }

  const double log_norm = log_sum_exp(out.log_unnormalized);
  if (!std::isfinite(log_norm)) {
    throw InvariantViolation("classify: normalizing constant is not finite");
  }
  out.probs.resize(classes);
  for (std::size_t i = 0; i < classes; ++i) {
    out.probs[i] = std::exp(out.log_unnormalized[i] - log_norm);
  }
  for (std::size_t i = 1; i < classes; ++i) {
    if (out.probs[i] > out.probs[out.argmax]) out.argmax = i;
  }
  out.argmax_label = model.class_labels()[out.argmax];
  return out;
}

std::vector<BatchEntry> classify_batch(const FittedModel& model,
                                       std::span<const CountVector> queries) {
  std::vector<BatchEntry> out;
  out.reserve(queries.size());
  for (const auto& query : queries) {
    BatchEntry entry;
    if (query.size() != model.typology().size()) {
      entry.flag = "dimension mismatch: query has " + std::to_string(query.size()) +
                   " categories, model has " + std::to_string(model.typology().size());
    } else if (query.total() == 0) {
      entry.flag = kNoEvidenceFlag;
    } else {
      entry.result = classify(model, query);
    }
    out.push_back(std::move(entry));
  }
  return out;
}

}  // namespace dirimult
