#pragma once

// Training/query CSV ingestion, the site roster, and the text model format.
//
// Training CSV:  site_id,class,<type_1>,...,<type_J>
// Query CSV:     site_id,<type_1>,...,<type_J>
// Roster CSV:    site_id,class
//
// Lines starting with '#' are comments. Before the header, the comments
// `# classes: a,b,c`, `# typology: t1,...,tJ` and `# class_prior: p1,...,pI`
// are directives. Fields may be double-quoted; files are UTF-8.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dirimult/classifier.hpp"
#include "dirimult/conjugate.hpp"
#include "dirimult/error.hpp"

namespace dirimult {

/// A validation error tied to a line (1-based) of the input text.
class ParseError : public ValidationError {
 public:
  ParseError(std::size_t line, const std::string& message);
  std::size_t line() const noexcept { return line_; }
  /// The message without the line prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::size_t line_;
  std::string detail_;
};

struct TrainingRecord {
  std::string site_id;
  std::string class_label;
  CountVector counts;
};

struct QueryRecord {
  std::string site_id;
  CountVector counts;
};

struct RosterEntry {
  std::string site_id;
  std::string class_label;
};

struct Corpus {
  Typology typology;
  std::vector<std::string> classes;
  std::vector<TrainingRecord> records;
  /// Values of a `# class_prior:` directive, in class order.
  std::optional<std::vector<double>> class_prior;

  std::size_t class_index(std::string_view label) const;
  /// Pooled counts of every class, in class order.
  std::vector<CountVector> class_totals() const;
  std::vector<std::string> record_labels() const;
};

struct QuerySet {
  std::vector<std::string> type_labels;
  std::vector<QueryRecord> records;
};

Corpus parse_training_csv(std::string_view text);
QuerySet parse_query_csv(std::string_view text);
/// Site to class assignments. Repeated site ids are kept: a roster lists
/// dated levels, and a level may be attributed to more than one class.
std::vector<RosterEntry> parse_site_roster(std::string_view text);

inline constexpr int kModelFormatVersion = 1;

std::string serialize_model(const FittedModel& model);
FittedModel parse_model(std::string_view text);

/// "k/d" in lowest terms when value * d is an integer to rounding, otherwise
/// nullopt.
std::optional<std::string> format_rational(double value, long long denominator);

/// Exact-fraction denominator of the prior family's concentration, when there is one.
long long prior_denominator(PriorFamily family, std::size_t categories);

/// "Dir(a_1, ..., a_J)" with fractions where the values are exact.
std::string format_dirichlet(const DirichletParams& params, PriorFamily family);

/// Splits one CSV line, honouring double quotes. Exposed for the CLI and tests.
std::vector<std::string> split_csv_line(std::string_view line);

/// Quotes a field when it contains a comma, quote or surrounding whitespace.
std::string csv_escape(std::string_view field);

std::string read_file(const std::string& path);

}  // namespace dirimult
