#include "dirimult/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace dirimult {

namespace {

struct Line {
  std::size_t number;
  std::string_view text;
};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

// Splits into lines, strips a UTF-8 BOM and trailing '\r', drops blank lines.
std::vector<Line> split_lines(std::string_view text) {
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
  std::vector<Line> lines;
  std::size_t number = 0;
  while (!text.empty()) {
    ++number;
    const auto end = text.find('\n');
    std::string_view line = text.substr(0, end);
    text = end == std::string_view::npos ? std::string_view{} : text.substr(end + 1);
    if (line.ends_with('\r')) line.remove_suffix(1);
    if (trim(line).empty()) continue;
    lines.push_back({number, line});
  }
  return lines;
}

std::int64_t parse_count(std::string_view field, std::size_t line, const std::string& column) {
  const std::string_view s = trim(field);
  std::int64_t value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ParseError(line, "column '" + column + "': count '" + std::string(s) +
                               "' is not an integer");
  }
  if (value < 0) {
    throw ParseError(line, "column '" + column + "': count " + std::to_string(value) +
                               " is negative");
  }
  return value;
}

double parse_real(std::string_view field, std::size_t line, const std::string& what) {
  const std::string_view s = trim(field);
  const auto slash = s.find('/');
  auto number = [&](std::string_view part) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
    if (part.empty() || ec != std::errc{} || ptr != part.data() + part.size() ||
        !std::isfinite(value)) {
      throw ParseError(line, what + ": '" + std::string(s) + "' is not a number");
    }
    return value;
  };
  if (slash == std::string_view::npos) return number(s);
  const double den = number(s.substr(slash + 1));
  if (den == 0.0) throw ParseError(line, what + ": zero denominator in '" + std::string(s) + "'");
  return number(s.substr(0, slash)) / den;
}

struct Directives {
  std::optional<std::vector<std::string>> classes;
  std::optional<std::vector<std::string>> typology;
  std::optional<std::vector<std::string>> class_prior;
  std::size_t class_prior_line = 0;
};

// Consumes leading comment lines; returns the index of the header line.
std::size_t read_preamble(const std::vector<Line>& lines, Directives& directives) {
  std::size_t i = 0;
  for (; i < lines.size(); ++i) {
    std::string_view body = trim(lines[i].text);
    if (!body.starts_with('#')) break;
    body = trim(body.substr(1));
    const auto colon = body.find(':');
    if (colon == std::string_view::npos) continue;
    const std::string_view key = trim(body.substr(0, colon));
    const std::string_view value = trim(body.substr(colon + 1));
    auto fields = [&] {
      auto parts = split_csv_line(value);
      for (const auto& p : parts) {
        if (p.empty()) throw ParseError(lines[i].number, "empty entry in '" + std::string(key) + "' directive");
      }
      return parts;
    };
    if (key == "classes") {
      directives.classes = fields();
    } else if (key == "typology") {
      directives.typology = fields();
    } else if (key == "class_prior") {
      directives.class_prior = fields();
      directives.class_prior_line = lines[i].number;
    }
  }
  return i;
}

bool is_comment(const Line& line) { return trim(line.text).starts_with('#'); }

std::vector<std::string> type_columns(const std::vector<std::string>& header, std::size_t skip,
                                      std::size_t line) {
  std::vector<std::string> labels(header.begin() + static_cast<std::ptrdiff_t>(skip), header.end());
  for (const auto& label : labels) {
    if (label.empty()) throw ParseError(line, "empty category name in header");
  }
  return labels;
}

Typology make_typology(std::vector<std::string> labels, std::size_t line) {
  try {
    return Typology(std::move(labels));
  } catch (const ValidationError& e) {
    throw ParseError(line, e.what());
  }
}

void check_unique_site(std::unordered_set<std::string>& seen, const std::string& site,
                       std::size_t line) {
  if (site.empty()) throw ParseError(line, "empty site_id");
  if (!seen.insert(site).second) throw ParseError(line, "duplicate site_id '" + site + "'");
}

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string join_csv(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += csv_escape(fields[i]);
  }
  return out;
}

}  // namespace

ParseError::ParseError(std::size_t line, const std::string& message)
    : ValidationError("line " + std::to_string(line) + ": " + message),
      line_(line),
      detail_(message) {}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t i = 0;
  while (true) {
    std::string field;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i < line.size() && line[i] == '"') {
      ++i;
      bool closed = false;
      while (i < line.size()) {
        if (line[i] == '"') {
          if (i + 1 < line.size() && line[i + 1] == '"') {
            field += '"';
            i += 2;
            continue;
          }
          ++i;
          closed = true;
          break;
        }
        field += line[i++];
      }
      if (!closed) throw ValidationError("unterminated quoted field");
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
      if (i < line.size() && line[i] != ',') {
        throw ValidationError("unexpected text after quoted field");
      }
    } else {
      const auto end = line.find(',', i);
      field = std::string(trim(line.substr(i, end == std::string_view::npos ? end : end - i)));
      i = end == std::string_view::npos ? line.size() : end;
    }
    fields.push_back(std::move(field));
    if (i >= line.size()) break;
    ++i;  // comma
    if (i == line.size()) {
      fields.emplace_back();
      break;
    }
  }
  return fields;
}

std::string csv_escape(std::string_view field) {
  const bool needs_quotes = field.find_first_of(",\"") != std::string_view::npos ||
                            (!field.empty() && (field.front() == ' ' || field.back() == ' ' ||
                                                field.front() == '\t' || field.back() == '\t'));
  if (!needs_quotes) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::size_t Corpus::class_index(std::string_view label) const {
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (classes[i] == label) return i;
  }
  throw ValidationError("unknown class '" + std::string(label) + "'");
}

std::vector<CountVector> Corpus::class_totals() const {
  std::vector<CountVector> totals(classes.size(), CountVector::zeros(typology.size()));
  for (const auto& record : records) {
    auto& slot = totals[class_index(record.class_label)];
    slot = slot + record.counts;
  }
  return totals;
}

std::vector<std::string> Corpus::record_labels() const {
  std::vector<std::string> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.class_label);
  return out;
}

namespace {

std::vector<std::string> split_fields(const Line& line) {
  try {
    return split_csv_line(line.text);
  } catch (const ValidationError& e) {
    throw ParseError(line.number, e.what());
  }
}

}  // namespace

Corpus parse_training_csv(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw ValidationError("training file is empty");
  Directives directives;
  const std::size_t header_at = read_preamble(lines, directives);
  if (header_at == lines.size()) throw ValidationError("training file has no header row");

  const Line& header_line = lines[header_at];
  const auto header = split_fields(header_line);
  if (header.size() < 4 || header[0] != "site_id" || header[1] != "class") {
    throw ParseError(header_line.number,
                     "header must be 'site_id,class,<type_1>,...,<type_J>' with J >= 2");
  }
  auto labels = type_columns(header, 2, header_line.number);
  if (directives.typology && *directives.typology != labels) {
    throw ParseError(header_line.number, "header columns disagree with the typology directive");
  }
  Typology typology = make_typology(std::move(labels), header_line.number);

  std::vector<std::string> classes;
  const bool pinned = directives.classes.has_value();
  if (pinned) {
    std::unordered_set<std::string> seen;
    for (const auto& c : *directives.classes) {
      if (!seen.insert(c).second) throw ValidationError("duplicate class '" + c + "' in classes directive");
    }
    classes = *directives.classes;
  }

  std::vector<TrainingRecord> records;
  std::unordered_set<std::string> sites;
  for (std::size_t i = header_at + 1; i < lines.size(); ++i) {
    const Line& line = lines[i];
    if (is_comment(line)) continue;
    auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw ParseError(line.number, "expected " + std::to_string(header.size()) +
                                        " fields, found " + std::to_string(fields.size()));
    }
    check_unique_site(sites, fields[0], line.number);
    if (fields[1].empty()) throw ParseError(line.number, "empty class label");
    const bool known = std::find(classes.begin(), classes.end(), fields[1]) != classes.end();
    if (!known) {
      if (pinned) {
        throw ParseError(line.number, "class '" + fields[1] + "' is not in the classes directive");
      }
      classes.push_back(fields[1]);
    }
    std::vector<std::int64_t> counts(typology.size());
    for (std::size_t j = 0; j < counts.size(); ++j) {
      counts[j] = parse_count(fields[j + 2], line.number, header[j + 2]);
    }
    records.push_back({std::move(fields[0]), std::move(fields[1]), CountVector(std::move(counts))});
  }
  if (records.empty()) throw ValidationError("training file has no records");

  Corpus corpus{std::move(typology), std::move(classes), std::move(records), std::nullopt};
  if (directives.class_prior) {
    const auto& raw = *directives.class_prior;
    if (raw.size() != corpus.classes.size()) {
      throw ParseError(directives.class_prior_line,
                       "class_prior directive has " + std::to_string(raw.size()) +
                           " values for " + std::to_string(corpus.classes.size()) + " classes");
    }
    std::vector<double> values;
    for (const auto& v : raw) values.push_back(parse_real(v, directives.class_prior_line, "class_prior"));
    corpus.class_prior = std::move(values);
  }
  return corpus;
}

QuerySet parse_query_csv(std::string_view text) {
  const auto lines = split_lines(text);
  Directives directives;
  const std::size_t header_at = read_preamble(lines, directives);
  if (header_at == lines.size()) return {};  // empty query file

  const Line& header_line = lines[header_at];
  const auto header = split_fields(header_line);
  if (header.size() < 3 || header[0] != "site_id") {
    throw ParseError(header_line.number, "header must be 'site_id,<type_1>,...,<type_J>'");
  }
  QuerySet out;
  out.type_labels = type_columns(header, 1, header_line.number);
  std::unordered_set<std::string> sites;
  for (std::size_t i = header_at + 1; i < lines.size(); ++i) {
    const Line& line = lines[i];
    if (is_comment(line)) continue;
    auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw ParseError(line.number, "expected " + std::to_string(header.size()) +
                                        " fields, found " + std::to_string(fields.size()));
    }
    check_unique_site(sites, fields[0], line.number);
    std::vector<std::int64_t> counts(out.type_labels.size());
    for (std::size_t j = 0; j < counts.size(); ++j) {
      counts[j] = parse_count(fields[j + 1], line.number, header[j + 1]);
    }
    out.records.push_back({std::move(fields[0]), CountVector(std::move(counts))});
  }
  return out;
}

std::vector<RosterEntry> parse_site_roster(std::string_view text) {
  const auto lines = split_lines(text);
  Directives directives;
  const std::size_t header_at = read_preamble(lines, directives);
  if (header_at == lines.size()) throw ValidationError("roster file is empty");
  const auto header = split_fields(lines[header_at]);
  if (header.size() != 2 || header[0] != "site_id" || header[1] != "class") {
    throw ParseError(lines[header_at].number, "header must be 'site_id,class'");
  }
  std::vector<RosterEntry> out;
  for (std::size_t i = header_at + 1; i < lines.size(); ++i) {
    if (is_comment(lines[i])) continue;
    auto fields = split_fields(lines[i]);
    if (fields.size() != 2) throw ParseError(lines[i].number, "expected 2 fields");
    if (fields[0].empty() || fields[1].empty()) {
      throw ParseError(lines[i].number, "empty site_id or class");
    }
    out.push_back({std::move(fields[0]), std::move(fields[1])});
  }
  if (out.empty()) throw ValidationError("roster file has no entries");
  return out;
}

// Model file layout:
//
//   format_version: 1
//   prior_family: perks
//   typology: 1,2,3
//   classes: A,B
//
//   [class]
//   label: A
//   prior: 0.5
//   alpha_plus: 4
//   alpha: 1.3333333333333333,2.333...,0.333...
//
// Real values are written with 17 significant digits; the parser also
// accepts fractions such as 43/7.
std::string serialize_model(const FittedModel& model) {
  std::ostringstream out;
  out << "# dirimult model\n";
  out << "format_version: " << kModelFormatVersion << '\n';
  out << "prior_family: " << to_string(model.family()) << '\n';
  out << "typology: " << join_csv(model.typology().labels()) << '\n';
  out << "classes: " << join_csv(model.class_labels()) << '\n';
  for (std::size_t i = 0; i < model.num_classes(); ++i) {
    const auto& post = model.posteriors()[i];
    out << "\n[class]\n";
    out << "label: " << csv_escape(model.class_labels()[i]) << '\n';
    out << "prior: " << format_double(model.prior()[i]) << '\n';
    out << "alpha_plus: " << format_double(post.alpha_plus()) << '\n';
    out << "alpha: ";
    for (std::size_t j = 0; j < post.size(); ++j) {
      if (j) out << ',';
      out << format_double(post[j]);
    }
    out << '\n';
  }
  return out.str();
}

FittedModel parse_model(std::string_view text) {
  const auto lines = split_lines(text);
  std::map<std::string, std::pair<std::string, std::size_t>> header;
  struct Section {
    std::size_t line;
    std::map<std::string, std::pair<std::string, std::size_t>> fields;
  };
  std::vector<Section> sections;

  for (const auto& line : lines) {
    const std::string_view body = trim(line.text);
    if (body.starts_with('#')) continue;
    if (body == "[class]") {
      sections.push_back({line.number, {}});
      continue;
    }
    if (body.starts_with('[')) throw ParseError(line.number, "unknown section " + std::string(body));
    const auto colon = body.find(':');
    if (colon == std::string_view::npos) throw ParseError(line.number, "expected 'key: value'");
    std::string key(trim(body.substr(0, colon)));
    std::string value(trim(body.substr(colon + 1)));
    auto& target = sections.empty() ? header : sections.back().fields;
    if (!target.emplace(key, std::make_pair(std::move(value), line.number)).second) {
      throw ParseError(line.number, "duplicate key '" + key + "'");
    }
  }

  auto require = [](const auto& fields, const std::string& key, std::size_t line) {
    auto it = fields.find(key);
    if (it == fields.end()) throw ParseError(line, "missing '" + key + "'");
    return it->second;
  };
  auto split = [](const std::pair<std::string, std::size_t>& field) {
    try {
      return split_csv_line(field.first);
    } catch (const ValidationError& e) {
      throw ParseError(field.second, e.what());
    }
  };

  const auto version = require(header, "format_version", 1);
  if (version.first != std::to_string(kModelFormatVersion)) {
    throw ParseError(version.second, "unsupported model format_version '" + version.first +
                                         "' (expected " + std::to_string(kModelFormatVersion) + ")");
  }
  PriorFamily family = PriorFamily::perks;
  if (auto it = header.find("prior_family"); it != header.end()) {
    try {
      family = parse_prior_family(it->second.first);
    } catch (const ValidationError& e) {
      throw ParseError(it->second.second, e.what());
    }
  }
  const auto typology_field = require(header, "typology", 1);
  Typology typology = make_typology(split(typology_field), typology_field.second);
  const auto classes_field = require(header, "classes", 1);
  auto class_labels = split(classes_field);
  if (class_labels.empty() || sections.empty()) {
    throw ParseError(classes_field.second, "model has no classes");
  }
  if (sections.size() != class_labels.size()) {
    throw ParseError(classes_field.second, "classes list names " +
                                               std::to_string(class_labels.size()) +
                                               " classes but the file has " +
                                               std::to_string(sections.size()) + " sections");
  }

  std::vector<DirichletParams> posteriors;
  std::vector<double> prior;
  for (std::size_t i = 0; i < sections.size(); ++i) {
    const auto& s = sections[i];
    const auto label = require(s.fields, "label", s.line);
    const auto parsed_label = split(label);
    if (parsed_label.size() != 1 || parsed_label[0] != class_labels[i]) {
      throw ParseError(label.second, "section label does not match the classes list");
    }
    const auto p = require(s.fields, "prior", s.line);
    prior.push_back(parse_real(p.first, p.second, "prior"));
    const auto alpha_field = require(s.fields, "alpha", s.line);
    std::vector<double> alpha;
    for (const auto& v : split(alpha_field)) {
      alpha.push_back(parse_real(v, alpha_field.second, "alpha"));
    }
    if (alpha.size() != typology.size()) {
      throw ParseError(alpha_field.second, "alpha has " + std::to_string(alpha.size()) +
                                               " entries for " + std::to_string(typology.size()) +
                                               " categories");
    }
    try {
      if (auto it = s.fields.find("alpha_plus"); it != s.fields.end()) {
        const double plus = parse_real(it->second.first, it->second.second, "alpha_plus");
        posteriors.emplace_back(std::move(alpha), plus);
      } else {
        posteriors.emplace_back(std::move(alpha));
      }
    } catch (const ParseError&) {
      throw;
    } catch (const ValidationError& e) {
      throw ParseError(alpha_field.second, e.what());
    }
  }
  try {
    return FittedModel(std::move(typology), std::move(class_labels), std::move(posteriors),
                       ClassPrior(std::move(prior)), family);
  } catch (const ParseError&) {
    throw;
  } catch (const ValidationError& e) {
    throw ParseError(classes_field.second, e.what());
  }
}

std::optional<std::string> format_rational(double value, long long denominator) {
  if (denominator <= 0 || !std::isfinite(value)) return std::nullopt;
  const double scaled = value * static_cast<double>(denominator);
  const double rounded = std::round(scaled);
  if (std::abs(scaled - rounded) > 1e-9 * std::max(1.0, std::abs(scaled))) return std::nullopt;
  long long num = static_cast<long long>(rounded);
  long long den = denominator;
  const long long g = std::gcd(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  if (den == 1) return std::to_string(num);
  return std::to_string(num) + "/" + std::to_string(den);
}

long long prior_denominator(PriorFamily family, std::size_t categories) {
  switch (family) {
    case PriorFamily::perks: return static_cast<long long>(categories);
    case PriorFamily::jeffreys: return 2;
    case PriorFamily::laplace:
    case PriorFamily::haldane: return 1;
  }
  return 1;
}

std::string format_dirichlet(const DirichletParams& params, PriorFamily family) {
  const long long den = prior_denominator(family, params.size());
  std::string out = "Dir(";
  for (std::size_t j = 0; j < params.size(); ++j) {
    if (j) out += ", ";
    if (auto r = format_rational(params[j], den)) {
      out += *r;
    } else {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.6g", params[j]);
      out += buf;
    }
  }
  return out + ")";
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(path + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace dirimult
