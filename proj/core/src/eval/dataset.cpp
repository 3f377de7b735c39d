#include "prism/eval/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include "prism/errors.hpp"
#include "prism/eval/csv.hpp"

namespace prism::eval {
namespace {

constexpr std::size_t kMaxIssues = 20;

std::string required_string(const nlohmann::json& object, const char* key) {
  if (!object.contains(key) || !object[key].is_string() || object[key].get<std::string>().empty()) {
    throw ConfigError(std::string("column map needs a non-empty \"") + key + "\"");
  }
  return object[key].get<std::string>();
}

std::string optional_string(const nlohmann::json& object, const char* key) {
  if (!object.contains(key) || object[key].is_null()) return {};
  if (!object[key].is_string()) throw ConfigError(std::string("\"") + key + "\" must be a string");
  return object[key].get<std::string>();
}

std::optional<long> parse_int(const std::string& s) {
  long v = 0;
  const char* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    // Some exports write integral ratings as "2.0".
    char* after = nullptr;
    const double d = std::strtod(s.c_str(), &after);
    if (s.empty() || after != s.c_str() + s.size() || !std::isfinite(d) || d != std::floor(d)) {
      return std::nullopt;
    }
    return static_cast<long>(d);
  }
  return v;
}

std::optional<double> parse_real(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* after = nullptr;
  const double d = std::strtod(s.c_str(), &after);
  if (after != s.c_str() + s.size() || !std::isfinite(d)) return std::nullopt;
  return d;
}

}  // namespace

ColumnMap ColumnMap::from_json(const nlohmann::json& object) {
  if (!object.is_object()) throw ConfigError("column map must be a JSON object");
  ColumnMap map;
  map.comment_id = required_string(object, "comment_id");
  map.annotator_id = required_string(object, "annotator_id");
  map.text = required_string(object, "text");
  map.hate_score = required_string(object, "hate_score");
  map.hate_indicator = optional_string(object, "hate_indicator");
  map.annotator_severity = optional_string(object, "annotator_severity");
  if (object.contains("hate_positive_at")) {
    if (!object["hate_positive_at"].is_number()) throw ConfigError("hate_positive_at must be numeric");
    map.hate_positive_at = object["hate_positive_at"].get<double>();
  }
  if (!object.contains("dimensions") || !object["dimensions"].is_object()) {
    throw ConfigError("column map needs a \"dimensions\" object");
  }
  const auto& dims = object["dimensions"];
  for (auto it = dims.begin(); it != dims.end(); ++it) {
    if (!parse_dimension(it.key())) throw ConfigError("unknown dimension in column map: " + it.key());
  }
  for (Dimension d : kAllDimensions) {
    const std::string name(dimension_name(d));
    if (!dims.contains(name)) throw ConfigError("column map lacks dimension " + name);
    const auto& entry = dims[name];
    OrdinalColumn col;
    if (entry.is_string()) {
      col.column = entry.get<std::string>();
    } else if (entry.is_object()) {
      col.column = required_string(entry, "column");
      if (entry.contains("max")) {
        if (!entry["max"].is_number_integer() || entry["max"].get<int>() <= 0) {
          throw ConfigError("max for " + name + " must be a positive integer");
        }
        col.max = entry["max"].get<int>();
      }
    } else {
      throw ConfigError("dimension " + name + " must map to a column name or object");
    }
    map.dimensions[d] = col;
  }
  return map;
}

ColumnMap ColumnMap::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open column map " + path);
  const auto parsed = nlohmann::json::parse(in, nullptr, false);
  if (parsed.is_discarded()) throw ConfigError("column map " + path + " is not valid JSON");
  return from_json(parsed);
}

Label AnnotationRecord::label() const {
  if (hate) return *hate ? Label::flag : Label::keep;
  double sum = 0.0;
  for (Dimension d : kAllDimensions) sum += severities[d];
  return sum / static_cast<double>(kDimensionCount) > 0.5 ? Label::flag : Label::keep;
}

Dataset ingest_dataset(std::istream& in, const ColumnMap& map) {
  const std::vector<CsvRow> rows = read_csv(in);
  if (rows.empty()) throw ConfigError("dataset has no header row");
  const CsvRow& header = rows.front();
  const auto index = [&](const std::string& name) -> std::size_t {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw ConfigError("dataset lacks required column \"" + name + "\"");
  };
  const std::size_t i_comment = index(map.comment_id);
  const std::size_t i_annotator = index(map.annotator_id);
  const std::size_t i_text = index(map.text);
  const std::size_t i_score = index(map.hate_score);
  const std::optional<std::size_t> i_hate =
      map.hate_indicator.empty() ? std::nullopt : std::optional(index(map.hate_indicator));
  const std::optional<std::size_t> i_alpha =
      map.annotator_severity.empty() ? std::nullopt : std::optional(index(map.annotator_severity));
  PerDimension<std::size_t> i_dim(0);
  for (Dimension d : kAllDimensions) i_dim[d] = index(map.dimensions[d].column);

  Dataset out;
  const auto reject = [&](std::size_t row, const std::string& why) {
    ++out.report.rejected;
    if (out.report.issues.size() < kMaxIssues) {
      out.report.issues.push_back("row " + std::to_string(row) + ": " + why);
    }
  };

  PerDimension<int> observed_max(0);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const CsvRow& row = rows[r];
    ++out.report.rows;
    if (row.size() != header.size()) {
      reject(r, "expected " + std::to_string(header.size()) + " fields, got " +
                    std::to_string(row.size()));
      continue;
    }
    AnnotationRecord rec;
    rec.comment_id = row[i_comment];
    rec.annotator_id = row[i_annotator];
    rec.text = row[i_text];
    if (rec.comment_id.empty() || rec.annotator_id.empty()) {
      reject(r, "empty comment or annotator id");
      continue;
    }
    const auto score = parse_real(row[i_score]);
    if (!score) {
      reject(r, "unparseable hate score");
      continue;
    }
    rec.hate_score = *score;

    bool ok = true;
    for (Dimension d : kAllDimensions) {
      const auto v = parse_int(row[i_dim[d]]);
      const auto& col = map.dimensions[d];
      if (!v || *v < 0 || (col.max && *v > *col.max)) {
        reject(r, "rating for " + std::string(dimension_name(d)) + " out of range: '" +
                      row[i_dim[d]] + "'");
        ok = false;
        break;
      }
      rec.ratings[d] = static_cast<int>(*v);
    }
    if (!ok) continue;

    if (i_hate) {
      const auto h = parse_real(row[*i_hate]);
      if (!h) {
        reject(r, "unparseable hate indicator");
        continue;
      }
      rec.hate = *h >= map.hate_positive_at;
    }
    if (i_alpha && !row[*i_alpha].empty()) {
      const auto a = parse_real(row[*i_alpha]);
      if (!a) {
        reject(r, "unparseable annotator severity");
        continue;
      }
      rec.annotator_severity = *a;
    }
    for (Dimension d : kAllDimensions) observed_max[d] = std::max(observed_max[d], rec.ratings[d]);
    out.records.push_back(std::move(rec));
  }

  for (AnnotationRecord& rec : out.records) {
    PerDimension<double> s(0.0);
    for (Dimension d : kAllDimensions) {
      const int max = map.dimensions[d].max.value_or(observed_max[d]);
      s[d] = max > 0 ? static_cast<double>(rec.ratings[d]) / max : 0.0;
    }
    rec.severities = SeverityVector(s);
  }
  out.report.accepted = out.records.size();
  return out;
}

Dataset ingest_dataset(const std::string& path, const ColumnMap& map) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open dataset " + path);
  return ingest_dataset(in, map);
}

std::map<std::string, std::vector<AnnotationRecord>> group_by_annotator(
    std::span<const AnnotationRecord> records) {
  std::map<std::string, std::vector<AnnotationRecord>> out;
  for (const auto& r : records) out[r.annotator_id].push_back(r);
  return out;
}

}  // namespace prism::eval
