#pragma once

#include <algorithm>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairtab/error.hpp"

namespace fairtab {

enum class ColumnKind { continuous, categorical };

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::continuous;
  std::vector<std::string> vocabulary;  // categorical only; inferred from training data when empty
};

/// Maps raw label values to y = 1 (favorable) or y = 0.
struct LabelSpec {
  std::string column;
  std::vector<std::string> favorable;
  std::vector<std::string> unfavorable;
};

/// Maps raw sensitive values to s = 1 (privileged) or s = 0. Either explicit value
/// lists, or a numeric threshold: s = 1 iff (value > threshold) == privileged_above.
struct SensitiveSpec {
  std::string column;
  std::vector<std::string> privileged;
  std::vector<std::string> unprivileged;
  std::optional<double> threshold;
  bool privileged_above = true;
};

struct Schema {
  std::string name;
  std::vector<ColumnSpec> columns;  // feature columns, in output order
  LabelSpec label;
  SensitiveSpec sensitive;
  bool drop_sensitive_features = false;
  std::vector<std::string> missing_tokens{"?", ""};

  const ColumnSpec* find_column(const std::string& n) const {
    for (const auto& c : columns)
      if (c.name == n) return &c;
    return nullptr;
  }

  bool is_missing(const std::string& v) const {
    return std::find(missing_tokens.begin(), missing_tokens.end(), v) != missing_tokens.end();
  }

  void validate() const {
    if (label.column.empty()) throw ConfigError("schema '" + name + "': label column missing");
    if (sensitive.column.empty()) throw ConfigError("schema '" + name + "': sensitive column missing");
    if (label.column == sensitive.column)
      throw ConfigError("schema '" + name + "': label and sensitive columns must differ");
    if (label.favorable.empty() || label.unfavorable.empty())
      throw ConfigError("schema '" + name + "': label needs favorable and unfavorable values");
    if (find_column(label.column) != nullptr)
      throw ConfigError("schema '" + name + "': label column '" + label.column + "' listed as a feature");
    if (!sensitive.threshold && (sensitive.privileged.empty() || sensitive.unprivileged.empty()))
      throw ConfigError("schema '" + name + "': sensitive needs privileged/unprivileged values or a threshold");
    std::set<std::string> names;
    for (const auto& c : columns)
      if (!names.insert(c.name).second) throw ConfigError("schema '" + name + "': duplicate column '" + c.name + "'");
    if (sensitive.threshold) {
      const auto* c = find_column(sensitive.column);
      if (c != nullptr && c->kind != ColumnKind::continuous)
        throw ConfigError("schema '" + name + "': threshold sensitive column must be continuous");
    }
  }
};

inline Schema schema_from_json(const nlohmann::json& j) {
  Schema s;
  s.name = j.value("name", std::string("dataset"));
  for (const auto& cj : j.at("columns")) {
    ColumnSpec c;
    c.name = cj.at("name").get<std::string>();
    const auto kind = cj.at("kind").get<std::string>();
    if (kind == "continuous") {
      c.kind = ColumnKind::continuous;
    } else if (kind == "categorical") {
      c.kind = ColumnKind::categorical;
      c.vocabulary = cj.value("vocabulary", std::vector<std::string>{});
    } else {
      throw ConfigError("schema: column '" + c.name + "' has unknown kind '" + kind + "'");
    }
    s.columns.push_back(std::move(c));
  }
  const auto& lj = j.at("label");
  s.label.column = lj.at("column").get<std::string>();
  s.label.favorable = lj.at("favorable").get<std::vector<std::string>>();
  s.label.unfavorable = lj.at("unfavorable").get<std::vector<std::string>>();
  const auto& sj = j.at("sensitive");
  s.sensitive.column = sj.at("column").get<std::string>();
  s.sensitive.privileged = sj.value("privileged", std::vector<std::string>{});
  s.sensitive.unprivileged = sj.value("unprivileged", std::vector<std::string>{});
  if (sj.contains("threshold")) s.sensitive.threshold = sj.at("threshold").get<double>();
  s.sensitive.privileged_above = sj.value("privileged_above", true);
  s.drop_sensitive_features = j.value("drop_sensitive_features", false);
  if (j.contains("missing_tokens")) s.missing_tokens = j.at("missing_tokens").get<std::vector<std::string>>();
  s.validate();
  return s;
}

inline nlohmann::json to_json(const Schema& s) {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : s.columns) {
    nlohmann::json cj{{"name", c.name}, {"kind", c.kind == ColumnKind::continuous ? "continuous" : "categorical"}};
    if (c.kind == ColumnKind::categorical && !c.vocabulary.empty()) cj["vocabulary"] = c.vocabulary;
    cols.push_back(std::move(cj));
  }
  nlohmann::json sens{{"column", s.sensitive.column}};
  if (s.sensitive.threshold) {
    sens["threshold"] = *s.sensitive.threshold;
    sens["privileged_above"] = s.sensitive.privileged_above;
  } else {
    sens["privileged"] = s.sensitive.privileged;
    sens["unprivileged"] = s.sensitive.unprivileged;
  }
  return {{"name", s.name},
          {"columns", cols},
          {"label", {{"column", s.label.column}, {"favorable", s.label.favorable}, {"unfavorable", s.label.unfavorable}}},
          {"sensitive", sens},
          {"drop_sensitive_features", s.drop_sensitive_features},
          {"missing_tokens", s.missing_tokens}};
}

inline Schema load_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open schema '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("schema '" + path + "': " + e.what());
  }
  try {
    return schema_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("schema '" + path + "': " + e.what());
  }
}

}  // namespace fairtab
