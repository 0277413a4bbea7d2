#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>

namespace tbf {

/// Flat key/value document with `[section]` headers.
///
/// Every section and key must be declared in the schema; anything else is
/// rejected at parse time so typos surface instead of silently falling back
/// to defaults.
class ConfigDocument {
public:
  using Schema = std::map<std::string, std::set<std::string>>;

  static ConfigDocument parse(const std::string& text, const Schema& schema = default_schema());
  static ConfigDocument load(const std::filesystem::path& path, const Schema& schema = default_schema());

  /// Sections and keys understood by the toolkit.
  static const Schema& default_schema();

  bool has_section(const std::string& section) const;
  bool has(const std::string& section, const std::string& key) const;

  std::optional<std::string> get(const std::string& section, const std::string& key) const;
  std::optional<double> get_double(const std::string& section, const std::string& key) const;
  double require_double(const std::string& section, const std::string& key) const;

  const std::map<std::string, std::map<std::string, std::string>>& sections() const { return values_; }

private:
  std::map<std::string, std::map<std::string, std::string>> values_;
};

}  // namespace tbf
