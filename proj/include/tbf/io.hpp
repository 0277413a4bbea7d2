#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "tbf/fock.hpp"

namespace tbf {

using Json = nlohmann::ordered_json;

/// Shortest text that parses back to the same double (17 significant digits at most).
std::string format_double(double x);

/// Comma-separated table. Cells are written verbatim; use format_double for numbers.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);
/// Numeric convenience overload.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

void write_json(const std::filesystem::path& path, const Json& value);
Json read_json(const std::filesystem::path& path);

/// {"cutoff": n, "modes": k, "entries": [[[re, im], ...], ...]} with rows in basis order.
Json density_matrix_to_json(const FockDensityMatrix& rho);
FockDensityMatrix density_matrix_from_json(const Json& j);

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

struct ManifestEntry {
  std::string file;  // relative to the output directory
  std::string sha256;
};

struct RunManifest {
  std::string command;
  std::string version = TBF_VERSION;
  std::uint64_t seed = 0;
  Json config;
  double wall_clock_s = 0.0;
  std::vector<ManifestEntry> outputs;

  /// Digests every listed output (relative to `dir`) and writes dir/manifest.json.
  void write(const std::filesystem::path& dir, const std::vector<std::string>& files);
};

/// Recomputes the digests recorded in dir/manifest.json; returns the files that no longer match.
std::vector<std::string> verify_manifest(const std::filesystem::path& dir);

}  // namespace tbf
