#include "tbf/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "tbf/error.hpp"

namespace tbf {

std::string format_double(double x) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  auto out = open_output(path);
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::vector<std::vector<std::string>> text;
  text.reserve(rows.size());
  for (const auto& r : rows) {
    std::vector<std::string> cells;
    cells.reserve(r.size());
    for (double v : r) cells.push_back(format_double(v));
    text.push_back(std::move(cells));
  }
  write_csv(path, header, text);
}

void write_json(const std::filesystem::path& path, const Json& value) {
  auto out = open_output(path);
  out << value.dump(2) << '\n';
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return Json::parse(in);
}

Json density_matrix_to_json(const FockDensityMatrix& rho) {
  Json entries = Json::array();
  for (Eigen::Index i = 0; i < rho.dim(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < rho.dim(); ++j) row.push_back({rho(i, j).real(), rho(i, j).imag()});
    entries.push_back(std::move(row));
  }
  return Json{{"cutoff", rho.cutoff()}, {"modes", rho.modes()}, {"entries", std::move(entries)}};
}

FockDensityMatrix density_matrix_from_json(const Json& j) {
  const int cutoff = j.at("cutoff").get<int>();
  const int modes = j.contains("modes") ? j.at("modes").get<int>() : 1;
  const auto& entries = j.at("entries");
  const Eigen::Index d = fock_dimension(modes, cutoff);
  if (static_cast<Eigen::Index>(entries.size()) != d) throw std::invalid_argument("density matrix JSON has wrong size");
  CMatrix m(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const auto& row = entries.at(i);
    if (static_cast<Eigen::Index>(row.size()) != d) throw std::invalid_argument("density matrix JSON row has wrong size");
    for (Eigen::Index k = 0; k < d; ++k) m(i, k) = {row.at(k).at(0).get<double>(), row.at(k).at(1).get<double>()};
  }
  return FockDensityMatrix(modes, cutoff, std::move(m));
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw std::runtime_error("SHA-256 init failed");
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &len);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return hex.str();
}

void RunManifest::write(const std::filesystem::path& dir, const std::vector<std::string>& files) {
  outputs.clear();
  for (const auto& f : files) outputs.push_back({f, sha256_file(dir / f)});
  Json list = Json::array();
  for (const auto& o : outputs) list.push_back({{"file", o.file}, {"sha256", o.sha256}});
  write_json(dir / "manifest.json", Json{{"command", command},
                                         {"version", version},
                                         {"seed", seed},
                                         {"wall_clock_s", wall_clock_s},
                                         {"config", config},
                                         {"outputs", std::move(list)}});
}

std::vector<std::string> verify_manifest(const std::filesystem::path& dir) {
  const Json m = read_json(dir / "manifest.json");
  std::vector<std::string> bad;
  for (const auto& o : m.at("outputs")) {
    const std::string file = o.at("file").get<std::string>();
    if (!std::filesystem::exists(dir / file) || sha256_file(dir / file) != o.at("sha256").get<std::string>()) {
      bad.push_back(file);
    }
  }
  return bad;
}

}  // namespace tbf
