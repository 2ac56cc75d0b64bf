#pragma once

// Text I/O: dense CSV, MatrixMarket, label files, flat key-value configs and
// the JSON sidecar describing a generated dataset.

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "conic_nmf/cones.hpp"
#include "conic_nmf/matrix.hpp"
#include "conic_nmf/synth.hpp"

namespace conic_nmf::io {

using Json = nlohmann::json;

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline double parse_double(std::string_view token, const std::string& where) {
  const std::string t(trim(token));
  if (t.empty()) throw Error(Errc::io, where + ": empty field");
  char* end = nullptr;
  errno = 0;
  const double x = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || errno == ERANGE) {
    throw Error(Errc::io, where + ": cannot parse '" + t + "' as a number");
  }
  return x;
}

inline long long parse_int(std::string_view token, const std::string& where) {
  const auto t = trim(token);
  long long x = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw Error(Errc::io, where + ": cannot parse '" + std::string(t) + "' as an integer");
  }
  return x;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open '" + path + "' for reading");
  return in;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io, "cannot open '" + path + "' for writing");
  return out;
}

inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace detail

/// Dense CSV: one matrix row per line, comma separated, no header. An empty
/// file is a 0 x 0 matrix.
inline Matrix read_csv(const std::string& path) {
  auto in = detail::open_in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    std::vector<double> row;
    std::string_view rest(line);
    const std::string where = path + ":" + std::to_string(lineno);
    while (true) {
      const auto comma = rest.find(',');
      row.push_back(detail::parse_double(rest.substr(0, comma), where));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(Errc::io, where + ": expected " + std::to_string(rows.front().size()) +
                                " fields, got " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return Matrix(0, 0);
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

/// Writes every value with 17 significant digits so reading it back is exact.
/// A matrix with no columns produces an empty file.
inline void write_csv(const std::string& path, const MatrixRef& m) {
  auto out = detail::open_out(path);
  if (m.cols() == 0) return;
  std::string line;
  for (Index i = 0; i < m.rows(); ++i) {
    line.clear();
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) line += ',';
      line += detail::format_double(m(i, j));
    }
    line += '\n';
    out << line;
  }
  if (!out) throw Error(Errc::io, "write to '" + path + "' failed");
}

/// MatrixMarket `matrix coordinate` (real, integer or pattern; general or
/// symmetric) and `matrix array` files. Duplicate coordinate entries add up.
inline Matrix read_matrix_market(const std::string& path) {
  auto in = detail::open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::io, path + ": empty file");
  std::istringstream banner(line);
  std::string tag, object, format, field, symmetry;
  banner >> tag >> object >> format >> field >> symmetry;
  auto lower = [](std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
  };
  if (tag != "%%MatrixMarket" || lower(object) != "matrix") {
    throw Error(Errc::io, path + ": missing '%%MatrixMarket matrix' banner");
  }
  format = lower(format);
  field = lower(field);
  symmetry = lower(symmetry);
  if (format != "coordinate" && format != "array") throw Error(Errc::io, path + ": unknown format " + format);
  if (field != "real" && field != "integer" && field != "double" && field != "pattern") {
    throw Error(Errc::io, path + ": unsupported field " + field);
  }
  if (symmetry != "general" && symmetry != "symmetric") {
    throw Error(Errc::io, path + ": unsupported symmetry " + symmetry);
  }
  const bool symmetric = symmetry == "symmetric";
  const bool pattern = field == "pattern";

  std::size_t lineno = 1;
  auto next_data_line = [&](std::string& out) {
    while (std::getline(in, out)) {
      ++lineno;
      const auto t = detail::trim(out);
      if (t.empty() || t.front() == '%') continue;
      return true;
    }
    return false;
  };
  if (!next_data_line(line)) throw Error(Errc::io, path + ": missing size line");
  std::istringstream size_line(line);
  long long rows = -1, cols = -1, nnz = -1;
  size_line >> rows >> cols;
  if (format == "coordinate") size_line >> nnz;
  if (rows < 0 || cols < 0 || (format == "coordinate" && nnz < 0)) {
    throw Error(Errc::io, path + ":" + std::to_string(lineno) + ": bad size line");
  }
  Matrix m = Matrix::Zero(rows, cols);
  if (format == "array") {
    if (pattern) throw Error(Errc::io, path + ": pattern arrays are not valid");
    for (long long j = 0; j < cols; ++j) {
      for (long long i = symmetric ? j : 0; i < rows; ++i) {
        if (!next_data_line(line)) throw Error(Errc::io, path + ": too few array entries");
        const double x = detail::parse_double(line, path + ":" + std::to_string(lineno));
        m(i, j) = x;
        if (symmetric) m(j, i) = x;
      }
    }
    return m;
  }
  for (long long e = 0; e < nnz; ++e) {
    if (!next_data_line(line)) throw Error(Errc::io, path + ": too few coordinate entries");
    std::istringstream entry(line);
    std::string si, sj, sx;
    entry >> si >> sj >> sx;
    const std::string where = path + ":" + std::to_string(lineno);
    const long long i = detail::parse_int(si, where) - 1;
    const long long j = detail::parse_int(sj, where) - 1;
    if (i < 0 || i >= rows || j < 0 || j >= cols) throw Error(Errc::io, where + ": index out of range");
    const double x = pattern ? 1.0 : detail::parse_double(sx, where);
    m(i, j) += x;
    if (symmetric && i != j) m(j, i) += x;
  }
  return m;
}

inline void write_matrix_market(const std::string& path, const MatrixRef& m) {
  auto out = detail::open_out(path);
  Index nnz = 0;
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i) nnz += m(i, j) != 0.0;
  out << "%%MatrixMarket matrix coordinate real general\n"
      << m.rows() << ' ' << m.cols() << ' ' << nnz << '\n';
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i)
      if (m(i, j) != 0.0) out << i + 1 << ' ' << j + 1 << ' ' << detail::format_double(m(i, j)) << '\n';
}

inline bool looks_like_matrix_market(const std::string& path) {
  std::ifstream in(path);
  std::string head;
  if (in && std::getline(in, head)) return head.rfind("%%MatrixMarket", 0) == 0;
  const auto ext = std::filesystem::path(path).extension().string();
  return ext == ".mtx" || ext == ".mm";
}

/// Reads CSV or MatrixMarket (sniffed from the banner) and checks that every
/// entry is finite and nonnegative.
inline Matrix read_data_matrix(const std::string& path) {
  Matrix m = looks_like_matrix_market(path) ? read_matrix_market(path) : read_csv(path);
  require_finite_nonnegative(m, path.c_str());
  return m;
}

inline void write_labels(const std::string& path, const std::vector<int>& labels) {
  auto out = detail::open_out(path);
  for (int l : labels) out << l << '\n';
}

inline std::vector<int> read_labels(const std::string& path) {
  auto in = detail::open_in(path);
  std::vector<int> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    out.push_back(static_cast<int>(detail::parse_int(line, path + ":" + std::to_string(lineno))));
  }
  return out;
}

/// Flat `key = value` text; `#` starts a comment. Later keys override earlier.
using KeyValues = std::map<std::string, std::string>;

inline KeyValues parse_key_values(std::istream& in, const std::string& name) {
  KeyValues out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const auto body = detail::trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw Error(Errc::io, name + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const auto key = detail::trim(body.substr(0, eq));
    if (key.empty()) throw Error(Errc::io, name + ":" + std::to_string(lineno) + ": empty key");
    out[std::string(key)] = std::string(detail::trim(body.substr(eq + 1)));
  }
  return out;
}

inline KeyValues read_key_values(const std::string& path) {
  auto in = detail::open_in(path);
  return parse_key_values(in, path);
}

inline void write_key_values(const std::string& path, const KeyValues& kv) {
  auto out = detail::open_out(path);
  for (const auto& [k, v] : kv) out << k << " = " << v << '\n';
}

/// Sidecar description of a generated dataset: the cones, rates, mixing
/// weights, seed and the key-value configuration that produced it.
inline Json dataset_meta(const GeneratorConfig& cfg, const KeyValues& source = {}) {
  Json cones = Json::array();
  for (const auto& c : cfg.cones.cones()) {
    cones.push_back({{"basis", std::vector<double>(c.basis.data(), c.basis.data() + c.basis.size())},
                     {"angle", c.angle}});
  }
  Json meta = {{"F", cfg.dim},
               {"N", cfg.samples},
               {"K", cfg.cones.size()},
               {"seed", cfg.seed},
               {"project", cfg.project},
               {"lambdas", cfg.lambdas},
               {"mixing", cfg.mixing},
               {"cones", cones}};
  if (!source.empty()) meta["config"] = source;
  return meta;
}

inline ConeSet cone_set_from_meta(const Json& meta) {
  try {
    std::vector<CircularCone> cones;
    for (const auto& c : meta.at("cones")) {
      const auto basis = c.at("basis").get<std::vector<double>>();
      cones.emplace_back(Eigen::Map<const Vector>(basis.data(), static_cast<Index>(basis.size())),
                         c.at("angle").get<double>());
    }
    return ConeSet(std::move(cones));
  } catch (const Json::exception& e) {
    throw Error(Errc::io, std::string("malformed dataset metadata: ") + e.what());
  }
}

inline void write_json(const std::string& path, const Json& j) {
  auto out = detail::open_out(path);
  out << j.dump(2) << '\n';
}

inline Json read_json(const std::string& path) {
  auto in = detail::open_in(path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(Errc::io, path + ": " + e.what());
  }
}

}  // namespace conic_nmf::io
