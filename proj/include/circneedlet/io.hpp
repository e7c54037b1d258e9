#pragma once

// CSV and JSON output. CSV: comma separated, header row, LF line endings,
// floats as %.17g so values round-trip exactly.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "circneedlet/bounds.hpp"
#include "circneedlet/error.hpp"
#include "circneedlet/experiment.hpp"
#include "circneedlet/fields.hpp"
#include "circneedlet/needlet.hpp"
#include "circneedlet/stats.hpp"

namespace circneedlet {

using json = nlohmann::json;

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

using CsvCell = std::variant<double, long long, std::string>;

inline std::string to_cell(const CsvCell& c) {
  if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
  if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
  return std::get<std::string>(c);
}

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add_row(std::vector<CsvCell> row) {
    if (row.size() != header_.size()) throw ArgumentError("CsvTable: row width does not match header");
    rows_.push_back(std::move(row));
  }

  std::size_t size() const noexcept { return rows_.size(); }

  std::string str() const {
    std::string out;
    append_line(out, header_);
    for (const auto& r : rows_) {
      std::vector<std::string> cells;
      cells.reserve(r.size());
      for (const auto& c : r) cells.push_back(to_cell(c));
      append_line(out, cells);
    }
    return out;
  }

 private:
  static void append_line(std::string& out, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      const auto& c = cells[i];
      if (c.find_first_of(",\"\n") == std::string::npos) {
        out += c;
        continue;
      }
      out += '"';
      for (char ch : c) {
        if (ch == '"') out += '"';
        out += ch;
      }
      out += '"';
    }
    out += '\n';
  }

  std::vector<std::string> header_;
  std::vector<std::vector<CsvCell>> rows_;
};

inline void write_text(const std::filesystem::path& path, std::string_view content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!f) throw IoError("write failed for " + path.string());
}

inline void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

// FNV-1a 64, enough to tell whether a replayed file is byte-identical.
inline std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline json to_json(const NeedletParams& p) {
  return {{"B", p.B}, {"s", p.s}, {"eta", p.eta}, {"trunc_eps", p.trunc_eps}};
}

inline json to_json(const DensitySpec& d) {
  json j{{"kind", to_string(d.kind)}};
  if (d.kind != DensityKind::uniform) j["kappa"] = d.kappa;
  if (d.kind == DensityKind::floor_mixture) j["weight"] = d.weight;
  return j;
}

inline json to_json(const CellResult& c) {
  json j{{"j", c.j}, {"t", c.t}, {"R_t", c.R_t}, {"n_reps", c.n_reps}};
  if (!c.ok()) {
    j["error"] = c.error;
    return j;
  }
  j["mean"] = c.mean;
  j["var"] = c.var;
  j["W"] = c.W;
  j["p"] = c.p_value;
  j["W1"] = c.W1;
  j["b"] = c.b;
  j["sigma2"] = c.sigma2;
  if (c.wasserstein_rhs) j["wasserstein_rhs"] = *c.wasserstein_rhs;
  return j;
}

inline json to_json(const BoundReport& r) {
  json j{{"j", r.j},
         {"q", r.qs},
         {"R_t", r.R_t},
         {"params", to_json(r.params)},
         {"density", r.density_id},
         {"rate_term", r.rate_term},
         {"wasserstein", {{"rhs", r.wasserstein_rhs}}}};
  if (r.qs.size() >= 2) {
    j["d2"] = {{"rhs", r.d2_rhs}, {"covariance_hs_term", r.covariance_hs_term}, {"triple_term", r.triple_term}};
  }
  return j;
}

inline json to_json(const RateFit& f) { return {{"slope", f.slope}, {"intercept", f.intercept}, {"r2", f.r2}}; }

// Grid rows: j, t, R_t, n_reps, mean, var, W, p, W1 (+ error column).
inline CsvTable cells_table(const std::vector<CellResult>& cells) {
  CsvTable t({"j", "t", "R_t", "n_reps", "mean", "var", "W", "p", "W1", "error"});
  for (const auto& c : cells) {
    if (c.ok()) {
      t.add_row({static_cast<long long>(c.j), c.t, c.R_t, static_cast<long long>(c.n_reps), c.mean, c.var, c.W,
                 c.p_value, c.W1, std::string()});
    } else {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      t.add_row({static_cast<long long>(c.j), c.t, c.R_t, static_cast<long long>(c.n_reps), nan, nan, nan, nan, nan,
                 c.error});
    }
  }
  return t;
}

}  // namespace circneedlet
