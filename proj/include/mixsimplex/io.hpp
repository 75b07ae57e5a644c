#pragma once

// File formats used by the command-line tool.
//
//   dataset CSV   header row naming predictor columns x1..xd and target
//                 columns y1..yK (any order); one observation per row
//   samples JSONL {"face": [1, 3], "dim": 1, "y": [0.25, 0.0, 0.75]} per
//                 line, face indices one-based and ascending
//   spec JSON     {"kind": "...", parameters...}; see parse_spec
//   model JSON    see model_to_json

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "mixsimplex/errors.hpp"
#include "mixsimplex/extrinsic.hpp"
#include "mixsimplex/glm.hpp"
#include "mixsimplex/info_theory.hpp"
#include "mixsimplex/mixed_dirichlet.hpp"
#include "mixsimplex/simplex.hpp"

namespace mixsimplex::io {

using nlohmann::json;

/// Malformed input data (dataset rows, sample lines).
class data_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A file could not be opened, read or written.
class io_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

inline std::optional<double> parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

// ---------------------------------------------------------------------------
// Dataset CSV

struct GlmDataset {
  int num_predictors = 0;
  int num_outputs = 0;
  std::vector<GlmObservation> rows;
  /// One-based data row numbers whose targets were renormalized.
  std::vector<std::size_t> renormalized_rows;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

/// "x3" -> 3 for prefix 'x'; 0 when the name does not match.
inline int column_index(std::string name, char prefix) {
  while (!name.empty() && (name.back() == '\r' || name.back() == ' ')) name.pop_back();
  while (!name.empty() && name.front() == ' ') name.erase(name.begin());
  if (name.size() < 2 || name.front() != prefix) return 0;
  int v = 0;
  const auto res = std::from_chars(name.data() + 1, name.data() + name.size(), v);
  if (res.ec != std::errc() || res.ptr != name.data() + name.size() || v < 1) return 0;
  return v;
}

}  // namespace detail

/// Reads a dataset. Target rows off the simplex by more than 1e-9 (but no
/// more than 1e-4) are renormalized and reported; anything else is an error.
inline GlmDataset read_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw data_error("dataset: missing header row");
  const auto header = detail::split_csv_line(line);
  std::vector<int> x_pos;
  std::vector<int> y_pos;
  std::map<int, int> xs;
  std::map<int, int> ys;
  for (int c = 0; c < static_cast<int>(header.size()); ++c) {
    if (int i = detail::column_index(header[static_cast<std::size_t>(c)], 'x'); i > 0) {
      if (!xs.emplace(i, c).second) throw data_error("dataset: duplicate column " + header[static_cast<std::size_t>(c)]);
    } else if (int j = detail::column_index(header[static_cast<std::size_t>(c)], 'y'); j > 0) {
      if (!ys.emplace(j, c).second) throw data_error("dataset: duplicate column " + header[static_cast<std::size_t>(c)]);
    } else {
      throw data_error("dataset: unrecognized column '" + header[static_cast<std::size_t>(c)] +
                       "' (expected x1..xd and y1..yK)");
    }
  }
  for (const auto& [i, c] : xs) {
    if (i != static_cast<int>(x_pos.size()) + 1) throw data_error("dataset: predictor columns must be x1..xd without gaps");
    x_pos.push_back(c);
  }
  for (const auto& [j, c] : ys) {
    if (j != static_cast<int>(y_pos.size()) + 1) throw data_error("dataset: target columns must be y1..yK without gaps");
    y_pos.push_back(c);
  }
  if (y_pos.size() < 2) throw data_error("dataset: need at least two target columns");

  GlmDataset ds;
  ds.num_predictors = static_cast<int>(x_pos.size());
  ds.num_outputs = static_cast<int>(y_pos.size());
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto cells = detail::split_csv_line(line);
    const std::string where = "dataset row " + std::to_string(row) + ": ";
    if (cells.size() != header.size()) throw data_error(where + "expected " + std::to_string(header.size()) + " fields");
    auto value = [&](int c) {
      const auto v = parse_double(cells[static_cast<std::size_t>(c)]);
      if (!v || !std::isfinite(*v)) throw data_error(where + "bad number '" + cells[static_cast<std::size_t>(c)] + "'");
      return *v;
    };
    GlmObservation obs{{}, SimplexPoint::vertex(0, 2)};
    for (int c : x_pos) obs.x.push_back(value(c));
    std::vector<double> y;
    double sum = 0.0;
    for (int c : y_pos) {
      const double v = value(c);
      if (v < 0.0) throw data_error(where + "negative target");
      y.push_back(v);
      sum += v;
    }
    const double gap = std::abs(sum - 1.0);
    if (gap > 1e-4) throw data_error(where + "targets sum to " + format_double(sum) + ", not 1");
    if (gap > 1e-9) {
      for (double& v : y) v /= sum;
      ds.renormalized_rows.push_back(row);
    }
    try {
      obs.y = SimplexPoint(std::move(y));
    } catch (const std::invalid_argument& e) {
      throw data_error(where + e.what());
    }
    ds.rows.push_back(std::move(obs));
  }
  if (ds.rows.empty()) throw data_error("dataset: no data rows");
  return ds;
}

inline void write_dataset_csv(std::ostream& out, std::span<const GlmObservation> rows, int d, int k) {
  for (int j = 1; j <= d; ++j) out << 'x' << j << ',';
  for (int j = 1; j <= k; ++j) out << 'y' << j << (j < k ? "," : "\n");
  for (const auto& r : rows) {
    for (double v : r.x) out << format_double(v) << ',';
    for (int j = 0; j < k; ++j) out << format_double(r.y[static_cast<std::size_t>(j)]) << (j + 1 < k ? "," : "\n");
  }
}

// ---------------------------------------------------------------------------
// Samples JSONL

inline std::string sample_line(const FaceIndexSet& face, const SimplexPoint& y) {
  std::string s = "{\"face\":[";
  bool first = true;
  for (int i : face.indices()) {
    if (!first) s += ',';
    s += std::to_string(i + 1);
    first = false;
  }
  s += "],\"dim\":" + std::to_string(face.dimension()) + ",\"y\":[";
  for (std::size_t k = 0; k < static_cast<std::size_t>(y.alphabet_size()); ++k) {
    if (k) s += ',';
    s += format_double(y[k]);
  }
  return s + "]}";
}

struct SampleRecord {
  FaceIndexSet face;
  SimplexPoint point;
};

/// Parses a samples file; errors name the one-based line number.
inline std::vector<SampleRecord> read_samples(std::istream& in) {
  std::vector<SampleRecord> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty() || line == "\r") continue;
    const std::string where = "samples line " + std::to_string(n) + ": ";
    try {
      const json j = json::parse(line);
      const auto y = j.at("y").get<std::vector<double>>();
      SimplexPoint point(y);
      const auto face_ids = j.at("face").get<std::vector<int>>();
      std::vector<int> zero_based;
      for (int i : face_ids) {
        if (i < 1 || i > point.alphabet_size()) throw data_error(where + "face index out of range");
        zero_based.push_back(i - 1);
      }
      const FaceIndexSet face = FaceIndexSet::from_indices(zero_based, point.alphabet_size());
      if (!(face == point.support())) throw data_error(where + "face does not match the support of y");
      if (j.at("dim").get<int>() != face.dimension()) throw data_error(where + "dim does not match face");
      out.push_back({face, std::move(point)});
    } catch (const data_error&) {
      throw;
    } catch (const std::exception& e) {
      throw data_error(where + e.what());
    }
  }
  if (out.empty()) throw data_error("samples: file has no samples");
  return out;
}

// ---------------------------------------------------------------------------
// Distribution spec JSON

using AnyDistribution =
    std::variant<MixedDirichlet, GaussianSparsemax, KDHardConcrete, BinaryHardConcrete, MaxEntMixed, Concrete>;

struct DistributionSpec {
  std::string kind;
  std::optional<std::uint64_t> seed;
  AnyDistribution dist;
};

namespace detail {

inline const json& field(const json& j, const char* key, const std::string& kind) {
  if (!j.contains(key)) mixsimplex::detail::fail(kind + " spec: missing \"" + key + "\"");
  return j.at(key);
}

inline std::vector<double> vec(const json& j, const char* key, const std::string& kind) {
  const json& v = field(j, key, kind);
  if (!v.is_array()) mixsimplex::detail::fail(kind + " spec: \"" + key + "\" must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) mixsimplex::detail::fail(kind + " spec: \"" + key + "\" must be an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

inline double num(const json& j, const char* key, const std::string& kind) {
  const json& v = field(j, key, kind);
  if (!v.is_number()) mixsimplex::detail::fail(kind + " spec: \"" + key + "\" must be a number");
  return v.get<double>();
}

inline int integer(const json& j, const char* key, const std::string& kind) {
  const json& v = field(j, key, kind);
  if (!v.is_number_integer()) mixsimplex::detail::fail(kind + " spec: \"" + key + "\" must be an integer");
  return v.get<int>();
}

}  // namespace detail

/// Kinds and their fields:
///   mixed-dirichlet       w, alpha
///   gaussian-sparsemax    mu, sigma
///   kd-hard-concrete      z, beta, lambda (default 1.1)
///   binary-hard-concrete  log_alpha, beta, l (default -0.1), r (default 1.1)
///   maxent                K, N
///   concrete              z, beta
/// An optional "K" must match the vector lengths; an optional "seed" is used
/// when no seed is given on the command line. Unknown fields are rejected.
inline DistributionSpec parse_spec(const json& j) {
  if (!j.is_object()) mixsimplex::detail::fail("spec: expected a JSON object");
  if (!j.contains("kind") || !j.at("kind").is_string()) mixsimplex::detail::fail("spec: missing string field \"kind\"");
  const std::string kind = j.at("kind").get<std::string>();
  std::vector<std::string> allowed{"kind", "K", "seed"};
  auto allow = [&](std::initializer_list<const char*> names) {
    for (const char* n : names) allowed.emplace_back(n);
  };
  std::optional<AnyDistribution> dist;
  using detail::integer;
  using detail::num;
  using detail::vec;
  if (kind == "mixed-dirichlet") {
    allow({"w", "alpha"});
    dist.emplace(MixedDirichlet(vec(j, "w", kind), vec(j, "alpha", kind)));
  } else if (kind == "gaussian-sparsemax") {
    allow({"mu", "sigma"});
    dist.emplace(GaussianSparsemax(vec(j, "mu", kind), vec(j, "sigma", kind)));
  } else if (kind == "kd-hard-concrete") {
    allow({"z", "beta", "lambda"});
    dist.emplace(KDHardConcrete(vec(j, "z", kind), num(j, "beta", kind), j.contains("lambda") ? num(j, "lambda", kind) : 1.1));
  } else if (kind == "binary-hard-concrete") {
    allow({"log_alpha", "beta", "l", "r"});
    dist.emplace(BinaryHardConcrete(num(j, "log_alpha", kind), num(j, "beta", kind), j.contains("l") ? num(j, "l", kind) : -0.1,
                                    j.contains("r") ? num(j, "r", kind) : 1.1));
  } else if (kind == "maxent") {
    allow({"N"});
    dist.emplace(MaxEntMixed(integer(j, "K", kind), integer(j, "N", kind)));
  } else if (kind == "concrete") {
    allow({"z", "beta"});
    dist.emplace(Concrete(vec(j, "z", kind), num(j, "beta", kind)));
  } else {
    mixsimplex::detail::fail("spec: unknown kind \"" + kind + "\"");
  }
  for (const auto& [key, value] : j.items())
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      mixsimplex::detail::fail(kind + " spec: unknown field \"" + key + "\"");

  const int k = std::visit(
      [](const auto& d) {
        using D = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<D, KDHardConcrete> || std::is_same_v<D, Concrete>) return static_cast<int>(d.z.size());
        else if constexpr (std::is_same_v<D, BinaryHardConcrete>) return 2;
        else return d.alphabet_size();
      },
      *dist);
  if (j.contains("K") && detail::integer(j, "K", kind) != k)
    mixsimplex::detail::fail(kind + " spec: \"K\" does not match the parameter lengths");

  DistributionSpec spec{kind, std::nullopt, std::move(*dist)};
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) mixsimplex::detail::fail("spec: \"seed\" must be a non-negative integer");
    spec.seed = j.at("seed").get<std::uint64_t>();
  }
  return spec;
}

inline int alphabet_size(const AnyDistribution& d) {
  return std::visit(
      [](const auto& x) {
        using D = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<D, KDHardConcrete> || std::is_same_v<D, Concrete>) return static_cast<int>(x.z.size());
        else if constexpr (std::is_same_v<D, BinaryHardConcrete>) return 2;
        else return x.alphabet_size();
      },
      d);
}

// ---------------------------------------------------------------------------
// Model JSON

/// {"format": "mixsimplex-glm", "version": 1, "K": .., "d": ..,
///  "face_weights": [K*d, row-major], "face_bias": [K],
///  "conc_weights": [K*d, row-major], "conc_bias": [K],
///  "clamp": {"score": 10, "preactivation": 10, "concentration_min": 0.001, "concentration_max": 1000}}
inline json model_to_json(const GlmModel& m) {
  return json{{"format", "mixsimplex-glm"},
              {"version", 1},
              {"K", m.num_outputs},
              {"d", m.num_predictors},
              {"face_weights", m.face_weights},
              {"face_bias", m.face_bias},
              {"conc_weights", m.conc_weights},
              {"conc_bias", m.conc_bias},
              {"clamp",
               {{"score", GlmModel::kScoreClamp},
                {"preactivation", GlmModel::kPreactivationClamp},
                {"concentration_min", GlmModel::kMinConcentration},
                {"concentration_max", GlmModel::kMaxConcentration}}}};
}

inline GlmModel model_from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != "mixsimplex-glm") throw data_error("model: wrong format tag");
    GlmModel m(j.at("K").get<int>(), j.at("d").get<int>());
    auto load = [&](const char* key, std::vector<double>& dst) {
      auto v = j.at(key).get<std::vector<double>>();
      if (v.size() != dst.size()) throw data_error(std::string("model: \"") + key + "\" has the wrong length");
      dst = std::move(v);
    };
    load("face_weights", m.face_weights);
    load("face_bias", m.face_bias);
    load("conc_weights", m.conc_weights);
    load("conc_bias", m.conc_bias);
    return m;
  } catch (const data_error&) {
    throw;
  } catch (const std::exception& e) {
    throw data_error(std::string("model: ") + e.what());
  }
}

}  // namespace mixsimplex::io
