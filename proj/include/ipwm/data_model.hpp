#pragma once

// Study records, the column-oriented Dataset used by every estimator, binary-L
// cell-count tables, the 48-slot validation count vector, and the expected
// count engines that push a true (Y,A,L) table through a misclassification
// channel and a validation-selection mechanism.

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ipwm/core.hpp"

namespace ipwm {

struct StudyRecord {
  int z = 0;
  int b = 0;
  int r_y = 0;
  int r_a = 0;
  std::optional<int> y;
  std::optional<int> a;
  std::vector<double> l;
};

inline constexpr std::int8_t kMissing = -1;

/// Records stored column-wise. Every row carries a nonnegative frequency
/// weight so that expanded count tables and bootstrap resamples (rows with
/// multiplicity) share one representation with plain record lists.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<std::string> covariate_names)
      : names_(std::move(covariate_names)) {}

  std::size_t size() const { return z_.size(); }
  bool empty() const { return z_.empty(); }
  std::size_t num_covariates() const { return names_.size(); }
  const std::vector<std::string>& covariate_names() const { return names_; }

  int z(std::size_t i) const { return z_[i]; }
  int b(std::size_t i) const { return b_[i]; }
  int r_y(std::size_t i) const { return ry_[i]; }
  int r_a(std::size_t i) const { return ra_[i]; }
  /// kMissing when not validated.
  int y(std::size_t i) const { return y_[i]; }
  int a(std::size_t i) const { return a_[i]; }
  double cov(std::size_t i, std::size_t k) const { return l_[i * names_.size() + k]; }
  const double* cov_row(std::size_t i) const { return l_.data() + i * names_.size(); }
  double freq(std::size_t i) const { return freq_[i]; }

  double total_weight() const {
    double s = 0.0;
    for (double f : freq_) s += f;
    return s;
  }

  bool unit_weights() const {
    for (double f : freq_)
      if (f != 1.0) return false;
    return true;
  }

  void reserve(std::size_t n) {
    z_.reserve(n); b_.reserve(n); ry_.reserve(n); ra_.reserve(n);
    y_.reserve(n); a_.reserve(n); freq_.reserve(n);
    l_.reserve(n * names_.size());
  }

  /// Appends a record after checking binary coding and the indicator /
  /// validated-value correspondence.
  void push_back(const StudyRecord& r, double weight = 1.0) {
    auto binary = [](int v) { return v == 0 || v == 1; };
    if (!binary(r.z) || !binary(r.b) || !binary(r.r_y) || !binary(r.r_a))
      throw InputError("record " + std::to_string(size()) + ": Z, B, R_Y, R_A must be 0/1");
    if (r.y.has_value() != (r.r_y == 1))
      throw ConsistencyError("record " + std::to_string(size()) +
                             ": Y must be present exactly when R_Y = 1");
    if (r.a.has_value() != (r.r_a == 1))
      throw ConsistencyError("record " + std::to_string(size()) +
                             ": A must be present exactly when R_A = 1");
    if ((r.y && !binary(*r.y)) || (r.a && !binary(*r.a)))
      throw InputError("record " + std::to_string(size()) + ": Y and A must be 0/1");
    if (r.l.size() != names_.size())
      throw SchemaError("record " + std::to_string(size()) + ": expected " +
                        std::to_string(names_.size()) + " covariates, got " +
                        std::to_string(r.l.size()));
    if (!(weight >= 0.0) || !std::isfinite(weight))
      throw InputError("record " + std::to_string(size()) + ": invalid frequency weight");
    for (double v : r.l)
      if (!std::isfinite(v))
        throw InputError("record " + std::to_string(size()) + ": non-finite covariate");
    append_unchecked(r.z, r.b, r.r_y, r.r_a, r.y ? *r.y : kMissing, r.a ? *r.a : kMissing,
                     r.l.data(), weight);
  }

  /// Fast path for generated data; caller guarantees validity.
  void append_unchecked(int z, int b, int r_y, int r_a, int y, int a, const double* l,
                        double weight = 1.0) {
    z_.push_back(static_cast<std::int8_t>(z));
    b_.push_back(static_cast<std::int8_t>(b));
    ry_.push_back(static_cast<std::int8_t>(r_y));
    ra_.push_back(static_cast<std::int8_t>(r_a));
    y_.push_back(static_cast<std::int8_t>(y));
    a_.push_back(static_cast<std::int8_t>(a));
    l_.insert(l_.end(), l, l + names_.size());
    freq_.push_back(weight);
  }

  StudyRecord record(std::size_t i) const {
    StudyRecord r;
    r.z = z_[i];
    r.b = b_[i];
    r.r_y = ry_[i];
    r.r_a = ra_[i];
    if (y_[i] != kMissing) r.y = y_[i];
    if (a_[i] != kMissing) r.a = a_[i];
    r.l.assign(cov_row(i), cov_row(i) + names_.size());
    return r;
  }

  std::vector<StudyRecord> records() const {
    std::vector<StudyRecord> out;
    out.reserve(size());
    for (std::size_t i = 0; i < size(); ++i) out.push_back(record(i));
    return out;
  }

  static Dataset from_records(const std::vector<StudyRecord>& records,
                              std::vector<std::string> covariate_names) {
    Dataset ds(std::move(covariate_names));
    ds.reserve(records.size());
    for (const auto& r : records) ds.push_back(r);
    return ds;
  }

  /// Same rows with the given frequencies replacing the current ones; rows
  /// with zero frequency are dropped.
  Dataset with_frequencies(const std::vector<double>& counts) const {
    Dataset out(names_);
    std::size_t kept = 0;
    for (double c : counts) kept += c > 0.0;
    out.reserve(kept);
    for (std::size_t i = 0; i < size(); ++i) {
      if (counts[i] <= 0.0) continue;
      out.append_unchecked(z_[i], b_[i], ry_[i], ra_[i], y_[i], a_[i], cov_row(i),
                           counts[i]);
    }
    return out;
  }

 private:
  std::vector<std::string> names_;
  std::vector<std::int8_t> z_, b_, ry_, ra_, y_, a_;
  std::vector<double> l_;
  std::vector<double> freq_;
};

// ===========================================================================
// Cell tables over binary (Z, B, Y, A, L)
// ===========================================================================

enum class Var : unsigned { Z = 0, B = 1, Y = 2, A = 3, L = 4 };

inline constexpr unsigned bit(Var v) { return 1u << static_cast<unsigned>(v); }

/// Dense 32-cell table indexed z + 2b + 4y + 8a + 16l. Axes not in the mask
/// only ever hold value 0. Counts are real so expected tables fit too.
class CellCountTable {
 public:
  CellCountTable() = default;
  explicit CellCountTable(unsigned axes) : axes_(axes) {}

  static constexpr int index(int z, int b, int y, int a, int l) {
    return z + 2 * b + 4 * y + 8 * a + 16 * l;
  }

  unsigned axes() const { return axes_; }
  bool has(Var v) const { return (axes_ & bit(v)) != 0; }

  double at(int z, int b, int y, int a, int l) const { return c_[index(z, b, y, a, l)]; }
  double& at(int z, int b, int y, int a, int l) {
    check_axes(z, b, y, a, l);
    return c_[index(z, b, y, a, l)];
  }

  double total() const {
    double s = 0.0;
    for (double v : c_) s += v;
    return s;
  }

  /// Sums out every axis not in `keep`.
  CellCountTable collapse(unsigned keep) const {
    CellCountTable out(axes_ & keep);
    for (int i = 0; i < 32; ++i) {
      int j = 0;
      for (unsigned k = 0; k < 5; ++k)
        if ((keep >> k) & 1u) j |= i & (1 << k);
      out.c_[j] += c_[i];
    }
    return out;
  }

  const std::array<double, 32>& raw() const { return c_; }

 private:
  void check_axes(int z, int b, int y, int a, int l) const {
    const int v[5] = {z, b, y, a, l};
    for (unsigned k = 0; k < 5; ++k) {
      if (v[k] < 0 || v[k] > 1) throw InputError("cell index out of range");
      if (v[k] == 1 && !((axes_ >> k) & 1u))
        throw InputError("cell index on an axis the table does not carry");
    }
  }

  unsigned axes_ = 0;
  std::array<double, 32> c_{};
};

/// Pr(Z=1|B=b,Y=y,A=a,L=l) and Pr(B=1|Y=y,A=a,L=l).
struct MisclassRates {
  double pi[2][2][2][2] = {};
  double lambda[2][2][2] = {};
};

/// The 48 observation-type counts m_1..m_48 (1-based).
///   m_{1+z+2b+4l}           R_Y=R_A=0
///   m_{9+z+2b}              R_Y=0, R_A=1
///   m_{13+z+2b}             R_Y=1, R_A=0
///   m_{17+z+2b+4y+8a+16l}   R_Y=R_A=1
/// The partially validated slots do not enter the likelihood; they only keep
/// the total mass accounted for.
class ValidationCounts {
 public:
  static constexpr int kSize = 48;

  static constexpr int unvalidated_index(int z, int b, int l) { return 1 + z + 2 * b + 4 * l; }
  static constexpr int outcome_missing_index(int z, int b) { return 9 + z + 2 * b; }
  static constexpr int exposure_missing_index(int z, int b) { return 13 + z + 2 * b; }
  static constexpr int validated_index(int z, int b, int y, int a, int l) {
    return 17 + z + 2 * b + 4 * y + 8 * a + 16 * l;
  }

  ValidationCounts() = default;
  explicit ValidationCounts(const std::array<double, 48>& m) : m_(m) {}

  double operator()(int j) const { return m_[slot(j)]; }
  double& operator()(int j) { return m_[slot(j)]; }

  double total() const {
    double s = 0.0;
    for (double v : m_) s += v;
    return s;
  }

  const std::array<double, 48>& raw() const { return m_; }

  /// Exchanges the roles of Z and B in every slot.
  ValidationCounts swap_surrogates() const {
    ValidationCounts out;
    for (int z = 0; z < 2; ++z)
      for (int b = 0; b < 2; ++b) {
        for (int l = 0; l < 2; ++l) {
          out(unvalidated_index(b, z, l)) = (*this)(unvalidated_index(z, b, l));
          for (int y = 0; y < 2; ++y)
            for (int a = 0; a < 2; ++a)
              out(validated_index(b, z, y, a, l)) = (*this)(validated_index(z, b, y, a, l));
        }
        out(outcome_missing_index(b, z)) = (*this)(outcome_missing_index(z, b));
        out(exposure_missing_index(b, z)) = (*this)(exposure_missing_index(z, b));
      }
    return out;
  }

 private:
  static std::size_t slot(int j) {
    if (j < 1 || j > kSize) throw InputError("observation type " + std::to_string(j) + " outside 1..48");
    return static_cast<std::size_t>(j - 1);
  }

  std::array<double, 48> m_{};
};

/// Table over (Z,B,Y,A,L) obtained by passing each true (Y,A,L) cell through
/// Pr(Z,B|Y,A,L) = Pr(Z|B,Y,A,L) Pr(B|Y,A,L).
inline CellCountTable expected_misclassified_counts(const CellCountTable& base,
                                                    const MisclassRates& rates) {
  const unsigned all = bit(Var::Z) | bit(Var::B) | bit(Var::Y) | bit(Var::A) | bit(Var::L);
  CellCountTable out(all);
  for (int y = 0; y < 2; ++y)
    for (int a = 0; a < 2; ++a)
      for (int l = 0; l < 2; ++l) {
        const double n = base.at(0, 0, y, a, l);
        for (int b = 0; b < 2; ++b)
          for (int z = 0; z < 2; ++z) {
            const double p = bern(rates.pi[b][y][a][l], z) * bern(rates.lambda[y][a][l], b);
            out.at(z, b, y, a, l) += n * p;
          }
      }
  return out;
}

using SelectionFn = std::function<double(int z, int b, int l)>;

/// Splits every (Z,B,Y,A,L) cell into a validated part (selection prob.) and
/// an unvalidated part whose (Y,A) are marginalised out.
inline ValidationCounts expected_validation_counts(const CellCountTable& full,
                                                   const SelectionFn& selection) {
  ValidationCounts m;
  for (int z = 0; z < 2; ++z)
    for (int b = 0; b < 2; ++b)
      for (int l = 0; l < 2; ++l) {
        const double s = selection(z, b, l);
        if (!(s >= 0.0 && s <= 1.0))
          throw InputError("selection probability outside [0,1]");
        for (int y = 0; y < 2; ++y)
          for (int a = 0; a < 2; ++a) {
            const double c = full.at(z, b, y, a, l);
            m(ValidationCounts::validated_index(z, b, y, a, l)) += c * s;
            m(ValidationCounts::unvalidated_index(z, b, l)) += c * (1.0 - s);
          }
      }
  return m;
}

/// Tabulates records into the 48 observation types. Requires exactly one
/// covariate, coded 0/1.
inline ValidationCounts counts_from_records(const Dataset& ds) {
  ValidationCounts m;
  if (ds.empty()) return m;
  if (ds.num_covariates() != 1)
    throw UnsupportedDimensionError("cell counts need a single binary covariate, got " +
                                    std::to_string(ds.num_covariates()));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double lv = ds.cov(i, 0);
    if (lv != 0.0 && lv != 1.0)
      throw UnsupportedDimensionError("covariate is not binary at record " + std::to_string(i));
    const int l = static_cast<int>(lv);
    const int z = ds.z(i), b = ds.b(i);
    int j = 0;
    if (ds.r_y(i) && ds.r_a(i))
      j = ValidationCounts::validated_index(z, b, ds.y(i), ds.a(i), l);
    else if (!ds.r_y(i) && !ds.r_a(i))
      j = ValidationCounts::unvalidated_index(z, b, l);
    else if (!ds.r_y(i))
      j = ValidationCounts::outcome_missing_index(z, b);
    else
      j = ValidationCounts::exposure_missing_index(z, b);
    m(j) += ds.freq(i);
  }
  return m;
}

inline ValidationCounts counts_from_records(const std::vector<StudyRecord>& records) {
  return counts_from_records(Dataset::from_records(records, {"L"}));
}

/// One weighted row per nonzero observation type (single covariate "L").
/// Partially validated slots carry no L and are rejected when nonzero.
inline Dataset dataset_from_counts(const ValidationCounts& m, const std::string& covariate = "L") {
  Dataset ds({covariate});
  for (int j = 9; j <= 16; ++j)
    if (m(j) != 0.0)
      throw UnsupportedDimensionError("partially validated counts cannot be expanded to records");
  for (int l = 0; l < 2; ++l) {
    const double lv = l;
    for (int b = 0; b < 2; ++b)
      for (int z = 0; z < 2; ++z) {
        const double c = m(ValidationCounts::unvalidated_index(z, b, l));
        if (c > 0.0) ds.append_unchecked(z, b, 0, 0, kMissing, kMissing, &lv, c);
      }
    for (int a = 0; a < 2; ++a)
      for (int y = 0; y < 2; ++y)
        for (int b = 0; b < 2; ++b)
          for (int z = 0; z < 2; ++z) {
            const double c = m(ValidationCounts::validated_index(z, b, y, a, l));
            if (c > 0.0) ds.append_unchecked(z, b, 1, 1, y, a, &lv, c);
          }
  }
  return ds;
}

/// Fully validated weighted rows from a (Z,B,Y,A,L) table. Without a Z or B
/// axis the surrogate is taken to equal the true value.
inline Dataset dataset_from_table(const CellCountTable& t, const std::string& covariate = "L") {
  Dataset ds({covariate});
  const bool has_z = t.has(Var::Z), has_b = t.has(Var::B);
  for (int i = 0; i < 32; ++i) {
    const double c = t.raw()[i];
    if (c <= 0.0) continue;
    const double lv = (i >> 4) & 1;
    const int y = (i >> 2) & 1, a = (i >> 3) & 1;
    ds.append_unchecked(has_z ? i & 1 : y, has_b ? (i >> 1) & 1 : a, 1, 1, y, a, &lv, c);
  }
  return ds;
}

/// Integer-count expansion to unit-weight records (for round-trip checks).
inline std::vector<StudyRecord> expand_records(const ValidationCounts& m) {
  std::vector<StudyRecord> out;
  const Dataset ds = dataset_from_counts(m);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double c = ds.freq(i);
    if (c != std::floor(c)) throw InputError("non-integer count cannot be expanded");
    const StudyRecord r = ds.record(i);
    for (long k = 0; k < static_cast<long>(c); ++k) out.push_back(r);
  }
  return out;
}

// ===========================================================================
// CSV ingestion
// ===========================================================================

/// Maps roles to header names. Empty r_y / r_a names mean the indicator is
/// inferred from whether the validated value is present. An empty covariate
/// list takes every column not mapped to a role.
struct CsvSchema {
  std::string z = "Z";
  std::string b = "B";
  std::string r_y = "R_Y";
  std::string r_a = "R_A";
  std::string y = "Y";
  std::string a = "A";
  std::vector<std::string> covariates;
  std::string weight;  // optional frequency column
};

namespace detail {

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  for (auto& f : out) {
    const auto first = f.find_first_not_of(" \t\r");
    const auto last = f.find_last_not_of(" \t\r");
    f = first == std::string::npos ? std::string() : f.substr(first, last - first + 1);
  }
  return out;
}

inline std::optional<double> parse_real(const std::string& s) {
  if (s.empty() || s == "NA") return std::nullopt;
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) throw SchemaError("not a number: '" + s + "'");
  return v;
}

}  // namespace detail

inline Dataset ingest_csv_stream(std::istream& in, const CsvSchema& schema,
                                 const std::string& source = "<stream>") {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(source + ": missing header row");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);
  const auto header = detail::split_csv_line(line);
  std::unordered_map<std::string, std::size_t> col;
  for (std::size_t k = 0; k < header.size(); ++k) col[header[k]] = k;

  auto find = [&](const std::string& name, bool required) -> std::optional<std::size_t> {
    if (name.empty()) return std::nullopt;
    auto it = col.find(name);
    if (it == col.end()) {
      if (required) throw SchemaError(source + ": column '" + name + "' not found");
      return std::nullopt;
    }
    return it->second;
  };
  const auto cz = find(schema.z, true);
  const auto cb = find(schema.b, true);
  const auto cy = find(schema.y, false);
  const auto ca = find(schema.a, false);
  const auto cry = find(schema.r_y, !schema.r_y.empty() && cy.has_value());
  const auto cra = find(schema.r_a, !schema.r_a.empty() && ca.has_value());
  const auto cw = find(schema.weight, !schema.weight.empty());

  std::vector<std::string> names = schema.covariates;
  if (names.empty()) {
    for (std::size_t k = 0; k < header.size(); ++k) {
      const bool mapped = k == cz || k == cb || k == cy || k == ca || k == cry ||
                          k == cra || k == cw;
      if (!mapped) names.push_back(header[k]);
    }
  }
  std::vector<std::size_t> cl;
  for (const auto& nm : names) cl.push_back(*find(nm, true));

  Dataset ds(names);
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto f = detail::split_csv_line(line);
    const std::string where = source + " row " + std::to_string(row);
    if (f.size() != header.size())
      throw SchemaError(where + ": expected " + std::to_string(header.size()) + " fields, got " +
                        std::to_string(f.size()));
    auto binary = [&](std::size_t k, const char* role) -> std::optional<int> {
      std::optional<double> v;
      try {
        v = detail::parse_real(f[k]);
      } catch (const SchemaError&) {
        throw SchemaError(where + ": " + role + " is not a number");
      }
      if (!v) return std::nullopt;
      if (*v != 0.0 && *v != 1.0) throw SchemaError(where + ": " + role + " must be 0 or 1");
      return static_cast<int>(*v);
    };
    StudyRecord r;
    const auto z = binary(*cz, "Z");
    const auto b = binary(*cb, "B");
    if (!z) throw SchemaError(where + ": missing Z");
    if (!b) throw SchemaError(where + ": missing B");
    r.z = *z;
    r.b = *b;
    if (cy) r.y = binary(*cy, "Y");
    if (ca) r.a = binary(*ca, "A");
    if (cry) {
      const auto v = binary(*cry, "R_Y");
      if (!v) throw SchemaError(where + ": missing R_Y");
      r.r_y = *v;
    } else {
      r.r_y = r.y.has_value();
    }
    if (cra) {
      const auto v = binary(*cra, "R_A");
      if (!v) throw SchemaError(where + ": missing R_A");
      r.r_a = *v;
    } else {
      r.r_a = r.a.has_value();
    }
    if (r.y.has_value() != (r.r_y == 1))
      throw ConsistencyError(where + (r.r_y ? ": R_Y = 1 but Y is empty"
                                            : ": Y present but R_Y = 0"));
    if (r.a.has_value() != (r.r_a == 1))
      throw ConsistencyError(where + (r.r_a ? ": R_A = 1 but A is empty"
                                            : ": A present but R_A = 0"));
    r.l.reserve(cl.size());
    for (std::size_t k = 0; k < cl.size(); ++k) {
      std::optional<double> v;
      try {
        v = detail::parse_real(f[cl[k]]);
      } catch (const SchemaError&) {
        throw SchemaError(where + ": covariate '" + names[k] + "' is not a number");
      }
      if (!v) throw SchemaError(where + ": missing covariate '" + names[k] + "'");
      r.l.push_back(*v);
    }
    double w = 1.0;
    if (cw) {
      const auto v = detail::parse_real(f[*cw]);
      if (!v || *v < 0.0) throw SchemaError(where + ": invalid weight");
      w = *v;
    }
    ds.push_back(r, w);
  }
  return ds;
}

inline Dataset ingest_csv(const std::string& path, const CsvSchema& schema = {}) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open '" + path + "'");
  return ingest_csv_stream(in, schema, path);
}

/// Writes records in the layout ingest_csv reads with the default schema.
inline void write_csv(std::ostream& out, const Dataset& ds, bool with_weights = false) {
  out << "Z,B,R_Y,R_A,Y,A";
  for (const auto& nm : ds.covariate_names()) out << ',' << nm;
  if (with_weights) out << ",weight";
  out << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out << ds.z(i) << ',' << ds.b(i) << ',' << ds.r_y(i) << ',' << ds.r_a(i) << ',';
    if (ds.y(i) != kMissing) out << ds.y(i);
    out << ',';
    if (ds.a(i) != kMissing) out << ds.a(i);
    for (std::size_t k = 0; k < ds.num_covariates(); ++k) out << ',' << format_double(ds.cov(i, k));
    if (with_weights) out << ',' << format_double(ds.freq(i));
    out << '\n';
  }
}

}  // namespace ipwm
