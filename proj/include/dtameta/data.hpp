#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "dtameta/params.hpp"
#include "dtameta/rng.hpp"

namespace dtameta {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One study's 2x2 table against the reference standard.
struct StudyRecord {
  int id = 0;
  std::string label;
  long tp = 0;
  long fp = 0;
  long fn = 0;
  long tn = 0;

  long n_diseased() const { return tp + fn; }     // reference-positive subjects
  long n_nondiseased() const { return fp + tn; }  // reference-negative subjects

  bool has_zero_cell() const { return tp == 0 || fp == 0 || fn == 0 || tn == 0; }

  void validate(const std::string& context = {}) const {
    auto fail = [&](const std::string& msg) {
      throw DataError(context.empty() ? msg : context + ": " + msg);
    };
    if (tp < 0) fail("negative count in field tp");
    if (fp < 0) fail("negative count in field fp");
    if (fn < 0) fail("negative count in field fn");
    if (tn < 0) fail("negative count in field tn");
    if (id <= 0) fail("study id must be a positive integer");
    if (n_diseased() < 1) fail("tp + fn must be at least 1");
    if (n_nondiseased() < 1) fail("fp + tn must be at least 1");
  }
};

// Logit-transformed observed sensitivity / FPR. When any cell of the 2x2
// table is zero, 0.5 is added to all four cells first, so both logits are
// always finite; `corrected` records that this happened.
struct ObservedLogits {
  double y_a = 0.0;
  double y_b = 0.0;
  bool corrected = false;

  double log_dor() const { return y_a - y_b; }
};

// An ordered collection of studies. Order defines the study index; ids are
// unique and come from the source file, never renumbered.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<StudyRecord> studies, std::string name)
      : studies_(std::move(studies)), name_(std::move(name)) {
    std::unordered_set<int> seen;
    for (const auto& s : studies_) {
      s.validate("study id " + std::to_string(s.id));
      if (!seen.insert(s.id).second)
        throw DataError("duplicate study id " + std::to_string(s.id));
    }
  }

  const std::vector<StudyRecord>& studies() const { return studies_; }
  const std::string& name() const { return name_; }
  std::size_t size() const { return studies_.size(); }

  const StudyRecord& by_id(int id) const {
    for (const auto& s : studies_)
      if (s.id == id) return s;
    throw DataError("unknown study id " + std::to_string(id));
  }

  bool contains(int id) const {
    for (const auto& s : studies_)
      if (s.id == id) return true;
    return false;
  }

 private:
  std::vector<StudyRecord> studies_;
  std::string name_;
};

inline ObservedLogits observed_logits(const StudyRecord& s) {
  ObservedLogits out;
  if (s.has_zero_cell()) {
    out.corrected = true;
    out.y_a = std::log((s.tp + 0.5) / (s.fn + 0.5));
    out.y_b = std::log((s.fp + 0.5) / (s.tn + 0.5));
  } else {
    out.y_a = std::log(static_cast<double>(s.tp) / static_cast<double>(s.fn));
    out.y_b = std::log(static_cast<double>(s.fp) / static_cast<double>(s.tn));
  }
  return out;
}

// uncorrected (sensitivity, FPR) proportions, for display and scatter plots
inline std::pair<double, double> observed_proportions(const StudyRecord& s) {
  return {static_cast<double>(s.tp) / static_cast<double>(s.n_diseased()),
          static_cast<double>(s.fp) / static_cast<double>(s.n_nondiseased())};
}

inline Dataset leave_one_out(const Dataset& d, int id) {
  if (!d.contains(id)) throw DataError("leave_one_out: unknown study id " + std::to_string(id));
  if (d.size() < 3) throw DataError("leave_one_out: result would have fewer than 2 studies");
  std::vector<StudyRecord> rest;
  rest.reserve(d.size() - 1);
  for (const auto& s : d.studies())
    if (s.id != id) rest.push_back(s);
  return Dataset(std::move(rest), d.name() + " (without study " + std::to_string(id) + ")");
}

namespace detail {

// splits one CSV line; handles double-quoted fields with "" escapes
inline std::vector<std::string> split_csv_line(const std::string& line, int row,
                                               const std::string& path) {
  std::vector<std::string> fields;
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
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  if (quoted)
    throw DataError(path + ": row " + std::to_string(row) + ": unterminated quoted field");
  fields.push_back(cur);
  return fields;
}

inline long parse_count(const std::string& text, int row, const std::string& field,
                        const std::string& path) {
  auto fail = [&](const std::string& why) {
    throw DataError(path + ": row " + std::to_string(row) + ", field " + field + ": " + why);
  };
  std::string t = text;
  while (!t.empty() && std::isspace(static_cast<unsigned char>(t.front()))) t.erase(t.begin());
  while (!t.empty() && std::isspace(static_cast<unsigned char>(t.back()))) t.pop_back();
  if (t.empty()) fail("empty value");
  std::size_t pos = 0;
  long v = 0;
  try {
    v = std::stol(t, &pos);
  } catch (const std::exception&) {
    fail("not an integer: '" + t + "'");
  }
  if (pos != t.size()) fail("not an integer: '" + t + "'");
  if (v < 0) fail("negative count");
  return v;
}

}  // namespace detail

// Loads a dataset from CSV with the fixed header `id,label,tp,fp,fn,tn`.
// Every validation error carries the offending row number.
inline Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open input file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  const auto header = detail::split_csv_line(line, 1, path);
  const std::vector<std::string> expected = {"id", "label", "tp", "fp", "fn", "tn"};
  if (header != expected)
    throw DataError(path + ": row 1: header must be exactly 'id,label,tp,fp,fn,tn'");

  std::vector<StudyRecord> studies;
  std::unordered_set<int> seen;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto f = detail::split_csv_line(line, row, path);
    if (f.size() != 6)
      throw DataError(path + ": row " + std::to_string(row) + ": expected 6 columns, got " +
                      std::to_string(f.size()));
    StudyRecord s;
    const long id = detail::parse_count(f[0], row, "id", path);
    if (id <= 0)
      throw DataError(path + ": row " + std::to_string(row) + ", field id: must be positive");
    s.id = static_cast<int>(id);
    s.label = f[1];
    s.tp = detail::parse_count(f[2], row, "tp", path);
    s.fp = detail::parse_count(f[3], row, "fp", path);
    s.fn = detail::parse_count(f[4], row, "fn", path);
    s.tn = detail::parse_count(f[5], row, "tn", path);
    try {
      s.validate();
    } catch (const DataError& e) {
      throw DataError(path + ": row " + std::to_string(row) + ": " + e.what());
    }
    if (!seen.insert(s.id).second)
      throw DataError(path + ": row " + std::to_string(row) + ": duplicate study id " +
                      std::to_string(s.id));
    studies.push_back(std::move(s));
  }
  if (studies.size() < 3)
    throw DataError(path + ": dataset must contain at least 3 studies, got " +
                    std::to_string(studies.size()));
  std::string name = path;
  const auto slash = name.find_last_of('/');
  if (slash != std::string::npos) name = name.substr(slash + 1);
  const auto dot = name.find_last_of('.');
  if (dot != std::string::npos) name = name.substr(0, dot);
  return Dataset(std::move(studies), std::move(name));
}

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    out += c;
  }
  out += '"';
  return out;
}

inline void save_csv(const Dataset& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open output file: " + path);
  out << "id,label,tp,fp,fn,tn\n";
  for (const auto& s : d.studies()) {
    out << s.id << ',' << csv_quote(s.label) << ',' << s.tp << ',' << s.fp << ',' << s.fn << ','
        << s.tn << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

// Draws a synthetic dataset from the generative model: per study,
// theta ~ N(mu, Sigma), then TP ~ Bin(n_diseased, invlogit(theta_a)) and
// FP ~ Bin(n_nondiseased, invlogit(theta_b)).
inline Dataset simulate_dataset(const ModelParams& params,
                                const std::vector<std::pair<long, long>>& sizes,
                                std::uint64_t seed) {
  if (!params.valid()) throw std::invalid_argument("simulate_dataset: invalid ModelParams");
  if (sizes.empty()) throw std::invalid_argument("simulate_dataset: no study sizes given");
  for (const auto& [na, nb] : sizes)
    if (na < 1 || nb < 1) throw std::invalid_argument("simulate_dataset: all sizes must be >= 1");

  Rng rng(Rng::mix(seed, 0x5D1Au));
  // Cholesky factor of Sigma
  const double l11 = params.sigma_a;
  const double l21 = params.rho * params.sigma_b;
  const double l22 = params.sigma_b * std::sqrt(1.0 - params.rho * params.rho);

  std::vector<StudyRecord> studies;
  studies.reserve(sizes.size());
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const double z1 = rng.normal();
    const double z2 = rng.normal();
    const double theta_a = params.mu_a + l11 * z1;
    const double theta_b = params.mu_b + l21 * z1 + l22 * z2;
    StudyRecord s;
    s.id = static_cast<int>(i) + 1;
    s.label = "sim-" + std::to_string(i + 1);
    const long na = sizes[i].first;
    const long nb = sizes[i].second;
    s.tp = rng.binomial(na, invlogit(theta_a));
    s.fn = na - s.tp;
    s.fp = rng.binomial(nb, invlogit(theta_b));
    s.tn = nb - s.fp;
    studies.push_back(std::move(s));
  }
  return Dataset(std::move(studies), "simulated");
}

}  // namespace dtameta
