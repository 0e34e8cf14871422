#include "itedist/data_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "itedist/error.hpp"

namespace itedist {

// ---------------------------------------------------------------------------
// Sample

Sample::Sample(std::vector<double> y, std::vector<int> d, std::vector<int> z,
               std::vector<std::int64_t> covariates, std::vector<std::string> covariate_names)
    : y_(std::move(y)),
      d_(std::move(d)),
      z_(std::move(z)),
      x_(std::move(covariates)),
      names_(std::move(covariate_names)) {
  const std::size_t n = y_.size();
  if (d_.size() != n || z_.size() != n || x_.size() != n * names_.size()) {
    throw std::invalid_argument("sample columns have inconsistent lengths");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(y_[i])) {
      throw std::invalid_argument("non-finite outcome at row " + std::to_string(i));
    }
    if ((d_[i] != 0 && d_[i] != 1) || (z_[i] != 0 && z_[i] != 1)) {
      throw std::invalid_argument("treatment and instrument must be 0 or 1 (row " +
                                  std::to_string(i) + ")");
    }
  }
  build_cells();
}

Sample Sample::from_observations(std::span<const Observation> rows,
                                 std::vector<std::string> covariate_names) {
  const std::size_t width = covariate_names.size();
  std::vector<double> y;
  std::vector<int> d;
  std::vector<int> z;
  std::vector<std::int64_t> x;
  y.reserve(rows.size());
  d.reserve(rows.size());
  z.reserve(rows.size());
  x.reserve(rows.size() * width);
  for (const auto& row : rows) {
    if (row.x.size() != width) {
      throw std::invalid_argument("covariate tuple length differs from the declared width");
    }
    y.push_back(row.y);
    d.push_back(row.d);
    z.push_back(row.z);
    x.insert(x.end(), row.x.begin(), row.x.end());
  }
  return Sample(std::move(y), std::move(d), std::move(z), std::move(x), std::move(covariate_names));
}

Sample Sample::without_covariates(std::vector<double> y, std::vector<int> d, std::vector<int> z) {
  return Sample(std::move(y), std::move(d), std::move(z), {}, {});
}

void Sample::build_cells() {
  cells_.clear();
  CovariateKey key;
  for (std::size_t i = 0; i < y_.size(); ++i) {
    auto row = x(i);
    key.assign(row.begin(), row.end());
    cells_[key].push_back(i);
  }
}

Sample Sample::take(std::span<const std::size_t> rows) const {
  Sample out;
  const std::size_t width = names_.size();
  out.names_ = names_;
  out.y_.reserve(rows.size());
  out.d_.reserve(rows.size());
  out.z_.reserve(rows.size());
  out.x_.reserve(rows.size() * width);
  for (std::size_t i : rows) {
    out.y_.push_back(y_[i]);
    out.d_.push_back(d_[i]);
    out.z_.push_back(z_[i]);
    auto row = x(i);
    out.x_.insert(out.x_.end(), row.begin(), row.end());
  }
  // Single-cell fast path: resamples of covariate-free data are frequent.
  if (cells_.size() == 1) {
    std::vector<std::size_t> all(out.y_.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    if (!all.empty()) out.cells_.emplace(cells_.begin()->first, std::move(all));
  } else {
    out.build_cells();
  }
  return out;
}

Sample Sample::with_affine_outcome(double a, double b) const {
  Sample out = *this;
  for (auto& v : out.y_) v = a * v + b;
  return out;
}

// ---------------------------------------------------------------------------
// Bounds

void Bounds::set(int d, const CovariateKey& cell, Interval bounds) {
  if (!(bounds.lower <= bounds.upper) || !std::isfinite(bounds.lower) ||
      !std::isfinite(bounds.upper)) {
    throw std::invalid_argument("bounds must be finite with lower <= upper");
  }
  by_d_[d][cell] = bounds;
}

const Interval& Bounds::at(int d, const CovariateKey& cell) const {
  auto it = by_d_[d].find(cell);
  if (it == by_d_[d].end()) {
    throw EstimabilityError("no outcome bounds for d=" + std::to_string(d) + ", x=" +
                            format_key(cell));
  }
  return it->second;
}

bool Bounds::contains(int d, const CovariateKey& cell) const {
  return by_d_[d].contains(cell);
}

Bounds Bounds::affine(double a, double b) const {
  if (!(a > 0)) throw std::invalid_argument("affine scale must be positive");
  Bounds out;
  for (int d = 0; d < 2; ++d) {
    for (const auto& [cell, iv] : by_d_[d]) out.by_d_[d][cell] = {a * iv.lower + b, a * iv.upper + b};
  }
  return out;
}

Bounds estimate_bounds(const Sample& sample) {
  Bounds bounds;
  for (const auto& [cell, rows] : sample.cells()) {
    for (int d = 0; d < 2; ++d) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -std::numeric_limits<double>::infinity();
      for (std::size_t i : rows) {
        if (sample.d(i) != d) continue;
        lo = std::min(lo, sample.y(i));
        hi = std::max(hi, sample.y(i));
      }
      if (lo > hi) {
        throw EstimabilityError("empty treatment group d=" + std::to_string(d) + " in cell x=" +
                                format_key(cell));
      }
      bounds.set(d, cell, {lo, hi});
    }
  }
  return bounds;
}

// ---------------------------------------------------------------------------
// Estimability

bool EstimabilityReport::estimable() const {
  return std::none_of(cells.begin(), cells.end(), [](const CellReport& c) { return c.blocking; });
}

bool EstimabilityReport::has_flags() const {
  return std::any_of(cells.begin(), cells.end(),
                     [](const CellReport& c) { return !c.flags.empty(); });
}

namespace {

struct MarginCounts {
  std::size_t z[2] = {0, 0};
  std::size_t d[2] = {0, 0};
  std::size_t d1_by_z[2] = {0, 0};
};

MarginCounts count_margins(const Sample& sample, const std::vector<std::size_t>& rows) {
  MarginCounts c;
  for (std::size_t i : rows) {
    ++c.z[sample.z(i)];
    ++c.d[sample.d(i)];
    if (sample.d(i) == 1) ++c.d1_by_z[sample.z(i)];
  }
  return c;
}

// Every row is removed once; a z-margin with a single member would then be
// empty, and each treatment group needs support bounds.
std::string blocking_reason(const MarginCounts& c) {
  for (int z = 0; z < 2; ++z) {
    if (c.z[z] == 0) return "no Z=" + std::to_string(z) + " observations";
    if (c.z[z] == 1) return "a single Z=" + std::to_string(z) + " observation (empty after leave-one-out)";
  }
  for (int d = 0; d < 2; ++d) {
    if (c.d[d] == 0) return "no D=" + std::to_string(d) + " observations";
  }
  return {};
}

}  // namespace

EstimabilityReport check_estimability(const Sample& sample, std::size_t min_per_group) {
  EstimabilityReport report;
  for (const auto& [cell, rows] : sample.cells()) {
    const MarginCounts c = count_margins(sample, rows);
    CellReport r;
    r.cell = cell;
    r.n = rows.size();
    r.n_z0 = c.z[0];
    r.n_z1 = c.z[1];
    r.n_d0 = c.d[0];
    r.n_d1 = c.d[1];
    for (int z = 0; z < 2; ++z) {
      if (c.z[z] == 0) {
        r.flags.push_back("no Z=" + std::to_string(z) + " observations");
      } else if (c.z[z] < min_per_group) {
        r.flags.push_back("fewer than " + std::to_string(min_per_group) + " Z=" +
                          std::to_string(z) + " observations");
      }
    }
    for (int d = 0; d < 2; ++d) {
      if (c.d[d] == 0) r.flags.push_back("no D=" + std::to_string(d) + " observations");
    }
    if (c.z[0] > 0 && c.z[1] > 0) {
      r.first_stage = static_cast<double>(c.d1_by_z[1]) / static_cast<double>(c.z[1]) -
                      static_cast<double>(c.d1_by_z[0]) / static_cast<double>(c.z[0]);
      if (r.first_stage <= 0.0) {
        r.flags.push_back("warning: empirical first stage Pr[D=1|Z=1] <= Pr[D=1|Z=0]");
      }
    } else {
      r.first_stage = std::numeric_limits<double>::quiet_NaN();
    }
    r.blocking = !blocking_reason(c).empty();
    report.cells.push_back(std::move(r));
  }
  return report;
}

void require_estimable(const Sample& sample) {
  if (sample.empty()) throw EstimabilityError("sample is empty");
  for (const auto& [cell, rows] : sample.cells()) {
    const std::string reason = blocking_reason(count_margins(sample, rows));
    if (!reason.empty()) {
      throw EstimabilityError("cell x=" + format_key(cell) + " is not estimable: " + reason);
    }
  }
}

bool is_estimable(const Sample& sample) noexcept {
  if (sample.empty()) return false;
  for (const auto& [cell, rows] : sample.cells()) {
    if (!blocking_reason(count_margins(sample, rows)).empty()) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Group selection

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return std::string(s.substr(first, last - first + 1));
}

bool parse_int(std::string_view text, std::int64_t& out) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end && !text.empty();
}

}  // namespace

GroupSelector GroupSelector::parse(const std::string& expression,
                                   const std::vector<std::string>& covariate_names,
                                   const LabelDictionary& labels) {
  const std::string expr = trim(expression);
  if (expr.empty() || expr == "all") return GroupSelector{};

  std::vector<SelectorAtom> atoms;
  std::stringstream stream(expr);
  std::string token;
  while (std::getline(stream, token, ',')) {
    token = trim(token);
    if (token.empty()) throw ConfigError("empty atom in selector '" + expression + "'");

    // Longest operators first.
    static constexpr std::pair<std::string_view, CompareOp> kOps[] = {
        {"<=", CompareOp::kLe}, {">=", CompareOp::kGe}, {"!=", CompareOp::kNe},
        {"==", CompareOp::kEq}, {"<", CompareOp::kLt},  {">", CompareOp::kGt},
        {"=", CompareOp::kEq}};
    std::size_t at = std::string::npos;
    std::string_view op_text;
    CompareOp op = CompareOp::kEq;
    for (const auto& [text, candidate] : kOps) {
      const auto pos = token.find(text);
      if (pos != std::string::npos && (at == std::string::npos || pos < at ||
                                       (pos == at && text.size() > op_text.size()))) {
        at = pos;
        op_text = text;
        op = candidate;
      }
    }
    if (at == std::string::npos) {
      throw ConfigError("selector atom '" + token + "' has no comparison operator");
    }
    const std::string name = trim(std::string_view(token).substr(0, at));
    const std::string value_text = trim(std::string_view(token).substr(at + op_text.size()));

    auto it = std::find(covariate_names.begin(), covariate_names.end(), name);
    if (it == covariate_names.end()) {
      throw ConfigError("selector refers to unknown covariate '" + name + "'");
    }
    SelectorAtom atom;
    atom.position = static_cast<std::size_t>(it - covariate_names.begin());
    atom.op = op;
    if (!parse_int(value_text, atom.value)) {
      auto dict = labels.find(name);
      if (dict == labels.end() || !dict->second.contains(value_text)) {
        throw ConfigError("selector value '" + value_text + "' for '" + name +
                          "' is neither an integer nor a known label");
      }
      if (op != CompareOp::kEq && op != CompareOp::kNe) {
        throw ConfigError("labels only support = and != comparisons ('" + token + "')");
      }
      atom.value = dict->second.at(value_text);
    }
    atoms.push_back(atom);
  }
  return GroupSelector(std::move(atoms));
}

bool GroupSelector::matches(std::span<const std::int64_t> x) const {
  for (const auto& atom : atoms_) {
    if (atom.position >= x.size()) return false;
    const std::int64_t v = x[atom.position];
    bool ok = false;
    switch (atom.op) {
      case CompareOp::kEq: ok = v == atom.value; break;
      case CompareOp::kNe: ok = v != atom.value; break;
      case CompareOp::kLt: ok = v < atom.value; break;
      case CompareOp::kLe: ok = v <= atom.value; break;
      case CompareOp::kGt: ok = v > atom.value; break;
      case CompareOp::kGe: ok = v >= atom.value; break;
    }
    if (!ok) return false;
  }
  return true;
}

Sample select_group(const Sample& sample, const GroupSelector& selector) {
  std::vector<std::size_t> rows;
  rows.reserve(sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i) {
    if (selector.matches(sample.x(i))) rows.push_back(i);
  }
  if (rows.empty()) throw ConfigError("group selection is empty");
  if (rows.size() == sample.size()) return sample;
  return sample.take(rows);
}

bool selectors_overlap(const Sample& sample, const GroupSelector& a, const GroupSelector& b) {
  for (const auto& [cell, rows] : sample.cells()) {
    if (a.matches(cell) && b.matches(cell)) return true;
  }
  return false;
}

std::string format_key(const CovariateKey& key) {
  std::string out = "(";
  for (std::size_t i = 0; i < key.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(key[i]);
  }
  return out + ")";
}

// ---------------------------------------------------------------------------
// CSV ingestion

namespace {

// RFC-4180 record splitter: quoted fields, doubled quotes, CRLF or LF.
class CsvReader {
 public:
  explicit CsvReader(const std::string& text) : text_(text) {
    if (text_.size() >= 3 && static_cast<unsigned char>(text_[0]) == 0xEF &&
        static_cast<unsigned char>(text_[1]) == 0xBB && static_cast<unsigned char>(text_[2]) == 0xBF) {
      pos_ = 3;
    }
  }

  bool next(std::vector<std::string>& fields) {
    fields.clear();
    while (pos_ < text_.size() && is_blank_line()) skip_line();
    if (pos_ >= text_.size()) return false;
    ++record_;
    std::string field;
    bool quoted = false;
    bool was_quoted = false;
    while (pos_ < text_.size()) {
      const char c = text_[pos_++];
      if (quoted) {
        if (c == '"') {
          if (pos_ < text_.size() && text_[pos_] == '"') {
            field += '"';
            ++pos_;
          } else {
            quoted = false;
          }
        } else {
          field += c;
        }
      } else if (c == '"' && field.empty() && !was_quoted) {
        quoted = true;
        was_quoted = true;
      } else if (c == ',') {
        fields.push_back(was_quoted ? field : trim(field));
        field.clear();
        was_quoted = false;
      } else if (c == '\n' || c == '\r') {
        if (c == '\r' && pos_ < text_.size() && text_[pos_] == '\n') ++pos_;
        break;
      } else {
        field += c;
      }
    }
    if (quoted) throw IngestError("unterminated quoted field", record_ - 1);
    fields.push_back(was_quoted ? field : trim(field));
    return true;
  }

  std::size_t record() const noexcept { return record_; }

 private:
  bool is_blank_line() const {
    std::size_t p = pos_;
    while (p < text_.size() && (text_[p] == ' ' || text_[p] == '\t')) ++p;
    return p < text_.size() && (text_[p] == '\n' || text_[p] == '\r');
  }
  void skip_line() {
    while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
    if (pos_ < text_.size()) ++pos_;
  }

  const std::string& text_;
  std::size_t pos_ = 0;
  std::size_t record_ = 0;
};

bool parse_double(const std::string& text, double& out) {
  if (text.empty()) return false;
  std::string_view view = text;
  if (view.front() == '+') view.remove_prefix(1);
  const char* end = view.data() + view.size();
  auto [ptr, ec] = std::from_chars(view.data(), end, out);
  return ec == std::errc() && ptr == end;
}

int parse_binary(const std::string& text, const std::string& column, std::size_t row) {
  double v = 0.0;
  if (text.empty()) throw IngestError("missing value in column '" + column + "' at row " +
                                      std::to_string(row), row, column);
  if (!parse_double(text, v) || (v != 0.0 && v != 1.0)) {
    throw IngestError("column '" + column + "' must be 0 or 1, got '" + text + "' at row " +
                          std::to_string(row),
                      row, column);
  }
  return v == 1.0 ? 1 : 0;
}

std::size_t find_column(const std::vector<std::string>& header, const std::string& name) {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw IngestError("missing column '" + name + "'", 0, name);
  return static_cast<std::size_t>(it - header.begin());
}

}  // namespace

IngestResult ingest_csv_text(const std::string& text, const ColumnMap& columns) {
  CsvReader reader(text);
  std::vector<std::string> header;
  if (!reader.next(header)) throw IngestError("file is empty (header row required)");

  const std::size_t y_col = find_column(header, columns.outcome);
  const std::size_t d_col = find_column(header, columns.treatment);
  const std::size_t z_col = find_column(header, columns.instrument);
  std::vector<std::size_t> x_cols;
  for (const auto& name : columns.covariates) x_cols.push_back(find_column(header, name));

  std::vector<double> y;
  std::vector<int> d;
  std::vector<int> z;
  std::vector<std::vector<std::string>> raw_x(x_cols.size());

  std::vector<std::string> fields;
  std::size_t row = 0;
  while (reader.next(fields)) {
    ++row;
    if (fields.size() != header.size()) {
      throw IngestError("row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                            " fields, header has " + std::to_string(header.size()),
                        row);
    }
    double yv = 0.0;
    if (fields[y_col].empty()) {
      throw IngestError("missing outcome in column '" + columns.outcome + "' at row " +
                            std::to_string(row),
                        row, columns.outcome);
    }
    if (!parse_double(fields[y_col], yv) || !std::isfinite(yv)) {
      throw IngestError("non-numeric outcome '" + fields[y_col] + "' in column '" +
                            columns.outcome + "' at row " + std::to_string(row),
                        row, columns.outcome);
    }
    y.push_back(yv);
    d.push_back(parse_binary(fields[d_col], columns.treatment, row));
    z.push_back(parse_binary(fields[z_col], columns.instrument, row));
    for (std::size_t k = 0; k < x_cols.size(); ++k) {
      const std::string& v = fields[x_cols[k]];
      if (v.empty()) {
        throw IngestError("missing covariate '" + columns.covariates[k] + "' at row " +
                              std::to_string(row),
                          row, columns.covariates[k]);
      }
      raw_x[k].push_back(v);
    }
  }

  // Covariate columns: all integers -> codes as read; all numbers with a
  // fraction somewhere -> continuous, rejected; otherwise label-coded.
  IngestResult result;
  const std::size_t n = y.size();
  const std::size_t width = x_cols.size();
  std::vector<std::int64_t> x(n * width);
  for (std::size_t k = 0; k < width; ++k) {
    const std::string& name = columns.covariates[k];
    bool all_int = true;
    bool all_numeric = true;
    std::size_t first_fraction_row = 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::int64_t iv = 0;
      double dv = 0.0;
      if (parse_int(raw_x[k][i], iv)) {
        x[i * width + k] = iv;
      } else if (parse_double(raw_x[k][i], dv)) {
        all_int = false;
        if (first_fraction_row == 0) first_fraction_row = i + 1;
      } else {
        all_int = false;
        all_numeric = false;
      }
    }
    if (all_int) continue;
    if (all_numeric) {
      throw IngestError("covariate '" + name + "' has non-integer value '" +
                            raw_x[k][first_fraction_row - 1] + "' at row " +
                            std::to_string(first_fraction_row) +
                            " (continuous covariates are not supported)",
                        first_fraction_row, name);
    }
    auto& dict = result.labels[name];
    for (std::size_t i = 0; i < n; ++i) {
      auto [it, inserted] = dict.try_emplace(raw_x[k][i], static_cast<std::int64_t>(dict.size()));
      x[i * width + k] = it->second;
    }
  }

  result.sample = Sample(std::move(y), std::move(d), std::move(z), std::move(x), columns.covariates);
  return result;
}

IngestResult ingest_csv(const std::filesystem::path& path, const ColumnMap& columns) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ingest_csv_text(buffer.str(), columns);
}

}  // namespace itedist
