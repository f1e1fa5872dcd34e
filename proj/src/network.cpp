#include "dirnet/network.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "text.hpp"

#include "dirnet/error.hpp"

namespace dirnet {

namespace fs = std::filesystem;
using text::parse_int;
using text::split;
using text::trim;

std::string_view stage_tag(Stage stage) noexcept {
  switch (stage) {
    case Stage::Raw: return "E";
    case Stage::Observable: return "D";
    case Stage::Absolute: return "X";
    case Stage::Relative: return "Y";
  }
  return "?";
}

Stage stage_from_tag(std::string_view tag) {
  if (tag == "E") return Stage::Raw;
  if (tag == "D") return Stage::Observable;
  if (tag == "X") return Stage::Absolute;
  if (tag == "Y") return Stage::Relative;
  throw DataError("unknown stage tag '" + std::string(tag) + "'");
}

DynamicNetwork::DynamicNetwork(std::vector<NodeId> node_ids,
                               std::vector<std::string> period_labels,
                               std::vector<Matrix> periods, Stage stage)
    : node_ids_(std::move(node_ids)),
      period_labels_(std::move(period_labels)),
      periods_(std::move(periods)),
      stage_(stage) {
  const std::size_t n = node_ids_.size();
  if (periods_.size() != period_labels_.size()) {
    throw DataError("period label count does not match matrix count");
  }
  if (std::set<NodeId>(node_ids_.begin(), node_ids_.end()).size() != n) {
    throw DataError("duplicate node id");
  }
  for (std::size_t t = 0; t < periods_.size(); ++t) {
    const Matrix& m = periods_[t];
    if (m.rows() != n || m.cols() != n) {
      throw DataError("period " + std::to_string(t) + " matrix is not " + std::to_string(n) +
                      "x" + std::to_string(n));
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (m(i, i) != 0.0) {
        throw DataError("nonzero diagonal in period " + std::to_string(t));
      }
      for (std::size_t j = 0; j < n; ++j) {
        const double w = m(i, j);
        if (!std::isfinite(w) || w < 0.0) {
          throw DataError("negative or non-finite weight in period " + std::to_string(t));
        }
      }
    }
  }
}

std::size_t DynamicNetwork::index_of(NodeId id) const {
  const auto it = std::find(node_ids_.begin(), node_ids_.end(), id);
  if (it == node_ids_.end()) throw DataError("unknown node id " + std::to_string(id));
  return static_cast<std::size_t>(it - node_ids_.begin());
}

DynamicNetwork DynamicNetwork::with_periods(std::vector<Matrix> periods, Stage stage) const {
  return DynamicNetwork(node_ids_, period_labels_, std::move(periods), stage);
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last) {
    throw DataError("not a number: '" + std::string(text) + "'");
  }
  return value;
}

namespace {

[[noreturn]] void fail_at(std::size_t line, const std::string& what) {
  throw DataError("line " + std::to_string(line) + ": " + what);
}

}  // namespace

DynamicNetwork parse_edge_list(std::istream& in, const CsvFormat& format) {
  std::string line;
  std::size_t line_no = 0;

  // header
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  if (in.fail() && line.empty()) throw DataError("no records");
  {
    const auto cols = split(line, format.delimiter);
    const bool ok = cols.size() == 4 && cols[0] == "period" && cols[1] == "lender" &&
                    cols[2] == "borrower" && cols[3] == "weight";
    if (!ok) fail_at(line_no, "expected header 'period,lender,borrower,weight'");
  }

  std::vector<ExposureRecord> records;
  std::set<std::tuple<std::size_t, NodeId, NodeId>> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cols = split(line, format.delimiter);
    if (cols.size() != 4) fail_at(line_no, "expected 4 fields, got " + std::to_string(cols.size()));
    ExposureRecord rec;
    try {
      rec.period = parse_int<std::size_t>(cols[0]);
      rec.lender = parse_int<NodeId>(cols[1]);
      rec.borrower = parse_int<NodeId>(cols[2]);
      rec.weight = parse_double(cols[3]);
    } catch (const DataError& e) {
      fail_at(line_no, e.what());
    }
    if (!std::isfinite(rec.weight)) fail_at(line_no, "non-finite weight");
    if (rec.weight < 0.0) fail_at(line_no, "negative weight");
    if (rec.lender == rec.borrower) fail_at(line_no, "self-loop");
    if (!seen.emplace(rec.period, rec.lender, rec.borrower).second) {
      fail_at(line_no, "duplicate edge");
    }
    records.push_back(rec);
  }
  if (records.empty()) throw DataError("no records");

  std::set<NodeId> ids;
  std::set<std::size_t> periods;
  for (const auto& r : records) {
    ids.insert(r.lender);
    ids.insert(r.borrower);
    periods.insert(r.period);
  }
  const std::size_t n_periods = *periods.rbegin() + 1;
  if (periods.size() != n_periods) {
    for (std::size_t t = 0; t < n_periods; ++t) {
      if (!periods.count(t)) throw DataError("period " + std::to_string(t) + " has no records");
    }
  }

  std::vector<NodeId> node_ids(ids.begin(), ids.end());
  std::map<NodeId, std::size_t> index;
  for (std::size_t k = 0; k < node_ids.size(); ++k) index[node_ids[k]] = k;

  std::vector<Matrix> mats(n_periods, Matrix(node_ids.size(), node_ids.size()));
  for (const auto& r : records) {
    mats[r.period](index[r.lender], index[r.borrower]) = r.weight;
  }
  std::vector<std::string> labels;
  for (std::size_t t = 0; t < n_periods; ++t) labels.push_back(std::to_string(t));
  return DynamicNetwork(std::move(node_ids), std::move(labels), std::move(mats), Stage::Raw);
}

DynamicNetwork read_edge_list(const fs::path& path, const CsvFormat& format) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return parse_edge_list(in, format);
}

void write_edge_list(const DynamicNetwork& net, std::ostream& out) {
  out << "period,lender,borrower,weight\n";
  const auto& ids = net.node_ids();
  for (std::size_t t = 0; t < net.n_periods(); ++t) {
    const Matrix& m = net.period(t);
    for (std::size_t i = 0; i < net.n_nodes(); ++i) {
      for (std::size_t j = 0; j < net.n_nodes(); ++j) {
        if (m(i, j) > 0.0) {
          out << t << ',' << ids[i] << ',' << ids[j] << ',' << format_double(m(i, j)) << '\n';
        }
      }
    }
  }
}

std::vector<PeriodStats> network_stats(const DynamicNetwork& net) {
  std::vector<PeriodStats> stats(net.n_periods());
  for (std::size_t t = 0; t < net.n_periods(); ++t) {
    for (const double w : net.period(t).values()) {
      if (w > 0.0) {
        ++stats[t].edge_count;
        stats[t].total_weight += w;
      }
    }
  }
  const double base = stats.empty() ? 0.0 : stats[0].total_weight;
  for (auto& s : stats) s.relative_total = base > 0.0 ? s.total_weight / base : 0.0;
  return stats;
}

namespace {

std::string period_file_name(std::size_t t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "period_%04zu.csv", t);
  return buf;
}

}  // namespace

void write_network_dir(const DynamicNetwork& net, const fs::path& dir) {
  fs::create_directories(dir);
  nlohmann::ordered_json manifest;
  manifest["n_nodes"] = net.n_nodes();
  manifest["n_periods"] = net.n_periods();
  manifest["stage"] = std::string(stage_tag(net.stage()));
  manifest["node_ids"] = net.node_ids();
  manifest["period_labels"] = net.period_labels();
  std::vector<std::string> files;
  for (std::size_t t = 0; t < net.n_periods(); ++t) {
    files.push_back(period_file_name(t));
    std::ofstream out(dir / files.back());
    if (!out) throw DataError("cannot write " + (dir / files.back()).string());
    const Matrix& m = net.period(t);
    for (std::size_t i = 0; i < m.rows(); ++i) {
      for (std::size_t j = 0; j < m.cols(); ++j) {
        if (j) out << ',';
        out << format_double(m(i, j));
      }
      out << '\n';
    }
  }
  manifest["files"] = files;
  std::ofstream out(dir / "manifest.json");
  if (!out) throw DataError("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

DynamicNetwork read_network_dir(const fs::path& dir) {
  std::ifstream min(dir / "manifest.json");
  if (!min) throw DataError("missing manifest.json in " + dir.string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(min);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("bad manifest.json: " + std::string(e.what()));
  }
  std::vector<NodeId> ids;
  std::vector<std::string> labels;
  std::vector<std::string> files;
  Stage stage{};
  try {
    ids = manifest.at("node_ids").get<std::vector<NodeId>>();
    labels = manifest.at("period_labels").get<std::vector<std::string>>();
    files = manifest.at("files").get<std::vector<std::string>>();
    stage = stage_from_tag(manifest.at("stage").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw DataError("bad manifest.json: " + std::string(e.what()));
  }
  if (files.size() != labels.size()) throw DataError("manifest file count mismatch");

  const std::size_t n = ids.size();
  std::vector<Matrix> mats;
  for (const auto& name : files) {
    std::ifstream in(dir / name);
    if (!in) throw DataError("cannot open " + (dir / name).string());
    Matrix m(n, n);
    std::string line;
    std::size_t i = 0;
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      if (i >= n) throw DataError(name + ": too many rows");
      const auto cols = split(line, ',');
      if (cols.size() != n) throw DataError(name + ": row " + std::to_string(i) + " has wrong width");
      for (std::size_t j = 0; j < n; ++j) m(i, j) = parse_double(cols[j]);
      ++i;
    }
    if (i != n) throw DataError(name + ": expected " + std::to_string(n) + " rows");
    mats.push_back(std::move(m));
  }
  return DynamicNetwork(std::move(ids), std::move(labels), std::move(mats), stage);
}

}  // namespace dirnet
