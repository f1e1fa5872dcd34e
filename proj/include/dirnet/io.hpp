#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "dirnet/posterior.hpp"
#include "dirnet/sampler.hpp"
#include "dirnet/transform.hpp"

namespace dirnet {

/// Revision identifier baked in at build time.
std::string code_id();

/// Streams retained draws to `<dir>/{mu,theta,gamma,tau}.csv` as
/// `iteration,index,value` rows, flushing after every draw. tau indices:
/// 0 = eta, 1 = theta, 2 = gamma.
class ChainWriter : public DrawSink {
 public:
  explicit ChainWriter(const std::filesystem::path& dir);
  void write(std::size_t iteration, const ModelParams& params) override;

 private:
  std::ofstream mu_, theta_, gamma_, tau_;
};

struct RunInfo {
  std::string input;        // data directory as given
  std::string seed_source;  // "flag", "config" or "entropy"
  Hyperparams hyper;
  std::string created;      // timestamp; only ever stored in the manifest
};

/// Manifest of a run in progress: config, seed, data shape, code id.
void write_chain_manifest_started(const std::filesystem::path& dir, const ModelData& data,
                                  const ChainConfig& config, const RunInfo& info);
/// Final manifest plus acceptance.csv.
void write_chain_results(const std::filesystem::path& dir, const PosteriorSample& sample, const RunInfo& info);

/// Reads a chain directory back. Throws DataError if it holds no draws.
PosteriorSample read_chain_dir(const std::filesystem::path& dir);

/// summary.json, drift.csv and nodes.csv. Missing quantiles are `NA` in CSV
/// and null in JSON.
void write_summary_dir(const std::filesystem::path& dir, const Summary& summary);

/// `node,relevance,<one column per period label>`.
void write_relevance_csv(const std::filesystem::path& path, const RelevanceTable& table,
                         const std::vector<std::string>& period_labels);
RelevanceTable read_relevance_csv(const std::filesystem::path& path);

void write_rescale_json(const std::filesystem::path& path, const RescaleReport& report,
                        const std::vector<std::string>& period_labels);

/// `period,node,delta_entropy`, period given by its label.
void write_entropy_change_csv(const std::filesystem::path& path, const std::vector<EntropyChange>& changes,
                              const std::vector<std::string>& period_labels);

void write_truth_json(const std::filesystem::path& path, const ModelParams& truth, std::uint64_t seed);
ModelParams read_truth_json(const std::filesystem::path& path);

}  // namespace dirnet
