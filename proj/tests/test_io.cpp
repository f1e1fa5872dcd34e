#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dirnet/error.hpp"
#include "dirnet/io.hpp"
#include "dirnet/synthetic.hpp"

using namespace dirnet;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("dirnet_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("chain directory round trip") {
    SynthSpec spec;
    spec.n_nodes = 5;
    spec.n_periods = 2;
    spec.seed = 3;
    const auto sim = generate(spec);
    const ModelData data(sim.network);
    ChainConfig c;
    c.n_iterations = 400;
    c.n_burnin = 200;
    c.thin = 4;
    c.seed = 9;
    const fs::path dir = fresh_dir("chain");
    RunInfo info;
    info.seed_source = "flag";
    write_chain_manifest_started(dir, data, c, info);
    PosteriorSample sample;
    {
      ChainWriter writer(dir);
      RunHooks hooks;
      hooks.sink = &writer;
      sample = run_chain(data, Hyperparams{}, c, hooks);
    }
    write_chain_results(dir, sample, info);
    const PosteriorSample back = read_chain_dir(dir);
    CHECK(back.iterations == sample.iterations);
    CHECK(back.mu == sample.mu);
    CHECK(back.theta == sample.theta);
    CHECK(back.gamma == sample.gamma);
    CHECK(back.tau == sample.tau);
    CHECK(back.acceptance == sample.acceptance);
    CHECK(back.config.seed == 9);
    CHECK(back.node_ids == sample.node_ids);

    // a truncated draw at the end of an interrupted run is dropped
    {
      std::ofstream app(dir / "theta.csv", std::ios::app);
      app << "9999,0,1.5\n";
    }
    {
      std::ofstream app(dir / "mu.csv", std::ios::app);
      app << "9999,0,1.5\n";
    }
    CHECK(read_chain_dir(dir).n_draws() == sample.n_draws());
    fs::remove_all(dir);
  }

  TEST_CASE("empty or missing chain directory is an error") {
    const fs::path dir = fresh_dir("empty");
    fs::create_directories(dir);
    CHECK_THROWS_AS(read_chain_dir(dir), DataError);
    SynthSpec spec;
    spec.n_nodes = 3;
    spec.n_periods = 1;
    const auto sim = generate(spec);
    ChainConfig c;
    write_chain_manifest_started(dir, ModelData(sim.network), c, RunInfo{});
    ChainWriter writer(dir);
    CHECK_THROWS_AS(read_chain_dir(dir), DataError);
    fs::remove_all(dir);
  }

  TEST_CASE("relevance csv round trip") {
    RelevanceTable t;
    t.node_ids = {4, 9};
    t.per_period = Matrix(2, 2);
    t.per_period(0, 0) = 1.25, t.per_period(0, 1) = 2.0;
    t.per_period(1, 0) = 0.0, t.per_period(1, 1) = 1.0 / 3.0;
    t.aggregated = {3.25, 1.0 / 3.0};
    const fs::path dir = fresh_dir("rel");
    fs::create_directories(dir);
    write_relevance_csv(dir / "r.csv", t, {"q1", "q2"});
    CHECK(slurp(dir / "r.csv").rfind("node,relevance,q1,q2\n4,3.25,1.25,2\n", 0) == 0);
    const auto back = read_relevance_csv(dir / "r.csv");
    CHECK(back.node_ids == t.node_ids);
    CHECK(back.aggregated == t.aggregated);
    CHECK(back.per_period == t.per_period);
    fs::remove_all(dir);
  }

  TEST_CASE("summary files") {
    Summary s;
    s.n_draws = 10;
    s.mu = {ScalarSummary{"mu[0]", 0.5, 0.1, std::nullopt, std::nullopt, std::nullopt, std::nullopt}};
    s.drift = {DriftRow{0, "2008Q1", 0.5, std::nullopt, std::nullopt}};
    s.nodes = {NodeRow{7, 0.1, 0.2, -0.1, 0.3, std::nullopt}};
    const fs::path dir = fresh_dir("summary");
    write_summary_dir(dir, s);
    CHECK(slurp(dir / "drift.csv") == "t,label,mean,lo,hi\n0,2008Q1,0.5,NA,NA\n");
    CHECK(slurp(dir / "nodes.csv") ==
          "node,theta_mean,theta_var,gamma_mean,gamma_var,relevance\n7,0.1,0.2,-0.1,0.3,NA\n");
    CHECK(slurp(dir / "summary.json").find("\"q025\": null") != std::string::npos);
    fs::remove_all(dir);
  }

  TEST_CASE("truth json round trip") {
    SynthSpec spec;
    spec.seed = 12;
    const auto sim = generate(spec);
    const fs::path dir = fresh_dir("truth");
    fs::create_directories(dir);
    write_truth_json(dir / "truth.json", sim.truth, 12);
    CHECK(read_truth_json(dir / "truth.json") == sim.truth);
    fs::remove_all(dir);
  }
}
