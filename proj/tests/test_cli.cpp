#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dirnet/cli.hpp"
#include "dirnet/io.hpp"

using namespace dirnet;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out, err;
};

Run run(std::initializer_list<std::string> args) {
  std::vector<std::string> storage{"dirnet"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : storage) argv.push_back(s.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("dirnet_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

nlohmann::json manifest(const fs::path& chain) { return nlohmann::json::parse(slurp(chain / "manifest.json")); }

const fs::path kGolden = DIRNET_GOLDEN_DIR;

// Files whose bytes depend only on inputs, flags and seed.
const std::vector<std::string> kTransformFiles{"stats.csv", "rescale.json", "relevance.csv", "entropy_change.csv",
                                               "network/manifest.json", "network/period_0000.csv",
                                               "network/period_0001.csv", "network/period_0002.csv"};
const std::vector<std::string> kChainFiles{"mu.csv",      "theta.csv",   "gamma.csv", "tau.csv",
                                           "acceptance.csv", "run.conf", "summary.json", "drift.csv",
                                           "nodes.csv"};

void reference_run(const fs::path& dir) {
  const std::string input = (kGolden / "input.csv").string();
  REQUIRE(run({"transform", input, "-o", (dir / "t").string()}).code == 0);
  REQUIRE(run({"fit", (dir / "t" / "network").string(), "-o", (dir / "c").string(), "--iterations", "600",
               "--burnin", "200", "--thin", "4", "--seed", "2024", "--kernel", "scalar", "--quiet"})
              .code == 0);
  REQUIRE(run({"summarize", (dir / "c").string(), "--relevance", (dir / "t" / "relevance.csv").string()}).code ==
          0);
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("golden reference run") {
    const fs::path dir = scratch("golden");
    reference_run(dir);
    if (std::getenv("DIRNET_UPDATE_GOLDEN")) {
      for (const auto& f : kTransformFiles) {
        fs::create_directories((kGolden / "expected" / "transform" / f).parent_path());
        fs::copy_file(dir / "t" / f, kGolden / "expected" / "transform" / f, fs::copy_options::overwrite_existing);
      }
      fs::create_directories(kGolden / "expected" / "chain");
      for (const auto& f : kChainFiles) {
        fs::copy_file(dir / "c" / f, kGolden / "expected" / "chain" / f, fs::copy_options::overwrite_existing);
      }
    }
    for (const auto& f : kTransformFiles) {
      INFO(f);
      CHECK(slurp(dir / "t" / f) == slurp(kGolden / "expected" / "transform" / f));
    }
    for (const auto& f : kChainFiles) {
      INFO(f);
      CHECK(slurp(dir / "c" / f) == slurp(kGolden / "expected" / "chain" / f));
    }
    fs::remove_all(dir);
  }

  TEST_CASE("outputs are byte-identical across repeated runs") {
    const fs::path a = scratch("idem_a"), b = scratch("idem_b");
    reference_run(a);
    reference_run(b);
    for (const auto& f : kTransformFiles) CHECK(slurp(a / "t" / f) == slurp(b / "t" / f));
    for (const auto& f : kChainFiles) CHECK(slurp(a / "c" / f) == slurp(b / "c" / f));
    fs::remove_all(a);
    fs::remove_all(b);
  }

  TEST_CASE("top-k is passed through and validated") {
    const fs::path dir = scratch("topk");
    const std::string input = (kGolden / "input.csv").string();
    CHECK(run({"transform", input, "-o", (dir / "k3").string(), "--top-k", "3"}).code == 0);
    CHECK(manifest(dir / "k3" / "network")["n_nodes"] == 3);
    const Run zero = run({"transform", input, "-o", (dir / "k0").string(), "--top-k", "0"});
    CHECK(zero.code == kExitUsage);
    CHECK_FALSE(fs::exists(dir / "k0"));
    CHECK(run({"transform", input, "-o", (dir / "k9").string(), "--top-k", "9"}).code == kExitUsage);
    fs::remove_all(dir);
  }

  TEST_CASE("bad input maps to the data exit code") {
    const fs::path dir = scratch("bad");
    {
      std::ofstream f(dir / "loop.csv");
      f << "period,lender,borrower,weight\n0,1,1,3\n";
    }
    const Run r = run({"transform", (dir / "loop.csv").string(), "-o", (dir / "o").string()});
    CHECK(r.code == kExitData);
    CHECK(r.err.find("line 2: self-loop") != std::string::npos);
    CHECK(run({"summarize", dir.string()}).code == kExitData);
    CHECK(run({"fit"}).code == kExitUsage);
    fs::remove_all(dir);
  }

  TEST_CASE("simulate, fit and summarize round trip") {
    const fs::path dir = scratch("roundtrip");
    REQUIRE(run({"simulate", "-o", (dir / "sim").string(), "--nodes", "10", "--periods", "4", "--seed", "5"}).code ==
            0);
    CHECK(fs::exists(dir / "sim" / "truth.json"));
    const Run fit = run({"fit", (dir / "sim" / "network").string(), "-o", (dir / "c").string(), "--iterations",
                         "1000", "--burnin", "500", "--thin", "10", "--seed", "7", "--quiet"});
    REQUIRE(fit.code == 0);
    const auto m = manifest(dir / "c");
    CHECK(m["n_draws"] == 50);
    CHECK(m["seed"] == 7);
    CHECK(m["seed_source"] == "flag");
    CHECK(m["status"] == "complete");
    CHECK(read_chain_dir(dir / "c").n_draws() == 50);

    CHECK(run({"summarize", (dir / "c").string(), "-o", (dir / "s").string()}).code == 0);
    CHECK(fs::exists(dir / "s" / "drift.csv"));
    CHECK(fs::exists(dir / "s" / "nodes.csv"));

    // relevance with a foreign node set
    {
      std::ofstream f(dir / "rel.csv");
      f << "node,relevance,0\n0,1,1\n1,2,2\n42,3,3\n";
    }
    const Run mismatch = run({"summarize", (dir / "c").string(), "-o", (dir / "s2").string(), "--relevance",
                              (dir / "rel.csv").string()});
    CHECK(mismatch.code == kExitData);
    CHECK(mismatch.err.find("42") != std::string::npos);
    fs::remove_all(dir);
  }

  TEST_CASE("missing seed is drawn and recorded") {
    const fs::path dir = scratch("entropy");
    REQUIRE(run({"simulate", "-o", (dir / "sim").string(), "--nodes", "4", "--periods", "2"}).code == 0);
    const Run fit = run({"fit", (dir / "sim" / "network").string(), "-o", (dir / "c").string(), "--iterations",
                         "200", "--burnin", "100", "--thin", "10", "--quiet"});
    REQUIRE(fit.code == 0);
    const auto m = manifest(dir / "c");
    CHECK(m["seed_source"] == "entropy");
    CHECK(fit.err.find("using " + std::to_string(m["seed"].get<std::uint64_t>())) != std::string::npos);

    // run.conf reproduces the chain
    const Run again = run({"fit", (dir / "sim" / "network").string(), "-o", (dir / "c2").string(), "--config",
                           (dir / "c" / "run.conf").string(), "--quiet"});
    REQUIRE(again.code == 0);
    CHECK(manifest(dir / "c2")["seed_source"] == "config");
    CHECK(slurp(dir / "c" / "theta.csv") == slurp(dir / "c2" / "theta.csv"));
    fs::remove_all(dir);
  }

  TEST_CASE("help lists the default schedule") {
    const Run help = run({"fit", "--help"});
    CHECK(help.code == 0);
    const std::string text = help.out + help.err;
    for (const char* want : {"400000", "200000", "20", "0.22", "0.3", "0.1", "0.01"}) {
      INFO(want);
      CHECK(text.find(want) != std::string::npos);
    }
  }
}
