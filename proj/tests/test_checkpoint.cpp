#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ltc/checkpoint.hpp"
#include "ltc/rng.hpp"

using namespace ltc;

namespace {

Checkpoint sample_checkpoint() {
  Rng rng(77);
  Checkpoint ck;
  ck.kind = CellKind::Ltc;
  ck.params = init_training_cell(CellKind::Ltc, 5, 3, Activation::Sigmoid, rng);
  ck.head.w_out = Matrix(5, 2);
  for (auto& v : ck.head.w_out.data) v = rng.next_gaussian();
  ck.head.b_out = {0.1, -0.2};
  ck.config.learning_rate = 0.1;  // non-dyadic on purpose
  ck.config.seed = 0xdeadbeefcafe1234ull;
  ck.config.class_weights = {1.0, 15.0};
  ck.best_validation_metric = 0.1;
  return ck;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("ltc_test_" + std::to_string(Catch::rngSeed()) + "_" +
            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("checkpoint: save -> load -> save is byte-identical", "[checkpoint]") {
  TempDir dir;
  const auto p1 = dir.path / "a.json";
  const auto p2 = dir.path / "b.json";
  Checkpoint ck = sample_checkpoint();
  checkpoint_save(p1, ck);
  Checkpoint loaded = checkpoint_load(p1);
  checkpoint_save(p2, loaded);
  CHECK(slurp(p1) == slurp(p2));
}

TEST_CASE("checkpoint: exact round trip of every 64-bit value", "[checkpoint]") {
  TempDir dir;
  const auto path = dir.path / "ck.json";
  Checkpoint ck = sample_checkpoint();
  checkpoint_save(path, ck);
  Checkpoint r = checkpoint_load(path);

  CHECK(r.params.tau == ck.params.tau);
  CHECK(r.params.mu == ck.params.mu);
  CHECK(r.params.a_vec == ck.params.a_vec);
  CHECK(r.params.gamma.data == ck.params.gamma.data);
  CHECK(r.params.gamma_r.data == ck.params.gamma_r.data);
  CHECK(r.head.w_out.data == ck.head.w_out.data);
  CHECK(r.head.b_out == ck.head.b_out);
  CHECK(r.config.learning_rate == 0.1);  // bit-exact, not approximately
  CHECK(r.best_validation_metric == 0.1);
  CHECK(r.config.seed == ck.config.seed);
  CHECK(r.config.class_weights == ck.config.class_weights);
  CHECK(r.rng_algorithm == kRngAlgorithm);
}

TEST_CASE("checkpoint: bumped format version rejected", "[checkpoint]") {
  TempDir dir;
  const auto path = dir.path / "ck.json";
  Checkpoint ck = sample_checkpoint();
  auto j = checkpoint_to_json(ck);
  j["format_version"] = 2;
  std::ofstream(path) << j.dump(2);
  CHECK_THROWS_AS(checkpoint_load(path), VersionError);
}

TEST_CASE("checkpoint: corrupt file raises a parse error", "[checkpoint]") {
  TempDir dir;
  const auto path = dir.path / "ck.json";
  std::ofstream(path) << "{ not json";
  CHECK_THROWS_AS(checkpoint_load(path), ParseError);

  const auto path2 = dir.path / "ck2.json";
  Checkpoint ck = sample_checkpoint();
  auto j = checkpoint_to_json(ck);
  j["params"]["tau"][0] = "zzz";
  std::ofstream(path2) << j.dump(2);
  CHECK_THROWS_AS(checkpoint_load(path2), ParseError);
}

TEST_CASE("checkpoint: missing file", "[checkpoint]") {
  CHECK_THROWS_AS(checkpoint_load("/nonexistent/dir/ck.json"), ParameterError);
}
