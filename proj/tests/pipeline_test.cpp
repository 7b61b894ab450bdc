#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "daedra/manifest.hpp"
#include "daedra/pipeline.hpp"
#include "daedra/records.hpp"
#include "doctest.h"
#include "support/synthetic.hpp"

using namespace daedra;
namespace fs = std::filesystem;
namespace pl = daedra::pipeline;

namespace {

struct ScratchDir {
  fs::path path = fs::temp_directory_path() / ("daedra-pipeline-test-" + std::to_string(::getpid()));
  ScratchDir() {
    fs::remove_all(path);
    fs::create_directories(path);
    pl::set_logging(false);
  }
  ~ScratchDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  out << body;
}

}  // namespace

TEST_CASE("sha256 known answers") {
  CHECK(manifest::sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(manifest::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("timestamps honour SOURCE_DATE_EPOCH") {
  ::setenv("SOURCE_DATE_EPOCH", "0", 1);
  CHECK(manifest::timestamp_now() == "1970-01-01T00:00:00Z");
  ::unsetenv("SOURCE_DATE_EPOCH");
}

TEST_CASE("manifest round trip and verification") {
  ScratchDir dir;
  write_file(dir / "in.txt", "input");
  write_file(dir / "out.txt", "output");
  manifest::RunManifest m;
  m.stage = "demo";
  m.seed = 9;
  m.inputs.push_back(manifest::digest_input(dir / "in.txt"));
  m.outputs.push_back(manifest::digest_output(dir / "out.txt", dir.path.string()));
  m.config = {{"k", 1}};
  m.started_at = m.finished_at = "2021-01-01T00:00:00Z";
  manifest::write_manifest(dir / "m.json", m);

  const auto back = manifest::read_manifest(dir / "m.json");
  CHECK(manifest::to_json(back) == manifest::to_json(m));
  CHECK(back.outputs.at(0).path == "out.txt");
  CHECK(manifest::verify(dir / "m.json").ok());

  write_file(dir / "in.txt", "changed");
  auto r = manifest::verify(dir / "m.json");
  CHECK_FALSE(r.ok());
  CHECK(r.problems.size() == 1);
  fs::remove(dir / "out.txt");
  CHECK(manifest::verify(dir / "m.json").problems.size() == 2);
}

TEST_CASE("stages refuse to overwrite without force") {
  ScratchDir dir;
  write_file(dir / "data.csv", testing::to_vaers_csv(testing::separable_corpus(50, 1)));
  pl::IngestOptions opts;
  opts.inputs = {dir / "data.csv"};
  opts.output = dir / "corpus.jsonl";
  CHECK(pl::ingest(opts).kept == 50);
  CHECK(fs::exists(dir / "corpus.jsonl.run.json"));
  CHECK_THROWS_AS(pl::ingest(opts), pl::StageError);
  opts.force = true;
  CHECK(pl::ingest(opts).kept == 50);

  opts.output = dir / "data.csv";
  CHECK_THROWS_AS(pl::ingest(opts), pl::StageError);  // never clobbers an input
}

TEST_CASE("ingest: several files, repeated ids, threads") {
  ScratchDir dir;
  const auto reports = testing::separable_corpus(40, 2);
  write_file(dir / "a.csv", testing::to_vaers_csv({reports.begin(), reports.begin() + 30}));
  write_file(dir / "b.csv", testing::to_vaers_csv({reports.begin() + 20, reports.end()}));
  pl::IngestOptions opts;
  opts.inputs = {dir / "a.csv", dir / "b.csv"};
  opts.output = dir / "corpus.jsonl";
  opts.threads = 2;
  const auto s = pl::ingest(opts);
  CHECK(s.kept == 40);
  CHECK(s.files.at(1).duplicates == 10);
  CHECK(records::read_jsonl_file(opts.output) == reports);
}

TEST_CASE("train config defaulting") {
  const auto desk = pl::train_config_from_json(nlohmann::json::object(), pl::Profile::kDesk);
  CHECK(desk.learning_rate == doctest::Approx(1e-2));
  CHECK(desk.batch_size == 64);
  CHECK(desk.epochs == 5);
  CHECK(desk.eval_every_steps == 5000);
  const auto protocol = pl::train_config_from_json({{"epochs", 3}}, pl::Profile::kProtocol);
  CHECK(protocol.learning_rate == doctest::Approx(2e-5));
  CHECK(protocol.epochs == 3);
  CHECK_THROWS_AS(pl::train_config_from_json({{"epoch", 3}}, pl::Profile::kDesk), pl::StageError);
  CHECK_THROWS_AS(pl::train_config_from_json({{"batch_size", 0}}, pl::Profile::kDesk), pl::StageError);
}

TEST_CASE("load_candidates") {
  ScratchDir dir;
  write_file(dir / "c.json", R"({"candidates": [
    {"name": "domain", "vocab_size": 300, "min_frequency": 3, "train": {"epochs": 2}},
    {"name": "generic", "tokenizer": "generic", "vocab": "v.txt"},
    {"name": "published", "precomputed": {"precision": 0.7, "recall": 0.6, "f1": 0.87, "runtime_seconds": 11050.53}}
  ]})");
  const auto c = pl::load_candidates(dir / "c.json");
  REQUIRE(c.size() == 3);
  CHECK(c[0].tokenizer_options.target_size == 300);
  CHECK(c[0].tokenizer_options.min_frequency == 3);
  CHECK(c[0].train.epochs == 2);
  CHECK(c[1].tokenizer == selection::TokenizerSource::kGenericVocab);
  CHECK(c[1].vocab_path == dir / "v.txt");
  REQUIRE(c[2].precomputed);
  CHECK(c[2].precomputed->runtime_seconds == doctest::Approx(11050.53));

  write_file(dir / "bad.json", R"({"candidates": [{"name": "x", "tokenizer": "magic"}]})");
  CHECK_THROWS_AS(pl::load_candidates(dir / "bad.json"), pl::StageError);
}
