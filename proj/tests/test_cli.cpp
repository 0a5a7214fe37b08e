#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "tagcf/checkpoint.hpp"
#include "tagcf/manifest.hpp"
#include "tagcf/model.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliRun {
  int code = -1;
  std::string output;  // stdout and stderr combined
};

CliRun cli(const testutil::TempDir& tmp, const std::string& args) {
  static int counter = 0;
  const fs::path capture = tmp.file("cli-capture-" + std::to_string(counter++) + ".txt");
  const std::string cmd =
      std::string(TAGCF_CLI_PATH) + " " + args + " > " + capture.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  CliRun r;
  if (WIFEXITED(status)) r.code = WEXITSTATUS(status);
  r.output = testutil::read_file(capture);
  return r;
}

fs::path latest_run(const fs::path& root) {
  std::string name = testutil::read_file(root / "latest");
  while (!name.empty() && (name.back() == '\n' || name.back() == '\r')) name.pop_back();
  return root / name;
}

json manifest_of(const fs::path& run_dir) {
  return json::parse(testutil::read_file(run_dir / "manifest.json"));
}

// Small synthetic corpus and a 2-epoch training so every invocation is quick.
const char* kConfig =
    "[model]\n"
    "K = 1\n"
    "d = 8\n"
    "h = 4\n"
    "[train]\n"
    "learning_rate = 0.05\n"
    "batch_size = 64\n"
    "max_epochs = 2\n"
    "patience = 5\n"
    "seed = 7\n"
    "[synthetic]\n"
    "n_users = 30\n"
    "n_items = 24\n"
    "n_topics = 3\n"
    "interactions_per_user = 5\n"
    "noise_rate = 0.1\n"
    "seed = 7\n"
    "[experiment]\n"
    "s_grid = [0.5]\n"
    "c_grid = [0.25]\n"
    "layer_grid = [1, 2]\n"
    "seeds = [7]\n";

std::size_t count_lines(const std::string& text) {
  std::size_t n = 0;
  for (const char c : text)
    if (c == '\n') ++n;
  return n;
}

}  // namespace

TEST_CASE("the command-line tool covers the full data-to-metrics flow") {
  testutil::TempDir tmp;
  testutil::write_file(tmp.file("cfg.toml"), kConfig);
  const fs::path root = tmp.file("runs");
  const std::string base = "--config " + tmp.file("cfg.toml").string() + " --out " +
                           root.string() + " ";

  // gen-synthetic
  auto gen = cli(tmp, base + "gen-synthetic");
  REQUIRE(gen.code == 0);
  CHECK(gen.output.find("generated 30 users") != std::string::npos);
  const fs::path gen_dir = latest_run(root);
  CHECK(gen_dir == root / "run-000001");
  {
    const json m = manifest_of(gen_dir);
    CHECK(m.at("status") == "ok");
    CHECK(m.at("command") == "gen-synthetic");
    CHECK(m.at("seed") == 7);
    for (const char* name :
         {"interactions.tsv", "split.tsv", "topics.tsv", "reviews.jsonl", "items.jsonl"}) {
      CHECK(fs::exists(gen_dir / name));
      CHECK(m.at("outputs").at(name).get<std::string>() ==
            tagcf::sha256_file(gen_dir / name));
    }
    CHECK(m.at("config").get<std::string>().find("[model]") == 0);
  }

  const std::string interactions = (gen_dir / "interactions.tsv").string();
  const std::string reviews = (gen_dir / "reviews.jsonl").string();
  const std::string split = (gen_dir / "split.tsv").string();

  // extract --mock, twice: byte-identical attribute output
  auto ext1 = cli(tmp, base + "extract --interactions " + interactions + " --reviews " +
                           reviews + " --mock");
  REQUIRE(ext1.code == 0);
  CHECK(ext1.output.find("extraction:") != std::string::npos);
  const fs::path ext1_dir = latest_run(root);
  auto ext2 = cli(tmp, base + "extract --interactions " + interactions + " --reviews " +
                           reviews + " --mock");
  REQUIRE(ext2.code == 0);
  const fs::path ext2_dir = latest_run(root);
  CHECK(ext1_dir != ext2_dir);
  CHECK(testutil::read_file(ext1_dir / "attributes.jsonl") ==
        testutil::read_file(ext2_dir / "attributes.jsonl"));
  CHECK(testutil::read_file(ext1_dir / "extraction_log.jsonl").find("\"mock\":true") !=
        std::string::npos);
  const std::string attributes = (ext1_dir / "attributes.jsonl").string();

  // build with the attribute pipeline
  const std::string build_args = base + "build --interactions " + interactions +
                                 " --attributes " + attributes + " --split " + split;
  auto build1 = cli(tmp, build_args);
  REQUIRE(build1.code == 0);
  CHECK(build1.output.find("graph: 30 users, 24 items") != std::string::npos);
  const fs::path build_dir = latest_run(root);
  std::uint32_t filtered_vocab = 0;
  {
    const json m = manifest_of(build_dir);
    CHECK(m.at("status") == "ok");
    for (const char* name : {"interactions.tsv", "split.tsv", "vocabulary.tsv",
                             "ua_edges.tsv", "ia_edges.tsv", "graph_summary.json"})
      CHECK(fs::exists(build_dir / name));
    const json s = json::parse(testutil::read_file(build_dir / "graph_summary.json"));
    CHECK(s.at("n_users") == 30);
    CHECK(s.at("n_items") == 24);
    CHECK(s.at("n_interactions_train") == 90);  // 5 per user split 3:1:1
    CHECK(s.at("n_interactions_val") == 30);
    CHECK(s.at("n_interactions_test") == 30);
    filtered_vocab = s.at("n_attrs_vocabulary").get<std::uint32_t>();
    CHECK(filtered_vocab >= 1);
    CHECK(s.at("n_attrs_graph").get<std::uint32_t>() <= filtered_vocab);
  }

  // a rebuild from the same inputs is byte-identical
  auto build2 = cli(tmp, build_args);
  REQUIRE(build2.code == 0);
  CHECK(manifest_of(latest_run(root)).at("outputs") ==
        manifest_of(build_dir).at("outputs"));

  // --no-ff keeps the unfiltered vocabulary
  auto build3 = cli(tmp, build_args + " --no-ff");
  REQUIRE(build3.code == 0);
  {
    const json s =
        json::parse(testutil::read_file(latest_run(root) / "graph_summary.json"));
    CHECK(s.at("n_attrs_vocabulary").get<std::uint32_t>() > filtered_vocab);
  }

  // train from the build directory
  auto train1 = cli(tmp, base + "train --build-dir " + build_dir.string());
  REQUIRE(train1.code == 0);
  CHECK(train1.output.find("training:") != std::string::npos);
  CHECK(train1.output.find("best recall@20") != std::string::npos);
  const fs::path train_dir = latest_run(root);
  CHECK(fs::exists(train_dir / "model.ckpt"));
  const std::string log = testutil::read_file(train_dir / "training_log.csv");
  CHECK(log.rfind("epoch,loss,val_metric,elapsed_seconds\n", 0) == 0);
  CHECK(count_lines(log) <= 3);
  {
    const tagcf::Model m = tagcf::load_checkpoint(train_dir / "model.ckpt");
    CHECK(m.emb.users.rows == 30);
    CHECK(m.emb.items.rows == 24);
    CHECK(m.config.K == 1);
    CHECK(m.config.d == 8);
    CHECK(m.config.ablation == tagcf::Ablation::Full);
  }
  const std::string checkpoint = (train_dir / "model.ckpt").string();

  // eval on test and val splits
  auto eval_test = cli(tmp, base + "eval --build-dir " + build_dir.string() +
                                " --checkpoint " + checkpoint);
  REQUIRE(eval_test.code == 0);
  CHECK(eval_test.output.find("recall@20 =") != std::string::npos);
  CHECK(eval_test.output.find("evaluated 30 users on the test split") != std::string::npos);
  {
    const std::string csv = testutil::read_file(latest_run(root) / "metrics.csv");
    CHECK(csv.rfind("metric,K,value,n_users\n", 0) == 0);
    CHECK(csv.find("recall,5,") != std::string::npos);
    CHECK(csv.find("ndcg,20,") != std::string::npos);
  }
  auto eval_val = cli(tmp, base + "eval --build-dir " + build_dir.string() +
                               " --checkpoint " + checkpoint + " --split-name val");
  REQUIRE(eval_val.code == 0);
  CHECK(eval_val.output.find("on the val split") != std::string::npos);

  // a checkpoint from the attribute graph cannot score an attribute-free graph
  auto base_build = cli(tmp, base + "build --interactions " + interactions + " --split " +
                                 split);
  REQUIRE(base_build.code == 0);
  const fs::path base_build_dir = latest_run(root);
  auto mismatch = cli(tmp, base + "eval --build-dir " + base_build_dir.string() +
                               " --checkpoint " + checkpoint);
  CHECK(mismatch.code == 1);
  CHECK(manifest_of(latest_run(root)).at("status") == "error");
  CHECK(manifest_of(latest_run(root)).at("error").get<std::string>().find(
            "does not match the graph") != std::string::npos);

  // path analysis over the build directory
  auto paths = cli(tmp, base + "analyze-paths --build-dir " + build_dir.string());
  REQUIRE(paths.code == 0);
  CHECK(paths.output.find("paths:") != std::string::npos);
  {
    const fs::path run = latest_run(root);
    const std::string csv = testutil::read_file(run / "path_stats.csv");
    CHECK(csv.rfind("total_2hop_paths,connected_pairs,overlap_ratio,overlap_ratio_alt\n",
                    0) == 0);
    CHECK(count_lines(csv) == 2);
    CHECK(fs::exists(run / "sample_paths.txt"));
  }

  // layer sweep: rows per (K, seed, model) plus the improvement summary
  const std::string sweep_base = base + "sweep --interactions " + interactions +
                                 " --attributes " + attributes + " --split " + split;
  auto layers = cli(tmp, sweep_base + " --kind layers --grid 1,2");
  REQUIRE(layers.code == 0);
  {
    const fs::path run = latest_run(root);
    const std::string csv = testutil::read_file(run / "sweep.csv");
    CHECK(csv.rfind("sweep_param,seed,model,recall@20,ndcg@20\n", 0) == 0);
    CHECK(count_lines(csv) == 5);  // header + 2 K values x (tagcf, baseline)
    CHECK(csv.find("K=1,7,tagcf,") != std::string::npos);
    CHECK(csv.find("K=2,7,baseline,") != std::string::npos);
    const std::string imp = testutil::read_file(run / "layer_improvement.csv");
    CHECK(imp.rfind("K,tagcf_recall@20,baseline_recall@20,improvement_recall@20,", 0) == 0);
    CHECK(count_lines(imp) == 3);
  }

  // sparsity sweep
  auto sparsity = cli(tmp, sweep_base + " --kind sparsity --grid 0.5");
  REQUIRE(sparsity.code == 0);
  {
    const std::string csv = testutil::read_file(latest_run(root) / "sweep.csv");
    CHECK(count_lines(csv) == 3);
    CHECK(csv.find("s=0.5,7,tagcf,") != std::string::npos);
    CHECK(csv.find("s=0.5,7,baseline,") != std::string::npos);
  }

  // cold-start sweep wires item metadata into the graph
  auto cold = cli(tmp, sweep_base + " --kind cold --grid 0.25 --items " +
                           (gen_dir / "items.jsonl").string());
  REQUIRE(cold.code == 0);
  {
    const std::string csv = testutil::read_file(latest_run(root) / "sweep.csv");
    CHECK(count_lines(csv) == 3);
    CHECK(csv.find("c=0.25,7,tagcf,") != std::string::npos);
  }

  // --no-argc wins over --no-ff when both ablations are requested
  auto ablated = cli(tmp, base + "train --interactions " + interactions + " --attributes " +
                              attributes + " --split " + split + " --no-ff --no-argc");
  REQUIRE(ablated.code == 0);
  {
    const tagcf::Model m = tagcf::load_checkpoint(latest_run(root) / "model.ckpt");
    CHECK(m.config.ablation == tagcf::Ablation::NoArgc);
  }

  // --seed overrides every configured seed
  auto reseeded = cli(tmp, base + "--seed 123 gen-synthetic");
  REQUIRE(reseeded.code == 0);
  CHECK(manifest_of(latest_run(root)).at("seed") == 123);
}

TEST_CASE("failures exit nonzero and record the error in the manifest") {
  testutil::TempDir tmp;
  testutil::write_file(tmp.file("cfg.toml"), kConfig);
  const fs::path root = tmp.file("runs");
  const std::string base = "--config " + tmp.file("cfg.toml").string() + " --out " +
                           root.string() + " ";

  auto gen = cli(tmp, base + "gen-synthetic");
  REQUIRE(gen.code == 0);
  const fs::path gen_dir = latest_run(root);
  const std::string interactions = (gen_dir / "interactions.tsv").string();
  const std::string reviews = (gen_dir / "reviews.jsonl").string();

  SUBCASE("missing input files") {
    auto r = cli(tmp, base + "build --interactions " + tmp.file("absent.tsv").string());
    CHECK(r.code == 1);
    CHECK(r.output.find("error:") != std::string::npos);
    const json m = manifest_of(latest_run(root));
    CHECK(m.at("status") == "error");
    CHECK_FALSE(m.at("error").get<std::string>().empty());
  }

  SUBCASE("build requires interactions") {
    auto r = cli(tmp, base + "build");
    CHECK(r.code == 1);
    CHECK(manifest_of(latest_run(root)).at("error").get<std::string>().find(
              "build requires --interactions") != std::string::npos);
  }

  SUBCASE("a broken config fails before any run directory exists") {
    testutil::write_file(tmp.file("bad.toml"), "ok = 1\nbroken = @\n");
    const fs::path fresh = tmp.file("fresh-runs");
    auto r = cli(tmp, "--config " + tmp.file("bad.toml").string() + " --out " +
                          fresh.string() + " gen-synthetic");
    CHECK(r.code == 1);
    CHECK(r.output.find("bad.toml:2") != std::string::npos);
    CHECK_FALSE(fs::exists(fresh / "latest"));
  }

  SUBCASE("live extraction refuses to start without an API key") {
    unsetenv("TAGCF_LLM_API_KEY");
    auto r = cli(tmp, base + "extract --interactions " + interactions + " --reviews " +
                          reviews);
    CHECK(r.code == 1);
    CHECK(manifest_of(latest_run(root)).at("error").get<std::string>().find(
              "TAGCF_LLM_API_KEY") != std::string::npos);
  }

  SUBCASE("sweep argument validation") {
    auto with_build_dir = cli(tmp, base + "sweep --kind layers --build-dir " +
                                       gen_dir.string());
    CHECK(with_build_dir.code == 1);
    CHECK(manifest_of(latest_run(root)).at("error").get<std::string>().find(
              "--build-dir") != std::string::npos);

    auto no_attrs = cli(tmp, base + "sweep --kind layers --interactions " + interactions);
    CHECK(no_attrs.code == 1);
    CHECK(manifest_of(latest_run(root)).at("error").get<std::string>().find(
              "requires --attributes") != std::string::npos);
  }

  SUBCASE("flag values are checked by the parser") {
    auto bad_split = cli(tmp, base + "eval --checkpoint x.ckpt --split-name bogus");
    CHECK(bad_split.code != 0);
    auto missing_required = cli(tmp, base + "extract --interactions " + interactions);
    CHECK(missing_required.code != 0);
    auto unknown = cli(tmp, base + "frobnicate");
    CHECK(unknown.code != 0);
  }
}
