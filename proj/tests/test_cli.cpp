#include <doctest.h>

#include "graftnet/checkpoint.hpp"
#include "graftnet/cli.hpp"
#include "graftnet/config.hpp"
#include "graftnet/report.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace graftnet;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = GRAFTNET_SOURCE_DIR;

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "graftnet");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "graftnet_test_cli";
  fs::create_directories(dir);
  return dir / name;
}

Architecture arch() { return small_convnet({1, 8, 8}, 3, 4, 3); }

fs::path constant_checkpoint(const std::string& name, double v) {
  auto p = Network::zeros(arch()).parameters();
  for (auto& t : p) t.value.data().setConstant(v);
  const auto path = scratch(name);
  save_checkpoint(path, p);
  return path;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

const char* kTinyConfig = R"(seed: 4
students: 1
architecture:
  input: [1, 8, 8]
  layers:
    - {type: conv, channels: 3, padding: 1}
    - {type: relu}
    - {type: maxpool}
    - {type: flatten}
    - {type: dense, units: 3}
trainer: {learning_rate: 0.02, batch_size: 12, epochs: 2}
data: {num_classes: 3, train_per_class: 12, test_per_class: 4, image_size: 8, seed: 1}
output: {dir: tiny_run}
)";

}  // namespace

TEST_CASE("usage errors exit with 1 and print usage on stderr") {
  for (const auto& args : std::vector<std::vector<std::string>>{
           {}, {"frobnicate"}, {"analyze"}, {"analyze", "--checkpoint", "x", "--bogus"}}) {
    const auto r = cli(args);
    CHECK(r.code == 1);
    CHECK(r.err.find("Usage") != std::string::npos);
    CHECK(r.out.empty());
  }
  const auto help = cli({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("gradcheck") != std::string::npos);
}

TEST_CASE("runtime failures exit with 2") {
  const auto r = cli({"analyze", "--checkpoint", scratch("missing.ckpt").string()});
  CHECK(r.code == 2);
  CHECK_FALSE(r.err.empty());
}

TEST_CASE("analyze an all-zero checkpoint") {
  const auto zero = constant_checkpoint("zero.ckpt", 0.0);
  const auto r = cli({"analyze", "--checkpoint", zero.string(), "--thresholds", "0.1"});
  REQUIRE(r.code == 0);
  const auto rows = lines(r.out);
  REQUIRE(rows.size() == 2);
  CHECK(rows[1] == "0.1,own,7,0,7,1,,0,0");

  const auto json = cli({"analyze", "--checkpoint", zero.string(), "--format", "json"});
  CHECK(json.code == 0);
  CHECK(json.out.find("\"invalid_ratio\": 1.0") != std::string::npos);
  CHECK(cli({"analyze", "--checkpoint", zero.string(), "--thresholds", "-1"}).code == 1);
  CHECK(cli({"analyze", "--checkpoint", zero.string(), "--format", "xml"}).code == 1);
}

TEST_CASE("analyze with a baseline partition") {
  const auto zero = constant_checkpoint("zero_b.ckpt", 0.0);
  const auto ones = constant_checkpoint("ones_b.ckpt", 1.0);
  const auto r = cli({"analyze", "--checkpoint", ones.string(), "--baseline", zero.string(), "--thresholds", "0.1"});
  REQUIRE(r.code == 0);
  // three 1x3x3 filters of l1 9 and four 3x3x3 filters of l1 27
  CHECK(lines(r.out)[1].rfind("0.1,baseline,7,0,7,1,,19.28571428571428", 0) == 0);
}

TEST_CASE("graft-demo on constant checkpoints averages to the midpoint") {
  const auto a = constant_checkpoint("ones.ckpt", 1.0);
  const auto b = constant_checkpoint("threes.ckpt", 3.0);
  const auto out = scratch("grafted.ckpt");
  const auto r = cli({"graft-demo", "--self", a.string(), "--other", b.string(), "--out", out.string(),
                      "--graft-dense"});
  REQUIRE(r.code == 0);
  const auto events = lines(r.out);
  CHECK(events.size() == 3);
  for (const auto& e : events) CHECK(parse_graft_event_json(e).alpha == 0.5);
  for (const auto& p : load_checkpoint(out)) CHECK(p.value.data().isConstant(2.0, 0.0));

  CHECK(cli({"graft-demo", "--self", a.string(), "--other", b.string(), "--criterion", "cosine"}).code == 1);
  CHECK(cli({"graft-demo", "--self", a.string(), "--other", b.string(), "--epsilon", "0.7"}).code == 1);
}

TEST_CASE("train matches a direct run of the same config") {
  const auto dir = fs::temp_directory_path() / "graftnet_test_cli" / "train";
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream(dir / "tiny.yaml") << kTinyConfig;
  }
  const auto r = cli({"train", "--config", (dir / "tiny.yaml").string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("student 0 test_accuracy") == 0);
  CHECK(r.out.find("iterations 6 graft_events 0") != std::string::npos);

  const auto direct = run_experiment(load_experiment_config(dir / "tiny.yaml"));
  CHECK(load_checkpoint(dir / "tiny_run" / "net0_final.ckpt") == direct.final_parameters[0]);
  CHECK(read_metrics(dir / "tiny_run" / "metrics.csv") == direct.metrics);

  const auto reseeded = cli({"train", "--config", (dir / "tiny.yaml").string(), "--out", (dir / "s9").string(),
                             "--seed", "9"});
  REQUIRE(reseeded.code == 0);
  CHECK_FALSE(load_checkpoint(dir / "s9" / "net0_final.ckpt") == direct.final_parameters[0]);

  {
    std::ofstream(dir / "bad.yaml") << "students: 1\nlearning: fast\n";
  }
  const auto bad = cli({"train", "--config", (dir / "bad.yaml").string()});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("learning") != std::string::npos);
  CHECK(cli({"train", "--config", (dir / "absent.yaml").string()}).code == 1);
}

TEST_CASE("compare prints per-epoch deltas and a summary") {
  std::vector<EpochMetrics> a(2), b(2);
  for (std::size_t e = 0; e < 2; ++e) {
    a[e].epoch = b[e].epoch = e;
    a[e].test_accuracy = 0.5;
    b[e].test_accuracy = 0.75;
  }
  const auto pa = scratch("a.csv"), pb = scratch("b.csv");
  export_metrics(a, pa, MetricsFormat::Csv);
  export_metrics(b, pb, MetricsFormat::Csv);
  const auto r = cli({"compare", pa.string(), pb.string()});
  REQUIRE(r.code == 0);
  const auto rows = lines(r.out);
  REQUIRE(rows.size() == 6);
  CHECK(rows[1].rfind("0,0,0.5,0.75,0.25,", 0) == 0);
  CHECK(rows[5] == "# mean_accuracy_delta 0.25");
  CHECK(cli({"compare", pa.string()}).code == 1);
}

TEST_CASE("gradcheck reports per-parameter errors") {
  const auto archfile = (kSource / "configs" / "gradcheck_arch.yaml").string();
  const auto ok = cli({"gradcheck", "--architecture", archfile});
  CHECK(ok.code == 0);
  const auto rows = lines(ok.out);
  CHECK(rows.front() == "parameter,max_relative_error,status");
  CHECK(rows.size() == 8);
  CHECK(rows.back().find("PASS") != std::string::npos);

  const auto strict = cli({"gradcheck", "--architecture", archfile, "--tolerance", "0"});
  CHECK(strict.code == 2);
  CHECK(strict.out.find("FLAGGED") != std::string::npos);
  CHECK(cli({"gradcheck", "--architecture", scratch("none.yaml").string()}).code == 1);
}
