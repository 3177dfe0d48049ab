#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "sassc/commands.hpp"
#include "sassc/errors.hpp"
#include "sassc/io.hpp"

using namespace sassc;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag)
      : path(fs::temp_directory_path() / ("sassc_" + tag + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

RunConfig tiny_run(const fs::path& dir, const std::string& command) {
  RunConfig rc;
  rc.command = command;
  rc.out = dir;
  rc.instance = dir / "instance.json";
  rc.overrides.n1d = 4;
  rc.overrides.scenarios = 3;
  rc.seed = 1;
  return rc;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("canonical json") {
  Json j = {{"b", 1.0 / 3}, {"a", {1, 2, 3}}, {"c", {{"y", true}, {"x", nullptr}}}};
  CHECK(canonical_dump(j) ==
        "{\n  \"a\": [1, 2, 3],\n  \"b\": 0.33333333333333331,\n  \"c\": {\n    \"x\": null,\n    \"y\": true\n  }\n}\n");
  Json special = {{"v", {std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
                         std::numeric_limits<double>::quiet_NaN(), 0.1}}};
  CHECK(canonical_dump(special) == "{\n  \"v\": [\"inf\", \"-inf\", \"nan\", 0.10000000000000001]\n}\n");
  CHECK(canonical_dump(parse_json(canonical_dump(j))) == canonical_dump(j));
  CHECK_THROWS_AS(parse_json("{\"a\": "), InputError);
}

TEST_CASE("sha256") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("instance round-trip is byte-identical") {
  for (const InstanceConfig& c : {default_instance_config(), tiny_instance_config(5)}) {
    const std::string once = canonical_dump(instance_to_json(c));
    InstanceConfig back = instance_from_json(parse_json(once));
    CHECK(canonical_dump(instance_to_json(back)) == once);
    CHECK(instance_hash(back) == instance_hash(c));
    auto a = build_instance(c);
    auto b = build_instance(back);
    CHECK(a.loads == b.loads);
    CHECK(a.obstacles == b.obstacles);
    CHECK(a.target == b.target);
    CHECK((a.op(0).matrix() - b.op(0).matrix()).norm() == 0.0);
  }
  InstanceConfig arr = tiny_instance_config(1);
  arr.target = std::vector<double>(16, 0.25);
  arr.c1_lo = std::vector<double>(16, -2.0);
  const std::string t = canonical_dump(instance_to_json(arr));
  CHECK(canonical_dump(instance_to_json(instance_from_json(parse_json(t)))) == t);
}

TEST_CASE("instance parsing rejects bad documents") {
  Json j = instance_to_json(default_instance_config());
  Json bad = j;
  bad.erase("alpha");
  CHECK_THROWS_AS(instance_from_json(bad), InputError);
  bad = j;
  bad["alpha"] = "large";
  CHECK_THROWS_AS(instance_from_json(bad), InputError);
  bad = j;
  bad["alpha"] = -1.0;
  CHECK_THROWS_AS(instance_from_json(bad), InputError);
  CHECK_THROWS_AS(instance_from_json(Json::array()), InputError);
}

TEST_CASE("primal and dual shape checks") {
  auto inst = build_instance(tiny_instance_config(1));
  PrimalPoint x = PrimalPoint::zeros(inst);
  x.x1.setConstant(0.5);
  x.y(3, 2) = -1.25;
  auto back = primal_from_json(inst, parse_json(canonical_dump(primal_to_json(x))));
  CHECK(back.x1 == x.x1);
  CHECK(back.y == x.y);

  InstanceConfig other = tiny_instance_config(1);
  other.n1d = 5;
  auto big = build_instance(other);
  CHECK_THROWS_AS(primal_from_json(big, primal_to_json(x)), InputError);
  CHECK_THROWS_AS(dual_from_json(big, dual_to_json(DualPoint::zeros(inst))), InputError);

  Json nodual = dual_to_json(DualPoint::zeros(inst));
  nodual.erase("rho");
  DualPoint d = dual_from_json(inst, nodual);
  CHECK(d.rho.rows() == inst.nodes());
}

TEST_CASE("write_atomic creates parent directories") {
  TempDir tmp("atomic");
  write_atomic(tmp.path / "a" / "b" / "f.txt", "hello");
  CHECK(read_file(tmp.path / "a" / "b" / "f.txt") == "hello");
  write_atomic(tmp.path / "a" / "b" / "f.txt", "again");
  CHECK(read_file(tmp.path / "a" / "b" / "f.txt") == "again");
  CHECK_THROWS_AS(read_file(tmp.path / "missing.json"), InputError);
}

TEST_CASE("generate, solve, certify pipeline") {
  TempDir tmp("pipeline");
  auto gen = tiny_run(tmp.path, "generate");
  gen.instance.clear();
  REQUIRE(run_command(gen) == kExitOk);
  const std::string first = read_file(tmp.path / "instance.json");
  REQUIRE(run_command(gen) == kExitOk);
  CHECK(read_file(tmp.path / "instance.json") == first);

  auto solve = tiny_run(tmp.path, "solve");
  solve.history = true;
  REQUIRE(run_command(solve) == kExitOk);
  const std::string report = read_file(tmp.path / "report.json");
  const std::string primal = read_file(tmp.path / "primal.json");
  Json rep = parse_json(report);
  CHECK(rep["instance_sha256"] == sha256_hex(first));
  CHECK(rep["seed"] == 1);
  CHECK(rep["report"]["status"] == "converged");
  CHECK_FALSE(rep["report"].contains("wall_seconds"));
  CHECK(read_file(tmp.path / "history.csv").rfind("iteration,r1,", 0) == 0);

  REQUIRE(run_command(solve) == kExitOk);
  CHECK(read_file(tmp.path / "report.json") == report);
  CHECK(read_file(tmp.path / "primal.json") == primal);

  auto cert = tiny_run(tmp.path, "certify");
  CHECK(run_command(cert) == kExitOk);
  Json c = parse_json(read_file(tmp.path / "certificate.json"));
  CHECK(c["certified"] == true);
  CHECK(c["instance_sha256"] == sha256_hex(first));

  // Zero multipliers on a binding instance fail stationarity.
  auto inst = build_instance(instance_from_json(parse_json(first)));
  write_atomic(tmp.path / "zero_dual.json", canonical_dump(dual_to_json(DualPoint::zeros(inst))));
  cert.dual = tmp.path / "zero_dual.json";
  CHECK(run_command(cert) == kExitCheckFailed);
  c = parse_json(read_file(tmp.path / "certificate.json"));
  CHECK(c["kkt"]["r1"].get<double>() > 1e-3);
  CHECK(c["kkt"]["r3"].get<double>() > 1e-3);

  // Corrupt and mismatched inputs.
  write_atomic(tmp.path / "corrupt.json", "{\"x1\": [1, 2,");
  cert.dual = tmp.path / "corrupt.json";
  CHECK(run_command(cert) == kExitInputError);
  InstanceConfig other = tiny_instance_config(1);
  other.n1d = 3;
  write_atomic(tmp.path / "small.json",
               canonical_dump(dual_to_json(DualPoint::zeros(build_instance(other)))));
  cert.dual = tmp.path / "small.json";
  CHECK(run_command(cert) == kExitInputError);
}

TEST_CASE("exit codes") {
  TempDir tmp("exits");
  auto gen = tiny_run(tmp.path, "generate");
  gen.instance.clear();
  REQUIRE(run_command(gen) == kExitOk);

  auto capped = tiny_run(tmp.path, "solve");
  capped.max_iters = 1;
  CHECK(run_command(capped) == kExitIterationCap);
  CHECK(fs::exists(tmp.path / "report.json"));

  auto missing = tiny_run(tmp.path, "solve");
  missing.instance = tmp.path / "nope.json";
  CHECK(run_command(missing) == kExitInputError);

  auto badalg = tiny_run(tmp.path, "solve");
  badalg.algorithm = "simplex";
  CHECK(run_command(badalg) == kExitInputError);

  auto ellip = tiny_run(tmp.path, "generate");
  ellip.instance.clear();
  ellip.overrides.a_min = 0.0;
  ellip.out = tmp.path / "ellip";
  CHECK(run_command(ellip) == kExitInputError);
  CHECK_FALSE(fs::exists(tmp.path / "ellip" / "instance.json"));

  auto box = tiny_run(tmp.path, "generate");
  box.instance.clear();
  box.overrides.c1_lo = 1.0;
  box.overrides.c1_hi = 0.0;
  CHECK(run_command(box) == kExitInputError);

  auto hom = tiny_run(tmp.path, "homotopy");
  hom.schedule = {1, 10};
  CHECK(run_command(hom) == kExitInputError);

  auto guard = tiny_run(tmp.path, "solve");
  guard.algorithm = "barrier";
  guard.instance = tmp.path / "big.json";
  write_atomic(guard.instance, canonical_dump(instance_to_json(default_instance_config())));
  CHECK(run_command(guard) == kExitInputError);

  RunConfig unknown;
  unknown.command = "optimize";
  CHECK(run_command(unknown) == kExitInputError);
}

TEST_CASE("list parsing") {
  CHECK(parse_double_list("1,10,1e2") == std::vector<double>{1, 10, 100});
  CHECK(parse_int_list("7,15,31") == std::vector<int>{7, 15, 31});
  CHECK_THROWS_AS(parse_double_list("1,x"), InputError);
  CHECK_THROWS_AS(parse_int_list("7,15.5"), InputError);
}

}  // TEST_SUITE
