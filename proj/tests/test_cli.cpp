#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "psz/error.hpp"
#include "psz/io.hpp"
#include "psz/scenario.hpp"

using namespace psz;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "psz_cli_test" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(PSZ_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_ini(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "scenario.ini";
  std::ofstream(p) << text;
  return p;
}

ErrorKind kind_of(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::internal;
}

}  // namespace

TEST_CASE("scenario parsing") {
  const auto sc = parse_scenario(
      "[scenario]\nname = t\npipelines = exact, zeros\nseed = 9\n"
      "[model]\nkind = blume_capel\nJ = 1.1\nlambda = -0.2\n"
      "[lattice]\nsizes = 3, 4\n[zeros]\npairs = 1:-1, 0:1\nseed_re = -1\nseed_im = 0.5\n");
  CHECK(sc.name == "t");
  CHECK(sc.pipelines == std::vector<std::string>{"exact", "zeros"});
  CHECK(sc.seed == 9);
  CHECK(sc.model.kind == "blume_capel");
  CHECK(sc.model.lambda == doctest::Approx(-0.2));
  CHECK(sc.sizes == std::vector<int>{3, 4});
  REQUIRE(sc.pairs.size() == 2);
  CHECK(sc.pairs[1] == std::pair{0, 1});
  CHECK(sc.curve_seed == Complex(-1.0, 0.5));
  CHECK_FALSE(sc.tau.has_value());
  CHECK(sc.model.build().num_spins() == 3);

  CHECK(kind_of("[scenario]\npipelines = exact\n[bogus]\nx = 1\n") == ErrorKind::config);
  CHECK(kind_of("[scenario]\npipelines = exact\nshape = 1\n") == ErrorKind::config);
  CHECK(kind_of("[scenario]\npipelines = teleport\n") == ErrorKind::config);
  CHECK(kind_of("[scenario]\npipelines =\n") == ErrorKind::config);
  CHECK(kind_of("[scenario]\npipelines = exact\n[model]\nJ = hot\n") == ErrorKind::config);
  CHECK(kind_of("[scenario]\npipelines = zeros\n[zeros]\npairs = 1-1\n") == ErrorKind::config);
}

TEST_CASE("presets parse") {
  REQUIRE_FALSE(preset_names().empty());
  for (const auto& name : preset_names()) CHECK_FALSE(parse_scenario(preset_text(name)).pipelines.empty());
  CHECK_THROWS_AS(preset_text("nope"), Error);
}

TEST_CASE("exit codes") {
  const fs::path dir = scratch("codes");
  CHECK(run_cli("") == 2);
  CHECK(run_cli("--scenario a.ini --preset zeros-ising") == 2);
  CHECK(run_cli("--preset nope") == 2);
  CHECK(run_cli("--scenario " + (dir / "missing.ini").string()) == 2);
  CHECK(run_cli("--preset zeros-ising --workers 0") == 2);
  CHECK(run_cli("--scenario " + write_ini(dir, "[scenario]\nname = e\npipelines =\n").string()) == 2);
  const auto big = write_ini(dir, "[scenario]\nname = b\npipelines = exact\n[model]\nkind = blume_capel\n"
                                  "[lattice]\nsizes = 9\n");
  CHECK(run_cli("--scenario " + big.string() + " --out " + (dir / "big").string()) == 3);
  const auto original = write_ini(dir, "[scenario]\nname = o\npipelines = exact\n[model]\nnormalization = original\n");
  CHECK(run_cli("--scenario " + original.string() + " --out " + (dir / "original").string()) == 0);
}

TEST_CASE("preset run writes a consistent manifest") {
  const fs::path out = scratch("run");
  REQUIRE(run_cli("--preset zeros-ising --workers 2 --out " + out.string()) == 0);
  const auto manifest = nlohmann::json::parse(read_file(out / "manifest.json"));
  REQUIRE(manifest["files"].size() > 0);
  for (const auto& f : manifest["files"]) {
    const std::string body = read_file(out / f["path"].get<std::string>());
    CHECK(f["bytes"].get<std::size_t>() == body.size());
    CHECK(f["sha256"].get<std::string>() == sha256_hex(body));
  }
  const auto summary = nlohmann::json::parse(read_file(out / "summary.json"));
  CHECK(summary["ok"].get<bool>());
  CHECK(summary["cap_events"].get<int>() == 0);
  CHECK(summary["seed"].get<int>() == 1);

  const fs::path seeded = scratch("seeded");
  REQUIRE(run_cli("--preset zeros-ising --seed 5 --out " + seeded.string()) == 0);
  CHECK(nlohmann::json::parse(read_file(seeded / "summary.json"))["seed"].get<int>() == 5);
}
