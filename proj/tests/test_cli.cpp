#include <doctest.h>
#include <json.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#ifndef OTTV_CLI_PATH
#error "OTTV_CLI_PATH must name the command-line executable"
#endif

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Workspace {
  fs::path root;
  Workspace() {
    root = fs::temp_directory_path() / ("ottv_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(root);
    // 32x32 disc, 8-bit.
    std::string pixels;
    for (int i = 0; i < 32; ++i)
      for (int j = 0; j < 32; ++j) {
        const double di = i + 0.5 - 16, dj = j + 0.5 - 16;
        pixels.push_back(static_cast<char>(di * di + dj * dj <= 64 ? 204 : 26));
      }
    std::ofstream(root / "disc.pgm", std::ios::binary) << "P5\n32 32\n255\n" << pixels;
    std::string dot(32 * 32, '\0');
    std::string other = dot;
    dot[5 * 32 + 3] = static_cast<char>(255);
    other[5 * 32 + 10] = static_cast<char>(255);
    std::ofstream(root / "a.pgm", std::ios::binary) << "P5\n32 32\n255\n" << dot;
    std::ofstream(root / "b.pgm", std::ios::binary) << "P5\n32 32\n255\n" << other;
  }
  ~Workspace() {
    std::error_code ec;
    fs::remove_all(root, ec);
  }
};

Workspace& workspace() {
  static Workspace w;
  return w;
}

struct Run {
  int code;
  std::string out;
};

Run run(const std::string& args) {
  const fs::path log = workspace().root / "log.txt";
  const std::string cmd = "cd '" + workspace().root.string() + "' && '" + OTTV_CLI_PATH + "' " + args + " > '" +
                          log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  std::ifstream in(log);
  std::string out((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

json metrics(const std::string& dir) { return json::parse(slurp(workspace().root / dir / "metrics.json")); }

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("usage errors exit with 2") {
    CHECK(run("").code == 2);
    CHECK(run("").out.find("Usage") != std::string::npos);
    CHECK(run("frobnicate").code == 2);
    CHECK(run("denoise").code == 2);
    CHECK(run("denoise disc.pgm --model tgv").code == 2);
    CHECK(run("denoise missing.pgm").code == 2);
    CHECK(run("decompose disc.pgm --model rof").code == 2);
    CHECK(run("--help").code == 0);
  }

  TEST_CASE("w1 of identical images is zero") {
    const Run r = run("w1 a.pgm a.pgm --out-dir w_same");
    CHECK(r.code == 0);
    CHECK(r.out.find("w1_distance = 0") != std::string::npos);
    CHECK(metrics("w_same")["w1_distance"] == 0.0);
  }

  TEST_CASE("w1 of two point masses") {
    REQUIRE(run("w1 a.pgm b.pgm --out-dir w_pair").code == 0);
    CHECK(metrics("w_pair")["w1_distance"].get<double>() == doctest::Approx(7.0).epsilon(0.01));
  }

  TEST_CASE("denoise with ROF emits the standard artifacts") {
    const Run r = run("denoise disc.pgm --model rof --sigma 0.1 --seed 3 --out-dir rof");
    REQUIRE(r.code == 0);
    for (const char* name : {"u.png", "residual.png", "trace.csv", "metrics.json", "manifest.json", "f.png"}) {
      CHECK(fs::exists(workspace().root / "rof" / name));
    }
    const json m = metrics("rof");
    CHECK(m["psnr"].get<double>() > m["psnr_observed"].get<double>());
    CHECK(m["converged"] == true);
    const json manifest = json::parse(slurp(workspace().root / "rof" / "manifest.json"));
    for (const auto& name : manifest["artifacts"]) CHECK(fs::exists(workspace().root / "rof" / name.get<std::string>()));
  }

  TEST_CASE("runs are reproducible and batch re-runs match") {
    REQUIRE(run("decompose disc.pgm --sigma 0.05 --seed 4 --eps 1e-6 --format pgm --out-dir dec").code == 0);
    const fs::path dir = workspace().root / "dec";
    for (const char* name : {"v.pgm", "w.pgm", "trace_pdhg.csv", "trace_alm.csv"}) CHECK(fs::exists(dir / name));
    const std::string metrics_bytes = slurp(dir / "metrics.json");
    const std::string trace_bytes = slurp(dir / "trace.csv");
    const std::string u_bytes = slurp(dir / "u.pgm");
    REQUIRE(run("denoise disc.pgm --model mtv --a 0.2 --out-dir mtv").code == 0);
    REQUIRE(run("batch dec/manifest.json mtv/manifest.json --jobs 2").code == 0);
    CHECK(slurp(dir / "metrics.json") == metrics_bytes);
    CHECK(slurp(dir / "trace.csv") == trace_bytes);
    CHECK(slurp(dir / "u.pgm") == u_bytes);
  }

  TEST_CASE("calibrate and deblur") {
    REQUIRE(run("calibrate disc.pgm --model rof --sigma 0.1 --seed 5 --out-dir cal").code == 0);
    const json m = metrics("cal");
    CHECK(m["residual_norm"].get<double>() == doctest::Approx(3.2).epsilon(0.01));
    CHECK(m["calibrated_knob"] == "alpha");
    CHECK(run("calibrate disc.pgm --model rof --sigma 0.1 --target 1e-9 --out-dir cal_bad").code == 1);
    REQUIRE(run("deblur disc.pgm --model rof --sigma 0.01 --blur gaussian --blur-width 1.0 --out-dir blur").code == 0);
    CHECK(metrics("blur")["psnr"].get<double>() > metrics("blur")["psnr_observed"].get<double>());
  }
}
