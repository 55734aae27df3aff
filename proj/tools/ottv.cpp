// Command-line front end over the C interface.
//
//   ottv denoise   IMAGE [options]      restore a noisy image
//   ottv decompose IMAGE [options]      cartoon/texture split with all components
//   ottv deblur    IMAGE [options]      restore through a blur operator
//   ottv calibrate IMAGE --sigma S      match |f - u| to n*sigma
//   ottv w1        A B                  Wasserstein-1 distance
//   ottv batch     MANIFEST... --jobs N re-run saved manifests in parallel
//
// Exit codes: 0 success, 1 numerical failure, 2 usage or input error.

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ottv/ottv.h"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNumerical = 1;
constexpr int kExitUsage = 2;
constexpr double kDisplayOffset = 100.0 / 255.0;

// Thrown to unwind a job with a specific exit code.
struct JobFailure {
  int code;
  std::string message;
};

int exit_code_for(ottv_status status) {
  switch (status) {
    case OTTV_OK:
      return kExitOk;
    case OTTV_ERR_INVALID_ARGUMENT:
    case OTTV_ERR_SHAPE:
    case OTTV_ERR_IO:
      return kExitUsage;
    default:
      return kExitNumerical;
  }
}

void check(ottv_status status, const std::string& what) {
  if (status != OTTV_OK) {
    throw JobFailure{exit_code_for(status), what + ": " + ottv_status_name(status) + ": " + ottv_last_error()};
  }
}

struct FieldDeleter {
  void operator()(ottv_field* f) const { ottv_field_free(f); }
};
struct ResultDeleter {
  void operator()(ottv_result* r) const { ottv_result_free(r); }
};
using Field = std::unique_ptr<ottv_field, FieldDeleter>;
using Result = std::unique_ptr<ottv_result, ResultDeleter>;

Field load(const std::string& path) {
  ottv_field* raw = nullptr;
  check(ottv_field_load(path.c_str(), &raw), "loading " + path);
  return Field(raw);
}

std::size_t side(const ottv_field* f) {
  std::size_t n = 0;
  check(ottv_field_dims(f, &n, nullptr), "reading dimensions");
  return n;
}

// Non-finite values have no JSON encoding; they become null.
json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

void write_text(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw JobFailure{kExitUsage, "cannot write " + tmp.string()};
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw JobFailure{kExitUsage, "cannot write " + path.string()};
  }
}

struct RunSettings {
  std::string command;
  std::string input;
  std::string second_input;
  std::string out_dir = "ottv_out";
  std::string model = "ottv";
  std::string regularizer = "tv";
  std::string blur = "gaussian";
  std::string format = "png";
  std::string knob;
  double alpha = 10.0;
  double lambda = 1.0;
  double tau = 1.0;
  double r = 0.0;
  double a = 0.1;
  double sigma = 0.0;
  double blur_width = 1.5;
  double eps = 0.0;
  double target = 0.0;
  double rel_tol = 5e-3;
  std::uint64_t seed = 0;
  std::size_t max_outer = 30;
  std::size_t max_iters = 0;
  bool noisy_input = false;
  bool no_normalize = false;
  bool quiet = false;
};

ottv_params params_for(const RunSettings& s) {
  ottv_params p;
  ottv_params_default(&p);
  p.model = s.model == "rof" ? OTTV_MODEL_ROF : s.model == "mtv" ? OTTV_MODEL_MTV : OTTV_MODEL_OTTV;
  p.alpha = s.alpha;
  p.lambda = s.lambda;
  p.use_mtv = s.regularizer == "mtv" ? 1 : 0;
  p.mtv_a = s.a;
  p.pdhg_tau = s.tau;
  p.pdhg_eps = s.eps;
  p.alm_r = s.r;
  p.max_outer = s.max_outer;
  if (s.command == "deblur") {
    p.blur = s.blur == "box" ? OTTV_BLUR_BOX : OTTV_BLUR_GAUSSIAN;
    p.blur_width = s.blur_width;
  }
  return p;
}

json model_json(const RunSettings& s, const ottv_params& p) {
  json m;
  m["model"] = s.model;
  m["regularizer"] = s.model == "ottv" ? s.regularizer : (s.model == "rof" ? "tv" : "mtv");
  m["alpha"] = p.alpha;
  m["lambda"] = p.lambda;
  m["a"] = p.mtv_a;
  m["tau"] = p.pdhg_tau;
  m["r"] = p.alm_r;
  m["eps"] = p.pdhg_eps;
  m["max_outer"] = p.max_outer;
  if (p.blur != OTTV_BLUR_NONE) {
    m["blur"] = s.blur;
    m["blur_width"] = p.blur_width;
  }
  return m;
}

class Job {
 public:
  Job(RunSettings settings, std::vector<std::string> argv, std::ostream& log)
      : s_(std::move(settings)), argv_(std::move(argv)), log_(log) {}

  void run() {
    std::error_code ec;
    fs::create_directories(s_.out_dir, ec);
    if (ec) throw JobFailure{kExitUsage, "cannot create " + s_.out_dir + ": " + ec.message()};
    if (s_.command == "w1") {
      run_w1();
    } else {
      run_restoration();
    }
    write_manifest();
  }

 private:
  std::string image_name(const std::string& stem) const { return stem + "." + s_.format; }

  void save(const ottv_field* f, const std::string& name, double offset) {
    check(ottv_field_save(f, (fs::path(s_.out_dir) / name).c_str(), offset), "saving " + name);
    artifacts_.push_back(name);
  }

  void save_component(const ottv_result* r, ottv_component which, const std::string& stem, double offset) {
    ottv_field* raw = nullptr;
    check(ottv_result_component(r, which, &raw), "extracting " + stem);
    Field f(raw);
    save(f.get(), image_name(stem), offset);
  }

  void save_trace(const ottv_result* r, ottv_trace which, const std::string& name) {
    check(ottv_result_write_trace(r, which, (fs::path(s_.out_dir) / name).c_str()), "writing " + name);
    artifacts_.push_back(name);
  }

  void write_metrics() {
    write_text(fs::path(s_.out_dir) / "metrics.json", metrics_.dump(2) + "\n");
    artifacts_.push_back("metrics.json");
    if (!s_.quiet) {
      for (const auto& [key, value] : metrics_.items()) log_ << key << " = " << value.dump() << "\n";
    }
  }

  void run_w1() {
    Field a = load(s_.input);
    Field b = load(s_.second_input);
    double distance = 0.0;
    check(ottv_w1_distance(a.get(), b.get(), s_.no_normalize ? 0 : 1, s_.tau, s_.eps, s_.max_iters, &distance),
          "computing W1");
    metrics_["w1_distance"] = number(distance);
    metrics_["normalized"] = !s_.no_normalize;
    write_metrics();
    model_["tau"] = s_.tau;
    model_["eps"] = s_.eps;
  }

  void run_restoration() {
    Field input = load(s_.input);
    const std::size_t n = side(input.get());
    ottv_params params = params_for(s_);

    // With sigma > 0 (and not --noisy-input) the input is a clean reference
    // that is degraded here before restoration.
    const bool synthetic = s_.sigma > 0.0 && !s_.noisy_input;
    Field observed;
    if (synthetic) {
      ottv_field* blurred = nullptr;
      check(ottv_field_blur(input.get(), params.blur, params.blur_width, &blurred), "blurring input");
      Field degraded(blurred);
      ottv_field* noisy = nullptr;
      check(ottv_field_add_noise(degraded.get(), s_.sigma, s_.seed, &noisy), "adding noise");
      observed.reset(noisy);
      save(observed.get(), image_name("f"), 0.0);
    } else {
      observed = std::move(input);
    }

    Result result;
    if (s_.command == "calibrate") {
      if (!(s_.sigma > 0.0) && !(s_.target > 0.0)) {
        throw JobFailure{kExitUsage, "calibrate needs --sigma or --target"};
      }
      const double target = s_.target > 0.0 ? s_.target : static_cast<double>(n) * s_.sigma;
      std::string knob = s_.knob.empty() ? (s_.model == "ottv" ? "lambda" : "alpha") : s_.knob;
      if (knob == "lambda" && s_.model != "ottv") throw JobFailure{kExitUsage, "--knob lambda requires --model ottv"};
      ottv_params tuned;
      ottv_result* raw = nullptr;
      check(ottv_calibrate(observed.get(), &params, target, knob == "alpha" ? OTTV_KNOB_ALPHA : OTTV_KNOB_LAMBDA,
                           s_.rel_tol, &tuned, &raw),
            "calibrating");
      result.reset(raw);
      params = tuned;
      metrics_["target_residual_norm"] = target;
      metrics_["calibrated_knob"] = knob;
    } else {
      ottv_result* raw = nullptr;
      check(ottv_restore(observed.get(), &params, &raw), "restoring");
      result.reset(raw);
    }
    model_ = model_json(s_, params);

    const bool transport = params.model == OTTV_MODEL_OTTV;
    save_component(result.get(), OTTV_COMPONENT_U, "u", 0.0);
    save_component(result.get(), OTTV_COMPONENT_RESIDUAL, "residual", kDisplayOffset);
    if (transport && (s_.command == "decompose" || s_.command == "calibrate")) {
      save_component(result.get(), OTTV_COMPONENT_V, "v", kDisplayOffset);
      save_component(result.get(), OTTV_COMPONENT_W, "w", kDisplayOffset);
    }
    save_trace(result.get(), OTTV_TRACE_OUTER, "trace.csv");
    save_trace(result.get(), OTTV_TRACE_ALM, "trace_alm.csv");
    if (transport) save_trace(result.get(), OTTV_TRACE_PDHG, "trace_pdhg.csv");

    ottv_metrics m;
    check(ottv_result_metrics(result.get(), &m), "collecting metrics");
    metrics_["alpha"] = params.alpha;
    metrics_["lambda"] = params.lambda;
    metrics_["energy"] = number(m.energy);
    metrics_["energy_regularizer"] = number(m.regularizer);
    metrics_["energy_fidelity"] = number(m.fidelity);
    metrics_["energy_transport"] = number(m.transport);
    metrics_["energy_transport_lagrangian"] = number(m.transport_lagrangian);
    metrics_["residual_norm"] = number(m.residual_norm);
    metrics_["remainder_norm"] = number(m.remainder_norm);
    metrics_["texture_norm"] = number(m.texture_norm);
    metrics_["outer_iterations"] = m.outer_iterations;
    metrics_["pdhg_iterations"] = m.pdhg_iterations;
    metrics_["alm_iterations"] = m.alm_iterations;
    metrics_["converged"] = m.converged != 0;
    if (synthetic) {
      ottv_field* raw = nullptr;
      check(ottv_result_component(result.get(), OTTV_COMPONENT_U, &raw), "extracting u");
      Field u(raw);
      Field reference = load(s_.input);
      double value = 0.0;
      check(ottv_psnr(u.get(), reference.get(), &value), "computing PSNR");
      metrics_["psnr"] = number(value);
      check(ottv_psnr(observed.get(), reference.get(), &value), "computing PSNR");
      metrics_["psnr_observed"] = number(value);
    }
    write_metrics();
  }

  void write_manifest() {
    json manifest;
    manifest["command"] = s_.command;
    manifest["input"] = s_.input;
    if (!s_.second_input.empty()) manifest["second_input"] = s_.second_input;
    manifest["out_dir"] = s_.out_dir;
    manifest["seed"] = s_.seed;
    manifest["sigma"] = s_.sigma;
    manifest["model"] = model_;
    manifest["argv"] = argv_;
    manifest["library_version"] = ottv_version();
    artifacts_.push_back("manifest.json");
    manifest["artifacts"] = artifacts_;
    write_text(fs::path(s_.out_dir) / "manifest.json", manifest.dump(2) + "\n");
  }

  RunSettings s_;
  std::vector<std::string> argv_;
  std::ostream& log_;
  json metrics_ = json::object();
  json model_ = json::object();
  std::vector<std::string> artifacts_;
};

int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err);

int run_batch(const std::vector<std::string>& manifests, std::size_t jobs, std::ostream& out, std::ostream& err) {
  std::vector<std::vector<std::string>> work;
  for (const auto& path : manifests) {
    std::ifstream in(path);
    if (!in) {
      err << "cannot open manifest " << path << "\n";
      return kExitUsage;
    }
    try {
      const json m = json::parse(in);
      work.push_back(m.at("argv").get<std::vector<std::string>>());
    } catch (const json::exception& e) {
      err << path << ": " << e.what() << "\n";
      return kExitUsage;
    }
  }
  std::vector<int> codes(work.size(), kExitOk);
  std::vector<std::string> logs(work.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < work.size(); k = next++) {
      std::ostringstream job_out;
      codes[k] = run_cli(work[k], job_out, job_out);
      logs[k] = job_out.str();
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(jobs, work.size()));
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  int worst = kExitOk;
  for (std::size_t k = 0; k < work.size(); ++k) {
    out << "[" << manifests[k] << "] exit " << codes[k] << "\n" << logs[k];
    worst = std::max(worst, codes[k]);
  }
  return worst;
}

void add_model_options(CLI::App* cmd, RunSettings& s, bool with_blur) {
  cmd->add_option("image", s.input, "Input image (PGM or PNG)")->required();
  cmd->add_option("--model", s.model, "Model")->check(CLI::IsMember({"ottv", "rof", "mtv"}));
  cmd->add_option("--regularizer", s.regularizer, "Cartoon regularizer for the ottv model")
      ->check(CLI::IsMember({"tv", "mtv"}));
  cmd->add_option("--alpha", s.alpha, "Fidelity weight")->check(CLI::PositiveNumber);
  cmd->add_option("--lambda", s.lambda, "Transport weight")->check(CLI::PositiveNumber);
  cmd->add_option("--tau", s.tau, "PDHG dual step")->check(CLI::PositiveNumber);
  cmd->add_option("--r", s.r, "ALM penalty (default: automatic)")->check(CLI::PositiveNumber);
  cmd->add_option("--a", s.a, "Modified-TV threshold")->check(CLI::PositiveNumber);
  cmd->add_option("--sigma", s.sigma, "Noise level added to a clean input")->check(CLI::NonNegativeNumber);
  cmd->add_option("--seed", s.seed, "Noise seed");
  cmd->add_option("--eps", s.eps, "PDHG residual tolerance (default: h^2)")->check(CLI::PositiveNumber);
  cmd->add_option("--max-outer", s.max_outer, "Outer iteration cap")->check(CLI::PositiveNumber);
  cmd->add_option("--out-dir", s.out_dir, "Output directory");
  cmd->add_option("--format", s.format, "Image format for outputs")->check(CLI::IsMember({"png", "pgm"}));
  cmd->add_flag("--quiet", s.quiet, "Do not print metrics");
  if (with_blur) {
    cmd->add_option("--blur", s.blur, "Blur kernel")->check(CLI::IsMember({"gaussian", "box"}));
    cmd->add_option("--blur-width", s.blur_width, "Gaussian sigma or box radius in pixels")
        ->check(CLI::NonNegativeNumber);
  }
}

int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Total-variation and optimal-transport image restoration"};
  app.require_subcommand(1);
  RunSettings s;
  std::vector<std::string> manifests;
  std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());

  CLI::App* denoise = app.add_subcommand("denoise", "Restore a noisy image");
  CLI::App* decompose = app.add_subcommand("decompose", "Cartoon-texture decomposition with all components");
  CLI::App* deblur = app.add_subcommand("deblur", "Restore through a blur operator");
  CLI::App* calibrate = app.add_subcommand("calibrate", "Tune a weight so that |f - u| matches n*sigma");
  CLI::App* w1 = app.add_subcommand("w1", "Wasserstein-1 distance between two images");
  CLI::App* batch = app.add_subcommand("batch", "Re-run saved manifests in parallel");
  add_model_options(denoise, s, false);
  add_model_options(decompose, s, false);
  add_model_options(deblur, s, true);
  add_model_options(calibrate, s, false);
  calibrate->add_option("--knob", s.knob, "Weight to tune (default: lambda for ottv, alpha otherwise)")
      ->check(CLI::IsMember({"alpha", "lambda"}));
  calibrate->add_option("--target", s.target, "Residual norm target (default: n*sigma)")
      ->check(CLI::PositiveNumber);
  calibrate->add_option("--rel-tol", s.rel_tol, "Relative tolerance on the target")->check(CLI::PositiveNumber);
  calibrate->add_flag("--noisy-input", s.noisy_input, "Input already carries noise of level sigma");
  w1->add_option("first", s.input, "First image")->required();
  w1->add_option("second", s.second_input, "Second image")->required();
  w1->add_option("--tau", s.tau, "PDHG dual step")->check(CLI::PositiveNumber);
  w1->add_option("--eps", s.eps, "PDHG residual tolerance")->check(CLI::PositiveNumber);
  w1->add_option("--max-iters", s.max_iters, "PDHG iteration cap")->check(CLI::PositiveNumber);
  w1->add_flag("--no-normalize", s.no_normalize, "Require equal masses instead of rescaling to unit mass");
  w1->add_option("--out-dir", s.out_dir, "Output directory");
  w1->add_flag("--quiet", s.quiet, "Do not print the distance");
  batch->add_option("manifests", manifests, "manifest.json files")->required();
  batch->add_option("--jobs", jobs, "Concurrent jobs")->check(CLI::PositiveNumber);

  if (args.empty()) {
    err << app.help();
    return kExitUsage;
  }
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    err << app.help();
    return kExitUsage;
  }

  if (batch->parsed()) return run_batch(manifests, jobs, out, err);
  for (CLI::App* cmd : {denoise, decompose, deblur, calibrate, w1}) {
    if (cmd->parsed()) s.command = cmd->get_name();
  }
  if (s.command == "decompose" && s.model != "ottv") {
    err << "decompose requires --model ottv\n";
    return kExitUsage;
  }
  if (s.model == "mtv" || s.regularizer == "mtv") s.regularizer = "mtv";
  if (s.model == "rof") s.regularizer = "tv";

  try {
    Job job(s, args, out);
    job.run();
  } catch (const JobFailure& f) {
    err << "error: " << f.message << "\n";
    return f.code;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(std::move(args), std::cout, std::cerr);
}
