// xrnpe: command-line front end. Exit codes: 0 success, 2 usage error,
// 3 data error, 4 numeric contract violation.
#include <cstdlib>
#include <iostream>

#include "common.hpp"
#include "xrnpe/checkpoint.hpp"
#include "xrnpe/error.hpp"
#include "xrnpe/training.hpp"

namespace {

constexpr int kUsage = 2;
constexpr int kData = 3;
constexpr int kContract = 4;

int default_threads() {
  if (const char* env = std::getenv("XRNPE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1 && v <= 1024) return static_cast<int>(v);
    std::cerr << "xrnpe: ignoring XRNPE_THREADS='" << env << "'\n";
  }
  return 1;
}

// Explicit --manifest, else next to the first output file, else stderr.
void write_manifest(const xrnpe::cli::Globals& g, const xrnpe::cli::RunManifest& m, int code,
                    const std::string& error) {
  const std::string text = m.to_json(code, error).dump(2) + "\n";
  std::string path = g.manifest;
  if (path.empty() && !m.outputs().empty()) path = m.outputs().front() + ".manifest.json";
  if (path.empty() || path == "-") {
    std::cerr << m.to_json(code, error).dump() << '\n';
    return;
  }
  try {
    xrnpe::write_text(path, text);
  } catch (const std::exception& e) {
    std::cerr << "xrnpe: could not write manifest: " << e.what() << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  using namespace xrnpe::cli;
  CLI::App app{"Mixed-precision posit/FP4 arithmetic, array simulation and quantization tools"};
  app.set_version_flag("--version", std::string("xrnpe ") + XRNPE_VERSION);
  app.require_subcommand(1);
  Globals g;
  g.threads = default_threads();
  app.add_option("--threads", g.threads, "worker threads (default: $XRNPE_THREADS or 1)")
      ->check(CLI::Range(1, 1024));
  CLI::Option* seed = app.add_option("--seed", g.seed, "random seed");
  app.add_option("--manifest", g.manifest, "run manifest path ('-' for stderr)");

  Registry reg;
  add_tensor_commands(app, g, reg);
  add_model_commands(app, g, reg);
  add_train_commands(app, g, reg);
  for (Command& c : reg) c.app->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }
  g.seed_given = seed->count() > 0;

  const Command* cmd = nullptr;
  for (const Command& c : reg) {
    if (c.app->parsed()) cmd = &c;
  }
  RunManifest manifest(cmd->app->get_name(), std::vector<std::string>(argv + 1, argv + argc));
  manifest.threads(g.threads);
  manifest.seed(g.seed);

  int code = 0;
  std::string error;
  try {
    cmd->run(manifest);
  } catch (const std::invalid_argument& e) {
    code = kUsage;
    error = e.what();
  } catch (const xrnpe::DataError& e) {
    code = kData;
    error = e.what();
  } catch (const xrnpe::ContractViolation& e) {
    code = kContract;
    error = e.what();
  } catch (const xrnpe::nn::DivergenceError& e) {
    code = kContract;
    error = e.what();
  } catch (const std::out_of_range& e) {
    code = kData;
    error = e.what();
  } catch (const std::exception& e) {
    code = 1;
    error = e.what();
  }
  if (code != 0) std::cerr << "xrnpe " << cmd->app->get_name() << ": " << error << '\n';
  write_manifest(g, manifest, code, error);
  return code;
}
