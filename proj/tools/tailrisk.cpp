// tailrisk: config-driven experiment runner.
//
//   tailrisk joint-tail config.json --samples 1e6 --out runs/jt
//   tailrisk examples
//   tailrisk examples --run renewal-fgm --samples 10000

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "tailrisk/experiment.hpp"

namespace {

using tailrisk::Json;

enum ExitCode { kOk = 0, kFailure = 1, kValidation = 2, kEstimation = 3, kIo = 4 };

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::optional<std::uint64_t> seed;
  std::optional<double> samples;
  std::optional<unsigned> workers;
  std::optional<std::uint64_t> chunk_size;
  std::string out;
  std::string format;
};

Json read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return tailrisk::parse_config_text(buf.str());
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out.flush()) throw IoError("write failed for '" + path + "'");
}

Json apply_overrides(Json raw, const Globals& g) {
  if (!raw.is_object()) return raw;
  Json& run = raw["run"];
  if (run.is_null()) run = Json::object();
  if (g.seed) run["seed"] = *g.seed;
  if (g.samples) {
    if (!(*g.samples >= 1.0) || *g.samples != static_cast<double>(static_cast<std::uint64_t>(*g.samples))) {
      throw tailrisk::ConfigError("--samples must be a positive integer");
    }
    run["samples"] = static_cast<std::uint64_t>(*g.samples);
  }
  if (g.workers) run["workers"] = *g.workers;
  if (g.chunk_size) run["chunk_size"] = *g.chunk_size;
  if (!g.format.empty() || !g.out.empty()) {
    Json& output = raw["output"];
    if (output.is_null()) output = Json::object();
    if (!g.format.empty()) output["format"] = g.format;
    if (!g.out.empty()) output["path"] = g.out;
  }
  return raw;
}

int execute(const Json& raw, const std::string& expected_workflow, const Globals& g) {
  const Json resolved = tailrisk::resolve_config(apply_overrides(raw, g));
  if (!expected_workflow.empty() && resolved["workflow"] != expected_workflow) {
    throw tailrisk::ConfigError("config.workflow is '" + resolved["workflow"].get<std::string>() +
                                "' but the subcommand expects '" + expected_workflow + "'");
  }
  const auto start = std::chrono::steady_clock::now();
  const tailrisk::ExperimentOutput out = tailrisk::run_experiment(resolved);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const Json summary = {{"config_echo", resolved},
                        {"results", out.results},
                        {"runtime_seconds", seconds},
                        {"seed", resolved["run"]["seed"]}};
  const std::string prefix = resolved["output"]["path"];
  if (prefix.empty()) {
    if (resolved["output"]["format"] == "json") {
      std::cout << summary.dump(2) << '\n';
    } else {
      std::cout << out.csv;
    }
  } else {
    write_file(prefix + ".csv", out.csv);
    write_file(prefix + ".json", summary.dump(2) + "\n");
    std::cerr << "wrote " << prefix << ".csv and " << prefix << ".json (" << seconds << " s)\n";
  }
  return kOk;
}

const tailrisk::CatalogEntry& find_example(const std::string& id) {
  for (const auto& e : tailrisk::example_catalog()) {
    if (e.id == id) return e;
  }
  throw tailrisk::ConfigError("no example with id '" + id + "'");
}

template <class F>
int guarded(F&& body) {
  try {
    return body();
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const tailrisk::ConfigError& e) {
    std::cerr << "invalid config: " << e.what() << '\n';
    return kValidation;
  } catch (const tailrisk::DomainError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kValidation;
  } catch (const tailrisk::EstimationError& e) {
    std::cerr << "estimation failed: " << e.what() << '\n';
    return kEstimation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heavy-tailed dependent risk experiments"};
  app.require_subcommand(1);

  Globals g;
  app.add_option("--seed", g.seed, "Master seed")->group("Run");
  app.add_option("--samples", g.samples, "Monte Carlo sample count (accepts 1e6)")->group("Run");
  app.add_option("--workers", g.workers, "Worker threads")->check(CLI::Range(1u, 1024u))->group("Run");
  app.add_option("--chunk-size", g.chunk_size, "Draws per RNG chunk")->group("Run");
  app.add_option("--out", g.out, "Write PREFIX.csv and PREFIX.json instead of printing")->group("Output");
  app.add_option("--format", g.format, "Stdout format when --out is absent")
      ->check(CLI::IsMember({"csv", "json"}))
      ->group("Output");

  const std::pair<const char*, const char*> workflows[] = {{"joint-tail", "joint_tail"},
                                                           {"ruin", "ruin"},
                                                           {"tdrm", "tdrm"},
                                                           {"gtai-check", "gtai_check"},
                                                           {"classify", "classify"}};
  std::string config_path;
  for (const auto& [name, wf] : workflows) {
    auto* sub = app.add_subcommand(name, std::string("Run a ") + wf + " config");
    sub->add_option("config", config_path, "Config file (JSON)")->required();
    sub->fallthrough();
  }

  auto* examples = app.add_subcommand("examples", "List, print or run the bundled example configs");
  std::string run_id;
  std::string dump_id;
  auto* run_opt = examples->add_option("--run", run_id, "Run the example with this id");
  examples->add_option("--dump", dump_id, "Print the resolved config of this example")->excludes(run_opt);
  examples->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  if (examples->parsed()) {
    return guarded([&] {
      if (!run_id.empty()) return execute(find_example(run_id).config, "", g);
      if (!dump_id.empty()) {
        std::cout << tailrisk::resolve_config(find_example(dump_id).config).dump(2) << '\n';
        return int{kOk};
      }
      for (const auto& e : tailrisk::example_catalog()) std::cout << e.id << "  " << e.description << '\n';
      return int{kOk};
    });
  }

  for (const auto& [name, wf] : workflows) {
    if (app.got_subcommand(name)) {
      const std::string expected = wf;
      return guarded([&] { return execute(read_config(config_path), expected, g); });
    }
  }
  return kFailure;
}
