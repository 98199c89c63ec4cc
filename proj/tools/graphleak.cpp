#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "graphleak/config.hpp"
#include "graphleak/pipeline.hpp"

namespace gl = graphleak;
namespace fs = std::filesystem;

namespace {

constexpr int kExitPipeline = 1;
constexpr int kExitConfig = 2;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::vector<std::string> overrides;
  std::optional<std::size_t> jobs;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON config file");
  cmd->add_option("--seed", c.seed, "Run seed (overrides the config)");
  cmd->add_option("--out", c.out, "Output directory")->capture_default_str();
  cmd->add_option("--set", c.overrides, "Config override key=value (repeatable)");
  cmd->add_option("--jobs", c.jobs, "Worker threads (0 = all cores)");
}

gl::Config make_config(const Common& c) {
  gl::Config cfg = c.config.empty() ? gl::Config{} : gl::Config::load(c.config);
  for (const auto& s : c.overrides) cfg.set(s);
  if (c.seed) cfg.set_seed(*c.seed);
  if (c.jobs) cfg.set_jobs(*c.jobs);
  return cfg;
}

void require_exists(const std::string& path, const gl::Config& cfg) {
  if (path.empty()) throw gl::ConfigError("missing input file argument");
  const auto format = gl::parse_graph_format(cfg.get<std::string>("data", "format"));
  const bool exists = format == gl::GraphFormat::tu ? fs::exists(path + "_A.txt") : fs::exists(path);
  if (!exists) throw gl::ConfigError("input file not found: '" + path + "'");
}

gl::GraphSet read_input(const std::string& path, const gl::Config& cfg, gl::Provenance p) {
  require_exists(path, cfg);
  return gl::read_graphset({path, gl::parse_graph_format(cfg.get<std::string>("data", "format"))}, p);
}

void report_error(const std::string& kind, const std::string& message, int code, const std::string& out) {
  nlohmann::ordered_json j;
  j["error"] = {{"kind", kind}, {"message", message}, {"exit_code", code}};
  std::cerr << j.dump() << '\n';
  if (out.empty()) return;
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) return;
  std::ofstream f(fs::path(out) / "error.json", std::ios::binary | std::ios::trunc);
  if (f) f << j.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inference attacks against graph generative models and their defenses"};
  app.require_subcommand(1);
  Common common;

  std::string input, train_path, target_path, generated_path, truth_path, rec_path;

  auto* simulate = app.add_subcommand("simulate", "Train the surrogate generator and write generated graphs");
  add_common(simulate, common);
  simulate->add_option("--input", input, "Training graph set (default: synthetic corpus from the config)");

  auto* gra = app.add_subcommand("gra", "Graph reconstruction attack");
  add_common(gra, common);
  gra->add_option("--generated", generated_path, "Generated graph set")->required();
  gra->add_option("--train", train_path, "Training graph set for scoring");

  auto* pia = app.add_subcommand("pia", "Property inference attack");
  add_common(pia, common);
  pia->add_option("--generated", generated_path, "Generated graph set")->required();
  pia->add_option("--truth", truth_path, "Training graph set for comparison");

  auto* mia = app.add_subcommand("mia", "Membership inference experiment");
  add_common(mia, common);
  mia->add_option("--dataset", input, "Graph corpus (default: synthetic corpus from the config)");
  mia->add_option("--target", target_path, "Target corpus for the transfer setting");

  auto* defend = app.add_subcommand("defend", "Perturb a graph set");
  add_common(defend, common);
  defend->add_option("--input", input, "Graph set to perturb")->required();

  auto* tradeoff = app.add_subcommand("tradeoff", "Defense strength versus attack and utility");
  add_common(tradeoff, common);
  tradeoff->add_option("--input", input, "Training graph set (default: synthetic corpus from the config)");
  tradeoff->add_option("--target", target_path, "Target corpus for the transfer setting");

  auto* eval = app.add_subcommand("eval", "Score reconstructed graphs against a training set");
  add_common(eval, common);
  eval->add_option("--reconstructed", rec_path, "Reconstructed graph set")->required();
  eval->add_option("--train", train_path, "Training graph set")->required();

  auto* pipeline = app.add_subcommand("pipeline", "Run simulate, attacks, defense and tradeoff end to end");
  add_common(pipeline, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("usage", e.what(), kExitConfig, "");
    return kExitConfig;
  }

  try {
    gl::Config cfg = make_config(common);
    if (!input.empty() && (simulate->parsed() || tradeoff->parsed() || mia->parsed())) cfg.set("data.input=" + input);
    if (!target_path.empty()) cfg.set("mia.target_input=" + target_path);

    // Every referenced file must exist before any work starts.
    for (const std::string& p : {cfg.get<std::string>("data", "input"), cfg.get<std::string>("mia", "target_input"),
                                 generated_path, train_path, truth_path, rec_path}) {
      if (!p.empty()) require_exists(p, cfg);
    }
    if (defend->parsed()) require_exists(input, cfg);

    try {
      gl::Workspace ws(cfg, common.out);
      if (simulate->parsed()) {
        const gl::GraphSet train = gl::load_corpus(ws);
        ws.write_graphs(train, "train.jsonl");
        gl::simulate_stage(ws, train);
      } else if (gra->parsed()) {
        const auto generated = read_input(generated_path, cfg, gl::Provenance::generated);
        std::optional<gl::GraphSet> train;
        if (!train_path.empty()) train = read_input(train_path, cfg, gl::Provenance::train);
        gl::gra_stage(ws, generated, train ? &*train : nullptr);
      } else if (pia->parsed()) {
        const auto generated = read_input(generated_path, cfg, gl::Provenance::generated);
        std::optional<gl::GraphSet> truth;
        if (!truth_path.empty()) truth = read_input(truth_path, cfg, gl::Provenance::train);
        gl::pia_stage(ws, generated, truth ? &*truth : nullptr);
      } else if (mia->parsed()) {
        const auto dataset = gl::load_corpus(ws);
        const auto target = gl::load_target(ws);
        gl::mia_stage(ws, dataset, target ? &*target : nullptr, gl::surrogate_factory(cfg.surrogate()));
      } else if (defend->parsed()) {
        gl::defend_stage(ws, read_input(input, cfg, gl::Provenance::train));
      } else if (tradeoff->parsed()) {
        const auto train = gl::load_corpus(ws);
        const auto target = gl::load_target(ws);
        gl::tradeoff_stage(ws, train, target ? &*target : nullptr);
      } else if (eval->parsed()) {
        const auto rec = read_input(rec_path, cfg, gl::Provenance::generated);
        const auto train = read_input(train_path, cfg, gl::Provenance::train);
        gl::eval_stage(ws, rec, train);
      } else if (pipeline->parsed()) {
        gl::full_pipeline(ws);
        return 0;
      }
      ws.write_manifest();
    } catch (const gl::ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      report_error("pipeline", e.what(), kExitPipeline, common.out);
      return kExitPipeline;
    }
  } catch (const gl::ConfigError& e) {
    report_error("config", e.what(), kExitConfig, common.out);
    return kExitConfig;
  } catch (const gl::Error& e) {
    report_error("config", e.what(), kExitConfig, common.out);
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    report_error("config", e.what(), kExitConfig, common.out);
    return kExitConfig;
  }
  return 0;
}
