#pragma once

#include <cmath>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "graphleak/config.hpp"
#include "graphleak/defense.hpp"
#include "graphleak/gra.hpp"
#include "graphleak/io.hpp"
#include "graphleak/mia.hpp"
#include "graphleak/pia.hpp"
#include "graphleak/surrogate.hpp"

namespace graphleak {

// Stage streams under the run seed.
enum class Stage : std::uint64_t { corpus = 1, simulate, gra, pia, mia, defend, tradeoff, eval };

class Workspace {
 public:
  Workspace(Config cfg, std::filesystem::path out)
      : cfg_(std::move(cfg)), out_(std::move(out)), exec_(cfg_.jobs() == 0 ? Executor::hardware() : Executor(cfg_.jobs())) {
    std::filesystem::create_directories(out_);
  }

  const Config& config() const { return cfg_; }
  const Executor& exec() const { return exec_; }
  const std::filesystem::path& out() const { return out_; }
  RngSeed seed(Stage s) const { return derive(RngSeed{cfg_.seed()}, static_cast<std::uint64_t>(s)); }

  void write_graphs(const GraphSet& gs, const std::string& name) {
    write_graphset(gs, {out_ / name, GraphFormat::jsonl});
    record(name);
  }

  void write(Report r, const std::string& name) {
    r["config_hash"] = cfg_.hash();
    write_report(r, out_ / name, ReportFormat::json);
    record(name);
  }

  void write_csv(std::vector<std::string> header, std::vector<std::vector<ReportValue>> rows, const std::string& name) {
    header.push_back("config_hash");
    for (auto& row : rows) row.push_back(cfg_.hash());
    write_table(header, rows, out_ / name);
    record(name);
  }

  // Config, seed and a content hash of every artifact written so far.
  void write_manifest() {
    nlohmann::ordered_json m;
    m["config"] = nlohmann::json::parse(cfg_.canonical());
    m["config_hash"] = cfg_.hash();
    m["seed"] = cfg_.seed();
    m["artifacts"] = nlohmann::ordered_json::array();
    for (const auto& name : artifacts_) {
      auto in = detail::open_for_read(out_ / name);
      const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      m["artifacts"].push_back({{"path", name}, {"fnv1a", hex64(fnv1a(bytes))}});
    }
    auto out = detail::open_for_write(out_ / "manifest.json");
    out << m.dump(2) << '\n';
    if (!out) throw IoError("write failed for '" + (out_ / "manifest.json").string() + "'");
  }

  const std::vector<std::string>& artifacts() const { return artifacts_; }

 private:
  void record(const std::string& name) {
    if (std::find(artifacts_.begin(), artifacts_.end(), name) == artifacts_.end()) artifacts_.push_back(name);
  }

  Config cfg_;
  std::filesystem::path out_;
  Executor exec_;
  std::vector<std::string> artifacts_;
};

// Erdos-Renyi corpus from the data section. With several classes, class c
// takes the c-th evenly spaced density and graph i gets label i mod classes.
inline GraphSet synthetic_corpus(const Config& cfg, RngSeed seed) {
  const auto count = cfg.get<std::size_t>("data", "graphs");
  const auto n_min = cfg.get<std::size_t>("data", "n_min");
  const auto n_max = cfg.get<std::size_t>("data", "n_max");
  const auto d_min = cfg.get<double>("data", "density_min");
  const auto d_max = cfg.get<double>("data", "density_max");
  const auto classes = cfg.get<std::size_t>("data", "classes");
  Rng rng = make_rng(seed);
  std::vector<Graph> out;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t n = n_min + uniform_index(rng, n_max - n_min + 1);
    const double u = uniform01(rng);
    Graph g;
    if (classes > 1) {
      const std::size_t c = i % classes;
      const double d = d_min + (d_max - d_min) * static_cast<double>(c) / static_cast<double>(classes - 1);
      g = erdos_renyi(n, d, derive(seed, i), "t" + std::to_string(i)).with_graph_label(static_cast<int>(c));
    } else {
      g = erdos_renyi(n, d_min + (d_max - d_min) * u, derive(seed, i), "t" + std::to_string(i));
    }
    out.push_back(std::move(g));
  }
  return GraphSet(std::move(out), Provenance::train);
}

inline GraphSet load_corpus(const Workspace& ws) {
  const auto input = ws.config().get<std::string>("data", "input");
  if (input.empty()) return synthetic_corpus(ws.config(), ws.seed(Stage::corpus));
  return read_graphset({input, parse_graph_format(ws.config().get<std::string>("data", "format"))}, Provenance::train);
}

inline GraphSet generate_from(const Config& cfg, const GraphSet& train, RngSeed seed) {
  const auto model = SurrogateModel::train(train, cfg.surrogate(), seed);
  return model.generate(cfg.get<std::size_t>("surrogate", "generate"));
}

// ---------------------------------------------------------------------------
// Stages

inline GraphSet simulate_stage(Workspace& ws, const GraphSet& train) {
  GraphSet gen = generate_from(ws.config(), train, ws.seed(Stage::simulate));
  ws.write_graphs(gen, "generated.jsonl");
  return gen;
}

inline Report gra_report(const Workspace& ws, const GraphSet& generated, const GraphSet* train, RngSeed seed,
                         ReconstructionResult* keep = nullptr) {
  const Config& cfg = ws.config();
  ReconstructionResult rec = run_gra(generated, cfg.gra(), derive(seed, 1), ws.exec());
  Report r;
  r["generated"] = static_cast<double>(generated.size());
  r["reconstructed"] = static_cast<double>(rec.reconstructed.size());
  if (train) {
    const EvalParams ep = cfg.eval();
    const auto ev = evaluate_reconstruction(rec.reconstructed, *train, ep, derive(seed, 2), ws.exec());
    r["precision"] = ev.precision;
    r["recall"] = ev.recall;
    r["f1"] = ev.f1;
    r["r1"] = ev.r1;
    r["r2"] = ev.r2;
    r["tied_graphs"] = static_cast<double>(ev.tied_graphs);
    const auto b1 = baseline1(generated, *train, ep, derive(seed, 3), ws.exec());
    r["baseline1_f1"] = b1.f1;
    const auto b2 = baseline2(generated, cfg.gra().top_fraction, derive(seed, 4));
    const auto e2 = evaluate_reconstruction(b2.reconstructed, *train, ep, derive(seed, 2), ws.exec());
    r["baseline2_f1"] = e2.f1;
  }
  if (keep) *keep = std::move(rec);
  return r;
}

inline Report gra_stage(Workspace& ws, const GraphSet& generated, const GraphSet* train,
                        const std::string& suffix = "") {
  ReconstructionResult rec;
  Report r = gra_report(ws, generated, train, ws.seed(Stage::gra), &rec);
  ws.write_graphs(rec.reconstructed, "reconstructed" + suffix + ".jsonl");
  ws.write(r, "gra" + suffix + ".json");
  return r;
}

inline Report pia_stage(Workspace& ws, const GraphSet& generated, const GraphSet* truth,
                        const std::string& suffix = "") {
  const auto props = ws.config().properties();
  const auto rep = infer_properties(generated, props, ws.config().get<std::size_t>("pia", "buckets"), truth, ws.exec());
  Report r = to_report(rep);
  ws.write(r, "pia" + suffix + ".json");
  return r;
}

inline MiaReport mia_run(const Workspace& ws, const GraphSet& dataset, const GraphSet* target,
                         const ModelFactory& factory, RngSeed seed) {
  const MiaSetting setting = ws.config().mia_setting();
  if (setting == MiaSetting::transfer && !target)
    throw ConfigError("the transfer setting needs mia.target_input or --target");
  return run_mia_experiment(dataset, setting, ws.config().mia(), factory, seed, target, ws.exec());
}

inline Report mia_stage(Workspace& ws, const GraphSet& dataset, const GraphSet* target, const ModelFactory& factory,
                        const std::string& suffix = "") {
  const MiaReport m = mia_run(ws, dataset, target, factory, ws.seed(Stage::mia));
  Report r = to_report(m, ws.config().mia().fpr);
  r["setting"] = std::string(to_string(ws.config().mia_setting()));
  r["variant"] = std::string(to_string(ws.config().mia().query.variant));
  ws.write(r, "mia" + suffix + ".json");
  return r;
}

inline GraphSet defend_stage(Workspace& ws, const GraphSet& input, const std::string& name = "defended.jsonl") {
  GraphSet out = defend(input, ws.config().defense(), ws.seed(Stage::defend), ws.exec());
  ws.write_graphs(out, name);
  return out;
}

inline Report eval_stage(Workspace& ws, const GraphSet& reconstructed, const GraphSet& train) {
  const auto ev = evaluate_reconstruction(reconstructed, train, ws.config().eval(), ws.seed(Stage::eval), ws.exec());
  Report r;
  r["precision"] = ev.precision;
  r["recall"] = ev.recall;
  r["f1"] = ev.f1;
  r["r1"] = ev.r1;
  r["r2"] = ev.r2;
  r["tied_graphs"] = static_cast<double>(ev.tied_graphs);
  ws.write(r, "eval.json");
  return r;
}

namespace detail {

inline bool has_two_labels(const GraphSet& gs) {
  std::optional<int> first;
  for (const auto& g : gs) {
    if (!g.graph_label()) return false;
    if (!first) first = *g.graph_label();
    else if (*first != *g.graph_label()) return true;
  }
  return false;
}

}  // namespace detail

// Attack strength and utility along the perturbation grids: saliency flipping
// (the configured pre/post placement) and matched-budget random flipping over
// the ratios, independent random flipping over the probabilities.
inline void tradeoff_stage(Workspace& ws, const GraphSet& train, const GraphSet* target) {
  const Config& cfg = ws.config();
  const auto attacks = cfg.names("tradeoff", "attacks");
  const bool want_gra = std::find(attacks.begin(), attacks.end(), "gra") != attacks.end();
  const bool want_mia = std::find(attacks.begin(), attacks.end(), "mia") != attacks.end();
  const bool labeled = detail::has_two_labels(train);
  DefenseConfig base = cfg.defense();
  const bool pre = base.mode == DefenseMode::pre;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  struct Point {
    std::string method;
    double level;
    DefenseConfig dc;
  };
  std::vector<Point> points;
  for (double r : cfg.list("tradeoff", "ratios")) {
    DefenseConfig s = base;
    s.mode = pre ? DefenseMode::pre : DefenseMode::post;
    s.ratio = r;
    points.push_back({"saliency", r, s});
    DefenseConfig m = base;
    m.mode = DefenseMode::random_matched;
    m.ratio = r;
    points.push_back({"random_matched", r, m});
  }
  for (double p : cfg.list("tradeoff", "probabilities")) {
    DefenseConfig b = base;
    b.mode = DefenseMode::random_baseline;
    b.flip_probability = p;
    points.push_back({"random", p, b});
  }

  std::vector<std::vector<ReportValue>> rows;
  for (std::size_t k = 0; k < points.size(); ++k) {
    const Point& pt = points[k];
    const RngSeed seed = derive(ws.seed(Stage::tradeoff), k);
    const RngSeed dseed = derive(seed, 1);
    // Generated set seen by the attacker under this defense.
    GraphSet generated;
    if (pre) {
      generated = generate_from(cfg, defend(train, pt.dc, dseed, ws.exec()), ws.seed(Stage::simulate));
    } else {
      generated = defend(generate_from(cfg, train, ws.seed(Stage::simulate)), pt.dc, dseed, ws.exec());
    }
    double gra_f1 = nan, mia_auc = nan, utility = nan;
    if (want_gra) gra_f1 = std::get<double>(gra_report(ws, generated, &train, ws.seed(Stage::gra)).at("f1"));
    if (want_mia) {
      ModelFactory f = surrogate_factory(cfg.surrogate());
      f = pre ? pre_defended_factory(f, pt.dc) : post_defended_factory(f, pt.dc);
      mia_auc = mia_run(ws, train, target, f, ws.seed(Stage::mia)).auc;
    }
    if (labeled) utility = utility_eval(generated, train, derive(seed, 2), {cfg.awe(), {}, false});
    rows.push_back({pt.method, pt.level, gra_f1, mia_auc, utility});
  }
  ws.write_csv({"method", "level", "gra_f1", "mia_auc", "utility_auc"}, rows, "tradeoff.csv");
}

inline std::optional<GraphSet> load_target(const Workspace& ws) {
  const auto path = ws.config().get<std::string>("mia", "target_input");
  if (path.empty()) return std::nullopt;
  return read_graphset({path, parse_graph_format(ws.config().get<std::string>("data", "format"))}, Provenance::test);
}

// corpus -> generated -> attacks -> defended attacks -> tradeoff curve, with
// a manifest over every file written.
inline void full_pipeline(Workspace& ws) {
  const Config& cfg = ws.config();
  const GraphSet train = load_corpus(ws);
  ws.write_graphs(train, "train.jsonl");
  const auto target = load_target(ws);
  const GraphSet* tp = target ? &*target : nullptr;
  const GraphSet generated = simulate_stage(ws, train);
  const auto attacks = cfg.names("pipeline", "attacks");
  auto wants = [&](const char* a) { return std::find(attacks.begin(), attacks.end(), a) != attacks.end(); };

  if (wants("gra")) gra_stage(ws, generated, &train);
  if (wants("pia")) pia_stage(ws, generated, &train);
  if (wants("mia")) mia_stage(ws, train, tp, surrogate_factory(cfg.surrogate()));

  if (cfg.get<bool>("pipeline", "defend")) {
    const DefenseConfig dc = cfg.defense();
    GraphSet defended;
    ModelFactory factory = surrogate_factory(cfg.surrogate());
    if (dc.mode == DefenseMode::pre) {
      defended = generate_from(cfg, defend_stage(ws, train, "defended_train.jsonl"), ws.seed(Stage::simulate));
      ws.write_graphs(defended, "generated_defended.jsonl");
      factory = pre_defended_factory(factory, dc);
    } else {
      defended = defend_stage(ws, generated, "generated_defended.jsonl");
      factory = post_defended_factory(factory, dc);
    }
    if (wants("gra")) gra_stage(ws, defended, &train, "_defended");
    if (wants("pia")) pia_stage(ws, defended, &train, "_defended");
    if (wants("mia")) mia_stage(ws, train, tp, factory, "_defended");
  }
  if (cfg.get<bool>("pipeline", "tradeoff")) tradeoff_stage(ws, train, tp);
  ws.write_manifest();
}

}  // namespace graphleak
