#include "refgame/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "refgame/logging.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace refgame {

namespace {

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  os << text;
  if (!os) throw std::runtime_error("write failed for " + path);
}

json record_to_json(const MetricsRecord& r) {
  return json{{"epoch", r.epoch},
              {"split", r.split},
              {"accuracy", r.accuracy},
              {"rsa_sl", r.rsa_sl},
              {"rsa_si", r.rsa_si},
              {"rsa_li", r.rsa_li},
              {"topsim", r.topsim},
              {"unique_messages", r.unique_messages},
              {"ce", r.ce},
              {"l_rsa", r.l_rsa}};
}

MetricsRecord record_from_json(const json& j) {
  MetricsRecord r;
  r.epoch = j.at("epoch").get<int>();
  r.split = j.at("split").get<std::string>();
  r.accuracy = j.at("accuracy").get<double>();
  r.rsa_sl = j.at("rsa_sl").get<double>();
  r.rsa_si = j.at("rsa_si").get<double>();
  r.rsa_li = j.at("rsa_li").get<double>();
  r.topsim = j.at("topsim").get<double>();
  r.unique_messages = j.at("unique_messages").get<int>();
  r.ce = j.at("ce").get<double>();
  r.l_rsa = j.at("l_rsa").get<double>();
  return r;
}

// Fixed evaluation pair sets are a property of the experiment's data seed,
// shared across seeds and loss types.
FixedPairSet experiment_noise_pairs(const ExperimentConfig& cfg, int dim) {
  Rng rng(derive_seed(cfg.data_seed, 101));
  return noise_pairs(cfg.noise_pair_count, dim, rng);
}

std::optional<FixedPairSet> experiment_wino_pairs(const ExperimentConfig& cfg) {
  if (!cfg.embeddings_path.empty()) return std::nullopt;
  Rng rng(derive_seed(cfg.data_seed, 102));
  return winoground_analog(cfg.synthetic, cfg.wino_pair_count, rng);
}

std::string seed_dir(const std::string& root, uint64_t seed) {
  return root + "/seed_" + std::to_string(seed);
}

json seed_summary_json(const ExperimentConfig& cfg, const SeedRunResult& r) {
  json j{{"seed", r.seed},
         {"loss", loss_name(cfg.loss)},
         {"vocab", cfg.vocab},
         {"max_len", cfg.max_len},
         {"epochs", cfg.epochs},
         {"max_train_accuracy", r.max_train_accuracy},
         {"max_validation_accuracy", r.max_validation_accuracy}};
  json finals{{"validation", record_to_json(r.final_validation)},
              {"noise", record_to_json(r.final_noise)}};
  if (r.final_wino) finals["winoground"] = record_to_json(*r.final_wino);
  j["final"] = finals;
  return j;
}

SeedRunResult seed_result_from_files(const std::string& dir) {
  std::ifstream is(dir + "/summary.json");
  if (!is) throw std::runtime_error("cannot open " + dir + "/summary.json");
  json j = json::parse(is);
  SeedRunResult r;
  r.seed = j.at("seed").get<uint64_t>();
  r.max_train_accuracy = j.at("max_train_accuracy").get<double>();
  r.max_validation_accuracy = j.at("max_validation_accuracy").get<double>();
  r.final_validation = record_from_json(j.at("final").at("validation"));
  r.final_noise = record_from_json(j.at("final").at("noise"));
  if (j.at("final").contains("winoground"))
    r.final_wino = record_from_json(j.at("final").at("winoground"));
  r.history = read_metrics_csv(dir + "/metrics.csv");
  return r;
}

// ---- tiny SVG writer --------------------------------------------------------

struct Series {
  std::string label;
  std::string color;
  std::vector<double> xs;
  std::vector<double> ys;
};

std::string svg_chart(const std::string& title, const std::vector<Series>& series,
                      bool scatter) {
  const int w = 640, h = 420, ml = 60, mr = 20, mt = 40, mb = 45;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const Series& s : series)
    for (size_t i = 0; i < s.xs.size(); ++i) {
      xmin = std::min(xmin, s.xs[i]);
      xmax = std::max(xmax, s.xs[i]);
      ymin = std::min(ymin, s.ys[i]);
      ymax = std::max(ymax, s.ys[i]);
    }
  if (xmin > xmax) xmin = 0, xmax = 1;
  if (ymin > ymax) ymin = 0, ymax = 1;
  if (xmax - xmin < 1e-12) xmax = xmin + 1;
  if (ymax - ymin < 1e-12) ymax = ymin + 1;
  double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;
  auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (w - ml - mr); };
  auto py = [&](double y) { return h - mb - (y - ymin) / (ymax - ymin) * (h - mt - mb); };
  std::ostringstream os;
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h
     << "' font-family='sans-serif' font-size='12'>\n";
  os << "<rect width='" << w << "' height='" << h << "' fill='white'/>\n";
  os << "<text x='" << w / 2 << "' y='20' text-anchor='middle' font-size='14'>"
     << title << "</text>\n";
  os << "<line x1='" << ml << "' y1='" << h - mb << "' x2='" << w - mr << "' y2='"
     << h - mb << "' stroke='black'/>\n";
  os << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << h - mb
     << "' stroke='black'/>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    double ty = ymin + (ymax - ymin) * tick / 4.0;
    double tx = xmin + (xmax - xmin) * tick / 4.0;
    os << "<text x='" << ml - 6 << "' y='" << py(ty) + 4
       << "' text-anchor='end'>" << fmt(ty) << "</text>\n";
    os << "<text x='" << px(tx) << "' y='" << h - mb + 16
       << "' text-anchor='middle'>" << fmt(tx) << "</text>\n";
  }
  int li = 0;
  for (const Series& s : series) {
    if (scatter) {
      for (size_t i = 0; i < s.xs.size(); ++i)
        os << "<circle cx='" << px(s.xs[i]) << "' cy='" << py(s.ys[i])
           << "' r='3' fill='" << s.color << "' fill-opacity='0.7'/>\n";
    } else {
      os << "<polyline fill='none' stroke='" << s.color << "' stroke-width='1.5' points='";
      for (size_t i = 0; i < s.xs.size(); ++i)
        os << px(s.xs[i]) << "," << py(s.ys[i]) << " ";
      os << "'/>\n";
    }
    os << "<text x='" << w - mr - 140 << "' y='" << mt + 14 * li << "' fill='"
       << s.color << "'>" << s.label << "</text>\n";
    ++li;
  }
  os << "</svg>\n";
  return os.str();
}

const char* kColors[] = {"#1c7ed6", "#e8590c", "#2b8a3e", "#9c36b5",
                         "#e03131", "#0b7285", "#5c940d", "#862e9c"};

}  // namespace

// ---- metrics CSV --------------------------------------------------------------

void write_metrics_csv(const std::string& path, const std::vector<MetricsRecord>& rows) {
  std::ostringstream os;
  os << "epoch,split,accuracy,rsa_sl,rsa_si,rsa_li,topsim,unique_messages,ce,l_rsa\n";
  for (const MetricsRecord& r : rows)
    os << r.epoch << "," << r.split << "," << fmt(r.accuracy) << "," << fmt(r.rsa_sl)
       << "," << fmt(r.rsa_si) << "," << fmt(r.rsa_li) << "," << fmt(r.topsim) << ","
       << r.unique_messages << "," << fmt(r.ce) << "," << fmt(r.l_rsa) << "\n";
  write_text(path, os.str());
}

std::vector<MetricsRecord> read_metrics_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(is, line) ||
      line != "epoch,split,accuracy,rsa_sl,rsa_si,rsa_li,topsim,unique_messages,ce,l_rsa")
    throw std::runtime_error("unexpected metrics schema in " + path);
  std::vector<MetricsRecord> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    std::vector<std::string> cols;
    while (std::getline(ss, tok, ',')) cols.push_back(tok);
    if (cols.size() != 10) throw std::runtime_error("bad metrics row: " + line);
    MetricsRecord r;
    r.epoch = std::stoi(cols[0]);
    r.split = cols[1];
    r.accuracy = std::stod(cols[2]);
    r.rsa_sl = std::stod(cols[3]);
    r.rsa_si = std::stod(cols[4]);
    r.rsa_li = std::stod(cols[5]);
    r.topsim = std::stod(cols[6]);
    r.unique_messages = std::stoi(cols[7]);
    r.ce = std::stod(cols[8]);
    r.l_rsa = std::stod(cols[9]);
    rows.push_back(std::move(r));
  }
  return rows;
}

// ---- workers -------------------------------------------------------------------

void run_parallel(std::vector<std::function<void()>> tasks, int workers) {
  if (workers < 1) workers = 1;
  workers = std::min<int>(workers, static_cast<int>(tasks.size()));
  if (workers <= 1) {
    for (auto& t : tasks) t();
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  std::mutex error_mutex;
  std::exception_ptr first_error;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&]() {
      for (;;) {
        size_t i = next.fetch_add(1);
        if (i >= tasks.size()) return;
        try {
          tasks[i]();
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

// ---- dataset + single seed -------------------------------------------------------

EmbeddingDataset build_dataset(const ExperimentConfig& cfg) {
  if (!cfg.embeddings_path.empty())
    return load_embeddings(cfg.embeddings_path, cfg.labels_path, cfg.data_seed);
  Rng rng(cfg.data_seed);
  return generate_synthetic(cfg.synthetic, rng, cfg.data_seed);
}

SeedRunResult run_seed(const ExperimentConfig& cfg, const EmbeddingDataset& ds,
                       uint64_t seed, AgentPair* out_agents) {
  GameConfig game = cfg.game();
  Rng init(derive_seed(seed, 1));
  AgentPair agents =
      AgentPair::init(ds.dim(), cfg.hidden_speaker, cfg.hidden_listener, cfg.vocab,
                      cfg.embed_dim, cfg.max_len, cfg.temperature,
                      cfg.speaker_reembed, init);
  Optimizers opts{Adam(agents.speaker_params(), cfg.lr_speaker),
                  Adam(agents.listener_params(), cfg.lr_listener)};
  BaselineState baseline;
  Rng train_rng(derive_seed(seed, 2));
  uint64_t eval_seed = derive_seed(seed, 3);

  SeedRunResult out;
  out.seed = seed;
  out.history.push_back(evaluate(ds, Split::validation, agents, game, eval_seed, 0));
  for (int e = 1; e <= cfg.epochs; ++e) {
    MetricsRecord tr =
        train_epoch(ds, agents, opts, baseline, game, cfg.batch_size, train_rng, e);
    MetricsRecord va = evaluate(ds, Split::validation, agents, game, eval_seed, e);
    out.max_train_accuracy = std::max(out.max_train_accuracy, tr.accuracy);
    out.max_validation_accuracy = std::max(out.max_validation_accuracy, va.accuracy);
    out.history.push_back(std::move(tr));
    out.history.push_back(va);
    if (e == cfg.epochs) out.final_validation = va;
  }
  FixedPairSet noise = experiment_noise_pairs(cfg, ds.dim());
  out.final_noise =
      evaluate_pairs(noise, agents, game, derive_seed(seed, 4), cfg.epochs, "noise");
  if (auto wino = experiment_wino_pairs(cfg))
    out.final_wino = evaluate_pairs(*wino, agents, game, derive_seed(seed, 5),
                                    cfg.epochs, "winoground");
  if (out_agents) *out_agents = agents;
  return out;
}

// ---- experiment -------------------------------------------------------------------

ExperimentResult run_experiment(const ExperimentConfig& cfg_in) {
  ExperimentConfig cfg = cfg_in;
  if (cfg.out_dir.empty()) cfg.out_dir = "runs/" + cfg.name;
  cfg.validate();
  fs::create_directories(cfg.out_dir);
  write_text(cfg.out_dir + "/config.toml", cfg.to_toml());

  EmbeddingDataset ds = build_dataset(cfg);

  ExperimentResult result;
  result.dir = cfg.out_dir;
  result.seeds.resize(cfg.seeds.size());

  std::vector<std::function<void()>> tasks;
  for (size_t i = 0; i < cfg.seeds.size(); ++i) {
    tasks.push_back([&cfg, &ds, &result, i]() {
      uint64_t seed = cfg.seeds[i];
      std::string dir = seed_dir(cfg.out_dir, seed);
      if (fs::exists(dir + "/summary.json")) {
        result.seeds[i] = seed_result_from_files(dir);  // resume: already done
        return;
      }
      fs::create_directories(dir);
      AgentPair agents;
      SeedRunResult r = run_seed(cfg, ds, seed, &agents);
      write_metrics_csv(dir + "/metrics.csv", r.history);
      agents.save_checkpoint(dir + "/checkpoint.bin");
      // summary.json written last: its presence marks the seed as complete
      write_text(dir + "/summary.json", seed_summary_json(cfg, r).dump(2) + "\n");
      result.seeds[i] = std::move(r);
    });
  }
  run_parallel(std::move(tasks), cfg.workers);

  json per_seed = json::array();
  double val_sum = 0, noise_sum = 0, wino_sum = 0;
  int wino_n = 0;
  for (const SeedRunResult& r : result.seeds) {
    per_seed.push_back(seed_summary_json(cfg, r));
    val_sum += r.final_validation.accuracy;
    noise_sum += r.final_noise.accuracy;
    if (r.final_wino) {
      wino_sum += r.final_wino->accuracy;
      ++wino_n;
    }
  }
  double n = static_cast<double>(result.seeds.size());
  json summary{{"name", cfg.name},
               {"loss", loss_name(cfg.loss)},
               {"vocab", cfg.vocab},
               {"max_len", cfg.max_len},
               {"seeds", cfg.seeds},
               {"mean_final_validation_accuracy", val_sum / n},
               {"mean_final_noise_accuracy", noise_sum / n},
               {"per_seed", per_seed}};
  if (wino_n > 0) summary["mean_final_winoground_accuracy"] = wino_sum / wino_n;
  write_text(cfg.out_dir + "/experiment_summary.json", summary.dump(2) + "\n");
  return result;
}

// ---- sweep -----------------------------------------------------------------------

std::string run_sweep(const ExperimentConfig& base_in, const SweepGrid& grid,
                      const std::vector<LossKind>& losses) {
  ExperimentConfig base = base_in;
  if (base.out_dir.empty()) base.out_dir = "runs/sweep";
  fs::create_directories(base.out_dir);
  write_text(base.out_dir + "/sweep_config.toml", base.to_toml());

  struct Cell {
    LossKind loss;
    int vocab;
    int max_len;
  };
  std::vector<Cell> cells;
  for (LossKind loss : losses)
    for (int v : grid.vocab_sizes)
      for (int l : grid.message_lengths) cells.push_back({loss, v, l});

  std::mutex mu;
  std::map<std::string, std::vector<SeedRunResult>> cell_results;  // key: loss/V/L
  std::vector<std::string> failures;

  std::vector<std::function<void()>> tasks;
  for (const Cell& cell : cells) {
    tasks.push_back([&, cell]() {
      ExperimentConfig c = base;
      c.loss = cell.loss;
      c.vocab = cell.vocab;
      c.max_len = cell.max_len;
      c.workers = 1;  // parallelism lives at the cell level
      c.name = base.name + "_" + loss_name(cell.loss) + "_V" +
               std::to_string(cell.vocab) + "_L" + std::to_string(cell.max_len);
      c.out_dir = base.out_dir + "/" + loss_name(cell.loss) + "/V" +
                  std::to_string(cell.vocab) + "_L" + std::to_string(cell.max_len);
      std::string key = loss_name(cell.loss) + "/" + std::to_string(cell.vocab) +
                        "/" + std::to_string(cell.max_len);
      try {
        ExperimentResult r = run_experiment(c);
        std::lock_guard<std::mutex> lock(mu);
        cell_results[key] = std::move(r.seeds);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(mu);
        failures.push_back(key + ": " + e.what());
        warn("sweep cell " + key + " failed: " + e.what());
      }
    });
  }
  run_parallel(std::move(tasks), base.workers);

  // heatmaps + RSA trends per loss
  for (LossKind loss : losses) {
    std::ostringstream acc, ts, trends;
    acc << "vocab,max_len,accuracy\n";
    ts << "vocab,max_len,topsim\n";
    trends << "vocab,max_len,epoch,rsa_sl,rsa_si,rsa_li\n";
    for (int v : grid.vocab_sizes)
      for (int l : grid.message_lengths) {
        std::string key = loss_name(loss) + "/" + std::to_string(v) + "/" +
                          std::to_string(l);
        auto it = cell_results.find(key);
        if (it == cell_results.end()) continue;
        const auto& seeds = it->second;
        double a = 0, t = 0;
        for (const SeedRunResult& r : seeds) {
          a += r.final_validation.accuracy;
          t += r.final_validation.topsim;
        }
        acc << v << "," << l << "," << fmt(a / seeds.size()) << "\n";
        ts << v << "," << l << "," << fmt(t / seeds.size()) << "\n";
        // per-epoch validation means
        std::map<int, std::array<double, 3>> sums;
        std::map<int, int> counts;
        for (const SeedRunResult& r : seeds)
          for (const MetricsRecord& row : r.history)
            if (row.split == "validation") {
              auto& s = sums[row.epoch];
              s[0] += row.rsa_sl;
              s[1] += row.rsa_si;
              s[2] += row.rsa_li;
              counts[row.epoch] += 1;
            }
        for (const auto& [epoch, s] : sums) {
          int c = counts[epoch];
          trends << v << "," << l << "," << epoch << "," << fmt(s[0] / c) << ","
                 << fmt(s[1] / c) << "," << fmt(s[2] / c) << "\n";
        }
      }
    write_text(base.out_dir + "/heatmap_accuracy_" + loss_name(loss) + ".csv", acc.str());
    write_text(base.out_dir + "/heatmap_topsim_" + loss_name(loss) + ".csv", ts.str());
    write_text(base.out_dir + "/rsa_trends_" + loss_name(loss) + ".csv", trends.str());
  }

  // summary with the best cell per loss by mean validation accuracy
  json best = json::object();
  for (LossKind loss : losses) {
    double best_acc = -1;
    std::string best_key;
    for (const auto& [key, seeds] : cell_results) {
      if (key.rfind(loss_name(loss) + "/", 0) != 0) continue;
      double a = 0;
      for (const SeedRunResult& r : seeds) a += r.final_validation.accuracy;
      a /= static_cast<double>(seeds.size());
      if (a > best_acc) {
        best_acc = a;
        best_key = key;
      }
    }
    if (!best_key.empty())
      best[loss_name(loss)] = json{{"cell", best_key}, {"validation_accuracy", best_acc}};
  }
  json losses_json = json::array();
  for (LossKind loss : losses) losses_json.push_back(loss_name(loss));
  json summary{{"cells_per_loss", grid.cells()},
               {"losses", losses_json},
               {"completed_cells", cell_results.size()},
               {"failures", failures},
               {"best", best}};
  write_text(base.out_dir + "/sweep_summary.json", summary.dump(2) + "\n");
  return base.out_dir;
}

// ---- ablation ---------------------------------------------------------------------

std::string run_ablation(const ExperimentConfig& cfg_in) {
  ExperimentConfig cfg = cfg_in;
  if (cfg.out_dir.empty()) cfg.out_dir = "runs/ablation";
  fs::create_directories(cfg.out_dir);

  std::map<std::string, ExperimentResult> results;
  for (LossKind loss : {LossKind::ce, LossKind::ce_rsa}) {
    ExperimentConfig c = cfg;
    c.loss = loss;
    c.name = cfg.name + "_" + loss_name(loss);
    c.out_dir = cfg.out_dir + "/" + loss_name(loss);
    results[loss_name(loss)] = run_experiment(c);
  }

  std::ostringstream curves;
  curves << "loss,seed,epoch,split,accuracy,ce\n";
  for (const auto& [loss, result] : results)
    for (const SeedRunResult& r : result.seeds)
      for (const MetricsRecord& row : r.history)
        curves << loss << "," << r.seed << "," << row.epoch << "," << row.split << ","
               << fmt(row.accuracy) << "," << fmt(row.ce) << "\n";
  write_text(cfg.out_dir + "/ablation_curves.csv", curves.str());

  // per-seed relative mean absolute divergence of the train-ce curves
  auto train_ce = [](const SeedRunResult& r) {
    std::map<int, double> out;
    for (const MetricsRecord& row : r.history)
      if (row.split == "train") out[row.epoch] = row.ce;
    return out;
  };
  json per_seed = json::array();
  double max_divergence = 0;
  bool epoch0_identical = true;
  std::map<int, double> mean_ce_a, mean_ce_b;
  for (size_t i = 0; i < cfg.seeds.size(); ++i) {
    const SeedRunResult& a = results["ce"].seeds[i];
    const SeedRunResult& b = results["ce_rsa"].seeds[i];
    std::map<int, double> ca = train_ce(a), cb = train_ce(b);
    double rel_sum = 0;
    int n = 0;
    for (const auto& [epoch, ce_a] : ca) {
      auto it = cb.find(epoch);
      if (it == cb.end()) continue;
      rel_sum += std::abs(ce_a - it->second) / std::max(ce_a, 1e-12);
      mean_ce_a[epoch] += ce_a / static_cast<double>(cfg.seeds.size());
      mean_ce_b[epoch] += it->second / static_cast<double>(cfg.seeds.size());
      ++n;
    }
    double rel_mad = n > 0 ? rel_sum / n : 0.0;
    max_divergence = std::max(max_divergence, rel_mad);
    // epoch-0 validation rows must coincide (identical init per seed);
    // l_rsa is excluded: the column mirrors the configured loss
    const MetricsRecord& e0a = a.history.front();
    const MetricsRecord& e0b = b.history.front();
    bool same = e0a.epoch == 0 && e0b.epoch == 0 && e0a.accuracy == e0b.accuracy &&
                e0a.rsa_sl == e0b.rsa_sl && e0a.rsa_si == e0b.rsa_si &&
                e0a.rsa_li == e0b.rsa_li && e0a.topsim == e0b.topsim &&
                e0a.ce == e0b.ce && e0a.unique_messages == e0b.unique_messages;
    epoch0_identical = epoch0_identical && same;
    per_seed.push_back(json{{"seed", a.seed},
                            {"ce_relative_mad", rel_mad},
                            {"epoch0_validation_identical", same}});
  }
  // seed-mean ce curves compared pointwise (the noise-robust statistic)
  double curve_mad = 0;
  int curve_n = 0;
  for (const auto& [epoch, a] : mean_ce_a) {
    curve_mad += std::abs(a - mean_ce_b[epoch]) / std::max(a, 1e-12);
    ++curve_n;
  }
  if (curve_n > 0) curve_mad /= curve_n;
  json report{{"per_seed", per_seed},
              {"max_ce_relative_mad", max_divergence},
              {"mean_curve_ce_relative_mad", curve_mad},
              {"epoch0_validation_identical", epoch0_identical}};
  write_text(cfg.out_dir + "/ablation_report.json", report.dump(2) + "\n");
  return cfg.out_dir;
}

// ---- report -----------------------------------------------------------------------

namespace {

struct CollectedRun {
  std::string dir;  // seed directory
  std::string loss;
  SeedRunResult result;
};

void collect_runs(const std::string& root, std::vector<CollectedRun>& out) {
  if (!fs::exists(root)) throw std::runtime_error("report: no such directory " + root);
  std::vector<std::string> hits;
  if (fs::exists(root + "/summary.json")) {
    hits.push_back(root);
  } else {
    for (const auto& entry : fs::recursive_directory_iterator(root))
      if (entry.is_regular_file() && entry.path().filename() == "summary.json")
        hits.push_back(entry.path().parent_path().string());
  }
  std::sort(hits.begin(), hits.end());
  for (const std::string& dir : hits) {
    CollectedRun run;
    run.dir = dir;
    std::ifstream is(dir + "/summary.json");
    json j = json::parse(is);
    run.loss = j.at("loss").get<std::string>();
    run.result = seed_result_from_files(dir);
    out.push_back(std::move(run));
  }
}

}  // namespace

std::string write_report(const std::vector<std::string>& run_dirs,
                         const std::string& out_dir_in, bool svg) {
  std::string out_dir = out_dir_in.empty() ? "runs/report" : out_dir_in;
  fs::create_directories(out_dir);

  std::vector<CollectedRun> runs;
  for (const std::string& dir : run_dirs) collect_runs(dir, runs);
  if (runs.empty()) throw std::runtime_error("report: no completed runs found");

  std::set<std::string> losses;
  for (const CollectedRun& r : runs) losses.insert(r.loss);

  // correlations per loss and pooled
  std::ostringstream corr;
  corr << "scope,pair,n,r,p,defined\n";
  json corr_json = json::object();
  auto emit_corr = [&](const std::string& scope, const std::vector<RunPoint>& points) {
    if (points.size() < 3) {
      corr << scope << ",insufficient_runs," << points.size() << ",,,\n";
      corr_json[scope] = json{{"n", points.size()}, {"note", "insufficient runs"}};
      return;
    }
    json rows = json::array();
    for (const CorrelationRow& row : correlation_report(points)) {
      corr << scope << "," << row.pair << "," << row.n << ",";
      if (row.defined)
        corr << fmt(row.r) << "," << fmt(row.p) << ",true\n";
      else
        corr << ",,false\n";
      rows.push_back(json{{"pair", row.pair},
                          {"n", row.n},
                          {"r", row.r},
                          {"p", row.p},
                          {"defined", row.defined}});
    }
    corr_json[scope] = rows;
  };
  std::vector<RunPoint> pooled;
  for (const CollectedRun& r : runs)
    pooled.push_back({r.result.final_validation.topsim, r.result.final_validation.rsa_sl,
                      r.result.final_validation.accuracy});
  emit_corr("all", pooled);
  for (const std::string& loss : losses) {
    std::vector<RunPoint> pts;
    for (const CollectedRun& r : runs)
      if (r.loss == loss)
        pts.push_back({r.result.final_validation.topsim, r.result.final_validation.rsa_sl,
                       r.result.final_validation.accuracy});
    emit_corr(loss, pts);
  }
  write_text(out_dir + "/correlations.csv", corr.str());

  // mean learning curves per loss (validation and train rows separately)
  std::ostringstream curves;
  curves << "loss,split,epoch,accuracy,ce,rsa_sl,rsa_si,rsa_li,topsim\n";
  std::map<std::string, std::map<std::string, std::map<int, std::vector<const MetricsRecord*>>>> grouped;
  for (const CollectedRun& r : runs)
    for (const MetricsRecord& row : r.result.history)
      grouped[r.loss][row.split][row.epoch].push_back(&row);
  for (const auto& [loss, by_split] : grouped)
    for (const auto& [split, by_epoch] : by_split)
      for (const auto& [epoch, rows] : by_epoch) {
        double acc = 0, ce = 0, sl = 0, si = 0, li = 0, ts = 0;
        for (const MetricsRecord* r : rows) {
          acc += r->accuracy;
          ce += r->ce;
          sl += r->rsa_sl;
          si += r->rsa_si;
          li += r->rsa_li;
          ts += r->topsim;
        }
        double n = static_cast<double>(rows.size());
        curves << loss << "," << split << "," << epoch << "," << fmt(acc / n) << ","
               << fmt(ce / n) << "," << fmt(sl / n) << "," << fmt(si / n) << ","
               << fmt(li / n) << "," << fmt(ts / n) << "\n";
      }
  write_text(out_dir + "/learning_curves.csv", curves.str());

  // per-dataset bar summary
  std::ostringstream bars;
  bars << "loss,dataset,mean_accuracy,runs\n";
  json bars_json = json::array();
  for (const std::string& loss : losses) {
    std::map<std::string, std::pair<double, int>> agg;
    for (const CollectedRun& r : runs) {
      if (r.loss != loss) continue;
      agg["validation"].first += r.result.final_validation.accuracy;
      agg["validation"].second += 1;
      agg["noise"].first += r.result.final_noise.accuracy;
      agg["noise"].second += 1;
      if (r.result.final_wino) {
        agg["winoground"].first += r.result.final_wino->accuracy;
        agg["winoground"].second += 1;
      }
    }
    for (const auto& [dataset, acc] : agg) {
      bars << loss << "," << dataset << "," << fmt(acc.first / acc.second) << ","
           << acc.second << "\n";
      bars_json.push_back(json{{"loss", loss},
                               {"dataset", dataset},
                               {"mean_accuracy", acc.first / acc.second},
                               {"runs", acc.second}});
    }
  }
  write_text(out_dir + "/dataset_summary.csv", bars.str());

  if (svg) {
    // accuracy learning curves per loss
    for (const std::string& loss : losses) {
      std::vector<Series> series;
      int color = 0;
      for (const std::string& split : {"train", "validation"}) {
        Series s;
        s.label = loss + " " + split;
        s.color = kColors[color++ % 8];
        auto it = grouped.find(loss);
        if (it == grouped.end()) continue;
        auto sit = it->second.find(split);
        if (sit == it->second.end()) continue;
        for (const auto& [epoch, rows] : sit->second) {
          double acc = 0;
          for (const MetricsRecord* r : rows) acc += r->accuracy;
          s.xs.push_back(epoch);
          s.ys.push_back(acc / rows.size());
        }
        series.push_back(std::move(s));
      }
      write_text(out_dir + "/learning_curves_" + loss + ".svg",
                 svg_chart("accuracy (" + loss + ")", series, false));

      std::vector<Series> rsa_series;
      color = 0;
      for (const char* metric : {"rsa_sl", "rsa_si", "rsa_li"}) {
        Series s;
        s.label = metric;
        s.color = kColors[color++ % 8];
        auto it = grouped.find(loss);
        if (it == grouped.end()) continue;
        auto sit = it->second.find("validation");
        if (sit == it->second.end()) continue;
        for (const auto& [epoch, rows] : sit->second) {
          double v = 0;
          for (const MetricsRecord* r : rows)
            v += std::string(metric) == "rsa_sl"
                     ? r->rsa_sl
                     : (std::string(metric) == "rsa_si" ? r->rsa_si : r->rsa_li);
          s.xs.push_back(epoch);
          s.ys.push_back(v / rows.size());
        }
        rsa_series.push_back(std::move(s));
      }
      write_text(out_dir + "/rsa_curves_" + loss + ".svg",
                 svg_chart("representational alignment (" + loss + ")", rsa_series, false));
    }
    // topsim vs rsa_sl scatter across runs
    std::vector<Series> scatter;
    int color = 0;
    for (const std::string& loss : losses) {
      Series s;
      s.label = loss;
      s.color = kColors[color++ % 8];
      for (const CollectedRun& r : runs)
        if (r.loss == loss) {
          s.xs.push_back(r.result.final_validation.rsa_sl);
          s.ys.push_back(r.result.final_validation.topsim);
        }
      scatter.push_back(std::move(s));
    }
    write_text(out_dir + "/topsim_vs_rsa_sl.svg",
               svg_chart("topsim vs inter-agent alignment", scatter, true));
  }

  json report{{"runs", runs.size()},
              {"correlations", corr_json},
              {"dataset_summary", bars_json}};
  write_text(out_dir + "/report.json", report.dump(2) + "\n");
  return out_dir;
}

// ---- embedding import ----------------------------------------------------------------

void import_embeddings(const ImportOptions& opts) {
  if (opts.embeddings_csv.empty() || opts.labels_csv.empty() || opts.out_dir.empty())
    throw std::invalid_argument("import: embeddings csv, labels csv and out dir are required");
  std::ifstream es(opts.embeddings_csv);
  if (!es) throw std::runtime_error("import: cannot open " + opts.embeddings_csv);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(es, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) row.push_back(std::stod(tok));
    if (!rows.empty() && row.size() != rows[0].size())
      throw std::runtime_error("import: ragged embedding row " +
                               std::to_string(rows.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("import: no embedding rows");

  std::ifstream ls(opts.labels_csv);
  if (!ls) throw std::runtime_error("import: cannot open " + opts.labels_csv);
  if (!std::getline(ls, line)) throw std::runtime_error("import: empty labels file");
  bool has_super = line == "index,category,supercategory";
  if (!has_super && line != "index,category")
    throw std::runtime_error(
        "import: labels header must be 'index,category' or "
        "'index,category,supercategory'");
  std::vector<std::string> categories, supercategories;
  size_t idx = 0;
  while (std::getline(ls, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string i, cat, super;
    std::getline(ss, i, ',');
    std::getline(ss, cat, ',');
    if (has_super) std::getline(ss, super, ',');
    if (std::stoul(i) != idx)
      throw std::runtime_error("import: labels must list indices 0..n-1 in order");
    categories.push_back(cat);
    supercategories.push_back(super);
    ++idx;
  }
  if (categories.size() != rows.size())
    throw std::runtime_error("import: " + std::to_string(rows.size()) +
                             " embeddings but " + std::to_string(categories.size()) +
                             " labels");

  std::vector<int> keep(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) keep[i] = static_cast<int>(i);
  if (opts.coco_subset) {
    if (!has_super)
      throw std::runtime_error("import: --coco-subset needs a supercategory column");
    // categories with more than 100 items stay
    std::map<std::string, int> counts;
    for (const std::string& c : categories) counts[c] += 1;
    std::vector<int> eligible;
    for (int i : keep)
      if (counts[categories[static_cast<size_t>(i)]] > 100) eligible.push_back(i);
    // then 100 items per supercategory present in the eligible set
    std::map<std::string, std::vector<int>> by_super;
    for (int i : eligible) by_super[supercategories[static_cast<size_t>(i)]].push_back(i);
    Rng rng(opts.seed);
    keep.clear();
    for (auto& [super, items] : by_super) {
      rng.shuffle(items);
      int take = std::min<int>(100, static_cast<int>(items.size()));
      for (int k = 0; k < take; ++k) keep.push_back(items[static_cast<size_t>(k)]);
    }
    std::sort(keep.begin(), keep.end());
    if (keep.empty()) throw std::runtime_error("import: subset recipe kept no items");
  }

  std::vector<std::vector<double>> out_rows;
  std::vector<std::string> out_labels;
  for (int i : keep) {
    out_rows.push_back(rows[static_cast<size_t>(i)]);
    out_labels.push_back(categories[static_cast<size_t>(i)]);
  }
  fs::create_directories(opts.out_dir);
  save_embeddings(opts.out_dir + "/embeddings.bin", out_rows);
  save_labels(opts.out_dir + "/labels.csv", out_labels);
}

}  // namespace refgame
