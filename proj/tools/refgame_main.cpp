// refgame: referential-game simulator front-end.
//
// Subcommands: train, evaluate, sweep, ablate, report, import-embeddings.
// Exit codes: 0 success, 1 configuration error, 2 runtime failure.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "refgame/agents.hpp"
#include "refgame/config.hpp"
#include "refgame/harness.hpp"

using namespace refgame;

namespace {

struct CommonFlags {
  std::string config_path;
  std::string out;
  std::string loss;
  std::string seeds_csv;
  int64_t seed = -1;
  int vocab = 0;
  int max_len = 0;
  int workers = 0;
  int epochs = 0;
  bool paper_params = false;
  bool svg = false;
};

void add_common(CLI::App* cmd, CommonFlags* f) {
  cmd->add_option("--config", f->config_path, "configuration file (key = value lines)");
  cmd->add_option("--out", f->out, "output directory (default $REFGAME_OUT/<name>)");
  cmd->add_option("--loss", f->loss, "loss type: ce or ce_rsa");
  cmd->add_option("--seed", f->seed, "single seed (overrides the seed list)");
  cmd->add_option("--seeds", f->seeds_csv, "comma-separated seed list");
  cmd->add_option("--vocab", f->vocab, "vocabulary size V (includes EOS)");
  cmd->add_option("--max-len", f->max_len, "maximum message length L");
  cmd->add_option("--workers", f->workers, "parallel workers");
  cmd->add_option("--epochs", f->epochs, "training epochs");
  cmd->add_flag("--paper-params", f->paper_params,
                "start from the published best-performing parameters");
  cmd->add_flag("--svg", f->svg, "emit SVG renderings where supported");
}

std::string default_out_root() {
  const char* env = std::getenv("REFGAME_OUT");
  return env != nullptr && *env != '\0' ? env : "runs";
}

ExperimentConfig resolve_config(const CommonFlags& f) {
  ExperimentConfig cfg =
      f.paper_params ? ExperimentConfig::paper_params() : ExperimentConfig();
  if (!f.config_path.empty()) {
    ExperimentConfig file_cfg = ExperimentConfig::from_toml_file(f.config_path);
    if (f.paper_params)
      throw std::invalid_argument(
          "config: --paper-params and --config are mutually exclusive");
    cfg = file_cfg;
  }
  if (!f.loss.empty()) cfg.set("loss", f.loss);
  if (f.vocab > 0) cfg.vocab = f.vocab;
  if (f.max_len > 0) cfg.max_len = f.max_len;
  if (f.workers > 0) cfg.workers = f.workers;
  if (f.epochs > 0) cfg.epochs = f.epochs;
  if (f.seed >= 0) cfg.seeds = {static_cast<uint64_t>(f.seed)};
  if (!f.seeds_csv.empty()) cfg.set("seeds", f.seeds_csv);
  if (!f.out.empty())
    cfg.out_dir = f.out;
  else if (cfg.out_dir.empty())
    cfg.out_dir = default_out_root() + "/" + cfg.name;
  cfg.svg = cfg.svg || f.svg;
  cfg.validate();
  return cfg;
}

std::vector<int> parse_int_list(const std::string& csv, const char* what) {
  std::vector<int> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(std::stoi(tok));
  }
  if (out.empty())
    throw std::invalid_argument(std::string("empty ") + what + " list");
  return out;
}

int run_train(const CommonFlags& f) {
  ExperimentConfig cfg = resolve_config(f);
  ExperimentResult result = run_experiment(cfg);
  std::printf("run directory: %s\n", result.dir.c_str());
  for (const SeedRunResult& r : result.seeds)
    std::printf(
        "seed %llu: val acc %.3f, rsa_sl %.3f, rsa_si %.3f, rsa_li %.3f, topsim %.3f\n",
        static_cast<unsigned long long>(r.seed), r.final_validation.accuracy,
        r.final_validation.rsa_sl, r.final_validation.rsa_si,
        r.final_validation.rsa_li, r.final_validation.topsim);
  return 0;
}

int run_evaluate(const CommonFlags& f, const std::string& run_dir_in) {
  namespace fs = std::filesystem;
  std::string run_dir = fs::path(run_dir_in).lexically_normal().string();
  while (run_dir.size() > 1 && run_dir.back() == '/') run_dir.pop_back();
  std::string checkpoint = run_dir + "/checkpoint.bin";
  if (!fs::exists(checkpoint))
    throw std::invalid_argument("evaluate: no checkpoint at " + checkpoint);
  std::string config_path = f.config_path;
  if (config_path.empty()) {
    config_path = fs::path(run_dir).parent_path().string() + "/config.toml";
    if (!fs::exists(config_path))
      throw std::invalid_argument("evaluate: no config.toml next to the run; pass --config");
  }
  ExperimentConfig cfg = ExperimentConfig::from_toml_file(config_path);
  cfg.validate();
  EmbeddingDataset ds = build_dataset(cfg);
  Rng init(1);
  AgentPair agents = AgentPair::init(ds.dim(), cfg.hidden_speaker, cfg.hidden_listener,
                                     cfg.vocab, cfg.embed_dim, cfg.max_len,
                                     cfg.temperature, cfg.speaker_reembed, init);
  agents.load_checkpoint(checkpoint);
  GameConfig game = cfg.game();
  MetricsRecord val = evaluate(ds, Split::validation, agents, game, 1234, cfg.epochs);
  std::printf("validation: accuracy %.4f rsa_sl %.4f rsa_si %.4f rsa_li %.4f topsim %.4f unique %d ce %.4f\n",
              val.accuracy, val.rsa_sl, val.rsa_si, val.rsa_li, val.topsim,
              val.unique_messages, val.ce);
  Rng noise_rng(derive_seed(cfg.data_seed, 101));
  FixedPairSet noise = noise_pairs(cfg.noise_pair_count, ds.dim(), noise_rng);
  MetricsRecord nr = evaluate_pairs(noise, agents, game, 1235, cfg.epochs, "noise");
  std::printf("noise pairs: accuracy %.4f\n", nr.accuracy);
  if (cfg.embeddings_path.empty()) {
    Rng wino_rng(derive_seed(cfg.data_seed, 102));
    FixedPairSet wino = winoground_analog(cfg.synthetic, cfg.wino_pair_count, wino_rng);
    MetricsRecord wr = evaluate_pairs(wino, agents, game, 1236, cfg.epochs, "winoground");
    std::printf("winoground pairs: accuracy %.4f\n", wr.accuracy);
  }
  return 0;
}

int run_sweep_cmd(const CommonFlags& f, const std::string& vocab_set,
                  const std::string& len_set, const std::string& sweep_loss) {
  ExperimentConfig base = resolve_config(f);
  if (base.out_dir.empty() || f.out.empty())
    base.out_dir = f.out.empty() ? default_out_root() + "/sweep" : f.out;
  SweepGrid grid;
  if (!vocab_set.empty()) grid.vocab_sizes = parse_int_list(vocab_set, "vocab");
  if (!len_set.empty()) grid.message_lengths = parse_int_list(len_set, "max-len");
  std::vector<LossKind> losses;
  if (sweep_loss == "both")
    losses = {LossKind::ce, LossKind::ce_rsa};
  else
    losses = {loss_from_name(sweep_loss)};
  std::string dir = run_sweep(base, grid, losses);
  std::printf("sweep directory: %s (%d cells per loss type)\n", dir.c_str(), grid.cells());
  return 0;
}

int run_ablate(const CommonFlags& f) {
  ExperimentConfig cfg = resolve_config(f);
  if (f.out.empty()) cfg.out_dir = default_out_root() + "/ablation";
  std::string dir = run_ablation(cfg);
  std::printf("ablation directory: %s\n", dir.c_str());
  return 0;
}

int run_report(const CommonFlags& f, const std::vector<std::string>& dirs) {
  std::string out = f.out.empty() ? default_out_root() + "/report" : f.out;
  std::string dir = write_report(dirs, out, f.svg);
  std::printf("report directory: %s\n", dir.c_str());
  std::ifstream is(dir + "/correlations.csv");
  std::string line;
  while (std::getline(is, line)) std::printf("  %s\n", line.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lewis referential-game simulator with representational-alignment metrics"};
  app.require_subcommand(1);

  CommonFlags train_f, eval_f, sweep_f, ablate_f, report_f;
  std::string eval_run_dir, sweep_vocab_set, sweep_len_set, sweep_loss = "both";
  std::vector<std::string> report_dirs;
  ImportOptions import_opts;

  CLI::App* train_cmd = app.add_subcommand("train", "train one experiment (all seeds)");
  add_common(train_cmd, &train_f);

  CLI::App* eval_cmd = app.add_subcommand("evaluate", "evaluate a trained checkpoint");
  add_common(eval_cmd, &eval_f);
  eval_cmd->add_option("run_dir", eval_run_dir, "seed directory containing checkpoint.bin")
      ->required();

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "V x L channel-capacity sweep");
  add_common(sweep_cmd, &sweep_f);
  sweep_cmd->add_option("--vocab-set", sweep_vocab_set,
                        "comma-separated vocabulary sizes (default 3,5,10,20,40,50,100)");
  sweep_cmd->add_option("--len-set", sweep_len_set,
                        "comma-separated message lengths (default 2,3,5,10,50,100)");
  sweep_cmd->add_option("--sweep-loss", sweep_loss, "ce, ce_rsa, or both (default)");

  CLI::App* ablate_cmd =
      app.add_subcommand("ablate", "matched-seed ce vs ce_rsa comparison");
  add_common(ablate_cmd, &ablate_f);

  CLI::App* report_cmd = app.add_subcommand("report", "aggregate completed runs");
  add_common(report_cmd, &report_f);
  report_cmd->add_option("dirs", report_dirs, "run/sweep/ablation directories")
      ->required();

  CLI::App* import_cmd =
      app.add_subcommand("import-embeddings", "convert CSV embeddings to the EMB1 format");
  import_cmd->add_option("--embeddings-csv", import_opts.embeddings_csv,
                         "rows of comma-separated floats")
      ->required();
  import_cmd->add_option("--labels-csv", import_opts.labels_csv,
                         "CSV with header index,category[,supercategory]")
      ->required();
  import_cmd->add_option("--out", import_opts.out_dir, "output directory")->required();
  import_cmd->add_flag("--coco-subset", import_opts.coco_subset,
                       "keep categories with >100 items, then sample 100 per supercategory");
  import_cmd->add_option("--import-seed", import_opts.seed, "subset sampling seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed()) return run_train(train_f);
    if (eval_cmd->parsed()) return run_evaluate(eval_f, eval_run_dir);
    if (sweep_cmd->parsed())
      return run_sweep_cmd(sweep_f, sweep_vocab_set, sweep_len_set, sweep_loss);
    if (ablate_cmd->parsed()) return run_ablate(ablate_f);
    if (report_cmd->parsed()) return run_report(report_f, report_dirs);
    if (import_cmd->parsed()) {
      import_embeddings(import_opts);
      std::printf("imported to %s\n", import_opts.out_dir.c_str());
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
