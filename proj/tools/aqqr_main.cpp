// aqqr - question-quality-rating pipeline driver.
//
// Exit codes: 0 success, 1 usage error (unknown flag/command), 2 missing or
// unreadable file, 3 dataset/checkpoint schema violation, 4 numeric or other
// runtime failure.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "aqqr/checkpoint.hpp"
#include "aqqr/data_io.hpp"
#include "aqqr/embeddings.hpp"
#include "aqqr/errors.hpp"
#include "aqqr/models.hpp"
#include "aqqr/qdqe.hpp"
#include "aqqr/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitSchema = 3;
constexpr int kExitRuntime = 4;

/// Every tunable with its protocol default. A --config JSON file overrides
/// defaults; explicit flags override the file.
struct RunConfig {
  std::string data_path;
  std::string glove_path;
  std::string out_path;
  std::string out_dir = "runs";
  std::string run_dir;
  std::string qdqe_checkpoint;
  std::string model = "edf-solo";
  std::string signal = "length-linear";
  std::string split = "test";
  std::string dale_chall_path;
  std::string spache_path;
  unsigned long long seed = 2021;
  int epochs = 50;
  int qdqe_epochs = 10;
  int batch_size = 16;
  double learning_rate = 1e-3;
  int lr_step = 3;
  double lr_gamma = 0.7;
  double dropout = 0.5;
  int d_scqc = 7;
  int d_sf = 16;
  int c = 80;
  int c_val = 20;
  double tau = 0.07;
  int min_ratings = 10;
  int n = 200;
  double noise = 0.0;
  double lin_a = 3.0;
  double lin_b = 0.01;
  int glove_dim = 16;
  bool lenient = false;
  bool qdqe_finetune = false;
};

json config_echo(const RunConfig& cfg) {
  return json{{"data", cfg.data_path},
              {"glove", cfg.glove_path},
              {"qdqe_checkpoint", cfg.qdqe_checkpoint},
              {"model", cfg.model},
              {"signal", cfg.signal},
              {"seed", cfg.seed},
              {"epochs", cfg.epochs},
              {"qdqe_epochs", cfg.qdqe_epochs},
              {"batch_size", cfg.batch_size},
              {"learning_rate", cfg.learning_rate},
              {"lr_step", cfg.lr_step},
              {"lr_gamma", cfg.lr_gamma},
              {"dropout", cfg.dropout},
              {"d_scqc", cfg.d_scqc},
              {"d_sf", cfg.d_sf},
              {"c", cfg.c},
              {"c_val", cfg.c_val},
              {"tau", cfg.tau},
              {"min_ratings", cfg.min_ratings},
              {"n", cfg.n},
              {"noise", cfg.noise},
              {"lin_a", cfg.lin_a},
              {"lin_b", cfg.lin_b},
              {"glove_dim", cfg.glove_dim},
              {"lenient", cfg.lenient},
              {"qdqe_finetune", cfg.qdqe_finetune},
              {"dale_chall", cfg.dale_chall_path},
              {"spache", cfg.spache_path}};
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw aqqr::IoError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw aqqr::SchemaError("malformed config file " + path + ": " + e.what());
  }
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("data", cfg.data_path);
  get("glove", cfg.glove_path);
  get("out", cfg.out_path);
  get("out_dir", cfg.out_dir);
  get("run_dir", cfg.run_dir);
  get("qdqe_checkpoint", cfg.qdqe_checkpoint);
  get("model", cfg.model);
  get("signal", cfg.signal);
  get("split", cfg.split);
  get("dale_chall", cfg.dale_chall_path);
  get("spache", cfg.spache_path);
  get("seed", cfg.seed);
  get("epochs", cfg.epochs);
  get("qdqe_epochs", cfg.qdqe_epochs);
  get("batch_size", cfg.batch_size);
  get("learning_rate", cfg.learning_rate);
  get("lr_step", cfg.lr_step);
  get("lr_gamma", cfg.lr_gamma);
  get("dropout", cfg.dropout);
  get("d_scqc", cfg.d_scqc);
  get("d_sf", cfg.d_sf);
  get("c", cfg.c);
  get("c_val", cfg.c_val);
  get("tau", cfg.tau);
  get("min_ratings", cfg.min_ratings);
  get("n", cfg.n);
  get("noise", cfg.noise);
  get("lin_a", cfg.lin_a);
  get("lin_b", cfg.lin_b);
  get("glove_dim", cfg.glove_dim);
  get("lenient", cfg.lenient);
  get("qdqe_finetune", cfg.qdqe_finetune);
}

aqqr::WordLists load_word_lists(const RunConfig& cfg) {
  aqqr::WordLists lists = aqqr::WordLists::builtin();
  if (!cfg.dale_chall_path.empty()) {
    lists.dale_chall = aqqr::WordLists::load_file(cfg.dale_chall_path);
  }
  if (!cfg.spache_path.empty()) lists.spache = aqqr::WordLists::load_file(cfg.spache_path);
  return lists;
}

aqqr::QualityDataset load_dataset(const RunConfig& cfg, bool allow_unlabeled, bool filter) {
  aqqr::LoadOptions opts;
  opts.strict = !cfg.lenient;
  opts.allow_unlabeled = allow_unlabeled;
  aqqr::LoadResult result = aqqr::load_jsonl(cfg.data_path, opts);
  for (const auto& issue : result.issues) {
    std::cerr << "warning: " << cfg.data_path << " line " << issue.line << ": "
              << issue.message << " (skipped)\n";
  }
  if (filter) return aqqr::filter_and_label(result.dataset, cfg.min_ratings);
  return result.dataset;
}

std::string csv_comment(const RunConfig& cfg) {
  return "# config: " + config_echo(cfg).dump();
}

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path);
  if (!out) throw aqqr::IoError("cannot write file: " + path);
  out << contents;
}

std::string format_report_table(const aqqr::TrainReport& report) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(6);
  os << "epoch  train_loss    val_mse       lr            seconds\n";
  for (std::size_t e = 0; e < report.epochs.size(); ++e) {
    const auto& s = report.epochs[e];
    os << std::setw(5) << e << "  " << std::setw(12) << s.train_loss << "  " << std::setw(12)
       << s.val_mse << "  " << std::setw(12) << s.learning_rate << "  " << std::setw(7)
       << s.wall_seconds
       << (static_cast<int>(e) == report.selected_epoch ? "  <- selected" : "") << "\n";
  }
  os << "\ntest MSE " << report.test_mse << "   test ACC " << report.test_acc
     << "\nlow-quality classification accuracy  " << report.low_accuracy
     << "\nhigh-quality classification accuracy " << report.high_accuracy << "\n";
  return os.str();
}

json report_to_json(const aqqr::TrainReport& report, const RunConfig& cfg) {
  json epochs = json::array();
  for (const auto& e : report.epochs) {
    epochs.push_back({{"train_loss", e.train_loss},
                      {"val_mse", e.val_mse},
                      {"learning_rate", e.learning_rate},
                      {"wall_seconds", e.wall_seconds}});
  }
  return json{{"config", config_echo(cfg)},
              {"epochs", epochs},
              {"selected_epoch", report.selected_epoch},
              {"test_mse", report.test_mse},
              {"test_acc", report.test_acc},
              {"low_accuracy", report.low_accuracy},
              {"high_accuracy", report.high_accuracy}};
}

std::array<double, 18> edf_for(const aqqr::McqRecord& record, const aqqr::RatingModel& model,
                               const aqqr::WordLists& lists) {
  aqqr::HeuristicGrammarChecker checker;
  return aqqr::normalize_edf(aqqr::extract_edf(record, checker, lists), model.stats);
}

int cmd_gen_synthetic(const RunConfig& cfg, const std::string& emit_glove) {
  aqqr::SyntheticSpec spec;
  spec.signal = cfg.signal;
  spec.n = cfg.n;
  spec.noise_sigma = cfg.noise;
  spec.a = cfg.lin_a;
  spec.b = cfg.lin_b;
  spec.glove_dim = cfg.glove_dim;
  aqqr::SyntheticResult result = aqqr::generate_synthetic(spec, cfg.seed);
  aqqr::save_jsonl(result.dataset, cfg.out_path);
  json meta = {{"config", config_echo(cfg)}, {"records", result.dataset.size()}};
  write_text_file(cfg.out_path + ".meta.json", meta.dump(2) + "\n");
  if (!emit_glove.empty()) aqqr::save_glove(result.glove, emit_glove);
  std::cout << "wrote " << result.dataset.size() << " questions to " << cfg.out_path << "\n";
  if (!emit_glove.empty()) std::cout << "wrote toy embeddings to " << emit_glove << "\n";
  return kExitOk;
}

int cmd_extract_features(const RunConfig& cfg) {
  aqqr::QualityDataset ds = load_dataset(cfg, /*allow_unlabeled=*/true, /*filter=*/false);
  const aqqr::WordLists lists = load_word_lists(cfg);
  aqqr::HeuristicGrammarChecker checker;
  std::ostringstream os;
  os << csv_comment(cfg) << "\n";
  os << "question_id";
  for (const char* name : aqqr::EdfVector::feature_names()) os << ',' << name;
  os << "\n";
  os << std::setprecision(17);
  for (const auto& r : ds.records) {
    const aqqr::EdfVector edf = aqqr::extract_edf(r, checker, lists);
    os << r.id;
    for (double v : edf.as_array()) os << ',' << v;
    os << "\n";
  }
  write_text_file(cfg.out_path, os.str());
  std::cout << "wrote features for " << ds.size() << " questions to " << cfg.out_path << "\n";
  return kExitOk;
}

int cmd_qdqe_pretrain(const RunConfig& cfg) {
  aqqr::QualityDataset ds = load_dataset(cfg, false, true);
  aqqr::GloveTable glove = aqqr::load_glove(cfg.glove_path);
  aqqr::Split split = aqqr::split_dataset(ds, cfg.seed);

  aqqr::QdqeTrainConfig qcfg;
  qcfg.c_train = cfg.c;
  qcfg.c_val = cfg.c_val;
  qcfg.tau = cfg.tau;
  qcfg.epochs = cfg.qdqe_epochs;
  qcfg.learning_rate = cfg.learning_rate;
  qcfg.lr_step_size = cfg.lr_step;
  qcfg.lr_gamma = cfg.lr_gamma;
  qcfg.dropout_p = cfg.dropout;

  std::mt19937_64 rng(cfg.seed);
  aqqr::QdqeTrainResult result = aqqr::train_qdqe(split.train, split.val, glove, qcfg, rng);
  aqqr::save_qdqe_checkpoint(result.encoder, cfg.out_path, config_echo(cfg));

  std::cout << std::setprecision(6);
  for (std::size_t e = 0; e < result.train_losses.size(); ++e) {
    std::cout << "epoch " << e << "  train InfoNCE " << result.train_losses[e]
              << "  val InfoNCE " << result.val_losses[e]
              << (static_cast<int>(e) == result.selected_epoch ? "  <- selected" : "") << "\n";
  }
  std::cout << "wrote encoder checkpoint to " << cfg.out_path << "\n";
  return kExitOk;
}

int cmd_train(const RunConfig& cfg) {
  aqqr::QualityDataset ds = load_dataset(cfg, false, true);
  const aqqr::ModelKind kind = aqqr::model_kind_from_string(cfg.model);
  aqqr::GloveTable glove;
  if (kind != aqqr::ModelKind::EdfSolo || !cfg.glove_path.empty()) {
    if (cfg.glove_path.empty()) {
      throw std::invalid_argument("model '" + cfg.model + "' needs --glove");
    }
    glove = aqqr::load_glove(cfg.glove_path);
  }
  aqqr::Split split = aqqr::split_dataset(ds, cfg.seed);

  std::optional<aqqr::QdqeEncoder> qdqe;
  if (kind == aqqr::ModelKind::DeepQr) {
    if (cfg.qdqe_checkpoint.empty()) {
      throw std::invalid_argument(
          "deepqr needs --qdqe-checkpoint; run `aqqr qdqe-pretrain` first");
    }
    qdqe = aqqr::load_qdqe_checkpoint(cfg.qdqe_checkpoint);
  }

  aqqr::TrainConfig tcfg;
  tcfg.epochs = cfg.epochs;
  tcfg.batch_size = cfg.batch_size;
  tcfg.learning_rate = cfg.learning_rate;
  tcfg.lr_step_size = cfg.lr_step;
  tcfg.lr_gamma = cfg.lr_gamma;
  tcfg.seed = cfg.seed;
  tcfg.model.d_scqc = cfg.d_scqc;
  tcfg.model.d_sf = cfg.d_sf;
  tcfg.model.dropout_p = cfg.dropout;
  tcfg.model.qdqe_finetune = cfg.qdqe_finetune;

  const aqqr::WordLists lists = load_word_lists(cfg);
  aqqr::TrainOutput out =
      aqqr::train_model(kind, split, glove, tcfg, qdqe ? &*qdqe : nullptr, &lists);

  fs::path run_dir;
  if (!cfg.run_dir.empty()) {
    run_dir = cfg.run_dir;
  } else {
    const auto now = std::chrono::system_clock::now().time_since_epoch();
    const auto stamp = std::chrono::duration_cast<std::chrono::seconds>(now).count();
    run_dir = fs::path(cfg.out_dir) / fs::path(cfg.data_path).stem() / cfg.model /
              std::to_string(stamp);
  }
  fs::create_directories(run_dir);

  aqqr::save_model_checkpoint(out.model, (run_dir / "checkpoint.json").string(),
                              config_echo(cfg));
  json report_json = report_to_json(out.report, cfg);
  {
    // rating-distribution histograms over [0,5] in 0.25 steps
    const aqqr::Histogram pred_h = aqqr::rating_histogram(out.test_predictions);
    const aqqr::Histogram label_h = aqqr::rating_histogram(out.test_labels);
    report_json["test_prediction_histogram"] = {{"bins", pred_h.bins},
                                                {"clamped", pred_h.clamped}};
    report_json["test_label_histogram"] = {{"bins", label_h.bins},
                                           {"clamped", label_h.clamped}};
  }
  write_text_file((run_dir / "report.json").string(), report_json.dump(2) + "\n");
  write_text_file((run_dir / "report.txt").string(), format_report_table(out.report));
  {
    std::ostringstream os;
    os << csv_comment(cfg) << "\n";
    os << "epoch,train_loss,val_mse,learning_rate,wall_seconds\n";
    os << std::setprecision(17);
    for (std::size_t e = 0; e < out.report.epochs.size(); ++e) {
      const auto& s = out.report.epochs[e];
      os << e << ',' << s.train_loss << ',' << s.val_mse << ',' << s.learning_rate << ','
         << s.wall_seconds << "\n";
    }
    write_text_file((run_dir / "metrics.csv").string(), os.str());
  }
  {
    std::ostringstream os;
    os << csv_comment(cfg) << "\n";
    os << "question_id,prediction,label\n";
    os << std::setprecision(17);
    for (std::size_t i = 0; i < out.test_predictions.size(); ++i) {
      os << split.test[i].id << ',' << out.test_predictions[i] << ',' << out.test_labels[i]
         << "\n";
    }
    write_text_file((run_dir / "test_predictions.csv").string(), os.str());
  }

  std::cout << format_report_table(out.report);
  std::cout << "\nartifacts written to " << run_dir.string() << "\n";
  return kExitOk;
}

int cmd_evaluate(const RunConfig& cfg, const std::string& checkpoint_path) {
  json stored_cfg;
  aqqr::RatingModel model = aqqr::load_model_checkpoint(checkpoint_path, &stored_cfg);
  RunConfig eff = cfg;
  // reuse the training protocol recorded in the checkpoint unless overridden
  if (stored_cfg.contains("seed") && eff.seed == 2021) {
    eff.seed = stored_cfg.at("seed").get<unsigned long long>();
  }
  if (stored_cfg.contains("min_ratings") && eff.min_ratings == 10) {
    eff.min_ratings = stored_cfg.at("min_ratings").get<int>();
  }
  if (eff.glove_path.empty() && stored_cfg.contains("glove")) {
    eff.glove_path = stored_cfg.at("glove").get<std::string>();
  }
  aqqr::QualityDataset ds = load_dataset(eff, false, true);
  aqqr::GloveTable glove;
  if (model.uses_embeddings()) {
    if (eff.glove_path.empty()) throw std::invalid_argument("this model needs --glove");
    glove = aqqr::load_glove(eff.glove_path);
  }
  aqqr::Split split = aqqr::split_dataset(ds, eff.seed);

  std::vector<aqqr::McqRecord> records;
  if (eff.split == "train") {
    records = split.train;
  } else if (eff.split == "val") {
    records = split.val;
  } else if (eff.split == "test") {
    records = split.test;
  } else if (eff.split == "all") {
    records = ds.records;
  } else {
    throw std::invalid_argument("unknown --split '" + eff.split +
                                "' (expected train, val, test, or all)");
  }

  std::vector<aqqr::PreparedQuestion> qs = aqqr::prepare_questions(model, records, glove);
  const aqqr::WordLists lists = load_word_lists(eff);
  std::vector<double> preds, labels;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (model.uses_edf()) qs[i].edf_norm = edf_for(records[i], model, lists);
    preds.push_back(aqqr::model_predict_one(model, qs[i]));
    labels.push_back(records[i].label());
  }
  const auto [mse, acc] = aqqr::evaluate(preds, labels);
  std::cout << std::setprecision(17) << "split " << eff.split << "  n " << preds.size()
            << "  MSE " << mse << "  ACC " << acc << "\n";
  return kExitOk;
}

int cmd_predict(const RunConfig& cfg, const std::string& checkpoint_path,
                const std::string& out_path) {
  aqqr::RatingModel model = aqqr::load_model_checkpoint(checkpoint_path);
  aqqr::QualityDataset ds = load_dataset(cfg, /*allow_unlabeled=*/true, /*filter=*/false);
  aqqr::GloveTable glove;
  if (model.uses_embeddings()) {
    if (cfg.glove_path.empty()) throw std::invalid_argument("this model needs --glove");
    glove = aqqr::load_glove(cfg.glove_path);
  }
  std::vector<aqqr::PreparedQuestion> qs = aqqr::prepare_questions(model, ds.records, glove);
  const aqqr::WordLists lists = load_word_lists(cfg);

  std::ostringstream os;
  os << csv_comment(cfg) << "\n";
  os << "question_id,prediction\n";
  os << std::setprecision(17);
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    if (model.uses_edf()) qs[i].edf_norm = edf_for(ds.records[i], model, lists);
    os << ds.records[i].id << ',' << aqqr::model_predict_one(model, qs[i]) << "\n";
  }
  write_text_file(out_path, os.str());
  std::cout << "wrote " << ds.size() << " predictions to " << out_path << "\n";
  return kExitOk;
}

int cmd_export_attention(const RunConfig& cfg, const std::string& checkpoint_path) {
  aqqr::RatingModel model = aqqr::load_model_checkpoint(checkpoint_path);
  if (!model.scqc) {
    throw std::invalid_argument("model kind '" + aqqr::to_string(model.kind) +
                                "' has no SCQC branch to export");
  }
  aqqr::QualityDataset ds = load_dataset(cfg, true, false);
  aqqr::GloveTable glove = aqqr::load_glove(cfg.glove_path);
  std::vector<aqqr::PreparedQuestion> qs = aqqr::prepare_questions(model, ds.records, glove);
  fs::create_directories(cfg.out_dir);

  static const char* kLabels[7] = {"S", "A", "D1", "D2", "D3", "D4", "E"};
  aqqr::NoGradGuard guard;
  std::mt19937_64 unused(0);
  for (std::size_t i = 0; i < qs.size(); ++i) {
    std::array<double, 49> co{};
    aqqr::model_question_features(model, qs[i], false, unused, &co);
    std::ostringstream os;
    os << csv_comment(cfg) << "\n";
    os << "component";
    for (const char* l : kLabels) os << ',' << l;
    os << "\n";
    os << std::setprecision(17);
    for (int r = 0; r < 7; ++r) {
      os << kLabels[r];
      for (int c = 0; c < 7; ++c) os << ',' << co[r * 7 + c];
      os << "\n";
    }
    write_text_file((fs::path(cfg.out_dir) / (ds.records[i].id + ".csv")).string(), os.str());
  }
  std::cout << "wrote " << qs.size() << " attention matrices to " << cfg.out_dir << "\n";
  return kExitOk;
}

int cmd_export_embeddings(const RunConfig& cfg) {
  aqqr::QualityDataset ds = load_dataset(cfg, true, false);
  aqqr::GloveTable glove = aqqr::load_glove(cfg.glove_path);

  std::optional<aqqr::QdqeEncoder> qdqe;
  if (!cfg.qdqe_checkpoint.empty()) qdqe = aqqr::load_qdqe_checkpoint(cfg.qdqe_checkpoint);
  const int dim = qdqe ? qdqe->dim() : glove.dim();

  std::ostringstream os;
  os << csv_comment(cfg) << "\n";
  os << "question_id";
  for (int d = 0; d < dim; ++d) os << ",v" << d;
  os << "\n";
  os << std::setprecision(17);
  aqqr::NoGradGuard guard;
  std::mt19937_64 unused(0);
  for (const auto& r : ds.records) {
    aqqr::ComponentEmbeddings re = aqqr::embed_question(r, glove);
    os << r.id;
    if (qdqe) {
      aqqr::Tensor v = aqqr::encode_question(aqqr::pad_components(re, qdqe->dim()), *qdqe,
                                             false, 0.0, unused);
      for (double x : v.values()) os << ',' << x;
    } else {
      aqqr::Tensor pooled = aqqr::mean_rows(re.matrix);
      for (double x : pooled.values()) os << ',' << x;
    }
    os << "\n";
  }
  write_text_file(cfg.out_path, os.str());
  std::cout << "wrote " << ds.size() << " question embeddings to " << cfg.out_path << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;

  // config-file layering: apply the file first, then let flags overwrite
  try {
    for (int i = 1; i + 1 < argc; ++i) {
      if (std::string(argv[i]) == "--config") apply_config_file(cfg, argv[i + 1]);
    }
  } catch (const aqqr::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const aqqr::SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSchema;
  }

  CLI::App app{
      "aqqr - learnersourced question quality rating pipeline\n"
      "Exit codes: 0 ok, 1 usage, 2 missing file, 3 schema violation, 4 runtime failure."};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file (flags win over file values)");

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", cfg.seed, "run seed");
    cmd->add_option("--min-ratings", cfg.min_ratings, "minimum ratings per question");
    cmd->add_flag("--lenient", cfg.lenient, "skip malformed dataset lines with a warning");
  };

  CLI::App* gen = app.add_subcommand("gen-synthetic", "generate a planted-signal dataset");
  std::string emit_glove;
  gen->add_option("--signal", cfg.signal, "length-linear | correlation | vocabulary-split");
  gen->add_option("--n", cfg.n, "question count");
  gen->add_option("--noise", cfg.noise, "gaussian label noise sigma");
  gen->add_option("--a", cfg.lin_a, "length-linear intercept");
  gen->add_option("--b", cfg.lin_b, "length-linear slope");
  gen->add_option("--glove-dim", cfg.glove_dim, "toy embedding dimension");
  gen->add_option("--out", cfg.out_path, "output JSONL path")->required();
  gen->add_option("--emit-glove", emit_glove, "also write the toy embedding table here");
  add_common(gen);

  CLI::App* extract = app.add_subcommand("extract-features", "write the 18-feature CSV");
  extract->add_option("--data", cfg.data_path, "input JSONL")->required();
  extract->add_option("--out", cfg.out_path, "output CSV")->required();
  extract->add_option("--dale-chall", cfg.dale_chall_path, "easy-word list override");
  extract->add_option("--spache", cfg.spache_path, "easy-word list override");
  add_common(extract);

  CLI::App* pretrain = app.add_subcommand("qdqe-pretrain", "contrastive encoder pre-training");
  pretrain->add_option("--data", cfg.data_path, "input JSONL")->required();
  pretrain->add_option("--glove", cfg.glove_path, "embedding table")->required();
  pretrain->add_option("--out", cfg.out_path, "encoder checkpoint path")->required();
  pretrain->add_option("--c", cfg.c, "train extreme-set size");
  pretrain->add_option("--c-val", cfg.c_val, "validation extreme-set size");
  pretrain->add_option("--tau", cfg.tau, "InfoNCE temperature");
  pretrain->add_option("--epochs", cfg.qdqe_epochs, "contrastive epochs");
  pretrain->add_option("--lr", cfg.learning_rate, "learning rate");
  pretrain->add_option("--dropout", cfg.dropout, "dropout probability");
  add_common(pretrain);

  CLI::App* train = app.add_subcommand("train", "train a rating model");
  train->add_option("--model", cfg.model, "edf-solo|edf-enriched|sf|combined|deepqr");
  train->add_option("--data", cfg.data_path, "input JSONL")->required();
  train->add_option("--glove", cfg.glove_path, "embedding table");
  train->add_option("--qdqe-checkpoint", cfg.qdqe_checkpoint, "encoder for deepqr");
  train->add_option("--epochs", cfg.epochs, "training epochs");
  train->add_option("--batch-size", cfg.batch_size, "batch size");
  train->add_option("--lr", cfg.learning_rate, "initial learning rate");
  train->add_option("--lr-step", cfg.lr_step, "scheduler step size");
  train->add_option("--lr-gamma", cfg.lr_gamma, "scheduler decay");
  train->add_option("--dropout", cfg.dropout, "dropout probability");
  train->add_option("--d-scqc", cfg.d_scqc, "SCQC feature width");
  train->add_option("--d-sf", cfg.d_sf, "SF feature width");
  train->add_option("--dale-chall", cfg.dale_chall_path, "easy-word list override");
  train->add_option("--spache", cfg.spache_path, "easy-word list override");
  train->add_option("--out-dir", cfg.out_dir, "base directory for run artifacts");
  train->add_option("--run-dir", cfg.run_dir, "exact artifact directory (no timestamp)");
  train->add_flag("--qdqe-finetune", cfg.qdqe_finetune,
                  "update the QDQE encoder during rating training");
  add_common(train);

  std::string checkpoint_path;
  CLI::App* eval_cmd = app.add_subcommand("evaluate", "score a checkpoint on a dataset split");
  eval_cmd->add_option("--checkpoint", checkpoint_path, "model checkpoint")->required();
  eval_cmd->add_option("--data", cfg.data_path, "input JSONL")->required();
  eval_cmd->add_option("--glove", cfg.glove_path, "embedding table");
  eval_cmd->add_option("--split", cfg.split, "train|val|test|all");
  eval_cmd->add_option("--dale-chall", cfg.dale_chall_path, "easy-word list override");
  eval_cmd->add_option("--spache", cfg.spache_path, "easy-word list override");
  add_common(eval_cmd);

  std::string predictions_out;
  CLI::App* predict = app.add_subcommand("predict", "per-question rating CSV");
  predict->add_option("--checkpoint", checkpoint_path, "model checkpoint")->required();
  predict->add_option("--data", cfg.data_path, "input JSONL (may be unlabeled)")->required();
  predict->add_option("--glove", cfg.glove_path, "embedding table");
  predict->add_option("--out", predictions_out, "output CSV")->required();
  predict->add_option("--dale-chall", cfg.dale_chall_path, "easy-word list override");
  predict->add_option("--spache", cfg.spache_path, "easy-word list override");
  add_common(predict);

  CLI::App* attn = app.add_subcommand("export-attention", "per-question 7x7 SCQC matrices");
  attn->add_option("--checkpoint", checkpoint_path, "model checkpoint")->required();
  attn->add_option("--data", cfg.data_path, "input JSONL")->required();
  attn->add_option("--glove", cfg.glove_path, "embedding table")->required();
  attn->add_option("--out-dir", cfg.out_dir, "output directory")->required();
  add_common(attn);

  CLI::App* emb = app.add_subcommand("export-embeddings", "question-level embedding CSV");
  emb->add_option("--data", cfg.data_path, "input JSONL")->required();
  emb->add_option("--glove", cfg.glove_path, "embedding table")->required();
  emb->add_option("--qdqe-checkpoint", cfg.qdqe_checkpoint,
                  "QDQE encoder (pooled GloVe rows when absent)");
  emb->add_option("--out", cfg.out_path, "output CSV")->required();
  add_common(emb);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);  // prints the usage message; 0 for --help
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_gen_synthetic(cfg, emit_glove);
    if (extract->parsed()) return cmd_extract_features(cfg);
    if (pretrain->parsed()) return cmd_qdqe_pretrain(cfg);
    if (train->parsed()) return cmd_train(cfg);
    if (eval_cmd->parsed()) return cmd_evaluate(cfg, checkpoint_path);
    if (predict->parsed()) return cmd_predict(cfg, checkpoint_path, predictions_out);
    if (attn->parsed()) return cmd_export_attention(cfg, checkpoint_path);
    if (emb->parsed()) return cmd_export_embeddings(cfg);
    std::cerr << "no command given\n";
    return kExitUsage;
  } catch (const aqqr::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const aqqr::SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSchema;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
