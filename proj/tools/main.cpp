#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tadet/config.hpp"
#include "tadet/errors.hpp"
#include "tadet/formats.hpp"
#include "tadet/infer.hpp"
#include "tadet/params.hpp"
#include "tadet/pipeline.hpp"
#include "tadet/serialize.hpp"
#include "tadet/synth.hpp"
#include "tadet/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string out_dir_default() {
  const char* env = std::getenv("TADET_OUT_DIR");
  return (env && *env) ? env : "out";
}

int threads_from_env() {
  const char* env = std::getenv("TADET_THREADS");
  if (!env || !*env) return 1;
  try {
    const int n = std::stoi(env);
    if (n < 1) throw std::invalid_argument("");
    return n;
  } catch (const std::exception&) {
    throw tadet::ParseError("TADET_THREADS must be a positive integer, got '" +
                            std::string(env) + "'");
  }
}

tadet::RunConfig load_config(const std::string& path) {
  return path.empty() ? tadet::default_run_config() : tadet::parse_run_config(path);
}

ordered_json make_header(const std::string& command, const tadet::RunConfig& cfg) {
  ordered_json h;
  h["command"] = command;
  h["threads"] = threads_from_env();
  h["config"] = cfg.echo();
  return h;
}

void write_meta(const fs::path& artifact, const ordered_json& header) {
  ordered_json j;
  j["_header"] = header;
  tadet::atomic_write_file(artifact.string() + ".meta.json", j.dump(2) + "\n");
}

std::string header_line(const ordered_json& header) {
  ordered_json j;
  j["_header"] = header;
  return j.dump();
}

// Move file-based annotations (seconds) onto their windows (normalized).
std::vector<tadet::Window> attach_annotations(std::vector<tadet::Window> windows,
                                              const std::vector<tadet::GtInstance>& gts) {
  std::map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < windows.size(); ++i)
    if (!by_id.emplace(windows[i].video_id, i).second)
      throw tadet::ParseError("duplicate window id '" + windows[i].video_id +
                              "' in the feature file; training needs one window per video");
  for (const tadet::GtInstance& g : gts) {
    const auto it = by_id.find(g.video_id);
    if (it == by_id.end())
      throw tadet::ParseError("annotation for '" + g.video_id +
                              "' matches no window in the feature file");
    tadet::Window& w = windows[it->second];
    constexpr double kSlack = 1e-6;  // absorbs the six-decimal timestamp rounding
    double s = w.to_normalized(g.segment.start());
    double e = w.to_normalized(g.segment.end());
    if (s < -kSlack || e > 1.0 + kSlack)
      throw tadet::ParseError("annotation for '" + g.video_id +
                              "' lies outside its window's time span");
    s = std::max(0.0, s);
    e = std::min(1.0, e);
    w.actions.push_back(
        tadet::GroundTruth{tadet::Segment::from_range(s, e), g.class_id});
  }
  return windows;
}

void check_class_count(const tadet::ClassList& classes, const tadet::RunConfig& cfg) {
  if (classes.num_classes() != cfg.network.num_classes)
    throw tadet::ParseError("class list has " + std::to_string(classes.num_classes()) +
                            " classes but the config declares " +
                            std::to_string(cfg.network.num_classes));
}

int cmd_synth(const std::string& cfg_path, const std::string& out_dir) {
  const tadet::RunConfig cfg = load_config(cfg_path);
  const tadet::Dataset ds = tadet::generate_synthetic(cfg.synth);
  fs::create_directories(out_dir);
  const ordered_json header = make_header("synth", cfg);

  const fs::path features = fs::path(out_dir) / "features.tadf";
  tadet::write_features(features.string(), ds.windows);
  write_meta(features, header);

  const tadet::ClassList classes{ds.class_names};
  tadet::write_class_list((fs::path(out_dir) / "classes.json").string(), classes);
  tadet::write_annotations((fs::path(out_dir) / "annotations.jsonl").string(), ds.windows,
                           classes, header);

  std::size_t actions = 0;
  for (const tadet::Window& w : ds.windows) actions += w.actions.size();
  std::printf("wrote %zu windows [%d x %d], %zu annotations, %d classes to %s\n",
              ds.windows.size(), cfg.synth.feature_dim, cfg.synth.window_length, actions,
              cfg.synth.num_classes, out_dir.c_str());
  return 0;
}

int cmd_train(const std::string& cfg_path, const std::string& features_path,
              const std::string& annotations_path, const std::string& classes_path,
              const std::string& out_dir) {
  const tadet::RunConfig cfg = load_config(cfg_path);
  const bool any_file = !features_path.empty() || !annotations_path.empty() ||
                        !classes_path.empty();
  const bool all_files = !features_path.empty() && !annotations_path.empty() &&
                         !classes_path.empty();
  if (any_file && !all_files)
    throw tadet::ParseError(
        "provide --features, --annotations and --classes together, or none to train on "
        "config-generated synthetic data");

  std::vector<tadet::Window> windows;
  tadet::ClassList classes;
  if (all_files) {
    classes = tadet::read_class_list(classes_path);
    windows = attach_annotations(tadet::read_features(features_path),
                                 tadet::read_annotations(annotations_path, classes));
  } else {
    tadet::Dataset ds = tadet::generate_synthetic(cfg.synth);
    tadet::quantize_features(ds.windows);
    classes = tadet::ClassList{ds.class_names};
    windows = std::move(ds.windows);
  }
  check_class_count(classes, cfg);

  fs::create_directories(out_dir);
  const ordered_json header = make_header("train", cfg);
  const fs::path ckpt = fs::path(out_dir) / "checkpoint.dssd";
  const fs::path metrics = fs::path(out_dir) / "metrics.jsonl";

  tadet::Network net(cfg.network, cfg.train.mode, cfg.network_init_seed());
  std::vector<std::string> lines;
  lines.push_back(header_line(header));
  double final_total = 0.0;

  const tadet::StepCallback on_step = [&lines, &final_total](const tadet::StepRecord& r) {
    ordered_json rec;
    rec["step"] = r.step;
    rec["epoch"] = r.epoch;
    rec["L_cls_m"] = r.report.cls_main;
    rec["L_cls_c"] = r.report.cls_branch;
    rec["L_reg_m"] = r.report.reg_main;
    rec["L_reg_p"] = r.report.reg_branch;
    rec["L_ov_m"] = r.report.ov_main;
    rec["L_ov_p"] = r.report.ov_branch;
    rec["L_total"] = r.report.total;
    rec["positives"] = r.report.num_positives;
    rec["negatives"] = r.report.num_negatives;
    lines.push_back(rec.dump());
    final_total = r.report.total;
  };
  const tadet::EpochCallback on_epoch = [&net, &ckpt](int) {
    tadet::save_checkpoint(net.params(), ckpt.string());
  };

  int steps = 0;
  try {
    steps = tadet::train(net, windows, cfg.train, on_step, on_epoch);
  } catch (const tadet::DivergenceError&) {
    tadet::write_jsonl(metrics.string(), lines);  // keep what we have for diagnosis
    throw;
  }
  tadet::write_jsonl(metrics.string(), lines);
  write_meta(ckpt, header);
  std::printf("trained %d steps over %d epochs; final batch loss %.6f\n", steps,
              cfg.train.epochs, final_total);
  std::printf("checkpoint: %s\nmetrics: %s\n", ckpt.string().c_str(),
              metrics.string().c_str());
  return 0;
}

int cmd_infer(const std::string& cfg_path, const std::string& ckpt_path,
              const std::string& features_path, const std::string& classes_path,
              const std::string& out_dir) {
  const tadet::RunConfig cfg = load_config(cfg_path);
  const tadet::ClassList classes = tadet::read_class_list(classes_path);
  check_class_count(classes, cfg);

  tadet::Network net(cfg.network, cfg.train.mode, tadet::load_checkpoint(ckpt_path));
  const std::vector<tadet::Window> windows = tadet::read_features(features_path);
  const std::vector<tadet::Detection> dets = tadet::run_inference(net, windows, cfg.infer);

  fs::create_directories(out_dir);
  const fs::path out = fs::path(out_dir) / "detections.jsonl";
  tadet::write_detections(out.string(), dets, classes, make_header("infer", cfg));
  std::printf("%zu detections from %zu windows -> %s\n", dets.size(), windows.size(),
              out.string().c_str());
  return 0;
}

int cmd_eval(const std::string& cfg_path, const std::string& detections_path,
             const std::string& annotations_path, const std::string& classes_path,
             const std::string& out_dir) {
  const tadet::RunConfig cfg = load_config(cfg_path);
  const tadet::ClassList classes = tadet::read_class_list(classes_path);
  const std::vector<tadet::Detection> dets = tadet::read_detections(detections_path, classes);
  const std::vector<tadet::GtInstance> gts =
      tadet::read_annotations(annotations_path, classes);
  const tadet::EvalResult ev = tadet::evaluate(dets, gts, cfg.eval_thresholds);

  std::printf("%8s", "");
  for (const auto& row : ev.rows) std::printf("  mAP@%.2f", row.threshold);
  std::printf("\n%8s", "overall");
  for (const auto& row : ev.rows) std::printf("  %8.4f", row.map);
  std::printf("\n");

  ordered_json j;
  j["_header"] = make_header("eval", cfg);
  j["interpolation"] = tadet::kApInterpolation;
  j["rows"] = ordered_json::array();
  for (const auto& row : ev.rows) {
    ordered_json r;
    r["threshold"] = row.threshold;
    r["mAP"] = row.map;
    ordered_json per_class = ordered_json::object();
    for (const auto& [cid, ap] : row.ap_by_class) per_class[classes.name_of(cid)] = ap;
    r["ap_by_class"] = per_class;
    j["rows"].push_back(r);
  }
  fs::create_directories(out_dir);
  const fs::path out = fs::path(out_dir) / "eval.json";
  tadet::atomic_write_file(out.string(), j.dump(2) + "\n");
  std::printf("table: %s\n", out.string().c_str());
  return 0;
}

int cmd_gradcheck(const std::string& cfg_path) {
  const tadet::RunConfig cfg = load_config(cfg_path);
  const tadet::GradCheckResult res = tadet::run_gradcheck(cfg);
  for (const tadet::GradCheckBlock& b : res.blocks)
    std::printf("%-24s max relative error %.3e\n", b.name.c_str(), b.max_rel_error);
  std::printf("gradcheck %s: worst block %s at %.3e (tolerance %.1e, %zu parameters)\n",
              res.pass ? "PASS" : "FAIL", res.worst_block.c_str(), res.worst_error,
              res.tolerance, res.param_count);
  return res.pass ? 0 : 5;
}

int cmd_ablate(const std::string& cfg_path, const std::string& out_dir) {
  const tadet::RunConfig cfg = load_config(cfg_path);
  tadet::Dataset train_data = tadet::generate_synthetic(cfg.synth);
  tadet::Dataset eval_data = tadet::generate_synthetic(cfg.eval_synth_spec());
  tadet::quantize_features(train_data.windows);
  tadet::quantize_features(eval_data.windows);

  std::printf("%-12s %s\n", "mode", "mAP@0.5");
  const auto on_row = [](const tadet::AblationRow& row) {
    std::printf("%-12s %.4f\n", to_string(row.mode).c_str(), row.map_at_half);
    std::fflush(stdout);
  };
  const std::vector<tadet::AblationRow> rows =
      tadet::run_ablation(cfg, train_data, eval_data, on_row);

  ordered_json j;
  j["_header"] = make_header("ablate", cfg);
  j["rows"] = ordered_json::array();
  for (const tadet::AblationRow& row : rows) {
    ordered_json r;
    r["mode"] = to_string(row.mode);
    r["mAP@0.5"] = row.map_at_half;
    ordered_json by_t = ordered_json::object();
    for (const auto& [t, v] : row.map_by_threshold) {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "%.2f", t);
      by_t[buf] = v;
    }
    r["map_by_threshold"] = by_t;
    j["rows"].push_back(r);
  }
  fs::create_directories(out_dir);
  const fs::path out = fs::path(out_dir) / "ablation.json";
  tadet::atomic_write_file(out.string(), j.dump(2) + "\n");
  std::printf("table: %s\n", out.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"temporal action detector: synthetic data, training, inference, evaluation"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = out_dir_default();
  std::string features_path;
  std::string annotations_path;
  std::string classes_path;
  std::string checkpoint_path;
  std::string detections_path;

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("-c,--config", config_path, "config file (defaults when omitted)");
  synth->add_option("-o,--out", out_dir, "output directory");

  CLI::App* train = app.add_subcommand("train", "train a detector");
  train->add_option("-c,--config", config_path, "config file (defaults when omitted)");
  train->add_option("--features", features_path, "feature file (omit to self-generate)");
  train->add_option("--annotations", annotations_path, "annotation file");
  train->add_option("--classes", classes_path, "class list file");
  train->add_option("-o,--out", out_dir, "output directory");

  CLI::App* infer = app.add_subcommand("infer", "run detection with a trained checkpoint");
  infer->add_option("-c,--config", config_path, "config file (defaults when omitted)");
  infer->add_option("--checkpoint", checkpoint_path, "trained checkpoint")->required();
  infer->add_option("--features", features_path, "feature file")->required();
  infer->add_option("--classes", classes_path, "class list file")->required();
  infer->add_option("-o,--out", out_dir, "output directory");

  CLI::App* eval = app.add_subcommand("eval", "score detections against annotations");
  eval->add_option("-c,--config", config_path, "config file (defaults when omitted)");
  eval->add_option("--detections", detections_path, "detection dump")->required();
  eval->add_option("--annotations", annotations_path, "annotation file")->required();
  eval->add_option("--classes", classes_path, "class list file")->required();
  eval->add_option("-o,--out", out_dir, "output directory");

  CLI::App* gradcheck = app.add_subcommand(
      "gradcheck", "compare recorded gradients with finite differences (small configs)");
  gradcheck->add_option("-c,--config", config_path, "config file (defaults when omitted)");

  CLI::App* ablate =
      app.add_subcommand("ablate", "train and score every branch configuration");
  ablate->add_option("-c,--config", config_path, "config file (defaults when omitted)");
  ablate->add_option("-o,--out", out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(config_path, out_dir);
    if (train->parsed())
      return cmd_train(config_path, features_path, annotations_path, classes_path, out_dir);
    if (infer->parsed())
      return cmd_infer(config_path, checkpoint_path, features_path, classes_path, out_dir);
    if (eval->parsed())
      return cmd_eval(config_path, detections_path, annotations_path, classes_path, out_dir);
    if (gradcheck->parsed()) return cmd_gradcheck(config_path);
    if (ablate->parsed()) return cmd_ablate(config_path, out_dir);
  } catch (const tadet::VersionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const tadet::DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const tadet::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
