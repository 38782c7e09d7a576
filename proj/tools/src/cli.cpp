#include "strokeless/cli.hpp"

#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <chrono>
#include <fstream>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>

#include "strokeless/checkpoint.hpp"
#include "strokeless/dataset.hpp"
#include "strokeless/evaluation.hpp"
#include "strokeless/png_io.hpp"
#include "strokeless/service.hpp"

namespace strokeless::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

void apply_train_config_json(TrainConfig& cfg, const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw InvalidArgument("config must be a flat JSON object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "batch_size") cfg.batch_size = value.get<int>();
      else if (key == "lr") cfg.lr = value.get<double>();
      else if (key == "beta1") cfg.beta1 = value.get<double>();
      else if (key == "beta2") cfg.beta2 = value.get<double>();
      else if (key == "adam_eps") cfg.adam_eps = value.get<double>();
      else if (key == "epochs") cfg.epochs = value.get<int>();
      else if (key == "image_size") cfg.image_size = value.get<int>();
      else if (key == "ablation") cfg.ablation = parse_ablation(value.get<std::string>());
      else if (key == "cascade_units") cfg.cascade_units = value.get<int>();
      else if (key == "seed") cfg.seed = value.get<uint64_t>();
      else if (key == "lambda_t") cfg.loss.lambda_t = value.get<float>();
      else if (key == "lambda_m") cfg.loss.lambda_m = value.get<float>();
      else if (key == "lambda_s") cfg.loss.lambda_s = value.get<float>();
      else if (key == "lambda_r") cfg.loss.lambda_r = value.get<float>();
      else if (key == "base_channels") cfg.base_channels = value.get<int>();
      else if (key == "levels") cfg.levels = value.get<int>();
      else if (key == "disc_channels") cfg.disc_channels = value.get<std::vector<int>>();
      else if (key == "disc_kernel") cfg.disc_kernel = value.get<int>();
      else if (key == "mask_branch_normalized") cfg.mask_branch_normalized = value.get<bool>();
      else if (key == "detector_warmup_steps") cfg.detector_warmup_steps = value.get<int>();
      else if (key == "adversarial") cfg.adversarial = value.get<bool>();
      else throw InvalidArgument("unknown config key '" + key + "'");
    } catch (const json::exception& e) {
      throw InvalidArgument("config key '" + key + "': " + e.what());
    }
  }
}

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path stroke_path_for(const fs::path& out) {
  fs::path p = out;
  p.replace_extension();
  return p.string() + ".stroke.png";
}

struct SynthArgs {
  fs::path out;
  SynthSpec spec;
  bool json = false;
};

struct BuildArgs {
  fs::path pairs;
  float tau = kDefaultStrokeTau;
  bool json = false;
};

struct SplitArgs {
  fs::path manifest;
  double train_frac = 0.75;
  uint64_t seed = 42;
  bool json = false;
};

struct TrainArgs {
  fs::path data;
  fs::path out;
  fs::path config;
  fs::path metrics;
  fs::path resume;
  std::string split = "train";
  std::string ablation;
  std::vector<int> disc_channels;
  int log_every = 10;
  bool no_adversarial = false;
  bool json = false;
  TrainConfig cfg;
};

struct EvalArgs {
  fs::path data;
  fs::path ckpt;
  fs::path detections;
  std::string split = "test";
  double iou = 0.5;
  bool composite = false;
  bool samples = false;
  bool json = false;
};

struct InferArgs {
  fs::path ckpt;
  fs::path image;
  fs::path mask;
  fs::path polygons;
  fs::path out;
  bool composite = false;
  bool json = false;
};

struct ServeArgs {
  fs::path ckpt;
  std::string host = "0.0.0.0";
  int port = 8080;
  fs::path static_dir;
  int64_t max_pixels = 0;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  const Dataset ds = synth_generate(a.spec);
  write_dataset(a.out, ds);
  int64_t strokes = 0;
  for (const auto& s : ds.samples) strokes += s.strokes.count_nonzero();
  if (a.json) {
    out << json{{"out", a.out.string()}, {"count", ds.size()}, {"stroke_pixels", strokes}}.dump()
        << "\n";
  } else {
    out << "wrote " << ds.size() << " samples to " << a.out.string() << "\n";
  }
  return kExitOk;
}

int cmd_build(const BuildArgs& a, std::ostream& out) {
  const BuildReport r = build_from_pairs(a.pairs, a.tau);
  if (a.json) {
    out << json{{"count", r.dataset.size()},
                {"stroke_pixels", r.stroke_pixels},
                {"clipped_pixels", r.clipped_pixels},
                {"warnings", r.warnings}}
               .dump()
        << "\n";
  } else {
    for (const auto& [id, n] : r.stroke_pixels) {
      out << id << "\t" << n << " stroke px";
      if (auto it = r.clipped_pixels.find(id); it != r.clipped_pixels.end() && it->second > 0) {
        out << "\t" << it->second << " clipped";
      }
      out << "\n";
    }
    out << "built " << r.dataset.size() << " samples, " << r.warnings.size() << " warnings\n";
  }
  return kExitOk;
}

int cmd_split(const SplitArgs& a, std::ostream& out) {
  split_manifest(a.manifest, a.train_frac, a.seed);
  const json m = json::parse(read_text(a.manifest));
  int64_t train = 0, test = 0;
  for (const auto& s : m.at("samples")) (s.at("split") == "train" ? train : test)++;
  if (a.json) {
    out << json{{"train", train}, {"test", test}}.dump() << "\n";
  } else {
    out << "train " << train << ", test " << test << "\n";
  }
  return kExitOk;
}

int cmd_train(TrainArgs& a, const CLI::App& sub, std::ostream& out) {
  TrainConfig cfg;
  if (!a.config.empty()) apply_train_config_json(cfg, read_text(a.config));
  // Explicit flags override the config file.
  auto given = [&](const char* name) { return sub.get_option(name)->count() > 0; };
  if (given("--batch")) cfg.batch_size = a.cfg.batch_size;
  if (given("--lr")) cfg.lr = a.cfg.lr;
  if (given("--beta1")) cfg.beta1 = a.cfg.beta1;
  if (given("--beta2")) cfg.beta2 = a.cfg.beta2;
  if (given("--epochs")) cfg.epochs = a.cfg.epochs;
  if (given("--size")) cfg.image_size = a.cfg.image_size;
  if (given("--ablation")) cfg.ablation = parse_ablation(a.ablation);
  if (given("--cascade-units")) cfg.cascade_units = a.cfg.cascade_units;
  if (given("--seed")) cfg.seed = a.cfg.seed;
  if (given("--base-channels")) cfg.base_channels = a.cfg.base_channels;
  if (given("--levels")) cfg.levels = a.cfg.levels;
  if (given("--disc-channels")) cfg.disc_channels = a.disc_channels;
  if (given("--detector-warmup")) cfg.detector_warmup_steps = a.cfg.detector_warmup_steps;
  if (given("--lambda-t")) cfg.loss.lambda_t = a.cfg.loss.lambda_t;
  if (given("--lambda-m")) cfg.loss.lambda_m = a.cfg.loss.lambda_m;
  if (given("--lambda-s")) cfg.loss.lambda_s = a.cfg.loss.lambda_s;
  if (given("--lambda-r")) cfg.loss.lambda_r = a.cfg.loss.lambda_r;
  if (a.no_adversarial) cfg.adversarial = false;
  cfg.validate();

  const Dataset ds = load_dataset(a.data, a.split == "all" ? std::nullopt
                                                          : std::optional<std::string>(a.split));
  if (ds.empty() && cfg.epochs > 0) {
    throw DataError("no samples in split '" + a.split + "' of " + a.data.string());
  }

  std::ofstream metrics;
  TrainingSink sink;
  sink.checkpoint_dir = a.out;
  if (!a.metrics.empty()) {
    metrics.open(a.metrics);
    if (!metrics) throw InvalidArgument("cannot write " + a.metrics.string());
    sink.metrics = &metrics;
  }
  const int every = std::max(1, a.log_every);
  sink.on_step = [every](const TrainState& s, const LossBreakdown& b) {
    if (s.step % every == 0) {
      spdlog::info("step {} l_tsd {:.5f} l_trg {:.5f} l_g_sn {:.5f} l_d_sn {:.5f}", s.step, b.l_tsd,
                   b.l_trg, b.l_g_sn, b.l_d_sn);
    }
  };

  TrainState state = [&] {
    if (a.resume.empty()) return run_training(cfg, ds, sink);
    TrainState s = load_checkpoint(a.resume);
    if (!(s.model.config == cfg.model_config())) {
      throw CheckpointFormatError("checkpoint " + a.resume.string() +
                                  " was trained with a different model configuration");
    }
    continue_training(s, cfg, ds, sink);
    return s;
  }();

  if (a.json) {
    out << json{{"out", a.out.string()},
                {"step", state.step},
                {"epoch", state.epoch},
                {"model_config_hash", model_config_hash(state.model.config)}}
               .dump()
        << "\n";
  } else {
    out << "trained " << state.step << " steps; checkpoint at " << a.out.string() << "\n";
  }
  return kExitOk;
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const Model<float> model = load_model(a.ckpt);
  Dataset ds =
      load_dataset(a.data, a.split == "all" ? std::nullopt : std::optional<std::string>(a.split));
  if (ds.empty()) {
    spdlog::warn("split '{}' is empty; evaluating every sample", a.split);
    ds = load_dataset(a.data);
  }
  EvalOptions opt;
  opt.composite = a.composite;
  opt.iou_thresh = a.iou;
  if (!a.detections.empty()) opt.detections = load_detections(a.detections);
  const EvalReport report = evaluate(model, ds, opt);
  out << (a.json ? report_to_json(report, a.samples) : report_to_table(report)) << "\n";
  return kExitOk;
}

int cmd_infer(const InferArgs& a, std::ostream& out) {
  const Model<float> model = load_model(a.ckpt);
  const ImageTensor image = load_image_png(a.image);
  RegionMask mask;
  if (!a.mask.empty()) {
    mask = load_mask_png<PlaneKind::kRegion>(a.mask);
    if (mask.height() != image.height() || mask.width() != image.width()) {
      throw InvalidArgument("mask " + a.mask.string() + " does not match the image size");
    }
  } else {
    const auto polys = polygons_from_json_text(read_text(a.polygons));
    if (polys.empty()) throw InvalidArgument(a.polygons.string() + " holds no polygons");
    for (const auto& p : polys) validate_polygon(p, image.height(), image.width());
    mask = rasterize_polygons(polys, image.height(), image.width());
  }
  const auto t0 = std::chrono::steady_clock::now();
  const CascadeOutput result = run_cascade(model, image, mask);
  const double ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  const ImageTensor erased =
      a.composite ? composite(image, mask, result.final_image()) : result.final_image();
  save_image_png(a.out, erased);
  json written = json::array({a.out.string()});
  if (const StrokeMask* strokes = result.final_strokes()) {
    const fs::path sp = stroke_path_for(a.out);
    save_mask_png(sp, *strokes);
    written.push_back(sp.string());
  }
  if (a.json) {
    out << json{{"written", written}, {"forward_ms", ms}}.dump() << "\n";
  } else {
    for (const auto& w : written) out << "wrote " << w.get<std::string>() << "\n";
  }
  return kExitOk;
}

int cmd_serve(const ServeArgs& a) {
  ServiceConfig cfg = ServiceConfig::from_env();
  if (a.max_pixels > 0) cfg.max_pixels = a.max_pixels;
  cfg.static_dir = a.static_dir;
  EraseService service(cfg);
  service.load_checkpoint(a.ckpt);
  serve_http(service, a.host, a.port);
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Text stroke detection and removal"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s_synth = app.add_subcommand("dataset-synth", "Generate a synthetic paired dataset");
  s_synth->add_option("--out", synth.out, "Output directory")->required();
  s_synth->add_option("--count", synth.spec.count, "Number of samples")->required();
  s_synth->add_option("--size", synth.spec.size, "Square image side")->capture_default_str();
  s_synth->add_option("--seed", synth.spec.seed)->capture_default_str();
  s_synth->add_option("--stroke-ratio", synth.spec.stroke_ratio, "Pen width over glyph height")
      ->capture_default_str();
  s_synth->add_flag("--json", synth.json);

  BuildArgs build;
  auto* s_build = app.add_subcommand("dataset-build", "Derive stroke masks from image pairs");
  s_build->add_option("--pairs", build.pairs, "Directory with text/, clean/ and masks")
      ->required()
      ->check(CLI::ExistingDirectory);
  s_build->add_option("--tau", build.tau, "Difference threshold on the [0,1] scale")
      ->capture_default_str();
  s_build->add_flag("--json", build.json);

  SplitArgs split;
  auto* s_split = app.add_subcommand("split", "Assign train/test splits in a manifest");
  s_split->add_option("--manifest", split.manifest)->required()->check(CLI::ExistingFile);
  s_split->add_option("--train-frac", split.train_frac)->capture_default_str();
  s_split->add_option("--seed", split.seed)->capture_default_str();
  s_split->add_flag("--json", split.json);

  TrainArgs train;
  const char* env_ckpt = std::getenv("STROKELESS_CKPT");
  train.out = env_ckpt && *env_ckpt ? fs::path(env_ckpt) : fs::path("checkpoint");
  auto* s_train = app.add_subcommand("train", "Train a model");
  s_train->add_option("--data", train.data, "Dataset directory")->required();
  s_train->add_option("--epochs", train.cfg.epochs)->capture_default_str();
  s_train->add_option("--out", train.out, "Checkpoint directory")->capture_default_str();
  s_train->add_option("--config", train.config, "Flat JSON of TrainConfig fields")
      ->check(CLI::ExistingFile);
  s_train->add_option("--ablation", train.ablation,
                      "baseline, wd, tsdnet, wd_tsdnet or cascade (default cascade)")
      ->check(CLI::IsMember({"baseline", "wd", "tsdnet", "wd_tsdnet", "cascade"}));
  s_train->add_option("--batch", train.cfg.batch_size)->capture_default_str();
  s_train->add_option("--lr", train.cfg.lr)->capture_default_str();
  s_train->add_option("--beta1", train.cfg.beta1)->capture_default_str();
  s_train->add_option("--beta2", train.cfg.beta2)->capture_default_str();
  s_train->add_option("--size", train.cfg.image_size)->capture_default_str();
  s_train->add_option("--seed", train.cfg.seed)->capture_default_str();
  s_train->add_option("--cascade-units", train.cfg.cascade_units)->capture_default_str();
  s_train->add_option("--base-channels", train.cfg.base_channels)->capture_default_str();
  s_train->add_option("--levels", train.cfg.levels)->capture_default_str();
  s_train->add_option("--disc-channels", train.disc_channels, "Comma-separated discriminator widths, one per stride-2 layer")
      ->delimiter(',');
  s_train->add_option("--detector-warmup", train.cfg.detector_warmup_steps,
                      "Steps of cross-entropy stroke loss before switching to L1")
      ->capture_default_str();
  s_train->add_option("--lambda-t", train.cfg.loss.lambda_t)->capture_default_str();
  s_train->add_option("--lambda-m", train.cfg.loss.lambda_m)->capture_default_str();
  s_train->add_option("--lambda-s", train.cfg.loss.lambda_s)->capture_default_str();
  s_train->add_option("--lambda-r", train.cfg.loss.lambda_r)->capture_default_str();
  s_train->add_flag("--no-adversarial", train.no_adversarial, "Drop the discriminator terms");
  s_train->add_option("--split", train.split, "train, test or all")->capture_default_str();
  s_train->add_option("--metrics", train.metrics, "JSON-lines metrics log");
  s_train->add_option("--resume", train.resume, "Continue from this checkpoint");
  s_train->add_option("--log-every", train.log_every)->capture_default_str();
  s_train->add_flag("--json", train.json);

  EvalArgs ev;
  auto* s_eval = app.add_subcommand("eval", "Score a checkpoint on a dataset");
  s_eval->add_option("--data", ev.data)->required();
  s_eval->add_option("--ckpt", ev.ckpt)->required()->envname("STROKELESS_CKPT");
  s_eval->add_option("--detections", ev.detections, "JSON detections on erased outputs")
      ->check(CLI::ExistingFile);
  s_eval->add_option("--split", ev.split, "train, test or all")->capture_default_str();
  s_eval->add_option("--iou", ev.iou, "Detection match threshold")->capture_default_str();
  s_eval->add_flag("--composite", ev.composite, "Score composited outputs");
  s_eval->add_flag("--samples", ev.samples, "Include per-sample metrics in JSON");
  s_eval->add_flag("--json", ev.json);

  InferArgs inf;
  auto* s_inf = app.add_subcommand("infer", "Erase text inside a region of one image");
  s_inf->add_option("--ckpt", inf.ckpt)->required()->envname("STROKELESS_CKPT");
  s_inf->add_option("--image", inf.image)->required()->check(CLI::ExistingFile);
  auto* o_mask = s_inf->add_option("--mask", inf.mask, "Region mask PNG")->check(CLI::ExistingFile);
  auto* o_poly =
      s_inf->add_option("--polygons", inf.polygons, "Polygon JSON")->check(CLI::ExistingFile);
  o_mask->excludes(o_poly);
  s_inf->add_option("--out", inf.out)->required();
  s_inf->add_flag("--composite", inf.composite, "Keep input pixels outside the region");
  s_inf->add_flag("--json", inf.json);

  ServeArgs srv;
  auto* s_srv = app.add_subcommand("serve", "Run the HTTP inference service");
  s_srv->add_option("--ckpt", srv.ckpt)->required()->envname("STROKELESS_CKPT");
  s_srv->add_option("--port", srv.port)->capture_default_str();
  s_srv->add_option("--host", srv.host)->capture_default_str();
  s_srv->add_option("--static", srv.static_dir, "UI build directory served at /");
  s_srv->add_option("--max-pixels", srv.max_pixels, "Largest accepted width·height");

  try {
    app.parse(argc, argv);
    if (s_inf->parsed() && inf.mask.empty() && inf.polygons.empty()) {
      throw CLI::RequiredError("--mask or --polygons");
    }
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    const CLI::App* failed = &app;
    for (auto* sc : app.get_subcommands()) failed = sc;
    err << "error: " << e.what() << "\n\n" << failed->help();
    return kExitUsage;
  }

  try {
    if (s_synth->parsed()) return cmd_synth(synth, out);
    if (s_build->parsed()) return cmd_build(build, out);
    if (s_split->parsed()) return cmd_split(split, out);
    if (s_train->parsed()) return cmd_train(train, *s_train, out);
    if (s_eval->parsed()) return cmd_eval(ev, out);
    if (s_inf->parsed()) return cmd_infer(inf, out);
    if (s_srv->parsed()) return cmd_serve(srv);
  } catch (const CheckpointFormatError& e) {
    err << "error: checkpoint format: " << e.what() << "\n";
    return kExitDomainError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomainError;
  }
  return kExitUsage;
}

}  // namespace strokeless::cli
