#include "strokeless/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

namespace strokeless {

namespace fs = std::filesystem;
using json = nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

json unet_config_json(const UNetConfig& c) {
  return {{"in_channels", c.in_channels},
          {"out_channels", c.out_channels},
          {"base_channels", c.base_channels},
          {"levels", c.levels},
          {"first_kernel", c.first_kernel},
          {"output_activation", c.output_activation == Activation::kSigmoid ? "sigmoid" : "tanh"}};
}

json config_json(const ModelConfig& cfg) {
  return {{"ablation", ablation_name(cfg.ablation)},
          {"cascade_units", cfg.cascade_units},
          {"base_channels", cfg.base_channels},
          {"levels", cfg.levels},
          {"disc_channels", cfg.disc_channels},
          {"disc_kernel", cfg.disc_kernel},
          {"mask_branch_normalized", cfg.mask_branch_normalized}};
}

ModelConfig config_from(const json& j) {
  ModelConfig cfg;
  cfg.ablation = parse_ablation(j.at("ablation").get<std::string>());
  cfg.cascade_units = j.at("cascade_units").get<int>();
  cfg.base_channels = j.at("base_channels").get<int>();
  cfg.levels = j.at("levels").get<int>();
  cfg.disc_channels = j.at("disc_channels").get<std::vector<int>>();
  cfg.disc_kernel = j.at("disc_kernel").get<int>();
  cfg.mask_branch_normalized = j.at("mask_branch_normalized").get<bool>();
  cfg.validate();
  return cfg;
}

std::string file_for(const std::string& name) {
  std::string f = name;
  for (char& c : f) {
    if (c == '/') c = '-';
  }
  return f + ".f32";
}

// Order is the one written to the manifest.
struct ArraySlot {
  std::string name;
  Array<float>* array;
};

std::vector<ArraySlot> model_slots(Model<float>& model) {
  std::vector<ArraySlot> slots;
  for (auto& p : model.generator.parameters()) {
    slots.push_back({"g/" + p.name, &p.var.mutable_value()});
  }
  auto d = model.discriminator.parameters("");
  for (auto& p : d) slots.push_back({"d/" + p.name, &p.var.mutable_value()});
  for (size_t i = 0; i < model.discriminator.layer_count(); ++i) {
    auto& l = model.discriminator.layer(i);
    slots.push_back({"d/l" + std::to_string(i) + ".u", &l.u});
    slots.push_back({"d/l" + std::to_string(i) + ".v", &l.v});
  }
  return slots;
}

std::vector<ArraySlot> state_slots(TrainState& state) {
  std::vector<ArraySlot> slots = model_slots(state.model);
  const auto g = state.model.generator.parameters();
  const auto d = state.model.discriminator.parameters("");
  for (size_t i = 0; i < g.size(); ++i) {
    slots.push_back({"adam_g/m/" + g[i].name, &state.g_opt.m[i]});
    slots.push_back({"adam_g/v/" + g[i].name, &state.g_opt.v[i]});
  }
  for (size_t i = 0; i < d.size(); ++i) {
    slots.push_back({"adam_d/m/" + d[i].name, &state.d_opt.m[i]});
    slots.push_back({"adam_d/v/" + d[i].name, &state.d_opt.v[i]});
  }
  return slots;
}

void write_array(const fs::path& path, const Array<float>& a) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointFormatError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(a.data()),
            static_cast<std::streamsize>(a.size() * sizeof(float)));
  if (!out) throw CheckpointFormatError("failed writing " + path.string());
}

json read_manifest(const fs::path& dir) {
  const fs::path path = dir / "manifest.json";
  std::ifstream in(path);
  if (!in) throw CheckpointFormatError("checkpoint manifest not found: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw CheckpointFormatError(path.string() + ": " + e.what());
  }
  if (!j.contains("format_version") || !j["format_version"].is_number_integer()) {
    throw CheckpointFormatError(path.string() + ": missing format_version");
  }
  const int version = j["format_version"].get<int>();
  if (version != kCheckpointFormatVersion) {
    throw CheckpointFormatError(path.string() + ": unsupported format_version " +
                                std::to_string(version) + " (expected " +
                                std::to_string(kCheckpointFormatVersion) + ")");
  }
  return j;
}

void fill_slots(const fs::path& dir, const json& manifest, const std::vector<ArraySlot>& slots,
                bool allow_extra) {
  std::map<std::string, const json*> entries;
  try {
    for (const auto& e : manifest.at("arrays")) entries[e.at("name").get<std::string>()] = &e;
  } catch (const json::exception& e) {
    throw CheckpointFormatError("malformed array table: " + std::string(e.what()));
  }
  for (const auto& slot : slots) {
    const auto it = entries.find(slot.name);
    if (it == entries.end()) throw CheckpointFormatError("missing array '" + slot.name + "'");
    const json& e = *it->second;
    Shape shape;
    std::string file, dtype;
    try {
      shape = e.at("shape").get<Shape>();
      file = e.at("file").get<std::string>();
      dtype = e.at("dtype").get<std::string>();
    } catch (const json::exception& ex) {
      throw CheckpointFormatError("array '" + slot.name + "': " + ex.what());
    }
    if (dtype != "float32") {
      throw CheckpointFormatError("array '" + slot.name + "': unsupported dtype " + dtype);
    }
    if (shape != slot.array->shape()) {
      throw CheckpointFormatError("array '" + slot.name + "': manifest shape " +
                                  shape_string(shape) + " but the model expects " +
                                  shape_string(slot.array->shape()));
    }
    if (file.find('/') != std::string::npos || file.find("..") != std::string::npos) {
      throw CheckpointFormatError("array '" + slot.name + "': invalid file name " + file);
    }
    const fs::path path = dir / file;
    std::error_code ec;
    const auto bytes = fs::file_size(path, ec);
    if (ec) throw CheckpointFormatError("array '" + slot.name + "': cannot read " + path.string());
    const auto expected = static_cast<uintmax_t>(slot.array->size()) * sizeof(float);
    if (bytes != expected) {
      throw CheckpointFormatError("array '" + slot.name + "': file holds " + std::to_string(bytes) +
                                  " bytes, shape needs " + std::to_string(expected));
    }
    std::ifstream in(path, std::ios::binary);
    in.read(reinterpret_cast<char*>(slot.array->data()), static_cast<std::streamsize>(expected));
    if (!in) throw CheckpointFormatError("array '" + slot.name + "': short read");
    entries.erase(it);
  }
  if (!allow_extra) {
    for (const auto& [name, e] : entries) {
      throw CheckpointFormatError("unexpected array '" + name + "'");
    }
  }
}

uint64_t fnv1a(const std::string& s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ModelConfig manifest_config(const json& manifest) {
  try {
    return config_from(manifest.at("model_config"));
  } catch (const json::exception& e) {
    throw CheckpointFormatError(std::string("model_config: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw CheckpointFormatError(std::string("model_config: ") + e.what());
  }
}

}  // namespace

std::string model_config_to_json(const ModelConfig& cfg) { return config_json(cfg).dump(); }

ModelConfig model_config_from_json(const std::string& text) {
  return config_from(json::parse(text));
}

std::string model_config_hash(const ModelConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(model_config_to_json(cfg))));
  return buf;
}

void save_checkpoint(const fs::path& dir, const TrainState& state) {
  fs::create_directories(dir);
  TrainState& s = const_cast<TrainState&>(state);  // slots only read here
  json arrays = json::array();
  for (const auto& slot : state_slots(s)) {
    const std::string file = file_for(slot.name);
    write_array(dir / file, *slot.array);
    arrays.push_back(
        {{"name", slot.name}, {"file", file}, {"shape", slot.array->shape()}, {"dtype", "float32"}});
  }
  json unets = json::array();
  for (size_t u = 0; u < state.model.generator.units(); ++u) {
    const auto& unit = state.model.generator.unit(u);
    json entry{{"remover", unet_config_json(unit.remover.config())}};
    if (unit.detector) entry["detector"] = unet_config_json(unit.detector->config());
    unets.push_back(entry);
  }
  std::ostringstream rng;
  rng << state.rng;
  json manifest{{"format_version", kCheckpointFormatVersion},
                {"step", state.step},
                {"epoch", state.epoch},
                {"model_config", config_json(state.model.config)},
                {"unet_configs", unets},
                {"adam", {{"g_t", state.g_opt.t}, {"d_t", state.d_opt.t}}},
                {"rng_state", rng.str()},
                {"arrays", arrays}};
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) throw CheckpointFormatError("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

TrainState load_checkpoint(const fs::path& dir) {
  const json manifest = read_manifest(dir);
  TrainState state;
  state.model = Model<float>::zeros(manifest_config(manifest));
  state.g_opt = AdamState::zeros_like(state.model.generator.parameters());
  state.d_opt = AdamState::zeros_like(state.model.discriminator.parameters(""));
  fill_slots(dir, manifest, state_slots(state), false);
  try {
    state.step = manifest.at("step").get<int64_t>();
    state.epoch = manifest.value("epoch", int64_t{0});
    state.g_opt.t = manifest.at("adam").at("g_t").get<int64_t>();
    state.d_opt.t = manifest.at("adam").at("d_t").get<int64_t>();
    std::istringstream rng(manifest.at("rng_state").get<std::string>());
    rng >> state.rng;
    if (!rng) throw CheckpointFormatError("rng_state is malformed");
  } catch (const json::exception& e) {
    throw CheckpointFormatError(std::string("manifest: ") + e.what());
  }
  return state;
}

Model<float> load_model(const fs::path& dir) {
  const json manifest = read_manifest(dir);
  Model<float> model = Model<float>::zeros(manifest_config(manifest));
  fill_slots(dir, manifest, model_slots(model), true);
  return model;
}

CheckpointInfo read_checkpoint_info(const fs::path& dir) {
  const json manifest = read_manifest(dir);
  CheckpointInfo info;
  info.format_version = manifest["format_version"].get<int>();
  info.step = manifest.value("step", int64_t{0});
  info.model = manifest_config(manifest);
  info.model_config_hash = model_config_hash(info.model);
  return info;
}

}  // namespace strokeless
