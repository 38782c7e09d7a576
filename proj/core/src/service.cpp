#include "strokeless/service.hpp"

#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "strokeless/png_io.hpp"

namespace strokeless {

using json = nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::span<const uint8_t> as_bytes(const std::string& s) {
  return {reinterpret_cast<const uint8_t*>(s.data()), s.size()};
}

std::string to_string(const std::vector<uint8_t>& v) { return {v.begin(), v.end()}; }

std::string error_json(const std::string& message) { return json{{"error", message}}.dump(); }

}  // namespace

ServiceConfig ServiceConfig::from_env() {
  ServiceConfig cfg;
  if (const char* v = std::getenv("STROKELESS_MAX_PIXELS"); v && *v) {
    char* end = nullptr;
    const long long n = std::strtoll(v, &end, 10);
    if (*end != '\0' || n <= 0) {
      throw InvalidArgument(std::string("STROKELESS_MAX_PIXELS must be a positive integer, got ") + v);
    }
    cfg.max_pixels = n;
  }
  return cfg;
}

std::string base64_encode(const std::string& bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<size_t>(n));
  return out;
}

std::string base64_decode(const std::string& text) {
  std::string_view body = text;
  if (body.starts_with("data:")) {
    const auto comma = body.find(',');
    if (comma == std::string_view::npos) throw InvalidArgument("malformed data URL");
    body.remove_prefix(comma + 1);
  }
  std::string clean;
  clean.reserve(body.size());
  for (char c : body) {
    if (c != '\n' && c != '\r' && c != ' ' && c != '\t') clean.push_back(c);
  }
  if (clean.empty() || clean.size() % 4 != 0) throw InvalidArgument("invalid base64 length");
  std::string out(clean.size() / 4 * 3, '\0');
  const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(clean.data()),
                                static_cast<int>(clean.size()));
  if (n < 0) throw InvalidArgument("invalid base64 payload");
  size_t padding = 0;
  if (clean.back() == '=') ++padding;
  if (clean.size() > 1 && clean[clean.size() - 2] == '=') ++padding;
  out.resize(static_cast<size_t>(n) - padding);
  return out;
}

EraseRequest parse_erase_request(const std::string& json_body) {
  json j;
  try {
    j = json::parse(json_body);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("request is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw InvalidArgument("request must be a JSON object");
  EraseRequest req;
  if (!j.contains("image") || !j["image"].is_string()) {
    throw InvalidArgument("'image' must be a base64 PNG string");
  }
  req.image_png = base64_decode(j["image"].get<std::string>());
  if (!j.contains("polygons") || !j["polygons"].is_array()) {
    throw InvalidArgument("'polygons' must be a list of polygons");
  }
  for (const auto& poly : j["polygons"]) {
    if (!poly.is_array()) throw InvalidArgument("each polygon must be a list of [x, y] points");
    Polygon p;
    for (const auto& pt : poly) {
      if (pt.is_array() && pt.size() == 2 && pt[0].is_number() && pt[1].is_number()) {
        p.vertices.push_back({pt[0].get<double>(), pt[1].get<double>()});
      } else if (pt.is_object() && pt.contains("x") && pt.contains("y") && pt["x"].is_number() &&
                 pt["y"].is_number()) {
        p.vertices.push_back({pt["x"].get<double>(), pt["y"].get<double>()});
      } else {
        throw InvalidArgument("polygon vertex must be [x, y] or {x, y}");
      }
    }
    req.polygons.push_back(std::move(p));
  }
  if (j.contains("composite")) {
    if (!j["composite"].is_boolean()) throw InvalidArgument("'composite' must be a boolean");
    req.composite = j["composite"].get<bool>();
  }
  if (j.contains("return_strokes")) {
    if (!j["return_strokes"].is_boolean()) {
      throw InvalidArgument("'return_strokes' must be a boolean");
    }
    req.return_strokes = j["return_strokes"].get<bool>();
  }
  return req;
}

std::string erase_response_json(const EraseResponse& r) {
  json j{{"erased", base64_encode(r.erased_png)},
         {"timings_ms",
          {{"preprocess", r.timings_ms.preprocess},
           {"forward", r.timings_ms.forward},
           {"encode", r.timings_ms.encode}}}};
  if (r.stroke_mask_png) j["stroke_mask"] = base64_encode(*r.stroke_mask_png);
  if (r.stroke_mask2_png) j["stroke_mask2"] = base64_encode(*r.stroke_mask2_png);
  return j.dump();
}

FifoGate::FifoGate(int limit) : limit_(limit) {
  if (limit < 1) throw InvalidArgument("in-flight limit must be >= 1");
}

void FifoGate::acquire() {
  std::unique_lock lock(mu_);
  const uint64_t ticket = next_ticket_++;
  cv_.wait(lock, [&] { return ticket == admitted_ && in_flight_ < limit_; });
  ++admitted_;
  ++in_flight_;
  cv_.notify_all();
}

void FifoGate::release() {
  {
    std::lock_guard lock(mu_);
    --in_flight_;
  }
  cv_.notify_all();
}

EraseService::EraseService(ServiceConfig cfg) : cfg_(std::move(cfg)), gate_(cfg_.max_in_flight) {}

void EraseService::load_checkpoint(const std::filesystem::path& dir) {
  CheckpointInfo info = read_checkpoint_info(dir);
  set_model(load_model(dir), std::move(info));
}

void EraseService::set_model(Model<float> model, CheckpointInfo info) {
  auto snap = std::make_shared<const Snapshot>(Snapshot{std::move(model), std::move(info)});
  std::lock_guard lock(mu_);
  snapshot_ = std::move(snap);
}

bool EraseService::loaded() const { return snapshot() != nullptr; }

std::shared_ptr<const EraseService::Snapshot> EraseService::snapshot() const {
  std::lock_guard lock(mu_);
  return snapshot_;
}

EraseResponse EraseService::erase(const EraseRequest& req) {
  const auto snap = snapshot();
  if (!snap) throw ServiceError(503, "model not loaded");
  const auto t0 = Clock::now();

  std::pair<int, int> dims;
  try {
    dims = png_dimensions(as_bytes(req.image_png));
  } catch (const Error& e) {
    throw ServiceError(400, e.what());
  }
  if (int64_t{dims.first} * dims.second > cfg_.max_pixels) {
    throw ServiceError(413, "image " + std::to_string(dims.first) + "x" +
                                std::to_string(dims.second) + " exceeds the limit of " +
                                std::to_string(cfg_.max_pixels) + " pixels");
  }
  ImageTensor image;
  try {
    image = decode_image_png(as_bytes(req.image_png));
  } catch (const Error& e) {
    throw ServiceError(400, e.what());
  }
  if (req.polygons.empty()) throw ServiceError(400, "at least one polygon is required");
  try {
    for (const auto& p : req.polygons) validate_polygon(p, image.height(), image.width());
  } catch (const InvalidArgument& e) {
    throw ServiceError(400, e.what());
  }
  const RegionMask mask = rasterize_polygons(req.polygons, image.height(), image.width());

  EraseResponse resp;
  resp.timings_ms.preprocess = ms_since(t0);

  const auto t1 = Clock::now();
  const int multiple = std::max(64, snap->model.config.size_multiple());
  CascadeOutput out;
  {
    FifoGate::Hold hold(gate_);
    out = run_cascade(snap->model, image, mask, multiple);
  }
  resp.timings_ms.forward = ms_since(t1);

  const auto t2 = Clock::now();
  const ImageTensor erased = req.composite ? composite(image, mask, out.final_image())
                                           : out.final_image();
  resp.erased_png = to_string(encode_image_png(erased));
  if (req.return_strokes && !out.strokes.empty()) {
    resp.stroke_mask_png = to_string(encode_mask_png(out.strokes[0]));
    if (out.strokes.size() > 1) resp.stroke_mask2_png = to_string(encode_mask_png(out.strokes[1]));
  }
  resp.timings_ms.encode = ms_since(t2);
  return resp;
}

HttpReply EraseService::handle_erase(const std::string& json_body) {
  try {
    if (!loaded()) throw ServiceError(503, "model not loaded");
    EraseRequest req;
    try {
      req = parse_erase_request(json_body);
    } catch (const InvalidArgument& e) {
      throw ServiceError(400, e.what());
    }
    return {200, erase_response_json(erase(req))};
  } catch (const ServiceError& e) {
    return {e.status(), error_json(e.what())};
  } catch (const std::exception& e) {
    spdlog::error("erase failed: {}", e.what());
    return {500, error_json(e.what())};
  }
}

HttpReply EraseService::handle_health() const {
  const auto snap = snapshot();
  if (!snap) return {503, json{{"status", "loading"}}.dump()};
  return {200, json{{"status", "ok"},
                    {"ckpt_version", snap->info.format_version},
                    {"step", snap->info.step},
                    {"model_config_hash", snap->info.model_config_hash}}
                   .dump()};
}

void serve_http(EraseService& service, const std::string& host, int port) {
  httplib::Server server;
  const std::string origin = service.config().cors_origin;
  auto cors = [origin](httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", origin);
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
  };
  server.Post("/api/erase", [&](const httplib::Request& req, httplib::Response& res) {
    const HttpReply r = service.handle_erase(req.body);
    cors(res);
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  });
  server.Get("/api/health", [&](const httplib::Request&, httplib::Response& res) {
    const HttpReply r = service.handle_health();
    cors(res);
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  });
  server.Options(R"(/api/.*)", [&](const httplib::Request&, httplib::Response& res) {
    cors(res);
    res.status = 204;
  });
  if (!service.config().static_dir.empty() &&
      !server.set_mount_point("/", service.config().static_dir.string())) {
    throw InvalidArgument("static directory not found: " + service.config().static_dir.string());
  }
  spdlog::info("listening on {}:{}", host, port);
  if (!server.listen(host, port)) {
    throw Error("cannot listen on " + host + ":" + std::to_string(port));
  }
}

}  // namespace strokeless
