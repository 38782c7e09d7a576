#pragma once

#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "strokeless/checkpoint.hpp"
#include "strokeless/image.hpp"
#include "strokeless/model.hpp"

namespace strokeless {

struct ServiceConfig {
  int64_t max_pixels = int64_t{2048} * 2048;
  int max_in_flight = 1;
  std::string cors_origin = "*";
  /// Built UI assets served under /; empty disables static serving.
  std::filesystem::path static_dir;

  /// Applies STROKELESS_MAX_PIXELS when set.
  static ServiceConfig from_env();
};

struct EraseRequest {
  std::string image_png;  // raw PNG bytes
  std::vector<Polygon> polygons;
  bool composite = true;
  bool return_strokes = true;
};

struct EraseTimings {
  double preprocess = 0;
  double forward = 0;
  double encode = 0;
};

struct EraseResponse {
  std::string erased_png;
  std::optional<std::string> stroke_mask_png;
  std::optional<std::string> stroke_mask2_png;
  EraseTimings timings_ms;
};

/// Carries the HTTP status the failure maps to.
class ServiceError : public Error {
 public:
  ServiceError(int status, const std::string& what) : Error(what), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

struct HttpReply {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

std::string base64_encode(const std::string& bytes);
/// Accepts an optional data-URL prefix; throws InvalidArgument on bad input.
std::string base64_decode(const std::string& text);

EraseRequest parse_erase_request(const std::string& json_body);
std::string erase_response_json(const EraseResponse& r);

/// Admits at most `limit` holders at once, in arrival order.
class FifoGate {
 public:
  explicit FifoGate(int limit);
  void acquire();
  void release();

  class Hold {
   public:
    explicit Hold(FifoGate& g) : gate_(g) { gate_.acquire(); }
    ~Hold() { gate_.release(); }
    Hold(const Hold&) = delete;
    Hold& operator=(const Hold&) = delete;

   private:
    FifoGate& gate_;
  };

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  int limit_;
  int in_flight_ = 0;
  uint64_t next_ticket_ = 0;
  uint64_t admitted_ = 0;
};

/// Inference endpoint logic, independent of the HTTP transport. The model is
/// an immutable snapshot shared by concurrent requests.
class EraseService {
 public:
  explicit EraseService(ServiceConfig cfg = {});

  void load_checkpoint(const std::filesystem::path& dir);
  void set_model(Model<float> model, CheckpointInfo info);
  bool loaded() const;
  const ServiceConfig& config() const noexcept { return cfg_; }

  EraseResponse erase(const EraseRequest& req);
  HttpReply handle_erase(const std::string& json_body);
  HttpReply handle_health() const;

 private:
  struct Snapshot {
    Model<float> model;
    CheckpointInfo info;
  };
  std::shared_ptr<const Snapshot> snapshot() const;

  ServiceConfig cfg_;
  mutable std::mutex mu_;
  std::shared_ptr<const Snapshot> snapshot_;
  FifoGate gate_;
};

/// Blocks serving /api/erase, /api/health and optional static assets.
void serve_http(EraseService& service, const std::string& host, int port);

}  // namespace strokeless
