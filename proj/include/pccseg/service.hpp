#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "pccseg/pipeline.hpp"
#include "pccseg/types.hpp"

namespace httplib {
class Server;
}

namespace pcc::service {

struct Stroke {
  Label cls = 0;
  std::vector<Point> points;
  double brush_radius = 0.0;
};

struct Annotations {
  std::vector<Stroke> strokes;
  std::optional<CutPolygon> polygon;
};

/// Parses the annotation JSON body. Throws InputError on malformed input.
Annotations parse_annotations(const std::string& json_text);

/// Round-brush rasterization in stroke order; later strokes overwrite earlier
/// ones. A pixel is painted when its center lies within max(radius, sqrt(1/2))
/// of a stroke segment, so every stroke point marks the pixel containing it.
LabelMap rasterize_strokes(const std::vector<Stroke>& strokes, int width, int height);

/// Config overrides accepted by POST /segment (all fields optional):
/// mode, max_pixels, seed, delta_v, p_grd, max_ite, max_stop, control_stop.
PipelineConfig apply_overrides(PipelineConfig base, const std::string& json_text);

enum class SessionStatus { Idle, Running, Done, Failed };
const char* to_string(SessionStatus s);

struct ServiceConfig {
  std::chrono::milliseconds session_ttl{std::chrono::minutes(30)};
  PipelineConfig defaults;
};

/// PCC_SESSION_TTL (seconds) overrides the idle timeout.
ServiceConfig config_from_env();

/// host:port from PCC_BIND, default 127.0.0.1:8080.
std::pair<std::string, int> bind_address_from_env();

/// In-memory interactive sessions behind the JSON/HTTP API.
class Service {
 public:
  explicit Service(ServiceConfig cfg = {});
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Registers every /api route on `server`.
  void mount(httplib::Server& server);

  std::size_t session_count();

  /// Blocks until no segmentation runs are in flight.
  void wait_idle();

 private:
  struct Session;
  using Clock = std::chrono::steady_clock;

  std::shared_ptr<Session> find(const std::string& id);
  void expire_idle();
  void start_run(std::shared_ptr<Session> session, PipelineConfig cfg);

  ServiceConfig cfg_;
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::condition_variable runs_done_;
  int running_ = 0;
};

}  // namespace pcc::service
