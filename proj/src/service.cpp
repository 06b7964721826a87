#include "pccseg/service.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <random>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "pccseg/image_io.hpp"

namespace pcc::service {

using nlohmann::json;

namespace {

json parse_json(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed ") + what + ": " + e.what());
  }
}

Point parse_point(const json& v, const char* what) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw InputError(std::string(what) + " must be [x, y] number pairs");
  const Point p{v[0].get<double>(), v[1].get<double>()};
  if (!std::isfinite(p.x) || !std::isfinite(p.y))
    throw InputError(std::string(what) + " must be finite");
  return p;
}

// Squared distance from q to segment ab.
double segment_distance_sq(Point q, Point a, Point b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len_sq = dx * dx + dy * dy;
  double t = 0.0;
  if (len_sq > 0.0) t = std::clamp(((q.x - a.x) * dx + (q.y - a.y) * dy) / len_sq, 0.0, 1.0);
  const double px = a.x + t * dx - q.x;
  const double py = a.y + t * dy - q.y;
  return px * px + py * py;
}

std::string new_session_id() {
  static std::mutex mu;
  static std::mt19937_64 gen{std::random_device{}()};
  std::lock_guard lock(mu);
  char buf[33];
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(gen()),
                static_cast<unsigned long long>(gen()));
  return buf;
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, json{{"error", message}});
}

}  // namespace

Annotations parse_annotations(const std::string& json_text) {
  const json doc = parse_json(json_text, "annotations");
  if (!doc.is_object()) throw InputError("annotations must be a JSON object");
  Annotations out;
  if (doc.contains("strokes")) {
    const json& strokes = doc["strokes"];
    if (!strokes.is_array()) throw InputError("strokes must be a list");
    for (const json& s : strokes) {
      if (!s.is_object()) throw InputError("each stroke must be an object");
      Stroke stroke;
      if (!s.contains("class") || !s["class"].is_number_integer())
        throw InputError("stroke class must be an integer");
      stroke.cls = s["class"].get<Label>();
      if (stroke.cls < 0 || stroke.cls >= static_cast<Label>(io::kScribblePalette.size()))
        throw InputError("stroke class out of range [0, 7]");
      if (!s.contains("points") || !s["points"].is_array() || s["points"].empty())
        throw InputError("stroke points must be a non-empty list");
      for (const json& p : s["points"]) stroke.points.push_back(parse_point(p, "stroke points"));
      if (s.contains("brush_radius")) {
        if (!s["brush_radius"].is_number()) throw InputError("brush_radius must be a number");
        stroke.brush_radius = s["brush_radius"].get<double>();
        if (!(stroke.brush_radius >= 0.0) || !std::isfinite(stroke.brush_radius))
          throw InputError("brush_radius must be >= 0");
      }
      out.strokes.push_back(std::move(stroke));
    }
  }
  if (doc.contains("polygon") && !doc["polygon"].is_null()) {
    const json& poly = doc["polygon"];
    if (!poly.is_array()) throw InputError("polygon must be a list of [x, y] pairs");
    CutPolygon polygon;
    for (const json& p : poly) polygon.vertices.push_back(parse_point(p, "polygon vertices"));
    polygon.validate();
    out.polygon = std::move(polygon);
  }
  return out;
}

LabelMap rasterize_strokes(const std::vector<Stroke>& strokes, int width, int height) {
  LabelMap out(width, height, kUnlabeled);
  for (const Stroke& s : strokes) {
    const double radius = std::max(s.brush_radius, std::sqrt(0.5));
    const double radius_sq = radius * radius;
    const std::size_t segments = s.points.size() == 1 ? 1 : s.points.size() - 1;
    for (std::size_t k = 0; k < segments; ++k) {
      const Point a = s.points[k];
      const Point b = s.points.size() == 1 ? a : s.points[k + 1];
      const int c0 = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - radius)));
      const int c1 =
          std::min(width - 1, static_cast<int>(std::ceil(std::max(a.x, b.x) + radius)));
      const int r0 = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - radius)));
      const int r1 =
          std::min(height - 1, static_cast<int>(std::ceil(std::max(a.y, b.y) + radius)));
      for (int r = r0; r <= r1; ++r) {
        for (int c = c0; c <= c1; ++c) {
          if (segment_distance_sq({c + 0.5, r + 0.5}, a, b) <= radius_sq) out.at(r, c) = s.cls;
        }
      }
    }
  }
  return out;
}

PipelineConfig apply_overrides(PipelineConfig cfg, const std::string& json_text) {
  if (json_text.find_first_not_of(" \t\r\n") == std::string::npos) return cfg;
  const json doc = parse_json(json_text, "config");
  if (!doc.is_object()) throw InputError("config overrides must be a JSON object");
  try {
    if (doc.contains("mode")) cfg.mode = feature_mode_from_string(doc["mode"].get<std::string>());
    if (doc.contains("max_pixels")) cfg.max_pixels = doc["max_pixels"].get<std::size_t>();
    if (doc.contains("seed")) cfg.engine.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("delta_v")) cfg.engine.delta_v = doc["delta_v"].get<double>();
    if (doc.contains("p_grd")) cfg.engine.p_grd = doc["p_grd"].get<double>();
    if (doc.contains("max_ite")) cfg.engine.max_ite = doc["max_ite"].get<std::uint64_t>();
    if (doc.contains("max_stop")) cfg.engine.max_stop = doc["max_stop"].get<std::uint64_t>();
    if (doc.contains("control_stop"))
      cfg.engine.control_stop = doc["control_stop"].get<double>();
  } catch (const json::exception& e) {
    throw InputError(std::string("invalid config override: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

const char* to_string(SessionStatus s) {
  switch (s) {
    case SessionStatus::Idle: return "idle";
    case SessionStatus::Running: return "running";
    case SessionStatus::Done: return "done";
    case SessionStatus::Failed: return "failed";
  }
  return "unknown";
}

ServiceConfig config_from_env() {
  ServiceConfig cfg;
  if (const char* ttl = std::getenv("PCC_SESSION_TTL")) {
    cfg.session_ttl = std::chrono::seconds(std::strtoll(ttl, nullptr, 10));
  }
  return cfg;
}

std::pair<std::string, int> bind_address_from_env() {
  std::string addr = "127.0.0.1:8080";
  if (const char* env = std::getenv("PCC_BIND")) addr = env;
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos) return {addr, 8080};
  return {addr.substr(0, colon), std::atoi(addr.c_str() + colon + 1)};
}

// ---------------------------------------------------------------------------

struct Service::Session {
  std::mutex mu;
  std::string id;
  ImageBuffer image;
  std::optional<Annotations> annotations;
  LabelMap scribbles;
  std::optional<SegmentationResult> result;
  SessionStatus status = SessionStatus::Idle;
  std::string error;
  std::uint64_t progress_iteration = 0;
  double progress_domination = 0.0;
  std::uint64_t max_ite = 0;
  Clock::time_point last_access = Clock::now();
};

Service::Service(ServiceConfig cfg) : cfg_(std::move(cfg)) {}

Service::~Service() { wait_idle(); }

void Service::wait_idle() {
  std::unique_lock lock(mu_);
  runs_done_.wait(lock, [&] { return running_ == 0; });
}

std::size_t Service::session_count() {
  expire_idle();
  std::lock_guard lock(mu_);
  return sessions_.size();
}

void Service::expire_idle() {
  const auto now = Clock::now();
  std::lock_guard lock(mu_);
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    Session& s = *it->second;
    std::lock_guard session_lock(s.mu);
    const bool expired =
        s.status != SessionStatus::Running && now - s.last_access > cfg_.session_ttl;
    it = expired ? sessions_.erase(it) : std::next(it);
  }
}

std::shared_ptr<Service::Session> Service::find(const std::string& id) {
  expire_idle();
  std::lock_guard lock(mu_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) return nullptr;
  std::lock_guard session_lock(it->second->mu);
  it->second->last_access = Clock::now();
  return it->second;
}

void Service::start_run(std::shared_ptr<Session> session, PipelineConfig cfg) {
  {
    std::lock_guard lock(mu_);
    ++running_;
  }
  std::thread([this, session = std::move(session), cfg]() mutable {
    ImageBuffer image;
    LabelMap scribbles;
    std::optional<CutPolygon> polygon;
    {
      std::lock_guard lock(session->mu);
      image = session->image;
      scribbles = session->scribbles;
      polygon = session->annotations->polygon;
    }
    auto progress = [&](const Checkpoint& cp) {
      std::lock_guard lock(session->mu);
      session->progress_iteration = cp.iteration;
      session->progress_domination = cp.mean_max_domination;
    };
    try {
      SegmentationResult res = segment(image, scribbles, polygon, cfg, progress);
      std::lock_guard lock(session->mu);
      session->progress_iteration = res.stats.iterations_executed;
      session->progress_domination = res.stats.mean_max_domination;
      session->result = std::move(res);
      session->status = SessionStatus::Done;
      session->last_access = Clock::now();
    } catch (const std::exception& e) {
      std::lock_guard lock(session->mu);
      session->error = e.what();
      session->status = SessionStatus::Failed;
      session->last_access = Clock::now();
    }
    session.reset();
    {
      std::lock_guard lock(mu_);
      --running_;
    }
    runs_done_.notify_all();
  }).detach();
}

void Service::mount(httplib::Server& server) {
  server.Get("/api/health", [](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, json{{"status", "ok"}});
  });

  server.Post("/api/sessions", [this](const httplib::Request& req, httplib::Response& res) {
    std::string bytes;
    if (req.has_file("image")) {
      bytes = req.get_file_value("image").content;
    } else if (!req.body.empty()) {
      bytes = req.body;
    } else {
      return send_error(res, 422, "expected a multipart 'image' file");
    }
    ImageBuffer image;
    try {
      image = io::image_from_bytes(
          {reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()});
    } catch (const Error& e) {
      return send_error(res, 422, e.what());
    }
    expire_idle();
    auto session = std::make_shared<Session>();
    session->id = new_session_id();
    session->image = std::move(image);
    const json body{{"id", session->id},
                    {"width", session->image.width},
                    {"height", session->image.height}};
    {
      std::lock_guard lock(mu_);
      sessions_[session->id] = session;
    }
    send_json(res, 201, body);
  });

  server.Put(R"(/api/sessions/([^/]+)/annotations)",
             [this](const httplib::Request& req, httplib::Response& res) {
               auto session = find(req.matches[1]);
               if (!session) return send_error(res, 404, "unknown session");
               try {
                 Annotations ann = parse_annotations(req.body);
                 std::lock_guard lock(session->mu);
                 session->scribbles =
                     rasterize_strokes(ann.strokes, session->image.width, session->image.height);
                 session->annotations = std::move(ann);
               } catch (const InputError& e) {
                 return send_error(res, 422, e.what());
               }
               send_json(res, 200, json{{"status", "ok"}});
             });

  server.Post(R"(/api/sessions/([^/]+)/segment)",
              [this](const httplib::Request& req, httplib::Response& res) {
                auto session = find(req.matches[1]);
                if (!session) return send_error(res, 404, "unknown session");
                PipelineConfig cfg;
                {
                  std::lock_guard lock(session->mu);
                  if (session->status == SessionStatus::Running)
                    return send_error(res, 409, "a segmentation run is already in progress");
                  try {
                    cfg = apply_overrides(cfg_.defaults, req.body);
                    if (!session->annotations) throw InputError("no annotations submitted");
                    check_segment_inputs(session->image, session->scribbles,
                                         session->annotations->polygon, cfg);
                  } catch (const InputError& e) {
                    return send_error(res, 422, e.what());
                  }
                  session->status = SessionStatus::Running;
                  session->result.reset();
                  session->error.clear();
                  session->progress_iteration = 0;
                  session->progress_domination = 0.0;
                  session->max_ite = cfg.engine.max_ite;
                }
                start_run(session, cfg);
                send_json(res, 202, json{{"status", "running"}});
              });

  server.Get(R"(/api/sessions/([^/]+)/status)",
             [this](const httplib::Request& req, httplib::Response& res) {
               auto session = find(req.matches[1]);
               if (!session) return send_error(res, 404, "unknown session");
               std::lock_guard lock(session->mu);
               json body{{"status", to_string(session->status)},
                         {"progress",
                          {{"iteration", session->progress_iteration},
                           {"mean_max_domination", session->progress_domination},
                           {"max_ite", session->max_ite}}}};
               if (session->status == SessionStatus::Failed) body["error"] = session->error;
               if (session->result) {
                 body["result"] = {{"nodes", session->result->network_nodes},
                                   {"edges", session->result->network_edges},
                                   {"iterations", session->result->stats.iterations_executed},
                                   {"stop_reason", to_string(session->result->stats.stop_reason)},
                                   {"seconds", session->result->stats.wall_seconds}};
               }
               send_json(res, 200, body);
             });

  server.Get(R"(/api/sessions/([^/]+)/mask)",
             [this](const httplib::Request& req, httplib::Response& res) {
               auto session = find(req.matches[1]);
               if (!session) return send_error(res, 404, "unknown session");
               std::lock_guard lock(session->mu);
               if (session->status != SessionStatus::Done || !session->result)
                 return send_error(res, 404, "no result yet");
               const auto png =
                   io::encode_mask(session->result->labels, session->result->num_classes);
               res.set_content(std::string(png.begin(), png.end()), "image/png");
             });

  server.Get(R"(/api/sessions/([^/]+)/overlay)",
             [this](const httplib::Request& req, httplib::Response& res) {
               auto session = find(req.matches[1]);
               if (!session) return send_error(res, 404, "unknown session");
               std::lock_guard lock(session->mu);
               if (session->status != SessionStatus::Done || !session->result)
                 return send_error(res, 404, "no result yet");
               const auto png = io::encode_overlay(session->image, session->result->labels);
               res.set_content(std::string(png.begin(), png.end()), "image/png");
             });
}

}  // namespace pcc::service
