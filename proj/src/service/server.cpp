#include "layerbokeh/service/server.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <semaphore>
#include <thread>

#include "layerbokeh/core/error.hpp"
#include "layerbokeh/core/image_io.hpp"

namespace layerbokeh::service {

using nlohmann::json;

SessionStore::SessionStore(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw InvalidArgument("session capacity must be >= 1");
  std::random_device rd;
  id_prefix_ = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

std::string SessionStore::new_id() {
  std::lock_guard lock(id_mutex_);
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%016llx%08llx",
                static_cast<unsigned long long>(id_prefix_),
                static_cast<unsigned long long>(++id_counter_));
  return buf;
}

std::optional<std::string> SessionStore::insert(
    std::shared_ptr<const Session> session) {
  std::unique_lock lock(mutex_);
  std::optional<std::string> evicted;
  if (sessions_.size() >= capacity_) {
    const std::string victim = order_.back();
    order_.pop_back();
    sessions_.erase(victim);
    evicted_.insert(victim);
    evicted = victim;
  }
  const std::string id = session->id;
  order_.push_front(id);
  sessions_[id] = Entry{std::move(session), order_.begin()};
  return evicted;
}

SessionStore::Lookup SessionStore::find(const std::string& id) const {
  std::shared_lock lock(mutex_);
  const auto it = sessions_.find(id);
  if (it != sessions_.end()) return {LookupStatus::kFound, it->second.session};
  return {evicted_.count(id) ? LookupStatus::kEvicted : LookupStatus::kUnknown, nullptr};
}

SessionStore::Lookup SessionStore::touch(const std::string& id) {
  std::unique_lock lock(mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) {
    return {evicted_.count(id) ? LookupStatus::kEvicted : LookupStatus::kUnknown, nullptr};
  }
  order_.splice(order_.begin(), order_, it->second.position);
  return {LookupStatus::kFound, it->second.session};
}

std::size_t SessionStore::size() const {
  std::shared_lock lock(mutex_);
  return sessions_.size();
}

/// Bounds the number of concurrent heavy computations.
class RenderService::Pool {
 public:
  explicit Pool(int workers) : slots_(workers) {}
  template <typename Fn>
  auto run(Fn&& fn) {
    slots_.acquire();
    struct Release {
      std::counting_semaphore<>& s;
      ~Release() { s.release(); }
    } release{slots_};
    return fn();
  }

 private:
  std::counting_semaphore<> slots_;
};

namespace {

/// Client-side problem with the request; message goes back verbatim.
struct RequestError {
  int status;
  std::string message;
};

void send_error(httplib::Response& res, int status, const std::string& message) {
  res.status = status;
  res.set_content(json{{"error", message}}.dump(), "application/json");
}

std::string field_text(const httplib::Request& req, const char* name) {
  return req.get_file_value(name).content;
}

double parse_number(const std::string& text, const char* what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size() || !std::isfinite(v)) throw std::invalid_argument(what);
    return v;
  } catch (const std::exception&) {
    throw RequestError{400, std::string(what) + ": expected a number"};
  }
}

double json_number(const json& body, const char* key) {
  if (!body[key].is_number()) {
    throw RequestError{400, std::string(key) + ": expected a number"};
  }
  return body[key].get<double>();
}

std::shared_ptr<const Session> require_session(SessionStore::Lookup lookup,
                                               const std::string& id) {
  switch (lookup.status) {
    case LookupStatus::kFound:
      return lookup.session;
    case LookupStatus::kEvicted:
      throw RequestError{410, "session " + id + " was evicted"};
    case LookupStatus::kUnknown:
      break;
  }
  throw RequestError{404, "unknown session " + id};
}

template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const RequestError& e) {
    send_error(res, e.status, e.message);
  } catch (const DecodeError& e) {
    send_error(res, 400, e.what());
  } catch (const InvalidArgument& e) {
    send_error(res, 400, e.what());
  } catch (const ParseError& e) {
    send_error(res, 400, e.what());
  } catch (const json::exception& e) {
    send_error(res, 400, std::string("malformed JSON: ") + e.what());
  } catch (const std::bad_alloc&) {
    send_error(res, 413, "request too large to process");
  } catch (const std::exception& e) {
    send_error(res, 500, e.what());
  }
}

}  // namespace

RenderService::RenderService(ServiceConfig config)
    : config_(std::move(config)), store_(config_.max_sessions) {
  config_.pipeline.validate();
  int workers = config_.workers;
  if (workers <= 0) workers = std::max(1u, std::thread::hardware_concurrency());
  pool_ = std::make_unique<Pool>(workers);
}

RenderService::~RenderService() = default;

void RenderService::mount(httplib::Server& server) {
  server.set_payload_max_length(config_.max_payload_bytes);
  // Statuses produced inside httplib (404 route, 413 payload) get a JSON body too.
  server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) send_error(res, res.status, httplib::status_message(res.status));
  });
  if (!config_.ui_dir.empty()) {
    server.set_mount_point("/", config_.ui_dir.string());
  }

  server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(json{{"ok", true}}.dump(), "application/json");
  });

  server.Post("/session", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      if (!req.is_multipart_form_data()) {
        throw RequestError{400, "expected multipart/form-data with image and disparity"};
      }
      for (const char* name : {"image", "disparity"}) {
        if (!req.has_file(name)) throw RequestError{400, std::string("missing field: ") + name};
      }
      PipelineConfig cfg = config_.pipeline;
      if (req.has_file("gamma")) {
        cfg.gamma = parse_number(field_text(req, "gamma"), "gamma");
      }
      if (req.has_file("planes")) {
        const double n = parse_number(field_text(req, "planes"), "planes");
        if (n != std::floor(n)) throw RequestError{400, "planes: expected an integer"};
        cfg.plane_count = static_cast<int>(n);
      }
      if (req.has_file("occlusion")) {
        apply_occlusion_json(json::parse(field_text(req, "occlusion")), cfg.occlusion);
      }
      cfg.validate();
      const std::string image_bytes = field_text(req, "image");
      const std::string disparity_bytes = field_text(req, "disparity");
      ImageBuffer image = decode_image(std::span(
          reinterpret_cast<const std::uint8_t*>(image_bytes.data()), image_bytes.size()));
      DisparityMap disparity = decode_disparity(std::span(
          reinterpret_cast<const std::uint8_t*>(disparity_bytes.data()),
          disparity_bytes.size()));
      if (image.color_channels() != 3) {
        throw RequestError{400, "image must be RGB or RGBA"};
      }
      if (!disparity.same_size(image)) {
        throw RequestError{400, "image is " + std::to_string(image.width()) + "x" +
                                    std::to_string(image.height()) +
                                    " but disparity is " +
                                    std::to_string(disparity.width()) + "x" +
                                    std::to_string(disparity.height())};
      }
      BuiltScene built = pool_->run([&] { return build_scene(image, disparity, cfg); });
      auto session = std::make_shared<Session>(Session{
          store_.new_id(), std::move(image), std::move(disparity), std::move(built),
          pipeline_config_to_json(cfg), std::chrono::system_clock::now()});
      const json reply{{"id", session->id},
                       {"width", session->image.width()},
                       {"height", session->image.height()}};
      store_.insert(std::move(session));
      res.set_content(reply.dump(), "application/json");
    });
  });

  server.Post("/render", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = json::parse(req.body);
      if (!body.is_object()) throw RequestError{400, "body must be a JSON object"};
      if (!body.contains("id") || !body["id"].is_string()) {
        throw RequestError{400, "id: expected a string"};
      }
      if (!body.contains("A")) throw RequestError{400, "A: missing"};
      const std::string id = body["id"].get<std::string>();
      const auto session = require_session(store_.touch(id), id);
      RenderParams params;
      params.blur_amount = json_number(body, "A");
      params.gamma = body.contains("gamma") ? json_number(body, "gamma") : session->built.gamma;
      params.plane_count = session->built.stack.size();
      if (body.contains("d_f")) {
        params.refocus_disparity = json_number(body, "d_f");
      } else if (body.contains("focus")) {
        const json& f = body["focus"];
        if (!f.is_object() || !f.contains("x") || !f.contains("y")) {
          throw RequestError{400, "focus: expected {\"x\", \"y\"}"};
        }
        params.refocus_disparity = focus_disparity(
            session->disparity, json_number(f, "x"), json_number(f, "y"),
            params.plane_count, body.value("snap", false));
      } else {
        throw RequestError{400, "either d_f or focus is required"};
      }
      params.validate();
      const auto start = std::chrono::steady_clock::now();
      const std::vector<std::uint8_t> png = pool_->run([&] {
        return encode_png(render_scene(session->built, params), 8);
      });
      const double ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - start).count();
      res.set_header("X-Refocus-Disparity", std::to_string(params.refocus_disparity));
      res.set_header("X-Render-Ms", std::to_string(ms));
      res.set_content(std::string(png.begin(), png.end()), "image/png");
    });
  });

  server.Get("/disparity", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      for (const char* key : {"id", "x", "y"}) {
        if (!req.has_param(key)) throw RequestError{400, std::string("missing parameter: ") + key};
      }
      const std::string id = req.get_param_value("id");
      const auto session = require_session(store_.find(id), id);
      const double x = parse_number(req.get_param_value("x"), "x");
      const double y = parse_number(req.get_param_value("y"), "y");
      const double d = focus_disparity(session->disparity, x, y,
                                       session->built.stack.size(), false);
      res.set_content(json{{"d", d}}.dump(), "application/json");
    });
  });
}

bool run_server(const ServiceConfig& config) {
  httplib::Server server;
  RenderService service(config);
  service.mount(server);
  if (!server.bind_to_port(config.host, config.port)) return false;
  std::fprintf(stderr, "listening on http://%s:%d\n", config.host.c_str(), config.port);
  return server.listen_after_bind();
}

}  // namespace layerbokeh::service
