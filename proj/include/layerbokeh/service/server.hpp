#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "layerbokeh/core/image.hpp"
#include "layerbokeh/service/pipeline.hpp"

namespace httplib {
class Server;
}

namespace layerbokeh::service {

/// Built representation of one uploaded image. Immutable after creation, so
/// renders only ever read it.
struct Session {
  std::string id;
  ImageBuffer image;
  DisparityMap disparity;
  BuiltScene built;
  nlohmann::json build_config;
  std::chrono::system_clock::time_point created_at;
};

enum class LookupStatus { kFound, kUnknown, kEvicted };

/// LRU cache of sessions keyed by id. Recency is refreshed by renders only.
class SessionStore {
 public:
  explicit SessionStore(std::size_t capacity);

  /// Inserts and returns the id of any session evicted to make room.
  std::optional<std::string> insert(std::shared_ptr<const Session> session);

  struct Lookup {
    LookupStatus status;
    std::shared_ptr<const Session> session;
  };
  /// Shared-lock read that leaves recency untouched.
  Lookup find(const std::string& id) const;
  /// Read that marks the session most recently used.
  Lookup touch(const std::string& id);

  std::size_t size() const;
  std::size_t capacity() const { return capacity_; }

  /// Unique per process: random prefix plus a counter.
  std::string new_id();

 private:
  std::size_t capacity_;
  mutable std::shared_mutex mutex_;
  std::list<std::string> order_;  // front = most recent
  struct Entry {
    std::shared_ptr<const Session> session;
    std::list<std::string>::iterator position;
  };
  std::unordered_map<std::string, Entry> sessions_;
  std::unordered_set<std::string> evicted_;
  std::mutex id_mutex_;
  std::uint64_t id_prefix_ = 0;
  std::uint64_t id_counter_ = 0;
};

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t max_sessions = 8;
  std::size_t max_payload_bytes = 32u << 20;
  /// Concurrent render/build computations; 0 = hardware concurrency.
  int workers = 0;
  /// Static files served at / when set.
  std::filesystem::path ui_dir;
  /// Defaults for sessions; requests may override gamma, N and occlusion.
  PipelineConfig pipeline;
};

/// Registers the HTTP API on `server`:
///   POST /session    multipart image, disparity [, gamma, planes, occlusion]
///   POST /render     {"id", "A", "d_f" | "focus": {"x","y"}, "gamma"?} -> PNG
///   GET  /disparity  ?id&x&y -> {"d"}
///   GET  /health     -> {"ok": true}
/// Errors are JSON {"error": message} with a 4xx status.
class RenderService {
 public:
  explicit RenderService(ServiceConfig config);
  ~RenderService();
  RenderService(const RenderService&) = delete;
  RenderService& operator=(const RenderService&) = delete;

  void mount(httplib::Server& server);
  SessionStore& sessions() { return store_; }

 private:
  class Pool;
  ServiceConfig config_;
  SessionStore store_;
  std::unique_ptr<Pool> pool_;
};

/// Blocks serving until the process is stopped. Returns false when the
/// socket cannot be bound.
bool run_server(const ServiceConfig& config);

}  // namespace layerbokeh::service
