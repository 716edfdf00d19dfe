// SPDX-License-Identifier: Apache-2.0
#include "aquafeed/api.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <limits>
#include <mutex>
#include <set>

#include "aquafeed/error.hpp"
#include "aquafeed/sim_adapter.hpp"
#include "httplib.h"
#include "json.hpp"

namespace aquafeed {

namespace {

using J = nlohmann::ordered_json;

constexpr std::size_t kMaxPageSize = 1000;
constexpr std::size_t kMaxStreamBacklog = 4096;

int status_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NotFound: return 404;
    case ErrorKind::Conflict: return 409;
    case ErrorKind::Io: return 503;
    default: return 400;
  }
}

void send_json(httplib::Response& res, int status, const J& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view kind, const std::string& field,
                const std::string& message) {
  send_json(res, status, J{{"error", J{{"kind", kind}, {"field", field}, {"message", message}}}});
}

void send_error(httplib::Response& res, const Error& e) {
  send_error(res, status_for(e.kind()), to_string(e.kind()), e.field(), e.message());
}

std::int64_t query_int(const httplib::Request& req, const char* key, std::int64_t fallback,
                       std::int64_t min = std::numeric_limits<std::int64_t>::min()) {
  if (!req.has_param(key)) return fallback;
  const std::string v = req.get_param_value(key);
  std::size_t used = 0;
  std::int64_t out = 0;
  try {
    out = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw Error(ErrorKind::InvalidInput, key, "expected an integer");
  if (out < min) throw Error(ErrorKind::InvalidInput, key, "must be >= " + std::to_string(min));
  return out;
}

J parse_body(const httplib::Request& req) {
  J body = J::parse(req.body, nullptr, false);
  if (body.is_discarded()) throw Error(ErrorKind::Parse, "$", "request body is not valid JSON");
  return body;
}

J tank_view(const TankState& s) {
  J full = J::parse(tank_state_to_json(s));
  J view = J::object();
  for (const char* key : {"tank_id", "last_seq", "last_ts_ms", "latest", "last_observation",
                          "last_plan", "last_feed_ack", "actuators", "alerts", "rules",
                          "pending_manual", "commands_issued", "no_fish_events",
                          "degraded_observations", "rejected_fish"}) {
    view[key] = full.at(key);
  }
  view["pending_commands"] = full.at("pending").size();
  view["decision_count"] = s.decisions.size();
  view["last_decision"] = s.decisions.empty() ? J(nullptr) : J::parse(feed_decision_to_json(s.decisions.back()));
  return view;
}

// One connected stream client.
struct StreamClient {
  std::string tank_filter;  // empty: all tanks
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::string> queue;
  std::uint64_t dropped = 0;
};

}  // namespace

struct ApiServer::Impl {
  explicit Impl(ControlService& s) : service(s) {}

  ControlService& service;
  httplib::Server server;
  std::thread thread;
  std::atomic<bool> stopping{false};
  int listener_id = -1;

  std::mutex clients_mu;
  std::set<std::shared_ptr<StreamClient>> clients;

  void broadcast(const StreamMessage& m) {
    std::string frame = "id: " + std::to_string(m.seq) + "\nevent: " + m.type + "\ndata: {\"tank_id\":" +
                        J(m.tank_id).dump() + ",\"event\":" + m.json + "}\n\n";
    std::lock_guard lock(clients_mu);
    for (const auto& c : clients) {
      if (!c->tank_filter.empty() && c->tank_filter != m.tank_id) continue;
      std::lock_guard cl(c->mu);
      if (c->queue.size() >= kMaxStreamBacklog) {
        c->queue.pop_front();
        ++c->dropped;
      }
      c->queue.push_back(frame);
      c->cv.notify_one();
    }
  }

  void routes();
};

void ApiServer::Impl::routes() {
  // The library default adds SO_REUSEPORT, which lets a second server bind a
  // port that is already serving.
  server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof(yes));
  });
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const Error& e) {
      send_error(res, e);
    } catch (const nlohmann::json::exception& e) {
      send_error(res, 400, "parse-error", "$", e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "internal", "", e.what());
    }
  });
  server.Options(R"(/api/v1/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, PUT, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });

  server.Get("/api/v1/tanks", [this](const httplib::Request&, httplib::Response& res) {
    J tanks = J::array();
    for (const auto& id : service.tank_ids()) {
      const auto s = service.snapshot(id);
      std::size_t active = 0;
      for (const auto& [k, a] : s->alerts) active += a.active ? 1 : 0;
      tanks.push_back(J{{"tank_id", id},
                        {"last_seq", s->last_seq},
                        {"last_ts_ms", s->last_ts_ms},
                        {"active_alerts", active},
                        {"decision_count", s->decisions.size()}});
    }
    send_json(res, 200, J{{"tanks", std::move(tanks)}});
  });

  server.Get(R"(/api/v1/tanks/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    send_json(res, 200, tank_view(*service.snapshot(req.matches[1].str())));
  });

  server.Get(R"(/api/v1/tanks/([^/]+)/telemetry)", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1].str();
    if (!service.has_tank(id)) throw Error(ErrorKind::NotFound, "tank_id", "unknown tank '" + id + "'");
    if (!req.has_param("kind")) throw Error(ErrorKind::InvalidInput, "kind", "required");
    const auto kind = reading_kind_from_string(req.get_param_value("kind"));
    if (!kind) throw Error(ErrorKind::InvalidInput, "kind", "expected ph, dissolved_oxygen or temperature");
    const std::int64_t from = query_int(req, "from", std::numeric_limits<std::int64_t>::min());
    const std::int64_t to = query_int(req, "to", std::numeric_limits<std::int64_t>::max());
    J points = J::array();
    for (const auto& p : service.store().query_range(id, *kind, from, to)) {
      points.push_back(J{{"ts_ms", p.ts_ms}, {"value", p.value}});
    }
    send_json(res, 200,
              J{{"tank_id", id}, {"kind", to_string(*kind)}, {"unit", to_string(unit_for(*kind))},
                {"points", std::move(points)}});
  });

  server.Get(R"(/api/v1/tanks/([^/]+)/decisions)", [this](const httplib::Request& req, httplib::Response& res) {
    const auto s = service.snapshot(req.matches[1].str());
    const auto offset = static_cast<std::size_t>(query_int(req, "offset", 0, 0));
    const auto limit = static_cast<std::size_t>(query_int(req, "limit", 100, 1));
    if (limit > kMaxPageSize) throw Error(ErrorKind::InvalidInput, "limit", "must be <= 1000");
    J rows = J::array();
    for (std::size_t i = offset; i < s->decisions.size() && rows.size() < limit; ++i) {
      rows.push_back(J::parse(feed_decision_to_json(s->decisions[i])));
    }
    send_json(res, 200,
              J{{"total", s->decisions.size()}, {"offset", offset}, {"limit", limit}, {"decisions", std::move(rows)}});
  });

  server.Get(R"(/api/v1/tanks/([^/]+)/events)", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1].str();
    const auto after = static_cast<std::uint64_t>(query_int(req, "after_seq", 0, 0));
    const auto limit = static_cast<std::size_t>(query_int(req, "limit", 100, 1));
    if (limit > kMaxPageSize) throw Error(ErrorKind::InvalidInput, "limit", "must be <= 1000");
    J rows = J::array();
    for (const auto& e : service.events(id, after, limit)) rows.push_back(J::parse(event_to_json(e)));
    send_json(res, 200, J{{"tank_id", id}, {"events", std::move(rows)}});
  });

  server.Post(R"(/api/v1/tanks/([^/]+)/commands/feed)", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1].str();
    if (!service.has_tank(id)) throw Error(ErrorKind::NotFound, "tank_id", "unknown tank '" + id + "'");
    const J body = parse_body(req);
    if (!body.is_object()) throw Error(ErrorKind::InvalidInput, "$", "expected an object");
    if (!body.contains("command_id") || !body.at("command_id").is_string()) {
      throw Error(ErrorKind::InvalidInput, "command_id", "required string");
    }
    std::optional<double> grams;
    if (body.contains("grams") && !body.at("grams").is_null()) {
      if (!body.at("grams").is_number()) throw Error(ErrorKind::InvalidInput, "grams", "expected a number");
      grams = body.at("grams").get<double>();
    }
    const ManualFeedResult r = service.manual_feed(id, body.at("command_id").get<std::string>(), grams);
    J out{{"status", to_string(r.status)},
          {"reason", r.reason},
          {"decision", r.decision ? J::parse(feed_decision_to_json(*r.decision)) : J(nullptr)}};
    int status = 200;
    switch (r.status) {
      case ManualFeedStatus::Issued: status = 201; break;
      case ManualFeedStatus::Pending: status = 202; break;
      case ManualFeedStatus::Duplicate: status = 200; break;
      case ManualFeedStatus::Rejected:
        status = 422;
        out["error"] = J{{"kind", "cap-exceeded"}, {"field", "grams"}, {"message", r.reason}};
        break;
    }
    send_json(res, status, out);
  });

  server.Get(R"(/api/v1/tanks/([^/]+)/rules)", [this](const httplib::Request& req, httplib::Response& res) {
    const auto s = service.snapshot(req.matches[1].str());
    send_json(res, 200, J{{"rules", J::parse(alert_rules_to_json(s->rules))}});
  });

  server.Put(R"(/api/v1/tanks/([^/]+)/rules)", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1].str();
    if (!service.has_tank(id)) throw Error(ErrorKind::NotFound, "tank_id", "unknown tank '" + id + "'");
    service.update_rules(id, alert_rules_from_json(req.body));
    send_json(res, 200, J{{"rules", J::parse(alert_rules_to_json(service.snapshot(id)->rules))}});
  });

  server.Post(R"(/api/v1/tanks/([^/]+)/scenario)", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1].str();
    if (!service.has_tank(id)) throw Error(ErrorKind::NotFound, "tank_id", "unknown tank '" + id + "'");
    sim::parse_scenario_control(req.body);
    service.publish_scenario(id, req.body);
    send_json(res, 202, J{{"status", "forwarded"}});
  });

  server.Get("/api/v1/stream", [this](const httplib::Request& req, httplib::Response& res) {
    auto client = std::make_shared<StreamClient>();
    if (req.has_param("tank")) {
      client->tank_filter = req.get_param_value("tank");
      if (!service.has_tank(client->tank_filter)) {
        throw Error(ErrorKind::NotFound, "tank", "unknown tank '" + client->tank_filter + "'");
      }
    }
    {
      std::lock_guard lock(clients_mu);
      clients.insert(client);
    }
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider(
        "text/event-stream",
        [this, client, first = true](std::size_t, httplib::DataSink& sink) mutable {
          if (first) {
            first = false;
            const std::string hello = ": connected\nretry: 1000\n\n";
            return sink.write(hello.data(), hello.size());
          }
          std::deque<std::string> batch;
          {
            std::unique_lock lock(client->mu);
            client->cv.wait_for(lock, std::chrono::seconds(1),
                                [&] { return !client->queue.empty() || stopping.load(); });
            batch.swap(client->queue);
          }
          if (stopping) return false;
          if (batch.empty()) {
            const std::string ping = ": ping\n\n";
            return sink.write(ping.data(), ping.size());
          }
          for (const auto& frame : batch) {
            if (!sink.write(frame.data(), frame.size())) return false;
          }
          return true;
        },
        [this, client](bool) {
          std::lock_guard lock(clients_mu);
          clients.erase(client);
        });
  });

  server.Get("/", [](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, J{{"service", "aquafeed"}, {"api", "/api/v1"}});
  });
}

ApiServer::ApiServer(ControlService& service) : impl_(std::make_unique<Impl>(service)) {
  impl_->routes();
  impl_->listener_id = service.add_listener([impl = impl_.get()](const StreamMessage& m) { impl->broadcast(m); });
}

ApiServer::~ApiServer() {
  stop();
  impl_->service.remove_listener(impl_->listener_id);
}

int ApiServer::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound <= 0) throw Error(ErrorKind::Io, host + ":" + std::to_string(port), "cannot bind HTTP listener");
  impl_->thread = std::thread([impl = impl_.get()] { impl->server.listen_after_bind(); });
  // stop() is a no-op until the accept loop runs.
  impl_->server.wait_until_ready();
  return bound;
}

void ApiServer::stop() {
  impl_->stopping = true;
  {
    std::lock_guard lock(impl_->clients_mu);
    for (const auto& c : impl_->clients) c->cv.notify_all();
  }
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace aquafeed
