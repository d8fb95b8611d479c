#include <httplib.h>

#include <functional>

#include "tg/error.hpp"
#include "tg/service.hpp"

namespace tg {

struct HttpService::Impl {
  SessionManager& sessions;
  httplib::Server server;

  explicit Impl(SessionManager& s) : sessions(s) {}

  static void fail(httplib::Response& res, ErrorCode code, const std::string& message) {
    res.status = http_status(code);
    res.set_content(error_json(code, message), "application/json");
  }

  // Runs a handler and maps exceptions onto {code, message} bodies.
  static void guarded(httplib::Response& res, const std::function<void()>& body) {
    try {
      body();
    } catch (const Error& e) {
      fail(res, e.code(), e.what());
    } catch (const std::bad_alloc&) {
      fail(res, ErrorCode::ResourceLimit, "out of memory");
    } catch (const std::exception& e) {
      fail(res, ErrorCode::Internal, e.what());
    }
  }

  void routes() {
    const std::string id = R"(/v1/games/([0-9a-zA-Z]+))";
    server.Post("/v1/games", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto view = sessions.create(session_options_from_json(req.body));
        res.status = 201;
        res.set_content(state_view_json(view), "application/json");
      });
    });
    server.Get(id, [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { res.set_content(state_view_json(sessions.get(req.matches[1])), "application/json"); });
    });
    server.Post(id + "/move", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const Move m = move_from_json(req.body);
        res.set_content(state_view_json(sessions.submit_move(req.matches[1], m)), "application/json");
      });
    });
    server.Post(id + "/engine-move", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto [move, view] = sessions.engine_move(req.matches[1]);
        res.set_content(engine_move_json(move, view), "application/json");
      });
    });
    server.Get(id + "/hint", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { res.set_content(hint_json(sessions.hint(req.matches[1])), "application/json"); });
    });
    server.Delete(id, [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        sessions.remove(req.matches[1]);
        res.status = 204;
      });
    });
    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (res.status == 404 && res.body.empty()) {
        res.set_content(error_json(ErrorCode::InvalidArgument, "no such route"), "application/json");
      }
    });
  }
};

HttpService::HttpService(SessionManager& sessions) : impl_(std::make_unique<Impl>(sessions)) { impl_->routes(); }

HttpService::~HttpService() { stop(); }

int HttpService::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw Error(ErrorCode::IoError, "cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw Error(ErrorCode::IoError, "cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void HttpService::listen() { impl_->server.listen_after_bind(); }

void HttpService::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace tg
