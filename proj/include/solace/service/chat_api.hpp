#pragma once

// JSON-over-HTTP chat API. The handlers are plain functions of the request
// body so they can be exercised without a socket; install_routes binds them
// to an httplib server.

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "solace/dialogue/manager.hpp"
#include "solace/errors.hpp"
#include "solace/text/utf8.hpp"

// After Eigen: <resolv.h> defines a `_res` macro that Eigen uses as a name.
#include <httplib.h>

namespace solace::service {

inline constexpr std::size_t kMaxMessageChars = 2000;

struct ApiResult {
  int status = 200;
  nlohmann::json body;
};

inline ApiResult api_error(int status, const std::string& message) { return {status, {{"error", message}}}; }

inline nlohmann::json turn_response(const std::string& session_id, const dialogue::Turn& t) {
  return {{"session_id", session_id},
          {"reply", t.reply_text},
          {"bot_used", std::string(dialogue::to_string(t.bot_used))},
          {"mental_score", t.mental_score},
          {"sentiment_score", t.sentiment_score}};
}

class ChatApi {
 public:
  explicit ChatApi(dialogue::DialogueManager& dm) : dm_(dm) {}

  ApiResult create_session() { return {200, {{"session_id", dm_.create_session()}}}; }

  /// Body {session_id?, text}. A missing or null session_id opens a session.
  ApiResult message(const std::string& raw_body) {
    nlohmann::json body;
    try {
      body = nlohmann::json::parse(raw_body);
    } catch (const nlohmann::json::parse_error&) {
      return api_error(400, "request body is not valid JSON");
    }
    if (!body.is_object()) return api_error(400, "request body must be a JSON object");
    if (!body.contains("text") || !body["text"].is_string()) return api_error(400, "field 'text' (string) is required");
    const auto text = body["text"].get<std::string>();
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) return api_error(400, "text is empty");
    if (text::utf8_length(text) > kMaxMessageChars)
      return api_error(400, "text exceeds " + std::to_string(kMaxMessageChars) + " characters");

    std::string id;
    if (body.contains("session_id") && !body["session_id"].is_null()) {
      if (!body["session_id"].is_string()) return api_error(400, "session_id must be a string");
      id = body["session_id"].get<std::string>();
    }
    try {
      if (id.empty()) id = dm_.create_session();
      const auto turn = dm_.respond(id, text);
      return {200, turn_response(id, turn)};
    } catch (const NotFound& e) {
      return api_error(404, e.what());
    } catch (const std::exception& e) {
      auto r = api_error(500, e.what());
      r.body["reply"] = dm_.config().fallback_text;
      if (!id.empty()) r.body["session_id"] = id;
      return r;
    }
  }

  ApiResult history(const std::string& id) {
    try {
      const auto s = dm_.history(id);
      nlohmann::json turns = nlohmann::json::array();
      for (const auto& t : s.turns) turns.push_back(t.to_json());
      return {200,
              {{"session_id", s.id},
               {"active_bot", std::string(dialogue::to_string(s.active_bot))},
               {"created_ms", s.created_ms},
               {"updated_ms", s.updated_ms},
               {"turns", std::move(turns)}}};
    } catch (const NotFound& e) {
      return api_error(404, e.what());
    }
  }

  ApiResult health() { return {200, {{"status", "ok"}, {"sessions", dm_.session_count()}}}; }

 private:
  dialogue::DialogueManager& dm_;
};

inline void reply(httplib::Response& res, const ApiResult& r) {
  res.status = r.status;
  res.set_content(r.body.dump(), "application/json");
}

/// Registers the API routes and, when `web_root` is set, serves it at "/".
inline void install_routes(httplib::Server& svr, ChatApi& api, const std::filesystem::path& web_root = {}) {
  svr.Post("/api/session", [&api](const httplib::Request&, httplib::Response& res) { reply(res, api.create_session()); });
  svr.Post("/api/message",
           [&api](const httplib::Request& req, httplib::Response& res) { reply(res, api.message(req.body)); });
  svr.Get(R"(/api/session/([^/]+)/history)", [&api](const httplib::Request& req, httplib::Response& res) {
    reply(res, api.history(req.matches[1]));
  });
  svr.Get("/healthz", [&api](const httplib::Request&, httplib::Response& res) { reply(res, api.health()); });
  svr.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    reply(res, api_error(500, what));
  });
  if (!web_root.empty() && !svr.set_mount_point("/", web_root.string()))
    throw ConfigurationError("web root '" + web_root.string() + "' is not a directory");
}

}  // namespace solace::service
