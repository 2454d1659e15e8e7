#include "ghostsim/transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <istream>
#include <ostream>
#include <thread>
#include <vector>

#include <fmt/format.h>
#include <httplib.h>

namespace ghostsim {

using nlohmann::json;

namespace {

json envelope_array(const std::vector<Envelope>& envelopes) {
  json arr = json::array();
  for (const auto& e : envelopes) arr.push_back(e.to_json());
  return arr;
}

bool is_unknown_session(const std::vector<Envelope>& envelopes) {
  return envelopes.size() == 1 && envelopes[0].kind == "error" && envelopes[0].sequence == 0;
}

void cors(httplib::Response& res) {
  res.set_header("Access-Control-Allow-Origin", "*");
  res.set_header("Access-Control-Allow-Headers", "Content-Type");
  res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
}

void reply(httplib::Response& res, int status, const json& body) {
  cors(res);
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

// NDJSON line handler shared by the socket and stdio transports. The
// "events" query replays envelopes after a sequence number.
std::vector<Envelope> handle_ndjson(SessionServer& server, std::string_view line) {
  json command;
  try {
    command = json::parse(line);
  } catch (const json::parse_error&) {
    return server.handle_line(line);
  }
  if (command.is_object() && command.value("type", "") == "events") {
    const std::string id = command.value("session_id", "");
    const auto after = command.value("after", std::uint64_t{0});
    return server.events_after(id, after);
  }
  return server.handle_command(command);
}

}  // namespace

int serve_http(SessionServer& server, const ListenOptions& listen, const std::atomic<bool>& stop,
               const std::function<void(int)>& on_ready) {
  httplib::Server http;
  http.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
    cors(res);
    res.status = 204;
  });
  http.Post("/sessions", [&](const httplib::Request& req, httplib::Response& res) {
    json body = json::object();
    if (!req.body.empty()) {
      try {
        body = json::parse(req.body);
      } catch (const json::parse_error& e) {
        reply(res, 400, json{{"error", fmt::format("malformed JSON: {}", e.what())}});
        return;
      }
    }
    if (body.is_object()) body["type"] = "create";
    const auto envelopes = server.handle_command(body);
    const bool ok = !envelopes.empty() && !envelopes.front().session_id.empty();
    json out{{"envelopes", envelope_array(envelopes)}};
    if (ok) out["session_id"] = envelopes.front().session_id;
    reply(res, ok ? 201 : 400, out);
  });
  http.Post(R"(/sessions/([^/]+)/commands)", [&](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::parse_error& e) {
      if (!server.has_session(id)) {
        reply(res, 404, json{{"envelopes", envelope_array(server.handle_command(id, json::object()))}});
        return;
      }
      body = req.body;  // not an object: the session reports it
    }
    const auto envelopes = server.handle_command(id, body);
    reply(res, is_unknown_session(envelopes) ? 404 : 200, json{{"envelopes", envelope_array(envelopes)}});
  });
  http.Get(R"(/sessions/([^/]+)/events)", [&](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    std::uint64_t after = 0;
    long wait_ms = 25000;
    try {
      if (req.has_param("after")) after = std::stoull(req.get_param_value("after"));
      if (req.has_param("wait_ms")) wait_ms = std::clamp(std::stol(req.get_param_value("wait_ms")), 0L, 60000L);
    } catch (const std::exception&) {
      reply(res, 400, json{{"error", "after and wait_ms must be integers"}});
      return;
    }
    if (!server.has_session(id)) {
      reply(res, 404, json{{"envelopes", envelope_array(server.events_after(id, after))}});
      return;
    }
    const auto envelopes = server.events_after(id, after, std::chrono::milliseconds(wait_ms));
    reply(res, 200, json{{"envelopes", envelope_array(envelopes)}});
  });

  int port = listen.port;
  if (port == 0) {
    port = http.bind_to_any_port(listen.host);
  } else if (!http.bind_to_port(listen.host, port)) {
    port = -1;
  }
  if (port < 0) return 1;
  if (on_ready) on_ready(port);
  std::thread watcher([&] {
    while (!stop.load()) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    http.stop();
  });
  http.listen_after_bind();
  watcher.join();
  return 0;
}

int serve_ndjson(SessionServer& server, const ListenOptions& listen, const std::atomic<bool>& stop,
                 const std::function<void(int)>& on_ready) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) return 1;
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(listen.port));
  if (::inet_pton(AF_INET, listen.host.c_str(), &addr.sin_addr) != 1 ||
      ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(fd, 16) != 0) {
    ::close(fd);
    return 1;
  }
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  if (on_ready) on_ready(ntohs(addr.sin_port));

  std::vector<std::thread> clients;
  while (!stop.load()) {
    pollfd p{fd, POLLIN, 0};
    if (::poll(&p, 1, 100) <= 0) continue;
    const int client = ::accept(fd, nullptr, nullptr);
    if (client < 0) continue;
    clients.emplace_back([&server, &stop, client] {
      std::string buffer;
      char chunk[4096];
      while (!stop.load()) {
        pollfd cp{client, POLLIN, 0};
        const int ready = ::poll(&cp, 1, 100);
        if (ready == 0) continue;
        if (ready < 0) break;
        const ssize_t n = ::recv(client, chunk, sizeof chunk, 0);
        if (n <= 0) break;
        buffer.append(chunk, static_cast<std::size_t>(n));
        std::size_t nl;
        while ((nl = buffer.find('\n')) != std::string::npos) {
          std::string line = buffer.substr(0, nl);
          buffer.erase(0, nl + 1);
          if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
          std::string reply;
          for (const auto& e : handle_ndjson(server, line)) reply += e.to_json().dump() + "\n";
          std::size_t sent = 0;
          while (sent < reply.size()) {
            const ssize_t w = ::send(client, reply.data() + sent, reply.size() - sent, MSG_NOSIGNAL);
            if (w <= 0) break;
            sent += static_cast<std::size_t>(w);
          }
        }
      }
      ::close(client);
    });
  }
  for (auto& t : clients) t.join();
  ::close(fd);
  return 0;
}

void serve_stdio(SessionServer& server, std::istream& in, std::ostream& out) {
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    for (const auto& e : handle_ndjson(server, line)) out << e.to_json().dump() << '\n';
    out.flush();
  }
}

}  // namespace ghostsim
