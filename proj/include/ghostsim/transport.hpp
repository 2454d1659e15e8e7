#pragma once

#include <atomic>
#include <functional>
#include <iosfwd>
#include <string>

#include "ghostsim/session.hpp"

namespace ghostsim {

// Blocking servers; they return once `stop` becomes true (checked about
// every 100 ms) or on a fatal socket error. `on_ready` receives the bound port.
struct ListenOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
};

int serve_http(SessionServer& server, const ListenOptions& listen, const std::atomic<bool>& stop,
               const std::function<void(int)>& on_ready = {});
int serve_ndjson(SessionServer& server, const ListenOptions& listen, const std::atomic<bool>& stop,
                 const std::function<void(int)>& on_ready = {});
// One command per input line, envelopes written one per line.
void serve_stdio(SessionServer& server, std::istream& in, std::ostream& out);

}  // namespace ghostsim
