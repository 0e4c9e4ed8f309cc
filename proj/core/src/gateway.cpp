#include "goesched/gateway.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <thread>
#include <vector>

#include <json.hpp>

#include "goesched/errors.hpp"

namespace goesched {

namespace {

using Json = nlohmann::ordered_json;

std::string error_response(const std::string& what) {
  Json j;
  j["err"] = what;
  return j.dump();
}

void add_observation(Json& j, const EnvState& state, const Environment& env,
                     const StateSpace& space) {
  j["state"] = space.encode(state);
  Json obs = Json::array();
  for (int a : env.relevant()) obs.push_back(state.aoi[static_cast<std::size_t>(a - 1)]);
  for (int a : env.relevant()) {
    obs.push_back(env.config().level_value(state.level[static_cast<std::size_t>(a - 1)]));
  }
  j["obs"] = std::move(obs);
}

class Socket {
 public:
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket() {
    if (fd_ >= 0) ::close(fd_);
  }
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  int fd() const { return fd_; }

 private:
  int fd_;
};

bool send_all(int fd, const std::string& data) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

void serve_connection(const SystemConfig& config, int fd, const std::atomic<bool>& stop) {
  Socket sock(fd);
  GatewaySession session(config);
  std::string buffer;
  char chunk[4096];
  while (!stop) {
    pollfd p{fd, POLLIN, 0};
    const int ready = ::poll(&p, 1, 100);
    if (ready < 0 && errno != EINTR) return;
    if (ready <= 0) continue;
    const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return;
    buffer.append(chunk, static_cast<std::size_t>(n));
    std::size_t pos;
    while ((pos = buffer.find('\n')) != std::string::npos) {
      std::string line = buffer.substr(0, pos);
      buffer.erase(0, pos + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      if (!send_all(fd, session.handle(line) + "\n")) return;
    }
  }
}

}  // namespace

GatewaySession::GatewaySession(SystemConfig config)
    : env_(std::move(config)),
      space_(build_state_space(env_.config())),
      budget_(max_budget(env_.config())),
      hash_(config_hash(env_.config())) {
  if (env_.config().query_limit != 1) {
    throw ContractError("the gateway exposes single-query actions; set query_limit = 1");
  }
}

std::string GatewaySession::handle(std::string_view line) {
  Json req;
  try {
    req = Json::parse(line);
  } catch (const Json::parse_error&) {
    return error_response("malformed message");
  }
  if (!req.is_object()) return error_response("malformed message");
  if (!req.contains("cmd") || !req["cmd"].is_string()) {
    return error_response("missing cmd");
  }
  const std::string cmd = req["cmd"].get<std::string>();
  try {
    if (cmd == "spec") return spec();
    if (cmd == "reset") {
      std::uint64_t seed = env_.config().seed;
      if (req.contains("seed")) {
        const Json& s = req["seed"];
        if (!s.is_number_unsigned()) {
          return error_response("seed must be a non-negative integer");
        }
        seed = s.get<std::uint64_t>();
      }
      return reset(seed);
    }
    if (cmd == "step") {
      if (!req.contains("action") || !req["action"].is_number_integer()) {
        return error_response("action must be an integer");
      }
      const Json& a = req["action"];
      const long long action =
          a.is_number_unsigned() && a.get<std::uint64_t>() >
                                        static_cast<std::uint64_t>(std::numeric_limits<long long>::max())
              ? std::numeric_limits<long long>::max()
              : a.get<long long>();
      return step(action);
    }
    if (cmd == "set_mu") {
      if (!req.contains("mu") || !req["mu"].is_number()) return error_response("mu must be a number");
      return set_mu(req["mu"].get<double>());
    }
  } catch (const Error& e) {
    return error_response(e.what());
  }
  return error_response("unknown cmd '" + cmd + "'");
}

std::string GatewaySession::spec() const {
  Json j;
  j["n_states"] = space_.size();
  j["n_actions"] = space_.num_actions();
  j["gamma"] = env_.config().discount;
  j["budget"] = budget_;
  j["version"] = kGatewayProtocol;
  j["config_hash"] = hash_;
  j["episode_length"] = kEpisodeLength;
  j["mu"] = mu_;
  j["attributes"] = env_.relevant();
  return j.dump();
}

std::string GatewaySession::reset(std::uint64_t seed) {
  state_ = env_.reset(seed);
  steps_ = 0;
  Json j;
  add_observation(j, *state_, env_, space_);
  j["t"] = steps_;
  return j.dump();
}

std::string GatewaySession::step(long long action) {
  if (!state_) return error_response("step before reset");
  if (steps_ >= kEpisodeLength) return error_response("episode finished; reset to continue");
  if (action < 0 || action >= static_cast<long long>(space_.num_actions())) {
    return error_response("action out of range");
  }
  std::vector<int> attrs;
  if (action > 0) attrs.push_back(space_.attribute_for_action(static_cast<int>(action)));
  const TraceRecord rec = env_.step(*state_, attrs);
  ++steps_;
  Json j;
  add_observation(j, *state_, env_, space_);
  j["reward"] = rec.cpt_goe - mu_ * rec.cost;
  j["goe"] = rec.goe;
  j["cost"] = rec.cost;
  j["t"] = steps_;
  j["done"] = steps_ >= kEpisodeLength;
  return j.dump();
}

std::string GatewaySession::set_mu(double mu) {
  if (!(mu >= 0.0) || !std::isfinite(mu)) return error_response("mu must be finite and >= 0");
  mu_ = mu;
  Json j;
  j["ok"] = true;
  j["mu"] = mu_;
  return j.dump();
}

void serve(const SystemConfig& config, std::istream& in, std::ostream& out) {
  GatewaySession session(config);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    out << session.handle(line) << '\n' << std::flush;
  }
}

void serve_tcp(const SystemConfig& config, std::uint16_t port,
               const std::function<void(std::uint16_t)>& on_listen,
               const std::atomic<bool>& stop) {
  GatewaySession probe(config);  // reject unusable configs before binding
  Socket listener(::socket(AF_INET, SOCK_STREAM, 0));
  if (listener.fd() < 0) throw IoError(std::string("socket: ") + std::strerror(errno));
  const int yes = 1;
  ::setsockopt(listener.fd(), SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  if (::bind(listener.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
    throw IoError("bind port " + std::to_string(port) + ": " + std::strerror(errno));
  }
  if (::listen(listener.fd(), 16) < 0) throw IoError(std::string("listen: ") + std::strerror(errno));
  socklen_t len = sizeof addr;
  ::getsockname(listener.fd(), reinterpret_cast<sockaddr*>(&addr), &len);
  if (on_listen) on_listen(ntohs(addr.sin_port));

  std::vector<std::thread> sessions;
  while (!stop) {
    pollfd p{listener.fd(), POLLIN, 0};
    const int ready = ::poll(&p, 1, 100);
    if (ready <= 0) continue;
    const int fd = ::accept(listener.fd(), nullptr, nullptr);
    if (fd < 0) continue;
    sessions.emplace_back(serve_connection, std::cref(config), fd, std::cref(stop));
  }
  for (auto& t : sessions) t.join();
}

}  // namespace goesched
