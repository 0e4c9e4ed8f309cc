#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include "goesched/cmdp.hpp"
#include "goesched/config.hpp"
#include "goesched/env.hpp"

namespace goesched {

inline constexpr const char* kGatewayProtocol = "goesched-gateway/1";
inline constexpr std::uint64_t kEpisodeLength = 10000;

// One remote-steppable episode stream. Requests and responses are single-line
// JSON objects:
//   {"cmd":"spec"}              -> n_states, n_actions, gamma, budget, ...
//   {"cmd":"reset","seed":S}    -> state, obs, t
//   {"cmd":"step","action":A}   -> state, obs, reward, goe, cost, t, done
//   {"cmd":"set_mu","mu":X}     -> ok, mu
// Failures answer {"err":"..."} and leave the session usable.
class GatewaySession {
 public:
  explicit GatewaySession(SystemConfig config);

  std::string handle(std::string_view line);

  double mu() const { return mu_; }

 private:
  std::string spec() const;
  std::string reset(std::uint64_t seed);
  std::string step(long long action);
  std::string set_mu(double mu);

  Environment env_;
  StateSpace space_;
  double budget_;
  std::string hash_;
  double mu_ = 0.0;
  std::optional<EnvState> state_;
  std::uint64_t steps_ = 0;
};

// Serves one session over line-delimited streams until end of input.
void serve(const SystemConfig& config, std::istream& in, std::ostream& out);

// Accepts TCP connections on `port` (0 picks a free port), one session per
// connection, until `stop` becomes true. `on_listen` receives the bound port.
void serve_tcp(const SystemConfig& config, std::uint16_t port,
               const std::function<void(std::uint16_t)>& on_listen,
               const std::atomic<bool>& stop);

}  // namespace goesched
