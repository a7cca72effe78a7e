#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "lfa/core.hpp"
#include "lfa/netconf.hpp"
#include "lfa/sim.hpp"

namespace lfa {

struct AgentPortConfig {
  std::string name;
  LaserModelParams model;
};

struct AgentOptions {
  std::string whitebox_id;
  std::string listen_host = "127.0.0.1";
  std::uint16_t listen_port = 0;  // 0 picks a free port
  std::uint64_t seed = 1;
  std::vector<AgentPortConfig> ports;
};

/// Whitebox agent: owns one transceiver simulator and speaks the RPC protocol
/// over TCP sessions and over in-process channels. Each session is served by
/// its own thread; a malformed document closes only its own session.
class AgentServer {
 public:
  static constexpr std::size_t kTelemetryCapacity = 100;

  AgentServer(AgentOptions options, std::shared_ptr<VirtualClock> clock);
  ~AgentServer();

  AgentServer(const AgentServer&) = delete;
  AgentServer& operator=(const AgentServer&) = delete;

  /// Binds and starts accepting TCP sessions. Throws Error on bind failure.
  void start();
  /// Stops accepting, lets in-flight configurations finish and their replies
  /// drain, then joins all session threads. Idempotent.
  void shutdown();
  bool listening() const { return listen_fd_ >= 0; }
  std::uint16_t tcp_port() const { return tcp_port_; }

  WhiteboxSim& sim() { return sim_; }
  const std::string& whitebox_id() const { return options_.whitebox_id; }

  std::vector<FeedbackRecord> telemetry(
      const std::optional<std::string>& port = std::nullopt) const;

  /// In-process session. Bytes in, bytes out, same codec as the socket path;
  /// `anchor` is the caller's current simulated time and bounds when the
  /// configuration may start. Replies to everything decoded from `frames`.
  class LocalChannel {
   public:
    struct Exchange {
      std::string frames;
      SimMicros last_config_end = 0;
    };
    explicit LocalChannel(AgentServer& server) : server_(server) {}
    Exchange exchange(std::string_view frames, SimMicros anchor);

   private:
    AgentServer& server_;
    netconf::Decoder decoder_;
    bool greeted_ = false;
    bool peer_hello_ = false;
  };

  std::unique_ptr<LocalChannel> open_local_channel() {
    return std::make_unique<LocalChannel>(*this);
  }

 private:
  netconf::RpcMessage handle(const netconf::RpcMessage& request,
                             SimMicros anchor, SimMicros* config_end);
  netconf::RpcMessage handle_edit(const netconf::EditConfig& edit,
                                  SimMicros anchor, SimMicros* config_end);
  netconf::RpcMessage handle_get(const netconf::GetTelemetry& get);
  void record_feedback(const FeedbackRecord& record);
  void serve_session(int fd);
  void accept_loop();

  AgentOptions options_;
  WhiteboxSim sim_;

  mutable std::mutex telemetry_mutex_;
  std::deque<FeedbackRecord> telemetry_;

  std::atomic<bool> running_{false};
  int listen_fd_ = -1;
  std::uint16_t tcp_port_ = 0;
  std::thread accept_thread_;
  std::mutex sessions_mutex_;
  std::vector<std::thread> sessions_;
};

struct AgentBundle {
  AgentOptions options;
  std::shared_ptr<VirtualClock> clock;
};

/// Reads the `agent serve` JSON config: whitebox_id, listen {host, port},
/// seed, clock {mode, factor}, ports [{name, fit_file | constant_s}].
AgentBundle load_agent_config(const std::string& path);

}  // namespace lfa
