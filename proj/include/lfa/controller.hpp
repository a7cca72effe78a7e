#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lfa/agent.hpp"
#include "lfa/allocator.hpp"
#include "lfa/core.hpp"
#include "lfa/netconf.hpp"
#include "lfa/sim.hpp"

namespace lfa {

struct RequestOutcome {
  std::uint64_t request_id = 0;
  std::uint64_t episode = 0;
  FrequencySlot slot{0};
  double ingress_time_s = 0.0;
  double egress_time_s = 0.0;
  double latency_s = 0.0;
  bool ok = false;
  std::string error;
};

/// An endpoint answered with rpc-error. Carries the partial outcome: a
/// successful sibling endpoint was still learned from and logged.
class RequestFailed : public Error {
 public:
  RequestFailed(const std::string& what, RequestOutcome outcome)
      : Error(what), outcome_(std::move(outcome)) {}
  const RequestOutcome& outcome() const { return outcome_; }

 private:
  RequestOutcome outcome_;
};

class SessionDown : public Error {
 public:
  using Error::Error;
};

class DbWriteError : public Error {
 public:
  using Error::Error;
};

/// One configuration session to a whitebox agent: hello already exchanged,
/// request/reply with end-of-message framing underneath.
class Session {
 public:
  struct Reply {
    netconf::RpcMessage message;
    SimMicros end_time = 0;  // simulated time when the reply was complete
  };

  virtual ~Session() = default;
  virtual const std::string& whitebox_id() const = 0;
  /// Blocking round trip. `anchor` is the controller's simulated send time.
  virtual Reply request(const netconf::RpcMessage& message,
                        SimMicros anchor) = 0;
};

/// In-process session; every message still passes through the wire codec.
std::unique_ptr<Session> make_local_session(AgentServer& agent);

/// Socket session; performs the hello exchange before returning.
std::unique_ptr<Session> make_tcp_session(std::string whitebox_id,
                                          const std::string& host,
                                          std::uint16_t port,
                                          std::shared_ptr<VirtualClock> clock);

/// Append-only feedback store, one JSON object per line. An empty path keeps
/// records in memory only.
class FeedbackDb {
 public:
  struct Row {
    std::string ts;
    std::string whitebox;
    std::string port;
    int slot = 0;
    int freq_ghz = 0;
    double config_time_s = 0.0;
    std::uint64_t episode = 0;
    std::uint64_t request_id = 0;
  };

  explicit FeedbackDb(std::string path);

  /// Throws DbWriteError on I/O failure; the in-memory copy is kept either
  /// way.
  void append(const FeedbackRecord& record, std::uint64_t episode,
              std::uint64_t request_id);

  const std::vector<FeedbackRecord>& records() const { return records_; }
  const std::string& path() const { return path_; }

  static std::string format_line(const FeedbackRecord& record,
                                 std::uint64_t episode,
                                 std::uint64_t request_id);
  static std::vector<Row> load(const std::string& path);

 private:
  std::string path_;
  std::ofstream out_;
  std::vector<FeedbackRecord> records_;
};

struct ControllerOptions {
  std::string db_path;  // empty: in-memory feedback only
  /// Fixed epsilon for operating mode; unset follows the schedule.
  std::optional<double> epsilon_override;
};

/// The packet controller: picks a slot for each connectivity request, pushes
/// it to both endpoint agents concurrently, learns from the returned
/// configuration times. Episodes advance only on fully successful requests.
class Controller {
 public:
  Controller(QModel model, std::shared_ptr<VirtualClock> clock,
             ControllerOptions options = {});

  void attach(std::unique_ptr<Session> session);
  bool has_session(const std::string& whitebox) const;

  /// Throws RequestFailed (endpoint rpc-error) or SessionDown.
  RequestOutcome fulfill(const ConnectivityRequest& request);

  /// Per-request failures land in the outcome list; session loss propagates.
  std::vector<RequestOutcome> run_scenario(
      std::span<const ConnectivityRequest> requests);

  QModel& model() { return model_; }
  const FeedbackDb& db() const { return db_; }
  SimMicros local_time() const { return local_time_; }
  std::uint64_t episode() const { return model_.schedule().episode; }
  void set_epsilon_override(std::optional<double> epsilon) {
    options_.epsilon_override = epsilon;
  }
  const std::optional<std::string>& last_db_error() const {
    return last_db_error_;
  }

 private:
  struct EndpointResult {
    bool ok = false;
    double config_time_s = 0.0;
    SimMicros end_time = 0;
    std::string error;
  };

  EndpointResult configure_endpoint(Session& session,
                                    const netconf::EditConfig& edit,
                                    SimMicros anchor);

  QModel model_;
  std::shared_ptr<VirtualClock> clock_;
  ControllerOptions options_;
  FeedbackDb db_;
  std::map<std::string, std::unique_ptr<Session>> sessions_;
  std::uint64_t next_message_id_ = 1;
  SimMicros local_time_;
  std::optional<std::string> last_db_error_;
};

}  // namespace lfa
