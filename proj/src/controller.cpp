#include "lfa/controller.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <deque>
#include <thread>

#include <nlohmann/json.hpp>

#include "lfa/simtime.hpp"

namespace lfa {
namespace {

netconf::Hello client_hello() {
  return netconf::Hello{1, {std::string(netconf::kBaseCapability)}};
}

class LocalSession : public Session {
 public:
  explicit LocalSession(AgentServer& agent)
      : whitebox_(agent.whitebox_id()),
        clock_(agent.sim().clock_ptr()),
        channel_(agent.open_local_channel()) {
    auto greeting =
        channel_->exchange(netconf::encode(client_hello()), clock_->now());
    auto messages = decoder_.feed(greeting.frames);
    if (messages.size() != 1 ||
        !std::holds_alternative<netconf::Hello>(messages.front()))
      throw SessionDown("agent " + whitebox_ + " did not say hello");
  }

  const std::string& whitebox_id() const override { return whitebox_; }

  Reply request(const netconf::RpcMessage& message, SimMicros anchor) override {
    auto exchange = channel_->exchange(netconf::encode(message), anchor);
    auto messages = decoder_.feed(exchange.frames);
    if (messages.size() != 1)
      throw SessionDown("agent " + whitebox_ + " returned " +
                        std::to_string(messages.size()) +
                        " messages for one request");
    return Reply{std::move(messages.front()), exchange.last_config_end};
  }

 private:
  std::string whitebox_;
  std::shared_ptr<VirtualClock> clock_;
  std::unique_ptr<AgentServer::LocalChannel> channel_;
  netconf::Decoder decoder_;
};

class TcpSession : public Session {
 public:
  TcpSession(std::string whitebox_id, const std::string& host,
             std::uint16_t port, std::shared_ptr<VirtualClock> clock)
      : whitebox_(std::move(whitebox_id)), clock_(std::move(clock)) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0)
      throw SessionDown(std::string("socket: ") + std::strerror(errno));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
      ::close(fd_);
      throw SessionDown("bad agent host: " + host);
    }
    if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
      int err = errno;
      ::close(fd_);
      throw SessionDown("cannot connect to " + host + ":" +
                        std::to_string(port) + ": " + std::strerror(err));
    }
    int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    send_frame(netconf::encode(client_hello()));
    auto greeting = read_message();
    if (!std::holds_alternative<netconf::Hello>(greeting))
      throw SessionDown("agent " + whitebox_ + " did not say hello");
  }

  ~TcpSession() override {
    if (fd_ >= 0) ::close(fd_);
  }

  const std::string& whitebox_id() const override { return whitebox_; }

  Reply request(const netconf::RpcMessage& message, SimMicros anchor) override {
    (void)anchor;  // the socket path has no causal side channel
    send_frame(netconf::encode(message));
    auto reply = read_message();
    return Reply{std::move(reply), clock_ ? clock_->now() : 0};
  }

 private:
  void send_frame(std::string_view bytes) {
    std::size_t off = 0;
    while (off < bytes.size()) {
      ssize_t n = ::send(fd_, bytes.data() + off, bytes.size() - off,
                         MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw SessionDown("session to " + whitebox_ +
                          " lost: " + std::strerror(errno));
      }
      off += static_cast<std::size_t>(n);
    }
  }

  netconf::RpcMessage read_message() {
    while (pending_.empty()) {
      char chunk[4096];
      ssize_t n = ::recv(fd_, chunk, sizeof(chunk), 0);
      if (n == 0) throw SessionDown("agent " + whitebox_ + " closed the session");
      if (n < 0) {
        if (errno == EINTR) continue;
        throw SessionDown("session to " + whitebox_ +
                          " lost: " + std::strerror(errno));
      }
      for (auto& message : decoder_.feed(std::string_view(chunk, n)))
        pending_.push_back(std::move(message));
    }
    auto message = std::move(pending_.front());
    pending_.pop_front();
    return message;
  }

  std::string whitebox_;
  std::shared_ptr<VirtualClock> clock_;
  int fd_ = -1;
  netconf::Decoder decoder_;
  std::deque<netconf::RpcMessage> pending_;
};

}  // namespace

std::unique_ptr<Session> make_local_session(AgentServer& agent) {
  return std::make_unique<LocalSession>(agent);
}

std::unique_ptr<Session> make_tcp_session(std::string whitebox_id,
                                          const std::string& host,
                                          std::uint16_t port,
                                          std::shared_ptr<VirtualClock> clock) {
  return std::make_unique<TcpSession>(std::move(whitebox_id), host, port,
                                      std::move(clock));
}

FeedbackDb::FeedbackDb(std::string path) : path_(std::move(path)) {
  if (path_.empty()) return;
  out_.open(path_, std::ios::out | std::ios::trunc);
  if (!out_) throw DbWriteError("cannot open feedback db " + path_);
}

std::string FeedbackDb::format_line(const FeedbackRecord& record,
                                    std::uint64_t episode,
                                    std::uint64_t request_id) {
  char buf[512];
  std::snprintf(
      buf, sizeof(buf),
      "{\"ts\":\"%s\",\"whitebox\":\"%s\",\"port\":\"%s\",\"slot\":%d,"
      "\"freq_ghz\":%d,\"config_time_s\":%.6f,\"episode\":%llu,"
      "\"request_id\":%llu}",
      format_iso8601(record.wall_time).c_str(),
      record.transceiver.whitebox.c_str(), record.transceiver.port.c_str(),
      record.slot.index(), record.slot.frequency_ghz(), record.config_time_s,
      static_cast<unsigned long long>(episode),
      static_cast<unsigned long long>(request_id));
  return buf;
}

void FeedbackDb::append(const FeedbackRecord& record, std::uint64_t episode,
                        std::uint64_t request_id) {
  records_.push_back(record);
  if (!out_.is_open()) return;
  out_ << format_line(record, episode, request_id) << '\n';
  out_.flush();
  if (!out_) throw DbWriteError("write to feedback db " + path_ + " failed");
}

std::vector<FeedbackDb::Row> FeedbackDb::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open feedback db " + path);
  std::vector<Row> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error("feedback db line " + std::to_string(rows.size() + 1) +
                  " is not valid JSON: " + e.what());
    }
    Row row;
    row.ts = j.at("ts").get<std::string>();
    row.whitebox = j.at("whitebox").get<std::string>();
    row.port = j.at("port").get<std::string>();
    row.slot = j.at("slot").get<int>();
    row.freq_ghz = j.at("freq_ghz").get<int>();
    row.config_time_s = j.at("config_time_s").get<double>();
    row.episode = j.at("episode").get<std::uint64_t>();
    row.request_id = j.at("request_id").get<std::uint64_t>();
    rows.push_back(std::move(row));
  }
  return rows;
}

Controller::Controller(QModel model, std::shared_ptr<VirtualClock> clock,
                       ControllerOptions options)
    : model_(std::move(model)),
      clock_(std::move(clock)),
      options_(std::move(options)),
      db_(options_.db_path),
      local_time_(clock_->epoch()) {}

void Controller::attach(std::unique_ptr<Session> session) {
  std::string id = session->whitebox_id();
  sessions_[id] = std::move(session);
}

bool Controller::has_session(const std::string& whitebox) const {
  return sessions_.count(whitebox) != 0;
}

Controller::EndpointResult Controller::configure_endpoint(
    Session& session, const netconf::EditConfig& edit, SimMicros anchor) {
  auto reply = session.request(edit, anchor);
  if (netconf::message_id_of(reply.message) != edit.message_id)
    throw SessionDown("agent " + session.whitebox_id() +
                      " replied to a different message-id");
  EndpointResult result;
  result.end_time = reply.end_time;
  if (const auto* ok = std::get_if<netconf::OkReply>(&reply.message)) {
    if (!ok->config_time_s)
      throw SessionDown("agent " + session.whitebox_id() +
                        " acknowledged without a configuration time");
    result.ok = true;
    result.config_time_s = *ok->config_time_s;
    return result;
  }
  if (const auto* err = std::get_if<netconf::ErrorReply>(&reply.message)) {
    result.ok = false;
    result.error = err->tag + ": " + err->message;
    return result;
  }
  throw SessionDown("agent " + session.whitebox_id() +
                    " answered a request with a non-reply message");
}

RequestOutcome Controller::fulfill(const ConnectivityRequest& request) {
  auto in_it = sessions_.find(request.ingress.whitebox);
  if (in_it == sessions_.end())
    throw SessionDown("no session to " + request.ingress.whitebox);
  auto eg_it = sessions_.find(request.egress.whitebox);
  if (eg_it == sessions_.end())
    throw SessionDown("no session to " + request.egress.whitebox);

  double epsilon =
      options_.epsilon_override.value_or(model_.current_epsilon());
  FrequencySlot slot =
      model_.select_slot(request.ingress, request.egress, epsilon);

  SimMicros anchor = local_time_;
  Session& in_session = *in_it->second;
  Session& eg_session = *eg_it->second;

  netconf::EditConfig in_edit{next_message_id_++, request.ingress.port,
                              slot.frequency_ghz(), kGridGhz};
  netconf::EditConfig eg_edit{next_message_id_++, request.egress.port,
                              slot.frequency_ghz(), kGridGhz};

  EndpointResult in_result, eg_result;
  std::exception_ptr in_error, eg_error;
  auto run_ingress = [&] {
    try {
      in_result = configure_endpoint(in_session, in_edit, anchor);
    } catch (...) {
      in_error = std::current_exception();
    }
  };
  auto run_egress = [&] {
    try {
      eg_result = configure_endpoint(eg_session, eg_edit, anchor);
    } catch (...) {
      eg_error = std::current_exception();
    }
  };
  if (&in_session == &eg_session) {
    // both endpoints on one whitebox: one session object, keep it serial
    run_ingress();
    if (!in_error) run_egress();
  } else {
    std::thread worker(run_ingress);
    run_egress();
    worker.join();
  }
  if (in_error) std::rethrow_exception(in_error);
  if (eg_error) std::rethrow_exception(eg_error);

  // learn from every successful endpoint, ingress first, before any throw
  std::uint64_t episode = model_.schedule().episode;
  auto learn = [&](const TransceiverId& endpoint, const EndpointResult& r) {
    if (!r.ok) return;
    model_.update(endpoint, slot, r.config_time_s);
    FeedbackRecord record{endpoint, slot, r.config_time_s, r.end_time};
    try {
      db_.append(record, episode, request.request_id);
    } catch (const DbWriteError& e) {
      last_db_error_ = e.what();
    }
  };
  learn(request.ingress, in_result);
  learn(request.egress, eg_result);

  local_time_ = std::max(
      {local_time_, in_result.end_time, eg_result.end_time});

  RequestOutcome outcome;
  outcome.request_id = request.request_id;
  outcome.episode = episode;
  outcome.slot = slot;
  outcome.ingress_time_s = in_result.config_time_s;
  outcome.egress_time_s = eg_result.config_time_s;
  outcome.latency_s =
      static_cast<double>(local_time_ - anchor) / 1e6;
  outcome.ok = in_result.ok && eg_result.ok;
  if (!outcome.ok) {
    outcome.error = !in_result.ok ? request.ingress.key() + ": " + in_result.error
                                  : request.egress.key() + ": " + eg_result.error;
    throw RequestFailed(outcome.error, outcome);
  }
  model_.advance_episode();
  return outcome;
}

std::vector<RequestOutcome> Controller::run_scenario(
    std::span<const ConnectivityRequest> requests) {
  std::vector<RequestOutcome> outcomes;
  outcomes.reserve(requests.size());
  for (const auto& request : requests) {
    try {
      outcomes.push_back(fulfill(request));
    } catch (const RequestFailed& failed) {
      outcomes.push_back(failed.outcome());
    }
  }
  return outcomes;
}

}  // namespace lfa
