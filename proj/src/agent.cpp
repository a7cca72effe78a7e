#include "lfa/agent.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace lfa {
namespace {

constexpr int kPollMillis = 100;

void send_all(int fd, std::string_view bytes) {
  std::size_t off = 0;
  while (off < bytes.size()) {
    ssize_t n = ::send(fd, bytes.data() + off, bytes.size() - off,
                       MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(std::string("send failed: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

AgentServer::AgentServer(AgentOptions options,
                         std::shared_ptr<VirtualClock> clock)
    : options_(std::move(options)),
      sim_(options_.whitebox_id, std::move(clock), options_.seed) {
  for (const auto& port : options_.ports) sim_.add_port(port.name, port.model);
}

AgentServer::~AgentServer() { shutdown(); }

void AgentServer::start() {
  if (listen_fd_ >= 0) return;
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw Error(std::string("socket: ") + std::strerror(errno));
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(options_.listen_port);
  if (::inet_pton(AF_INET, options_.listen_host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd);
    throw Error("bad listen host: " + options_.listen_host);
  }
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
    int err = errno;
    ::close(fd);
    throw Error("cannot bind " + options_.listen_host + ":" +
                std::to_string(options_.listen_port) + ": " +
                std::strerror(err));
  }
  if (::listen(fd, 16) < 0) {
    int err = errno;
    ::close(fd);
    throw Error(std::string("listen: ") + std::strerror(err));
  }
  sockaddr_in bound{};
  socklen_t len = sizeof(bound);
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&bound), &len);
  tcp_port_ = ntohs(bound.sin_port);
  listen_fd_ = fd;
  running_ = true;
  accept_thread_ = std::thread(&AgentServer::accept_loop, this);
}

void AgentServer::shutdown() {
  bool was_running = running_.exchange(false);
  if (listen_fd_ >= 0) {
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    listen_fd_ = -1;
  }
  if (accept_thread_.joinable()) accept_thread_.join();
  std::vector<std::thread> sessions;
  {
    std::lock_guard lock(sessions_mutex_);
    sessions.swap(sessions_);
  }
  for (auto& t : sessions)
    if (t.joinable()) t.join();
  (void)was_running;
}

void AgentServer::accept_loop() {
  while (running_) {
    pollfd pfd{listen_fd_, POLLIN, 0};
    int ready = ::poll(&pfd, 1, kPollMillis);
    if (!running_) break;
    if (ready <= 0) continue;
    int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    std::lock_guard lock(sessions_mutex_);
    sessions_.emplace_back(&AgentServer::serve_session, this, fd);
  }
}

void AgentServer::serve_session(int fd) {
  netconf::Decoder decoder;
  bool peer_hello = false;
  try {
    send_all(fd, netconf::encode(netconf::Hello{
                     1, {std::string(netconf::kBaseCapability)}}));
    char chunk[4096];
    while (running_) {
      pollfd pfd{fd, POLLIN, 0};
      int ready = ::poll(&pfd, 1, kPollMillis);
      if (!running_) break;
      if (ready <= 0) continue;
      ssize_t n = ::recv(fd, chunk, sizeof(chunk), 0);
      if (n == 0) break;  // peer closed
      if (n < 0) {
        if (errno == EINTR) continue;
        break;
      }
      auto messages = decoder.feed(std::string_view(chunk, n));
      for (const auto& message : messages) {
        if (!peer_hello) {
          if (!std::holds_alternative<netconf::Hello>(message))
            throw netconf::ProtocolError("first message must be hello",
                                         netconf::encode_document(message));
          peer_hello = true;
          continue;
        }
        SimMicros anchor = sim_.clock().now();
        SimMicros config_end = 0;
        auto reply = handle(message, anchor, &config_end);
        send_all(fd, netconf::encode(reply));
      }
    }
  } catch (const netconf::ProtocolError&) {
    // malformed or out-of-order traffic closes only this session
  } catch (const Error&) {
  }
  ::close(fd);
}

netconf::RpcMessage AgentServer::handle(const netconf::RpcMessage& request,
                                        SimMicros anchor,
                                        SimMicros* config_end) {
  if (const auto* edit = std::get_if<netconf::EditConfig>(&request))
    return handle_edit(*edit, anchor, config_end);
  if (const auto* get = std::get_if<netconf::GetTelemetry>(&request))
    return handle_get(*get);
  throw netconf::ProtocolError("message is not a request",
                               netconf::encode_document(request));
}

netconf::RpcMessage AgentServer::handle_edit(const netconf::EditConfig& edit,
                                             SimMicros anchor,
                                             SimMicros* config_end) {
  if (edit.grid_ghz != kGridGhz)
    return netconf::ErrorReply{edit.message_id, "invalid-value",
                               "unsupported grid " +
                                   std::to_string(edit.grid_ghz) + " GHz"};
  try {
    ConfigOutcome outcome =
        sim_.set_frequency(edit.port, edit.frequency_ghz, anchor);
    if (config_end) *config_end = std::max(*config_end, outcome.configured_at);
    record_feedback(FeedbackRecord{
        TransceiverId{options_.whitebox_id, edit.port}, outcome.slot,
        outcome.config_time_s, outcome.configured_at});
    return netconf::OkReply{edit.message_id, outcome.config_time_s};
  } catch (const InvalidFrequency& e) {
    return netconf::ErrorReply{edit.message_id, "invalid-value", e.what()};
  } catch (const UnknownPort& e) {
    return netconf::ErrorReply{edit.message_id, "bad-element", e.what()};
  } catch (const Error& e) {
    return netconf::ErrorReply{edit.message_id, "operation-failed", e.what()};
  }
}

netconf::RpcMessage AgentServer::handle_get(const netconf::GetTelemetry& get) {
  netconf::TelemetryReply reply;
  reply.message_id = get.message_id;
  for (const auto& record : telemetry(get.port)) {
    reply.records.push_back(netconf::TelemetryRecord{
        record.transceiver.whitebox, record.transceiver.port,
        record.slot.frequency_ghz(), record.config_time_s,
        record.wall_time});
  }
  return reply;
}

void AgentServer::record_feedback(const FeedbackRecord& record) {
  std::lock_guard lock(telemetry_mutex_);
  telemetry_.push_back(record);
  while (telemetry_.size() > kTelemetryCapacity) telemetry_.pop_front();
}

std::vector<FeedbackRecord> AgentServer::telemetry(
    const std::optional<std::string>& port) const {
  std::lock_guard lock(telemetry_mutex_);
  std::vector<FeedbackRecord> out;
  out.reserve(telemetry_.size());
  for (const auto& record : telemetry_)
    if (!port || record.transceiver.port == *port) out.push_back(record);
  return out;
}

AgentServer::LocalChannel::Exchange AgentServer::LocalChannel::exchange(
    std::string_view frames, SimMicros anchor) {
  Exchange result;
  result.last_config_end = anchor;
  auto messages = decoder_.feed(frames);
  for (const auto& message : messages) {
    if (!peer_hello_) {
      if (!std::holds_alternative<netconf::Hello>(message))
        throw netconf::ProtocolError("first message must be hello",
                                     netconf::encode_document(message));
      peer_hello_ = true;
      if (!greeted_) {
        result.frames += netconf::encode(netconf::Hello{
            1, {std::string(netconf::kBaseCapability)}});
        greeted_ = true;
      }
      continue;
    }
    SimMicros config_end = 0;
    auto reply = server_.handle(message, anchor, &config_end);
    result.last_config_end = std::max(result.last_config_end, config_end);
    result.frames += netconf::encode(reply);
  }
  return result;
}

AgentBundle load_agent_config(const std::string& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error("agent config " + path + " is not valid JSON: " + e.what());
  }
  try {
    AgentBundle bundle;
    bundle.options.whitebox_id = doc.at("whitebox_id").get<std::string>();
    if (doc.contains("listen")) {
      const auto& listen = doc.at("listen");
      if (listen.contains("host"))
        bundle.options.listen_host = listen.at("host").get<std::string>();
      if (listen.contains("port"))
        bundle.options.listen_port = listen.at("port").get<std::uint16_t>();
    }
    if (doc.contains("seed"))
      bundle.options.seed = doc.at("seed").get<std::uint64_t>();

    SimMicros epoch = default_sim_epoch();
    if (doc.contains("clock") && doc.at("clock").contains("mode") &&
        doc.at("clock").at("mode").get<std::string>() == "scaled") {
      double factor = doc.at("clock").value("factor", 1.0);
      bundle.clock = VirtualClock::realtime_scaled(factor, epoch);
    } else {
      bundle.clock = VirtualClock::logical(epoch);
    }

    auto base = std::filesystem::path(path).parent_path();
    for (const auto& port : doc.at("ports")) {
      AgentPortConfig config;
      config.name = port.at("name").get<std::string>();
      if (port.contains("fit_file")) {
        auto fit_path =
            (base / port.at("fit_file").get<std::string>()).string();
        config.model = params_from_fits(load_fit_json(read_text_file(fit_path)));
      } else if (port.contains("constant_s")) {
        config.model =
            LaserModelParams::constant(port.at("constant_s").get<double>());
      } else {
        throw Error("port " + config.name +
                    " needs either fit_file or constant_s");
      }
      bundle.options.ports.push_back(std::move(config));
    }
    if (bundle.options.ports.empty()) throw Error("agent config has no ports");
    return bundle;
  } catch (const nlohmann::json::exception& e) {
    throw Error("agent config " + path + " missing fields: " + e.what());
  }
}

}  // namespace lfa
