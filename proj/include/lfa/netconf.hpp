#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "lfa/core.hpp"

namespace lfa::netconf {

/// A frame that does not parse, or parses to an unknown element. Carries the
/// offending document; connection handling is the caller's job.
class ProtocolError : public Error {
 public:
  ProtocolError(const std::string& what, std::string document)
      : Error(what), document_(std::move(document)) {}
  const std::string& document() const { return document_; }

 private:
  std::string document_;
};

inline constexpr std::string_view kEndOfMessage = "]]>]]>";
inline constexpr std::string_view kBaseCapability = "urn:lfa:base:1.0";

struct Hello {
  std::uint64_t message_id = 1;
  std::vector<std::string> capabilities;
  bool operator==(const Hello&) const = default;
};

struct EditConfig {
  std::uint64_t message_id = 0;
  std::string port;
  int frequency_ghz = 0;
  int grid_ghz = kGridGhz;
  bool operator==(const EditConfig&) const = default;
};

struct GetTelemetry {
  std::uint64_t message_id = 0;
  std::optional<std::string> port;
  bool operator==(const GetTelemetry&) const = default;
};

struct OkReply {
  std::uint64_t message_id = 0;
  std::optional<double> config_time_s;
  bool operator==(const OkReply&) const = default;
};

struct TelemetryRecord {
  std::string whitebox;
  std::string port;
  int frequency_ghz = 0;
  double config_time_s = 0.0;
  SimMicros timestamp = 0;
  bool operator==(const TelemetryRecord&) const = default;
};

struct TelemetryReply {
  std::uint64_t message_id = 0;
  std::vector<TelemetryRecord> records;
  bool operator==(const TelemetryReply&) const = default;
};

/// error-tag values: invalid-value, bad-element, operation-failed.
struct ErrorReply {
  std::uint64_t message_id = 0;
  std::string tag;
  std::string message;
  bool operator==(const ErrorReply&) const = default;
};

using RpcMessage = std::variant<Hello, EditConfig, GetTelemetry, OkReply,
                                TelemetryReply, ErrorReply>;

/// One XML document followed by the ]]>]]> end-of-message marker.
std::string encode(const RpcMessage& message);

/// The document alone, without the end-of-message marker.
std::string encode_document(const RpcMessage& message);

RpcMessage decode_document(std::string_view document);

std::uint64_t message_id_of(const RpcMessage& message);

/// Incremental frame splitter. Feed arbitrary byte chunks; complete messages
/// come out in order regardless of how the stream was cut.
class Decoder {
 public:
  std::vector<RpcMessage> feed(std::string_view bytes);
  bool idle() const { return buffer_.empty(); }

 private:
  std::string buffer_;
};

std::string escape_text(std::string_view text);

}  // namespace lfa::netconf
