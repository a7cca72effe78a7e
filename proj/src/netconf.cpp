#include "lfa/netconf.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>

#include "lfa/simtime.hpp"

namespace lfa::netconf {
namespace {

constexpr std::size_t kMaxFrameBytes = 1 << 20;

// --- minimal XML reader -----------------------------------------------------
// Elements, attributes, character data and the five predefined entities.
// No comments, CDATA, doctypes or processing instructions beyond a leading
// <?xml ...?>; the protocol never produces them.

struct XmlNode {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attrs;
  std::string text;
  std::vector<XmlNode> children;

  const XmlNode* child(std::string_view want) const {
    for (const auto& c : children)
      if (c.name == want) return &c;
    return nullptr;
  }
  std::optional<std::string> attr(std::string_view want) const {
    for (const auto& [k, v] : attrs)
      if (k == want) return v;
    return std::nullopt;
  }
};

class XmlReader {
 public:
  XmlReader(std::string_view doc) : doc_(doc) {}

  XmlNode parse() {
    skip_ws();
    if (peek_starts("<?")) {
      auto end = doc_.find("?>", pos_);
      if (end == std::string_view::npos) fail("unterminated declaration");
      pos_ = end + 2;
      skip_ws();
    }
    XmlNode root = element();
    skip_ws();
    if (pos_ != doc_.size()) fail("trailing data after root element");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& why) {
    throw ProtocolError("malformed XML: " + why, std::string(doc_));
  }

  void skip_ws() {
    while (pos_ < doc_.size() &&
           std::isspace(static_cast<unsigned char>(doc_[pos_])))
      ++pos_;
  }

  bool peek_starts(std::string_view s) const {
    return doc_.substr(pos_, s.size()) == s;
  }

  char cur() const { return pos_ < doc_.size() ? doc_[pos_] : '\0'; }

  static bool name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' ||
           c == '_' || c == ':' || c == '.';
  }

  std::string read_name() {
    std::size_t start = pos_;
    while (pos_ < doc_.size() && name_char(doc_[pos_])) ++pos_;
    if (pos_ == start) fail("expected a name");
    return std::string(doc_.substr(start, pos_ - start));
  }

  std::string decode_entities(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (raw[i] != '&') {
        out += raw[i];
        continue;
      }
      auto semi = raw.find(';', i);
      if (semi == std::string_view::npos) fail("unterminated entity");
      auto name = raw.substr(i + 1, semi - i - 1);
      if (name == "amp") out += '&';
      else if (name == "lt") out += '<';
      else if (name == "gt") out += '>';
      else if (name == "quot") out += '"';
      else if (name == "apos") out += '\'';
      else fail("unknown entity &" + std::string(name) + ";");
      i = semi;
    }
    return out;
  }

  XmlNode element() {
    if (cur() != '<') fail("expected element");
    ++pos_;
    XmlNode node;
    node.name = read_name();
    while (true) {
      skip_ws();
      if (peek_starts("/>")) {
        pos_ += 2;
        return node;
      }
      if (cur() == '>') {
        ++pos_;
        break;
      }
      std::string key = read_name();
      skip_ws();
      if (cur() != '=') fail("attribute without value");
      ++pos_;
      skip_ws();
      char quote = cur();
      if (quote != '"' && quote != '\'') fail("unquoted attribute value");
      ++pos_;
      auto end = doc_.find(quote, pos_);
      if (end == std::string_view::npos) fail("unterminated attribute value");
      node.attrs.emplace_back(key,
                              decode_entities(doc_.substr(pos_, end - pos_)));
      pos_ = end + 1;
    }
    // content
    std::string text;
    while (true) {
      if (pos_ >= doc_.size()) fail("unterminated element <" + node.name + ">");
      if (cur() == '<') {
        if (peek_starts("</")) {
          pos_ += 2;
          std::string closing = read_name();
          if (closing != node.name)
            fail("mismatched closing tag </" + closing + ">");
          skip_ws();
          if (cur() != '>') fail("malformed closing tag");
          ++pos_;
          break;
        }
        if (peek_starts("<!") || peek_starts("<?"))
          fail("unsupported markup in element content");
        node.children.push_back(element());
        continue;
      }
      std::size_t start = pos_;
      while (pos_ < doc_.size() && doc_[pos_] != '<') ++pos_;
      text += decode_entities(doc_.substr(start, pos_ - start));
    }
    // trim surrounding whitespace; the protocol has no mixed content
    std::size_t a = text.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) {
      node.text.clear();
    } else {
      std::size_t b = text.find_last_not_of(" \t\r\n");
      node.text = text.substr(a, b - a + 1);
    }
    return node;
  }

  std::string_view doc_;
  std::size_t pos_ = 0;
};

// --- decode helpers ----------------------------------------------------------

[[noreturn]] void bad(std::string_view doc, const std::string& why) {
  throw ProtocolError("bad message: " + why, std::string(doc));
}

std::uint64_t require_message_id(const XmlNode& node, std::string_view doc) {
  auto attr = node.attr("message-id");
  if (!attr) bad(doc, "<" + node.name + "> lacks message-id");
  std::uint64_t value = 0;
  auto [ptr, ec] =
      std::from_chars(attr->data(), attr->data() + attr->size(), value);
  if (ec != std::errc() || ptr != attr->data() + attr->size())
    bad(doc, "message-id is not an unsigned integer: " + *attr);
  return value;
}

const XmlNode& require_child(const XmlNode& node, std::string_view name,
                             std::string_view doc) {
  const XmlNode* c = node.child(name);
  if (!c) bad(doc, "<" + node.name + "> lacks <" + std::string(name) + ">");
  return *c;
}

long long require_int(const XmlNode& node, std::string_view doc) {
  long long value = 0;
  const std::string& t = node.text;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size())
    bad(doc, "<" + node.name + "> is not an integer: " + t);
  return value;
}

double require_double(const XmlNode& node, std::string_view doc) {
  const std::string& t = node.text;
  std::size_t used = 0;
  double value = 0;
  try {
    value = std::stod(t, &used);
  } catch (const std::exception&) {
    bad(doc, "<" + node.name + "> is not a number: " + t);
  }
  if (used != t.size()) bad(doc, "<" + node.name + "> is not a number: " + t);
  return value;
}

RpcMessage decode_hello(const XmlNode& root, std::string_view doc) {
  Hello hello;
  if (auto attr = root.attr("message-id")) {
    std::uint64_t value = 0;
    auto [ptr, ec] =
        std::from_chars(attr->data(), attr->data() + attr->size(), value);
    if (ec != std::errc() || ptr != attr->data() + attr->size())
      bad(doc, "message-id is not an unsigned integer: " + *attr);
    hello.message_id = value;
  }
  if (const XmlNode* caps = root.child("capabilities"))
    for (const auto& c : caps->children)
      if (c.name == "capability") hello.capabilities.push_back(c.text);
  return hello;
}

RpcMessage decode_rpc(const XmlNode& root, std::string_view doc) {
  std::uint64_t id = require_message_id(root, doc);
  if (root.children.size() != 1)
    bad(doc, "<rpc> must carry exactly one operation");
  const XmlNode& op = root.children.front();
  if (op.name == "edit-config") {
    const XmlNode& config = require_child(op, "config", doc);
    const XmlNode& plug = require_child(config, "pluggable", doc);
    EditConfig edit;
    edit.message_id = id;
    edit.port = require_child(plug, "id", doc).text;
    if (edit.port.empty()) bad(doc, "<id> is empty");
    edit.frequency_ghz = static_cast<int>(
        require_int(require_child(plug, "laser-frequency-ghz", doc), doc));
    edit.grid_ghz = static_cast<int>(
        require_int(require_child(plug, "grid-ghz", doc), doc));
    return edit;
  }
  if (op.name == "get-telemetry") {
    GetTelemetry get;
    get.message_id = id;
    if (const XmlNode* port = op.child("port")) get.port = port->text;
    return get;
  }
  bad(doc, "unknown operation <" + op.name + ">");
}

RpcMessage decode_reply(const XmlNode& root, std::string_view doc) {
  std::uint64_t id = require_message_id(root, doc);
  if (root.child("ok")) {
    OkReply ok;
    ok.message_id = id;
    if (const XmlNode* t = root.child("config-time-seconds"))
      ok.config_time_s = require_double(*t, doc);
    return ok;
  }
  if (const XmlNode* err = root.child("rpc-error")) {
    ErrorReply reply;
    reply.message_id = id;
    reply.tag = require_child(*err, "error-tag", doc).text;
    reply.message = require_child(*err, "error-message", doc).text;
    return reply;
  }
  if (const XmlNode* tel = root.child("telemetry")) {
    TelemetryReply reply;
    reply.message_id = id;
    for (const auto& rec : tel->children) {
      if (rec.name != "record") bad(doc, "unknown element <" + rec.name + ">");
      TelemetryRecord r;
      r.whitebox = require_child(rec, "whitebox", doc).text;
      r.port = require_child(rec, "port", doc).text;
      r.frequency_ghz = static_cast<int>(
          require_int(require_child(rec, "laser-frequency-ghz", doc), doc));
      r.config_time_s =
          require_double(require_child(rec, "config-time-seconds", doc), doc);
      const std::string& stamp = require_child(rec, "timestamp", doc).text;
      auto t = parse_iso8601(stamp);
      if (!t) bad(doc, "<timestamp> is not an ISO-8601 instant: " + stamp);
      r.timestamp = *t;
      reply.records.push_back(std::move(r));
    }
    return reply;
  }
  bad(doc, "<rpc-reply> carries no known result");
}

std::string format_seconds(double s) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", s);
  return buf;
}

}  // namespace

std::string escape_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string encode_document(const RpcMessage& message) {
  std::string out;
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Hello>) {
          out = "<hello message-id=\"" + std::to_string(m.message_id) + "\">";
          if (m.capabilities.empty()) {
            out += "<capabilities/>";
          } else {
            out += "<capabilities>";
            for (const auto& cap : m.capabilities)
              out += "<capability>" + escape_text(cap) + "</capability>";
            out += "</capabilities>";
          }
          out += "</hello>";
        } else if constexpr (std::is_same_v<T, EditConfig>) {
          out = "<rpc message-id=\"" + std::to_string(m.message_id) +
                "\"><edit-config><target><running/></target><config>"
                "<pluggable><id>" +
                escape_text(m.port) + "</id><laser-frequency-ghz>" +
                std::to_string(m.frequency_ghz) +
                "</laser-frequency-ghz><grid-ghz>" +
                std::to_string(m.grid_ghz) +
                "</grid-ghz></pluggable></config></edit-config></rpc>";
        } else if constexpr (std::is_same_v<T, GetTelemetry>) {
          out = "<rpc message-id=\"" + std::to_string(m.message_id) + "\">";
          if (m.port)
            out += "<get-telemetry><port>" + escape_text(*m.port) +
                   "</port></get-telemetry>";
          else
            out += "<get-telemetry/>";
          out += "</rpc>";
        } else if constexpr (std::is_same_v<T, OkReply>) {
          out = "<rpc-reply message-id=\"" + std::to_string(m.message_id) +
                "\"><ok/>";
          if (m.config_time_s)
            out += "<config-time-seconds>" + format_seconds(*m.config_time_s) +
                   "</config-time-seconds>";
          out += "</rpc-reply>";
        } else if constexpr (std::is_same_v<T, TelemetryReply>) {
          out = "<rpc-reply message-id=\"" + std::to_string(m.message_id) +
                "\"><telemetry>";
          for (const auto& r : m.records) {
            out += "<record><whitebox>" + escape_text(r.whitebox) +
                   "</whitebox><port>" + escape_text(r.port) + "</port>" +
                   "<laser-frequency-ghz>" + std::to_string(r.frequency_ghz) +
                   "</laser-frequency-ghz><config-time-seconds>" +
                   format_seconds(r.config_time_s) +
                   "</config-time-seconds><timestamp>" +
                   format_iso8601(r.timestamp) + "</timestamp></record>";
          }
          out += "</telemetry></rpc-reply>";
        } else if constexpr (std::is_same_v<T, ErrorReply>) {
          out = "<rpc-reply message-id=\"" + std::to_string(m.message_id) +
                "\"><rpc-error><error-tag>" + escape_text(m.tag) +
                "</error-tag><error-message>" + escape_text(m.message) +
                "</error-message></rpc-error></rpc-reply>";
        }
      },
      message);
  return out;
}

std::string encode(const RpcMessage& message) {
  return encode_document(message) + std::string(kEndOfMessage);
}

RpcMessage decode_document(std::string_view document) {
  XmlNode root = XmlReader(document).parse();
  if (root.name == "hello") return decode_hello(root, document);
  if (root.name == "rpc") return decode_rpc(root, document);
  if (root.name == "rpc-reply") return decode_reply(root, document);
  bad(document, "unknown root element <" + root.name + ">");
}

std::uint64_t message_id_of(const RpcMessage& message) {
  return std::visit([](const auto& m) { return m.message_id; }, message);
}

std::vector<RpcMessage> Decoder::feed(std::string_view bytes) {
  buffer_.append(bytes);
  std::vector<RpcMessage> out;
  std::size_t start = 0;
  while (true) {
    auto end = buffer_.find(kEndOfMessage, start);
    if (end == std::string::npos) break;
    std::string doc = buffer_.substr(start, end - start);
    start = end + kEndOfMessage.size();
    try {
      out.push_back(decode_document(doc));
    } catch (...) {
      buffer_.erase(0, start);  // drop the offending frame before raising
      throw;
    }
  }
  buffer_.erase(0, start);
  if (buffer_.size() > kMaxFrameBytes)
    throw ProtocolError("frame exceeds " + std::to_string(kMaxFrameBytes) +
                            " bytes without end-of-message",
                        buffer_.substr(0, 256));
  return out;
}

}  // namespace lfa::netconf
