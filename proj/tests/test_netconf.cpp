#include <doctest.h>

#include <random>
#include <string>
#include <variant>
#include <vector>

#include "lfa/netconf.hpp"
#include "lfa/simtime.hpp"

using namespace lfa;
using namespace lfa::netconf;

namespace {

std::vector<RpcMessage> sample_messages() {
  Hello hello;
  hello.message_id = 1;
  hello.capabilities = {std::string(kBaseCapability), "urn:example:extra"};

  EditConfig edit;
  edit.message_id = 2;
  edit.port = "Ethernet0";
  edit.frequency_ghz = 192500;
  edit.grid_ghz = 100;

  GetTelemetry get_all;
  get_all.message_id = 3;
  GetTelemetry get_port;
  get_port.message_id = 4;
  get_port.port = "Ethernet4";

  OkReply ok_bare;
  ok_bare.message_id = 5;
  OkReply ok_time;
  ok_time.message_id = 6;
  ok_time.config_time_s = 3.513673;

  TelemetryReply telemetry;
  telemetry.message_id = 7;
  telemetry.records.push_back(TelemetryRecord{
      "wb0", "Ethernet0", 192500, 3.513673, default_sim_epoch()});
  telemetry.records.push_back(TelemetryRecord{
      "wb1", "Ethernet4", 191300, 4.34, default_sim_epoch() + 123456});

  ErrorReply error;
  error.message_id = 8;
  error.tag = "invalid-value";
  error.message = "frequency 192550 GHz is off-grid";

  return {hello,   edit,      get_all, get_port,
          ok_bare, ok_time,   telemetry, error};
}

}  // namespace

TEST_CASE("netconf: ok reply bytes match the published form") {
  OkReply ok;
  ok.message_id = 1;
  ok.config_time_s = 3.513673;
  CHECK(encode_document(ok) ==
        "<rpc-reply message-id=\"1\"><ok/>"
        "<config-time-seconds>3.513673</config-time-seconds></rpc-reply>");
  CHECK(encode(ok) == encode_document(ok) + std::string(kEndOfMessage));
}

TEST_CASE("netconf: edit-config carries the full element vocabulary") {
  EditConfig edit;
  edit.message_id = 1;
  edit.port = "Ethernet0";
  edit.frequency_ghz = 192500;
  std::string doc = encode_document(edit);
  for (const char* element :
       {"<rpc message-id=\"1\">", "<edit-config>", "<target><running/></target>",
        "<config>", "<pluggable>", "<id>Ethernet0</id>",
        "<laser-frequency-ghz>192500</laser-frequency-ghz>",
        "<grid-ghz>100</grid-ghz>"}) {
    CHECK(doc.find(element) != std::string::npos);
  }
}

TEST_CASE("netconf: whitespace between elements is insignificant") {
  std::string pretty =
      "<rpc message-id=\"1\">\n"
      "  <edit-config>\n"
      "    <target><running/></target>\n"
      "    <config>\n"
      "      <pluggable>\n"
      "        <id>Ethernet0</id>\n"
      "        <laser-frequency-ghz>192500</laser-frequency-ghz>\n"
      "        <grid-ghz>100</grid-ghz>\n"
      "      </pluggable>\n"
      "    </config>\n"
      "  </edit-config>\n"
      "</rpc>";
  auto message = decode_document(pretty);
  auto* edit = std::get_if<EditConfig>(&message);
  REQUIRE(edit != nullptr);
  CHECK(edit->message_id == 1);
  CHECK(edit->port == "Ethernet0");
  CHECK(edit->frequency_ghz == 192500);
  CHECK(edit->grid_ghz == 100);
}

TEST_CASE("netconf: decode inverts encode for every variant") {
  for (const RpcMessage& message : sample_messages()) {
    auto back = decode_document(encode_document(message));
    CHECK(back == message);
  }
}

TEST_CASE("netconf: feedback survives the wire to 6 decimals") {
  for (double t : {3.513673, 0.000001, 4.34, 12.000007}) {
    OkReply ok;
    ok.message_id = 1;
    ok.config_time_s = t;
    auto back = std::get<OkReply>(decode_document(encode_document(ok)));
    REQUIRE(back.config_time_s.has_value());
    CHECK(*back.config_time_s == doctest::Approx(t).epsilon(1e-9));
  }
}

TEST_CASE("netconf: special characters are escaped and recovered") {
  ErrorReply error;
  error.message_id = 9;
  error.tag = "operation-failed";
  error.message = "a < b && \"c\" > 'd'";
  auto back = std::get<ErrorReply>(decode_document(encode_document(error)));
  CHECK(back.message == error.message);
  CHECK(escape_text("<&>") == "&lt;&amp;&gt;");
}

TEST_CASE("netconf: two concatenated frames decode to two messages") {
  auto messages = sample_messages();
  Decoder decoder;
  auto out = decoder.feed(encode(messages[0]) + encode(messages[1]));
  REQUIRE(out.size() == 2);
  CHECK(out[0] == messages[0]);
  CHECK(out[1] == messages[1]);
  CHECK(decoder.idle());
}

TEST_CASE("netconf: framing is chunking-independent") {
  auto messages = sample_messages();
  std::string stream;
  for (const auto& m : messages) stream += encode(m);

  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    Decoder decoder;
    std::vector<RpcMessage> out;
    std::size_t at = 0;
    while (at < stream.size()) {
      std::size_t len = 1 + rng() % 97;
      len = std::min(len, stream.size() - at);
      auto batch = decoder.feed(std::string_view(stream).substr(at, len));
      out.insert(out.end(), batch.begin(), batch.end());
      at += len;
    }
    REQUIRE(out.size() == messages.size());
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == messages[i]);
    CHECK(decoder.idle());
  }
}

TEST_CASE("netconf: partial frames wait for their delimiter") {
  OkReply ok;
  ok.message_id = 2;
  std::string frame = encode(ok);
  Decoder decoder;
  CHECK(decoder.feed(frame.substr(0, frame.size() - 3)).empty());
  CHECK(!decoder.idle());
  auto out = decoder.feed(frame.substr(frame.size() - 3));
  REQUIRE(out.size() == 1);
  CHECK(out[0] == RpcMessage(ok));
}

TEST_CASE("netconf: unknown and malformed documents raise ProtocolError") {
  CHECK_THROWS_AS(decode_document("<rpc message-id=\"2\"><unknown/></rpc>"),
                  ProtocolError);
  CHECK_THROWS_AS(decode_document("not xml at all"), ProtocolError);
  CHECK_THROWS_AS(decode_document("<rpc message-id=\"2\">"), ProtocolError);
  CHECK_THROWS_AS(decode_document("<rpc><edit-config/></rpc>"), ProtocolError);
  try {
    decode_document("<rpc message-id=\"2\"><unknown/></rpc>");
    FAIL("expected ProtocolError");
  } catch (const ProtocolError& e) {
    CHECK(e.document().find("<unknown/>") != std::string::npos);
  }
}

TEST_CASE("netconf: a bad frame is dropped, later frames still decode") {
  OkReply ok;
  ok.message_id = 3;
  Decoder decoder;
  std::string bad = "<garbage]]>]]>";
  CHECK_THROWS_AS(decoder.feed(bad + encode(ok)), ProtocolError);
  auto out = decoder.feed("");
  REQUIRE(out.size() == 1);
  CHECK(out[0] == RpcMessage(ok));
}

TEST_CASE("netconf: unbounded frames are rejected") {
  Decoder decoder;
  std::string big(1 << 19, 'x');
  CHECK(decoder.feed(big).empty());  // half the cap: still waiting
  CHECK_THROWS_AS(decoder.feed(big + big), ProtocolError);
}

TEST_CASE("netconf: message ids are preserved verbatim") {
  for (const RpcMessage& m : sample_messages()) {
    CHECK(message_id_of(decode_document(encode_document(m))) ==
          message_id_of(m));
  }
}
