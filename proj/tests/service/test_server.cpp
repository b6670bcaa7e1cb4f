#include <gtest/gtest.h>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "bimtwin/bim/scenario_io.hpp"
#include "bimtwin/scenarios/scenarios.hpp"
#include "bimtwin/service/server.hpp"
#include "bimtwin/workflow/event_log.hpp"

using namespace bimtwin;
using namespace bimtwin::service;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using nlohmann::json;

namespace {

json quiet_blocks() {
  scenarios::BlocksOptions o;
  o.sigma_translation = 0;
  o.sigma_rotation = 0;
  return scenarios::make_blocks_scenario(o);
}

http::response<http::string_body> get(unsigned short port, const std::string& target) {
  net::io_context io;
  beast::tcp_stream stream(io);
  stream.connect(tcp::endpoint(net::ip::make_address("127.0.0.1"), port));
  http::request<http::empty_body> req{http::verb::get, target, 11};
  req.set(http::field::host, "127.0.0.1");
  http::write(stream, req);
  beast::flat_buffer buf;
  http::response<http::string_body> res;
  http::read(stream, buf, res);
  beast::error_code ec;
  stream.socket().shutdown(tcp::socket::shutdown_both, ec);
  return res;
}

struct Client {
  net::io_context io;
  websocket::stream<tcp::socket> ws{io};
  std::uint64_t seq = 0;

  explicit Client(unsigned short port) {
    ws.next_layer().connect(tcp::endpoint(net::ip::make_address("127.0.0.1"), port));
    ws.handshake("127.0.0.1", "/stream");
    ws.text(true);
  }
  WireMessage next() {
    beast::flat_buffer buf;
    ws.read(buf);
    return WireMessage::parse(beast::buffers_to_string(buf.data()));
  }
  void send(json payload, const std::string& session = "srv") {
    WireMessage m;
    m.type = WireType::Command;
    m.seq = ++seq;
    m.session_id = session;
    m.payload = std::move(payload);
    ws.write(net::buffer(m.serialize()));
  }
  void send_raw(const std::string& text) { ws.write(net::buffer(text)); }
  // Reads until a frame of the given type arrives; events are collected.
  WireMessage until(WireType t, std::vector<WireMessage>* events = nullptr) {
    for (;;) {
      auto m = next();
      if (m.type == t) return m;
      if (events && m.type == WireType::Event) events->push_back(m);
    }
  }
  // Reads events until one with the given event type.
  std::vector<WireMessage> until_event(const std::string& type) {
    std::vector<WireMessage> seen;
    for (;;) {
      auto m = next();
      if (m.type != WireType::Event) continue;
      seen.push_back(m);
      if (m.payload.at("type") == type) return seen;
    }
  }
};

}  // namespace

TEST(Server, ServesScenarioHealthAndNotFound) {
  Hub hub(quiet_blocks(), {}, "srv");
  Server server(hub, {});
  server.start();
  const auto res = get(server.port(), "/scenario");
  EXPECT_EQ(res.result(), http::status::ok);
  const auto repo = bim::load_scenario(res.body());
  EXPECT_TRUE(repo.find("stud"));
  EXPECT_EQ(repo.stack("block_stack").quantity, 4);
  EXPECT_EQ(json::parse(get(server.port(), "/health").body()).at("session_id"), "srv");
  EXPECT_EQ(get(server.port(), "/nope").result(), http::status::not_found);
  server.stop();
}

TEST(Server, StreamCarriesTheWholeTask) {
  Hub hub(quiet_blocks(), {}, "srv");
  Server server(hub, {});
  server.start();
  Client a(server.port());
  const auto hello = a.next();
  ASSERT_EQ(hello.type, WireType::Ack);
  EXPECT_EQ(hello.session_id, "srv");
  EXPECT_EQ(hello.payload.at("schema_versions"), json::array({kWireSchemaVersion}));

  std::vector<WireMessage> events = a.until_event("TargetProposed");
  a.send_raw("not a frame");
  EXPECT_EQ(a.until(WireType::Error, &events).payload.at("code"), "malformed");
  a.send(json{{"type", "ConfirmTarget"}});

  // Confirm and approve every target as the UI would.
  int approvals = 0;
  for (;;) {
    auto m = a.next();
    if (m.type != WireType::Event) continue;
    events.push_back(m);
    const auto& type = m.payload.at("type");
    if (type == "TargetProposed") a.send(json{{"type", "ConfirmTarget"}});
    if (type == "PlanReady") {
      a.send(json{{"type", "RequestPreview"}});
      a.send(json{{"type", "ApprovePlan"}});
      ++approvals;
    }
    if (type == "TaskFinished") break;
  }
  EXPECT_EQ(approvals, 4);
  EXPECT_EQ(hub.state(), workflow::State::TaskComplete);

  // A late observer catches up on exactly the same events.
  Client b(server.port());
  const auto hello_b = b.next();
  const auto n = hello_b.payload.at("catch_up").get<std::size_t>();
  std::vector<WireMessage> replayed;
  for (std::size_t i = 0; i < n; ++i) replayed.push_back(b.next());
  const auto log = workflow::parse_log_text(get(server.port(), "/log").body());
  ASSERT_EQ(replayed.size(), log.entries.size());
  for (std::size_t i = 0; i < n; ++i) {
    EXPECT_EQ(replayed[i].payload, log.entries[i].to_json());
  }
  ASSERT_LE(events.size(), replayed.size());
  for (std::size_t i = 0; i < events.size(); ++i) EXPECT_EQ(events[i].payload, replayed[i].payload);

  const workflow::Session again = workflow::replay(log);
  EXPECT_EQ(bim::export_checkpoint(again.repo()), get(server.port(), "/scenario").body());
  server.stop();
}

TEST(Server, StopIsIdempotentAndClosesClients) {
  Hub hub(quiet_blocks(), {}, "srv");
  Server server(hub, {});
  server.start();
  Client a(server.port());
  a.next();
  server.stop();
  server.stop();
  beast::flat_buffer buf;
  beast::error_code ec;
  for (int i = 0; i < 1000 && !ec; ++i) a.ws.read(buf, ec);
  EXPECT_TRUE(ec);
}
