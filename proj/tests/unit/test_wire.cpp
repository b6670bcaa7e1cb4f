#include <gtest/gtest.h>

#include <atomic>
#include <random>
#include <thread>

#include "bimtwin/bim/scenario_io.hpp"
#include "bimtwin/scenarios/scenarios.hpp"
#include "bimtwin/service/wire.hpp"
#include "bimtwin/workflow/event_log.hpp"

using namespace bimtwin;
using namespace bimtwin::service;
using nlohmann::json;

namespace {

json random_value(std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> kind(0, depth > 2 ? 4 : 6);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  switch (kind(rng)) {
    case 0: return nullptr;
    case 1: return rng() % 2 == 0;
    case 2: return static_cast<std::int64_t>(rng() % 100000) - 50000;
    case 3: return u(rng);
    case 4: {
      std::string s;
      for (int i = rng() % 12; i > 0; --i) s.push_back(static_cast<char>(' ' + rng() % 94));
      return s;
    }
    case 5: {
      json a = json::array();
      for (int i = rng() % 4; i > 0; --i) a.push_back(random_value(rng, depth + 1));
      return a;
    }
    default: {
      json o = json::object();
      for (int i = rng() % 4; i > 0; --i) o["k" + std::to_string(rng() % 50)] = random_value(rng, depth + 1);
      return o;
    }
  }
}

WireMessage random_message(std::mt19937_64& rng) {
  WireMessage m;
  m.type = static_cast<WireType>(rng() % 4);
  m.seq = rng();
  m.session_id = "s" + std::to_string(rng() % 1000);
  m.schema_version = static_cast<int>(rng() % 3);
  switch (m.type) {
    case WireType::Event: {
      workflow::LogEntry e;
      e.seq = rng() % 1000;
      e.time = std::uniform_real_distribution<double>(0, 500)(rng);
      e.step = rng() % 5000;
      e.type = "TargetProposed";
      e.payload = json{{"target_id", "block1"}, {"extra", random_value(rng, 0)}};
      m.payload = e.to_json();
      break;
    }
    case WireType::Command: {
      workflow::Command c;
      c.kind = static_cast<workflow::CommandKind>(rng() % 12);
      c.target_id = "block0";
      if (c.kind == workflow::CommandKind::AdjustPose) {
        c.pose = Posed{Vector3d(0.1, 0.2, 0.3), Quaterniond::Identity()};
      }
      c.decision_seconds = 0.5 * static_cast<double>(rng() % 8);
      m.payload = c.to_json();
      break;
    }
    case WireType::Ack:
      m.payload = json{{"in_reply_to", rng() % 100}, {"accepted", rng() % 2 == 0}};
      break;
    case WireType::Error:
      m.payload = json{{"code", "malformed"}, {"message", random_value(rng, 3)}, {"in_reply_to", nullptr}};
      break;
  }
  return m;
}

std::string frame(std::uint64_t seq, json payload, const std::string& session = "t1",
                  int version = kWireSchemaVersion, const std::string& type = "command") {
  return json{{"type", type},
              {"seq", seq},
              {"session_id", session},
              {"schema_version", version},
              {"payload", std::move(payload)}}
      .dump();
}

json quiet_blocks() {
  scenarios::BlocksOptions o;
  o.sigma_translation = 0;
  o.sigma_rotation = 0;
  return scenarios::make_blocks_scenario(o);
}

struct Inbox {
  std::vector<WireMessage> frames;
  Hub::Sink sink() {
    return [this](const std::string& f) { frames.push_back(WireMessage::parse(f)); };
  }
  std::vector<WireMessage> of(WireType t) const {
    std::vector<WireMessage> out;
    for (const auto& f : frames) {
      if (f.type == t) out.push_back(f);
    }
    return out;
  }
};

}  // namespace

TEST(WireMessage, RoundTripProperty) {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 2000; ++i) {
    const WireMessage m = random_message(rng);
    const WireMessage back = WireMessage::parse(m.serialize());
    ASSERT_EQ(back, m) << m.serialize();
    EXPECT_EQ(back.serialize(), m.serialize());
  }
}

TEST(WireMessage, RejectsUnknownTypeAndMissingFields) {
  EXPECT_THROW(WireMessage::parse(frame(1, json::object(), "t1", 1, "gossip")), ParseError);
  EXPECT_THROW(WireMessage::parse("{\"type\":\"event\"}"), ParseError);
  EXPECT_THROW(WireMessage::parse("[1,2]"), ParseError);
  EXPECT_THROW(WireMessage::parse("{not json"), ParseError);
  for (auto t : {WireType::Event, WireType::Command, WireType::Ack, WireType::Error}) {
    EXPECT_EQ(wire_type_from_string(to_string(t)), t);
  }
}

TEST(Hub, HelloThenCatchUpThenLiveTail) {
  Hub hub(quiet_blocks(), {}, "t1");
  hub.advance(1000);
  Inbox a;
  hub.attach(a.sink());
  ASSERT_FALSE(a.frames.empty());
  EXPECT_EQ(a.frames[0].type, WireType::Ack);
  EXPECT_TRUE(a.frames[0].payload.at("hello").get<bool>());
  EXPECT_EQ(a.frames[0].payload.at("schema_versions"), json::array({kWireSchemaVersion}));
  const auto caught = a.of(WireType::Event).size();
  EXPECT_EQ(caught, a.frames[0].payload.at("catch_up").get<std::size_t>());
  EXPECT_GT(caught, 0u);

  hub.receive(1, frame(1, json{{"type", "ConfirmTarget"}}));
  hub.advance(1000);
  const auto events = a.of(WireType::Event);
  EXPECT_GT(events.size(), caught);
  for (std::size_t i = 0; i < events.size(); ++i) {
    EXPECT_EQ(events[i].payload.at("seq"), i + 1);
  }
  for (std::size_t i = 1; i < a.frames.size(); ++i) {
    EXPECT_EQ(a.frames[i].seq, a.frames[i - 1].seq + 1);
    EXPECT_EQ(a.frames[i].session_id, "t1");
  }
  const auto log = workflow::parse_log_text(hub.log_document());
  EXPECT_EQ(events.size(), log.entries.size());
}

TEST(Hub, TwoObserversSeeIdenticalEvents) {
  Hub hub(quiet_blocks(), {}, "t1", workflow::AutoApprove{});
  Inbox a, b;
  hub.attach(a.sink());
  hub.advance(3);
  hub.attach(b.sink());  // joins mid-session
  while (hub.advance(50) > 0) {
  }
  EXPECT_EQ(hub.state(), workflow::State::TaskComplete);
  const auto ea = a.of(WireType::Event), eb = b.of(WireType::Event);
  ASSERT_EQ(ea.size(), eb.size());
  for (std::size_t i = 0; i < ea.size(); ++i) EXPECT_EQ(ea[i].payload, eb[i].payload);
}

TEST(Hub, BadFramesGetErrorsAndLeaveTheSessionAlone) {
  Hub hub(quiet_blocks(), {}, "t1");
  hub.advance(100);
  Inbox a;
  const auto id = hub.attach(a.sink());
  const auto state = hub.state();
  const auto log_before = hub.log_document();

  auto last_error = [&] {
    const auto errs = a.of(WireType::Error);
    return errs.empty() ? std::string() : errs.back().payload.at("code").get<std::string>();
  };
  hub.receive(id, "{{{");
  EXPECT_EQ(last_error(), "malformed");
  hub.receive(id, frame(1, json{{"type", "ConfirmTarget"}}, "t1", 1, "gossip"));
  EXPECT_EQ(last_error(), "malformed");
  hub.receive(id, frame(1, json{{"type", "ConfirmTarget"}}, "t1", 9));
  EXPECT_EQ(last_error(), "unsupported-version");
  hub.receive(id, frame(1, json{{"type", "ConfirmTarget"}}, "other"));
  EXPECT_EQ(last_error(), "wrong-session");
  hub.receive(id, frame(1, json{{"type", "ConfirmTarget"}}, "t1", 1, "ack"));
  EXPECT_EQ(last_error(), "unexpected-type");
  hub.receive(id, frame(1, json{{"type", "Dance"}}));
  EXPECT_EQ(last_error(), "malformed");
  EXPECT_EQ(hub.state(), state);
  EXPECT_EQ(hub.log_document(), log_before);

  hub.receive(id, frame(2, json{{"type", "ApprovePlan"}}));
  EXPECT_EQ(last_error(), "illegal");
  EXPECT_EQ(hub.state(), state);

  hub.receive(id, frame(2, json{{"type", "ConfirmTarget"}}));
  EXPECT_EQ(last_error(), "stale-seq");
  EXPECT_EQ(hub.state(), state);

  hub.receive(id, frame(3, json{{"type", "ConfirmTarget"}}));
  const auto acks = a.of(WireType::Ack);
  EXPECT_EQ(acks.back().payload.at("in_reply_to"), 3);
  EXPECT_TRUE(acks.back().payload.at("accepted").get<bool>());
  EXPECT_EQ(hub.state(), workflow::State::DeviationAnalysis);
}

TEST(Hub, SafetyInterruptOverTheWire) {
  Hub hub(quiet_blocks(), {}, "t1");
  Inbox a;
  const auto id = hub.attach(a.sink());
  std::uint64_t seq = 0;
  hub.receive(id, frame(++seq, json{{"type", "SafetyInterrupt"}}));
  EXPECT_EQ(a.of(WireType::Error).back().payload.at("code"), "illegal");
  hub.advance(100);
  hub.receive(id, frame(++seq, json{{"type", "ConfirmTarget"}}));
  hub.advance(100);
  hub.receive(id, frame(++seq, json{{"type", "ApprovePlan"}}));
  hub.advance(3);
  ASSERT_EQ(hub.state(), workflow::State::Executing);
  hub.receive(id, frame(++seq, json{{"type", "SafetyInterrupt"}}));
  EXPECT_EQ(hub.state(), workflow::State::SafetyHold);
  EXPECT_EQ(hub.advance(10), 0u);
}

TEST(Hub, ConcurrentAttachNeverDropsOrRepeats) {
  Hub hub(quiet_blocks(), {}, "t1", workflow::AutoApprove{});
  std::atomic<bool> done{false};
  std::thread driver([&] {
    while (hub.advance(5) > 0) {
    }
    done = true;
  });
  std::vector<std::unique_ptr<Inbox>> inboxes;
  while (!done) {
    inboxes.push_back(std::make_unique<Inbox>());
    hub.attach(inboxes.back()->sink());
    std::this_thread::yield();
    if (inboxes.size() > 50) break;
  }
  driver.join();
  const auto total = workflow::parse_log_text(hub.log_document()).entries.size();
  for (const auto& in : inboxes) {
    const auto ev = in->of(WireType::Event);
    ASSERT_EQ(ev.size(), total);
    for (std::size_t i = 0; i < ev.size(); ++i) ASSERT_EQ(ev[i].payload.at("seq"), i + 1);
  }
}

TEST(Hub, ScenarioDocumentLoadsAndTracksProgress) {
  Hub hub(quiet_blocks(), {}, "t1", workflow::AutoApprove{});
  const auto before = bim::load_scenario(hub.scenario_document());
  EXPECT_EQ(before.as_built_records().size(), 0u);
  EXPECT_TRUE(before.find("block0"));
  while (hub.advance(100) > 0) {
  }
  const auto after = bim::load_scenario(hub.scenario_document());
  EXPECT_EQ(after.as_built_records().size(), 4u);
  EXPECT_EQ(after.stack("block_stack").quantity, 0);
}
