#include <gtest/gtest.h>

#include <fstream>
#include <mutex>
#include <thread>

#include "httplib.h"
#include "layoutinstruct/json_io.hpp"
#include "layoutinstruct/llm_client.hpp"
#include "layoutinstruct/parallel.hpp"
#include "support.hpp"

using namespace layoutinstruct;
using namespace std::chrono_literals;

namespace {

GenerationRequest req(std::string prompt) {
  GenerationRequest r;
  r.prompt = std::move(prompt);
  r.tag = GenerationTag::qa_cot;
  return r;
}

std::string ok_body(const std::string& content) {
  Json msg = Json::object();
  msg["role"] = "assistant";
  msg["content"] = content;
  Json choice = Json::object();
  choice["message"] = msg;
  Json body = Json::object();
  body["choices"] = Json::array({choice});
  return body.dump();
}

/// Transport that replays a fixed status sequence, then succeeds.
struct ScriptedTransport {
  explicit ScriptedTransport(std::vector<int> s) : statuses(std::move(s)) {}
  std::vector<int> statuses;
  std::size_t calls = 0;
  std::string last_body;
  Headers last_headers;
  HttpResponse operator()(const std::string&, const std::string& body, const Headers& h) {
    last_body = body;
    last_headers = h;
    int status = calls < statuses.size() ? statuses[calls] : 200;
    ++calls;
    if (status == 200) return {200, ok_body("fine"), {}};
    return {status, "nope", status == 0 ? "connection refused" : ""};
  }
};

class CountingGenerator : public TextGenerator {
 public:
  std::string complete(const GenerationRequest& r) override {
    ++calls;
    std::this_thread::sleep_for(1ms);
    return "reply to " + r.prompt;
  }
  std::atomic<int> calls{0};
};

ChatConfig config() {
  ChatConfig c;
  c.endpoint_url = "http://127.0.0.1:1/v1/chat/completions";
  c.model_name = "m";
  return c;
}

}  // namespace

TEST(RequestHash, CoversAllFields) {
  auto a = req("p");
  auto b = a;
  EXPECT_EQ(request_hash(a), request_hash(b));
  EXPECT_EQ(request_hash(a).size(), 64u);
  b.temperature = 0.5;
  EXPECT_NE(request_hash(a), request_hash(b));
  b = a;
  b.tag = GenerationTag::ddd;
  EXPECT_NE(request_hash(a), request_hash(b));
  b = a;
  b.max_words_hint = 500;
  EXPECT_NE(request_hash(a), request_hash(b));
  EXPECT_EQ(prompt_digest("abc"), sha256_hex("abc"));
}

TEST(Mock, HitMissAndStrict) {
  std::map<std::string, std::string> canned{{prompt_digest("hello"), "world"}};
  MockClient lenient(canned, false), strict(canned, true);
  EXPECT_EQ(lenient.complete(req("hello")), "world");
  auto miss = lenient.complete(req("other"));
  EXPECT_EQ(miss, lenient.complete(req("other")));
  EXPECT_EQ(miss.rfind("[mock response ", 0), 0u);
  EXPECT_EQ(lenient.misses(), 2u);
  try {
    strict.complete(req("other"));
    FAIL();
  } catch (const GenerationError& e) {
    EXPECT_EQ(e.kind(), GenerationError::Kind::mock_miss);
  }
  EXPECT_THROW(lenient.complete(req("")), GenerationError);
}

TEST(Mock, ReadsCannedFile) {
  auto dir = lit::scratch_dir("canned");
  std::ofstream(dir / "c.jsonl") << lit::canned_jsonl({{prompt_digest("q"), "a\nb"}});
  auto canned = MockClient::read_canned(dir / "c.jsonl");
  MockClient mock(canned, true);
  EXPECT_EQ(mock.complete(req("q")), "a\nb");
}

TEST(Chat, RequestBodyAndParse) {
  auto body = Json::parse(ChatCompletionClient::request_body("model-x", req("hi \"there\"")));
  EXPECT_EQ(body["model"], "model-x");
  EXPECT_EQ(body["messages"][0]["role"], "user");
  EXPECT_EQ(body["messages"][0]["content"], "hi \"there\"");
  EXPECT_EQ(body["temperature"], 0.0);
  EXPECT_EQ(ChatCompletionClient::parse_content(ok_body("ok")), "ok");
  EXPECT_THROW(ChatCompletionClient::parse_content("{\"choices\":[]}"), GenerationError);
  EXPECT_THROW(ChatCompletionClient::parse_content("<html>"), GenerationError);
}

TEST(Chat, RetriesWithDoublingBackoffThenGivesUp) {
  ScriptedTransport script({503, 503, 503, 503});
  std::vector<std::chrono::milliseconds> slept;
  ChatCompletionClient client(config(), std::ref(script),
                              [&](std::chrono::milliseconds d) { slept.push_back(d); });
  try {
    client.complete(req("p"));
    FAIL();
  } catch (const GenerationError& e) {
    EXPECT_EQ(e.kind(), GenerationError::Kind::exhausted);
  }
  EXPECT_EQ(script.calls, 4u);
  EXPECT_EQ(slept, (std::vector<std::chrono::milliseconds>{1000ms, 2000ms, 4000ms}));
}

TEST(Chat, RecoversFromTransientFailures) {
  ScriptedTransport script({0, 429, 500});
  std::vector<std::chrono::milliseconds> slept;
  ChatCompletionClient client(config(), std::ref(script),
                              [&](std::chrono::milliseconds d) { slept.push_back(d); });
  EXPECT_EQ(client.complete(req("p")), "fine");
  EXPECT_EQ(script.calls, 4u);
  EXPECT_EQ(slept.size(), 3u);
}

TEST(Chat, AuthAndClientErrorsAreNotRetried) {
  for (int status : {401, 403, 400}) {
    ScriptedTransport script({status});
    ChatCompletionClient client(config(), std::ref(script), [](auto) {});
    try {
      client.complete(req("p"));
      FAIL();
    } catch (const GenerationError& e) {
      EXPECT_EQ(e.kind(), status == 400 ? GenerationError::Kind::bad_response
                                        : GenerationError::Kind::auth);
    }
    EXPECT_EQ(script.calls, 1u);
  }
}

TEST(Chat, OversizedResponseRejected) {
  ChatConfig c = config();
  c.max_response_bytes = 10;
  ChatCompletionClient client(
      c, [](const std::string&, const std::string&, const Headers&) {
        return HttpResponse{200, ok_body("this is much longer than ten bytes"), {}};
      });
  try {
    client.complete(req("p"));
    FAIL();
  } catch (const GenerationError& e) {
    EXPECT_EQ(e.kind(), GenerationError::Kind::too_large);
  }
}

TEST(Chat, MissingEndpointIsConfigError) {
  ChatConfig c;
  EXPECT_THROW(ChatCompletionClient client(c), GenerationError);
}

TEST(Chat, TalksHttpToLocalServer) {
  httplib::Server server;
  std::mutex m;
  std::string seen_body, seen_auth;
  server.Post("/v1/chat/completions", [&](const httplib::Request& r, httplib::Response& res) {
    std::lock_guard lock(m);
    seen_body = r.body;
    seen_auth = r.get_header_value("Authorization");
    res.set_content(ok_body("served"), "application/json");
  });
  int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  ::setenv("LAYOUTINSTRUCT_TEST_KEY", "sekrit", 1);
  ChatConfig c;
  c.endpoint_url = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  c.model_name = "local";
  c.api_key_env = "LAYOUTINSTRUCT_TEST_KEY";
  c.timeout = std::chrono::seconds(5);
  ChatCompletionClient client(c);
  EXPECT_EQ(client.complete(req("ping")), "served");
  server.stop();
  t.join();
  EXPECT_EQ(seen_auth, "Bearer sekrit");
  EXPECT_EQ(Json::parse(seen_body)["messages"][0]["content"], "ping");
}

TEST(Cache, HitSkipsInnerAndPersists) {
  auto dir = lit::scratch_dir("cache");
  CountingGenerator inner;
  {
    CachedClient cache(inner, dir);
    EXPECT_EQ(cache.complete(req("a")), "reply to a");
    EXPECT_EQ(cache.complete(req("a")), "reply to a");
    EXPECT_EQ(inner.calls, 1);
    EXPECT_EQ(cache.hits(), 1u);
  }
  CachedClient reopened(inner, dir);
  EXPECT_EQ(reopened.complete(req("a")), "reply to a");
  EXPECT_EQ(inner.calls, 1);
}

TEST(Cache, CorruptLinesAreSkipped) {
  auto dir = lit::scratch_dir("cache-corrupt");
  CountingGenerator inner;
  {
    CachedClient cache(inner, dir);
    cache.complete(req("a"));
  }
  {
    std::ofstream out(dir / "cache.jsonl", std::ios::app);
    out << "{truncated\n" << R"({"request_hash":"short","response":"x"})" << "\n";
  }
  CachedClient cache(inner, dir);
  EXPECT_EQ(cache.corrupt_lines(), 2u);
  cache.complete(req("a"));
  EXPECT_EQ(inner.calls, 1);
}

TEST(Cache, ConcurrentMissesCallInnerOncePerRequest) {
  auto dir = lit::scratch_dir("cache-par");
  CountingGenerator inner;
  CachedClient cache(inner, dir);
  std::vector<std::string> out(64);
  parallel_for(out.size(), 8, [&](std::size_t i) { out[i] = cache.complete(req("p" + std::to_string(i % 8))); });
  EXPECT_EQ(inner.calls, 8);
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i], "reply to p" + std::to_string(i % 8));
  EXPECT_EQ(read_lines(cache.cache_file()).size(), 8u);
}
