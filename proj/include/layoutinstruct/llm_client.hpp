#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "layoutinstruct/random.hpp"
#include "layoutinstruct/templates.hpp"
#include "layoutinstruct/types.hpp"

namespace layoutinstruct {

enum class GenerationTag { ddd, qa_cot, html_gen };
std::string_view to_string(GenerationTag tag);

struct GenerationRequest {
  std::string prompt;
  int max_words_hint = 0;
  double temperature = 0.0;
  GenerationTag tag = GenerationTag::ddd;
};

/// Canonical JSON of a request (fixed field order), the input of request_hash.
std::string canonical_request(const GenerationRequest& req);
/// 64-hex SHA-256 of the canonical request. Keys the response cache.
std::string request_hash(const GenerationRequest& req);
/// 64-hex SHA-256 of the prompt alone. Keys the mock's canned map.
std::string prompt_digest(std::string_view prompt);

class GenerationError : public Error {
 public:
  enum class Kind { auth, exhausted, too_large, bad_response, mock_miss, config };
  GenerationError(Kind kind, const std::string& what)
      : Error("llm-client", "", what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Anything that turns a prompt into text. Implementations must be safe to
/// call from several threads at once.
class TextGenerator {
 public:
  virtual ~TextGenerator() = default;
  virtual std::string complete(const GenerationRequest& req) = 0;
};

/// Deterministic stand-in for the generation service. Responses are looked up
/// by prompt digest; on a miss a strict mock throws, a lenient one returns a
/// fixed placeholder derived from the digest.
class MockClient : public TextGenerator {
 public:
  MockClient(std::map<std::string, std::string> canned, bool strict)
      : canned_(std::move(canned)), strict_(strict) {}

  /// Reads a canned map: JSONL lines {"prompt_sha256": ..., "response": ...}.
  static std::map<std::string, std::string> read_canned(const std::filesystem::path& path);

  std::string complete(const GenerationRequest& req) override;
  std::size_t calls() const { return calls_.load(); }
  std::size_t misses() const { return misses_.load(); }

 private:
  std::map<std::string, std::string> canned_;
  bool strict_;
  std::atomic<std::size_t> calls_{0};
  std::atomic<std::size_t> misses_{0};
};

struct HttpResponse {
  /// 0 when the request never produced an HTTP status (connect/read failure).
  int status = 0;
  std::string body;
  std::string error;
};

using Headers = std::vector<std::pair<std::string, std::string>>;
using Transport =
    std::function<HttpResponse(const std::string& url, const std::string& body, const Headers&)>;
using Sleeper = std::function<void(std::chrono::milliseconds)>;

struct ChatConfig {
  std::string endpoint_url;
  std::string model_name;
  /// Environment variable that holds the bearer token (may be unset for local servers).
  std::string api_key_env = "LLM_API_KEY";
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{1000};
  std::size_t max_response_bytes = 4u << 20;
  std::chrono::seconds timeout{120};
};

/// POSTs `body` to `url` with cpp-httplib (http and https).
Transport make_http_transport(std::chrono::seconds timeout);

/// Chat-completion client: request {model, messages:[{role, content}],
/// temperature}; the reply text is choices[0].message.content. Transient
/// failures (no status, 408, 429, 5xx) are retried with exponential backoff
/// (1s, 2s, 4s by default); 401/403 fail immediately.
class ChatCompletionClient : public TextGenerator {
 public:
  explicit ChatCompletionClient(ChatConfig config, Transport transport = {},
                                Sleeper sleeper = {});

  std::string complete(const GenerationRequest& req) override;
  std::size_t requests_sent() const { return sent_.load(); }

  static std::string request_body(const std::string& model, const GenerationRequest& req);
  static std::string parse_content(const std::string& body);

 private:
  ChatConfig config_;
  Transport transport_;
  Sleeper sleeper_;
  std::atomic<std::size_t> sent_{0};
};

/// Append-only response cache in `<cache_dir>/cache.jsonl`, one line
/// {"request_hash","response","timestamp"} per entry. A hit never reaches the
/// wrapped generator; concurrent misses on one hash are serialized per shard.
class CachedClient : public TextGenerator {
 public:
  CachedClient(TextGenerator& inner, std::filesystem::path cache_dir);

  std::string complete(const GenerationRequest& req) override;

  std::size_t hits() const { return hits_.load(); }
  std::size_t misses() const { return misses_.load(); }
  std::size_t corrupt_lines() const { return corrupt_; }
  std::filesystem::path cache_file() const { return file_; }

 private:
  bool lookup(const std::string& hash, std::string* out) const;
  void append(const std::string& hash, const std::string& response);

  TextGenerator& inner_;
  std::filesystem::path file_;
  mutable std::shared_mutex map_mutex_;
  std::unordered_map<std::string, std::string> entries_;
  std::array<std::mutex, 16> shard_mutexes_;
  std::mutex file_mutex_;
  std::size_t corrupt_ = 0;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
};

/// Fills prompt `template_id` from the bank; unresolved placeholders throw.
std::string render_prompt(const TemplateBank& bank, std::string_view template_id,
                          const Bindings& bindings);

/// Prompt for free HTML generation: a document type drawn from the
/// `doc_types` list plus an image/caption pair from a local fixture list.
std::string render_html_gen_prompt(const TemplateBank& bank, Rng& rng,
                                   const std::vector<std::pair<std::string, std::string>>& images);

}  // namespace layoutinstruct
