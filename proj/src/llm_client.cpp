#include "layoutinstruct/llm_client.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cstdlib>
#include <ctime>
#include <thread>

#include "httplib.h"
#include "layoutinstruct/json_io.hpp"
#include "layoutinstruct/text.hpp"

#include <spdlog/spdlog.h>

namespace layoutinstruct {

std::string_view to_string(GenerationTag tag) {
  switch (tag) {
    case GenerationTag::ddd: return "ddd";
    case GenerationTag::qa_cot: return "qa_cot";
    case GenerationTag::html_gen: return "html_gen";
  }
  return "?";
}

std::string canonical_request(const GenerationRequest& req) {
  Json j = Json::object();
  j["prompt"] = req.prompt;
  j["max_words_hint"] = req.max_words_hint;
  j["temperature"] = req.temperature;
  j["tag"] = to_string(req.tag);
  return dump_line(j);
}

std::string request_hash(const GenerationRequest& req) { return sha256_hex(canonical_request(req)); }

std::string prompt_digest(std::string_view prompt) { return sha256_hex(prompt); }

// --- mock ------------------------------------------------------------------

std::map<std::string, std::string> MockClient::read_canned(const std::filesystem::path& path) {
  std::map<std::string, std::string> canned;
  for (const auto& line : read_lines(path)) {
    Json j = Json::parse(line);
    canned[j.at("prompt_sha256").get<std::string>()] = j.at("response").get<std::string>();
  }
  return canned;
}

std::string MockClient::complete(const GenerationRequest& req) {
  if (req.prompt.empty()) throw GenerationError(GenerationError::Kind::config, "empty prompt");
  ++calls_;
  std::string digest = prompt_digest(req.prompt);
  auto it = canned_.find(digest);
  if (it != canned_.end()) return it->second;
  ++misses_;
  if (strict_)
    throw GenerationError(GenerationError::Kind::mock_miss,
                          "no canned response for prompt " + digest);
  return "[mock response " + digest.substr(0, 16) + "]";
}

// --- http ------------------------------------------------------------------

Transport make_http_transport(std::chrono::seconds timeout) {
  return [timeout](const std::string& url, const std::string& body,
                   const Headers& headers) -> HttpResponse {
    // Split "scheme://host[:port]/path".
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) return HttpResponse{0, {}, "malformed url " + url};
    auto path_start = url.find('/', scheme_end + 3);
    std::string origin = url.substr(0, path_start);
    std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);
    httplib::Client client(origin);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);
    auto res = client.Post(path, h, body, "application/json");
    if (!res) return HttpResponse{0, {}, httplib::to_string(res.error())};
    return HttpResponse{res->status, res->body, {}};
  };
}

ChatCompletionClient::ChatCompletionClient(ChatConfig config, Transport transport, Sleeper sleeper)
    : config_(std::move(config)),
      transport_(transport ? std::move(transport) : make_http_transport(config_.timeout)),
      sleeper_(sleeper ? std::move(sleeper)
                       : Sleeper([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })) {
  if (config_.endpoint_url.empty())
    throw GenerationError(GenerationError::Kind::config, "endpoint_url is not configured");
}

std::string ChatCompletionClient::request_body(const std::string& model,
                                               const GenerationRequest& req) {
  Json j = Json::object();
  j["model"] = model;
  Json msg = Json::object();
  msg["role"] = "user";
  msg["content"] = req.prompt;
  j["messages"] = Json::array({msg});
  j["temperature"] = req.temperature;
  return dump_line(j);
}

std::string ChatCompletionClient::parse_content(const std::string& body) {
  try {
    Json j = Json::parse(body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const Json::exception& e) {
    throw GenerationError(GenerationError::Kind::bad_response,
                          std::string("unexpected response shape: ") + e.what());
  }
}

std::string ChatCompletionClient::complete(const GenerationRequest& req) {
  if (req.prompt.empty()) throw GenerationError(GenerationError::Kind::config, "empty prompt");
  Headers headers{{"Content-Type", "application/json"}};
  if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key)
    headers.emplace_back("Authorization", std::string("Bearer ") + key);
  const std::string body = request_body(config_.model_name, req);

  auto backoff = config_.initial_backoff;
  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      sleeper_(backoff);
      backoff *= 2;
    }
    ++sent_;
    HttpResponse res = transport_(config_.endpoint_url, body, headers);
    if (res.status == 401 || res.status == 403)
      throw GenerationError(GenerationError::Kind::auth,
                            "authentication rejected (HTTP " + std::to_string(res.status) + ")");
    bool transient = res.status == 0 || res.status == 408 || res.status == 429 || res.status >= 500;
    if (transient) {
      last_error = res.status == 0 ? res.error : "HTTP " + std::to_string(res.status);
      spdlog::debug("generation attempt {} failed: {}", attempt + 1, last_error);
      continue;
    }
    if (res.status < 200 || res.status >= 300)
      throw GenerationError(GenerationError::Kind::bad_response,
                            "HTTP " + std::to_string(res.status) + ": " + res.body.substr(0, 200));
    if (res.body.size() > config_.max_response_bytes)
      throw GenerationError(GenerationError::Kind::too_large,
                            "response of " + std::to_string(res.body.size()) + " bytes exceeds cap");
    return parse_content(res.body);
  }
  throw GenerationError(GenerationError::Kind::exhausted,
                        "retries exhausted after " + std::to_string(config_.max_retries + 1) +
                            " attempts: " + last_error);
}

// --- cache -----------------------------------------------------------------

CachedClient::CachedClient(TextGenerator& inner, std::filesystem::path cache_dir)
    : inner_(inner), file_(std::move(cache_dir) / "cache.jsonl") {
  std::filesystem::create_directories(file_.parent_path());
  if (!std::filesystem::exists(file_)) return;
  for (const auto& line : read_lines(file_)) {
    try {
      Json j = Json::parse(line);
      std::string hash = j.at("request_hash").get<std::string>();
      if (hash.size() != 64) throw std::runtime_error("bad hash length");
      entries_.emplace(std::move(hash), j.at("response").get<std::string>());
    } catch (const std::exception& e) {
      ++corrupt_;
      spdlog::warn("cache {}: skipping corrupt line ({})", file_.string(), e.what());
    }
  }
}

bool CachedClient::lookup(const std::string& hash, std::string* out) const {
  std::shared_lock lock(map_mutex_);
  auto it = entries_.find(hash);
  if (it == entries_.end()) return false;
  *out = it->second;
  return true;
}

void CachedClient::append(const std::string& hash, const std::string& response) {
  Json j = Json::object();
  j["request_hash"] = hash;
  j["response"] = response;
  j["timestamp"] = static_cast<std::int64_t>(std::time(nullptr));
  std::string line = dump_line(j) + "\n";
  std::lock_guard lock(file_mutex_);
  int fd = ::open(file_.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
  if (fd < 0) throw Error("llm-client", file_.string(), "cannot open cache for append");
  ssize_t n = ::write(fd, line.data(), line.size());
  ::close(fd);
  if (n != static_cast<ssize_t>(line.size()))
    throw Error("llm-client", file_.string(), "short write to cache");
}

std::string CachedClient::complete(const GenerationRequest& req) {
  const std::string hash = request_hash(req);
  std::string cached;
  if (lookup(hash, &cached)) {
    ++hits_;
    return cached;
  }
  auto& shard = shard_mutexes_[std::stoul(hash.substr(0, 1), nullptr, 16)];
  std::lock_guard lock(shard);
  if (lookup(hash, &cached)) {
    ++hits_;
    return cached;
  }
  ++misses_;
  std::string response = inner_.complete(req);
  append(hash, response);
  {
    std::unique_lock map_lock(map_mutex_);
    entries_.emplace(hash, response);
  }
  return response;
}

// --- prompts ---------------------------------------------------------------

std::string render_prompt(const TemplateBank& bank, std::string_view template_id,
                          const Bindings& bindings) {
  return substitute(bank.prompt(template_id), bindings);
}

std::string render_html_gen_prompt(const TemplateBank& bank, Rng& rng,
                                   const std::vector<std::pair<std::string, std::string>>& images) {
  if (images.empty()) throw Error("llm-client", "html_gen", "no image/caption pairs");
  const auto& doc_type = rng.pick(bank.questions("doc_types"));
  const auto& [image, caption] = images[rng.below(images.size())];
  return render_prompt(bank, "html_gen",
                       {{"doc_type", doc_type}, {"caption", caption}, {"image", image}});
}

}  // namespace layoutinstruct
