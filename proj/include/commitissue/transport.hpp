#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

namespace commitissue::miner {

struct HttpResponse {
  int status = 0;
  std::string body;
  std::map<std::string, std::string> headers;  // keys lowercased

  std::string header(const std::string& key) const;
};

/// GET-only view of the issue tracker API. Paths are relative to the API root
/// ("/repos/o/n/issues/1/events?per_page=100"). Implementations must be safe
/// to call from several threads at once.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse get(const std::string& path) = 0;
};

/// Replays responses recorded in a fixture file:
///   {"responses": [{"path": "...", "status": 200, "headers": {...}, "body": <json or string>}]}
/// A path requested but absent from the fixture raises UsageError.
class FixtureTransport final : public Transport {
 public:
  explicit FixtureTransport(const nlohmann::json& fixture);
  static std::unique_ptr<FixtureTransport> from_file(const std::filesystem::path& path);

  HttpResponse get(const std::string& path) override;

  /// Paths served so far, in request order.
  std::vector<std::string> requests() const;

 private:
  std::map<std::string, HttpResponse> responses_;
  mutable std::mutex mu_;
  std::vector<std::string> requests_;
};

/// Live HTTPS transport against api.github.com (or another host). The token,
/// when non-empty, is sent as a bearer token.
std::unique_ptr<Transport> make_https_transport(std::string token, std::string host = "api.github.com");

/// Client-side token bucket. acquire() reserves one token and returns how long
/// the caller has to wait before using it.
class TokenBucket {
 public:
  using Clock = std::function<std::chrono::steady_clock::time_point()>;

  TokenBucket(double rate_per_second, double capacity, Clock clock = {});

  std::chrono::nanoseconds acquire();

 private:
  double rate_;
  double capacity_;
  double tokens_;
  Clock clock_;
  std::chrono::steady_clock::time_point last_;
  std::mutex mu_;
};

struct PolitenessPolicy {
  double requests_per_second = 1.0;
  double burst = 5.0;
  int max_retries = 5;
  std::chrono::milliseconds base_backoff{500};
  std::chrono::milliseconds max_backoff{60'000};
  std::chrono::seconds default_retry_after{60};
  std::uint64_t jitter_seed = 0x5eed;
};

/// Wraps another transport with a token bucket, honors Retry-After on 403/429
/// and retries 5xx with exponential backoff and jitter. When retries run out
/// the last response is returned unchanged.
class PoliteTransport final : public Transport {
 public:
  using Sleep = std::function<void(std::chrono::nanoseconds)>;

  PoliteTransport(Transport& inner, PolitenessPolicy policy = {}, Sleep sleep = {}, TokenBucket::Clock clock = {});

  HttpResponse get(const std::string& path) override;

 private:
  std::chrono::nanoseconds backoff(int attempt);

  Transport& inner_;
  PolitenessPolicy policy_;
  Sleep sleep_;
  TokenBucket bucket_;
  std::mutex rng_mu_;
  std::mt19937_64 rng_;
};

/// Seconds to wait according to Retry-After or the X-RateLimit headers.
std::chrono::seconds retry_after(const HttpResponse& response, std::chrono::seconds fallback);

/// True for 429 and for 403 responses that carry rate-limit markers.
bool is_rate_limited(const HttpResponse& response);

}  // namespace commitissue::miner
