#include "commitissue/transport.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <thread>

#include "commitissue/error.hpp"
#include "commitissue/record_io.hpp"

namespace commitissue::miner {
namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

std::string HttpResponse::header(const std::string& key) const {
  auto it = headers.find(lower(key));
  return it == headers.end() ? std::string() : it->second;
}

FixtureTransport::FixtureTransport(const nlohmann::json& fixture) {
  if (!fixture.is_object() || !fixture.contains("responses") || !fixture["responses"].is_array()) {
    throw DataError("fixture: expected an object with a \"responses\" array");
  }
  for (const auto& r : fixture["responses"]) {
    if (!r.contains("path") || !r["path"].is_string()) throw DataError("fixture.responses[].path: missing");
    HttpResponse resp;
    resp.status = r.value("status", 200);
    if (r.contains("headers")) {
      for (const auto& [k, v] : r["headers"].items()) resp.headers[lower(k)] = v.is_string() ? v.get<std::string>() : v.dump();
    }
    if (r.contains("body")) resp.body = r["body"].is_string() ? r["body"].get<std::string>() : r["body"].dump();
    responses_[r["path"].get<std::string>()] = std::move(resp);
  }
}

std::unique_ptr<FixtureTransport> FixtureTransport::from_file(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return std::make_unique<FixtureTransport>(j);
}

HttpResponse FixtureTransport::get(const std::string& path) {
  {
    std::lock_guard lock(mu_);
    requests_.push_back(path);
  }
  auto it = responses_.find(path);
  if (it == responses_.end()) throw UsageError("fixture has no recorded response for " + path);
  return it->second;
}

std::vector<std::string> FixtureTransport::requests() const {
  std::lock_guard lock(mu_);
  return requests_;
}

TokenBucket::TokenBucket(double rate_per_second, double capacity, Clock clock)
    : rate_(rate_per_second), capacity_(std::max(1.0, capacity)), tokens_(std::max(1.0, capacity)),
      clock_(clock ? std::move(clock) : Clock([] { return std::chrono::steady_clock::now(); })),
      last_(clock_()) {
  if (!(rate_per_second > 0.0)) throw UsageError("token bucket rate must be positive");
}

std::chrono::nanoseconds TokenBucket::acquire() {
  std::lock_guard lock(mu_);
  const auto now = clock_();
  const double elapsed = std::chrono::duration<double>(now - last_).count();
  last_ = now;
  tokens_ = std::min(capacity_, tokens_ + elapsed * rate_);
  tokens_ -= 1.0;
  if (tokens_ >= 0.0) return std::chrono::nanoseconds(0);
  // Negative balance: the reservation is paid back by future refill.
  return std::chrono::nanoseconds(static_cast<long long>(std::ceil(-tokens_ / rate_ * 1e9)));
}

std::chrono::seconds retry_after(const HttpResponse& response, std::chrono::seconds fallback) {
  const std::string ra = response.header("retry-after");
  if (!ra.empty() && std::all_of(ra.begin(), ra.end(), [](unsigned char c) { return std::isdigit(c); })) {
    return std::chrono::seconds(std::stoll(ra));
  }
  const std::string reset = response.header("x-ratelimit-reset");
  if (!reset.empty() && std::all_of(reset.begin(), reset.end(), [](unsigned char c) { return std::isdigit(c); })) {
    const auto now = std::chrono::duration_cast<std::chrono::seconds>(
        std::chrono::system_clock::now().time_since_epoch());
    const auto wait = std::chrono::seconds(std::stoll(reset)) - now;
    return wait.count() > 0 ? wait : std::chrono::seconds(1);
  }
  return fallback;
}

bool is_rate_limited(const HttpResponse& response) {
  if (response.status == 429) return true;
  if (response.status != 403) return false;
  return !response.header("retry-after").empty() || response.header("x-ratelimit-remaining") == "0";
}

PoliteTransport::PoliteTransport(Transport& inner, PolitenessPolicy policy, Sleep sleep, TokenBucket::Clock clock)
    : inner_(inner),
      policy_(policy),
      sleep_(sleep ? std::move(sleep) : Sleep([](std::chrono::nanoseconds d) { std::this_thread::sleep_for(d); })),
      bucket_(policy.requests_per_second, policy.burst, std::move(clock)),
      rng_(policy.jitter_seed) {}

std::chrono::nanoseconds PoliteTransport::backoff(int attempt) {
  double jitter;
  {
    std::lock_guard lock(rng_mu_);
    jitter = std::uniform_real_distribution<double>(0.5, 1.0)(rng_);
  }
  const double base = static_cast<double>(policy_.base_backoff.count()) * std::ldexp(1.0, attempt);
  const double capped = std::min(base, static_cast<double>(policy_.max_backoff.count()));
  return std::chrono::nanoseconds(static_cast<long long>(capped * jitter * 1e6));
}

HttpResponse PoliteTransport::get(const std::string& path) {
  for (int attempt = 0;; ++attempt) {
    if (const auto wait = bucket_.acquire(); wait.count() > 0) sleep_(wait);
    HttpResponse resp = inner_.get(path);
    if (attempt >= policy_.max_retries) return resp;
    if (is_rate_limited(resp)) {
      sleep_(retry_after(resp, policy_.default_retry_after));
    } else if (resp.status >= 500) {
      sleep_(backoff(attempt));
    } else {
      return resp;
    }
  }
}

}  // namespace commitissue::miner
