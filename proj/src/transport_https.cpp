#include "commitissue/error.hpp"
#include "commitissue/transport.hpp"

#if defined(COMMITISSUE_HAVE_HTTPS)
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <algorithm>
#include <cctype>
#include <httplib.h>
#endif

namespace commitissue::miner {

#if defined(COMMITISSUE_HAVE_HTTPS)
namespace {

class HttpsTransport final : public Transport {
 public:
  HttpsTransport(std::string token, std::string host) : token_(std::move(token)), host_(std::move(host)) {}

  HttpResponse get(const std::string& path) override {
    // httplib clients are not thread-safe; one per call keeps workers independent.
    httplib::SSLClient client(host_, 443);
    client.set_follow_location(true);
    client.set_connection_timeout(30);
    client.set_read_timeout(60);
    httplib::Headers headers{{"Accept", "application/vnd.github+json"},
                             {"User-Agent", "commitissue-miner"},
                             {"X-GitHub-Api-Version", "2022-11-28"}};
    if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);
    auto res = client.Get(path, headers);
    if (!res) throw Error("request to " + host_ + path + " failed: " + httplib::to_string(res.error()));
    HttpResponse out;
    out.status = res->status;
    out.body = res->body;
    for (const auto& [k, v] : res->headers) {
      std::string key = k;
      std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      out.headers[key] = v;
    }
    return out;
  }

 private:
  std::string token_;
  std::string host_;
};

}  // namespace

std::unique_ptr<Transport> make_https_transport(std::string token, std::string host) {
  return std::make_unique<HttpsTransport>(std::move(token), std::move(host));
}
#else
std::unique_ptr<Transport> make_https_transport(std::string, std::string) {
  throw UsageError("this build has no HTTPS support; rebuild with OpenSSL or use --fixture");
}
#endif

}  // namespace commitissue::miner
