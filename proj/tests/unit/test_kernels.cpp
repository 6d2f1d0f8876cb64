#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "commitissue/error.hpp"
#include "commitissue/kernels.hpp"

using namespace commitissue;
using namespace commitissue::kernels;

namespace {

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> d(0.0, 3.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

bool close(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a)); }

}  // namespace

TEST_CASE("scalar kernels against naive loops") {
  const auto& s = table(Isa::scalar);
  const std::vector<double> a = {1, 2, 3}, b = {4, -5, 6};
  CHECK(s.dot(a.data(), b.data(), 3) == 12.0);
  CHECK(s.squared_distance(a.data(), b.data(), 3) == 9.0 + 49.0 + 9.0);
  const std::uint32_t idx[] = {2, 0};
  const double val[] = {0.5, 2.0};
  CHECK(s.sparse_dot(idx, val, 2, a.data()) == 3.5);
  CHECK(s.dot(a.data(), b.data(), 0) == 0.0);
}

TEST_CASE("vectorized kernels match scalar") {
  CHECK(available(Isa::scalar));
  std::vector<Isa> isas;
  for (Isa isa : {Isa::avx2, Isa::neon})
    if (available(isa)) isas.push_back(isa);
    else CHECK_THROWS_AS(table(isa), UsageError);
  const auto& ref = table(Isa::scalar);
  std::mt19937_64 rng(5);
  for (Isa isa : isas) {
    INFO(to_string(isa));
    const auto& k = table(isa);
    CHECK(k.isa == isa);
    for (std::size_t n : {0u, 1u, 2u, 3u, 4u, 5u, 7u, 8u, 9u, 15u, 16u, 17u, 31u, 64u, 100u, 1023u}) {
      const auto a = random_vector(rng, n), b = random_vector(rng, n), m = random_vector(rng, n);
      auto scale = random_vector(rng, n);
      REQUIRE(close(k.dot(a.data(), b.data(), n), ref.dot(a.data(), b.data(), n)));
      REQUIRE(close(k.squared_distance(a.data(), b.data(), n), ref.squared_distance(a.data(), b.data(), n)));

      std::vector<std::uint32_t> idx;
      std::vector<double> val;
      for (std::uint32_t i = 0; i < n; i += 2) {
        idx.push_back(i);
        val.push_back(a[i]);
      }
      REQUIRE(close(k.sparse_dot(idx.data(), val.data(), idx.size(), b.data()),
                    ref.sparse_dot(idx.data(), val.data(), idx.size(), b.data())));

      auto acc1 = m, acc2 = m;
      k.accumulate(acc1.data(), a.data(), n);
      ref.accumulate(acc2.data(), a.data(), n);
      for (std::size_t i = 0; i < n; ++i) REQUIRE(close(acc1[i], acc2[i]));

      acc1 = m;
      acc2 = m;
      k.accumulate_centered_squares(acc1.data(), a.data(), b.data(), n);
      ref.accumulate_centered_squares(acc2.data(), a.data(), b.data(), n);
      for (std::size_t i = 0; i < n; ++i) REQUIRE(close(acc1[i], acc2[i]));

      std::vector<double> out1(n), out2(n);
      k.standardize(out1.data(), a.data(), m.data(), scale.data(), n);
      ref.standardize(out2.data(), a.data(), m.data(), scale.data(), n);
      for (std::size_t i = 0; i < n; ++i) REQUIRE(close(out1[i], out2[i]));
    }
  }
}

TEST_CASE("span wrappers use the active table") {
  const std::vector<double> a = {1, 2}, b = {3, 4};
  CHECK(dot(a, b) == 11.0);
  CHECK(squared_distance(a, b) == 8.0);
  const std::vector<std::uint32_t> idx = {1};
  const std::vector<double> val = {2.0};
  CHECK(sparse_dot(idx, val, b) == 8.0);
  CHECK(available(active().isa));
}
