#include <doctest.h>

#include <cmath>
#include <set>

#include "cfseq/random.hpp"

using namespace cfseq;

TEST_CASE("random stream is a pure function of (seed, stream_id)") {
  RandomStream a(RngSeed{42, 7});
  RandomStream b(RngSeed{42, 7});
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
  RandomStream c(RngSeed{42, 8});
  RandomStream d(RngSeed{43, 7});
  RandomStream e(RngSeed{42, 7});
  CHECK(c.next_u64() != e.next_u64());
  CHECK(d.next_u64() != RandomStream(RngSeed{42, 7}).next_u64());
}

TEST_CASE("substreams are distinct per tag and index") {
  const RngSeed root{1, 0};
  std::set<std::uint64_t> ids;
  for (std::uint64_t tag = 1; tag <= 12; ++tag) {
    for (std::uint64_t a = 0; a < 20; ++a) {
      for (std::uint64_t b = 0; b < 5; ++b) ids.insert(substream(root, tag, a, b).stream_id);
    }
  }
  CHECK(ids.size() == 12u * 20u * 5u);
  CHECK(substream(root, 3, 1, 2) == substream(root, 3, 1, 2));
  CHECK(substream(root, 3).seed == root.seed);
}

TEST_CASE("uniform draws lie in the open unit interval") {
  RandomStream s(RngSeed{9, 9});
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("normal draws have unit variance and zero mean") {
  RandomStream s(RngSeed{3, 1});
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = s.normal();
    sum += z;
    sq += z * z;
  }
  const double mean = sum / n;
  CHECK(std::abs(mean) < 0.01);
  CHECK(sq / n - mean * mean == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("normal(mean, std) shifts and scales") {
  RandomStream a(RngSeed{5, 5});
  RandomStream b(RngSeed{5, 5});
  for (int i = 0; i < 100; ++i) CHECK(a.normal(3.0, 2.0) == 3.0 + 2.0 * b.normal());
}
