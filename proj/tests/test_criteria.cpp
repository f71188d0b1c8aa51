#include <doctest.h>

#include "graftnet/criteria.hpp"
#include "graftnet/errors.hpp"
#include "graftnet/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace graftnet;

namespace {

std::vector<double> uniform_values(std::size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

// Sorts the values and walks bin edges lo + k*range/B upward, counting how
// many sorted values fall below each edge. Independent of the index formula
// in the library, but uses the same edge arithmetic to decide membership.
std::vector<double> sort_and_count(std::vector<double> values, std::size_t bins) {
  std::sort(values.begin(), values.end());
  const double lo = values.front(), hi = values.back(), range = hi - lo;
  std::vector<double> p(bins, 0.0);
  std::size_t k = 0;
  for (double v : values) {
    while (k + 1 < bins && (v - lo) / range * static_cast<double>(bins) >= static_cast<double>(k + 1)) ++k;
    p[k] += 1.0;
  }
  for (auto& x : p) x /= static_cast<double>(values.size());
  return p;
}

double entropy_of(const std::vector<double>& p) {
  double h = 0.0;
  for (double x : p)
    if (x > 0) h -= x * std::log(x);
  return h;
}

Tensor random_conv_weight(Shape shape, std::uint64_t seed) {
  Tensor t(std::move(shape));
  const auto v = uniform_values(t.size(), seed);
  std::copy(v.begin(), v.end(), t.values().begin());
  return t;
}

}  // namespace

TEST_CASE("filter l1 examples") {
  CHECK(filter_l1(Tensor({3, 3, 3}, 1.0).values()) == 27.0);
  CHECK(filter_l1(Tensor({3, 3, 3}).values()) == 0.0);
  Tensor f({1, 2, 2});
  f[0] = 1.5;
  f[1] = -2.5;
  f[3] = 3.0;
  CHECK(filter_l1(f.values()) == 7.0);
}

TEST_CASE("filter l1 is non-negative, homogeneous and subadditive") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng() % 50;
    auto a = uniform_values(n, rng(), -5, 5);
    auto b = uniform_values(n, rng(), -5, 5);
    const double lambda = std::uniform_real_distribution<double>(-3, 3)(rng);
    std::vector<double> scaled(n), sum(n);
    for (std::size_t i = 0; i < n; ++i) {
      scaled[i] = lambda * a[i];
      sum[i] = a[i] + b[i];
    }
    CHECK(filter_l1(a) >= 0.0);
    CHECK(filter_l1(scaled) == doctest::Approx(std::abs(lambda) * filter_l1(a)).epsilon(1e-12));
    CHECK(filter_l1(sum) <= filter_l1(a) + filter_l1(b) + 1e-12);
  }
}

TEST_CASE("per-filter norms and layer l1") {
  Tensor w({2, 1, 1, 2});
  w[0] = 1;
  w[1] = -1;
  w[2] = 0.5;
  w[3] = 0.25;
  CHECK(filter_l1_norms(w) == std::vector<double>{2.0, 0.75});
  CHECK(layer_l1(w) == 2.75);
  CHECK_THROWS_AS(filter_l1_norms(Tensor({2, 2})), ArgumentError);
}

TEST_CASE("constant tensor has zero entropy") {
  const auto r = tensor_entropy(Tensor({4, 3, 3, 3}, 0.7));
  CHECK(r.value == 0.0);
  CHECK(r.bin_probabilities[0] == 1.0);
}

TEST_CASE("equal fill of every bin gives ln B") {
  for (std::size_t bins : {2, 7, 16, 256}) {
    std::vector<double> v;
    for (std::size_t k = 0; k < bins; ++k)
      for (int rep = 0; rep < 3; ++rep) v.push_back(static_cast<double>(k));
    const auto r = tensor_entropy(v, {bins});
    CHECK(std::abs(r.value - std::log(static_cast<double>(bins))) < 1e-12);
    for (double p : r.bin_probabilities) CHECK(p == doctest::Approx(1.0 / static_cast<double>(bins)));
  }
}

TEST_CASE("maximum value lands in the last bin") {
  const auto r = tensor_entropy(std::vector<double>{0.0, 1.0}, {4});
  CHECK(r.bin_probabilities == std::vector<double>{0.5, 0.0, 0.0, 0.5});
}

TEST_CASE("entropy errors") {
  CHECK_THROWS_AS(tensor_entropy(std::vector<double>{}, {}), ArgumentError);
  CHECK_THROWS_AS(tensor_entropy(std::vector<double>{1, 2}, {1}), ArgumentError);
}

TEST_CASE("histogram agrees with the sort-and-count oracle") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto v = uniform_values(1000, seed, -3, 5);
    const auto r = tensor_entropy(v, {16});
    const auto want = sort_and_count(v, 16);
    for (std::size_t k = 0; k < 16; ++k) CHECK(std::abs(r.bin_probabilities[k] - want[k]) < 1e-12);
    CHECK(std::abs(r.value - entropy_of(want)) < 1e-12);
  }
}

TEST_CASE("entropy stays within [0, ln B] and probabilities sum to one") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 400, bins = 2 + rng() % 300;
    std::vector<double> v = uniform_values(n, rng(), -2, 2);
    if (trial % 5 == 0)
      for (auto& x : v) x = std::round(x);  // heavy ties
    const auto r = tensor_entropy(v, {bins});
    CHECK(r.value >= 0.0);
    CHECK(r.value <= std::log(static_cast<double>(bins)) + 1e-12);
    CHECK(std::abs(std::accumulate(r.bin_probabilities.begin(), r.bin_probabilities.end(), 0.0) - 1.0) < 1e-12);
  }
}

TEST_CASE("entropy is invariant under permutation of entries") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    auto v = uniform_values(300, rng());
    const double h = tensor_entropy(v).value;
    std::shuffle(v.begin(), v.end(), rng);
    CHECK(tensor_entropy(v).value == h);
  }
}

TEST_CASE("entropy is exactly invariant under positive affine maps") {
  // Dyadic grid values with power-of-two scales and grid shifts keep every
  // affine image exactly representable, so bin membership is identical.
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(200);
    for (auto& x : v) x = static_cast<double>(static_cast<long>(rng() % 2001) - 1000) / 1024.0;
    const double a = std::ldexp(1.0, static_cast<int>(rng() % 21) - 10);
    const double b = static_cast<double>(static_cast<long>(rng() % 20001) - 10000) / 64.0;
    std::vector<double> w(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) w[i] = a * v[i] + b;
    const auto bins = 2 + rng() % 256;
    const auto r1 = tensor_entropy(v, {bins});
    const auto r2 = tensor_entropy(w, {bins});
    CHECK(r1.value == r2.value);
    CHECK(r1.bin_probabilities == r2.bin_probabilities);
  }
}

TEST_CASE("layer entropy sum") {
  CHECK(layer_entropy_sum(Tensor({4, 2, 3, 3}, 1.5)) == 0.0);

  const auto filter = uniform_values(18, 3);
  Tensor same({5, 2, 3, 3});
  for (std::size_t j = 0; j < 5; ++j) std::copy(filter.begin(), filter.end(), same.slice(j).begin());
  CHECK(std::abs(layer_entropy_sum(same) - 5 * tensor_entropy(filter).value) < 1e-12);

  const Tensor w = random_conv_weight({6, 3, 3, 3}, 9);
  double loop = 0.0;
  for (std::size_t j = 0; j < 6; ++j) {
    std::vector<double> one(w.slice(j).begin(), w.slice(j).end());
    loop += entropy_of(sort_and_count(one, 256));
  }
  CHECK(std::abs(layer_entropy_sum(w) - loop) < 1e-12);
}

TEST_CASE("network information sums whole-layer entropies of conv weights") {
  const Architecture two = small_convnet({1, 8, 8}, 4, 6, 3);
  CHECK(network_information(Network::zeros(two)) == 0.0);

  const Network net = Network::build(two, 4);
  const double sum = tensor_entropy(find_parameter(net.parameters(), "layer0.conv_weight")->value).value +
                     tensor_entropy(find_parameter(net.parameters(), "layer3.conv_weight")->value).value;
  CHECK(network_information(net) == sum);

  const Architecture one{{1, 6, 6},
                         {{LayerSpec::Kind::Conv, 3, 3}, {LayerSpec::Kind::Flatten}, {LayerSpec::Kind::Dense, 2}}};
  const Network single = Network::build(one, 2);
  CHECK(network_information(single) == tensor_entropy(single.parameters()[0].value).value);
}

TEST_CASE("joint entropy oracle examples") {
  Eigen::MatrixXd point(2, 1);
  point << 0.5, 0.5;
  auto h = joint_entropy_oracle(point);
  CHECK(std::abs(h.xy - std::log(2.0)) < 1e-15);
  CHECK(std::abs(h.xz - std::log(2.0)) < 1e-15);
  CHECK(std::abs(h.yz - std::log(2.0)) < 1e-15);

  Eigen::MatrixXd indep = Eigen::MatrixXd::Constant(2, 2, 0.25);
  h = joint_entropy_oracle(indep);
  CHECK(std::abs(h.xy - std::log(4.0)) < 1e-15);
  CHECK(std::abs(h.xz - std::log(4.0)) < 1e-15);
  CHECK(std::abs(h.yz - std::log(4.0)) < 1e-15);
}

TEST_CASE("joint entropy oracle gives three equal values for random joints") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const auto rows = 1 + rng() % 6, cols = 1 + rng() % 6;
    Eigen::MatrixXd joint(rows, cols);
    for (Eigen::Index i = 0; i < joint.size(); ++i) joint(i) = rng() % 4 == 0 ? 0.0 : u(rng);
    if (joint.sum() == 0.0) joint(0) = 1.0;
    joint /= joint.sum();
    std::vector<long> xs, ys;
    for (std::size_t i = 0; i < rows; ++i) xs.push_back(static_cast<long>(3 * i) - 4);
    for (std::size_t j = 0; j < cols; ++j) ys.push_back(static_cast<long>(j * j));
    const auto h = joint_entropy_oracle(joint, xs, ys);
    CHECK(std::abs(h.xy - h.xz) < 1e-12);
    CHECK(std::abs(h.xy - h.yz) < 1e-12);
  }
}

TEST_CASE("joint entropy oracle rejects invalid tables") {
  CHECK_THROWS_AS(joint_entropy_oracle(Eigen::MatrixXd::Constant(2, 2, 0.3)), ArgumentError);
  Eigen::MatrixXd neg(1, 2);
  neg << 1.5, -0.5;
  CHECK_THROWS_AS(joint_entropy_oracle(neg), ArgumentError);
  CHECK_THROWS_AS(joint_entropy_oracle(Eigen::MatrixXd::Constant(2, 1, 0.5), {1, 1}), ArgumentError);
}
