#include <doctest.h>

#include <array>
#include <cmath>

#include "oracles.hpp"
#include "smdn/error.hpp"
#include "smdn/lof.hpp"
#include "smdn/random.hpp"

using namespace smdn;
using doctest::Approx;

namespace {

FeatureMatrix to_matrix(const oracle::Points& pts) {
  FeatureMatrix m;
  for (const auto& p : pts) m.append_row(p);
  return m;
}

oracle::Points gaussian_points(Rng& rng, std::size_t n, std::size_t dim, double centre, double sd) {
  oracle::Points pts(n, oracle::Vec(dim));
  for (auto& p : pts)
    for (auto& v : p) v = rng.normal(centre, sd);
  return pts;
}

}  // namespace

TEST_CASE("interior lattice points score near 1") {
  oracle::Points grid;
  for (int x = 0; x < 10; ++x)
    for (int y = 0; y < 10; ++y) grid.push_back({double(x), double(y)});
  const LofModel model(to_matrix(grid), 5);
  const auto scores = model.in_sample_scores();
  for (int x = 2; x < 8; ++x)
    for (int y = 2; y < 8; ++y) {
      const double s = scores[x * 10 + y];
      CHECK(s >= 0.8);
      CHECK(s <= 1.2);
    }
}

TEST_CASE("an isolated point stands out from two clusters") {
  oracle::Points pts;
  for (double ox : {0.0, 20.0})
    for (int x = 0; x < 6; ++x)
      for (int y = 0; y < 6; ++y) pts.push_back({ox + x, ox + y});
  pts.push_back({10.0, 40.0});
  const LofModel model(to_matrix(pts), 5);
  const auto scores = model.in_sample_scores();
  CHECK(scores.back() > 2.0);
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) CHECK(scores[i] < 1.5);
}

TEST_CASE("identical points score 1") {
  const oracle::Points same(30, {1.0, 2.0, 3.0});
  const LofModel model(to_matrix(same), 5);
  for (double s : model.in_sample_scores()) CHECK(s == Approx(1.0).epsilon(1e-9));
  CHECK(model.score(std::vector<double>{1.0, 2.0, 3.0}) == Approx(1.0).epsilon(1e-9));
  CHECK(std::isfinite(model.score(std::vector<double>{1.0, 2.0, 3.5})));
}

TEST_CASE("scores match the brute-force definition") {
  Rng rng(8);
  for (int trial = 0; trial < 8; ++trial) {
    const std::size_t dim = 1 + rng.next() % 5;
    const std::size_t k = std::array<std::size_t, 3>{3, 5, 20}[trial % 3];
    auto train = gaussian_points(rng, 40 + rng.next() % 40, dim, 0.0, 1.0);
    // Integer coordinates force distance ties.
    if (trial % 2 == 1)
      for (auto& p : train)
        for (auto& v : p) v = std::round(v * 2.0);
    const LofModel model(to_matrix(train), k);
    const auto queries = gaussian_points(rng, 20, dim, 0.5, 2.0);
    for (const auto& q : queries)
      CHECK(model.score(q) == Approx(oracle::novelty_lof(train, q, k)).epsilon(1e-9));
    const auto in_sample = model.in_sample_scores();
    for (std::size_t i = 0; i < train.size(); ++i)
      CHECK(in_sample[i] == Approx(oracle::in_sample_lof(train, i, k)).epsilon(1e-9));
  }
}

TEST_CASE("tied neighbourhoods include every point at the k-distance") {
  // Four points at distance 1 from the origin, k = 2.
  const oracle::Points train{{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {5, 5}};
  const LofModel model(to_matrix(train), 2);
  const auto hood = oracle::k_neighbors(train, {0, 0}, 2, train.size());
  CHECK(hood.size() == 4);
  CHECK(model.score(std::vector<double>{0, 0}) ==
        Approx(oracle::novelty_lof(train, {0, 0}, 2)).epsilon(1e-12));
}

TEST_CASE("scores are invariant to rotation, translation and uniform scaling") {
  Rng rng(21);
  const auto train = gaussian_points(rng, 60, 2, 0.0, 1.0);
  const auto queries = gaussian_points(rng, 10, 2, 0.0, 2.5);
  const double c = std::cos(0.7), s = std::sin(0.7);
  auto move = [&](const oracle::Vec& p) {
    return oracle::Vec{3.0 * (c * p[0] - s * p[1]) + 4.0, 3.0 * (s * p[0] + c * p[1]) - 2.0};
  };
  oracle::Points moved;
  for (const auto& p : train) moved.push_back(move(p));
  const LofModel a(to_matrix(train), 5), b(to_matrix(moved), 5);
  for (const auto& q : queries) CHECK(a.score(q) == Approx(b.score(move(q))).epsilon(1e-9));
}

TEST_CASE("novelty threshold separates the centre from far queries") {
  Rng rng(2);
  const auto train = gaussian_points(rng, 200, 3, 0.0, 1.0);
  const auto calib = gaussian_points(rng, 60, 3, 0.0, 1.0);
  const auto model = fit_lof(to_matrix(train), 20, 2.0, to_matrix(calib));
  CHECK(model.score(std::vector<double>{0, 0, 0}) <= 1.2);
  CHECK(model.score(std::vector<double>{8, 8, 8}) > model.threshold());

  double mean = 0.0, var = 0.0;
  for (const auto& q : calib) mean += oracle::novelty_lof(train, q, 20);
  mean /= double(calib.size());
  for (const auto& q : calib) var += std::pow(oracle::novelty_lof(train, q, 20) - mean, 2.0);
  const double sd = std::sqrt(var / double(calib.size()));
  CHECK(model.threshold() == Approx(mean + 2.0 * sd).epsilon(1e-9));
}

TEST_CASE("a score equal to the threshold is accepted") {
  const oracle::Points train{{0, 0}, {1, 0}, {0, 1}, {1, 1}, {0.5, 0.5}};
  LofModel model(to_matrix(train), 2);
  const std::vector<double> q{0.2, 0.3};
  const double s = model.score(q);
  model.set_threshold(std::vector<double>{s}, 2.0);
  CHECK(model.threshold() == s);
  const LabelSpace space({"a", "b"}, 2);
  const ExampleRecord r{"q", Split::Test, "a", {0.0, 1.0}, q};
  const auto p = predict_lof(r, space, model);
  CHECK(p.decision == "b");
  CHECK(p.confidence_score == 0.0);

  model.set_threshold(std::vector<double>{s - 1e-9}, 0.0);
  CHECK(predict_lof(r, space, model).decision == kUnknownLabel);
}

TEST_CASE("precondition failures") {
  const oracle::Points small{{0.0}, {1.0}, {2.0}};
  CHECK_THROWS_AS(LofModel(to_matrix(small), 3), PreconditionError);
  CHECK_THROWS_AS(LofModel(to_matrix(small), 0), PreconditionError);
  const LofModel ok(to_matrix(small), 2);
  CHECK_THROWS_AS(ok.score(std::vector<double>{1.0, 2.0}), PreconditionError);
  CHECK_THROWS_AS(LofModel().score(std::vector<double>{1.0}), PreconditionError);
  FeatureMatrix m;
  m.append_row(std::vector<double>{1.0, 2.0});
  CHECK_THROWS_AS(m.append_row(std::vector<double>{1.0}), PreconditionError);
}

TEST_CASE("a rebuilt model scores identically") {
  Rng rng(30);
  const auto train = gaussian_points(rng, 50, 4, 0.0, 1.0);
  const auto fitted = fit_lof(to_matrix(train), 7, 1.5, to_matrix(gaussian_points(rng, 10, 4, 0.0, 1.0)));
  const LofModel rebuilt(fitted.train_features(), fitted.k(), fitted.train_kdist(), fitted.train_lrd(),
                         fitted.train_saturated(), fitted.threshold_stats());
  for (const auto& q : gaussian_points(rng, 10, 4, 0.0, 2.0)) CHECK(rebuilt.score(q) == fitted.score(q));
  CHECK(rebuilt.threshold() == fitted.threshold());
}
