#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "pcf/loss.hpp"
#include "pcf/reference.hpp"

using namespace pcf;

namespace {

EmbeddingTable make_table(std::vector<std::vector<double>> mu,
                          std::vector<std::vector<double>> var) {
  EmbeddingTable t;
  t.n_dims = mu.front().size();
  for (std::size_t i = 0; i < mu.size(); ++i) {
    GaussianEmbedding e;
    e.mu = mu[i];
    for (double v : var[i]) e.log_var.push_back(std::log(v));
    t.entries.push_back(std::move(e));
  }
  return t;
}

EmbeddingTable random_table(std::size_t points, std::size_t dims, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> mu(0.0, 1.5);
  std::uniform_real_distribution<double> lv(-1.0, 1.0);
  EmbeddingTable t;
  t.n_dims = dims;
  t.entries.resize(points);
  for (auto& e : t.entries) {
    e.mu.resize(dims);
    e.log_var.resize(dims);
    for (auto& x : e.mu) x = mu(rng);
    for (auto& x : e.log_var) x = lv(rng);
  }
  return t;
}

SampleBatch random_batch(std::size_t n, std::size_t points, int instances,
                         std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  SampleBatch b;
  b.view_id = 0;
  for (std::size_t i = 0; i < n; ++i)
    b.samples.push_back({std::uniform_int_distribution<std::size_t>(0, points - 1)(rng),
                         std::uniform_int_distribution<int>(1, instances)(rng)});
  return b;
}

// Central finite-difference check of accumulated table gradients against the
// scalar loss function, step 1e-5, relative tolerance 1e-4.
template <typename LossFn>
void check_loss_grad(const SampleBatch& batch, EmbeddingTable table, LossFn loss_fn) {
  GradientTable grad(table.size(), table.n_dims);
  loss_fn(batch, table, &grad);
  const double h = 1e-5;
  // only parameters of points referenced by the batch can have gradients
  std::vector<std::size_t> points;
  for (const Sample& s : batch.samples) points.push_back(s.point);
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  for (std::size_t p : points) {
    for (std::size_t d = 0; d < table.n_dims; ++d) {
      for (int which = 0; which < 2; ++which) {
        double& param = which == 0 ? table.entries[p].mu[d] : table.entries[p].log_var[d];
        double saved = param;
        param = saved + h;
        double lp = loss_fn(batch, table, nullptr);
        param = saved - h;
        double lm = loss_fn(batch, table, nullptr);
        param = saved;
        double numeric = (lp - lm) / (2.0 * h);
        double analytic = which == 0 ? grad.d_mu[p * table.n_dims + d]
                                     : grad.d_log_var[p * table.n_dims + d];
        double tol = std::max(1e-8, 1e-4 * std::abs(numeric));
        CHECK(std::abs(analytic - numeric) <= tol);
      }
    }
  }
}

}  // namespace

TEST_CASE("pixel contrastive loss hand values") {
  // identical single-instance batch -> 0
  auto t1 = make_table({{0.5}, {0.5}, {0.5}}, {{1.0}, {1.0}, {1.0}});
  SampleBatch b1{0, {{0, 1}, {1, 1}, {2, 1}}};
  CHECK(pixel_contrastive_loss(b1, t1, nullptr) == doctest::Approx(0.0).epsilon(1e-12));

  // two samples, two instances: each term -log(e / (e + e^0.606531))
  auto t2 = make_table({{0.0}, {2.0}}, {{1.0}, {1.0}});
  SampleBatch b2{0, {{0, 1}, {1, 2}}};
  double k = std::exp(-0.5);
  double expected = -std::log(std::exp(1.0) / (std::exp(1.0) + std::exp(k)));
  CHECK(pixel_contrastive_loss(b2, t2, nullptr) == doctest::Approx(expected).epsilon(1e-9));
  CHECK(pixel_contrastive_loss(b2, t2, nullptr) == doctest::Approx(0.515640).epsilon(1e-5));
}

TEST_CASE("concentration loss hand values") {
  auto t1 = make_table({{0.5}, {0.5}}, {{1.0}, {1.0}});
  SampleBatch b1{0, {{0, 1}, {1, 1}}};
  CHECK(concentration_loss(b1, t1, nullptr) == doctest::Approx(0.0).epsilon(1e-12));

  // mean is (mu=1, var=1); each member sits 1 away -> -log exp(-1/8) = 0.125
  auto t2 = make_table({{0.0}, {2.0}}, {{1.0}, {1.0}});
  SampleBatch b2{0, {{0, 1}, {1, 1}}};
  CHECK(concentration_loss(b2, t2, nullptr) == doctest::Approx(0.125).epsilon(1e-9));
}

TEST_CASE("combined loss is the sum of its parts") {
  auto t = random_table(8, 3, 21);
  auto b = random_batch(6, 8, 3, 22);
  double combined = combined_contrastive_loss(b, t, nullptr);
  double sum = pixel_contrastive_loss(b, t, nullptr) + concentration_loss(b, t, nullptr);
  CHECK(combined == doctest::Approx(sum).epsilon(1e-15));
}

TEST_CASE("losses match the serial reference") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto t = random_table(16, 3, 100 + seed);
    auto b = random_batch(12, 16, 4, 200 + seed);
    CHECK(pixel_contrastive_loss(b, t, nullptr) ==
          doctest::Approx(ref::pixel_contrastive_loss(b, t)).epsilon(1e-10));
    CHECK(concentration_loss(b, t, nullptr) ==
          doctest::Approx(ref::concentration_loss(b, t)).epsilon(1e-10));
  }
}

TEST_CASE("loss invariances") {
  auto t = random_table(10, 3, 31);
  auto b = random_batch(8, 10, 3, 32);

  // permutation of samples
  SampleBatch shuffled = b;
  std::mt19937_64 rng(33);
  std::shuffle(shuffled.samples.begin(), shuffled.samples.end(), rng);
  CHECK(pixel_contrastive_loss(shuffled, t, nullptr) ==
        doctest::Approx(pixel_contrastive_loss(b, t, nullptr)).epsilon(1e-12));
  CHECK(concentration_loss(shuffled, t, nullptr) ==
        doctest::Approx(concentration_loss(b, t, nullptr)).epsilon(1e-12));

  // bijective relabeling of instance ids
  SampleBatch relabeled = b;
  for (Sample& s : relabeled.samples) s.instance_id = 100 - s.instance_id * 7;
  CHECK(pixel_contrastive_loss(relabeled, t, nullptr) ==
        doctest::Approx(pixel_contrastive_loss(b, t, nullptr)).epsilon(1e-12));
  CHECK(concentration_loss(relabeled, t, nullptr) ==
        doctest::Approx(concentration_loss(b, t, nullptr)).epsilon(1e-12));

  // non-negativity over random configurations
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto tt = random_table(8, 2, 400 + seed);
    auto bb = random_batch(6, 8, 3, 500 + seed);
    CHECK(pixel_contrastive_loss(bb, tt, nullptr) >= 0.0);
    CHECK(concentration_loss(bb, tt, nullptr) >= 0.0);
  }
}

TEST_CASE("perfect separation drives the pixel loss to its infimum") {
  // 2 instances x 2 samples; moving clusters apart decreases the loss toward
  // -log(n_pos e / (n_pos e + n_neg))
  double prev = 1e9;
  for (double sep : {1.0, 2.0, 4.0, 8.0, 16.0}) {
    auto t = make_table({{0.0}, {0.0}, {sep}, {sep}},
                        {{1.0}, {1.0}, {1.0}, {1.0}});
    SampleBatch b{0, {{0, 1}, {1, 1}, {2, 2}, {3, 2}}};
    double loss = pixel_contrastive_loss(b, t, nullptr);
    CHECK(loss < prev);
    prev = loss;
  }
  double inf = -std::log(2.0 * std::exp(1.0) / (2.0 * std::exp(1.0) + 2.0));
  CHECK(prev == doctest::Approx(inf).epsilon(1e-3));
}

TEST_CASE("gradient checks against finite differences") {
  auto pixel = [](const SampleBatch& b, const EmbeddingTable& t, GradientTable* g) {
    return pixel_contrastive_loss(b, t, g);
  };
  auto concen = [](const SampleBatch& b, const EmbeddingTable& t, GradientTable* g) {
    return concentration_loss(b, t, g);
  };
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    auto t = random_table(8, 2, 1000 + seed);
    auto b = random_batch(6, 8, 3, 2000 + seed);
    check_loss_grad(b, t, pixel);
    check_loss_grad(b, t, concen);
  }
}

TEST_CASE("cross-view pair mining") {
  auto t = random_table(20, 3, 55);
  std::vector<GaussianEmbedding> em(t.entries.begin(), t.entries.begin() + 10);
  std::vector<GaussianEmbedding> en(t.entries.begin() + 10, t.entries.end());

  // identical lists at tau 0.9 include the full diagonal
  auto diag = mine_cross_view_pairs(em, em, 0.9, 0, 1);
  int diag_count = 0;
  for (auto [r, s] : diag.pairs)
    if (r == s) ++diag_count;
  CHECK(diag_count == 10);

  // the hand pair 0.6065 < 0.9 -> empty
  auto a = make_table({{0.0}, {2.0}}, {{1.0}, {1.0}});
  auto none = mine_cross_view_pairs({a.entries[0]}, {a.entries[1]}, 0.9, 0, 1);
  CHECK(none.pairs.empty());

  // exhaustive enumeration oracle
  auto mined = mine_cross_view_pairs(em, en, 0.5, 0, 1);
  auto oracle = ref::mine_cross_view_pairs(em, en, 0.5);
  CHECK(mined.pairs == oracle.pairs);

  CHECK_THROWS(mine_cross_view_pairs(em, en, 0.5, 3, 3));
}

TEST_CASE("cross-view loss") {
  auto t = make_table({{0.0}, {2.0}, {0.0}}, {{1.0}, {1.0}, {1.0}});
  SampleBatch bm{0, {{0, 1}, {2, 2}}};
  SampleBatch bn{1, {{1, 1}, {2, 2}}};

  // one pair with K = exp(-0.5) -> loss 0.5
  PositivePairSet one{{{0, 0}}};
  CHECK(cross_view_loss(one, bm, bn, t, nullptr) == doctest::Approx(0.5).epsilon(1e-9));

  // identical embeddings -> 0
  PositivePairSet same{{{1, 1}}};
  CHECK(cross_view_loss(same, bm, bn, t, nullptr) == doctest::Approx(0.0).epsilon(1e-12));

  // empty set -> 0 with untouched gradients
  GradientTable g(t.size(), t.n_dims);
  CHECK(cross_view_loss(PositivePairSet{}, bm, bn, t, &g) == 0.0);
  for (double x : g.d_mu) CHECK(x == 0.0);

  PositivePairSet bad{{{5, 0}}};
  CHECK_THROWS(cross_view_loss(bad, bm, bn, t, nullptr));

  // gradient check through total_loss with an active cross term
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto tt = random_table(8, 2, 3000 + seed);
    SampleBatch m = random_batch(5, 8, 2, 4000 + seed);
    m.view_id = 0;
    SampleBatch n = random_batch(5, 8, 2, 5000 + seed);
    n.view_id = 1;
    std::vector<GaussianEmbedding> em, en;
    for (auto& s : m.samples) em.push_back(tt.at(s.point));
    for (auto& s : n.samples) en.push_back(tt.at(s.point));
    PositivePairSet pairs = mine_cross_view_pairs(em, en, 0.3, 0, 1);
    if (pairs.pairs.empty()) continue;

    GradientTable grad(tt.size(), tt.n_dims);
    cross_view_loss(pairs, m, n, tt, &grad);
    const double h = 1e-5;
    for (std::size_t p = 0; p < tt.size(); ++p) {
      for (std::size_t d = 0; d < tt.n_dims; ++d) {
        double saved = tt.entries[p].mu[d];
        tt.entries[p].mu[d] = saved + h;
        double lp = cross_view_loss(pairs, m, n, tt, nullptr);
        tt.entries[p].mu[d] = saved - h;
        double lm = cross_view_loss(pairs, m, n, tt, nullptr);
        tt.entries[p].mu[d] = saved;
        double numeric = (lp - lm) / (2.0 * h);
        double tol = std::max(1e-8, 1e-4 * std::abs(numeric));
        CHECK(std::abs(grad.d_mu[p * tt.n_dims + d] - numeric) <= tol);
      }
    }
  }
}

TEST_CASE("regularization loss") {
  GaussianEmbedding unit{{0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}};
  CHECK(regularization_loss(unit, nullptr) == 0.0);

  GaussianEmbedding e3{{0.0, 0.0, 0.0}, {0.0, 1.0, 2.0}};  // sigma2 = 1, e, e^2
  std::vector<double> g;
  CHECK(regularization_loss(e3, &g) == doctest::Approx(3.0));
  for (double x : g) CHECK(x == 1.0);

  GaussianEmbedding neg{{0.0}, {-2.0}};
  CHECK(regularization_loss(neg, nullptr) == doctest::Approx(-2.0));
}

TEST_CASE("total loss composition") {
  auto t = random_table(10, 3, 77);
  auto b = random_batch(8, 10, 3, 78);

  auto lb = total_loss({&b}, nullptr, t, 0.0, 0.0, nullptr);
  CHECK(lb.total == doctest::Approx(combined_contrastive_loss(b, t, nullptr)).epsilon(1e-12));
  CHECK(lb.cross == 0.0);

  // doubling w_reg doubles the regularizer contribution
  auto r1 = total_loss({&b}, nullptr, t, 0.0, 0.001, nullptr);
  auto r2 = total_loss({&b}, nullptr, t, 0.0, 0.002, nullptr);
  CHECK(r2.total - lb.total == doctest::Approx(2.0 * (r1.total - lb.total)).epsilon(1e-9));

  CHECK_THROWS(total_loss({&b}, nullptr, t, -0.1, 0.0, nullptr));
  CHECK_THROWS(total_loss({}, nullptr, t, 0.0, 0.0, nullptr));

  // full gradient check with two batches, cross term and regularizer
  auto tt = random_table(8, 2, 80);
  SampleBatch m = random_batch(5, 8, 2, 81);
  m.view_id = 0;
  SampleBatch n = random_batch(5, 8, 2, 82);
  n.view_id = 1;
  std::vector<GaussianEmbedding> em, en;
  for (auto& s : m.samples) em.push_back(tt.at(s.point));
  for (auto& s : n.samples) en.push_back(tt.at(s.point));
  PositivePairSet pairs = mine_cross_view_pairs(em, en, 0.2, 0, 1);

  GradientTable grad(tt.size(), tt.n_dims);
  total_loss({&m, &n}, &pairs, tt, 0.05, 0.001, &grad);
  const double h = 1e-5;
  for (std::size_t p = 0; p < tt.size(); ++p) {
    for (std::size_t d = 0; d < tt.n_dims; ++d) {
      for (int which = 0; which < 2; ++which) {
        double& param = which == 0 ? tt.entries[p].mu[d] : tt.entries[p].log_var[d];
        double saved = param;
        param = saved + h;
        double lp = total_loss({&m, &n}, &pairs, tt, 0.05, 0.001, nullptr).total;
        param = saved - h;
        double lm = total_loss({&m, &n}, &pairs, tt, 0.05, 0.001, nullptr).total;
        param = saved;
        double numeric = (lp - lm) / (2.0 * h);
        double analytic = which == 0 ? grad.d_mu[p * tt.n_dims + d]
                                     : grad.d_log_var[p * tt.n_dims + d];
        double tol = std::max(1e-8, 2e-4 * std::abs(numeric));
        CHECK(std::abs(analytic - numeric) <= tol);
      }
    }
  }
}
