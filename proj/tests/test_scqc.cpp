#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "aqqr/scqc.hpp"
#include "reference_encoder.hpp"
#include "testutil.hpp"

using namespace aqqr;
using testutil::check_gradients;
using testutil::random_tensor;

namespace {

ComponentEmbeddings random_re(int dim, std::mt19937_64& rng) {
  return ComponentEmbeddings{random_tensor({7, dim}, rng, -1, 1)};
}

ref::Mat to_ref(const Tensor& t) {
  ref::Mat m = ref::zeros(t.rows(), t.cols());
  for (int i = 0; i < t.rows(); ++i)
    for (int j = 0; j < t.cols(); ++j) m[i][j] = t.at(i, j);
  return m;
}

std::vector<double> to_vec(const Tensor& t) { return t.values(); }

}  // namespace

TEST_CASE("correlation attention: degenerate inputs give uniform rows") {
  Tape::active().reset();
  std::mt19937_64 rng3(3);
  Tensor re0 = Tensor::zeros({7, 4});
  Tensor w = random_tensor({4, 4}, rng3);
  Tensor co = correlation_attention(re0, w);
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 7; ++j) CHECK(co.at(i, j) == doctest::Approx(1.0 / 7).epsilon(1e-12));

  std::mt19937_64 rng(4);
  Tensor re = random_tensor({7, 4}, rng);
  Tensor w0 = Tensor::zeros({4, 4});
  Tensor co2 = correlation_attention(re, w0);
  for (int j = 0; j < 7; ++j) CHECK(co2.at(3, j) == doctest::Approx(1.0 / 7).epsilon(1e-12));
}

TEST_CASE("correlation attention: basis example") {
  // S = e1, A = e2, all other components absent; W = identity
  Tape::active().reset();
  std::vector<double> re_data(7 * 2, 0.0);
  re_data[0 * 2 + 0] = 1.0;  // S
  re_data[1 * 2 + 1] = 1.0;  // A
  Tensor re = Tensor::from_values({7, 2}, re_data);
  Tensor w = Tensor::from_values({2, 2}, {1, 0, 0, 1});
  Tensor co = correlation_attention(re, w);
  const double e = std::exp(1.0);
  CHECK(co.at(0, 0) == doctest::Approx(e / (e + 6)).epsilon(1e-12));
  for (int j = 1; j < 7; ++j) CHECK(co.at(0, j) == doctest::Approx(1 / (e + 6)).epsilon(1e-12));
}

TEST_CASE("correlation attention: shape errors") {
  std::mt19937_64 rng(5);
  CHECK_THROWS_AS(correlation_attention(random_tensor({6, 4}, rng), random_tensor({4, 4}, rng)),
                  std::invalid_argument);
  CHECK_THROWS_AS(correlation_attention(random_tensor({7, 4}, rng), random_tensor({3, 3}, rng)),
                  std::invalid_argument);
}

TEST_CASE("co matrix rows sum to 1 with entries in (0,1)") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    Tape::active().reset();
    Tensor re = random_tensor({7, 5}, rng, -2, 2);
    Tensor w = random_tensor({5, 5}, rng, -2, 2);
    Tensor co = correlation_attention(re, w);
    for (int i = 0; i < 7; ++i) {
      double sum = 0;
      for (int j = 0; j < 7; ++j) {
        CHECK(co.at(i, j) > 0.0);
        CHECK(co.at(i, j) < 1.0);
        sum += co.at(i, j);
      }
      CHECK(std::abs(sum - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("transformer layer with zero weights reduces to stacked layer norms") {
  std::mt19937_64 rng(7);
  ScqcLayer layer = ScqcLayer::init(28, rng);
  for (Tensor* t : {&layer.wq, &layer.wk, &layer.wv, &layer.w1, &layer.w2}) {
    std::fill(t->values().begin(), t->values().end(), 0.0);
  }
  Tensor x = random_tensor({7, 7}, rng);
  std::mt19937_64 drop_rng(0);
  Tensor out = scqc_transformer_layer(x, layer, false, 0.5, drop_rng);
  CHECK(out.shape() == Shape{7, 7});

  // independent straight-line check: zero weights make both sub-layers
  // vanish, so the output is layer_norm(layer_norm(x))
  std::vector<double> ones(7, 1.0), zeros7(7, 0.0);
  ref::Mat expect = ref::layer_norm(ref::layer_norm(to_ref(x), ones, zeros7), ones, zeros7);
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 7; ++j) CHECK(out.at(i, j) == doctest::Approx(expect[i][j]).epsilon(1e-12));
}

TEST_CASE("transformer layer matches the reference implementation") {
  std::mt19937_64 rng(8);
  ScqcLayer layer = ScqcLayer::init(28, rng);
  Tensor x = random_tensor({7, 7}, rng);
  std::mt19937_64 drop_rng(0);
  Tensor out = scqc_transformer_layer(x, layer, false, 0.5, drop_rng);

  ref::Mat expect = ref::single_head_layer(
      to_ref(x), to_ref(layer.wq), to_ref(layer.wk), to_ref(layer.wv), to_ref(layer.w1),
      to_vec(layer.b1), to_ref(layer.w2), to_vec(layer.b2), to_vec(layer.ln1_gain),
      to_vec(layer.ln1_bias), to_vec(layer.ln2_gain), to_vec(layer.ln2_bias));
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 7; ++j)
      CHECK(out.at(i, j) == doctest::Approx(expect[i][j]).epsilon(1e-10));
  Tape::active().reset();
}

TEST_CASE("transformer layer rejects wrong shapes") {
  std::mt19937_64 rng(9);
  ScqcLayer layer = ScqcLayer::init(28, rng);
  std::mt19937_64 drop_rng(0);
  CHECK_THROWS_AS(scqc_transformer_layer(random_tensor({7, 6}, rng), layer, false, 0.5, drop_rng),
                  std::invalid_argument);
}

TEST_CASE("transformer layer gradients match finite differences") {
  std::mt19937_64 rng(10);
  ScqcLayer layer = ScqcLayer::init(12, rng);
  Tensor x = random_tensor({7, 7}, rng, -1, 1, true);
  std::vector<Tensor> params{x};
  layer.collect_parameters(params);
  std::mt19937_64 drop_rng(0);
  auto res = check_gradients(
      [&] { return sum_all(scqc_transformer_layer(x, layer, false, 0.5, drop_rng)); }, params);
  CHECK_MESSAGE(res.ok, res.detail);
}

TEST_CASE("scqc_forward: shape, determinism, exported co matrix") {
  std::mt19937_64 rng(11);
  ScqcParams params = ScqcParams::init(5, 7, 28, rng);
  ComponentEmbeddings re = random_re(5, rng);
  std::mt19937_64 drop_rng(0);

  ScqcOutput out1 = scqc_forward(re, params, false, 0.5, drop_rng);
  ScqcOutput out2 = scqc_forward(re, params, false, 0.5, drop_rng);
  CHECK(out1.feature.shape() == Shape{7});
  CHECK(out1.feature.values() == out2.feature.values());  // eval-mode determinism

  // the exported matrix is exactly the pre-encoder attention
  Tensor co = correlation_attention(re.matrix, params.w);
  for (int i = 0; i < 49; ++i) CHECK(out1.co_matrix[i] == co.values()[i]);
  for (int i = 0; i < 7; ++i) {
    double sum = 0;
    for (int j = 0; j < 7; ++j) sum += out1.co_matrix[i * 7 + j];
    CHECK(std::abs(sum - 1.0) < 1e-9);
  }
  Tape::active().reset();
}

TEST_CASE("scqc_forward permutation covariance of the attention matrix") {
  std::mt19937_64 rng(12);
  Tensor re = random_tensor({7, 4}, rng);
  Tensor w = random_tensor({4, 4}, rng);
  Tensor co = correlation_attention(re, w);

  // rotate the component rows by 3
  std::vector<int> perm{3, 4, 5, 6, 0, 1, 2};
  std::vector<double> permuted(7 * 4);
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 4; ++j) permuted[i * 4 + j] = re.at(perm[i], j);
  Tensor co_p = correlation_attention(Tensor::from_values({7, 4}, permuted), w);
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 7; ++j)
      CHECK(co_p.at(i, j) == doctest::Approx(co.at(perm[i], perm[j])).epsilon(1e-12));
  Tape::active().reset();
}

TEST_CASE("scqc_forward end-to-end gradient check") {
  std::mt19937_64 rng(13);
  ScqcParams params = ScqcParams::init(4, 3, 8, rng);
  ComponentEmbeddings re = random_re(4, rng);
  std::vector<Tensor> all = params.parameters();
  std::mt19937_64 drop_rng(0);
  auto res = check_gradients(
      [&] { return sum_all(scqc_forward(re, params, false, 0.5, drop_rng).feature); }, all);
  CHECK_MESSAGE(res.ok, res.detail);
}
