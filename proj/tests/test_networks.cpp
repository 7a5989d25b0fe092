#include <gtest/gtest.h>

#include <cmath>

#include "gig/networks.hpp"
#include "gig/ops.hpp"
#include "gig/pointcloud.hpp"
#include "gig/rng.hpp"
#include "testing_util.hpp"

using namespace gig;
using geom::PointCloud;

namespace {

net::ModelConfig tiny_config() {
  net::ModelConfig m;
  m.encoder.kernel_count = 2;
  m.encoder.neighbors = 2;
  m.encoder.kernel_points = 2;
  m.encoder.sigma = 0.5;
  m.encoder.mlp = {4, 4};
  m.encoder.latent_dim = 3;
  m.generator.latent_dim = 3;
  m.generator.base_res = 2;
  m.generator.channels = {4, 3, 3, 2, 3};
  m.generator.upsample_stages = 1;
  return m;
}

PointCloud random_cloud(int n, Rng& rng) {
  PointCloud p;
  for (int i = 0; i < n; ++i)
    p.points.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
  return p;
}

}  // namespace

TEST(Encoder, DefaultWidths) {
  net::EncoderConfig cfg;
  EXPECT_EQ(cfg.input_width(), 35);
  EXPECT_EQ(cfg.latent_dim, 128);
  ad::ParamSet ps = net::init_encoder_params(cfg, 1);
  EXPECT_EQ(ps.find("enc.mlp0.W")->shape, (std::vector<int>{35, 64}));
  EXPECT_EQ(ps.find("enc.mu.W")->shape, (std::vector<int>{1024, 128}));
  EXPECT_EQ(ps.find("enc.kernels")->shape, (std::vector<int>{32, 16, 3}));
}

TEST(Encoder, PermutationInvariance) {
  net::ModelConfig m = tiny_config();
  ad::ParamSet ps = net::init_encoder_params(m.encoder, 7);
  Rng rng(31);
  PointCloud p = random_cloud(12, rng);
  PointCloud shuffled = p;
  rng.shuffle(shuffled.points);

  ad::Tape t1, t2;
  auto q1 = net::encode(t1, t1.constant(geom::cloud_tensor(p)), ps, m.encoder);
  auto q2 = net::encode(t2, t2.constant(geom::cloud_tensor(shuffled)), ps, m.encoder);
  for (int i = 0; i < m.encoder.latent_dim; ++i) {
    EXPECT_NEAR(q1.mu.value()[i], q2.mu.value()[i], 1e-9);
    EXPECT_NEAR(q1.logvar.value()[i], q2.logvar.value()[i], 1e-9);
  }
}

TEST(Encoder, DuplicationIdempotentWithSharedNeighborhoods) {
  // Max pooling is idempotent under duplication when the duplicated points
  // carry the original neighborhoods (supplied via the cache override).
  net::ModelConfig m = tiny_config();
  ad::ParamSet ps = net::init_encoder_params(m.encoder, 8);
  Rng rng(32);
  PointCloud p = random_cloud(10, rng);
  auto nb = geom::knn(p, m.encoder.neighbors);

  PointCloud dup = p;
  dup.points.insert(dup.points.end(), p.points.begin(), p.points.end());
  std::vector<std::vector<int>> dup_nb = nb;
  dup_nb.insert(dup_nb.end(), nb.begin(), nb.end());

  ad::Tape t1, t2;
  auto q1 = net::encode(t1, t1.constant(geom::cloud_tensor(p)), ps, m.encoder,
                        nullptr, &nb);
  auto q2 = net::encode(t2, t2.constant(geom::cloud_tensor(dup)), ps, m.encoder,
                        nullptr, &dup_nb);
  EXPECT_EQ(q1.mu.value(), q2.mu.value());
  EXPECT_EQ(q1.logvar.value(), q2.logvar.value());
}

TEST(Encoder, TooSmallCloudThrows) {
  net::ModelConfig m = tiny_config();
  ad::ParamSet ps = net::init_encoder_params(m.encoder, 9);
  Rng rng(33);
  PointCloud p = random_cloud(2, rng);  // needs k+1 = 3
  ad::Tape tape;
  EXPECT_THROW(net::encode(tape, tape.constant(geom::cloud_tensor(p)), ps, m.encoder),
               std::invalid_argument);
}

TEST(Encoder, LabelMismatchThrows) {
  net::ModelConfig m = tiny_config();
  m.encoder.cond_width = 4;
  ad::ParamSet ps = net::init_encoder_params(m.encoder, 10);
  Rng rng(34);
  PointCloud p = random_cloud(8, rng);
  ad::Tape tape;
  std::vector<double> bad = {1.0, 0.0};
  EXPECT_THROW(net::encode(tape, tape.constant(geom::cloud_tensor(p)), ps,
                           m.encoder, &bad),
               std::invalid_argument);
}

TEST(Encoder, ConditionalChangesOutputWithLabel) {
  net::ModelConfig m = tiny_config();
  m.encoder.cond_width = 2;
  ad::ParamSet ps = net::init_encoder_params(m.encoder, 11);
  Rng rng(35);
  PointCloud p = random_cloud(8, rng);
  std::vector<double> l0 = {1.0, 0.0}, l1 = {0.0, 1.0};
  ad::Tape t1, t2;
  auto q0 = net::encode(t1, t1.constant(geom::cloud_tensor(p)), ps, m.encoder, &l0);
  auto q1 = net::encode(t2, t2.constant(geom::cloud_tensor(p)), ps, m.encoder, &l1);
  EXPECT_NE(q0.mu.value(), q1.mu.value());
}

TEST(Reparameterize, ZeroEpsGivesMean) {
  net::ModelConfig m = tiny_config();
  ad::ParamSet ps = net::init_encoder_params(m.encoder, 12);
  Rng rng(36);
  PointCloud p = random_cloud(8, rng);
  ad::Tape tape;
  auto q = net::encode(tape, tape.constant(geom::cloud_tensor(p)), ps, m.encoder);
  ad::Var z = net::reparameterize(q, std::vector<double>(3, 0.0));
  EXPECT_EQ(z.value(), q.mu.value());
}

TEST(Reparameterize, LogvarClampBoundsSigma) {
  ad::Tape tape;
  net::GaussianVars q;
  q.mu = tape.constant(ad::Tensor({1, 2}, {1.0, -2.0}));
  // The encoder clamps logvar to [-10, 10]; at the lower clamp sigma = e^-5.
  q.logvar = ad::clamp(tape.constant(ad::Tensor({1, 2}, {-1000.0, -1000.0})),
                       -10.0, 10.0);
  ad::Var z = net::reparameterize(q, {1.0, 1.0});
  for (int i = 0; i < 2; ++i)
    EXPECT_NEAR(z.value()[i], q.mu.value()[i], std::exp(-5.0) + 1e-12);
}

TEST(Reparameterize, MonteCarloMoments) {
  ad::Tape tape;
  net::GaussianVars q;
  const double mu0 = 0.3, mu1 = -1.1;
  const double lv0 = std::log(0.49), lv1 = std::log(2.25);
  q.mu = tape.constant(ad::Tensor({1, 2}, {mu0, mu1}));
  q.logvar = tape.constant(ad::Tensor({1, 2}, {lv0, lv1}));
  Rng rng(37);
  const int n = 100000;
  double s0 = 0, s1 = 0, ss0 = 0, ss1 = 0;
  for (int t = 0; t < n; ++t) {
    ad::Var z = net::reparameterize(q, {rng.normal(), rng.normal()});
    s0 += z.value()[0];
    s1 += z.value()[1];
    ss0 += z.value()[0] * z.value()[0];
    ss1 += z.value()[1] * z.value()[1];
  }
  const double m0 = s0 / n, m1 = s1 / n;
  const double v0 = ss0 / n - m0 * m0, v1 = ss1 / n - m1 * m1;
  // 3-sigma bands: sd/sqrt(n) for the mean, var*sqrt(2/n) for the variance.
  EXPECT_NEAR(m0, mu0, 3 * 0.7 / std::sqrt(n));
  EXPECT_NEAR(m1, mu1, 3 * 1.5 / std::sqrt(n));
  EXPECT_NEAR(v0, 0.49, 3 * 0.49 * std::sqrt(2.0 / n));
  EXPECT_NEAR(v1, 2.25, 3 * 2.25 * std::sqrt(2.0 / n));
}

TEST(Generator, FullPresetShapeTable) {
  net::ModelConfig m = net::model_preset("full");
  ad::ParamSet ps = net::init_generator_params(m.generator, 13);
  EXPECT_EQ(m.generator.output_res(), 46);
  EXPECT_EQ(m.generator.output_points(), 2116);
  Rng rng(38);
  std::vector<double> z(128);
  for (auto& v : z) v = rng.normal();
  ad::Tape tape;
  std::vector<net::StageShape> trace;
  ad::Var img = net::generate(tape, tape.constant(ad::Tensor({1, 128}, z)), ps,
                              m.generator, nullptr, &trace);
  EXPECT_EQ(img.shape(), (std::vector<int>{1, 3, 46, 46}));

  const std::vector<net::StageShape> expected = {
      {"Input", {1, 128}},
      {"FC", {1, 18432}},
      {"Reshape", {512, 6, 6}},
      {"Padding and Conv", {384, 6, 6}},
      {"Padding and Conv", {384, 6, 6}},
      {"Upsample", {384, 12, 12}},
      {"Padding and Conv", {256, 12, 12}},
      {"Padding and Conv", {256, 12, 12}},
      {"Upsample", {256, 24, 24}},
      {"Padding and Conv", {128, 24, 24}},
      {"Padding and Conv", {128, 24, 24}},
      {"Upsample", {128, 48, 48}},
      {"Padding and Conv", {128, 48, 48}},
      {"Padding and Conv", {128, 48, 48}},
      {"Conv", {64, 46, 46}},
      {"Conv and tanh", {3, 46, 46}},
      {"Reshape", {3, 2116}},
  };
  ASSERT_EQ(trace.size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    EXPECT_EQ(trace[i].op, expected[i].op) << "row " << i;
    EXPECT_EQ(trace[i].shape, expected[i].shape) << "row " << i;
  }
}

TEST(Generator, OutputsStrictlyInsideTanhRange) {
  net::ModelConfig m = net::model_preset("desk");
  ad::ParamSet ps = net::init_generator_params(m.generator, 14);
  Rng rng(39);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> z(m.generator.latent_dim);
    for (auto& v : z) v = rng.normal();
    gim::GeometryImage img = net::decode_image(ps, m.generator, z);
    for (double v : img.data) {
      EXPECT_GT(v, -1.0);
      EXPECT_LT(v, 1.0);
    }
  }
}

TEST(Generator, DeskPresetOutputss256Points) {
  net::ModelConfig m = net::model_preset("desk");
  EXPECT_EQ(m.generator.output_res(), 16);
  EXPECT_EQ(m.generator.output_points(), 256);
  EXPECT_EQ(m.encoder.input_width(), 11);
}

TEST(Generator, DeterministicFunctionOfInputs) {
  net::ModelConfig m = tiny_config();
  ad::ParamSet ps = net::init_generator_params(m.generator, 15);
  std::vector<double> z = {0.3, -0.4, 0.9};
  geom::PointCloud a = net::decode_cloud(ps, m.generator, z);
  geom::PointCloud b = net::decode_cloud(ps, m.generator, z);
  for (std::size_t i = 0; i < a.size(); ++i)
    EXPECT_EQ((a.points[i] - b.points[i]).norm(), 0.0);
}

TEST(Generator, LatentWidthMismatchThrows) {
  net::ModelConfig m = tiny_config();
  ad::ParamSet ps = net::init_generator_params(m.generator, 16);
  ad::Tape tape;
  EXPECT_THROW(net::generate(tape, tape.constant(ad::Tensor({1, 5})), ps, m.generator),
               std::invalid_argument);
}

TEST(Generator, TinyConfigEndToEndGradient) {
  net::ModelConfig m = tiny_config();
  ad::ParamSet enc = net::init_encoder_params(m.encoder, 17);
  ad::ParamSet gen = net::init_generator_params(m.generator, 18);
  EXPECT_LT(enc.total_parameters() + gen.total_parameters(), 5000);
  Rng rng(40);
  PointCloud p = random_cloud(6, rng);
  auto nb = geom::knn(p, m.encoder.neighbors);
  std::vector<double> eps = {0.2, -0.1, 0.4};
  auto build = [&](ad::Tape& tape) {
    ad::Var cloud = tape.constant(geom::cloud_tensor(p));
    auto q = net::encode(tape, cloud, enc, m.encoder, nullptr, &nb);
    ad::Var z = net::reparameterize(q, eps);
    ad::Var img = net::generate(tape, z, gen, m.generator);
    return geom::chamfer_distance(cloud, gim::image_to_cloud(img));
  };
  auto res = testutil::check_param_gradients(build, {&enc, &gen});
  EXPECT_LT(res.max_rel_err, 1e-3) << res.worst;
}

TEST(ParameterInit, DeterministicPerSeed) {
  net::ModelConfig m = net::model_preset("desk");
  ad::ParamSet a = net::init_encoder_params(m.encoder, 99);
  ad::ParamSet b = net::init_encoder_params(m.encoder, 99);
  ASSERT_EQ(a.params.size(), b.params.size());
  for (std::size_t i = 0; i < a.params.size(); ++i)
    EXPECT_EQ(*a.params[i].value, *b.params[i].value) << a.params[i].name;
  ad::ParamSet c = net::init_encoder_params(m.encoder, 100);
  EXPECT_NE(*a.params[1].value, *c.params[1].value);
}

TEST(ParameterInit, BiasesZeroAndVarianceMatchesGlorot) {
  net::ModelConfig m = net::model_preset("full");
  ad::ParamSet ps = net::init_generator_params(m.generator, 101);
  for (const auto& p : ps.params) {
    if (p.name.size() > 2 && p.name.substr(p.name.size() - 2) == ".b") {
      for (double v : *p.value) EXPECT_EQ(v, 0.0);
    }
  }
  const auto* fc = ps.find("gen.fc.W");
  ASSERT_NE(fc, nullptr);
  const int fan_in = fc->shape[0], fan_out = fc->shape[1];
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  double mean = 0.0;
  for (double v : *fc->value) mean += v;
  mean /= static_cast<double>(fc->value->size());
  double var = 0.0;
  for (double v : *fc->value) var += (v - mean) * (v - mean);
  var /= static_cast<double>(fc->value->size());
  EXPECT_NEAR(var, bound * bound / 3.0, 0.1 * bound * bound / 3.0);
}
