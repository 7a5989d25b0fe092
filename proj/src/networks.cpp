#include "gig/networks.hpp"

#include <cmath>
#include <stdexcept>

#include "gig/rng.hpp"

namespace gig::net {

void EncoderConfig::validate() const {
  if (kernel_count < 1 || neighbors < 1 || kernel_points < 1)
    throw std::invalid_argument("encoder config: L, k, m must be >= 1");
  if (!(sigma > 0.0))
    throw std::invalid_argument("encoder config: sigma must be positive");
  if (mlp.empty())
    throw std::invalid_argument("encoder config: empty MLP schedule");
  if (latent_dim < 1)
    throw std::invalid_argument("encoder config: latent_dim must be >= 1");
  if (cond_width < 0)
    throw std::invalid_argument("encoder config: negative one-hot width");
}

void GeneratorConfig::validate() const {
  if (latent_dim < 1)
    throw std::invalid_argument("generator config: latent_dim must be >= 1");
  if (base_res < 1 || upsample_stages < 0)
    throw std::invalid_argument("generator config: bad resolution schedule");
  if (channels.size() < 4)
    throw std::invalid_argument("generator config: need at least 4 channel entries");
  if (channels.back() != 3)
    throw std::invalid_argument("generator config: output must have 3 channels");
  const int padded = static_cast<int>(channels.size()) - 3;
  if (padded % (upsample_stages + 1) != 0)
    throw std::invalid_argument(
        "generator config: padded convs must split evenly across upsample groups");
  if (base_res * (1 << upsample_stages) <= 2)
    throw std::invalid_argument("generator config: output resolution not positive");
  for (int c : channels)
    if (c < 1) throw std::invalid_argument("generator config: channel < 1");
  if (cond_width < 0)
    throw std::invalid_argument("generator config: negative one-hot width");
}

ModelConfig model_preset(const std::string& name) {
  if (name == "full") return ModelConfig{};
  if (name == "desk") {
    ModelConfig m;
    m.encoder.kernel_count = 8;
    m.encoder.neighbors = 8;
    m.encoder.kernel_points = 8;
    m.encoder.mlp = {8, 8, 8, 16, 128};
    m.encoder.latent_dim = 16;
    m.generator.latent_dim = 16;
    m.generator.base_res = 9;
    m.generator.channels = {64, 48, 48, 32, 32, 8, 3};
    m.generator.upsample_stages = 1;
    return m;
  }
  throw std::invalid_argument("unknown preset '" + name + "'");
}

DiagonalGaussian GaussianVars::concrete() const {
  DiagonalGaussian g;
  g.mu = mu.value();
  g.sigma.reserve(logvar.numel());
  for (double lv : logvar.value()) g.sigma.push_back(std::exp(0.5 * lv));
  return g;
}

namespace {

ad::Tensor glorot_uniform(std::vector<int> shape, int fan_in, int fan_out,
                          Rng& rng) {
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  ad::Tensor t(std::move(shape));
  for (auto& v : t.data()) v = rng.uniform(-bound, bound);
  return t;
}

void add_linear(ad::ParamSet& ps, const std::string& name, int in, int out,
                Rng& rng) {
  ps.add(name + ".W", glorot_uniform({in, out}, in, out, rng));
  ps.add(name + ".b", ad::Tensor({out}));
}

void add_conv(ad::ParamSet& ps, const std::string& name, int cin, int cout,
              int kh, int kw, Rng& rng) {
  ps.add(name + ".K",
         glorot_uniform({cout, cin, kh, kw}, cin * kh * kw, cout * kh * kw, rng));
  ps.add(name + ".b", ad::Tensor({cout}));
}

ad::Var dense(ad::Tape& tape, const ad::Var& x, ad::ParamSet& ps,
              const std::string& name) {
  return ad::linear(x, tape.param(*ps.find(name + ".W")),
                    tape.param(*ps.find(name + ".b")));
}

ad::Var conv(ad::Tape& tape, const ad::Var& x, ad::ParamSet& ps,
             const std::string& name) {
  return ad::conv2d(x, tape.param(*ps.find(name + ".K")),
                    tape.param(*ps.find(name + ".b")));
}

}  // namespace

ad::ParamSet init_encoder_params(const EncoderConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  ad::ParamSet ps;
  {
    ad::Tensor kernels({cfg.kernel_count, cfg.kernel_points, 3});
    for (auto& v : kernels.data()) v = rng.uniform(-0.2, 0.2);
    ps.add("enc.kernels", std::move(kernels));
  }
  int width = cfg.input_width();
  for (std::size_t i = 0; i < cfg.mlp.size(); ++i) {
    add_linear(ps, "enc.mlp" + std::to_string(i), width, cfg.mlp[i], rng);
    width = cfg.mlp[i];
  }
  const int head_in = width + cfg.cond_width;
  add_linear(ps, "enc.mu", head_in, cfg.latent_dim, rng);
  add_linear(ps, "enc.logvar", head_in, cfg.latent_dim, rng);
  return ps;
}

ad::ParamSet init_generator_params(const GeneratorConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  ad::ParamSet ps;
  const int c0 = cfg.channels[0];
  const int fc_out = c0 * cfg.base_res * cfg.base_res;
  add_linear(ps, "gen.fc", cfg.latent_dim + cfg.cond_width, fc_out, rng);
  const int padded = static_cast<int>(cfg.channels.size()) - 3;
  int cin = c0;
  for (int i = 0; i < padded; ++i) {
    const int cout = cfg.channels[1 + i];
    add_conv(ps, "gen.conv" + std::to_string(i), cin, cout, 3, 3, rng);
    cin = cout;
  }
  add_conv(ps, "gen.valid", cin, cfg.channels[cfg.channels.size() - 2], 3, 3, rng);
  add_conv(ps, "gen.out", cfg.channels[cfg.channels.size() - 2], 3, 1, 1, rng);
  return ps;
}

GaussianVars encode(ad::Tape& tape, const ad::Var& cloud, ad::ParamSet& params,
                    const EncoderConfig& cfg, const std::vector<double>* label,
                    const std::vector<std::vector<int>>* neighbors) {
  cfg.validate();
  if (cloud.shape().size() != 2 || cloud.shape()[1] != 3)
    throw std::invalid_argument("encode: cloud must be [n,3]");
  const int n = cloud.shape()[0];
  if (cfg.cond_width > 0) {
    if (!label || static_cast<int>(label->size()) != cfg.cond_width)
      throw std::invalid_argument("encode: label width does not match config");
  } else if (label) {
    throw std::invalid_argument("encode: label given to unconditional encoder");
  }
  std::vector<std::vector<int>> own_neighbors;
  if (!neighbors) {
    if (n < cfg.neighbors + 1)
      throw std::invalid_argument("encode: cloud smaller than k+1 points");
    own_neighbors = geom::knn(geom::cloud_from_var(cloud), cfg.neighbors);
    neighbors = &own_neighbors;
  }
  ad::Var kernels = tape.param(*params.find("enc.kernels"));
  ad::Var features = geom::kernel_correlation(cloud, kernels, *neighbors, cfg.sigma);
  ad::Var h = ad::concat({cloud, features}, 1);  // [n, 3+L]
  for (std::size_t i = 0; i < cfg.mlp.size(); ++i)
    h = ad::relu(dense(tape, h, params, "enc.mlp" + std::to_string(i)));
  ad::Var global = ad::reshape(ad::max(h, 0), {1, cfg.mlp.back()});
  if (cfg.cond_width > 0) {
    ad::Var lab = tape.constant(ad::Tensor({1, cfg.cond_width}, *label));
    global = ad::concat({global, lab}, 1);
  }
  GaussianVars q;
  q.mu = dense(tape, global, params, "enc.mu");
  q.logvar = ad::clamp(dense(tape, global, params, "enc.logvar"), -10.0, 10.0);
  return q;
}

ad::Var generate(ad::Tape& tape, const ad::Var& z, ad::ParamSet& params,
                 const GeneratorConfig& cfg, const std::vector<double>* label,
                 std::vector<StageShape>* trace) {
  cfg.validate();
  ad::Var code = z;
  if (code.shape().size() == 1)
    code = ad::reshape(code, {1, code.shape()[0]});
  if (code.shape().size() != 2 || code.shape()[0] != 1 ||
      code.shape()[1] != cfg.latent_dim)
    throw std::invalid_argument("generate: latent width does not match config");
  if (cfg.cond_width > 0) {
    if (!label || static_cast<int>(label->size()) != cfg.cond_width)
      throw std::invalid_argument("generate: label width does not match config");
    code = ad::concat({code, tape.constant(ad::Tensor({1, cfg.cond_width}, *label))}, 1);
  } else if (label) {
    throw std::invalid_argument("generate: label given to unconditional generator");
  }
  auto note = [&trace](const std::string& op, std::vector<int> shape) {
    if (trace) trace->push_back({op, std::move(shape)});
  };
  note("Input", {1, code.shape()[1]});

  const int c0 = cfg.channels[0];
  ad::Var h = ad::relu(dense(tape, code, params, "gen.fc"));
  note("FC", {1, h.shape()[1]});
  int res = cfg.base_res;
  h = ad::reshape(h, {1, c0, res, res});
  note("Reshape", {c0, res, res});

  const int per_group = cfg.convs_per_group();
  int conv_idx = 0;
  for (int g = 0; g <= cfg.upsample_stages; ++g) {
    for (int s = 0; s < per_group; ++s) {
      h = ad::relu(
          conv(tape, gim::rotational_pad(h, 1), params,
               "gen.conv" + std::to_string(conv_idx)));
      ++conv_idx;
      note("Padding and Conv", {h.shape()[1], h.shape()[2], h.shape()[3]});
    }
    if (g < cfg.upsample_stages) {
      h = ad::upsample_nearest2x(h);
      res *= 2;
      note("Upsample", {h.shape()[1], h.shape()[2], h.shape()[3]});
    }
  }
  h = ad::relu(conv(tape, h, params, "gen.valid"));
  note("Conv", {h.shape()[1], h.shape()[2], h.shape()[3]});
  h = ad::tanh(conv(tape, h, params, "gen.out"));
  note("Conv and tanh", {h.shape()[1], h.shape()[2], h.shape()[3]});
  note("Reshape", {3, h.shape()[2] * h.shape()[3]});
  return h;
}

ad::Var reparameterize(const GaussianVars& q, const std::vector<double>& eps) {
  if (static_cast<std::int64_t>(eps.size()) != q.mu.numel())
    throw std::invalid_argument("reparameterize: eps width mismatch");
  ad::Tape* tape = q.mu.tape();
  ad::Var eps_var = tape->constant(ad::Tensor(q.mu.shape(), eps));
  ad::Var sigma = ad::exp(ad::scalar_mul(q.logvar, 0.5));
  return ad::add(q.mu, ad::mul(eps_var, sigma));
}

gim::GeometryImage decode_image(ad::ParamSet& gen_params,
                                const GeneratorConfig& cfg,
                                const std::vector<double>& z,
                                const std::vector<double>* label) {
  ad::Tape tape;
  ad::Var zv = tape.constant(
      ad::Tensor({1, static_cast<int>(z.size())}, z));
  return gim::image_from_var(generate(tape, zv, gen_params, cfg, label));
}

geom::PointCloud decode_cloud(ad::ParamSet& gen_params, const GeneratorConfig& cfg,
                              const std::vector<double>& z,
                              const std::vector<double>* label) {
  return gim::to_point_cloud(decode_image(gen_params, cfg, z, label));
}

DiagonalGaussian encode_distribution(ad::ParamSet& enc_params,
                                     const EncoderConfig& cfg,
                                     const geom::PointCloud& cloud,
                                     const std::vector<double>* label) {
  ad::Tape tape;
  ad::Var cv = tape.constant(geom::cloud_tensor(cloud));
  return encode(tape, cv, enc_params, cfg, label).concrete();
}

}  // namespace gig::net
