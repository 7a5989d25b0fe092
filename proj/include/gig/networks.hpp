#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gig/geometry_image.hpp"
#include "gig/ops.hpp"
#include "gig/pointcloud.hpp"
#include "gig/tape.hpp"

namespace gig::net {

struct EncoderConfig {
  int kernel_count = 32;  // structural feature width L
  int neighbors = 16;     // k
  int kernel_points = 16; // points per kernel set m
  double sigma = 0.1;     // kernel correlation bandwidth
  std::vector<int> mlp = {64, 64, 64, 128, 1024};
  int latent_dim = 128;
  int cond_width = 0;  // one-hot width; 0 = unconditional

  int input_width() const { return 3 + kernel_count; }
  void validate() const;
};

struct GeneratorConfig {
  int latent_dim = 128;
  int base_res = 6;
  // First entry: reshape channels. Middle entries: padded 3x3 convs in
  // upsample_stages+1 equal groups. Last two: valid 3x3 conv, then 1x1 conv
  // with tanh (must end at 3 channels).
  std::vector<int> channels = {512, 384, 384, 256, 256, 128, 128, 128, 128, 64, 3};
  int upsample_stages = 3;
  int cond_width = 0;

  int output_res() const { return base_res * (1 << upsample_stages) - 2; }
  int output_points() const { return output_res() * output_res(); }
  int convs_per_group() const {
    return (static_cast<int>(channels.size()) - 3) / (upsample_stages + 1);
  }
  void validate() const;
};

struct ModelConfig {
  EncoderConfig encoder;
  GeneratorConfig generator;
};

/// "full": the architecture of the reference parameter table (latent 128,
/// 46x46 output). "desk": a small CPU-trainable variant (latent 16, 16x16
/// output, channel schedule divided by 8).
ModelConfig model_preset(const std::string& name);

/// Latent posterior/prior: mean and standard deviation per dimension.
struct DiagonalGaussian {
  std::vector<double> mu;
  std::vector<double> sigma;
};

/// Tape-side Gaussian; the network emits log-variance.
struct GaussianVars {
  ad::Var mu;      // [1,d]
  ad::Var logvar;  // [1,d]

  DiagonalGaussian concrete() const;
};

/// Glorot-uniform weights, zero biases, kernel points uniform in
/// [-0.2, 0.2]^3; deterministic per seed.
ad::ParamSet init_encoder_params(const EncoderConfig& cfg, std::uint64_t seed);
ad::ParamSet init_generator_params(const GeneratorConfig& cfg, std::uint64_t seed);

/// Kernel-correlation features + coordinates through a per-point MLP, max
/// pooled, then linear heads for mean and clamped log-variance. Neighbor
/// indices may be supplied to reuse a cached kNN.
GaussianVars encode(ad::Tape& tape, const ad::Var& cloud, ad::ParamSet& params,
                    const EncoderConfig& cfg,
                    const std::vector<double>* label = nullptr,
                    const std::vector<std::vector<int>>* neighbors = nullptr);

struct StageShape {
  std::string op;
  std::vector<int> shape;  // c, h, w (or widths for FC stages)
};

/// z -> geometry image [1,3,R,R]; rotational padding before every padded
/// conv, ReLU between hidden layers, tanh output.
ad::Var generate(ad::Tape& tape, const ad::Var& z, ad::ParamSet& params,
                 const GeneratorConfig& cfg,
                 const std::vector<double>* label = nullptr,
                 std::vector<StageShape>* trace = nullptr);

/// z = mu + eps o sigma with sigma = exp(logvar / 2).
ad::Var reparameterize(const GaussianVars& q, const std::vector<double>& eps);

// Convenience non-training entry points (fresh private tape per call).
gim::GeometryImage decode_image(ad::ParamSet& gen_params,
                                const GeneratorConfig& cfg,
                                const std::vector<double>& z,
                                const std::vector<double>* label = nullptr);
geom::PointCloud decode_cloud(ad::ParamSet& gen_params, const GeneratorConfig& cfg,
                              const std::vector<double>& z,
                              const std::vector<double>* label = nullptr);
DiagonalGaussian encode_distribution(ad::ParamSet& enc_params,
                                     const EncoderConfig& cfg,
                                     const geom::PointCloud& cloud,
                                     const std::vector<double>* label = nullptr);

}  // namespace gig::net
