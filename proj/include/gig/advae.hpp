#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gig/networks.hpp"
#include "gig/ops.hpp"
#include "gig/pointcloud.hpp"

namespace gig::advae {

/// Raised when a training loss goes non-finite; names the offending term.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& term, int epoch)
      : std::runtime_error("non-finite loss term '" + term + "' at epoch " +
                           std::to_string(epoch)),
        term(term) {}
  std::string term;
};

struct LossWeights {
  double alpha = 1.0;  // prior weight
  double beta = 0.1;   // adversarial weight; 0 collapses to a plain VAE
};

struct TrainConfig {
  net::ModelConfig model;
  std::string preset = "desk";
  int epochs = 150;
  int pretrain_epochs = 50;  // run first, with beta = 0
  int batch = 16;
  double lr = 1e-3;
  LossWeights weights;
  std::uint64_t seed = 0;
  bool conditional = false;
  std::vector<std::string> categories;  // sorted one-hot order when conditional

  /// Paper-scale defaults: lr 1e-4, 1200 epochs, 300 pretrain, batch 32.
  static TrainConfig preset_config(const std::string& name);
};

// KL(q || N(0,I)) summed over dimensions: 1/2 (mu^2 + sigma^2 - 1 - log sigma^2).
ad::Var kl_prior(const net::GaussianVars& q);
double kl_prior(const net::DiagonalGaussian& q);

// Squared Hellinger distance between diagonal Gaussians, in [0, 1].
ad::Var hellinger_sq(const net::GaussianVars& p, const net::GaussianVars& q);
double hellinger_sq(const net::DiagonalGaussian& p, const net::DiagonalGaussian& q);

/// Chamfer distance between the input cloud and its reconstruction.
ad::Var reconstruction_loss(const ad::Var& cloud, const ad::Var& reconstructed);

struct AdversarialLosses {
  ad::Var ad_g;
  ad::Var ad_e;  // exactly -ad_g
};

/// Per-sample paired H^2(q_rec_i, q_real_i) plus H^2(q_fake_i, N(0,I)),
/// each averaged over the batch, combined with weight 1/2.
AdversarialLosses adversarial_losses(const std::vector<net::GaussianVars>& q_real,
                                     const std::vector<net::GaussianVars>& q_rec,
                                     const std::vector<net::GaussianVars>& q_fake);

struct Dataset {
  std::vector<geom::PointCloud> clouds;
  std::vector<int> labels;  // per-cloud category index; empty if unconditional
};

struct EpochLoss {
  int epoch = 0;
  double rec = 0, prior = 0, ad_e = 0, ad_g = 0;
};

/// "epoch,L_rec,L_prior,L_adE,L_adG" rows at 9 significant digits.
std::string loss_log_text(const std::vector<EpochLoss>& log);

struct Checkpoint {
  std::map<std::string, std::string> header;  // config as key=value
  ad::ParamSet encoder;
  ad::ParamSet generator;

  net::ModelConfig model_config() const;
  bool conditional() const;
  std::vector<std::string> categories() const;
};

/// Binary container: magic "GIGCKPT1", length-prefixed key=value header,
/// then named float64 tensors (see README for the exact layout).
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

struct TrainResult {
  Checkpoint checkpoint;                 // final parameters
  std::optional<Checkpoint> best;       // best-on-validation, if val provided
  double best_val_rec = 0.0;
  std::vector<EpochLoss> log;
};

/// Iterative encoder/generator optimization with reconstruction, prior and
/// adversarial Hellinger terms; pretraining epochs run with beta = 0.
/// Deterministic for a fixed seed.
TrainResult train_advae(const Dataset& train, const Dataset* validation,
                        const TrainConfig& cfg);

/// Encoder consumes the partial cloud, reconstruction target is the complete
/// cloud; no adversarial terms (prior retained with the configured alpha).
TrainResult train_completion(const std::vector<geom::PointCloud>& partial,
                             const std::vector<geom::PointCloud>& complete,
                             const TrainConfig& cfg);

// Latent editing on a trained checkpoint.
net::DiagonalGaussian encode_cloud(Checkpoint& ckpt, const geom::PointCloud& p,
                                   const std::vector<double>* label = nullptr);
geom::PointCloud decode_latent(Checkpoint& ckpt, const std::vector<double>& z,
                               const std::vector<double>* label = nullptr);
std::vector<geom::PointCloud> interpolate_latent(
    Checkpoint& ckpt, const std::vector<double>& z_a,
    const std::vector<double>& z_b, int steps,
    const std::vector<double>* label = nullptr);
geom::PointCloud latent_arithmetic(Checkpoint& ckpt,
                                   const std::vector<double>& z_target,
                                   const std::vector<double>& z_plus,
                                   const std::vector<double>& z_minus,
                                   const std::vector<double>* label = nullptr);

}  // namespace gig::advae
