#include "gig/advae.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "gig/adam.hpp"
#include "gig/geometry_image.hpp"
#include "gig/rng.hpp"

namespace gig::advae {

TrainConfig TrainConfig::preset_config(const std::string& name) {
  TrainConfig cfg;
  cfg.model = net::model_preset(name);
  cfg.preset = name;
  if (name == "full") {
    cfg.epochs = 1200;
    cfg.pretrain_epochs = 300;
    cfg.batch = 32;
    cfg.lr = 1e-4;
  } else {  // desk
    cfg.epochs = 150;
    cfg.pretrain_epochs = 50;
    cfg.batch = 16;
    cfg.lr = 1e-3;
  }
  return cfg;
}

ad::Var kl_prior(const net::GaussianVars& q) {
  ad::Tape* tape = q.mu.tape();
  ad::Var ones = tape->constant(ad::Tensor::full(q.mu.shape(), 1.0));
  ad::Var inner = ad::sub(
      ad::sub(ad::add(ad::mul(q.mu, q.mu), ad::exp(q.logvar)), ones), q.logvar);
  return ad::scalar_mul(ad::sum(inner), 0.5);
}

double kl_prior(const net::DiagonalGaussian& q) {
  if (q.mu.size() != q.sigma.size())
    throw std::invalid_argument("kl_prior: mu/sigma width mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < q.mu.size(); ++i) {
    if (!(q.sigma[i] > 0.0))
      throw std::invalid_argument("kl_prior: sigma must be positive");
    const double s2 = q.sigma[i] * q.sigma[i];
    acc += q.mu[i] * q.mu[i] + s2 - 1.0 - std::log(s2);
  }
  return 0.5 * acc;
}

ad::Var hellinger_sq(const net::GaussianVars& p, const net::GaussianVars& q) {
  if (p.mu.shape() != q.mu.shape() || p.logvar.shape() != q.logvar.shape() ||
      p.mu.shape() != p.logvar.shape())
    throw std::invalid_argument("hellinger_sq: shape mismatch");
  ad::Tape* tape = p.mu.tape();
  auto m1 = p.mu.node(), l1 = p.logvar.node(), m2 = q.mu.node(),
       l2 = q.logvar.node();
  const std::size_t d = m1->value.size();
  const bool rg = p.mu.requires_grad() || p.logvar.requires_grad() ||
                  q.mu.requires_grad() || q.logvar.requires_grad();
  ad::Var out = tape->make_result({1}, rg);
  auto on = out.node();

  double log_bc = 0.0;  // log Bhattacharyya coefficient, <= 0
  for (std::size_t i = 0; i < d; ++i) {
    const double s = std::exp(l1->value[i]) + std::exp(l2->value[i]);
    const double diff = m1->value[i] - m2->value[i];
    log_bc += 0.5 * (std::log(2.0) + 0.5 * (l1->value[i] + l2->value[i]) -
                     std::log(s)) -
              diff * diff / (4.0 * s);
  }
  const double bc = std::exp(log_bc);
  on->value[0] = 1.0 - bc;

  if (rg) {
    tape->record([m1, l1, m2, l2, on, bc, d]() {
      if (!on->grad) return;
      const double g = -(*on->grad)[0] * bc;  // d(1-e^A)/dA = -e^A
      std::vector<double>* gm1 = m1->requires_grad ? &m1->ensure_grad() : nullptr;
      std::vector<double>* gl1 = l1->requires_grad ? &l1->ensure_grad() : nullptr;
      std::vector<double>* gm2 = m2->requires_grad ? &m2->ensure_grad() : nullptr;
      std::vector<double>* gl2 = l2->requires_grad ? &l2->ensure_grad() : nullptr;
      for (std::size_t i = 0; i < d; ++i) {
        const double e1 = std::exp(l1->value[i]), e2 = std::exp(l2->value[i]);
        const double s = e1 + e2;
        const double diff = m1->value[i] - m2->value[i];
        const double dmu = -diff / (2.0 * s);
        if (gm1) (*gm1)[i] += g * dmu;
        if (gm2) (*gm2)[i] -= g * dmu;
        const double common = diff * diff / (4.0 * s * s);
        if (gl1) (*gl1)[i] += g * (0.5 * (0.5 - e1 / s) + common * e1);
        if (gl2) (*gl2)[i] += g * (0.5 * (0.5 - e2 / s) + common * e2);
      }
    });
  }
  return out;
}

double hellinger_sq(const net::DiagonalGaussian& p, const net::DiagonalGaussian& q) {
  if (p.mu.size() != q.mu.size())
    throw std::invalid_argument("hellinger_sq: width mismatch");
  double log_bc = 0.0;
  for (std::size_t i = 0; i < p.mu.size(); ++i) {
    if (!(p.sigma[i] > 0.0) || !(q.sigma[i] > 0.0))
      throw std::invalid_argument("hellinger_sq: sigma must be positive");
    const double s = p.sigma[i] * p.sigma[i] + q.sigma[i] * q.sigma[i];
    const double diff = p.mu[i] - q.mu[i];
    log_bc += 0.5 * std::log(2.0 * p.sigma[i] * q.sigma[i] / s) -
              diff * diff / (4.0 * s);
  }
  return 1.0 - std::exp(log_bc);
}

ad::Var reconstruction_loss(const ad::Var& cloud, const ad::Var& reconstructed) {
  return geom::chamfer_distance(cloud, reconstructed);
}

namespace {

net::GaussianVars standard_prior(ad::Tape& tape, const std::vector<int>& shape) {
  net::GaussianVars prior;
  prior.mu = tape.constant(ad::Tensor(shape));
  prior.logvar = tape.constant(ad::Tensor(shape));
  return prior;
}

ad::Var batch_mean(const std::vector<ad::Var>& xs) {
  ad::Var acc = xs.front();
  for (std::size_t i = 1; i < xs.size(); ++i) acc = ad::add(acc, xs[i]);
  return ad::scalar_mul(acc, 1.0 / static_cast<double>(xs.size()));
}

}  // namespace

AdversarialLosses adversarial_losses(const std::vector<net::GaussianVars>& q_real,
                                     const std::vector<net::GaussianVars>& q_rec,
                                     const std::vector<net::GaussianVars>& q_fake) {
  if (q_real.empty() || q_real.size() != q_rec.size() ||
      q_real.size() != q_fake.size())
    throw std::invalid_argument("adversarial_losses: batch size mismatch");
  ad::Tape* tape = q_real.front().mu.tape();
  std::vector<ad::Var> h_rec, h_fake;
  h_rec.reserve(q_real.size());
  h_fake.reserve(q_real.size());
  for (std::size_t i = 0; i < q_real.size(); ++i) {
    h_rec.push_back(hellinger_sq(q_rec[i], q_real[i]));
    net::GaussianVars prior = standard_prior(*tape, q_fake[i].mu.shape());
    h_fake.push_back(hellinger_sq(q_fake[i], prior));
  }
  AdversarialLosses out;
  out.ad_g = ad::scalar_mul(ad::add(batch_mean(h_rec), batch_mean(h_fake)), 0.5);
  out.ad_e = ad::negate(out.ad_g);
  return out;
}

std::string loss_log_text(const std::vector<EpochLoss>& log) {
  std::string out = "epoch,L_rec,L_prior,L_adE,L_adG\n";
  char buf[160];
  for (const auto& e : log) {
    std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g,%.9g\n", e.epoch, e.rec,
                  e.prior, e.ad_e, e.ad_g);
    out += buf;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoint serialization

namespace {

template <typename T>
void write_raw(std::ostream& out, const T& v) {
  static_assert(std::endian::native == std::endian::little,
                "checkpoint writer assumes a little-endian host");
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in, const std::string& what) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("checkpoint: truncated while reading " + what);
  return v;
}

void write_param(std::ostream& out, const ad::Parameter& p) {
  write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(p.name.size()));
  out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
  write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(p.shape.size()));
  for (int d : p.shape) write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(d));
  out.write(reinterpret_cast<const char*>(p.value->data()),
            static_cast<std::streamsize>(p.value->size() * sizeof(double)));
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) out.push_back(std::stoi(tok));
  return out;
}

std::string format_int_list(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(v[i]);
  }
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

const std::string& header_at(const std::map<std::string, std::string>& h,
                             const std::string& key) {
  auto it = h.find(key);
  if (it == h.end())
    throw std::runtime_error("checkpoint: missing header key '" + key + "'");
  return it->second;
}

}  // namespace

net::ModelConfig Checkpoint::model_config() const {
  net::ModelConfig m;
  m.encoder.kernel_count = std::stoi(header_at(header, "enc.kernel_count"));
  m.encoder.neighbors = std::stoi(header_at(header, "enc.neighbors"));
  m.encoder.kernel_points = std::stoi(header_at(header, "enc.kernel_points"));
  m.encoder.sigma = std::stod(header_at(header, "enc.sigma"));
  m.encoder.mlp = parse_int_list(header_at(header, "enc.mlp"));
  m.encoder.latent_dim = std::stoi(header_at(header, "enc.latent_dim"));
  m.encoder.cond_width = std::stoi(header_at(header, "enc.cond_width"));
  m.generator.latent_dim = std::stoi(header_at(header, "gen.latent_dim"));
  m.generator.base_res = std::stoi(header_at(header, "gen.base_res"));
  m.generator.channels = parse_int_list(header_at(header, "gen.channels"));
  m.generator.upsample_stages = std::stoi(header_at(header, "gen.upsample_stages"));
  m.generator.cond_width = std::stoi(header_at(header, "gen.cond_width"));
  return m;
}

bool Checkpoint::conditional() const {
  auto it = header.find("conditional");
  return it != header.end() && it->second == "1";
}

std::vector<std::string> Checkpoint::categories() const {
  std::vector<std::string> out;
  auto it = header.find("categories");
  if (it == header.end()) return out;
  std::stringstream ss(it->second);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) out.push_back(tok);
  return out;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("checkpoint: cannot open " + path.string() +
                             " for writing");
  out.write("GIGCKPT1", 8);
  std::string header_text;
  for (const auto& [k, v] : ckpt.header) header_text += k + "=" + v + "\n";
  write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(header_text.size()));
  out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  write_raw<std::uint32_t>(
      out, static_cast<std::uint32_t>(ckpt.encoder.params.size() +
                                      ckpt.generator.params.size()));
  for (const auto& p : ckpt.encoder.params) write_param(out, p);
  for (const auto& p : ckpt.generator.params) write_param(out, p);
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, "GIGCKPT1", 8) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path.string());
  const auto header_len = read_raw<std::uint32_t>(in, "header length");
  std::string header_text(header_len, '\0');
  in.read(header_text.data(), header_len);
  if (!in) throw std::runtime_error("checkpoint: truncated header");

  Checkpoint ckpt;
  std::stringstream ss(header_text);
  std::string line;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("checkpoint: malformed header line '" + line + "'");
    ckpt.header[line.substr(0, eq)] = line.substr(eq + 1);
  }

  const auto count = read_raw<std::uint32_t>(in, "parameter count");
  for (std::uint32_t t = 0; t < count; ++t) {
    const auto name_len = read_raw<std::uint32_t>(in, "name length");
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const auto rank = read_raw<std::uint32_t>(in, "rank of " + name);
    std::vector<int> shape(rank);
    for (auto& d : shape)
      d = static_cast<int>(read_raw<std::uint32_t>(in, "dims of " + name));
    ad::Tensor tensor(shape);
    in.read(reinterpret_cast<char*>(tensor.data().data()),
            static_cast<std::streamsize>(tensor.numel() * sizeof(double)));
    if (!in)
      throw std::runtime_error("checkpoint: truncated payload in parameter " + name);
    if (name.rfind("enc.", 0) == 0)
      ckpt.encoder.add(name, std::move(tensor));
    else if (name.rfind("gen.", 0) == 0)
      ckpt.generator.add(name, std::move(tensor));
    else
      throw std::runtime_error("checkpoint: unknown parameter prefix in " + name);
  }

  // The header's config must reproduce exactly the loaded parameter shapes.
  const net::ModelConfig m = ckpt.model_config();
  ad::ParamSet enc_ref = net::init_encoder_params(m.encoder, 0);
  ad::ParamSet gen_ref = net::init_generator_params(m.generator, 0);
  auto check = [](const ad::ParamSet& loaded, const ad::ParamSet& ref) {
    if (loaded.params.size() != ref.params.size())
      throw std::runtime_error("checkpoint: parameter count does not match config");
    for (std::size_t i = 0; i < ref.params.size(); ++i)
      if (loaded.params[i].name != ref.params[i].name ||
          loaded.params[i].shape != ref.params[i].shape)
        throw std::runtime_error("checkpoint: parameter '" +
                                 loaded.params[i].name +
                                 "' does not match the header config");
  };
  check(ckpt.encoder, enc_ref);
  check(ckpt.generator, gen_ref);
  return ckpt;
}

// ---------------------------------------------------------------------------
// Training

namespace {

void append_model_header(std::map<std::string, std::string>& h,
                         const TrainConfig& cfg) {
  const auto& e = cfg.model.encoder;
  const auto& g = cfg.model.generator;
  h["format"] = "1";
  h["preset"] = cfg.preset;
  h["activation"] = "relu";
  h["enc.kernel_count"] = std::to_string(e.kernel_count);
  h["enc.neighbors"] = std::to_string(e.neighbors);
  h["enc.kernel_points"] = std::to_string(e.kernel_points);
  h["enc.sigma"] = format_double(e.sigma);
  h["enc.mlp"] = format_int_list(e.mlp);
  h["enc.latent_dim"] = std::to_string(e.latent_dim);
  h["enc.cond_width"] = std::to_string(e.cond_width);
  h["gen.latent_dim"] = std::to_string(g.latent_dim);
  h["gen.base_res"] = std::to_string(g.base_res);
  h["gen.channels"] = format_int_list(g.channels);
  h["gen.upsample_stages"] = std::to_string(g.upsample_stages);
  h["gen.cond_width"] = std::to_string(g.cond_width);
  h["train.lr"] = format_double(cfg.lr);
  h["train.alpha"] = format_double(cfg.weights.alpha);
  h["train.beta"] = format_double(cfg.weights.beta);
  h["train.epochs"] = std::to_string(cfg.epochs);
  h["train.pretrain_epochs"] = std::to_string(cfg.pretrain_epochs);
  h["train.batch"] = std::to_string(cfg.batch);
  h["train.seed"] = std::to_string(cfg.seed);
  h["conditional"] = cfg.conditional ? "1" : "0";
  if (!cfg.categories.empty()) {
    std::string cats;
    for (std::size_t i = 0; i < cfg.categories.size(); ++i) {
      if (i) cats += ",";
      cats += cfg.categories[i];
    }
    h["categories"] = cats;
  }
}

Checkpoint make_checkpoint(const TrainConfig& cfg, const ad::ParamSet& enc,
                           const ad::ParamSet& gen) {
  Checkpoint ckpt;
  append_model_header(ckpt.header, cfg);
  ckpt.encoder = enc.clone();
  ckpt.generator = gen.clone();
  return ckpt;
}

void check_cloud_in_unit_ball(const geom::PointCloud& p, const char* which) {
  for (const auto& pt : p.points)
    if (pt.norm() > 1.0 + 1e-9)
      throw std::invalid_argument(std::string(which) +
                                  " cloud not normalized to the unit ball");
}

double checked(double v, const char* term, int epoch) {
  if (!std::isfinite(v)) throw DivergenceError(term, epoch);
  return v;
}

TrainResult train_loop(const std::vector<geom::PointCloud>& inputs,
                       const std::vector<geom::PointCloud>& targets,
                       const std::vector<int>& labels, const Dataset* validation,
                       const TrainConfig& cfg, bool allow_adversarial) {
  if (inputs.empty()) throw std::invalid_argument("train: empty dataset");
  if (inputs.size() != targets.size())
    throw std::invalid_argument("train: input/target count mismatch");
  if (cfg.batch < 1) throw std::invalid_argument("train: batch must be >= 1");
  cfg.model.encoder.validate();
  cfg.model.generator.validate();
  const int d = cfg.model.encoder.latent_dim;
  if (d != cfg.model.generator.latent_dim)
    throw std::invalid_argument("train: encoder/generator latent width mismatch");
  if (cfg.model.generator.output_points() < cfg.model.encoder.neighbors + 1)
    throw std::invalid_argument("train: generator output too small for encoder kNN");
  std::vector<std::vector<double>> onehots;
  if (cfg.conditional) {
    const int c = static_cast<int>(cfg.categories.size());
    if (c < 1 || cfg.model.encoder.cond_width != c ||
        cfg.model.generator.cond_width != c)
      throw std::invalid_argument("train: one-hot width does not match categories");
    if (labels.size() != inputs.size())
      throw std::invalid_argument("train: conditional run requires labels");
    for (int i = 0; i < c; ++i) {
      std::vector<double> oh(c, 0.0);
      oh[i] = 1.0;
      onehots.push_back(std::move(oh));
    }
    for (int l : labels)
      if (l < 0 || l >= c)
        throw std::invalid_argument("train: label index out of range");
  }

  std::vector<std::vector<std::vector<int>>> nb_cache(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    check_cloud_in_unit_ball(inputs[i], "input");
    check_cloud_in_unit_ball(targets[i], "target");
    if (static_cast<int>(inputs[i].size()) < cfg.model.encoder.neighbors + 1)
      throw std::invalid_argument("train: cloud smaller than k+1 points");
    nb_cache[i] = geom::knn(inputs[i], cfg.model.encoder.neighbors);
  }

  ad::ParamSet enc = net::init_encoder_params(cfg.model.encoder,
                                              derive_seed(cfg.seed, 1));
  ad::ParamSet gen = net::init_generator_params(cfg.model.generator,
                                                derive_seed(cfg.seed, 2));
  ad::AdamState adam_e = ad::make_adam(enc, cfg.lr);
  ad::AdamState adam_g = ad::make_adam(gen, cfg.lr);
  Rng rng(derive_seed(cfg.seed, 3));

  TrainResult result;
  const int total_epochs = cfg.pretrain_epochs + cfg.epochs;
  std::vector<std::size_t> order(inputs.size());
  std::iota(order.begin(), order.end(), 0);
  bool have_best = false;

  for (int epoch = 1; epoch <= total_epochs; ++epoch) {
    const bool adversarial = allow_adversarial && cfg.weights.beta != 0.0 &&
                             epoch > cfg.pretrain_epochs;
    rng.shuffle(order);
    EpochLoss ep;
    ep.epoch = epoch;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch);
      const std::size_t bsz = stop - start;
      ad::Tape tape;
      std::vector<ad::Var> l_rec, l_pri, rec_clouds;
      std::vector<net::GaussianVars> q_real, q_rec, q_fake;
      std::vector<const std::vector<double>*> batch_labels(bsz, nullptr);
      for (std::size_t t = 0; t < bsz; ++t) {
        const std::size_t idx = order[start + t];
        if (cfg.conditional) batch_labels[t] = &onehots[labels[idx]];
        ad::Var cloud = tape.constant(geom::cloud_tensor(inputs[idx]));
        ad::Var target = tape.constant(geom::cloud_tensor(targets[idx]));
        net::GaussianVars q = net::encode(tape, cloud, enc, cfg.model.encoder,
                                          batch_labels[t], &nb_cache[idx]);
        ad::Var z = net::reparameterize(q, rng.normal_vector(d));
        ad::Var img = net::generate(tape, z, gen, cfg.model.generator,
                                    batch_labels[t]);
        ad::Var rec = gim::image_to_cloud(img);
        l_rec.push_back(reconstruction_loss(target, rec));
        l_pri.push_back(kl_prior(q));
        q_real.push_back(q);
        rec_clouds.push_back(rec);
      }
      if (adversarial) {
        for (std::size_t t = 0; t < bsz; ++t) {
          auto rec_nb = geom::knn(geom::cloud_from_var(rec_clouds[t]),
                                  cfg.model.encoder.neighbors);
          q_rec.push_back(net::encode(tape, rec_clouds[t], enc, cfg.model.encoder,
                                      batch_labels[t], &rec_nb));
        }
        for (std::size_t t = 0; t < bsz; ++t) {
          ad::Var zp = tape.constant(ad::Tensor({1, d}, rng.normal_vector(d)));
          ad::Var fake_img = net::generate(tape, zp, gen, cfg.model.generator,
                                           batch_labels[t]);
          ad::Var fake = gim::image_to_cloud(fake_img);
          auto fake_nb = geom::knn(geom::cloud_from_var(fake),
                                   cfg.model.encoder.neighbors);
          q_fake.push_back(net::encode(tape, fake, enc, cfg.model.encoder,
                                       batch_labels[t], &fake_nb));
        }
      }

      ad::Var rec_mean = batch_mean(l_rec);
      ad::Var prior_mean = batch_mean(l_pri);
      ad::Var loss_e = ad::add(rec_mean, ad::scalar_mul(prior_mean, cfg.weights.alpha));
      ad::Var loss_g = rec_mean;
      double ad_e_val = 0.0, ad_g_val = 0.0;
      if (adversarial) {
        AdversarialLosses adv = adversarial_losses(q_real, q_rec, q_fake);
        loss_e = ad::add(loss_e, ad::scalar_mul(adv.ad_e, cfg.weights.beta));
        loss_g = ad::add(loss_g, ad::scalar_mul(adv.ad_g, cfg.weights.beta));
        ad_e_val = checked(adv.ad_e.scalar(), "L_adE", epoch);
        ad_g_val = checked(adv.ad_g.scalar(), "L_adG", epoch);
      }
      const double rec_val = checked(rec_mean.scalar(), "L_rec", epoch);
      const double prior_val = checked(prior_mean.scalar(), "L_prior", epoch);

      enc.zero_grads();
      gen.zero_grads();
      tape.backward(loss_e);
      ad::adam_step(enc, adam_e);
      enc.zero_grads();
      gen.zero_grads();
      tape.backward(loss_g);
      ad::adam_step(gen, adam_g);

      ep.rec += rec_val * bsz;
      ep.prior += prior_val * bsz;
      ep.ad_e += ad_e_val * bsz;
      ep.ad_g += ad_g_val * bsz;
      seen += bsz;
    }
    ep.rec /= seen;
    ep.prior /= seen;
    ep.ad_e /= seen;
    ep.ad_g /= seen;
    result.log.push_back(ep);

    if (validation && !validation->clouds.empty()) {
      double val = 0.0;
      for (std::size_t i = 0; i < validation->clouds.size(); ++i) {
        const std::vector<double>* label = nullptr;
        if (cfg.conditional) label = &onehots[validation->labels[i]];
        net::DiagonalGaussian q = net::encode_distribution(
            enc, cfg.model.encoder, validation->clouds[i], label);
        geom::PointCloud rec =
            net::decode_cloud(gen, cfg.model.generator, q.mu, label);
        val += geom::chamfer_distance(validation->clouds[i], rec);
      }
      val /= static_cast<double>(validation->clouds.size());
      checked(val, "validation L_rec", epoch);
      if (!have_best || val < result.best_val_rec) {
        have_best = true;
        result.best_val_rec = val;
        result.best = make_checkpoint(cfg, enc, gen);
      }
    }
  }
  result.checkpoint = make_checkpoint(cfg, enc, gen);
  return result;
}

}  // namespace

TrainResult train_advae(const Dataset& train, const Dataset* validation,
                        const TrainConfig& cfg) {
  return train_loop(train.clouds, train.clouds, train.labels, validation, cfg,
                    /*allow_adversarial=*/true);
}

TrainResult train_completion(const std::vector<geom::PointCloud>& partial,
                             const std::vector<geom::PointCloud>& complete,
                             const TrainConfig& cfg) {
  return train_loop(partial, complete, {}, nullptr, cfg,
                    /*allow_adversarial=*/false);
}

net::DiagonalGaussian encode_cloud(Checkpoint& ckpt, const geom::PointCloud& p,
                                   const std::vector<double>* label) {
  const net::ModelConfig m = ckpt.model_config();
  return net::encode_distribution(ckpt.encoder, m.encoder, p, label);
}

geom::PointCloud decode_latent(Checkpoint& ckpt, const std::vector<double>& z,
                               const std::vector<double>* label) {
  const net::ModelConfig m = ckpt.model_config();
  return net::decode_cloud(ckpt.generator, m.generator, z, label);
}

std::vector<geom::PointCloud> interpolate_latent(Checkpoint& ckpt,
                                                 const std::vector<double>& z_a,
                                                 const std::vector<double>& z_b,
                                                 int steps,
                                                 const std::vector<double>* label) {
  if (steps < 2) throw std::invalid_argument("interpolate_latent: steps must be >= 2");
  if (z_a.size() != z_b.size())
    throw std::invalid_argument("interpolate_latent: latent width mismatch");
  std::vector<geom::PointCloud> out;
  out.reserve(steps);
  std::vector<double> z(z_a.size());
  for (int s = 0; s < steps; ++s) {
    const double t = static_cast<double>(s) / (steps - 1);
    for (std::size_t i = 0; i < z.size(); ++i)
      z[i] = (1.0 - t) * z_a[i] + t * z_b[i];
    out.push_back(decode_latent(ckpt, z, label));
  }
  return out;
}

geom::PointCloud latent_arithmetic(Checkpoint& ckpt,
                                   const std::vector<double>& z_target,
                                   const std::vector<double>& z_plus,
                                   const std::vector<double>& z_minus,
                                   const std::vector<double>* label) {
  if (z_target.size() != z_plus.size() || z_target.size() != z_minus.size())
    throw std::invalid_argument("latent_arithmetic: latent width mismatch");
  std::vector<double> z(z_target.size());
  for (std::size_t i = 0; i < z.size(); ++i)
    z[i] = z_target[i] + (z_plus[i] - z_minus[i]);
  return decode_latent(ckpt, z, label);
}

}  // namespace gig::advae
