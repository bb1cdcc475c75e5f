#include "abrlab/policy_net.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "abrlab/error.hpp"
#include "abrlab/kernels.hpp"
#include "abrlab/rng.hpp"

namespace abrlab {
namespace {

// Sizes derived from a NetConfig. Convolutions are valid-padding, stride 1;
// a kernel wider than its axis shrinks to the axis length.
struct Dims {
  std::size_t hist;   // history length
  std::size_t kh;     // history kernel
  std::size_t ph;     // history conv positions
  std::size_t fut;    // future chunks
  std::size_t lv;     // levels
  std::size_t kf;     // level-axis kernel
  std::size_t pf;     // level-axis positions per future chunk
  std::size_t c;      // conv channels
  std::size_t g;      // GRU width
  std::size_t h;      // hidden units
  std::size_t d;      // concatenated feature width
  bool recurrent;

  explicit Dims(const NetConfig &cfg)
      : hist(cfg.history_len),
        kh(std::min(cfg.conv_kernel, cfg.history_len)),
        ph(cfg.history_len - kh + 1),
        fut(cfg.future_horizon),
        lv(cfg.levels),
        kf(std::min(cfg.conv_kernel, cfg.levels)),
        pf(cfg.levels - kf + 1),
        c(cfg.conv_channels),
        g(cfg.hidden),
        h(cfg.hidden),
        d(0),
        recurrent(cfg.recurrent) {
    d = (recurrent ? g : 3 * ph * c) + 2 * fut * pf * c + 2 * c;
  }
  std::size_t future_block() const { return fut * pf * c; }
};

constexpr std::array<const char *, 3> kHistoryBranches = {"conv_throughput", "conv_download", "conv_buffer"};
constexpr std::array<const char *, 2> kFutureBranches = {"conv_size", "conv_quality"};

const std::vector<double> &history_input(const Observation &obs, std::size_t branch) {
  switch (branch) {
    case 0: return obs.throughput_history;
    case 1: return obs.download_history;
    default: return obs.buffer_history;
  }
}

const std::vector<double> &future_input(const Observation &obs, std::size_t branch) {
  return branch == 0 ? obs.future_sizes : obs.future_qualities;
}

void check_shape(const Observation &obs, const Dims &dm) {
  auto fail = [](const std::string &what, std::size_t got, std::size_t want) {
    throw DataError("observation shape mismatch: " + what + " has " + std::to_string(got) + ", expected " +
                    std::to_string(want));
  };
  for (std::size_t i = 0; i < 3; ++i) {
    if (history_input(obs, i).size() != dm.hist) fail("history", history_input(obs, i).size(), dm.hist);
  }
  for (std::size_t i = 0; i < 2; ++i) {
    if (future_input(obs, i).size() != dm.fut * dm.lv) {
      fail("future matrix", future_input(obs, i).size(), dm.fut * dm.lv);
    }
  }
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void relu(std::vector<double> &x) {
  for (double &v : x) v = v > 0.0 ? v : 0.0;
}

// rows x cols matrix filled with the bias row.
void fill_bias(std::vector<double> &out, std::size_t rows, const double *bias, std::size_t cols) {
  out.resize(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) std::copy(bias, bias + cols, out.begin() + r * cols);
}

void add_column_sums(const std::vector<double> &m, std::size_t rows, std::size_t cols, double *out) {
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < cols; ++j) out[j] += m[r * cols + j];
  }
}

void mask_relu(std::vector<double> &grad, const std::vector<double> &act) {
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (act[i] <= 0.0) grad[i] = 0.0;
  }
}

}  // namespace

void NetConfig::validate() const {
  auto positive = [](std::size_t v, const char *name) {
    if (v == 0) throw ConfigError(std::string("network ") + name + " must be >= 1");
  };
  positive(levels, "levels");
  positive(history_len, "history_len");
  positive(future_horizon, "future_horizon");
  positive(conv_channels, "conv_channels");
  positive(conv_kernel, "conv_kernel");
  positive(hidden, "hidden");
}

double policy_loss(std::span<const double> probs, std::size_t target, double entropy_coeff) {
  if (target >= probs.size()) throw DataError("target level out of range");
  const double ce = -std::log(std::max(probs[target], kLogFloor));
  return ce - entropy_coeff * policy_entropy(probs);
}

double policy_entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(std::max(p, kLogFloor));
  }
  return h;
}

struct PolicyNetwork::Tape {
  std::size_t batch = 0;
  std::vector<std::size_t> targets;
  std::array<std::vector<double>, 3> hcols, hact;
  std::array<std::vector<double>, 2> fcols, fact;
  std::vector<double> lq_in, rm_in, lq_act, rm_act;
  // GRU, one entry per history position (hs has one extra: the initial 0).
  std::vector<std::vector<double>> xs, hs, z, r, n, ghn;
  std::vector<double> concat, hid, probs;
  // Backward scratch.
  std::vector<double> dlogits, dhid, dconcat, dlq, drm, dh, dhprev, dgx, dgh, dx;
  std::array<std::vector<double>, 3> dhact;
  std::array<std::vector<double>, 2> dfact;
  std::vector<double> grad;
};

// Buffers keep their capacity between calls, so steady-state training does
// no large allocations.
PolicyNetwork::Tape &PolicyNetwork::scratch() {
  thread_local Tape tape;
  return tape;
}

PolicyNetwork::PolicyNetwork(const NetConfig &config) : config_(config) {
  config_.validate();
  const Dims dm(config_);
  for (const char *name : kHistoryBranches) {
    add_tensor(std::string(name) + ".w", {dm.c, dm.kh});
    add_tensor(std::string(name) + ".b", {dm.c});
  }
  for (const char *name : kFutureBranches) {
    add_tensor(std::string(name) + ".w", {dm.c, dm.kf});
    add_tensor(std::string(name) + ".b", {dm.c});
  }
  add_tensor("dense_last_quality.w", {dm.c, 1});
  add_tensor("dense_last_quality.b", {dm.c});
  add_tensor("dense_remain.w", {dm.c, 1});
  add_tensor("dense_remain.b", {dm.c});
  if (dm.recurrent) {
    add_tensor("gru.w", {3 * dm.g, 3 * dm.c});
    add_tensor("gru.u", {3 * dm.g, dm.g});
    add_tensor("gru.bx", {3 * dm.g});
    add_tensor("gru.bh", {3 * dm.g});
  }
  add_tensor("hidden.w", {dm.h, dm.d});
  add_tensor("hidden.b", {dm.h});
  add_tensor("output.w", {dm.lv, dm.h});
  add_tensor("output.b", {dm.lv});

  params_.assign(params_.size(), 0.0);
  m_.assign(params_.size(), 0.0);
  v_.assign(params_.size(), 0.0);

  // Weights ~ U(-a, a) with a = sqrt(6 / fan_in) ahead of a ReLU and
  // sqrt(3 / fan_in) elsewhere; biases start at zero.
  Rng rng(config_.seed);
  for (const TensorInfo &t : tensors_) {
    if (t.shape.size() != 2) continue;
    const double fan_in = static_cast<double>(t.shape[1]);
    const bool feeds_relu = t.name.rfind("gru.", 0) != 0 && t.name != "output.w";
    const double limit = std::sqrt((feeds_relu ? 6.0 : 3.0) / fan_in);
    for (std::size_t i = 0; i < t.size; ++i) params_[t.offset + i] = rng.uniform(-limit, limit);
  }
}

void PolicyNetwork::add_tensor(const std::string &name, std::vector<std::size_t> shape) {
  TensorInfo t;
  t.name = name;
  t.size = 1;
  for (std::size_t s : shape) t.size *= s;
  t.shape = std::move(shape);
  t.offset = params_.size();
  params_.resize(params_.size() + t.size);
  tensors_.push_back(std::move(t));
}

const TensorInfo &PolicyNetwork::tensor(const std::string &name) const {
  for (const TensorInfo &t : tensors_) {
    if (t.name == name) return t;
  }
  throw InvariantError("no tensor named " + name);
}

void PolicyNetwork::forward_tape(std::span<const Observation *const> batch, Tape &tape) const {
  const Dims dm(config_);
  const std::size_t nb = batch.size();
  if (nb == 0) throw DataError("empty batch");
  for (const Observation *obs : batch) check_shape(*obs, dm);
  tape.batch = nb;
  auto w = [&](const std::string &name) { return params_.data() + tensor(name).offset; };

  // History branches: im2col then one product per branch.
  for (std::size_t i = 0; i < 3; ++i) {
    auto &cols = tape.hcols[i];
    cols.resize(nb * dm.ph * dm.kh);
    for (std::size_t b = 0; b < nb; ++b) {
      const auto &x = history_input(*batch[b], i);
      for (std::size_t p = 0; p < dm.ph; ++p) {
        std::copy(x.begin() + p, x.begin() + p + dm.kh, cols.begin() + (b * dm.ph + p) * dm.kh);
      }
    }
    const std::string base = kHistoryBranches[i];
    fill_bias(tape.hact[i], nb * dm.ph, w(base + ".b"), dm.c);
    kernels::gemm_nt(nb * dm.ph, dm.c, dm.kh, cols.data(), w(base + ".w"), tape.hact[i].data());
    relu(tape.hact[i]);
  }

  // Future matrices: the same filters slide along the level axis of every
  // future chunk.
  for (std::size_t i = 0; i < 2; ++i) {
    auto &cols = tape.fcols[i];
    const std::size_t rows = nb * dm.fut * dm.pf;
    cols.resize(rows * dm.kf);
    for (std::size_t b = 0; b < nb; ++b) {
      const auto &x = future_input(*batch[b], i);
      for (std::size_t f = 0; f < dm.fut; ++f) {
        for (std::size_t p = 0; p < dm.pf; ++p) {
          const auto src = x.begin() + f * dm.lv + p;
          std::copy(src, src + dm.kf, cols.begin() + ((b * dm.fut + f) * dm.pf + p) * dm.kf);
        }
      }
    }
    const std::string base = kFutureBranches[i];
    fill_bias(tape.fact[i], rows, w(base + ".b"), dm.c);
    kernels::gemm_nt(rows, dm.c, dm.kf, cols.data(), w(base + ".w"), tape.fact[i].data());
    relu(tape.fact[i]);
  }

  // Scalar playback features.
  tape.lq_in.resize(nb);
  tape.rm_in.resize(nb);
  tape.lq_act.resize(nb * dm.c);
  tape.rm_act.resize(nb * dm.c);
  const double *lq_w = w("dense_last_quality.w");
  const double *lq_b = w("dense_last_quality.b");
  const double *rm_w = w("dense_remain.w");
  const double *rm_b = w("dense_remain.b");
  for (std::size_t b = 0; b < nb; ++b) {
    tape.lq_in[b] = batch[b]->last_quality;
    tape.rm_in[b] = batch[b]->remain;
    for (std::size_t c = 0; c < dm.c; ++c) {
      tape.lq_act[b * dm.c + c] = std::max(0.0, lq_w[c] * tape.lq_in[b] + lq_b[c]);
      tape.rm_act[b * dm.c + c] = std::max(0.0, rm_w[c] * tape.rm_in[b] + rm_b[c]);
    }
  }

  // Optional GRU over the history positions of the three history encoders.
  if (dm.recurrent) {
    const std::size_t g = dm.g;
    const std::size_t xw = 3 * dm.c;
    const double *gw = w("gru.w");
    const double *gu = w("gru.u");
    const double *bx = w("gru.bx");
    const double *bh = w("gru.bh");
    tape.xs.assign(dm.ph, {});
    tape.hs.assign(dm.ph + 1, std::vector<double>(nb * g, 0.0));
    tape.z.assign(dm.ph, {});
    tape.r.assign(dm.ph, {});
    tape.n.assign(dm.ph, {});
    tape.ghn.assign(dm.ph, {});
    std::vector<double> gx, gh;
    for (std::size_t t = 0; t < dm.ph; ++t) {
      auto &x = tape.xs[t];
      x.resize(nb * xw);
      for (std::size_t b = 0; b < nb; ++b) {
        for (std::size_t i = 0; i < 3; ++i) {
          const auto src = tape.hact[i].begin() + (b * dm.ph + t) * dm.c;
          std::copy(src, src + dm.c, x.begin() + b * xw + i * dm.c);
        }
      }
      fill_bias(gx, nb, bx, 3 * g);
      kernels::gemm_nt(nb, 3 * g, xw, x.data(), gw, gx.data());
      fill_bias(gh, nb, bh, 3 * g);
      kernels::gemm_nt(nb, 3 * g, g, tape.hs[t].data(), gu, gh.data());
      auto &z = tape.z[t];
      auto &r = tape.r[t];
      auto &n = tape.n[t];
      auto &ghn = tape.ghn[t];
      z.resize(nb * g);
      r.resize(nb * g);
      n.resize(nb * g);
      ghn.resize(nb * g);
      auto &hnext = tape.hs[t + 1];
      const auto &hprev = tape.hs[t];
      for (std::size_t b = 0; b < nb; ++b) {
        const double *gxb = gx.data() + b * 3 * g;
        const double *ghb = gh.data() + b * 3 * g;
        for (std::size_t j = 0; j < g; ++j) {
          const std::size_t o = b * g + j;
          z[o] = sigmoid(gxb[j] + ghb[j]);
          r[o] = sigmoid(gxb[g + j] + ghb[g + j]);
          ghn[o] = ghb[2 * g + j];
          n[o] = std::tanh(gxb[2 * g + j] + r[o] * ghn[o]);
          hnext[o] = (1.0 - z[o]) * n[o] + z[o] * hprev[o];
        }
      }
    }
  }

  // Concatenate per sample.
  tape.concat.resize(nb * dm.d);
  for (std::size_t b = 0; b < nb; ++b) {
    double *out = tape.concat.data() + b * dm.d;
    if (dm.recurrent) {
      const auto src = tape.hs[dm.ph].begin() + b * dm.g;
      out = std::copy(src, src + dm.g, out);
    } else {
      for (std::size_t i = 0; i < 3; ++i) {
        const auto src = tape.hact[i].begin() + b * dm.ph * dm.c;
        out = std::copy(src, src + dm.ph * dm.c, out);
      }
    }
    for (std::size_t i = 0; i < 2; ++i) {
      const auto src = tape.fact[i].begin() + b * dm.future_block();
      out = std::copy(src, src + dm.future_block(), out);
    }
    out = std::copy(tape.lq_act.begin() + b * dm.c, tape.lq_act.begin() + (b + 1) * dm.c, out);
    std::copy(tape.rm_act.begin() + b * dm.c, tape.rm_act.begin() + (b + 1) * dm.c, out);
  }

  fill_bias(tape.hid, nb, w("hidden.b"), dm.h);
  kernels::gemm_nt(nb, dm.h, dm.d, tape.concat.data(), w("hidden.w"), tape.hid.data());
  relu(tape.hid);

  fill_bias(tape.probs, nb, w("output.b"), dm.lv);
  kernels::gemm_nt(nb, dm.lv, dm.h, tape.hid.data(), w("output.w"), tape.probs.data());
  for (std::size_t b = 0; b < nb; ++b) {
    double *z = tape.probs.data() + b * dm.lv;
    const double top = *std::max_element(z, z + dm.lv);
    double sum = 0.0;
    for (std::size_t j = 0; j < dm.lv; ++j) {
      z[j] = std::exp(z[j] - top);
      sum += z[j];
    }
    for (std::size_t j = 0; j < dm.lv; ++j) z[j] /= sum;
  }
}

std::vector<double> PolicyNetwork::forward(const Observation &obs) const {
  const Observation *one[] = {&obs};
  return forward_batch(one);
}

std::vector<double> PolicyNetwork::forward_batch(std::span<const Observation *const> batch) const {
  Tape &tape = scratch();
  forward_tape(batch, tape);
  return tape.probs;
}

double PolicyNetwork::loss_and_gradient(std::span<const ExpertSample *const> batch, double entropy_coeff,
                                        std::vector<double> *grad) const {
  const Dims dm(config_);
  const std::size_t nb = batch.size();
  if (nb == 0) throw DataError("empty batch");
  std::vector<const Observation *> obs(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    if (batch[b]->expert_action >= dm.lv) throw DataError("expert action out of range");
    obs[b] = &batch[b]->observation;
  }
  Tape &tape = scratch();
  forward_tape(obs, tape);

  double total = 0.0;
  for (std::size_t b = 0; b < nb; ++b) {
    total += policy_loss(std::span<const double>(tape.probs.data() + b * dm.lv, dm.lv), batch[b]->expert_action,
                         entropy_coeff);
  }
  const double mean_loss = total / static_cast<double>(nb);
  if (grad == nullptr) return mean_loss;

  grad->assign(params_.size(), 0.0);
  auto gw = [&](const std::string &name) { return grad->data() + tensor(name).offset; };
  auto pw = [&](const std::string &name) { return params_.data() + tensor(name).offset; };
  const double inv_b = 1.0 / static_cast<double>(nb);

  // Loss gradient w.r.t. the probabilities, pulled through the softmax:
  // dz_j = p_j (g_j - sum_i g_i p_i).
  std::vector<double> &dlogits = tape.dlogits;
  dlogits.resize(nb * dm.lv);
  for (std::size_t b = 0; b < nb; ++b) {
    const double *p = tape.probs.data() + b * dm.lv;
    double *dz = dlogits.data() + b * dm.lv;
    const std::size_t a = batch[b]->expert_action;
    double dot = 0.0;
    for (std::size_t j = 0; j < dm.lv; ++j) {
      double g = entropy_coeff * (std::log(std::max(p[j], kLogFloor)) + (p[j] > kLogFloor ? 1.0 : 0.0));
      if (j == a && p[j] > kLogFloor) g -= 1.0 / p[j];
      dz[j] = g;
      dot += g * p[j];
    }
    for (std::size_t j = 0; j < dm.lv; ++j) dz[j] = p[j] * (dz[j] - dot) * inv_b;
  }

  // Output and hidden layers.
  kernels::gemm_tn(dm.lv, dm.h, nb, dlogits.data(), tape.hid.data(), gw("output.w"));
  add_column_sums(dlogits, nb, dm.lv, gw("output.b"));
  std::vector<double> &dhid = tape.dhid;
  dhid.assign(nb * dm.h, 0.0);
  kernels::gemm_nn(nb, dm.h, dm.lv, dlogits.data(), pw("output.w"), dhid.data());
  mask_relu(dhid, tape.hid);

  kernels::gemm_tn(dm.h, dm.d, nb, dhid.data(), tape.concat.data(), gw("hidden.w"));
  add_column_sums(dhid, nb, dm.h, gw("hidden.b"));
  std::vector<double> &dconcat = tape.dconcat;
  dconcat.assign(nb * dm.d, 0.0);
  kernels::gemm_nn(nb, dm.d, dm.h, dhid.data(), pw("hidden.w"), dconcat.data());

  // Split the concat gradient back into branch gradients.
  auto &dhact = tape.dhact;
  auto &dfact = tape.dfact;
  std::vector<double> &dlq = tape.dlq;
  std::vector<double> &drm = tape.drm;
  std::vector<double> &dh = tape.dh;
  dlq.resize(nb * dm.c);
  drm.resize(nb * dm.c);
  for (auto &v : dhact) v.assign(nb * dm.ph * dm.c, 0.0);
  for (auto &v : dfact) v.resize(nb * dm.future_block());
  if (dm.recurrent) dh.resize(nb * dm.g);
  for (std::size_t b = 0; b < nb; ++b) {
    const double *src = dconcat.data() + b * dm.d;
    if (dm.recurrent) {
      std::copy(src, src + dm.g, dh.begin() + b * dm.g);
      src += dm.g;
    } else {
      for (std::size_t i = 0; i < 3; ++i) {
        std::copy(src, src + dm.ph * dm.c, dhact[i].begin() + b * dm.ph * dm.c);
        src += dm.ph * dm.c;
      }
    }
    for (std::size_t i = 0; i < 2; ++i) {
      std::copy(src, src + dm.future_block(), dfact[i].begin() + b * dm.future_block());
      src += dm.future_block();
    }
    std::copy(src, src + dm.c, dlq.begin() + b * dm.c);
    std::copy(src + dm.c, src + 2 * dm.c, drm.begin() + b * dm.c);
  }

  // Back-propagation through time for the GRU.
  if (dm.recurrent) {
    const std::size_t g = dm.g;
    const std::size_t xw = 3 * dm.c;
    const double *wx = pw("gru.w");
    const double *wu = pw("gru.u");
    double *gwx = gw("gru.w");
    double *gwu = gw("gru.u");
    double *gbx = gw("gru.bx");
    double *gbh = gw("gru.bh");
    std::vector<double> &dgx = tape.dgx;
    std::vector<double> &dgh = tape.dgh;
    std::vector<double> &dx = tape.dx;
    std::vector<double> &dhprev = tape.dhprev;
    dgx.resize(nb * 3 * g);
    dgh.resize(nb * 3 * g);
    for (std::size_t t = dm.ph; t-- > 0;) {
      const auto &z = tape.z[t];
      const auto &r = tape.r[t];
      const auto &n = tape.n[t];
      const auto &ghn = tape.ghn[t];
      const auto &hprev = tape.hs[t];
      dhprev.assign(nb * g, 0.0);
      for (std::size_t b = 0; b < nb; ++b) {
        double *dgxb = dgx.data() + b * 3 * g;
        double *dghb = dgh.data() + b * 3 * g;
        for (std::size_t j = 0; j < g; ++j) {
          const std::size_t o = b * g + j;
          const double dn = dh[o] * (1.0 - z[o]);
          const double dz = dh[o] * (hprev[o] - n[o]);
          dhprev[o] = dh[o] * z[o];
          const double dn_pre = dn * (1.0 - n[o] * n[o]);
          const double dz_pre = dz * z[o] * (1.0 - z[o]);
          const double dr_pre = dn_pre * ghn[o] * r[o] * (1.0 - r[o]);
          dgxb[j] = dz_pre;
          dgxb[g + j] = dr_pre;
          dgxb[2 * g + j] = dn_pre;
          dghb[j] = dz_pre;
          dghb[g + j] = dr_pre;
          dghb[2 * g + j] = dn_pre * r[o];
        }
      }
      kernels::gemm_tn(3 * g, xw, nb, dgx.data(), tape.xs[t].data(), gwx);
      add_column_sums(dgx, nb, 3 * g, gbx);
      kernels::gemm_tn(3 * g, g, nb, dgh.data(), hprev.data(), gwu);
      add_column_sums(dgh, nb, 3 * g, gbh);
      dx.assign(nb * xw, 0.0);
      kernels::gemm_nn(nb, xw, 3 * g, dgx.data(), wx, dx.data());
      kernels::gemm_nn(nb, g, 3 * g, dgh.data(), wu, dhprev.data());
      for (std::size_t b = 0; b < nb; ++b) {
        for (std::size_t i = 0; i < 3; ++i) {
          const auto src = dx.begin() + b * xw + i * dm.c;
          std::copy(src, src + dm.c, dhact[i].begin() + (b * dm.ph + t) * dm.c);
        }
      }
      dh.swap(dhprev);
    }
  }

  for (std::size_t i = 0; i < 3; ++i) {
    mask_relu(dhact[i], tape.hact[i]);
    const std::string base = kHistoryBranches[i];
    kernels::gemm_tn(dm.c, dm.kh, nb * dm.ph, dhact[i].data(), tape.hcols[i].data(), gw(base + ".w"));
    add_column_sums(dhact[i], nb * dm.ph, dm.c, gw(base + ".b"));
  }
  for (std::size_t i = 0; i < 2; ++i) {
    mask_relu(dfact[i], tape.fact[i]);
    const std::string base = kFutureBranches[i];
    const std::size_t rows = nb * dm.fut * dm.pf;
    kernels::gemm_tn(dm.c, dm.kf, rows, dfact[i].data(), tape.fcols[i].data(), gw(base + ".w"));
    add_column_sums(dfact[i], rows, dm.c, gw(base + ".b"));
  }
  mask_relu(dlq, tape.lq_act);
  mask_relu(drm, tape.rm_act);
  double *glq_w = gw("dense_last_quality.w");
  double *glq_b = gw("dense_last_quality.b");
  double *grm_w = gw("dense_remain.w");
  double *grm_b = gw("dense_remain.b");
  for (std::size_t b = 0; b < nb; ++b) {
    for (std::size_t c = 0; c < dm.c; ++c) {
      glq_w[c] += dlq[b * dm.c + c] * tape.lq_in[b];
      glq_b[c] += dlq[b * dm.c + c];
      grm_w[c] += drm[b * dm.c + c] * tape.rm_in[b];
      grm_b[c] += drm[b * dm.c + c];
    }
  }
  return mean_loss;
}

double PolicyNetwork::update(std::span<const ExpertSample *const> batch, double learning_rate,
                             double entropy_coeff, const AdamConfig &adam) {
  std::vector<double> &grad = scratch().grad;
  const double loss = loss_and_gradient(batch, entropy_coeff, &grad);
  for (double g : grad) {
    if (!std::isfinite(g)) throw InvariantError("non-finite gradient");
  }
  ++steps_;
  const double t = static_cast<double>(steps_);
  kernels::AdamStep s{learning_rate, adam.beta1, adam.beta2, adam.epsilon, 1.0 - std::pow(adam.beta1, t),
                      1.0 - std::pow(adam.beta2, t)};
  kernels::adam_update(params_.size(), s, grad.data(), params_.data(), m_.data(), v_.data());
  return loss;
}

// ---------------------------------------------------------------------------
// Extended-precision reference.

std::vector<long double> reference_forward(const PolicyNetwork &net, std::span<const double> params,
                                           const Observation &obs) {
  using T = long double;
  const NetConfig &cfg = net.config();
  const Dims dm(cfg);
  check_shape(obs, dm);
  auto W = [&](const std::string &name) { return params.data() + net.tensor(name).offset; };
  auto relu_t = [](T x) { return x > 0 ? x : T(0); };

  // history[i][p][c]
  std::vector<std::vector<std::vector<T>>> hist(3, std::vector<std::vector<T>>(dm.ph, std::vector<T>(dm.c)));
  for (std::size_t i = 0; i < 3; ++i) {
    const std::string base = kHistoryBranches[i];
    const double *wt = W(base + ".w");
    const double *bs = W(base + ".b");
    const auto &x = history_input(obs, i);
    for (std::size_t p = 0; p < dm.ph; ++p) {
      for (std::size_t c = 0; c < dm.c; ++c) {
        T acc = bs[c];
        for (std::size_t k = 0; k < dm.kh; ++k) acc += static_cast<T>(wt[c * dm.kh + k]) * static_cast<T>(x[p + k]);
        hist[i][p][c] = relu_t(acc);
      }
    }
  }

  std::vector<T> features;
  if (dm.recurrent) {
    const std::size_t g = dm.g;
    const std::size_t xw = 3 * dm.c;
    const double *gw = W("gru.w");
    const double *gu = W("gru.u");
    const double *gbx = W("gru.bx");
    const double *gbh = W("gru.bh");
    std::vector<T> h(g, 0);
    for (std::size_t t = 0; t < dm.ph; ++t) {
      std::vector<T> x;
      for (std::size_t i = 0; i < 3; ++i) x.insert(x.end(), hist[i][t].begin(), hist[i][t].end());
      std::vector<T> hn(g);
      for (std::size_t j = 0; j < g; ++j) {
        T gate[3], hgate[3];
        for (std::size_t q = 0; q < 3; ++q) {
          const std::size_t row = q * g + j;
          T ax = gbx[row];
          for (std::size_t k = 0; k < xw; ++k) ax += static_cast<T>(gw[row * xw + k]) * x[k];
          T ah = gbh[row];
          for (std::size_t k = 0; k < g; ++k) ah += static_cast<T>(gu[row * g + k]) * h[k];
          gate[q] = ax;
          hgate[q] = ah;
        }
        const T z = 1 / (1 + std::exp(-(gate[0] + hgate[0])));
        const T r = 1 / (1 + std::exp(-(gate[1] + hgate[1])));
        const T n = std::tanh(gate[2] + r * hgate[2]);
        hn[j] = (1 - z) * n + z * h[j];
      }
      h = hn;
    }
    features = h;
  } else {
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t p = 0; p < dm.ph; ++p) features.insert(features.end(), hist[i][p].begin(), hist[i][p].end());
    }
  }

  for (std::size_t i = 0; i < 2; ++i) {
    const std::string base = kFutureBranches[i];
    const double *wt = W(base + ".w");
    const double *bs = W(base + ".b");
    const auto &x = future_input(obs, i);
    for (std::size_t f = 0; f < dm.fut; ++f) {
      for (std::size_t p = 0; p < dm.pf; ++p) {
        for (std::size_t c = 0; c < dm.c; ++c) {
          T acc = bs[c];
          for (std::size_t k = 0; k < dm.kf; ++k) {
            acc += static_cast<T>(wt[c * dm.kf + k]) * static_cast<T>(x[f * dm.lv + p + k]);
          }
          features.push_back(relu_t(acc));
        }
      }
    }
  }
  const double *lqw = W("dense_last_quality.w");
  const double *lqb = W("dense_last_quality.b");
  for (std::size_t c = 0; c < dm.c; ++c) {
    features.push_back(relu_t(static_cast<T>(lqw[c]) * static_cast<T>(obs.last_quality) + lqb[c]));
  }
  const double *rmw = W("dense_remain.w");
  const double *rmb = W("dense_remain.b");
  for (std::size_t c = 0; c < dm.c; ++c) {
    features.push_back(relu_t(static_cast<T>(rmw[c]) * static_cast<T>(obs.remain) + rmb[c]));
  }
  if (features.size() != dm.d) throw InvariantError("reference feature width mismatch");

  const double *hw = W("hidden.w");
  const double *hb = W("hidden.b");
  std::vector<T> hid(dm.h);
  for (std::size_t j = 0; j < dm.h; ++j) {
    T acc = hb[j];
    for (std::size_t k = 0; k < dm.d; ++k) acc += static_cast<T>(hw[j * dm.d + k]) * features[k];
    hid[j] = relu_t(acc);
  }
  std::vector<T> logits(dm.lv);
  for (std::size_t j = 0; j < dm.lv; ++j) {
    T acc = W("output.b")[j];
    const double *ow = W("output.w");
    for (std::size_t k = 0; k < dm.h; ++k) acc += static_cast<T>(ow[j * dm.h + k]) * hid[k];
    logits[j] = acc;
  }
  const T top = *std::max_element(logits.begin(), logits.end());
  T sum = 0;
  for (T &z : logits) {
    z = std::exp(z - top);
    sum += z;
  }
  for (T &z : logits) z /= sum;
  return logits;
}

namespace {

long double reference_loss(const PolicyNetwork &net, std::span<const double> params, const ExpertSample &sample,
                           double entropy_coeff) {
  const auto p = reference_forward(net, params, sample.observation);
  const long double floor = kLogFloor;
  long double h = 0;
  for (long double q : p) {
    if (q > 0) h -= q * std::log(std::max(q, floor));
  }
  return -std::log(std::max(p[sample.expert_action], floor)) - static_cast<long double>(entropy_coeff) * h;
}

}  // namespace

double gradient_check(const PolicyNetwork &net, const ExpertSample &sample, double entropy_coeff,
                      std::uint64_t seed, std::size_t count) {
  constexpr double kStep = 1e-5;
  const ExpertSample *one[] = {&sample};
  std::vector<double> analytic;
  net.loss_and_gradient(one, entropy_coeff, &analytic);

  std::vector<double> params(net.parameters().begin(), net.parameters().end());
  Rng rng(seed);
  double worst = 0.0;
  for (std::size_t s = 0; s < count; ++s) {
    const std::size_t i = rng.index(params.size());
    const double theta = params[i];
    const double up = theta + kStep;
    const double down = theta - kStep;
    params[i] = up;
    const long double loss_up = reference_loss(net, params, sample, entropy_coeff);
    params[i] = down;
    const long double loss_down = reference_loss(net, params, sample, entropy_coeff);
    params[i] = theta;
    const double numeric = static_cast<double>((loss_up - loss_down) / (static_cast<long double>(up) - down));
    const double a = analytic[i];
    const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-8});
    worst = std::max(worst, std::fabs(a - numeric) / denom);
  }
  return worst;
}

}  // namespace abrlab
