#include "mriq/nn/dual_task_net.hpp"

#include <cmath>
#include <random>

#include "mriq/error.hpp"
#include "mriq/nn/losses.hpp"

namespace mriq::nn {

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

DualTaskNet::DualTaskNet(const NetConfig& config, std::uint64_t seed) : config_(config) {
  if (config.input_size < 16) throw InvalidArgument("DualTaskNet: input_size < 16");
  int in = 1;
  for (int i = 0; i < 3; ++i) {
    const std::string n = "trunk" + std::to_string(i);
    conv[i] = Conv2D(n + ".conv", in, config.trunk_channels[i], config.trunk_kernels[i], 2, ParamGroup::kTrunk);
    dn[i] = DnLayer(n + ".dn", config.trunk_channels[i], ParamGroup::kTrunk);
    in = config.trunk_channels[i];
  }
  const int bc = config.branch_channels;
  noise_conv = Conv2D("noise.conv", in, bc, config.branch_kernel, 2, ParamGroup::kNoise);
  noise_dn = DnLayer("noise.dn", bc, ParamGroup::kNoise);
  noise_head = Dense("noise.head", bc, ParamGroup::kNoise);
  motion_conv = Conv2D("motion.conv", in, bc, config.branch_kernel, 2, ParamGroup::kMotion);
  motion_bn = BatchNorm("motion.bn", bc, ParamGroup::kMotion);
  motion_head = Dense("motion.head", bc, ParamGroup::kMotion);

  std::mt19937_64 rng(seed);
  for (auto& c : conv) c.init_uniform(rng);
  noise_conv.init_uniform(rng);
  noise_head.init_uniform(rng, 1.0);
  motion_conv.init_uniform(rng);
  motion_head.init_uniform(rng, 1.0);
}

void DualTaskNet::check_input(const RealImage& image) const {
  if (image.rows() != config_.input_size || image.cols() != config_.input_size)
    throw InvalidArgument("DualTaskNet: expected " + std::to_string(config_.input_size) + "x" +
                          std::to_string(config_.input_size) + " input, got " + std::to_string(image.rows()) +
                          "x" + std::to_string(image.cols()));
}

Tensor DualTaskNet::trunk_forward(const Tensor& x, TrunkCache* cache) const {
  Tensor h = x;
  for (int i = 0; i < 3; ++i) {
    h = conv[i].forward(h, cache ? &cache->conv[i] : nullptr);
    h = dn[i].forward(h, cache ? &cache->dn[i] : nullptr);
  }
  return h;
}

void DualTaskNet::trunk_backward(const Tensor& grad, const TrunkCache& cache) {
  Tensor g = grad;
  for (int i = 2; i >= 0; --i) {
    g = dn[i].backward(g, cache.dn[i]);
    g = conv[i].backward(g, cache.conv[i], i > 0);
  }
}

NetOutput DualTaskNet::forward(const RealImage& image) const {
  check_input(image);
  const Tensor feat = trunk_forward(Tensor::from_image(image), nullptr);
  NetOutput out;
  if (config_.noise_branch) {
    const Tensor h = noise_dn.forward(noise_conv.forward(feat));
    out.noise_score = noise_head.forward(global_average_pool(h));
  }
  if (config_.motion_branch) {
    Tensor h = motion_bn.forward_infer(motion_conv.forward(feat));
    relu_inplace(h);
    out.motion_probability = sigmoid(motion_head.forward(global_average_pool(h)));
  }
  return out;
}

std::vector<Parameter*> DualTaskNet::parameters() {
  std::vector<Parameter*> out;
  for (int i = 0; i < 3; ++i) {
    out.insert(out.end(), {&conv[i].weight, &conv[i].bias, &dn[i].beta, &dn[i].gamma});
  }
  out.insert(out.end(), {&noise_conv.weight, &noise_conv.bias, &noise_dn.beta, &noise_dn.gamma,
                         &noise_head.weight, &noise_head.bias});
  out.insert(out.end(), {&motion_conv.weight, &motion_conv.bias, &motion_bn.scale, &motion_bn.shift,
                         &motion_head.weight, &motion_head.bias});
  return out;
}

std::vector<const Parameter*> DualTaskNet::parameters() const {
  auto mut = const_cast<DualTaskNet*>(this)->parameters();
  return {mut.begin(), mut.end()};
}

std::vector<Parameter*> DualTaskNet::parameters(ParamGroup group) {
  std::vector<Parameter*> out;
  for (auto* p : parameters())
    if (p->group == group) out.push_back(p);
  return out;
}

std::vector<std::pair<std::string, std::vector<double>*>> DualTaskNet::buffers() {
  return {{"motion.bn.running_mean", &motion_bn.running_mean}, {"motion.bn.running_var", &motion_bn.running_var}};
}

void DualTaskNet::set_noise_bias(double value) { noise_head.bias.value[0] = value; }

double DualTaskNet::compute_gradients(const Batch& batch) {
  if (batch.images.empty()) throw InvalidArgument("train batch is empty");
  if (batch.images.size() != batch.targets.size()) throw MissingLabel("train batch: one target per image required");
  for (auto* p : parameters()) p->zero_grad();
  const std::size_t n = batch.images.size();

  std::vector<TrunkCache> trunk(n);
  std::vector<Tensor> feats(n);
  for (std::size_t i = 0; i < n; ++i) {
    check_input(*batch.images[i]);
    feats[i] = trunk_forward(Tensor::from_image(*batch.images[i]), &trunk[i]);
  }

  if (batch.task == Task::kNoise) {
    if (!config_.noise_branch) throw StateError("noise batch on a net without a noise branch");
    std::vector<Conv2D::Cache> conv_cache(n);
    std::vector<DnLayer::Cache> dn_cache(n);
    std::vector<std::vector<double>> pooled(n);
    std::vector<int> dims(3);
    std::vector<double> preds(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Tensor h = noise_dn.forward(noise_conv.forward(feats[i], &conv_cache[i]), &dn_cache[i]);
      dims = {h.channels, h.height, h.width};
      pooled[i] = global_average_pool(h);
      preds[i] = noise_head.forward(pooled[i]);
    }
    const double loss = loss_noise(preds, batch.targets);
    const auto dpred = loss_noise_grad(preds, batch.targets);
    for (std::size_t i = 0; i < n; ++i) {
      const auto dpool = noise_head.backward(dpred[i], pooled[i]);
      Tensor g = global_average_pool_backward(dpool, dims[0], dims[1], dims[2]);
      g = noise_dn.backward(g, dn_cache[i]);
      g = noise_conv.backward(g, conv_cache[i], true);
      trunk_backward(g, trunk[i]);
    }
    return loss;
  }

  if (!config_.motion_branch) throw StateError("motion batch on a net without a motion branch");
  std::vector<Conv2D::Cache> conv_cache(n);
  std::vector<Tensor> pre(n);
  for (std::size_t i = 0; i < n; ++i) pre[i] = motion_conv.forward(feats[i], &conv_cache[i]);
  BatchNorm::Cache bn_cache;
  std::vector<Tensor> act = motion_bn.forward_train(pre, bn_cache);
  std::vector<std::vector<double>> pooled(n);
  std::vector<double> probs(n);
  for (std::size_t i = 0; i < n; ++i) {
    relu_inplace(act[i]);
    pooled[i] = global_average_pool(act[i]);
    probs[i] = sigmoid(motion_head.forward(pooled[i]));
  }
  const double loss = loss_motion(probs, batch.targets);
  std::vector<Tensor> grads(n);
  for (std::size_t i = 0; i < n; ++i) {
    // d BCE / d logit; the clamp only matters for the reported loss.
    const double dlogit = (probs[i] - batch.targets[i]) / static_cast<double>(n);
    const auto dpool = motion_head.backward(dlogit, pooled[i]);
    grads[i] = global_average_pool_backward(dpool, act[i].channels, act[i].height, act[i].width);
    relu_backward_inplace(grads[i], act[i]);
  }
  const auto dpre = motion_bn.backward(grads, bn_cache);
  for (std::size_t i = 0; i < n; ++i) {
    const Tensor g = motion_conv.backward(dpre[i], conv_cache[i], true);
    trunk_backward(g, trunk[i]);
  }
  return loss;
}

double DualTaskNet::train_step(const Batch& batch, const AdamConfig& adam) {
  const double loss = compute_gradients(batch);
  const ParamGroup branch = batch.task == Task::kNoise ? ParamGroup::kNoise : ParamGroup::kMotion;
  for (auto* p : parameters())
    if (p->group == ParamGroup::kTrunk || p->group == branch) adam_update(*p, adam);
  return loss;
}

}  // namespace mriq::nn
