#include "mriq/nn/parameter.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace mriq::nn {

Parameter::Parameter(std::string n, std::vector<int> s, ParamGroup g, Constraint c)
    : name(std::move(n)), shape(std::move(s)), group(g), constraint(c) {
  const auto count = static_cast<std::size_t>(
      std::accumulate(shape.begin(), shape.end(), std::int64_t{1}, std::multiplies<>()));
  value.assign(count, 0.0);
  grad.assign(count, 0.0);
  moment1.assign(count, 0.0);
  moment2.assign(count, 0.0);
}

void Parameter::zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

void Parameter::project() {
  switch (constraint) {
    case Constraint::kNone:
      break;
    case Constraint::kDnBeta:
      for (auto& v : value) v = std::max(v, kDnBetaMin);
      break;
    case Constraint::kNonNegative:
      for (auto& v : value) v = std::max(v, 0.0);
      break;
  }
}

void adam_update(Parameter& p, const AdamConfig& cfg) {
  ++p.steps;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(p.steps));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(p.steps));
  for (std::size_t i = 0; i < p.value.size(); ++i) {
    const double g = p.grad[i];
    p.moment1[i] = cfg.beta1 * p.moment1[i] + (1.0 - cfg.beta1) * g;
    p.moment2[i] = cfg.beta2 * p.moment2[i] + (1.0 - cfg.beta2) * g * g;
    const double mhat = p.moment1[i] / c1;
    const double vhat = p.moment2[i] / c2;
    p.value[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
  }
  p.project();
}

}  // namespace mriq::nn
