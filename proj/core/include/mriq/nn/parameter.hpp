#pragma once

#include <string>
#include <vector>

namespace mriq::nn {

/// Which part of the dual-task network a parameter belongs to.
enum class ParamGroup { kTrunk, kNoise, kMotion };

/// Box constraint re-applied after every optimizer step.
enum class Constraint { kNone, kDnBeta, kNonNegative };

inline constexpr double kDnBetaMin = 1e-6;

struct Parameter {
  std::string name;
  std::vector<int> shape;
  ParamGroup group = ParamGroup::kTrunk;
  Constraint constraint = Constraint::kNone;
  std::vector<double> value;
  std::vector<double> grad;
  // Adam state; the step counter is per parameter so that a branch that is
  // not stepped keeps its state untouched.
  std::vector<double> moment1;
  std::vector<double> moment2;
  long steps = 0;

  Parameter() = default;
  Parameter(std::string n, std::vector<int> s, ParamGroup g, Constraint c = Constraint::kNone);

  std::size_t size() const { return value.size(); }
  void zero_grad();
  void project();
};

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

void adam_update(Parameter& p, const AdamConfig& cfg);

}  // namespace mriq::nn
