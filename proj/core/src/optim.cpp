#include "graphtext/optim.hpp"

#include "graphtext/errors.hpp"

#include <cmath>

namespace graphtext {

AdamW::AdamW(ParameterRefs params, AdamWConfig config) : params_(std::move(params)), config_(config) {
  if (!(config_.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (Parameter* p : params_) {
    m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
  }
}

void AdamW::step() {
  ++steps_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = *params_[i];
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * p.grad;
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * p.grad.cwiseAbs2();
    if (config_.weight_decay > 0.0) p.value *= 1.0 - config_.learning_rate * config_.weight_decay;
    const Matrix update = (m_[i] / c1).array() / ((v_[i] / c2).array().sqrt() + config_.eps);
    p.value -= config_.learning_rate * update;
    round_to_float(p.value);
  }
}

double global_grad_norm(const ParameterRefs& params) {
  double total = 0.0;
  for (const Parameter* p : params) total += p->grad.squaredNorm();
  return std::sqrt(total);
}

double clip_grad_norm(const ParameterRefs& params, double max_norm) {
  const double norm = global_grad_norm(params);
  if (!std::isfinite(norm)) throw NumericError("gradient norm is not finite");
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (Parameter* p : params) p->grad *= s;
  }
  return norm;
}

}  // namespace graphtext
