#include "fsaudit/optim.hpp"

#include <cmath>

#include "fsaudit/errors.hpp"

namespace fsaudit {

Optimizer::DpStepInfo Optimizer::sanitize_gradients(const DpConfig& dp, Rng& rng) {
    std::vector<float> flat;
    std::size_t total = 0;
    for (Param* p : params_) total += p->count();
    flat.reserve(total);
    for (Param* p : params_) flat.insert(flat.end(), p->grad.begin(), p->grad.end());

    DpStepInfo info;
    info.pre_clip_norm = clip_gradient(flat, dp.clip_norm);
    info.clipped_norm = l2_norm(flat);
    dp_noise(flat, dp.clip_norm, dp.noise_multiplier, rng);

    std::size_t offset = 0;
    for (Param* p : params_) {
        std::copy(flat.begin() + static_cast<std::ptrdiff_t>(offset),
                  flat.begin() + static_cast<std::ptrdiff_t>(offset + p->count()),
                  p->grad.begin());
        offset += p->count();
    }
    return info;
}

SgdOptimizer::SgdOptimizer(std::vector<Param*> params, double lr, double momentum)
    : Optimizer(std::move(params), lr), momentum_(momentum) {
    for (Param* p : params_) velocity_.emplace_back(p->count(), 0.0f);
}

void SgdOptimizer::step() {
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Param* p = params_[i];
        auto& vel = velocity_[i];
        for (std::size_t j = 0; j < p->count(); ++j) {
            vel[j] = static_cast<float>(momentum_ * vel[j] + p->grad[j]);
            p->value[j] -= static_cast<float>(lr_ * vel[j]);
        }
    }
}

AdamOptimizer::AdamOptimizer(std::vector<Param*> params, double lr, double beta1,
                             double beta2, double eps)
    : Optimizer(std::move(params), lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (Param* p : params_) {
        m_.emplace_back(p->count(), 0.0f);
        v_.emplace_back(p->count(), 0.0f);
    }
}

void AdamOptimizer::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Param* p = params_[i];
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t j = 0; j < p->count(); ++j) {
            const double g = p->grad[j];
            m[j] = static_cast<float>(beta1_ * m[j] + (1.0 - beta1_) * g);
            v[j] = static_cast<float>(beta2_ * v[j] + (1.0 - beta2_) * g * g);
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            p->value[j] -= static_cast<float>(lr_ * mhat / (std::sqrt(vhat) + eps_));
        }
    }
}

double StepScheduler::lr_for_epoch(int epoch) const {
    return base_lr * std::pow(gamma, static_cast<double>(epoch / step_epochs));
}

std::unique_ptr<Optimizer> make_optimizer(const std::string& tag,
                                          std::vector<Param*> params, double lr) {
    if (tag == "adam") return std::make_unique<AdamOptimizer>(std::move(params), lr);
    if (tag == "sgd") return std::make_unique<SgdOptimizer>(std::move(params), lr);
    throw ConfigError("unknown optimizer tag '" + tag + "'");
}

}  // namespace fsaudit
