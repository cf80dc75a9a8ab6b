#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "fsaudit/defenses.hpp"
#include "fsaudit/nn.hpp"

namespace fsaudit {

class Optimizer {
public:
    explicit Optimizer(std::vector<Param*> params, double lr)
        : params_(std::move(params)), lr_(lr) {}
    virtual ~Optimizer() = default;

    virtual void step() = 0;
    void zero_grad() {
        for (Param* p : params_) p->zero_grad();
    }
    double lr() const { return lr_; }
    void set_lr(double lr) { lr_ = lr; }

    struct DpStepInfo {
        double pre_clip_norm = 0.0;
        double clipped_norm = 0.0;  // after clipping, before noise
    };

    // DP hook: flattens all gradients, clips the global l2 norm, adds
    // Gaussian noise, and scatters back.
    DpStepInfo sanitize_gradients(const DpConfig& dp, Rng& rng);

protected:
    std::vector<Param*> params_;
    double lr_;
};

class SgdOptimizer : public Optimizer {
public:
    SgdOptimizer(std::vector<Param*> params, double lr, double momentum = 0.9);
    void step() override;

private:
    double momentum_;
    std::vector<std::vector<float>> velocity_;
};

class AdamOptimizer : public Optimizer {
public:
    AdamOptimizer(std::vector<Param*> params, double lr, double beta1 = 0.9,
                  double beta2 = 0.999, double eps = 1e-8);
    void step() override;

private:
    double beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<std::vector<float>> m_, v_;
};

// Multiplies the learning rate by gamma every step_epochs epochs.
struct StepScheduler {
    double base_lr;
    int step_epochs;
    double gamma;
    double lr_for_epoch(int epoch) const;
};

std::unique_ptr<Optimizer> make_optimizer(const std::string& tag,
                                          std::vector<Param*> params, double lr);

}  // namespace fsaudit
