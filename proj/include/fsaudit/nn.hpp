#pragma once

#include <memory>
#include <string>
#include <vector>

#include "fsaudit/rng.hpp"
#include "fsaudit/tensor.hpp"

namespace fsaudit {

struct Param {
    std::string name;
    std::vector<int> shape;
    std::vector<float> value;
    std::vector<float> grad;

    Param(std::string n, std::vector<int> s);
    std::size_t count() const { return value.size(); }
    void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0f); }
};

// Layers cache whatever forward state backward needs; backward must follow
// the matching forward (single-threaded per layer instance).
class Layer {
public:
    virtual ~Layer() = default;
    virtual Tensor forward(const Tensor& x, bool train) = 0;
    virtual Tensor backward(const Tensor& gy) = 0;
    virtual void collect(std::vector<Param*>&) {}
    // Non-trainable state that still belongs in checkpoints (BN running stats).
    virtual void collect_state(std::vector<std::pair<std::string, std::vector<double>*>>&) {}
};

class Conv2d : public Layer {
public:
    Conv2d(int in_ch, int out_ch, int kernel, int stride, int pad, int groups,
           Rng& rng, const std::string& name);
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& gy) override;
    void collect(std::vector<Param*>& out) override;

private:
    int in_ch_, out_ch_, kernel_, stride_, pad_, groups_;
    Param weight_, bias_;
    Tensor input_;
    std::vector<float> col_;  // cached im2col buffer, one group at a time
    int out_h_ = 0, out_w_ = 0;
};

class BatchNorm2d : public Layer {
public:
    BatchNorm2d(int channels, Rng& rng, const std::string& name);
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& gy) override;
    void collect(std::vector<Param*>& out) override;
    void collect_state(
        std::vector<std::pair<std::string, std::vector<double>*>>& out) override;

private:
    int channels_;
    Param gamma_, beta_;
    std::vector<double> running_mean_, running_var_;
    std::vector<double> mean_, var_;  // batch stats from the last forward
    Tensor input_;
    bool trained_forward_ = false;
    static constexpr double kEps = 1e-5;
    static constexpr double kMomentum = 0.1;

public:
    std::vector<double>& running_mean() { return running_mean_; }
    std::vector<double>& running_var() { return running_var_; }
};

class Relu : public Layer {
public:
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& gy) override;

private:
    Tensor input_;
};

class Sigmoid : public Layer {
public:
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& gy) override;

private:
    Tensor output_;
};

class MaxPool2d : public Layer {
public:
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& gy) override;

private:
    std::vector<int> argmax_;
    int in_n_ = 0, in_c_ = 0, in_h_ = 0, in_w_ = 0;
};

class GlobalAvgPool : public Layer {
public:
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& gy) override;

private:
    int in_h_ = 0, in_w_ = 0;
};

class Flatten : public Layer {
public:
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& gy) override;

private:
    int in_c_ = 0, in_h_ = 0, in_w_ = 0;
};

class Linear : public Layer {
public:
    Linear(int in_dim, int out_dim, Rng& rng, const std::string& name);
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& gy) override;
    void collect(std::vector<Param*>& out) override;

    int in_dim() const { return in_dim_; }
    int out_dim() const { return out_dim_; }

private:
    int in_dim_, out_dim_;
    Param weight_, bias_;
    Tensor input_;
};

class Sequential : public Layer {
public:
    Sequential() = default;
    void add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& gy) override;
    void collect(std::vector<Param*>& out) override;
    void collect_state(
        std::vector<std::pair<std::string, std::vector<double>*>>& out) override;
    bool empty() const { return layers_.empty(); }

private:
    std::vector<std::unique_ptr<Layer>> layers_;
};

// y = body(x) + x. Channel counts must match (identity shortcut).
class Residual : public Layer {
public:
    explicit Residual(std::unique_ptr<Sequential> body) : body_(std::move(body)) {}
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& gy) override;
    void collect(std::vector<Param*>& out) override;
    void collect_state(
        std::vector<std::pair<std::string, std::vector<double>*>>& out) override;

private:
    std::unique_ptr<Sequential> body_;
};

// Parallel branches concatenated along the channel axis.
class ChannelConcat : public Layer {
public:
    void add_branch(std::unique_ptr<Sequential> branch) {
        branches_.push_back(std::move(branch));
    }
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& gy) override;
    void collect(std::vector<Param*>& out) override;
    void collect_state(
        std::vector<std::pair<std::string, std::vector<double>*>>& out) override;

private:
    std::vector<std::unique_ptr<Sequential>> branches_;
    std::vector<int> branch_channels_;
};

}  // namespace fsaudit
