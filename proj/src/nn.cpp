#include "fsaudit/nn.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstring>

namespace fsaudit {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ColMat = Eigen::MatrixXf;
template <typename M>
using Map = Eigen::Map<M>;
template <typename M>
using CMap = Eigen::Map<const M>;

Param::Param(std::string n, std::vector<int> s) : name(std::move(n)), shape(std::move(s)) {
    std::size_t count = 1;
    for (int d : shape) count *= static_cast<std::size_t>(d);
    value.assign(count, 0.0f);
    grad.assign(count, 0.0f);
}

Tensor batch_images(const std::vector<const FaceImage*>& images, int expected_size) {
    if (images.empty()) throw ShapeError("batch_images: empty batch");
    Tensor t(static_cast<int>(images.size()), FaceImage::kChannels, expected_size,
             expected_size);
    for (int i = 0; i < t.n; ++i) {
        const FaceImage& img = *images[static_cast<std::size_t>(i)];
        if (img.height != expected_size || img.width != expected_size)
            throw ShapeError("batch_images: image '" + img.image_id + "' is " +
                             std::to_string(img.height) + "x" + std::to_string(img.width) +
                             ", expected " + std::to_string(expected_size));
        std::memcpy(t.sample(i), img.pixels.data(), img.pixels.size() * sizeof(float));
    }
    return t;
}

// ---------------------------------------------------------------------------
// Conv2d: im2col + GEMM, grouped. The col buffer is cached for backward.
// ---------------------------------------------------------------------------

Conv2d::Conv2d(int in_ch, int out_ch, int kernel, int stride, int pad, int groups,
               Rng& rng, const std::string& name)
    : in_ch_(in_ch), out_ch_(out_ch), kernel_(kernel), stride_(stride), pad_(pad),
      groups_(groups),
      weight_(name + ".weight", {out_ch, in_ch / groups, kernel, kernel}),
      bias_(name + ".bias", {out_ch}) {
    if (in_ch % groups != 0 || out_ch % groups != 0)
        throw ConfigError("Conv2d '" + name + "': channels not divisible by groups");
    const int fan_in = (in_ch / groups) * kernel * kernel;
    const double stddev = std::sqrt(2.0 / fan_in);
    for (auto& v : weight_.value) v = static_cast<float>(rng.normal(0.0, stddev));
}

namespace {

// Fills a (K x n*out_hw) column-major buffer for one channel group.
void im2col_group(const Tensor& x, int ch_begin, int ch_count, int kernel, int stride,
                  int pad, int out_h, int out_w, float* col) {
    const int k2 = kernel * kernel;
    const int rows = ch_count * k2;
    const std::size_t out_hw = static_cast<std::size_t>(out_h) * out_w;
    for (int n = 0; n < x.n; ++n) {
        float* col_n = col + static_cast<std::size_t>(n) * out_hw * rows;
        for (int oy = 0; oy < out_h; ++oy) {
            for (int ox = 0; ox < out_w; ++ox) {
                float* column = col_n + (static_cast<std::size_t>(oy) * out_w + ox) * rows;
                int r = 0;
                for (int c = 0; c < ch_count; ++c) {
                    for (int ky = 0; ky < kernel; ++ky) {
                        const int iy = oy * stride - pad + ky;
                        if (iy < 0 || iy >= x.h) {
                            for (int kx = 0; kx < kernel; ++kx) column[r++] = 0.0f;
                            continue;
                        }
                        const float* row = x.sample(n) +
                                           (static_cast<std::size_t>(ch_begin + c) * x.h + iy) * x.w;
                        for (int kx = 0; kx < kernel; ++kx) {
                            const int ix = ox * stride - pad + kx;
                            column[r++] = (ix < 0 || ix >= x.w) ? 0.0f : row[ix];
                        }
                    }
                }
            }
        }
    }
}

void col2im_group_add(const float* col, int ch_begin, int ch_count, int kernel,
                      int stride, int pad, int out_h, int out_w, Tensor& dx) {
    const int k2 = kernel * kernel;
    const int rows = ch_count * k2;
    const std::size_t out_hw = static_cast<std::size_t>(out_h) * out_w;
    for (int n = 0; n < dx.n; ++n) {
        const float* col_n = col + static_cast<std::size_t>(n) * out_hw * rows;
        for (int oy = 0; oy < out_h; ++oy) {
            for (int ox = 0; ox < out_w; ++ox) {
                const float* column = col_n + (static_cast<std::size_t>(oy) * out_w + ox) * rows;
                int r = 0;
                for (int c = 0; c < ch_count; ++c) {
                    for (int ky = 0; ky < kernel; ++ky) {
                        const int iy = oy * stride - pad + ky;
                        if (iy < 0 || iy >= dx.h) {
                            r += kernel;
                            continue;
                        }
                        float* row = dx.sample(n) +
                                     (static_cast<std::size_t>(ch_begin + c) * dx.h + iy) * dx.w;
                        for (int kx = 0; kx < kernel; ++kx) {
                            const int ix = ox * stride - pad + kx;
                            if (ix >= 0 && ix < dx.w) row[ix] += column[r];
                            ++r;
                        }
                    }
                }
            }
        }
    }
}

}  // namespace

Tensor Conv2d::forward(const Tensor& x, bool) {
    if (x.c != in_ch_) throw ShapeError("Conv2d: input channel mismatch");
    input_ = x;
    out_h_ = (x.h + 2 * pad_ - kernel_) / stride_ + 1;
    out_w_ = (x.w + 2 * pad_ - kernel_) / stride_ + 1;
    const int cig = in_ch_ / groups_;
    const int cog = out_ch_ / groups_;
    const int rows = cig * kernel_ * kernel_;
    const std::size_t cols = static_cast<std::size_t>(x.n) * out_h_ * out_w_;
    col_.assign(static_cast<std::size_t>(groups_) * rows * cols, 0.0f);

    Tensor y(x.n, out_ch_, out_h_, out_w_);
    const std::size_t out_hw = static_cast<std::size_t>(out_h_) * out_w_;
    RowMat y_mat(cog, static_cast<Eigen::Index>(cols));
    for (int g = 0; g < groups_; ++g) {
        float* col_g = col_.data() + static_cast<std::size_t>(g) * rows * cols;
        im2col_group(x, g * cig, cig, kernel_, stride_, pad_, out_h_, out_w_, col_g);
        CMap<ColMat> col_map(col_g, rows, static_cast<Eigen::Index>(cols));
        CMap<RowMat> w_map(weight_.value.data() + static_cast<std::size_t>(g) * cog * rows,
                           cog, rows);
        y_mat.noalias() = w_map * col_map;
        for (int c = 0; c < cog; ++c) {
            const float b = bias_.value[static_cast<std::size_t>(g * cog + c)];
            for (int n = 0; n < x.n; ++n) {
                float* dst = y.sample(n) + static_cast<std::size_t>(g * cog + c) * out_hw;
                const float* src = y_mat.data() + (static_cast<std::size_t>(c) * cols +
                                                   static_cast<std::size_t>(n) * out_hw);
                for (std::size_t s = 0; s < out_hw; ++s) dst[s] = src[s] + b;
            }
        }
    }
    return y;
}

Tensor Conv2d::backward(const Tensor& gy) {
    const int cig = in_ch_ / groups_;
    const int cog = out_ch_ / groups_;
    const int rows = cig * kernel_ * kernel_;
    const std::size_t cols = static_cast<std::size_t>(input_.n) * out_h_ * out_w_;
    const std::size_t out_hw = static_cast<std::size_t>(out_h_) * out_w_;

    Tensor dx = Tensor::zeros_like(input_);
    RowMat gy_mat(cog, static_cast<Eigen::Index>(cols));
    ColMat dcol(rows, static_cast<Eigen::Index>(cols));
    for (int g = 0; g < groups_; ++g) {
        for (int c = 0; c < cog; ++c) {
            double db = 0.0;
            for (int n = 0; n < gy.n; ++n) {
                const float* src = gy.sample(n) + static_cast<std::size_t>(g * cog + c) * out_hw;
                float* dst = gy_mat.data() + (static_cast<std::size_t>(c) * cols +
                                              static_cast<std::size_t>(n) * out_hw);
                for (std::size_t s = 0; s < out_hw; ++s) {
                    dst[s] = src[s];
                    db += src[s];
                }
            }
            bias_.grad[static_cast<std::size_t>(g * cog + c)] += static_cast<float>(db);
        }
        const float* col_g = col_.data() + static_cast<std::size_t>(g) * rows * cols;
        CMap<ColMat> col_map(col_g, rows, static_cast<Eigen::Index>(cols));
        Map<RowMat> dw_map(weight_.grad.data() + static_cast<std::size_t>(g) * cog * rows,
                           cog, rows);
        dw_map.noalias() += gy_mat * col_map.transpose();
        CMap<RowMat> w_map(weight_.value.data() + static_cast<std::size_t>(g) * cog * rows,
                           cog, rows);
        dcol.noalias() = w_map.transpose() * gy_mat;
        col2im_group_add(dcol.data(), g * cig, cig, kernel_, stride_, pad_, out_h_, out_w_,
                         dx);
    }
    return dx;
}

void Conv2d::collect(std::vector<Param*>& out) {
    out.push_back(&weight_);
    out.push_back(&bias_);
}

// ---------------------------------------------------------------------------
// BatchNorm2d
// ---------------------------------------------------------------------------

BatchNorm2d::BatchNorm2d(int channels, Rng&, const std::string& name)
    : channels_(channels),
      gamma_(name + ".gamma", {channels}),
      beta_(name + ".beta", {channels}),
      running_mean_(static_cast<std::size_t>(channels), 0.0),
      running_var_(static_cast<std::size_t>(channels), 1.0),
      mean_(static_cast<std::size_t>(channels), 0.0),
      var_(static_cast<std::size_t>(channels), 0.0) {
    std::fill(gamma_.value.begin(), gamma_.value.end(), 1.0f);
}

Tensor BatchNorm2d::forward(const Tensor& x, bool train) {
    if (x.c != channels_) throw ShapeError("BatchNorm2d: channel mismatch");
    input_ = x;
    trained_forward_ = train;
    Tensor y = Tensor::zeros_like(x);
    const std::size_t hw = static_cast<std::size_t>(x.h) * x.w;
    const double m = static_cast<double>(x.n) * static_cast<double>(hw);
    for (int c = 0; c < channels_; ++c) {
        double mu, v;
        if (train) {
            double sum = 0.0, sq = 0.0;
            for (int n = 0; n < x.n; ++n) {
                const float* p = x.sample(n) + static_cast<std::size_t>(c) * hw;
                for (std::size_t s = 0; s < hw; ++s) {
                    sum += p[s];
                    sq += static_cast<double>(p[s]) * p[s];
                }
            }
            mu = sum / m;
            v = std::max(sq / m - mu * mu, 0.0);
            mean_[static_cast<std::size_t>(c)] = mu;
            var_[static_cast<std::size_t>(c)] = v;
            running_mean_[static_cast<std::size_t>(c)] =
                (1.0 - kMomentum) * running_mean_[static_cast<std::size_t>(c)] + kMomentum * mu;
            running_var_[static_cast<std::size_t>(c)] =
                (1.0 - kMomentum) * running_var_[static_cast<std::size_t>(c)] + kMomentum * v;
        } else {
            mu = running_mean_[static_cast<std::size_t>(c)];
            v = running_var_[static_cast<std::size_t>(c)];
        }
        const float scale = static_cast<float>(
            gamma_.value[static_cast<std::size_t>(c)] / std::sqrt(v + kEps));
        const float shift = static_cast<float>(
            beta_.value[static_cast<std::size_t>(c)] - mu * scale);
        for (int n = 0; n < x.n; ++n) {
            const float* p = x.sample(n) + static_cast<std::size_t>(c) * hw;
            float* q = y.sample(n) + static_cast<std::size_t>(c) * hw;
            for (std::size_t s = 0; s < hw; ++s) q[s] = p[s] * scale + shift;
        }
    }
    return y;
}

Tensor BatchNorm2d::backward(const Tensor& gy) {
    Tensor dx = Tensor::zeros_like(input_);
    const std::size_t hw = static_cast<std::size_t>(input_.h) * input_.w;
    const double m = static_cast<double>(input_.n) * static_cast<double>(hw);
    for (int c = 0; c < channels_; ++c) {
        const double mu = trained_forward_ ? mean_[static_cast<std::size_t>(c)]
                                           : running_mean_[static_cast<std::size_t>(c)];
        const double v = trained_forward_ ? var_[static_cast<std::size_t>(c)]
                                          : running_var_[static_cast<std::size_t>(c)];
        const double inv_std = 1.0 / std::sqrt(v + kEps);
        const double gamma = gamma_.value[static_cast<std::size_t>(c)];

        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (int n = 0; n < input_.n; ++n) {
            const float* px = input_.sample(n) + static_cast<std::size_t>(c) * hw;
            const float* pg = gy.sample(n) + static_cast<std::size_t>(c) * hw;
            for (std::size_t s = 0; s < hw; ++s) {
                sum_dy += pg[s];
                sum_dy_xhat += pg[s] * (px[s] - mu) * inv_std;
            }
        }
        gamma_.grad[static_cast<std::size_t>(c)] += static_cast<float>(sum_dy_xhat);
        beta_.grad[static_cast<std::size_t>(c)] += static_cast<float>(sum_dy);

        if (!trained_forward_) {
            const float k = static_cast<float>(gamma * inv_std);
            for (int n = 0; n < input_.n; ++n) {
                const float* pg = gy.sample(n) + static_cast<std::size_t>(c) * hw;
                float* pd = dx.sample(n) + static_cast<std::size_t>(c) * hw;
                for (std::size_t s = 0; s < hw; ++s) pd[s] = pg[s] * k;
            }
            continue;
        }
        for (int n = 0; n < input_.n; ++n) {
            const float* px = input_.sample(n) + static_cast<std::size_t>(c) * hw;
            const float* pg = gy.sample(n) + static_cast<std::size_t>(c) * hw;
            float* pd = dx.sample(n) + static_cast<std::size_t>(c) * hw;
            for (std::size_t s = 0; s < hw; ++s) {
                const double xhat = (px[s] - mu) * inv_std;
                pd[s] = static_cast<float>(
                    gamma * inv_std * (pg[s] - sum_dy / m - xhat * sum_dy_xhat / m));
            }
        }
    }
    return dx;
}

void BatchNorm2d::collect(std::vector<Param*>& out) {
    out.push_back(&gamma_);
    out.push_back(&beta_);
}

void BatchNorm2d::collect_state(
    std::vector<std::pair<std::string, std::vector<double>*>>& out) {
    out.emplace_back(gamma_.name + ".running_mean", &running_mean_);
    out.emplace_back(gamma_.name + ".running_var", &running_var_);
}

// ---------------------------------------------------------------------------
// Elementwise and pooling layers
// ---------------------------------------------------------------------------

Tensor Relu::forward(const Tensor& x, bool) {
    input_ = x;
    Tensor y = x;
    for (float& v : y.data) v = v > 0.0f ? v : 0.0f;
    return y;
}

Tensor Relu::backward(const Tensor& gy) {
    Tensor dx = gy;
    for (std::size_t i = 0; i < dx.data.size(); ++i)
        if (input_.data[i] <= 0.0f) dx.data[i] = 0.0f;
    return dx;
}

Tensor Sigmoid::forward(const Tensor& x, bool) {
    Tensor y = x;
    for (float& v : y.data) v = 1.0f / (1.0f + std::exp(-v));
    output_ = y;
    return y;
}

Tensor Sigmoid::backward(const Tensor& gy) {
    Tensor dx = gy;
    for (std::size_t i = 0; i < dx.data.size(); ++i) {
        const float y = output_.data[i];
        dx.data[i] *= y * (1.0f - y);
    }
    return dx;
}

Tensor MaxPool2d::forward(const Tensor& x, bool) {
    in_n_ = x.n;
    in_c_ = x.c;
    in_h_ = x.h;
    in_w_ = x.w;
    const int oh = x.h / 2, ow = x.w / 2;
    if (oh < 1 || ow < 1) throw ShapeError("MaxPool2d: input smaller than window");
    Tensor y(x.n, x.c, oh, ow);
    argmax_.assign(y.size(), 0);
    std::size_t o = 0;
    for (int n = 0; n < x.n; ++n) {
        for (int c = 0; c < x.c; ++c) {
            for (int oy = 0; oy < oh; ++oy) {
                for (int ox = 0; ox < ow; ++ox) {
                    int best = -1;
                    float best_v = 0.0f;
                    for (int ky = 0; ky < 2; ++ky) {
                        for (int kx = 0; kx < 2; ++kx) {
                            const int iy = oy * 2 + ky, ix = ox * 2 + kx;
                            const int idx = ((n * x.c + c) * x.h + iy) * x.w + ix;
                            const float v = x.data[static_cast<std::size_t>(idx)];
                            if (best < 0 || v > best_v) {
                                best = idx;
                                best_v = v;
                            }
                        }
                    }
                    y.data[o] = best_v;
                    argmax_[o] = best;
                    ++o;
                }
            }
        }
    }
    return y;
}

Tensor MaxPool2d::backward(const Tensor& gy) {
    Tensor dx(in_n_, in_c_, in_h_, in_w_);
    for (std::size_t o = 0; o < gy.data.size(); ++o)
        dx.data[static_cast<std::size_t>(argmax_[o])] += gy.data[o];
    return dx;
}

Tensor GlobalAvgPool::forward(const Tensor& x, bool) {
    in_h_ = x.h;
    in_w_ = x.w;
    Tensor y(x.n, x.c, 1, 1);
    const std::size_t hw = static_cast<std::size_t>(x.h) * x.w;
    for (int n = 0; n < x.n; ++n) {
        for (int c = 0; c < x.c; ++c) {
            const float* p = x.sample(n) + static_cast<std::size_t>(c) * hw;
            double sum = 0.0;
            for (std::size_t s = 0; s < hw; ++s) sum += p[s];
            y.at(n, c, 0, 0) = static_cast<float>(sum / static_cast<double>(hw));
        }
    }
    return y;
}

Tensor GlobalAvgPool::backward(const Tensor& gy) {
    Tensor dx(gy.n, gy.c, in_h_, in_w_);
    const std::size_t hw = static_cast<std::size_t>(in_h_) * in_w_;
    for (int n = 0; n < gy.n; ++n) {
        for (int c = 0; c < gy.c; ++c) {
            const float g = gy.at(n, c, 0, 0) / static_cast<float>(hw);
            float* p = dx.sample(n) + static_cast<std::size_t>(c) * hw;
            for (std::size_t s = 0; s < hw; ++s) p[s] = g;
        }
    }
    return dx;
}

Tensor Flatten::forward(const Tensor& x, bool) {
    in_c_ = x.c;
    in_h_ = x.h;
    in_w_ = x.w;
    Tensor y = x;
    y.c = x.chw();
    y.h = 1;
    y.w = 1;
    return y;
}

Tensor Flatten::backward(const Tensor& gy) {
    Tensor dx = gy;
    dx.c = in_c_;
    dx.h = in_h_;
    dx.w = in_w_;
    return dx;
}

// ---------------------------------------------------------------------------
// Linear
// ---------------------------------------------------------------------------

Linear::Linear(int in_dim, int out_dim, Rng& rng, const std::string& name)
    : in_dim_(in_dim), out_dim_(out_dim),
      weight_(name + ".weight", {out_dim, in_dim}),
      bias_(name + ".bias", {out_dim}) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
    for (auto& v : weight_.value) v = static_cast<float>(rng.uniform(-bound, bound));
    for (auto& v : bias_.value) v = static_cast<float>(rng.uniform(-bound, bound));
}

Tensor Linear::forward(const Tensor& x, bool) {
    if (x.chw() != in_dim_) throw ShapeError("Linear: input dim mismatch");
    input_ = x;
    Tensor y(x.n, out_dim_, 1, 1);
    CMap<RowMat> x_map(x.data.data(), x.n, in_dim_);
    CMap<RowMat> w_map(weight_.value.data(), out_dim_, in_dim_);
    Map<RowMat> y_map(y.data.data(), y.n, out_dim_);
    y_map.noalias() = x_map * w_map.transpose();
    CMap<Eigen::VectorXf> b_map(bias_.value.data(), out_dim_);
    y_map.rowwise() += b_map.transpose();
    return y;
}

Tensor Linear::backward(const Tensor& gy) {
    Tensor dx(input_.n, in_dim_, 1, 1);
    dx.c = input_.c;
    dx.h = input_.h;
    dx.w = input_.w;
    CMap<RowMat> gy_map(gy.data.data(), gy.n, out_dim_);
    CMap<RowMat> x_map(input_.data.data(), input_.n, in_dim_);
    CMap<RowMat> w_map(weight_.value.data(), out_dim_, in_dim_);
    Map<RowMat> dw_map(weight_.grad.data(), out_dim_, in_dim_);
    dw_map.noalias() += gy_map.transpose() * x_map;
    Map<Eigen::VectorXf> db_map(bias_.grad.data(), out_dim_);
    db_map.noalias() += gy_map.colwise().sum().transpose();
    Map<RowMat> dx_map(dx.data.data(), dx.n, in_dim_);
    dx_map.noalias() = gy_map * w_map;
    return dx;
}

void Linear::collect(std::vector<Param*>& out) {
    out.push_back(&weight_);
    out.push_back(&bias_);
}

// ---------------------------------------------------------------------------
// Containers
// ---------------------------------------------------------------------------

Tensor Sequential::forward(const Tensor& x, bool train) {
    Tensor t = x;
    for (auto& layer : layers_) t = layer->forward(t, train);
    return t;
}

Tensor Sequential::backward(const Tensor& gy) {
    Tensor g = gy;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
    return g;
}

void Sequential::collect(std::vector<Param*>& out) {
    for (auto& layer : layers_) layer->collect(out);
}

void Sequential::collect_state(
    std::vector<std::pair<std::string, std::vector<double>*>>& out) {
    for (auto& layer : layers_) layer->collect_state(out);
}

Tensor Residual::forward(const Tensor& x, bool train) {
    Tensor y = body_->forward(x, train);
    if (!y.same_shape(x)) throw ShapeError("Residual: body changed tensor shape");
    for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] += x.data[i];
    return y;
}

Tensor Residual::backward(const Tensor& gy) {
    Tensor dx = body_->backward(gy);
    for (std::size_t i = 0; i < dx.data.size(); ++i) dx.data[i] += gy.data[i];
    return dx;
}

void Residual::collect(std::vector<Param*>& out) { body_->collect(out); }

void Residual::collect_state(
    std::vector<std::pair<std::string, std::vector<double>*>>& out) {
    body_->collect_state(out);
}

Tensor ChannelConcat::forward(const Tensor& x, bool train) {
    std::vector<Tensor> outs;
    outs.reserve(branches_.size());
    branch_channels_.clear();
    int total_c = 0;
    for (auto& branch : branches_) {
        outs.push_back(branch->forward(x, train));
        branch_channels_.push_back(outs.back().c);
        total_c += outs.back().c;
        if (outs.back().h != outs.front().h || outs.back().w != outs.front().w)
            throw ShapeError("ChannelConcat: branch spatial dims differ");
    }
    Tensor y(x.n, total_c, outs.front().h, outs.front().w);
    const std::size_t hw = static_cast<std::size_t>(y.h) * y.w;
    for (int n = 0; n < y.n; ++n) {
        float* dst = y.sample(n);
        for (std::size_t b = 0; b < outs.size(); ++b) {
            const float* src = outs[b].sample(n);
            std::memcpy(dst, src, static_cast<std::size_t>(outs[b].c) * hw * sizeof(float));
            dst += static_cast<std::size_t>(outs[b].c) * hw;
        }
    }
    return y;
}

Tensor ChannelConcat::backward(const Tensor& gy) {
    Tensor dx;
    const std::size_t hw = static_cast<std::size_t>(gy.h) * gy.w;
    int ch_offset = 0;
    for (std::size_t b = 0; b < branches_.size(); ++b) {
        const int bc = branch_channels_[b];
        Tensor g(gy.n, bc, gy.h, gy.w);
        for (int n = 0; n < gy.n; ++n)
            std::memcpy(g.sample(n),
                        gy.sample(n) + static_cast<std::size_t>(ch_offset) * hw,
                        static_cast<std::size_t>(bc) * hw * sizeof(float));
        Tensor dxb = branches_[b]->backward(g);
        if (dx.size() == 0)
            dx = dxb;
        else
            for (std::size_t i = 0; i < dx.data.size(); ++i) dx.data[i] += dxb.data[i];
        ch_offset += bc;
    }
    return dx;
}

void ChannelConcat::collect(std::vector<Param*>& out) {
    for (auto& branch : branches_) branch->collect(out);
}

void ChannelConcat::collect_state(
    std::vector<std::pair<std::string, std::vector<double>*>>& out) {
    for (auto& branch : branches_) branch->collect_state(out);
}

}  // namespace fsaudit
