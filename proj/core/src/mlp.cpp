#include "bundlechoice/mlp.hpp"

#include <cmath>
#include <stdexcept>

#include "bundlechoice/rng.hpp"

namespace bundlechoice {

namespace {

constexpr std::size_t kOutputDim = 8;

double logistic_fn(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void softmax4(std::span<const double> z, std::span<double> p) {
    double zmax = z[0];
    for (std::size_t i = 1; i < 4; ++i) zmax = std::max(zmax, z[i]);
    double total = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        p[i] = std::exp(z[i] - zmax);
        total += p[i];
    }
    for (std::size_t i = 0; i < 4; ++i) p[i] /= total;
}

}  // namespace

MlpNet::MlpNet(std::size_t input_dim, const std::vector<int>& hidden, std::uint64_t seed)
    : input_dim_(input_dim) {
    if (input_dim == 0) throw std::invalid_argument("MlpNet: input_dim must be positive");
    std::vector<std::size_t> widths{input_dim};
    for (int hsize : hidden) {
        if (hsize <= 0) throw std::invalid_argument("MlpNet: hidden widths must be positive");
        widths.push_back(static_cast<std::size_t>(hsize));
    }
    widths.push_back(kOutputDim);

    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        const std::size_t fan_in = widths[l];
        const std::size_t fan_out = widths[l + 1];
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        Matrix w(fan_out, fan_in);
        for (std::size_t i = 0; i < fan_out; ++i)
            for (std::size_t j = 0; j < fan_in; ++j) w(i, j) = rng.uniform(-limit, limit);
        weights_.push_back(std::move(w));
        biases_.emplace_back(fan_out, 0.0);
    }
    mean_.assign(input_dim, 0.0);
    std_.assign(input_dim, 1.0);
}

void MlpNet::set_standardization(std::vector<double> mean, std::vector<double> std) {
    if (mean.size() != input_dim_ || std.size() != input_dim_)
        throw std::invalid_argument("MlpNet: standardization size mismatch");
    for (auto& s : std)
        if (!(s > 0.0)) s = 1.0;  // constant inputs pass through unscaled
    mean_ = std::move(mean);
    std_ = std::move(std);
}

std::vector<std::vector<double>> MlpNet::activations(std::span<const double> input) const {
    if (input.size() != input_dim_) throw std::invalid_argument("MlpNet: input width mismatch");
    std::vector<std::vector<double>> acts;
    acts.reserve(weights_.size() + 1);
    std::vector<double> cur(input_dim_);
    for (std::size_t j = 0; j < input_dim_; ++j) cur[j] = (input[j] - mean_[j]) / std_[j];
    acts.push_back(cur);

    for (std::size_t l = 0; l < weights_.size(); ++l) {
        const Matrix& w = weights_[l];
        std::vector<double> next(w.rows());
        for (std::size_t i = 0; i < w.rows(); ++i) {
            double z = biases_[l][i];
            for (std::size_t j = 0; j < w.cols(); ++j) z += w(i, j) * cur[j];
            next[i] = (l + 1 < weights_.size()) ? logistic_fn(z) : z;  // linear output layer
        }
        acts.push_back(next);
        cur = acts.back();
    }
    return acts;
}

std::pair<std::array<double, 4>, std::array<double, 4>> MlpNet::forward(
    std::span<const double> input) const {
    const auto acts = activations(input);
    const auto& z = acts.back();
    std::array<double, 4> p_t{}, p_s{};
    softmax4(std::span<const double>{z.data(), 4}, p_t);
    softmax4(std::span<const double>{z.data() + 4, 4}, p_s);
    return {p_t, p_s};
}

std::vector<double> MlpNet::parameters() const {
    std::vector<double> flat;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        const auto span = weights_[l].flat();
        flat.insert(flat.end(), span.begin(), span.end());
        flat.insert(flat.end(), biases_[l].begin(), biases_[l].end());
    }
    return flat;
}

void MlpNet::set_parameters(std::span<const double> flat) {
    std::size_t off = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        auto span = weights_[l].flat();
        for (auto& v : span) v = flat[off++];
        for (auto& v : biases_[l]) v = flat[off++];
    }
    if (off != flat.size()) throw std::invalid_argument("MlpNet: parameter size mismatch");
}

double mlp_loss(const MlpNet& net, const Matrix& inputs, const Matrix& targets,
                MlpConfig::Loss loss) {
    if (inputs.rows() != targets.rows() || targets.cols() != kOutputDim)
        throw std::invalid_argument("mlp_loss: shape mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < inputs.rows(); ++i) {
        const auto [p_t, p_s] = net.forward(inputs.row(i));
        const auto y = targets.row(i);
        for (int a = 0; a < 4; ++a) {
            if (loss == MlpConfig::Loss::CrossEntropy) {
                if (y[a] > 0.0) total -= y[a] * std::log(std::max(p_t[a], 1e-300));
                if (y[4 + a] > 0.0) total -= y[4 + a] * std::log(std::max(p_s[a], 1e-300));
            } else {
                total += 0.5 * (p_t[a] - y[a]) * (p_t[a] - y[a]);
                total += 0.5 * (p_s[a] - y[4 + a]) * (p_s[a] - y[4 + a]);
            }
        }
    }
    return total / static_cast<double>(inputs.rows());
}

std::vector<double> mlp_gradient(const MlpNet& net, const Matrix& inputs, const Matrix& targets,
                                 MlpConfig::Loss loss) {
    const auto& weights = net.weights();
    const std::size_t layers = weights.size();
    std::vector<Matrix> grad_w;
    std::vector<std::vector<double>> grad_b;
    for (std::size_t l = 0; l < layers; ++l) {
        grad_w.emplace_back(weights[l].rows(), weights[l].cols());
        grad_b.emplace_back(weights[l].rows(), 0.0);
    }

    const double inv_n = 1.0 / static_cast<double>(inputs.rows());
    for (std::size_t i = 0; i < inputs.rows(); ++i) {
        const auto acts = net.activations(inputs.row(i));
        const auto& z = acts.back();
        const auto y = targets.row(i);

        std::array<double, 4> p_t{}, p_s{};
        softmax4(std::span<const double>{z.data(), 4}, p_t);
        softmax4(std::span<const double>{z.data() + 4, 4}, p_s);

        // delta at the linear output layer, through each softmax group
        std::vector<double> delta(kOutputDim);
        if (loss == MlpConfig::Loss::CrossEntropy) {
            for (int a = 0; a < 4; ++a) {
                delta[a] = p_t[a] - y[a];
                delta[4 + a] = p_s[a] - y[4 + a];
            }
        } else {
            for (int g = 0; g < 2; ++g) {
                const double* p = g == 0 ? p_t.data() : p_s.data();
                for (int k = 0; k < 4; ++k) {
                    double acc = 0.0;
                    for (int j = 0; j < 4; ++j) {
                        const double jac = p[j] * ((j == k ? 1.0 : 0.0) - p[k]);
                        acc += (p[j] - y[4 * g + j]) * jac;
                    }
                    delta[4 * g + k] = acc;
                }
            }
        }

        for (std::size_t l = layers; l-- > 0;) {
            const auto& a_in = acts[l];
            for (std::size_t r = 0; r < weights[l].rows(); ++r) {
                grad_b[l][r] += inv_n * delta[r];
                for (std::size_t c = 0; c < weights[l].cols(); ++c)
                    grad_w[l](r, c) += inv_n * delta[r] * a_in[c];
            }
            if (l == 0) break;
            std::vector<double> prev(weights[l].cols(), 0.0);
            for (std::size_t c = 0; c < weights[l].cols(); ++c) {
                double acc = 0.0;
                for (std::size_t r = 0; r < weights[l].rows(); ++r)
                    acc += weights[l](r, c) * delta[r];
                const double a = acts[l][c];  // logistic activation of layer l
                prev[c] = acc * a * (1.0 - a);
            }
            delta = std::move(prev);
        }
    }

    std::vector<double> flat;
    for (std::size_t l = 0; l < layers; ++l) {
        const auto span = grad_w[l].flat();
        flat.insert(flat.end(), span.begin(), span.end());
        flat.insert(flat.end(), grad_b[l].begin(), grad_b[l].end());
    }
    return flat;
}

TrainResult train_mlp(MlpNet& net, const Matrix& inputs, const Matrix& targets,
                      const MlpConfig& config) {
    if (inputs.rows() == 0) throw std::invalid_argument("train_mlp: need at least one sample");

    TrainResult result;
    std::vector<double> params = net.parameters();
    std::vector<double> velocity(params.size(), 0.0);
    std::vector<double> best = params;
    double best_loss = mlp_loss(net, inputs, targets, config.loss);
    result.loss_trace.push_back(best_loss);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const auto grad = mlp_gradient(net, inputs, targets, config.loss);
        for (std::size_t j = 0; j < params.size(); ++j) {
            velocity[j] = config.momentum * velocity[j] - config.learning_rate * grad[j];
            params[j] += velocity[j];
        }
        net.set_parameters(params);
        const double loss = mlp_loss(net, inputs, targets, config.loss);
        result.loss_trace.push_back(loss);
        if (loss < best_loss) {
            best_loss = loss;
            best = params;
        }
    }

    net.set_parameters(best);
    result.final_loss = best_loss;
    return result;
}

}  // namespace bundlechoice
