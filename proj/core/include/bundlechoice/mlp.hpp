#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "bundlechoice/matrix.hpp"

namespace bundlechoice {

/// Small fully connected network with logistic hidden layers and an output
/// layer of two softmax groups of four, used as the panel-LAD first stage.
struct MlpConfig {
    std::vector<int> hidden{3, 3, 3};
    double learning_rate = 0.3;
    double momentum = 0.9;
    int epochs = 2000;
    std::uint64_t seed = 1;
    enum class Loss { CrossEntropy, SquaredError };
    Loss loss = Loss::CrossEntropy;
};

class MlpNet {
public:
    MlpNet() = default;
    MlpNet(std::size_t input_dim, const std::vector<int>& hidden, std::uint64_t seed);

    std::size_t input_dim() const { return input_dim_; }

    /// Per-coordinate z-score constants applied before the first layer.
    void set_standardization(std::vector<double> mean, std::vector<double> std);

    /// Returns the two probability groups; each lies on the 4-simplex.
    std::pair<std::array<double, 4>, std::array<double, 4>> forward(
        std::span<const double> input) const;

    std::vector<double> parameters() const;
    void set_parameters(std::span<const double> flat);

    const std::vector<Matrix>& weights() const { return weights_; }
    const std::vector<std::vector<double>>& biases() const { return biases_; }

    /// Raw (pre-softmax) forward pass through the standardized input;
    /// exposed for the loss/gradient routines.
    std::vector<std::vector<double>> activations(std::span<const double> input) const;

private:
    std::size_t input_dim_ = 0;
    std::vector<Matrix> weights_;             // layer l: out x in
    std::vector<std::vector<double>> biases_;
    std::vector<double> mean_, std_;
};

/// Mean loss over the sample; targets hold two one-hot 4-blocks per row.
double mlp_loss(const MlpNet& net, const Matrix& inputs, const Matrix& targets,
                MlpConfig::Loss loss);

/// Analytic gradient of mlp_loss w.r.t. the flattened parameters.
std::vector<double> mlp_gradient(const MlpNet& net, const Matrix& inputs, const Matrix& targets,
                                 MlpConfig::Loss loss);

struct TrainResult {
    std::vector<double> loss_trace;  // loss at the start of each epoch
    double final_loss = 0.0;
};

/// Full-batch gradient descent with momentum. The returned net carries the
/// best (lowest-loss) parameters seen, so the final loss never exceeds the
/// initial one.
TrainResult train_mlp(MlpNet& net, const Matrix& inputs, const Matrix& targets,
                      const MlpConfig& config);

}  // namespace bundlechoice
