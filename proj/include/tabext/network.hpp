#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "tabext/dataset.hpp"

namespace tabext {

/// Input layer, six hidden layers, one sigmoid output unit.
inline constexpr std::size_t kHiddenLayers = 6;
inline constexpr std::size_t kLayerCount = kHiddenLayers + 2;

/// Probabilities are clipped to [kProbabilityEpsilon, 1 - kProbabilityEpsilon] inside the loss.
inline constexpr double kProbabilityEpsilon = 1e-7;

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct NetworkConfig {
    int input_dim = static_cast<int>(kEncodedDim);
    std::vector<int> hidden_dims{256, 128, 64, 32, 16, 8};
    double learning_rate = 1e-4;
    int batch_size = 256;
    int max_epochs = 200;
    int early_stop_patience = 10;
    std::uint64_t seed = 1;
    double threshold = 0.5;

    /// Throws Config on an invalid configuration.
    void validate() const;

    /// input_dim, hidden_dims..., 1
    std::vector<int> layer_dims() const;
};

nlohmann::json to_json(const NetworkConfig& config);
NetworkConfig network_config_from_json(const nlohmann::json& j, NetworkConfig defaults = {});

/// Feed-forward network: relu on every hidden layer, sigmoid on the output.
/// Layer i maps dims[i-1] inputs to dims[i] outputs with a dims[i] x dims[i-1]
/// weight matrix.
class Mlp {
public:
    /// All weights and biases zero. Throws DimensionMismatch unless `dims`
    /// has kLayerCount positive entries ending in 1.
    explicit Mlp(std::vector<int> dims);

    /// He-uniform hidden layers, Xavier-uniform output layer, zero biases.
    static Mlp initialize(const std::vector<int>& dims, std::uint64_t seed);

    const std::vector<int>& dims() const { return dims_; }
    int input_dim() const { return dims_.front(); }

    /// Number of weight layers (kLayerCount - 1).
    std::size_t layers() const { return weights_.size(); }

    Eigen::MatrixXd& weights(std::size_t layer) { return weights_[layer]; }
    const Eigen::MatrixXd& weights(std::size_t layer) const { return weights_[layer]; }
    Eigen::VectorXd& bias(std::size_t layer) { return biases_[layer]; }
    const Eigen::VectorXd& bias(std::size_t layer) const { return biases_[layer]; }

    double forward(std::span<const double> x) const;

    /// One probability per row of `x`.
    Eigen::VectorXd forward_batch(const RowMatrix& x) const;

    bool operator==(const Mlp& other) const;

private:
    std::vector<int> dims_;
    std::vector<Eigen::MatrixXd> weights_;
    std::vector<Eigen::VectorXd> biases_;
};

double sigmoid(double z);

/// Binary cross-entropy of one prediction.
double bce_loss(double p, int y);

/// Mean binary cross-entropy.
double mean_bce_loss(std::span<const double> p, std::span<const int> y);

struct Gradients {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
    double loss = 0.0; // mean loss of the batch
};

/// Gradients of the mean loss over the batch (rows of x).
Gradients backward(const Mlp& model, const RowMatrix& x, std::span<const int> y);

class AdamOptimizer {
public:
    explicit AdamOptimizer(const Mlp& model, double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
        double epsilon = 1e-8);

    void step(Mlp& model, const Gradients& grads);

private:
    double lr_;
    double beta1_;
    double beta2_;
    double epsilon_;
    long long t_ = 0;
    std::vector<Eigen::MatrixXd> m_w_, v_w_;
    std::vector<Eigen::VectorXd> m_b_, v_b_;
};

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_f1 = 0.0;
};

struct TrainResult {
    Mlp model;
    std::vector<EpochStats> history;
    int best_epoch = 0;
    double best_val_f1 = 0.0;
    int epochs_run = 0;
};

/// Mini-batch Adam on normalized examples. Keeps the weights of the epoch
/// with the best validation F1 and stops after `early_stop_patience` epochs
/// without improvement. With an empty validation set the training F1 is
/// monitored instead.
TrainResult train(std::span<const EncodedExample> train_set, std::span<const EncodedExample> validation_set,
    const NetworkConfig& config);

/// Rows of the examples' feature vectors.
RowMatrix to_matrix(std::span<const EncodedExample> examples);

struct Prediction {
    double probability = 0.0;
    int label = 0;
};

/// label = 1 iff probability >= threshold.
int decide(double probability, double threshold);

std::vector<Prediction> predict(const Mlp& model, std::span<const EncodedExample> examples, double threshold);

void write_history_csv(std::ostream& out, std::span<const EpochStats> history);

} // namespace tabext
