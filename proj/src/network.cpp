#include "tabext/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "tabext/error.hpp"
#include "tabext/metrics.hpp"
#include "tabext/random.hpp"

namespace tabext {

void NetworkConfig::validate() const
{
    auto fail = [](const std::string& msg) { throw Error(ErrorKind::Config, msg); };
    if (input_dim < 1) {
        fail("input_dim must be positive");
    }
    if (hidden_dims.size() != kHiddenLayers) {
        fail("the network has exactly " + std::to_string(kHiddenLayers) + " hidden layers");
    }
    if (std::any_of(hidden_dims.begin(), hidden_dims.end(), [](int d) { return d < 1; })) {
        fail("hidden layer widths must be positive");
    }
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        fail("learning_rate must be positive");
    }
    if (batch_size < 1) {
        fail("batch_size must be positive");
    }
    if (max_epochs < 1) {
        fail("max_epochs must be positive");
    }
    if (early_stop_patience < 1) {
        fail("early_stop_patience must be positive");
    }
    if (!(threshold > 0.0 && threshold < 1.0)) {
        fail("threshold must lie in (0, 1)");
    }
}

std::vector<int> NetworkConfig::layer_dims() const
{
    std::vector<int> dims{input_dim};
    dims.insert(dims.end(), hidden_dims.begin(), hidden_dims.end());
    dims.push_back(1);
    return dims;
}

nlohmann::json to_json(const NetworkConfig& c)
{
    return {
        {"input_dim", c.input_dim},
        {"hidden_dims", c.hidden_dims},
        {"learning_rate", c.learning_rate},
        {"batch_size", c.batch_size},
        {"max_epochs", c.max_epochs},
        {"early_stop_patience", c.early_stop_patience},
        {"seed", c.seed},
        {"threshold", c.threshold},
    };
}

NetworkConfig network_config_from_json(const nlohmann::json& j, NetworkConfig c)
{
    try {
        c.input_dim = j.value("input_dim", c.input_dim);
        c.hidden_dims = j.value("hidden_dims", c.hidden_dims);
        c.learning_rate = j.value("learning_rate", c.learning_rate);
        c.batch_size = j.value("batch_size", c.batch_size);
        c.max_epochs = j.value("max_epochs", c.max_epochs);
        c.early_stop_patience = j.value("early_stop_patience", c.early_stop_patience);
        c.seed = j.value("seed", c.seed);
        c.threshold = j.value("threshold", c.threshold);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Config, std::string("network config: ") + e.what());
    }
    return c;
}

Mlp::Mlp(std::vector<int> dims)
    : dims_(std::move(dims))
{
    if (dims_.size() != kLayerCount) {
        throw Error(ErrorKind::DimensionMismatch,
            "expected " + std::to_string(kLayerCount) + " layer dimensions, got " + std::to_string(dims_.size()));
    }
    if (std::any_of(dims_.begin(), dims_.end(), [](int d) { return d < 1; })) {
        throw Error(ErrorKind::DimensionMismatch, "layer dimensions must be positive");
    }
    if (dims_.back() != 1) {
        throw Error(ErrorKind::DimensionMismatch, "output layer must have width 1");
    }
    for (std::size_t i = 1; i < dims_.size(); ++i) {
        weights_.push_back(Eigen::MatrixXd::Zero(dims_[i], dims_[i - 1]));
        biases_.push_back(Eigen::VectorXd::Zero(dims_[i]));
    }
}

Mlp Mlp::initialize(const std::vector<int>& dims, std::uint64_t seed)
{
    Mlp model(dims);
    Rng rng(seed);
    for (std::size_t layer = 0; layer < model.layers(); ++layer) {
        const double fan_in = dims[layer];
        const double fan_out = dims[layer + 1];
        const bool output = layer + 1 == model.layers();
        const double limit = output ? std::sqrt(6.0 / (fan_in + fan_out)) : std::sqrt(6.0 / fan_in);
        auto& w = model.weights_[layer];
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            for (Eigen::Index c = 0; c < w.cols(); ++c) {
                w(r, c) = rng.uniform(-limit, limit);
            }
        }
    }
    return model;
}

bool Mlp::operator==(const Mlp& other) const
{
    if (dims_ != other.dims_) {
        return false;
    }
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        if (weights_[i] != other.weights_[i] || biases_[i] != other.biases_[i]) {
            return false;
        }
    }
    return true;
}

double sigmoid(double z)
{
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

namespace {

double output_probability(double z)
{
    return std::clamp(sigmoid(z), kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
}

} // namespace

double Mlp::forward(std::span<const double> x) const
{
    if (static_cast<int>(x.size()) != input_dim()) {
        throw Error(ErrorKind::DimensionMismatch,
            "input of length " + std::to_string(x.size()) + " for a network expecting " + std::to_string(input_dim()));
    }
    Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
    for (std::size_t layer = 0; layer < layers(); ++layer) {
        Eigen::VectorXd z = weights_[layer] * a + biases_[layer];
        if (layer + 1 < layers()) {
            a = z.cwiseMax(0.0);
        } else {
            return output_probability(z(0));
        }
    }
    return 0.5; // unreachable: layers() >= 1
}

Eigen::VectorXd Mlp::forward_batch(const RowMatrix& x) const
{
    if (x.cols() != input_dim()) {
        throw Error(ErrorKind::DimensionMismatch,
            "batch with " + std::to_string(x.cols()) + " columns for a network expecting " + std::to_string(input_dim()));
    }
    Eigen::MatrixXd a = x;
    for (std::size_t layer = 0; layer < layers(); ++layer) {
        Eigen::MatrixXd z = a * weights_[layer].transpose();
        z.rowwise() += biases_[layer].transpose();
        if (layer + 1 < layers()) {
            a = z.cwiseMax(0.0);
        } else {
            a = std::move(z);
        }
    }
    Eigen::VectorXd p(a.rows());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        p(i) = output_probability(a(i, 0));
    }
    return p;
}

double bce_loss(double p, int y)
{
    const double q = std::clamp(p, kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
    return y == 1 ? -std::log(q) : -std::log(1.0 - q);
}

double mean_bce_loss(std::span<const double> p, std::span<const int> y)
{
    if (p.size() != y.size()) {
        throw Error(ErrorKind::LengthMismatch, "probabilities and labels differ in length");
    }
    if (p.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        sum += bce_loss(p[i], y[i]);
    }
    return sum / static_cast<double>(p.size());
}

Gradients backward(const Mlp& model, const RowMatrix& x, std::span<const int> y)
{
    const Eigen::Index n = x.rows();
    if (n == 0) {
        throw Error(ErrorKind::EmptyDataset, "backward pass on an empty batch");
    }
    if (x.cols() != model.input_dim()) {
        throw Error(ErrorKind::DimensionMismatch, "batch width does not match the network input");
    }
    if (static_cast<Eigen::Index>(y.size()) != n) {
        throw Error(ErrorKind::DimensionMismatch, "batch and label counts differ");
    }
    const std::size_t L = model.layers();

    // activations[0] is the input, activations[l + 1] the output of layer l
    std::vector<Eigen::MatrixXd> activations;
    std::vector<Eigen::MatrixXd> pre;
    activations.reserve(L + 1);
    pre.reserve(L);
    activations.emplace_back(x);
    for (std::size_t layer = 0; layer < L; ++layer) {
        Eigen::MatrixXd z = activations.back() * model.weights(layer).transpose();
        z.rowwise() += model.bias(layer).transpose();
        pre.push_back(z);
        if (layer + 1 < L) {
            activations.emplace_back(z.cwiseMax(0.0));
        } else {
            activations.emplace_back(z.unaryExpr([](double v) { return output_probability(v); }));
        }
    }

    Gradients g;
    g.weights.resize(L);
    g.biases.resize(L);
    const auto& p = activations.back();
    Eigen::MatrixXd delta(n, 1);
    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const int yi = y[static_cast<std::size_t>(i)];
        loss += bce_loss(p(i, 0), yi);
        delta(i, 0) = (p(i, 0) - yi) / static_cast<double>(n);
    }
    g.loss = loss / static_cast<double>(n);

    for (std::size_t layer = L; layer-- > 0;) {
        g.weights[layer] = delta.transpose() * activations[layer];
        g.biases[layer] = delta.colwise().sum().transpose();
        if (layer > 0) {
            Eigen::MatrixXd upstream = delta * model.weights(layer);
            delta = upstream.cwiseProduct(
                pre[layer - 1].unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; }));
        }
    }
    return g;
}

AdamOptimizer::AdamOptimizer(const Mlp& model, double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate)
    , beta1_(beta1)
    , beta2_(beta2)
    , epsilon_(epsilon)
{
    for (std::size_t layer = 0; layer < model.layers(); ++layer) {
        const auto& w = model.weights(layer);
        m_w_.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
        v_w_.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
        m_b_.push_back(Eigen::VectorXd::Zero(model.bias(layer).size()));
        v_b_.push_back(Eigen::VectorXd::Zero(model.bias(layer).size()));
    }
}

void AdamOptimizer::step(Mlp& model, const Gradients& grads)
{
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
        m = beta1_ * m + (1.0 - beta1_) * grad;
        v = beta2_ * v + (1.0 - beta2_) * grad.cwiseProduct(grad);
        param.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + epsilon_);
    };
    for (std::size_t layer = 0; layer < model.layers(); ++layer) {
        update(model.weights(layer), grads.weights[layer], m_w_[layer], v_w_[layer]);
        update(model.bias(layer), grads.biases[layer], m_b_[layer], v_b_[layer]);
    }
}

RowMatrix to_matrix(std::span<const EncodedExample> examples)
{
    if (examples.empty()) {
        return RowMatrix(0, 0);
    }
    const auto dim = static_cast<Eigen::Index>(examples.front().features.size());
    RowMatrix x(static_cast<Eigen::Index>(examples.size()), dim);
    for (std::size_t i = 0; i < examples.size(); ++i) {
        if (static_cast<Eigen::Index>(examples[i].features.size()) != dim) {
            throw Error(ErrorKind::DimensionMismatch, "examples with differing feature dimension");
        }
        x.row(static_cast<Eigen::Index>(i)) =
            Eigen::Map<const Eigen::RowVectorXd>(examples[i].features.data(), dim);
    }
    return x;
}

namespace {

std::vector<int> labels_of(std::span<const EncodedExample> examples)
{
    std::vector<int> y;
    y.reserve(examples.size());
    for (const auto& ex : examples) {
        if (ex.label != 0 && ex.label != 1) {
            throw Error(ErrorKind::InvalidLabel,
                "example " + ex.doc_id + "#" + std::to_string(ex.token_index) + " has no 0/1 label");
        }
        y.push_back(ex.label);
    }
    return y;
}

struct Evaluation {
    double loss = 0.0;
    double f1 = 0.0;
};

Evaluation evaluate(const Mlp& model, const RowMatrix& x, const std::vector<int>& y, double threshold)
{
    const Eigen::VectorXd p = model.forward_batch(x);
    std::vector<int> predicted(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        predicted[i] = decide(p(static_cast<Eigen::Index>(i)), threshold);
    }
    const auto report = compute_metrics(predicted, y);
    return {mean_bce_loss(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())), y),
        report.classes[1].f1};
}

} // namespace

TrainResult train(std::span<const EncodedExample> train_set, std::span<const EncodedExample> validation_set,
    const NetworkConfig& config)
{
    config.validate();
    if (train_set.empty()) {
        throw Error(ErrorKind::EmptyDataset, "training set is empty");
    }
    const RowMatrix x_train = to_matrix(train_set);
    if (x_train.cols() != config.input_dim) {
        throw Error(ErrorKind::DimensionMismatch,
            "training examples have " + std::to_string(x_train.cols()) + " features, config expects "
                + std::to_string(config.input_dim));
    }
    const std::vector<int> y_train = labels_of(train_set);
    const bool have_validation = !validation_set.empty();
    const RowMatrix x_val = have_validation ? to_matrix(validation_set) : RowMatrix{};
    const std::vector<int> y_val = have_validation ? labels_of(validation_set) : std::vector<int>{};

    TrainResult result{Mlp::initialize(config.layer_dims(), derive_seed(config.seed, 0)), {}, 0, -1.0, 0};
    Mlp model = result.model;
    AdamOptimizer adam(model, config.learning_rate);
    Rng shuffler(derive_seed(config.seed, 1));

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto batch = static_cast<std::size_t>(config.batch_size);
    int since_best = 0;

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        shuffler.shuffle(order);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t end = std::min(order.size(), start + batch);
            RowMatrix xb(static_cast<Eigen::Index>(end - start), x_train.cols());
            std::vector<int> yb(end - start);
            for (std::size_t k = start; k < end; ++k) {
                xb.row(static_cast<Eigen::Index>(k - start)) = x_train.row(static_cast<Eigen::Index>(order[k]));
                yb[k - start] = y_train[order[k]];
            }
            const Gradients grads = backward(model, xb, yb);
            if (!std::isfinite(grads.loss)) {
                throw Error(ErrorKind::DivergedLoss, "non-finite loss in epoch " + std::to_string(epoch));
            }
            loss_sum += grads.loss * static_cast<double>(end - start);
            adam.step(model, grads);
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = loss_sum / static_cast<double>(order.size());
        const auto eval = have_validation ? evaluate(model, x_val, y_val, config.threshold)
                                          : evaluate(model, x_train, y_train, config.threshold);
        stats.val_loss = eval.loss;
        stats.val_f1 = eval.f1;
        if (!std::isfinite(stats.train_loss) || !std::isfinite(stats.val_loss)) {
            throw Error(ErrorKind::DivergedLoss, "non-finite loss in epoch " + std::to_string(epoch));
        }
        result.history.push_back(stats);
        result.epochs_run = epoch;

        if (stats.val_f1 > result.best_val_f1) {
            result.best_val_f1 = stats.val_f1;
            result.best_epoch = epoch;
            result.model = model;
            since_best = 0;
        } else if (++since_best >= config.early_stop_patience) {
            break;
        }
    }
    return result;
}

int decide(double probability, double threshold)
{
    return probability >= threshold ? 1 : 0;
}

std::vector<Prediction> predict(const Mlp& model, std::span<const EncodedExample> examples, double threshold)
{
    std::vector<Prediction> out;
    if (examples.empty()) {
        return out;
    }
    const Eigen::VectorXd p = model.forward_batch(to_matrix(examples));
    out.reserve(examples.size());
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        out.push_back({p(i), decide(p(i), threshold)});
    }
    return out;
}

void write_history_csv(std::ostream& out, std::span<const EpochStats> history)
{
    out << "epoch,train_loss,val_loss,val_f1\n";
    for (const auto& s : history) {
        out << s.epoch << ',' << nlohmann::json(s.train_loss).dump() << ',' << nlohmann::json(s.val_loss).dump() << ','
            << nlohmann::json(s.val_f1).dump() << '\n';
    }
}

} // namespace tabext
