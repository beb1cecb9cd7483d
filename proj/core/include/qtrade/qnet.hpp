#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qtrade/features.hpp"

namespace qtrade {

/// Output layer activation. Linear is the default: bootstrap targets
/// r + gamma * max Q are unbounded, which a softmax cannot represent. The
/// softmax head is kept as an option and exercised in tests.
enum class HeadActivation { linear, softmax };

struct NetConfig {
    int market_features = static_cast<int>(kFeatureCount);
    int lstm1 = 32;
    int lstm2 = 16;
    int pos_branch = 8;
    int merge1 = 32;
    int merge2 = 16;
    HeadActivation head = HeadActivation::linear;
};

/// One LSTM layer. Gate blocks are stacked row-wise in the fixed order
/// input, forget, candidate, output; wx is (4H x in), wh is (4H x H).
struct LstmParams {
    Eigen::MatrixXd wx;
    Eigen::MatrixXd wh;
    Eigen::VectorXd b;
};

struct DenseParams {
    Eigen::MatrixXd w;
    Eigen::VectorXd b;
};

/// All weights of the network (used for the online net, the target net,
/// gradients and Adam moments alike — they share shapes).
struct NetworkParams {
    LstmParams lstm1;
    LstmParams lstm2;
    DenseParams pos_dense;
    DenseParams merge1;
    DenseParams merge2;
    DenseParams head;
};

using QValues = std::array<double, 3>;

/// Flat view over one named parameter array, in the canonical traversal
/// order used by initialization, optimization and checkpoints.
struct ParamRef {
    std::string name;
    double* data;
    std::ptrdiff_t size;
    std::ptrdiff_t rows;
    std::ptrdiff_t cols;
};
std::vector<ParamRef> param_refs(NetworkParams& params);

NetworkParams zeros_like(const NetworkParams& like);

/// Shapes for `config`, weights uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)]
/// per matrix, biases zero except the LSTM forget-gate blocks at 1.0.
/// Deterministic in `seed`.
NetworkParams init_params(const NetConfig& config, std::uint64_t seed);

struct AdamState {
    NetworkParams first_moment;
    NetworkParams second_moment;
    long step_count = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState init(const NetworkParams& like);
};

/// One Adam update with bias correction: p -= lr * m_hat / (sqrt(v_hat) + eps).
void adam_step(NetworkParams& params, const NetworkParams& grads,
               AdamState& adam, double lr);

/// target <- (1 - tau) * target + tau * online, elementwise.
/// Throws DomainError if tau is outside [0, 1] or shapes differ.
void soft_update(NetworkParams& target, const NetworkParams& online, double tau);

/// Forward/backward evaluation context. forward() caches all intermediate
/// activations; backward() consumes the cache to produce exact gradients of
/// <output_grad, forward(...)> w.r.t. every parameter, backpropagating
/// through time over the whole window. One context is single-threaded;
/// independent contexts may share read-only params.
class QNetwork {
public:
    explicit QNetwork(NetConfig config) : config_(config) {}

    const NetConfig& config() const { return config_; }

    /// Market rows run through LSTM1 (full sequence) then LSTM2 (final
    /// hidden state); the normalized position runs through its dense+ReLU
    /// branch; the concatenation passes two dense+ReLU layers and the head.
    QValues forward(const NetworkParams& params, const FeatureWindow& market,
                    const Eigen::Vector3d& position);

    /// Gradient of <output_grad, forward(...)>. Throws UsageError if no
    /// forward pass has been cached.
    NetworkParams backward(const NetworkParams& params,
                           const QValues& output_grad);

private:
    friend struct QNetworkDetail;

    struct LstmTrace {
        std::vector<Eigen::VectorXd> x, in, forget, cand, out, cell, tcell, h;
        void clear();
    };

    NetConfig config_;
    bool has_cache_ = false;
    LstmTrace trace1_, trace2_;
    Eigen::Vector3d pos_in_;
    Eigen::VectorXd pos_pre_, pos_out_;
    Eigen::VectorXd merged_;
    Eigen::VectorXd m1_pre_, m1_out_, m2_pre_, m2_out_;
    Eigen::VectorXd head_pre_;
    QValues out_{};
};

}  // namespace qtrade
