#include "qtrade/qnet.hpp"

#include <cmath>

#include "qtrade/errors.hpp"
#include "qtrade/rng.hpp"

namespace qtrade {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

VectorXd sigmoid(const VectorXd& z) {
    return (1.0 + (-z.array()).exp()).inverse().matrix();
}

VectorXd relu(const VectorXd& z) { return z.cwiseMax(0.0); }

// Gradient through ReLU: pass where the pre-activation was positive.
VectorXd relu_grad(const VectorXd& upstream, const VectorXd& pre) {
    return (pre.array() > 0.0).select(upstream, VectorXd::Zero(upstream.size()));
}

void check_shapes(const NetworkParams& p, const NetConfig& c) {
    const auto bad = [](const char* where) {
        throw DomainError(std::string("network shape mismatch at ") + where);
    };
    if (p.lstm1.wx.rows() != 4 * c.lstm1 ||
        p.lstm1.wx.cols() != c.market_features ||
        p.lstm1.wh.rows() != 4 * c.lstm1 || p.lstm1.wh.cols() != c.lstm1 ||
        p.lstm1.b.size() != 4 * c.lstm1)
        bad("lstm1");
    if (p.lstm2.wx.rows() != 4 * c.lstm2 || p.lstm2.wx.cols() != c.lstm1 ||
        p.lstm2.wh.rows() != 4 * c.lstm2 || p.lstm2.wh.cols() != c.lstm2 ||
        p.lstm2.b.size() != 4 * c.lstm2)
        bad("lstm2");
    if (p.pos_dense.w.rows() != c.pos_branch || p.pos_dense.w.cols() != 3 ||
        p.pos_dense.b.size() != c.pos_branch)
        bad("pos_dense");
    if (p.merge1.w.rows() != c.merge1 ||
        p.merge1.w.cols() != c.lstm2 + c.pos_branch ||
        p.merge1.b.size() != c.merge1)
        bad("merge1");
    if (p.merge2.w.rows() != c.merge2 || p.merge2.w.cols() != c.merge1 ||
        p.merge2.b.size() != c.merge2)
        bad("merge2");
    if (p.head.w.rows() != 3 || p.head.w.cols() != c.merge2 ||
        p.head.b.size() != 3)
        bad("head");
}

}  // namespace

std::vector<ParamRef> param_refs(NetworkParams& p) {
    std::vector<ParamRef> refs;
    const auto mat = [&](const char* name, MatrixXd& m) {
        refs.push_back({name, m.data(), m.size(), m.rows(), m.cols()});
    };
    const auto vec = [&](const char* name, VectorXd& v) {
        refs.push_back({name, v.data(), v.size(), v.size(), 1});
    };
    mat("lstm1.wx", p.lstm1.wx);
    mat("lstm1.wh", p.lstm1.wh);
    vec("lstm1.b", p.lstm1.b);
    mat("lstm2.wx", p.lstm2.wx);
    mat("lstm2.wh", p.lstm2.wh);
    vec("lstm2.b", p.lstm2.b);
    mat("pos_dense.w", p.pos_dense.w);
    vec("pos_dense.b", p.pos_dense.b);
    mat("merge1.w", p.merge1.w);
    vec("merge1.b", p.merge1.b);
    mat("merge2.w", p.merge2.w);
    vec("merge2.b", p.merge2.b);
    mat("head.w", p.head.w);
    vec("head.b", p.head.b);
    return refs;
}

NetworkParams zeros_like(const NetworkParams& like) {
    NetworkParams z;
    const auto zl = [](const LstmParams& l) {
        return LstmParams{MatrixXd::Zero(l.wx.rows(), l.wx.cols()),
                          MatrixXd::Zero(l.wh.rows(), l.wh.cols()),
                          VectorXd::Zero(l.b.size())};
    };
    const auto zd = [](const DenseParams& d) {
        return DenseParams{MatrixXd::Zero(d.w.rows(), d.w.cols()),
                           VectorXd::Zero(d.b.size())};
    };
    z.lstm1 = zl(like.lstm1);
    z.lstm2 = zl(like.lstm2);
    z.pos_dense = zd(like.pos_dense);
    z.merge1 = zd(like.merge1);
    z.merge2 = zd(like.merge2);
    z.head = zd(like.head);
    return z;
}

NetworkParams init_params(const NetConfig& c, std::uint64_t seed) {
    NetworkParams p;
    p.lstm1 = {MatrixXd::Zero(4 * c.lstm1, c.market_features),
               MatrixXd::Zero(4 * c.lstm1, c.lstm1),
               VectorXd::Zero(4 * c.lstm1)};
    p.lstm2 = {MatrixXd::Zero(4 * c.lstm2, c.lstm1),
               MatrixXd::Zero(4 * c.lstm2, c.lstm2),
               VectorXd::Zero(4 * c.lstm2)};
    p.pos_dense = {MatrixXd::Zero(c.pos_branch, 3), VectorXd::Zero(c.pos_branch)};
    p.merge1 = {MatrixXd::Zero(c.merge1, c.lstm2 + c.pos_branch),
                VectorXd::Zero(c.merge1)};
    p.merge2 = {MatrixXd::Zero(c.merge2, c.merge1), VectorXd::Zero(c.merge2)};
    p.head = {MatrixXd::Zero(3, c.merge2), VectorXd::Zero(3)};

    Rng rng(seed);
    for (ParamRef& ref : param_refs(p)) {
        if (ref.cols == 1) continue;  // biases stay zero
        const double bound = 1.0 / std::sqrt(static_cast<double>(ref.cols));
        for (std::ptrdiff_t i = 0; i < ref.size; ++i)
            ref.data[i] = rng.uniform(-bound, bound);
    }
    // Forget-gate bias at 1.0 keeps early memory open.
    p.lstm1.b.segment(c.lstm1, c.lstm1).setConstant(1.0);
    p.lstm2.b.segment(c.lstm2, c.lstm2).setConstant(1.0);
    return p;
}

AdamState AdamState::init(const NetworkParams& like) {
    AdamState s;
    s.first_moment = zeros_like(like);
    s.second_moment = zeros_like(like);
    return s;
}

void adam_step(NetworkParams& params, const NetworkParams& grads,
               AdamState& adam, double lr) {
    auto p = param_refs(params);
    auto g = param_refs(const_cast<NetworkParams&>(grads));
    auto m = param_refs(adam.first_moment);
    auto v = param_refs(adam.second_moment);

    adam.step_count += 1;
    const double t = static_cast<double>(adam.step_count);
    const double bc1 = 1.0 - std::pow(adam.beta1, t);
    const double bc2 = 1.0 - std::pow(adam.beta2, t);

    for (std::size_t k = 0; k < p.size(); ++k) {
        if (p[k].size != g[k].size)
            throw DomainError("adam_step: gradient shape mismatch at " +
                              p[k].name);
        for (std::ptrdiff_t i = 0; i < p[k].size; ++i) {
            const double grad = g[k].data[i];
            double& mi = m[k].data[i];
            double& vi = v[k].data[i];
            mi = adam.beta1 * mi + (1.0 - adam.beta1) * grad;
            vi = adam.beta2 * vi + (1.0 - adam.beta2) * grad * grad;
            const double m_hat = mi / bc1;
            const double v_hat = vi / bc2;
            p[k].data[i] -= lr * m_hat / (std::sqrt(v_hat) + adam.eps);
        }
    }
}

void soft_update(NetworkParams& target, const NetworkParams& online,
                 double tau) {
    if (tau < 0.0 || tau > 1.0)
        throw DomainError("soft_update tau must lie in [0, 1]");
    auto t = param_refs(target);
    auto o = param_refs(const_cast<NetworkParams&>(online));
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (t[k].size != o[k].size)
            throw DomainError("soft_update: shape mismatch at " + t[k].name);
        for (std::ptrdiff_t i = 0; i < t[k].size; ++i)
            t[k].data[i] = (1.0 - tau) * t[k].data[i] + tau * o[k].data[i];
    }
}

void QNetwork::LstmTrace::clear() {
    x.clear();
    in.clear();
    forget.clear();
    cand.clear();
    out.clear();
    cell.clear();
    tcell.clear();
    h.clear();
}

// LstmTrace is private; the recurrent helpers live behind this friend.
struct QNetworkDetail {
    static void lstm_forward(const LstmParams& p,
                             const std::vector<VectorXd>& xs,
                             QNetwork::LstmTrace& tr) {
        const auto H = p.wh.cols();
        tr.clear();
        VectorXd h = VectorXd::Zero(H);
        VectorXd c = VectorXd::Zero(H);
        for (const VectorXd& x : xs) {
            const VectorXd z = p.wx * x + p.wh * h + p.b;
            const VectorXd gi = sigmoid(z.segment(0, H));
            const VectorXd gf = sigmoid(z.segment(H, H));
            const VectorXd gg = z.segment(2 * H, H).array().tanh().matrix();
            const VectorXd go = sigmoid(z.segment(3 * H, H));
            c = gf.cwiseProduct(c) + gi.cwiseProduct(gg);
            const VectorXd tc = c.array().tanh().matrix();
            h = go.cwiseProduct(tc);
            tr.x.push_back(x);
            tr.in.push_back(gi);
            tr.forget.push_back(gf);
            tr.cand.push_back(gg);
            tr.out.push_back(go);
            tr.cell.push_back(c);
            tr.tcell.push_back(tc);
            tr.h.push_back(h);
        }
    }

    // Backpropagation through time. dh_above[t] is the gradient flowing
    // into h_t from the layer's consumer; returns the gradients w.r.t. the
    // inputs x_t and accumulates parameter gradients into `grad`.
    static std::vector<VectorXd> lstm_backward(
        const LstmParams& p, const QNetwork::LstmTrace& tr,
        const std::vector<VectorXd>& dh_above, LstmParams& grad) {
        const auto H = p.wh.cols();
        const auto steps = static_cast<std::ptrdiff_t>(tr.h.size());
        std::vector<VectorXd> dx(static_cast<std::size_t>(steps));
        VectorXd dh_next = VectorXd::Zero(H);
        VectorXd dc_next = VectorXd::Zero(H);
        const VectorXd ones = VectorXd::Ones(H);

        for (std::ptrdiff_t t = steps - 1; t >= 0; --t) {
            const auto ti = static_cast<std::size_t>(t);
            const VectorXd dh = dh_above[ti] + dh_next;
            const VectorXd& go = tr.out[ti];
            const VectorXd& tc = tr.tcell[ti];
            const VectorXd dzo = dh.cwiseProduct(tc)
                                     .cwiseProduct(go)
                                     .cwiseProduct(ones - go);
            const VectorXd dc =
                dh.cwiseProduct(go).cwiseProduct(
                    (ones.array() - tc.array().square()).matrix()) +
                dc_next;
            const VectorXd c_prev = t > 0 ? tr.cell[ti - 1] : VectorXd::Zero(H);
            const VectorXd& gf = tr.forget[ti];
            const VectorXd& gi = tr.in[ti];
            const VectorXd& gg = tr.cand[ti];
            const VectorXd dzf =
                dc.cwiseProduct(c_prev).cwiseProduct(gf).cwiseProduct(ones - gf);
            const VectorXd dzi =
                dc.cwiseProduct(gg).cwiseProduct(gi).cwiseProduct(ones - gi);
            const VectorXd dzg = dc.cwiseProduct(gi).cwiseProduct(
                (ones.array() - gg.array().square()).matrix());

            VectorXd dz(4 * H);
            dz << dzi, dzf, dzg, dzo;

            const VectorXd h_prev = t > 0 ? tr.h[ti - 1] : VectorXd::Zero(H);
            grad.wx.noalias() += dz * tr.x[ti].transpose();
            grad.wh.noalias() += dz * h_prev.transpose();
            grad.b += dz;

            dx[ti] = p.wx.transpose() * dz;
            dh_next = p.wh.transpose() * dz;
            dc_next = dc.cwiseProduct(gf);
        }
        return dx;
    }
};

QValues QNetwork::forward(const NetworkParams& params,
                          const FeatureWindow& market,
                          const Eigen::Vector3d& position) {
    check_shapes(params, config_);
    const std::size_t W = market.window();
    if (W == 0) throw DomainError("forward needs a non-empty window");

    std::vector<VectorXd> xs(W);
    for (std::size_t t = 0; t < W; ++t) {
        const auto& row = market.row(t);
        xs[t] = Eigen::Map<const VectorXd>(row.data(), row.size());
    }

    QNetworkDetail::lstm_forward(params.lstm1, xs, trace1_);
    QNetworkDetail::lstm_forward(params.lstm2, trace1_.h, trace2_);

    pos_in_ = position;
    pos_pre_ = params.pos_dense.w * pos_in_ + params.pos_dense.b;
    pos_out_ = relu(pos_pre_);

    merged_.resize(config_.lstm2 + config_.pos_branch);
    merged_ << trace2_.h.back(), pos_out_;

    m1_pre_ = params.merge1.w * merged_ + params.merge1.b;
    m1_out_ = relu(m1_pre_);
    m2_pre_ = params.merge2.w * m1_out_ + params.merge2.b;
    m2_out_ = relu(m2_pre_);
    head_pre_ = params.head.w * m2_out_ + params.head.b;

    if (config_.head == HeadActivation::softmax) {
        const double zmax = head_pre_.maxCoeff();
        const Eigen::Vector3d e = (head_pre_.array() - zmax).exp();
        const Eigen::Vector3d soft = e / e.sum();
        out_ = {soft[0], soft[1], soft[2]};
    } else {
        out_ = {head_pre_[0], head_pre_[1], head_pre_[2]};
    }
    has_cache_ = true;
    return out_;
}

NetworkParams QNetwork::backward(const NetworkParams& params,
                                 const QValues& output_grad) {
    if (!has_cache_)
        throw UsageError("backward() requires a prior forward() pass");
    check_shapes(params, config_);

    NetworkParams grads = zeros_like(params);
    const Eigen::Vector3d dout(output_grad[0], output_grad[1], output_grad[2]);

    Eigen::Vector3d dhead_pre;
    if (config_.head == HeadActivation::softmax) {
        const Eigen::Vector3d probs(out_[0], out_[1], out_[2]);
        const double mix = dout.dot(probs);
        dhead_pre = probs.cwiseProduct(dout - Eigen::Vector3d::Constant(mix));
    } else {
        dhead_pre = dout;
    }

    grads.head.w = dhead_pre * m2_out_.transpose();
    grads.head.b = dhead_pre;

    const VectorXd dm2_pre =
        relu_grad(params.head.w.transpose() * dhead_pre, m2_pre_);
    grads.merge2.w = dm2_pre * m1_out_.transpose();
    grads.merge2.b = dm2_pre;

    const VectorXd dm1_pre =
        relu_grad(params.merge2.w.transpose() * dm2_pre, m1_pre_);
    grads.merge1.w = dm1_pre * merged_.transpose();
    grads.merge1.b = dm1_pre;

    const VectorXd dmerged = params.merge1.w.transpose() * dm1_pre;
    const VectorXd dh2_last = dmerged.head(config_.lstm2);
    const VectorXd dpos_pre =
        relu_grad(dmerged.tail(config_.pos_branch), pos_pre_);
    grads.pos_dense.w = dpos_pre * pos_in_.transpose();
    grads.pos_dense.b = dpos_pre;

    // LSTM2 only feeds its final hidden state forward.
    const std::size_t W = trace2_.h.size();
    std::vector<VectorXd> dh2_above(W, VectorXd::Zero(config_.lstm2));
    dh2_above[W - 1] = dh2_last;
    const std::vector<VectorXd> dh1_above = QNetworkDetail::lstm_backward(
        params.lstm2, trace2_, dh2_above, grads.lstm2);
    QNetworkDetail::lstm_backward(params.lstm1, trace1_, dh1_above,
                                  grads.lstm1);
    return grads;
}

}  // namespace qtrade
