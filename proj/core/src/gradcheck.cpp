#include "qtrade/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "qtrade/rng.hpp"

namespace qtrade {

namespace {

// Relative error with a small absolute floor so near-zero components are
// compared absolutely instead of amplifying finite-difference noise.
double rel_error(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

FeatureWindow random_window(std::size_t w, Rng& rng) {
    std::vector<std::array<double, kFeatureCount>> rows(w);
    for (auto& row : rows)
        for (double& v : row) v = rng.uniform(0.1, 1.0);
    auto series =
        std::make_shared<FeatureSeries>(FeatureSeries::from_rows(std::move(rows)));
    return build_feature_window(series, w - 1, w);
}

}  // namespace

GradCheckResult run_gradient_check(const GradCheckConfig& config) {
    GradCheckResult result;

    std::vector<HeadActivation> heads = {HeadActivation::linear};
    if (config.check_softmax_head) heads.push_back(HeadActivation::softmax);

    for (const std::uint64_t seed : config.seeds) {
        for (const std::size_t w : config.windows) {
            for (const HeadActivation head : heads) {
                NetConfig dims = config.dims;
                dims.head = head;

                Rng rng(seed * 7919 + w);
                NetworkParams params = init_params(dims, seed);
                const FeatureWindow market = random_window(w, rng);
                const Eigen::Vector3d position(rng.uniform(), rng.uniform(),
                                               rng.uniform(-1.0, 1.0));
                QValues out_grad;
                for (double& g : out_grad) g = rng.uniform(-1.0, 1.0);

                QNetwork net(dims);
                net.forward(params, market, position);
                NetworkParams analytic = net.backward(params, out_grad);
                if (config.corrupt) analytic.head.b[0] += 0.5;

                const auto scalar = [&](const NetworkParams& p) {
                    const QValues q = net.forward(p, market, position);
                    return out_grad[0] * q[0] + out_grad[1] * q[1] +
                           out_grad[2] * q[2];
                };

                auto prefs = param_refs(params);
                auto grefs = param_refs(analytic);
                const double h = config.step;
                for (std::size_t k = 0; k < prefs.size(); ++k) {
                    for (std::ptrdiff_t i = 0; i < prefs[k].size; ++i) {
                        const double saved = prefs[k].data[i];
                        prefs[k].data[i] = saved + h;
                        const double fp = scalar(params);
                        prefs[k].data[i] = saved - h;
                        const double fm = scalar(params);
                        prefs[k].data[i] = saved;

                        const double fd = (fp - fm) / (2.0 * h);
                        result.max_rel_error = std::max(
                            result.max_rel_error, rel_error(grefs[k].data[i], fd));
                        ++result.components_checked;
                    }
                }
                ++result.configs_checked;
            }
        }
    }
    result.pass = result.max_rel_error <= config.tolerance;
    return result;
}

}  // namespace qtrade
