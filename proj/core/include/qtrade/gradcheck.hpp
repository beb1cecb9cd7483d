#pragma once

#include <cstdint>
#include <vector>

#include "qtrade/qnet.hpp"

namespace qtrade {

/// Finite-difference verification of the analytic gradients over seeded
/// random configurations. Dimensions default small so the quadratic-cost
/// sweep stays fast.
struct GradCheckConfig {
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    std::vector<std::size_t> windows = {1, 3, 8};
    NetConfig dims{/*market_features=*/9, /*lstm1=*/6, /*lstm2=*/5,
                   /*pos_branch=*/4, /*merge1=*/6, /*merge2=*/5,
                   HeadActivation::linear};
    double step = 1e-5;       // central-difference half step
    double tolerance = 1e-4;  // max relative error allowed
    bool check_softmax_head = true;
    bool corrupt = false;  // negative-control hook: breaks one gradient
};

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::size_t configs_checked = 0;
    std::size_t components_checked = 0;
    bool pass = false;
};

GradCheckResult run_gradient_check(const GradCheckConfig& config);

}  // namespace qtrade
