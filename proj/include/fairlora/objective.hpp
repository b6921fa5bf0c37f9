#pragma once

#include <map>
#include <vector>

#include "fairlora/model.hpp"

namespace fairlora {

enum class GroupKey { kClassLabel, kSensitiveAttribute };

struct FairObjectiveConfig {
    double lambda = 0.0;  // regularization strength, >= 0
    GroupKey group_key = GroupKey::kClassLabel;
};

// Combined objective for one batch: J = L + lambda * sum_g (L_g - mean)^2.
struct GroupLossReport {
    std::vector<int> groups;            // ascending group ids present
    std::vector<double> per_group_loss; // aligned with `groups`
    double overall_loss = 0.0;
    double penalty = 0.0;
    double objective = 0.0;
};

// Disjoint, exhaustive index sets keyed by group id (ascending).
std::map<int, std::vector<std::size_t>> partition_by_group(const std::vector<int>& group_ids);

// Sum of squared deviations of the group losses from their unweighted mean.
// Not divided by the group count: the regularizer is the raw sum.
double variance_penalty(const std::vector<double>& per_group_loss);

GroupLossReport objective(double overall_loss, const std::map<int, double>& per_group_loss,
                          double lambda);

// Tensor-wise assembly of the objective gradient:
//   grad_J[t] = grad_L[t] + lambda * sum_g 2 (L_g - mean) grad_{L_g}[t]
// With lambda == 0 the overall gradient is returned bitwise unchanged.
BatchGradients objective_gradient(const BatchGradients& overall_grad,
                                  const std::map<int, BatchGradients>& group_grads,
                                  const std::map<int, double>& per_group_loss, double lambda);

}  // namespace fairlora
