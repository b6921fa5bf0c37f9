#include "fairlora/objective.hpp"

#include <cmath>

#include "fairlora/errors.hpp"

namespace fairlora {

std::map<int, std::vector<std::size_t>> partition_by_group(const std::vector<int>& group_ids) {
    if (group_ids.empty()) {
        throw data_error("partition_by_group: empty batch");
    }
    std::map<int, std::vector<std::size_t>> parts;
    for (std::size_t i = 0; i < group_ids.size(); ++i) {
        parts[group_ids[i]].push_back(i);
    }
    return parts;
}

double variance_penalty(const std::vector<double>& per_group_loss) {
    if (per_group_loss.empty()) {
        throw data_error("variance_penalty: no groups");
    }
    // exact zero for equal losses, so penalty == 0 iff all L_g are equal
    bool all_equal = true;
    for (double v : per_group_loss) {
        all_equal = all_equal && v == per_group_loss.front();
    }
    if (all_equal) {
        return 0.0;
    }
    double mean = 0.0;
    for (double v : per_group_loss) {
        mean += v;
    }
    mean /= static_cast<double>(per_group_loss.size());
    double penalty = 0.0;
    for (double v : per_group_loss) {
        const double dev = v - mean;
        penalty += dev * dev;
    }
    return penalty;
}

GroupLossReport objective(double overall_loss, const std::map<int, double>& per_group_loss,
                          double lambda) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw data_error("objective: lambda must be finite and non-negative");
    }
    GroupLossReport report;
    for (const auto& [group, loss] : per_group_loss) {
        report.groups.push_back(group);
        report.per_group_loss.push_back(loss);
    }
    report.overall_loss = overall_loss;
    report.penalty = variance_penalty(report.per_group_loss);
    report.objective = overall_loss + lambda * report.penalty;
    return report;
}

BatchGradients objective_gradient(const BatchGradients& overall_grad,
                                  const std::map<int, BatchGradients>& group_grads,
                                  const std::map<int, double>& per_group_loss, double lambda) {
    if (group_grads.size() != per_group_loss.size()) {
        throw data_error("objective_gradient: group gradient keys do not match group losses");
    }
    for (const auto& [group, grads] : group_grads) {
        if (per_group_loss.find(group) == per_group_loss.end()) {
            throw data_error("objective_gradient: gradient for unknown group " +
                             std::to_string(group));
        }
        if (grads.tensors.size() != overall_grad.tensors.size()) {
            throw data_error("objective_gradient: tensor set mismatch for group " +
                             std::to_string(group));
        }
    }
    if (lambda == 0.0) {
        return overall_grad;
    }

    double mean = 0.0;
    for (const auto& [group, loss] : per_group_loss) {
        mean += loss;
    }
    mean /= static_cast<double>(per_group_loss.size());

    BatchGradients combined = overall_grad;
    for (auto& [name, tensor] : combined.tensors) {
        Matrix penalty_grad(tensor.rows, tensor.cols);
        for (const auto& [group, grads] : group_grads) {
            auto it = grads.tensors.find(name);
            if (it == grads.tensors.end() || !same_shape(it->second, tensor)) {
                throw data_error("objective_gradient: tensor '" + name +
                                 "' missing or mis-shaped for group " + std::to_string(group));
            }
            const double coeff = 2.0 * (per_group_loss.at(group) - mean);
            add_scaled(penalty_grad, it->second, coeff);
        }
        add_scaled(tensor, penalty_grad, lambda);
    }
    return combined;
}

}  // namespace fairlora
