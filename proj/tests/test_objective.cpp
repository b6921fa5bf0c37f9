#include <doctest.h>

#include <cmath>
#include <numeric>

#include "fairlora/errors.hpp"
#include "fairlora/objective.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace fairlora;
using testutil::random_matrix;

namespace {

struct FairInstance {
    MlpClassifier model;
    Matrix features;
    std::vector<int> labels;
    std::vector<int> groups;
};

FairInstance make_fair_instance(SeededRng& rng, std::size_t num_groups) {
    for (;;) {
        const std::size_t in = 3 + rng.next_index(4);
        const std::size_t classes = 2 + rng.next_index(3);
        const std::size_t batch = std::max<std::size_t>(num_groups * 2,
                                                        4 + rng.next_index(12));
        FairInstance inst;
        SeededRng init(rng.next_u64());
        inst.model = build_mlp(in, {5, 4}, classes, init);
        SeededRng adapter_init(rng.next_u64());
        attach_adapters(inst.model, 2, adapter_init, 0.3);
        for (DenseLayer& layer : inst.model.hidden) {
            for (double& v : layer.adapter->b.data) {
                v = rng.next_normal(0.0, 0.3);
            }
        }
        inst.features = random_matrix(batch, in, rng);
        inst.labels.resize(batch);
        inst.groups.resize(batch);
        for (std::size_t i = 0; i < batch; ++i) {
            inst.labels[i] = static_cast<int>(rng.next_index(classes));
            // every group nonempty: first num_groups samples get one each
            inst.groups[i] = i < num_groups ? static_cast<int>(i)
                                            : static_cast<int>(rng.next_index(num_groups));
        }
        if (!testutil::near_relu_kink(inst.model, inst.features)) {
            return inst;
        }
    }
}

// Full J including the group mean's dependence on the parameters.
double full_objective(const MlpClassifier& model, const Matrix& features,
                      const std::vector<int>& labels, const std::vector<int>& groups,
                      double lambda) {
    const CrossEntropy ce = cross_entropy(forward(model, features), labels);
    const auto parts = partition_by_group(groups);
    std::vector<double> per_group;
    for (const auto& [g, indices] : parts) {
        double sum = 0.0;
        for (std::size_t i : indices) {
            sum += ce.per_sample[i];
        }
        per_group.push_back(sum / static_cast<double>(indices.size()));
    }
    return ce.mean_loss + lambda * variance_penalty(per_group);
}

struct PipelineResult {
    BatchGradients grad;
    GroupLossReport report;
};

PipelineResult fair_pipeline(const FairInstance& inst, double lambda) {
    std::vector<std::size_t> all(inst.labels.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    const BatchGradients overall =
        backward_subset(inst.model, inst.features, inst.labels, all);
    const auto parts = partition_by_group(inst.groups);
    std::map<int, BatchGradients> group_grads;
    std::map<int, double> per_group_loss;
    for (const auto& [g, indices] : parts) {
        BatchGradients gg = backward_subset(inst.model, inst.features, inst.labels, indices);
        per_group_loss[g] = gg.loss;
        group_grads.emplace(g, std::move(gg));
    }
    PipelineResult result;
    result.report = objective(overall.loss, per_group_loss, lambda);
    result.grad = objective_gradient(overall, group_grads, per_group_loss, lambda);
    return result;
}

}  // namespace

TEST_SUITE("objective") {

TEST_CASE("partition_by_group hand cases") {
    SUBCASE("single group") {
        const auto parts = partition_by_group({7, 7, 7});
        REQUIRE(parts.size() == 1);
        CHECK(parts.at(7) == std::vector<std::size_t>{0, 1, 2});
    }
    SUBCASE("alternating labels") {
        const auto parts = partition_by_group({0, 1, 0, 1});
        REQUIRE(parts.size() == 2);
        CHECK(parts.at(0) == std::vector<std::size_t>{0, 2});
        CHECK(parts.at(1) == std::vector<std::size_t>{1, 3});
    }
    SUBCASE("empty batch rejected") {
        CHECK_THROWS_AS(partition_by_group({}), data_error);
    }
}

TEST_CASE("partition_by_group covers all indices disjointly") {
    SeededRng rng(3);
    std::vector<int> ids(57);
    for (int& id : ids) {
        id = static_cast<int>(rng.next_index(5));
    }
    const auto parts = partition_by_group(ids);
    std::vector<bool> seen(ids.size(), false);
    for (const auto& [g, indices] : parts) {
        for (std::size_t i : indices) {
            CHECK(!seen[i]);
            seen[i] = true;
            CHECK(ids[i] == g);
        }
    }
    for (bool s : seen) {
        CHECK(s);
    }
}

TEST_CASE("variance_penalty hand cases") {
    CHECK(variance_penalty({0.7, 0.7, 0.7}) == 0.0);
    CHECK(variance_penalty({1.0, 3.0}) == 2.0);
    CHECK(variance_penalty({5.0}) == 0.0);
    CHECK_THROWS_AS(variance_penalty({}), data_error);
}

TEST_CASE("objective composes loss and penalty") {
    SUBCASE("lambda zero leaves J == L") {
        const GroupLossReport r = objective(0.37, {{0, 1.0}, {1, 9.0}}, 0.0);
        CHECK(r.objective == r.overall_loss);
    }
    SUBCASE("hand case") {
        const GroupLossReport r = objective(0.5, {{0, 1.0}, {1, 3.0}}, 0.5);
        CHECK(r.penalty == 2.0);
        CHECK(r.objective == 1.5);
    }
    SUBCASE("J recomposes as L + lambda * penalty exactly as computed") {
        SeededRng rng(5);
        for (int trial = 0; trial < 50; ++trial) {
            std::map<int, double> losses;
            const std::size_t n = 1 + rng.next_index(6);
            for (std::size_t g = 0; g < n; ++g) {
                losses[static_cast<int>(g)] = rng.next_uniform() * 3.0;
            }
            const double lambda = rng.next_uniform() * 10.0;
            const double overall = rng.next_uniform();
            const GroupLossReport r = objective(overall, losses, lambda);
            CHECK(r.objective == r.overall_loss + lambda * r.penalty);
            CHECK(r.penalty == variance_penalty(r.per_group_loss));
            CHECK(r.penalty >= 0.0);
        }
    }
    SUBCASE("negative lambda rejected") {
        CHECK_THROWS_AS(objective(0.1, {{0, 1.0}}, -1.0), data_error);
    }
}

TEST_CASE("objective_gradient with lambda zero is bitwise the overall gradient") {
    SeededRng rng(7);
    FairInstance inst = make_fair_instance(rng, 3);
    std::vector<std::size_t> all(inst.labels.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    const BatchGradients overall =
        backward_subset(inst.model, inst.features, inst.labels, all);
    const PipelineResult result = fair_pipeline(inst, 0.0);
    for (const auto& [name, grad] : overall.tensors) {
        CHECK(bitwise_equal(grad, result.grad.tensors.at(name)));
    }
}

TEST_CASE("equal group losses reduce the gradient to the overall gradient") {
    // Two equal losses make the batch mean exact, so every deviation
    // coefficient is exactly zero.
    SeededRng rng(11);
    FairInstance inst = make_fair_instance(rng, 2);
    std::vector<std::size_t> all(inst.labels.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    const BatchGradients overall =
        backward_subset(inst.model, inst.features, inst.labels, all);
    std::map<int, BatchGradients> group_grads;
    std::map<int, double> per_group_loss;
    for (const auto& [g, indices] : partition_by_group(inst.groups)) {
        group_grads.emplace(g, backward_subset(inst.model, inst.features, inst.labels, indices));
        per_group_loss[g] = 0.875;  // forced equal
    }
    const BatchGradients combined =
        objective_gradient(overall, group_grads, per_group_loss, 2.0);
    for (const auto& [name, grad] : overall.tensors) {
        const Matrix& got = combined.tensors.at(name);
        for (std::size_t i = 0; i < grad.data.size(); ++i) {
            CHECK(got.data[i] == grad.data[i]);
        }
    }
}

TEST_CASE("objective gradient matches finite differences of the full J") {
    // The analytic assembly drops the d(mean)/d(theta) terms; because the
    // deviations sum to zero those terms cancel, so it must still match the
    // finite-difference gradient of the full objective.
    SeededRng rng(13);
    for (double lambda : {0.1, 1.0, 10.0}) {
        FairInstance inst = make_fair_instance(rng, 2 + rng.next_index(3));
        const PipelineResult result = fair_pipeline(inst, lambda);
        for (const auto& [name, grad] : result.grad.tensors) {
            const Matrix fd = oracle::finite_difference(
                [&](const Matrix& probe) {
                    MlpClassifier copy = inst.model;
                    *mutable_tensor(copy, name) = probe;
                    return full_objective(copy, inst.features, inst.labels, inst.groups,
                                          lambda);
                },
                *find_tensor(inst.model, name), 1e-5);
            CHECK(testutil::grad_rel_err(grad, fd) < 1e-6);
        }
    }
}

TEST_CASE("deviation coefficients sum to zero") {
    SeededRng rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng.next_index(8);
        std::vector<double> losses(n);
        for (double& v : losses) {
            v = rng.next_uniform() * 5.0;
        }
        double mean = 0.0;
        for (double v : losses) {
            mean += v;
        }
        mean /= static_cast<double>(n);
        double coeff_sum = 0.0;
        for (double v : losses) {
            coeff_sum += 2.0 * (v - mean);
        }
        CHECK(std::abs(coeff_sum) < 1e-12);
    }
}

TEST_CASE("J is non-decreasing in lambda when the penalty is positive") {
    SeededRng rng(19);
    FairInstance inst = make_fair_instance(rng, 3);
    std::vector<double> js;
    for (double lambda : {0.0, 0.01, 0.1, 1.0, 10.0, 100.0}) {
        js.push_back(full_objective(inst.model, inst.features, inst.labels, inst.groups,
                                    lambda));
    }
    for (std::size_t i = 1; i < js.size(); ++i) {
        CHECK(js[i] >= js[i - 1]);
    }
}

TEST_CASE("objective_gradient validates keys and shapes") {
    SeededRng rng(23);
    FairInstance inst = make_fair_instance(rng, 2);
    std::vector<std::size_t> all(inst.labels.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    const BatchGradients overall =
        backward_subset(inst.model, inst.features, inst.labels, all);
    std::map<int, BatchGradients> group_grads;
    group_grads.emplace(0, overall);
    // missing group 1 in the loss map
    CHECK_THROWS_AS(objective_gradient(overall, group_grads, {{2, 0.5}}, 1.0), data_error);
}

}  // TEST_SUITE
