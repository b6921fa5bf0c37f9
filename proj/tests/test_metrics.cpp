#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "fairlora/errors.hpp"
#include "fairlora/metrics.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace fairlora;

namespace {

EvalBundle random_bundle(SeededRng& rng, std::size_t max_samples = 200,
                         std::size_t max_classes = 10, std::size_t max_sensitive = 6) {
    const std::size_t n = 2 + rng.next_index(max_samples - 1);
    const std::size_t classes = 2 + rng.next_index(max_classes - 1);
    const std::size_t sensitive = 2 + rng.next_index(max_sensitive - 1);
    EvalBundle bundle;
    bundle.predictions.resize(n);
    bundle.labels.resize(n);
    bundle.sensitive.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        bundle.labels[i] = static_cast<int>(rng.next_index(classes));
        // predictions correlate with labels so rates are nontrivial
        bundle.predictions[i] = rng.next_uniform() < 0.6
            ? bundle.labels[i]
            : static_cast<int>(rng.next_index(classes));
        bundle.sensitive[i] = static_cast<int>(rng.next_index(sensitive));
    }
    bundle.groups = bundle.labels;
    return bundle;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("perfect predictions") {
    EvalBundle bundle = make_bundle({0, 1, 2, 1, 0, 2}, {0, 1, 2, 1, 0, 2});
    bundle.sensitive = {0, 1, 0, 0, 1, 1};
    const MetricsReport report = summary(bundle);
    CHECK(report.accuracy == 1.0);
    CHECK(report.delta_f1 == 0.0);
    for (const auto& [g, v] : report.f1_by_group) {
        CHECK(v == 1.0);
    }
    for (const auto& [g, v] : report.recall_by_group) {
        CHECK(v == 1.0);
    }
    REQUIRE(report.eod_max.has_value());
    CHECK(*report.eod_max == 0.0);
}

TEST_CASE("hand confusion case: crossed binary predictions give F1 one half") {
    const GroupScores scores =
        per_group_f1_recall(make_bundle({0, 0, 1, 1}, {0, 1, 0, 1}), Grouping::kByClass);
    CHECK(scores.f1.at(0) == 0.5);
    CHECK(scores.f1.at(1) == 0.5);
    CHECK(scores.recall.at(0) == 0.5);
    CHECK(scores.recall.at(1) == 0.5);
}

TEST_CASE("single group present makes delta_f1 zero") {
    const MetricsReport report = summary(make_bundle({0, 0, 0}, {0, 0, 0}));
    CHECK(report.delta_f1 == 0.0);
}

TEST_CASE("random bundles equal the brute-force oracle exactly") {
    SeededRng rng(101);
    for (int trial = 0; trial < 300; ++trial) {
        const EvalBundle bundle = random_bundle(rng);
        const MetricsReport report = summary(bundle);
        const oracle::BundleMetrics want = oracle::brute_force_metrics(bundle);
        CHECK(report.accuracy == want.accuracy);
        REQUIRE(report.f1_by_group.size() == want.f1.size());
        for (const auto& [c, v] : want.f1) {
            CHECK(report.f1_by_group.at(c) == v);
        }
        for (const auto& [c, v] : want.recall) {
            CHECK(report.recall_by_group.at(c) == v);
        }
        CHECK(report.f1_min == want.f1_min);
        CHECK(report.f1_max == want.f1_max);
        CHECK(report.recall_min == want.recall_min);
        CHECK(report.delta_f1 == want.delta_f1);
    }
}

TEST_CASE("summary scalars recompute from the maps") {
    SeededRng rng(103);
    for (int trial = 0; trial < 20; ++trial) {
        const MetricsReport report = summary(random_bundle(rng));
        double f1_min = 2.0, f1_max = -1.0, recall_min = 2.0;
        for (const auto& [g, v] : report.f1_by_group) {
            f1_min = std::min(f1_min, v);
            f1_max = std::max(f1_max, v);
        }
        for (const auto& [g, v] : report.recall_by_group) {
            recall_min = std::min(recall_min, v);
        }
        CHECK(report.f1_min == f1_min);
        CHECK(report.f1_max == f1_max);
        CHECK(report.recall_min == recall_min);
        CHECK(report.delta_f1 == f1_max - f1_min);
        if (report.eod_max) {
            double best = 0.0;
            for (const auto& [s, v] : report.eod_one_vs_all) {
                best = std::max(best, v);
            }
            CHECK(*report.eod_max == best);
        }
    }
}

TEST_CASE("eod_pair hand case") {
    // group 0: five positives with TPR 0.8; group 1: four positives, TPR 0.5
    EvalBundle bundle;
    bundle.labels =      {1, 1, 1, 1, 1,  1, 1, 1, 1};
    bundle.predictions = {1, 1, 1, 0, 1,  1, 0, 0, 1};
    bundle.sensitive =   {0, 0, 0, 0, 0,  1, 1, 1, 1};
    bundle.groups = bundle.labels;
    const double gap = eod_pair(bundle, 1, 0, 1);
    CHECK(gap == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(eod_pair(bundle, 1, 0, 1) == eod_pair(bundle, 1, 1, 0));
}

TEST_CASE("eod_pair rejects a group without positives") {
    EvalBundle bundle;
    bundle.labels = {1, 1, 0, 0};
    bundle.predictions = {1, 0, 0, 0};
    bundle.sensitive = {0, 0, 1, 1};
    bundle.groups = bundle.labels;
    CHECK_THROWS_AS(eod_pair(bundle, 1, 0, 1), numeric_error);
}

TEST_CASE("two-group one-vs-all equals pairwise") {
    SeededRng rng(107);
    for (int trial = 0; trial < 50; ++trial) {
        EvalBundle bundle = random_bundle(rng, 60, 4, 2);
        // ensure both groups have positives for class 0
        bundle.labels[0] = 0;
        bundle.sensitive[0] = 0;
        bundle.labels[1] = 0;
        bundle.sensitive[1] = 1;
        CHECK(eod_one_vs_all(bundle, 0, 0) == eod_pair(bundle, 0, 0, 1));
        CHECK(eod_one_vs_all(bundle, 0, 1) == eod_pair(bundle, 0, 1, 0));
    }
}

TEST_CASE("three-group one-vs-all matches pooled counting") {
    EvalBundle bundle;
    // class 1 positives: g0 2/3 hit, g1 1/2 hit, g2 3/3 hit
    bundle.labels =      {1, 1, 1,  1, 1,  1, 1, 1};
    bundle.predictions = {1, 1, 0,  1, 0,  1, 1, 1};
    bundle.sensitive =   {0, 0, 0,  1, 1,  2, 2, 2};
    bundle.groups = bundle.labels;
    const double tpr0 = 2.0 / 3.0;
    const double rest0 = 4.0 / 5.0;  // (1 + 3) / (2 + 3)
    CHECK(eod_one_vs_all(bundle, 1, 0) == std::abs(tpr0 - rest0));
    const double tpr1 = 0.5;
    const double rest1 = 5.0 / 6.0;
    CHECK(eod_one_vs_all(bundle, 1, 1) == std::abs(tpr1 - rest1));
    const double expected_max = std::max({std::abs(tpr0 - rest0), std::abs(tpr1 - rest1),
                                          std::abs(1.0 - 3.0 / 5.0)});
    CHECK(eod_max(bundle, 1) == expected_max);
}

TEST_CASE("eod_max dominates every one-vs-all value") {
    SeededRng rng(109);
    for (int trial = 0; trial < 30; ++trial) {
        EvalBundle bundle = random_bundle(rng, 100, 2, 4);
        // make every group have a class-1 positive so all rates are defined
        std::set<int> groups(bundle.sensitive.begin(), bundle.sensitive.end());
        std::size_t i = 0;
        for (int g : groups) {
            bundle.labels[i] = 1;
            bundle.sensitive[i] = g;
            ++i;
        }
        const double best = eod_max(bundle, 1);
        for (int g : groups) {
            CHECK(best >= eod_one_vs_all(bundle, 1, g));
        }
    }
}

TEST_CASE("metrics are invariant to sample permutation") {
    SeededRng rng(113);
    EvalBundle bundle = random_bundle(rng);
    MetricsReport before = summary(bundle);

    std::vector<std::size_t> order(bundle.labels.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    rng.shuffle(order);
    EvalBundle shuffled;
    for (std::size_t i : order) {
        shuffled.predictions.push_back(bundle.predictions[i]);
        shuffled.labels.push_back(bundle.labels[i]);
        shuffled.groups.push_back(bundle.groups[i]);
        shuffled.sensitive.push_back(bundle.sensitive[i]);
    }
    MetricsReport after = summary(shuffled);
    CHECK(before.accuracy == after.accuracy);
    CHECK(before.f1_by_group == after.f1_by_group);
    CHECK(before.recall_by_group == after.recall_by_group);
    CHECK(before.eod_one_vs_all == after.eod_one_vs_all);
    CHECK(before.eod_max == after.eod_max);
}

TEST_CASE("all rates stay in [0, 1]") {
    SeededRng rng(127);
    for (int trial = 0; trial < 50; ++trial) {
        const MetricsReport report = summary(random_bundle(rng));
        CHECK(report.accuracy >= 0.0);
        CHECK(report.accuracy <= 1.0);
        for (const auto& [g, v] : report.f1_by_group) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
        CHECK(report.delta_f1 >= 0.0);
        CHECK(report.delta_f1 <= 1.0);
        for (const auto& [s, v] : report.eod_one_vs_all) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("flipping a correct prediction never raises accuracy") {
    SeededRng rng(131);
    EvalBundle bundle = random_bundle(rng, 50, 4, 2);
    const double before = summary(bundle).accuracy;
    for (std::size_t i = 0; i < bundle.labels.size(); ++i) {
        if (bundle.predictions[i] == bundle.labels[i]) {
            bundle.predictions[i] = (bundle.labels[i] + 1) % 4;
            break;
        }
    }
    CHECK(summary(bundle).accuracy <= before);
}

TEST_CASE("declared class count flags zero-denominator classes") {
    EvalBundle bundle = make_bundle({0, 1, 0}, {0, 1, 1});
    bundle.num_classes = 4;  // classes 2 and 3 never appear
    const GroupScores scores = per_group_f1_recall(bundle, Grouping::kByClass);
    CHECK(scores.f1.at(2) == 0.0);
    CHECK(scores.f1.at(3) == 0.0);
    CHECK(scores.zero_denominator_groups == std::vector<int>{2, 3});
}

TEST_CASE("by-sensitive grouping computes macro scores within each subgroup") {
    EvalBundle bundle;
    bundle.predictions = {0, 1, 0, 1};
    bundle.labels = {0, 1, 1, 1};
    bundle.groups = {0, 0, 1, 1};  // subgroup 0 perfect, subgroup 1 mixed
    const GroupScores scores = per_group_f1_recall(bundle, Grouping::kBySensitive);
    CHECK(scores.f1.at(0) == 1.0);
    CHECK(scores.f1.at(1) < 1.0);
    // subgroup 1: labels {1,1}, preds {0,1} -> class 0: tp 0 fp 1 -> f1 0;
    // class 1: tp 1 fn 1 -> p 1, r 0.5, f1 2/3; macro = 1/3
    CHECK(scores.f1.at(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("group_loss_variance") {
    CHECK(group_loss_variance({0.4, 0.4, 0.4}) == 0.0);
    CHECK(group_loss_variance({1.0, 3.0}) == 1.0);
    CHECK(group_loss_variance({1.0, 3.0}, VarianceDivisor::kSample) == 2.0);
    CHECK_THROWS_AS(group_loss_variance({1.0}), data_error);

    SeededRng rng(137);
    std::vector<double> losses(9);
    for (double& v : losses) {
        v = rng.next_uniform() * 4.0;
    }
    double mean = 0.0;
    for (double v : losses) {
        mean += v;
    }
    mean /= static_cast<double>(losses.size());
    double sum_sq = 0.0;
    for (double v : losses) {
        sum_sq += (v - mean) * (v - mean);
    }
    CHECK(group_loss_variance(losses) ==
          doctest::Approx(sum_sq / 9.0).epsilon(1e-14));
}

TEST_CASE("sensitive accuracy probe") {
    // single identity hidden layer so penultimate features mirror inputs
    MlpClassifier model;
    DenseLayer layer;
    layer.weight = Matrix::identity(4);
    layer.bias = Matrix(1, 4);
    model.hidden.push_back(layer);
    model.head.weight = Matrix(4, 2);
    model.head.bias = Matrix(1, 2);

    SUBCASE("independent features score near chance") {
        SeededRng data_rng(139);
        const std::size_t n = 2000;
        Matrix features(n, 4);
        std::vector<int> sensitive(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < 4; ++j) {
                features.at(i, j) = std::abs(data_rng.next_normal());
            }
            sensitive[i] = static_cast<int>(data_rng.next_index(2));
        }
        SeededRng probe_rng(7);
        const auto acc = sensitive_accuracy(model, features, sensitive, probe_rng);
        REQUIRE(acc.has_value());
        CHECK(*acc > 0.45);
        CHECK(*acc < 0.55);
    }

    SUBCASE("sensitive id copied into a coordinate is fully recoverable") {
        SeededRng data_rng(149);
        const std::size_t n = 600;
        Matrix features(n, 4);
        std::vector<int> sensitive(n);
        for (std::size_t i = 0; i < n; ++i) {
            sensitive[i] = static_cast<int>(data_rng.next_index(3));
            features.at(i, 0) = static_cast<double>(sensitive[i]);
            for (std::size_t j = 1; j < 4; ++j) {
                features.at(i, j) = std::abs(data_rng.next_normal());
            }
        }
        SeededRng probe_rng(11);
        const auto acc = sensitive_accuracy(model, features, sensitive, probe_rng);
        REQUIRE(acc.has_value());
        CHECK(*acc > 0.99);
    }

    SUBCASE("identical seeds give identical probe accuracy") {
        SeededRng data_rng(151);
        Matrix features(80, 4);
        std::vector<int> sensitive(80);
        for (std::size_t i = 0; i < 80; ++i) {
            for (std::size_t j = 0; j < 4; ++j) {
                features.at(i, j) = std::abs(data_rng.next_normal());
            }
            sensitive[i] = static_cast<int>(data_rng.next_index(2));
        }
        SeededRng rng_a(21), rng_b(21);
        CHECK(sensitive_accuracy(model, features, sensitive, rng_a) ==
              sensitive_accuracy(model, features, sensitive, rng_b));
    }

    SUBCASE("absent sensitive ids report absent") {
        SeededRng probe_rng(3);
        CHECK(!sensitive_accuracy(model, Matrix(4, 4), {}, probe_rng).has_value());
    }
}

TEST_CASE("to_kv_rows uses stable names") {
    EvalBundle bundle = make_bundle({0, 1, 0, 1}, {0, 1, 0, 1});
    bundle.sensitive = {0, 0, 1, 1};
    MetricsReport report = summary(bundle);
    report.loss_variance_across_groups = 0.5;
    report.loss_variance_divisor = "population";
    const auto rows = to_kv_rows(report);
    auto has_key = [&](const std::string& key) {
        return std::any_of(rows.begin(), rows.end(),
                           [&](const auto& kv) { return kv.first == key; });
    };
    CHECK(has_key("accuracy"));
    CHECK(has_key("f1_min"));
    CHECK(has_key("recall_min"));
    CHECK(has_key("delta_f1"));
    CHECK(has_key("eod_max"));
    CHECK(has_key("group_loss_variance"));
    CHECK(has_key("f1.g0"));
}

TEST_CASE("bundle validation") {
    EvalBundle bad = make_bundle({0, 1}, {0, 1});
    bad.labels.pop_back();
    CHECK_THROWS_AS(validate_bundle(bad), data_error);
    CHECK_THROWS_AS(summary(make_bundle({}, {})), data_error);
    EvalBundle negative = make_bundle({0, -1}, {0, 1});
    CHECK_THROWS_AS(validate_bundle(negative), data_error);
}

}  // TEST_SUITE
