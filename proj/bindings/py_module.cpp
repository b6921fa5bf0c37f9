#include <pybind11/pybind11.h>
#include <pybind11/numpy.h>
#include <pybind11/stl.h>

#include "fairlora/cli.hpp"
#include "fairlora/errors.hpp"
#include "fairlora/fid.hpp"
#include "fairlora/linalg.hpp"
#include "fairlora/lora.hpp"
#include "fairlora/metrics.hpp"
#include "fairlora/objective.hpp"
#include "fairlora/rng.hpp"

namespace py = pybind11;
using namespace fairlora;

namespace {

Matrix to_matrix(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 2) {
        throw data_error("expected a 2-D array");
    }
    Matrix m(static_cast<std::size_t>(arr.shape(0)), static_cast<std::size_t>(arr.shape(1)));
    const double* src = arr.data();
    std::copy(src, src + m.data.size(), m.data.begin());
    return m;
}

py::array_t<double> to_array(const Matrix& m) {
    py::array_t<double> arr({m.rows, m.cols});
    std::copy(m.data.begin(), m.data.end(), arr.mutable_data());
    return arr;
}

py::dict report_to_dict(const MetricsReport& report) {
    py::dict d;
    d["accuracy"] = report.accuracy;
    d["f1_min"] = report.f1_min;
    d["f1_max"] = report.f1_max;
    d["recall_min"] = report.recall_min;
    d["delta_f1"] = report.delta_f1;
    py::dict f1, recall;
    for (const auto& [g, v] : report.f1_by_group) {
        f1[py::int_(g)] = v;
    }
    for (const auto& [g, v] : report.recall_by_group) {
        recall[py::int_(g)] = v;
    }
    d["f1_by_group"] = f1;
    d["recall_by_group"] = recall;
    if (report.eod_max) {
        d["eod_max"] = *report.eod_max;
        py::dict ova;
        for (const auto& [s, v] : report.eod_one_vs_all) {
            ova[py::int_(s)] = v;
        }
        d["eod_one_vs_all"] = ova;
        py::dict pairs;
        for (const auto& [pair, v] : report.eod_pairwise) {
            pairs[py::make_tuple(pair.first, pair.second)] = v;
        }
        d["eod_pairwise"] = pairs;
    }
    if (report.sensitive_accuracy) {
        d["sensitive_accuracy"] = *report.sensitive_accuracy;
    }
    if (report.loss_variance_across_groups) {
        d["group_loss_variance"] = *report.loss_variance_across_groups;
    }
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "FairLoRA core: deterministic linear algebra, the variance-penalized "
              "objective, fairness metrics and the Frechet distance";

    py::register_exception<data_error>(m, "DataError", PyExc_ValueError);
    py::register_exception<numeric_error>(m, "NumericError", PyExc_ArithmeticError);

    m.def("matmul",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
             const py::array_t<double, py::array::c_style | py::array::forcecast>& b) {
              return to_array(matmul(to_matrix(a), to_matrix(b)));
          },
          py::arg("a"), py::arg("b"),
          "Deterministic dense matrix product with fixed summation order");

    m.def("mean_and_covariance",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& rows) {
              const MeanCovariance mc = mean_and_covariance(to_matrix(rows));
              py::array_t<double> mean(static_cast<py::ssize_t>(mc.mean.size()),
                                       mc.mean.data());
              return py::make_tuple(mean, to_array(mc.covariance));
          },
          py::arg("rows"), "Column means and (n-1)-divisor sample covariance");

    m.def("psd_sqrt",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& mat) {
              return to_array(psd_sqrt(to_matrix(mat)));
          },
          py::arg("m"), "Symmetric PSD matrix square root");

    m.def("count_trainable",
          [](const std::vector<std::pair<std::size_t, std::size_t>>& adapted,
             std::size_t rank, const std::vector<std::size_t>& auxiliary) {
              ParamCountSpec spec;
              for (const auto& [d, k] : adapted) {
                  spec.adapted.push_back({d, k});
              }
              spec.rank = rank;
              spec.auxiliary = auxiliary;
              return count_trainable(spec);
          },
          py::arg("adapted"), py::arg("rank"), py::arg("auxiliary") = std::vector<std::size_t>{},
          "Trainable parameter count: sum of rank*(d+k) plus auxiliary elements");

    m.def("variance_penalty", &variance_penalty, py::arg("per_group_loss"),
          "Sum of squared deviations of group losses from their mean");

    m.def("fair_objective",
          [](double overall_loss, const std::map<int, double>& per_group_loss, double lam) {
              const GroupLossReport report = objective(overall_loss, per_group_loss, lam);
              py::dict d;
              d["overall_loss"] = report.overall_loss;
              d["penalty"] = report.penalty;
              d["objective"] = report.objective;
              d["groups"] = report.groups;
              d["per_group_loss"] = report.per_group_loss;
              return d;
          },
          py::arg("overall_loss"), py::arg("per_group_loss"), py::arg("lambda_"),
          "J = L + lambda * sum_g (L_g - mean)^2");

    m.def("metrics_summary",
          [](const std::vector<int>& predictions, const std::vector<int>& labels,
             const std::optional<std::vector<int>>& groups,
             const std::optional<std::vector<int>>& sensitive, const std::string& grouping) {
              EvalBundle bundle;
              bundle.predictions = predictions;
              bundle.labels = labels;
              bundle.groups = groups ? *groups : labels;
              if (sensitive) {
                  bundle.sensitive = *sensitive;
              }
              Grouping mode;
              if (grouping == "class") {
                  mode = Grouping::kByClass;
              } else if (grouping == "sensitive") {
                  mode = Grouping::kBySensitive;
              } else {
                  throw data_error("grouping must be 'class' or 'sensitive'");
              }
              return report_to_dict(summary(bundle, mode));
          },
          py::arg("predictions"), py::arg("labels"), py::arg("groups") = std::nullopt,
          py::arg("sensitive") = std::nullopt, py::arg("grouping") = "class",
          "Full fairness metric battery for one evaluation run");

    m.def("eod_pair",
          [](const std::vector<int>& predictions, const std::vector<int>& labels,
             const std::vector<int>& sensitive, int positive_class, int s1, int s2) {
              EvalBundle bundle = make_bundle(predictions, labels);
              bundle.sensitive = sensitive;
              return eod_pair(bundle, positive_class, s1, s2);
          },
          py::arg("predictions"), py::arg("labels"), py::arg("sensitive"),
          py::arg("positive_class"), py::arg("s1"), py::arg("s2"),
          "Absolute TPR gap between two sensitive groups");

    m.def("eod_one_vs_all",
          [](const std::vector<int>& predictions, const std::vector<int>& labels,
             const std::vector<int>& sensitive, int positive_class, int s_i) {
              EvalBundle bundle = make_bundle(predictions, labels);
              bundle.sensitive = sensitive;
              return eod_one_vs_all(bundle, positive_class, s_i);
          },
          py::arg("predictions"), py::arg("labels"), py::arg("sensitive"),
          py::arg("positive_class"), py::arg("s_i"),
          "Absolute TPR gap between a group and its pooled complement");

    m.def("eod_max",
          [](const std::vector<int>& predictions, const std::vector<int>& labels,
             const std::vector<int>& sensitive, int positive_class) {
              EvalBundle bundle = make_bundle(predictions, labels);
              bundle.sensitive = sensitive;
              return eod_max(bundle, positive_class);
          },
          py::arg("predictions"), py::arg("labels"), py::arg("sensitive"),
          py::arg("positive_class"), "Maximum one-vs-all EOD across sensitive groups");

    m.def("group_loss_variance",
          [](const std::vector<double>& losses, bool population) {
              return group_loss_variance(losses, population ? VarianceDivisor::kPopulation
                                                            : VarianceDivisor::kSample);
          },
          py::arg("per_group_losses"), py::arg("population") = true,
          "Variance of per-group mean losses");

    m.def("fid",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
             const py::array_t<double, py::array::c_style | py::array::forcecast>& b) {
              EmbeddingSet ea{to_matrix(a), "a"};
              EmbeddingSet eb{to_matrix(b), "b"};
              const FidResult result = fid(ea, eb);
              py::dict d;
              d["distance"] = result.distance;
              d["regularized_a"] = result.regularized_a;
              d["regularized_b"] = result.regularized_b;
              return d;
          },
          py::arg("a"), py::arg("b"),
          "Frechet distance between two embedding sets (Gaussian assumption)");

    m.def("gaussian_sample",
          [](std::uint64_t seed, std::size_t rows, std::size_t cols, double mean, double std) {
              SeededRng rng(seed);
              Matrix m(rows, cols);
              for (double& v : m.data) {
                  v = rng.next_normal(mean, std);
              }
              return to_array(m);
          },
          py::arg("seed"), py::arg("rows"), py::arg("cols"), py::arg("mean") = 0.0,
          py::arg("std") = 1.0, "Deterministic Gaussian matrix from the repo generator");

    m.def("run_cli", &run_cli, py::arg("args"),
          "Run the full command-line surface (synth/pretrain/finetune/sweep/eval/fid/report)");

    m.attr("rng_algorithm") = std::string(SeededRng::kAlgorithm);

#ifdef VERSION_INFO
#define FAIRLORA_STR_INNER(x) #x
#define FAIRLORA_STR(x) FAIRLORA_STR_INNER(x)
    m.attr("__version__") = FAIRLORA_STR(VERSION_INFO);
#else
    m.attr("__version__") = "dev";
#endif
}
