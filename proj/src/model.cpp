#include "fairlora/model.hpp"

#include <algorithm>
#include <cmath>

#include "fairlora/errors.hpp"
#include "fairlora/linalg.hpp"

namespace fairlora {

const Matrix& base_weight(const DenseLayer& layer) {
    return layer.adapter ? layer.adapter->base : layer.weight;
}

Matrix effective_layer_weight(const DenseLayer& layer) {
    return layer.adapter ? effective_weight(*layer.adapter) : layer.weight;
}

std::size_t MlpClassifier::input_width() const {
    return hidden.empty() ? base_weight(head).rows : base_weight(hidden.front()).rows;
}

std::size_t MlpClassifier::num_classes() const {
    return base_weight(head).cols;
}

namespace {

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, SeededRng& rng, double stddev) {
    Matrix m(rows, cols);
    for (double& v : m.data) {
        v = rng.next_normal(0.0, stddev);
    }
    return m;
}

Matrix affine(const Matrix& x, const Matrix& w, const Matrix& bias) {
    Matrix y = matmul(x, w);
    for (std::size_t i = 0; i < y.rows; ++i) {
        for (std::size_t j = 0; j < y.cols; ++j) {
            y.at(i, j) += bias.at(0, j);
        }
    }
    return y;
}

Matrix relu(const Matrix& z) {
    Matrix h = z;
    for (double& v : h.data) {
        v = std::max(v, 0.0);
    }
    return h;
}

Matrix column_sums(const Matrix& m) {
    Matrix s(1, m.cols);
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t j = 0; j < m.cols; ++j) {
            s.at(0, j) += m.at(i, j);
        }
    }
    return s;
}

struct ForwardTrace {
    std::vector<Matrix> inputs;  // inputs[l] feeds hidden layer l; back() feeds the head
    std::vector<Matrix> pre;     // pre-activation of hidden layer l
    Matrix logits;
};

ForwardTrace traced_forward(const MlpClassifier& model, const Matrix& features) {
    if (features.cols != model.input_width()) {
        throw data_error("forward: feature width " + std::to_string(features.cols) +
                         " does not match input width " +
                         std::to_string(model.input_width()));
    }
    ForwardTrace trace;
    trace.inputs.push_back(features);
    for (const DenseLayer& layer : model.hidden) {
        Matrix z = affine(trace.inputs.back(), effective_layer_weight(layer), layer.bias);
        trace.pre.push_back(z);
        trace.inputs.push_back(relu(z));
    }
    trace.logits = affine(trace.inputs.back(), effective_layer_weight(model.head), model.head.bias);
    return trace;
}

Matrix softmax_rows(const Matrix& logits) {
    Matrix p(logits.rows, logits.cols);
    for (std::size_t i = 0; i < logits.rows; ++i) {
        double row_max = logits.at(i, 0);
        for (std::size_t j = 1; j < logits.cols; ++j) {
            row_max = std::max(row_max, logits.at(i, j));
        }
        double denom = 0.0;
        for (std::size_t j = 0; j < logits.cols; ++j) {
            const double e = std::exp(logits.at(i, j) - row_max);
            p.at(i, j) = e;
            denom += e;
        }
        for (std::size_t j = 0; j < logits.cols; ++j) {
            p.at(i, j) /= denom;
        }
    }
    return p;
}

}  // namespace

MlpClassifier build_mlp(std::size_t input_width, const std::vector<std::size_t>& hidden_widths,
                        std::size_t num_classes, SeededRng& rng) {
    if (input_width == 0 || num_classes == 0) {
        throw data_error("build_mlp: zero input width or class count");
    }
    MlpClassifier model;
    std::size_t in = input_width;
    for (std::size_t width : hidden_widths) {
        if (width == 0) {
            throw data_error("build_mlp: zero hidden width");
        }
        DenseLayer layer;
        layer.weight = gaussian_matrix(in, width, rng, 1.0 / std::sqrt(static_cast<double>(in)));
        layer.bias = Matrix(1, width);
        model.hidden.push_back(std::move(layer));
        in = width;
    }
    model.head.weight = gaussian_matrix(in, num_classes, rng, 1.0 / std::sqrt(static_cast<double>(in)));
    model.head.bias = Matrix(1, num_classes);
    return model;
}

void attach_adapters(MlpClassifier& model, std::size_t rank, SeededRng& rng,
                     double init_std, double scale) {
    if (model.mode == TrainMode::kLora) {
        throw data_error("attach_adapters: adapters already attached");
    }
    for (DenseLayer& layer : model.hidden) {
        layer.adapter = new_adapter(layer.weight, rank, rng, init_std, scale);
        layer.weight = Matrix();
    }
    model.mode = TrainMode::kLora;
}

Matrix forward(const MlpClassifier& model, const Matrix& features) {
    return traced_forward(model, features).logits;
}

Matrix penultimate_features(const MlpClassifier& model, const Matrix& features) {
    if (model.hidden.empty()) {
        throw data_error("penultimate_features: model has no hidden layer");
    }
    ForwardTrace trace = traced_forward(model, features);
    return trace.inputs.back();
}

std::vector<Matrix> hidden_preactivations(const MlpClassifier& model, const Matrix& features) {
    return traced_forward(model, features).pre;
}

CrossEntropy cross_entropy(const Matrix& logits, const std::vector<int>& labels) {
    if (labels.size() != logits.rows) {
        throw data_error("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(logits.rows) + " rows of logits");
    }
    CrossEntropy out;
    out.per_sample.resize(logits.rows);
    for (std::size_t i = 0; i < logits.rows; ++i) {
        const int label = labels[i];
        if (label < 0 || static_cast<std::size_t>(label) >= logits.cols) {
            throw data_error("cross_entropy: label " + std::to_string(label) +
                             " out of range [0, " + std::to_string(logits.cols) + ")");
        }
        double row_max = logits.at(i, 0);
        for (std::size_t j = 1; j < logits.cols; ++j) {
            row_max = std::max(row_max, logits.at(i, j));
        }
        double sum_exp = 0.0;
        for (std::size_t j = 0; j < logits.cols; ++j) {
            sum_exp += std::exp(logits.at(i, j) - row_max);
        }
        const double lse = row_max + std::log(sum_exp);
        out.per_sample[i] = lse - logits.at(i, static_cast<std::size_t>(label));
        out.mean_loss += out.per_sample[i];
    }
    out.mean_loss /= static_cast<double>(logits.rows);
    return out;
}

BatchGradients backward_subset(const MlpClassifier& model, const Matrix& features,
                               const std::vector<int>& labels,
                               const std::vector<std::size_t>& subset) {
    if (subset.empty()) {
        throw data_error("backward_subset: empty subset (group loss undefined)");
    }
    if (labels.size() != features.rows) {
        throw data_error("backward_subset: label count does not match feature rows");
    }
    const std::size_t m = subset.size();
    Matrix sub(m, features.cols);
    std::vector<int> sub_labels(m);
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t idx = subset[i];
        if (idx >= features.rows) {
            throw data_error("backward_subset: sample index out of range");
        }
        for (std::size_t j = 0; j < features.cols; ++j) {
            sub.at(i, j) = features.at(idx, j);
        }
        sub_labels[i] = labels[idx];
    }

    ForwardTrace trace = traced_forward(model, sub);
    CrossEntropy ce = cross_entropy(trace.logits, sub_labels);

    // d(mean loss)/d(logits) = (softmax - onehot) / m
    Matrix dlogits = softmax_rows(trace.logits);
    const double inv_m = 1.0 / static_cast<double>(m);
    for (std::size_t i = 0; i < m; ++i) {
        dlogits.at(i, static_cast<std::size_t>(sub_labels[i])) -= 1.0;
    }
    for (double& v : dlogits.data) {
        v *= inv_m;
    }

    BatchGradients grads;
    grads.loss = ce.mean_loss;

    const bool fft = model.mode == TrainMode::kFft;

    grads.tensors["head.weight"] = matmul(transpose(trace.inputs.back()), dlogits);
    grads.tensors["head.bias"] = column_sums(dlogits);
    Matrix dcur = matmul(dlogits, transpose(effective_layer_weight(model.head)));

    for (std::size_t l = model.hidden.size(); l-- > 0;) {
        const DenseLayer& layer = model.hidden[l];
        Matrix dz = dcur;
        const Matrix& z = trace.pre[l];
        for (std::size_t i = 0; i < dz.data.size(); ++i) {
            if (z.data[i] <= 0.0) {
                dz.data[i] = 0.0;
            }
        }
        Matrix d_theta = matmul(transpose(trace.inputs[l]), dz);
        const std::string prefix = "layer" + std::to_string(l);
        if (fft) {
            grads.tensors[prefix + ".weight"] = std::move(d_theta);
            grads.tensors[prefix + ".bias"] = column_sums(dz);
        } else if (layer.adapter) {
            auto [da, db] = route_gradient(*layer.adapter, d_theta);
            grads.tensors[prefix + ".lora_a"] = std::move(da);
            grads.tensors[prefix + ".lora_b"] = std::move(db);
        }
        if (l > 0) {
            dcur = matmul(dz, transpose(effective_layer_weight(layer)));
        }
    }
    return grads;
}

std::vector<std::string> trainable_names(const MlpClassifier& model) {
    std::vector<std::string> names;
    for (std::size_t l = 0; l < model.hidden.size(); ++l) {
        const std::string prefix = "layer" + std::to_string(l);
        if (model.mode == TrainMode::kFft) {
            names.push_back(prefix + ".weight");
            names.push_back(prefix + ".bias");
        } else if (model.hidden[l].adapter) {
            names.push_back(prefix + ".lora_a");
            names.push_back(prefix + ".lora_b");
        }
    }
    names.push_back("head.weight");
    names.push_back("head.bias");
    std::sort(names.begin(), names.end());
    return names;
}

std::size_t trainable_element_count(const MlpClassifier& model) {
    std::size_t total = 0;
    for (const std::string& name : trainable_names(model)) {
        total += find_tensor(model, name)->data.size();
    }
    return total;
}

namespace {

Matrix* tensor_by_name(MlpClassifier& model, const std::string& name, bool trainable_only) {
    if (name == "head.weight") {
        return &model.head.weight;
    }
    if (name == "head.bias") {
        return &model.head.bias;
    }
    if (name.rfind("layer", 0) == 0) {
        const std::size_t dot = name.find('.');
        if (dot == std::string::npos) {
            return nullptr;
        }
        const std::size_t index = static_cast<std::size_t>(
            std::stoul(name.substr(5, dot - 5)));
        if (index >= model.hidden.size()) {
            return nullptr;
        }
        DenseLayer& layer = model.hidden[index];
        const std::string field = name.substr(dot + 1);
        const bool fft = model.mode == TrainMode::kFft;
        if (field == "weight" && (!trainable_only || fft)) {
            return layer.adapter ? &layer.adapter->base : &layer.weight;
        }
        if (field == "bias" && (!trainable_only || fft)) {
            return &layer.bias;
        }
        if (layer.adapter) {
            if (field == "lora_a") {
                return &layer.adapter->a;
            }
            if (field == "lora_b") {
                return &layer.adapter->b;
            }
        }
    }
    return nullptr;
}

}  // namespace

Matrix* mutable_tensor(MlpClassifier& model, const std::string& name) {
    Matrix* t = tensor_by_name(model, name, /*trainable_only=*/true);
    if (t == nullptr) {
        throw data_error("mutable_tensor: '" + name + "' is not a trainable tensor");
    }
    return t;
}

const Matrix* find_tensor(const MlpClassifier& model, const std::string& name) {
    Matrix* t = tensor_by_name(const_cast<MlpClassifier&>(model), name, /*trainable_only=*/false);
    if (t == nullptr) {
        throw data_error("find_tensor: unknown tensor '" + name + "'");
    }
    return t;
}

ParamCountSpec param_count_spec(const MlpClassifier& model) {
    ParamCountSpec spec;
    for (const DenseLayer& layer : model.hidden) {
        const Matrix& base = base_weight(layer);
        if (model.mode == TrainMode::kLora && layer.adapter) {
            spec.adapted.push_back({base.rows, base.cols});
            spec.rank = layer.adapter->rank;
        } else if (model.mode == TrainMode::kFft) {
            spec.auxiliary.push_back(base.data.size());
            spec.auxiliary.push_back(layer.bias.data.size());
        }
    }
    spec.auxiliary.push_back(model.head.weight.data.size());
    spec.auxiliary.push_back(model.head.bias.data.size());
    return spec;
}

}  // namespace fairlora
