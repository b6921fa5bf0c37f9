#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fairlora/lora.hpp"
#include "fairlora/matrix.hpp"
#include "fairlora/rng.hpp"

namespace fairlora {

enum class TrainMode { kFft, kLora };

// Affine layer. When an adapter is attached the frozen base weight lives in
// adapter->base and `weight` is empty; otherwise `weight` is the (trainable
// in FFT mode) base.
struct DenseLayer {
    Matrix weight;  // in x out
    Matrix bias;    // 1 x out
    std::optional<LoraAdapter> adapter;
};

const Matrix& base_weight(const DenseLayer& layer);
Matrix effective_layer_weight(const DenseLayer& layer);

// Feed-forward classifier with ReLU between hidden layers and an affine head.
// The head is always fully trainable; in LoRA mode the hidden base weights
// and biases are frozen and only adapter factors receive gradients.
struct MlpClassifier {
    std::vector<DenseLayer> hidden;
    DenseLayer head;
    TrainMode mode = TrainMode::kFft;

    std::size_t input_width() const;
    std::size_t num_classes() const;
};

MlpClassifier build_mlp(std::size_t input_width, const std::vector<std::size_t>& hidden_widths,
                        std::size_t num_classes, SeededRng& rng);

// Attaches rank-r adapters to every hidden weight and switches to LoRA mode.
// Construction keeps the effective weights equal to the bases (b = 0).
void attach_adapters(MlpClassifier& model, std::size_t rank, SeededRng& rng,
                     double init_std = 0.01, double scale = 1.0);

Matrix forward(const MlpClassifier& model, const Matrix& features);

// Activations entering the head.
Matrix penultimate_features(const MlpClassifier& model, const Matrix& features);

// Pre-activation of every hidden layer, for diagnostics (e.g. checking how
// close inputs sit to the ReLU kink).
std::vector<Matrix> hidden_preactivations(const MlpClassifier& model, const Matrix& features);

struct CrossEntropy {
    double mean_loss = 0.0;
    std::vector<double> per_sample;
};

// Numerically stabilized softmax cross-entropy.
CrossEntropy cross_entropy(const Matrix& logits, const std::vector<int>& labels);

// Gradient map keyed by tensor name; keys are exactly the trainable set for
// the model's mode. `loss` is the mean loss over the subset.
struct BatchGradients {
    std::map<std::string, Matrix> tensors;
    double loss = 0.0;
};

// Gradients of the mean cross-entropy over `subset` (sample indices into
// `features`/`labels`) w.r.t. every trainable tensor. LoRA factors receive
// gradients routed through route_gradient.
BatchGradients backward_subset(const MlpClassifier& model, const Matrix& features,
                               const std::vector<int>& labels,
                               const std::vector<std::size_t>& subset);

std::vector<std::string> trainable_names(const MlpClassifier& model);
std::size_t trainable_element_count(const MlpClassifier& model);

// Pointer to a named trainable tensor, for optimizer updates. Throws on
// unknown or frozen names.
Matrix* mutable_tensor(MlpClassifier& model, const std::string& name);
const Matrix* find_tensor(const MlpClassifier& model, const std::string& name);

// Parameter accounting of the current mode (FFT counts every tensor).
ParamCountSpec param_count_spec(const MlpClassifier& model);

}  // namespace fairlora
