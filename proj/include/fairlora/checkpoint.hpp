#pragma once

#include <string>

#include "fairlora/model.hpp"

namespace fairlora {

// Textual checkpoint: base weights stored once per layer, adapters as
// (rank, scale, A, B). Values render in shortest round-trip form, so
// save -> load reproduces every double bit-exactly.
void save_checkpoint(const MlpClassifier& model, const std::string& path);
MlpClassifier load_checkpoint(const std::string& path);

}  // namespace fairlora
