#pragma once

#include "fxliq/neural/mlp.hpp"

#include <filesystem>
#include <iosfwd>
#include <vector>

namespace fxliq::neural {

// Text checkpoint: a `fxliq-mlp 1` header, the layer widths, then every
// layer's weights (row-major) and biases as hex floats. Round trips are exact.
void write_mlp(std::ostream& out, const Mlp<double>& model);
Mlp<double> read_mlp(std::istream& in);

void save_mlp(const std::filesystem::path& path, const Mlp<double>& model);
Mlp<double> load_mlp(const std::filesystem::path& path);

}  // namespace fxliq::neural
