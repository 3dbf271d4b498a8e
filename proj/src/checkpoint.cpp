#include "fxliq/neural/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace fxliq::neural {

namespace {

constexpr const char* kMagic = "fxliq-mlp";
constexpr int kVersion = 1;

void put(std::ostream& out, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  out << buf;
}

double take(std::istream& in) {
  std::string tok;
  if (!(in >> tok)) throw std::runtime_error("checkpoint: truncated parameter block");
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0')
    throw std::runtime_error("checkpoint: bad parameter token '" + tok + "'");
  return v;
}

}  // namespace

void write_mlp(std::ostream& out, const Mlp<double>& model) {
  out << kMagic << ' ' << kVersion << '\n';
  out << "dims " << model.layer_dims().size();
  for (int d : model.layer_dims()) out << ' ' << d;
  out << '\n';
  for (const auto& layer : model.layers()) {
    for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) {
        if (j) out << ' ';
        put(out, layer.weight(i, j));
      }
      out << '\n';
    }
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) {
      if (i) out << ' ';
      put(out, layer.bias(i));
    }
    out << '\n';
  }
}

Mlp<double> read_mlp(std::istream& in) {
  std::string magic, tag;
  int version = 0;
  if (!(in >> magic >> version) || magic != kMagic)
    throw std::runtime_error("checkpoint: missing fxliq-mlp header");
  if (version != kVersion)
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  std::size_t count = 0;
  if (!(in >> tag >> count) || tag != "dims" || count < 2 || count > 64)
    throw std::runtime_error("checkpoint: bad dims line");
  std::vector<int> dims(count);
  for (auto& d : dims)
    if (!(in >> d) || d < 1) throw std::runtime_error("checkpoint: bad layer width");
  auto model = Mlp<double>::zeros(dims);
  for (auto& layer : model.layers()) {
    for (Eigen::Index i = 0; i < layer.weight.rows(); ++i)
      for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) layer.weight(i, j) = take(in);
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = take(in);
  }
  return model;
}

void save_mlp(const std::filesystem::path& path, const Mlp<double>& model) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("checkpoint: cannot write " + path.string());
  write_mlp(out, model);
}

Mlp<double> load_mlp(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("checkpoint: cannot read " + path.string());
  return read_mlp(in);
}

}  // namespace fxliq::neural
