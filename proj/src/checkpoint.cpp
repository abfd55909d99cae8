#include <cmath>
#include <fstream>
#include <string>

#include "binary_io.hpp"
#include "keynet/error.hpp"
#include "keynet/model.hpp"

namespace keynet {

namespace {
constexpr std::uint32_t kCheckpointVersion = 1;
constexpr std::uint32_t kMaxRank = 8;
}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params) {
  params.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create " + path.string());
  out.write("KNET", 4);
  detail::write_u32(out, kCheckpointVersion);
  detail::write_u32(out, static_cast<std::uint32_t>(params.bands()));
  detail::write_u8(out, kFlattenBandMajor);
  for (const Tensor* t : params.tensors()) {
    detail::write_u32(out, static_cast<std::uint32_t>(t->rank()));
    for (std::size_t d : t->shape()) detail::write_u32(out, static_cast<std::uint32_t>(d));
    for (float v : t->values()) detail::write_f32(out, v);
  }
  if (!out) throw IoError("write failed: " + path.string());
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string what = "checkpoint " + path.string();
  detail::expect_magic(in, "KNET", what);
  const std::uint32_t version = detail::read_u32(in, what);
  if (version != kCheckpointVersion) {
    throw UnsupportedFormat(what + ": unsupported version " + std::to_string(version));
  }
  const std::uint32_t bands = detail::read_u32(in, what);
  const std::uint8_t order = detail::read_u8(in, what);
  if (order != kFlattenBandMajor) {
    throw UnsupportedFormat(what + ": unknown flatten order " + std::to_string(order));
  }

  std::vector<Tensor> tensors;
  while (in.peek() != std::char_traits<char>::eof()) {
    const std::uint32_t rank = detail::read_u32(in, what);
    if (rank == 0 || rank > kMaxRank) throw FormatError(what + ": bad tensor rank");
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = detail::read_u32(in, what);
    std::vector<float> data(Tensor::element_count(shape));
    for (float& v : data) {
      v = detail::read_f32(in, what);
      if (!std::isfinite(v)) throw FormatError(what + ": non-finite parameter");
    }
    tensors.emplace_back(std::move(shape), std::move(data));
  }
  if (tensors.size() < 6 || (tensors.size() - 4) % 2 != 0) {
    throw FormatError(what + ": unexpected tensor count " + std::to_string(tensors.size()));
  }

  ModelParams p;
  const std::size_t conv_layers = (tensors.size() - 4) / 2;
  for (std::size_t i = 0; i < conv_layers; ++i) {
    p.conv.push_back({std::move(tensors[2 * i]), std::move(tensors[2 * i + 1])});
  }
  std::size_t base = 2 * conv_layers;
  p.dense_weight = std::move(tensors[base]);
  p.dense_bias = std::move(tensors[base + 1]);
  p.out_weight = std::move(tensors[base + 2]);
  p.out_bias = std::move(tensors[base + 3]);
  try {
    p.validate();
  } catch (const ShapeError& e) {
    throw FormatError(what + ": " + e.what());
  }
  if (p.bands() != bands) {
    throw FormatError(what + ": header band count " + std::to_string(bands) +
                      " disagrees with dense layer");
  }
  return p;
}

}  // namespace keynet
