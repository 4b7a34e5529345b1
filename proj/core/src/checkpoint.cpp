#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "syncdiff/error.hpp"
#include "syncdiff/mlp.hpp"

namespace syncdiff {
namespace {

constexpr char kMagic[4] = {'S', 'D', 'M', '1'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

void put_f32(std::string& out, double v) {
  put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    if (pos_ + 4 > bytes_.size()) throw FormatError("checkpoint: truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }
  double f32() { return static_cast<double>(std::bit_cast<float>(u32())); }
  bool done() const { return pos_ == bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const std::vector<DenseLayer>& layers) {
  std::string out(kMagic, sizeof kMagic);
  put_u32(out, static_cast<std::uint32_t>(layers.size()));
  for (const DenseLayer& l : layers) {
    put_u32(out, static_cast<std::uint32_t>(l.inputs));
    put_u32(out, static_cast<std::uint32_t>(l.outputs));
  }
  for (const DenseLayer& l : layers) {
    for (double w : l.weights) put_f32(out, w);
    for (double b : l.bias) put_f32(out, b);
  }
  return out;
}

std::vector<DenseLayer> decode_checkpoint(std::string_view bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("checkpoint: missing SDM1 magic");
  }
  Reader in(bytes.substr(4));
  const std::uint32_t count = in.u32();
  if (count > in.remaining() / 8) throw FormatError("checkpoint: truncated layer table");
  std::vector<DenseLayer> layers(count);
  std::uint64_t floats = 0;
  for (DenseLayer& l : layers) {
    l.inputs = in.u32();
    l.outputs = in.u32();
    floats += static_cast<std::uint64_t>(l.inputs) * l.outputs + l.outputs;
  }
  if (floats * 4 != in.remaining()) throw FormatError("checkpoint: payload size mismatch");
  for (DenseLayer& l : layers) {
    l.weights.resize(l.inputs * l.outputs);
    l.bias.resize(l.outputs);
    for (double& w : l.weights) w = in.f32();
    for (double& b : l.bias) b = in.f32();
  }
  if (!in.done()) throw FormatError("checkpoint: trailing bytes");
  return layers;
}

void save_checkpoint(const MlpDenoiser& model, const std::string& path) {
  const std::string bytes = encode_checkpoint(model.layers());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("failed writing '" + path + "'");
}

MlpDenoiser load_checkpoint(const std::string& path, Shape grid_shape) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint '" + path + "'");
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return MlpDenoiser(grid_shape, decode_checkpoint(bytes));
}

}  // namespace syncdiff
