#include "hakg/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include "hakg/error.hpp"

namespace hakg::model {

namespace {

constexpr std::string_view kMagic = "HKGM";

template <typename T>
void put(std::string& buf, T v) {
  static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");
  char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  buf.append(bytes, sizeof(T));
}

class Reader {
 public:
  Reader(std::string data, std::string source) : data_(std::move(data)), source_(std::move(source)) {}

  template <typename T>
  T get(const char* what) {
    if (data_.size() - pos_ < sizeof(T)) throw FormatError(source_ + ": truncated while reading " + what);
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string bytes(std::size_t n, const char* what) {
    if (data_.size() - pos_ < n) throw FormatError(source_ + ": truncated while reading " + what);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == data_.size(); }
  const std::string& source() const { return source_; }

 private:
  std::string data_;
  std::string source_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const nn::ParamStore& params, Variant variant, const Dimensions& dims,
                     const std::filesystem::path& path) {
  std::string buf(kMagic);
  put<std::uint32_t>(buf, kCheckpointVersion);
  put<std::uint8_t>(buf, static_cast<std::uint8_t>(variant));
  for (std::size_t d : {dims.entity, dims.type, dims.relation, dims.attention, dims.heads, dims.layers}) {
    put<std::uint32_t>(buf, static_cast<std::uint32_t>(d));
  }
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params.parameters()) {
    if (p.name.size() > std::numeric_limits<std::uint16_t>::max()) throw FormatError("parameter name too long");
    put<std::uint16_t>(buf, static_cast<std::uint16_t>(p.name.size()));
    buf += p.name;
    put<std::uint8_t>(buf, static_cast<std::uint8_t>(p.value.rank()));
    for (std::size_t d : p.value.shape()) put<std::uint32_t>(buf, static_cast<std::uint32_t>(d));
    for (double v : p.value.values()) put<double>(buf, v);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write checkpoint " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw FormatError("write failed for checkpoint " + path.string());
}

void save_checkpoint(const HakgModel& model, const std::filesystem::path& path) {
  save_checkpoint(model.params(), model.shape().variant, model.shape().dims, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("checkpoint not found: " + path.string());
  Reader r(std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>()), path.string());
  if (r.bytes(kMagic.size(), "magic") != kMagic) throw FormatError(path.string() + ": bad magic, not a checkpoint");
  if (auto v = r.get<std::uint32_t>("version"); v != kCheckpointVersion) {
    throw FormatError(path.string() + ": unsupported checkpoint version " + std::to_string(v));
  }
  Checkpoint ck;
  auto variant = r.get<std::uint8_t>("variant");
  if (variant >= all_variants().size()) throw FormatError(path.string() + ": unknown variant id " + std::to_string(variant));
  ck.variant = static_cast<Variant>(variant);
  ck.dims.entity = r.get<std::uint32_t>("d_e");
  ck.dims.type = r.get<std::uint32_t>("d_t");
  ck.dims.relation = r.get<std::uint32_t>("d_r");
  ck.dims.attention = r.get<std::uint32_t>("d_a");
  ck.dims.heads = r.get<std::uint32_t>("m");
  ck.dims.layers = r.get<std::uint32_t>("L");
  const auto count = r.get<std::uint32_t>("parameter count");
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto len = r.get<std::uint16_t>("name length");
    std::string name = r.bytes(len, "parameter name");
    const auto rank = r.get<std::uint8_t>("rank");
    if (rank < 1 || rank > 2) throw FormatError(path.string() + ": parameter '" + name + "' has unsupported rank");
    nn::Shape shape(rank);
    std::size_t n = 1;
    for (auto& d : shape) {
      d = r.get<std::uint32_t>("dimension");
      n *= d;
    }
    nn::Tensor t(shape);
    if (t.size() != n) throw FormatError(path.string() + ": inconsistent size for '" + name + "'");
    for (double& v : t.values()) v = r.get<double>("parameter values");
    if (ck.params.contains(name)) throw FormatError(path.string() + ": duplicate parameter '" + name + "'");
    ck.params.add(std::move(name), std::move(t));
  }
  if (!r.done()) throw FormatError(path.string() + ": trailing bytes after the last parameter");
  return ck;
}

HakgModel restore_model(Checkpoint checkpoint, const ModelShape& expected) {
  check_layout(checkpoint.params, expected);
  if (checkpoint.variant != expected.variant) {
    throw FormatError("checkpoint variant " + std::string(variant_name(checkpoint.variant)) + " does not match " +
                      std::string(variant_name(expected.variant)));
  }
  if (!(checkpoint.dims == expected.dims)) throw FormatError("checkpoint dimensions do not match the configuration");
  return HakgModel(expected, std::move(checkpoint.params));
}

}  // namespace hakg::model
