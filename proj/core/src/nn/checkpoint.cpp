#include "xform/nn/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <sstream>

#include "xform/error.hpp"
#include "xform/io.hpp"

namespace xform::nn {

namespace {

constexpr std::string_view kMagic = "XFCKPT01";

template <typename T>
void put_le(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<T>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    return v;
  }

  std::string_view take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) throw InvalidInput(std::string("checkpoint truncated while reading ") + what);
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const std::vector<NamedArray>& arrays) {
  std::string out(kMagic);
  put_le<std::uint64_t>(out, arrays.size());
  for (const auto& a : arrays) {
    if (ad::numel(a.shape) != a.values.size()) throw ShapeError("checkpoint: array '" + a.name + "' shape mismatch");
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(a.name.size()));
    out += a.name;
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(a.shape.size()));
    for (std::size_t d : a.shape) put_le<std::uint64_t>(out, d);
    for (double v : a.values) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

std::vector<NamedArray> decode_checkpoint(std::string_view bytes) {
  Reader r(bytes);
  if (r.take(kMagic.size(), "magic") != kMagic) throw InvalidInput("checkpoint: bad magic");
  const auto count = r.get<std::uint64_t>("array count");
  std::vector<NamedArray> out;
  for (std::uint64_t i = 0; i < count; ++i) {
    NamedArray a;
    const auto name_len = r.get<std::uint32_t>("name length");
    a.name = std::string(r.take(name_len, "name"));
    const auto rank = r.get<std::uint32_t>("rank");
    for (std::uint32_t d = 0; d < rank; ++d) a.shape.push_back(r.get<std::uint64_t>("dimension"));
    a.values.resize(ad::numel(a.shape));
    for (double& v : a.values) v = std::bit_cast<double>(r.get<std::uint64_t>("values"));
    out.push_back(std::move(a));
  }
  if (!r.done()) throw InvalidInput("checkpoint: trailing bytes");
  return out;
}

void write_checkpoint(const std::filesystem::path& path, const std::vector<NamedArray>& arrays) {
  io::atomic_write(path, encode_checkpoint(arrays));
}

std::vector<NamedArray> read_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(io::read_file(path));
}

std::vector<NamedArray> snapshot(const std::vector<NamedParam>& params) {
  std::vector<NamedArray> out;
  out.reserve(params.size());
  for (const auto& p : params) {
    out.push_back({p.name, p.var.shape(), std::vector<double>(p.var.values().begin(), p.var.values().end())});
  }
  return out;
}

void restore(const std::vector<NamedArray>& arrays, const std::vector<NamedParam>& params) {
  if (arrays.size() != params.size()) {
    throw InvalidInput("checkpoint holds " + std::to_string(arrays.size()) + " arrays, network has " +
                       std::to_string(params.size()) + " parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (arrays[i].name != params[i].name || arrays[i].shape != params[i].var.shape()) {
      throw InvalidInput("checkpoint array '" + arrays[i].name + "' " + ad::to_string(arrays[i].shape) +
                         " does not match parameter '" + params[i].name + "' " + ad::to_string(params[i].var.shape()));
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    ad::Var v = params[i].var;
    std::copy(arrays[i].values.begin(), arrays[i].values.end(), v.mutable_values().begin());
  }
}

void write_manifest(const std::filesystem::path& path, const std::map<std::string, std::string>& entries) {
  std::string text;
  for (const auto& [k, v] : entries) text += k + " = " + v + "\n";
  io::atomic_write(path, text);
}

std::map<std::string, std::string> read_manifest(const std::filesystem::path& path) {
  std::istringstream in(io::read_file(path));
  std::map<std::string, std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) throw InvalidInput("manifest: malformed line '" + line + "'");
    out[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return out;
}

}  // namespace xform::nn
