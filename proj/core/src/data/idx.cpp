#include "xform/data/idx.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "xform/error.hpp"
#include "xform/io.hpp"

namespace xform::data {

namespace {

std::string hex32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%08X", v);
  return buf;
}

class Reader {
 public:
  Reader(std::string_view bytes, std::string what) : bytes_(bytes), what_(std::move(what)) {}

  std::uint32_t u32(std::string_view field) {
    if (bytes_.size() - pos_ < 4) {
      throw InvalidInput("idx " + what_ + ": header truncated reading " + std::string(field));
    }
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v = (v << 8) | static_cast<unsigned char>(bytes_[pos_++]);
    return v;
  }

  std::string_view payload(std::size_t expected) {
    const std::size_t have = bytes_.size() - pos_;
    if (have < expected) {
      throw InvalidInput("idx " + what_ + ": payload truncated, expected " + std::to_string(expected) +
                         " bytes, found " + std::to_string(have));
    }
    if (have > expected) {
      throw InvalidInput("idx " + what_ + ": " + std::to_string(have - expected) + " trailing bytes after payload");
    }
    return bytes_.substr(pos_, expected);
  }

 private:
  std::string_view bytes_;
  std::string what_;
  std::size_t pos_ = 0;
};

void put_u32(std::string& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<char>((v >> shift) & 0xFF));
}

}  // namespace

LabeledImageSet parse_idx(std::string_view image_bytes, std::string_view label_bytes) {
  Reader images(image_bytes, "images");
  const std::uint32_t magic = images.u32("magic");
  if (magic != kIdxImagesMagic && magic != kIdxColorImagesMagic) {
    throw InvalidInput("idx images: magic number " + hex32(magic) + " (expected " + hex32(kIdxImagesMagic) +
                       " or " + hex32(kIdxColorImagesMagic) + ")");
  }
  LabeledImageSet out;
  const std::uint32_t n = images.u32("count");
  out.channels = magic == kIdxColorImagesMagic ? images.u32("channels") : 1;
  out.height = images.u32("rows");
  out.width = images.u32("columns");
  auto pix = images.payload(static_cast<std::size_t>(n) * out.image_size());

  Reader labels(label_bytes, "labels");
  const std::uint32_t lmagic = labels.u32("magic");
  if (lmagic != kIdxLabelsMagic) {
    throw InvalidInput("idx labels: magic number " + hex32(lmagic) + " (expected " + hex32(kIdxLabelsMagic) + ")");
  }
  const std::uint32_t ln = labels.u32("count");
  if (ln != n) {
    throw InvalidInput("idx: count mismatch, images header count " + std::to_string(n) + " vs labels header count " +
                       std::to_string(ln));
  }
  auto lab = labels.payload(ln);

  out.pixels.resize(pix.size());
  std::transform(pix.begin(), pix.end(), out.pixels.begin(),
                 [](char c) { return static_cast<double>(static_cast<unsigned char>(c)) / 255.0; });
  out.labels.resize(ln);
  int max_label = -1;
  for (std::size_t i = 0; i < ln; ++i) {
    out.labels[i] = static_cast<unsigned char>(lab[i]);
    max_label = std::max(max_label, out.labels[i]);
  }
  out.num_classes = static_cast<std::size_t>(max_label + 1);
  return out;
}

LabeledImageSet load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
  return parse_idx(io::read_file(images_path), io::read_file(labels_path));
}

std::string encode_idx_images(const LabeledImageSet& data) {
  std::string out;
  const bool color = data.channels != 1;
  put_u32(out, color ? kIdxColorImagesMagic : kIdxImagesMagic);
  put_u32(out, static_cast<std::uint32_t>(data.size()));
  if (color) put_u32(out, static_cast<std::uint32_t>(data.channels));
  put_u32(out, static_cast<std::uint32_t>(data.height));
  put_u32(out, static_cast<std::uint32_t>(data.width));
  out.reserve(out.size() + data.pixels.size());
  for (double v : data.pixels) {
    const double b = std::clamp(std::round(v * 255.0), 0.0, 255.0);
    out.push_back(static_cast<char>(static_cast<unsigned char>(b)));
  }
  return out;
}

std::string encode_idx_labels(const LabeledImageSet& data) {
  std::string out;
  put_u32(out, kIdxLabelsMagic);
  put_u32(out, static_cast<std::uint32_t>(data.size()));
  for (int label : data.labels) {
    if (label < 0 || label > 255) throw InvalidInput("idx labels: label " + std::to_string(label) + " not a byte");
    out.push_back(static_cast<char>(static_cast<unsigned char>(label)));
  }
  return out;
}

void write_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
               const LabeledImageSet& data) {
  io::atomic_write(images_path, encode_idx_images(data));
  io::atomic_write(labels_path, encode_idx_labels(data));
}

}  // namespace xform::data
