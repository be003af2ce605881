#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <string>

#include "bisift/descriptor.hpp"
#include "bisift/errors.hpp"
#include "byte_io.hpp"

namespace bisift {

namespace {

constexpr std::string_view kMagic = "BSFT";
constexpr std::uint16_t kVersion = 1;
constexpr std::size_t kFingerprintBytes = 16;

void write_fingerprint(detail::ByteWriter& w, const BinaryFingerprint& fp) {
  w.u64(fp.words[0]);
  w.u64(fp.words[1]);
}

void write_record(detail::ByteWriter& w, const DescriptorSet& set) {
  if (set.image_id.size() > 0xFFFF) {
    throw InvalidInputError("image id longer than 65535 bytes: " + set.image_id.substr(0, 32) + "...");
  }
  w.u16(static_cast<std::uint16_t>(set.image_id.size()));
  w.text(set.image_id);
  w.u32(static_cast<std::uint32_t>(set.count()));
  std::visit(
      [&w](const auto& rows) {
        using Row = typename std::decay_t<decltype(rows)>::value_type;
        for (const Row& row : rows) {
          if constexpr (std::is_same_v<Row, FloatDescriptor>) {
            for (float v : row) w.f32(v);
          } else if constexpr (std::is_same_v<Row, IntDescriptor>) {
            w.raw(row);
          } else {
            write_fingerprint(w, row);
          }
        }
      },
      set.descriptors);
}

struct Header {
  Dtype dtype;
  Scheme scheme;
  std::uint32_t image_count;
};

Header read_header(detail::ByteReader& r) {
  if (r.remaining() < kMagic.size()) {
    throw FormatError("not a descriptor file: shorter than the magic number");
  }
  auto magic = r.take(kMagic.size());
  if (!std::equal(magic.begin(), magic.end(), kMagic.begin())) {
    throw FormatError("bad magic: expected 'BSFT'");
  }
  const std::uint16_t version = r.u16();
  if (version != kVersion) {
    throw FormatError("unsupported descriptor file version " + std::to_string(version));
  }
  const std::uint8_t dtype = r.u8();
  if (dtype > static_cast<std::uint8_t>(Dtype::Binary128)) {
    throw FormatError("unknown dtype " + std::to_string(dtype));
  }
  const std::uint8_t reserved = r.u8();
  Header h{static_cast<Dtype>(dtype), Scheme::Bisift, 0};
  if (h.dtype == Dtype::Binary128) {
    if (reserved > static_cast<std::uint8_t>(Scheme::Percell)) {
      throw FormatError("unknown fingerprint scheme " + std::to_string(reserved));
    }
    h.scheme = static_cast<Scheme>(reserved);
  } else if (reserved != 0) {
    throw FormatError("reserved header byte must be 0, got " + std::to_string(reserved));
  }
  h.image_count = r.u32();
  return h;
}

DescriptorSet read_record(detail::ByteReader& r, const Header& h) {
  DescriptorSet set;
  const std::uint16_t id_len = r.u16();
  auto id = r.take(id_len);
  set.image_id.assign(id.begin(), id.end());
  const std::uint32_t count = r.u32();

  switch (h.dtype) {
    case Dtype::Float32: {
      r.require(static_cast<std::size_t>(count) * kDescriptorDim * sizeof(float));
      std::vector<FloatDescriptor> rows(count);
      for (auto& row : rows) {
        for (float& v : row) v = r.f32();
      }
      set.descriptors = std::move(rows);
      break;
    }
    case Dtype::Uint8: {
      r.require(static_cast<std::size_t>(count) * kDescriptorDim);
      std::vector<IntDescriptor> rows(count);
      for (auto& row : rows) {
        auto bytes = r.take(kDescriptorDim);
        std::copy(bytes.begin(), bytes.end(), row.begin());
      }
      set.descriptors = std::move(rows);
      break;
    }
    case Dtype::Binary128: {
      r.require(static_cast<std::size_t>(count) * kFingerprintBytes);
      std::vector<BinaryFingerprint> rows(count);
      for (auto& row : rows) {
        const std::size_t at = r.pos();
        row.words[0] = r.u64();
        row.words[1] = r.u64();
        row.scheme = h.scheme;
        if (h.scheme == Scheme::Bisift && row.bit(127)) {
          throw CorruptionError("BiSIFT fingerprint at byte offset " + std::to_string(at) +
                                " has its padding bit set");
        }
      }
      set.descriptors = std::move(rows);
      break;
    }
  }
  return set;
}

}  // namespace

void save_descriptors(const std::filesystem::path& path, std::span<const DescriptorSet> sets,
                      Dtype empty_dtype) {
  const Dtype dtype = sets.empty() ? empty_dtype : sets.front().dtype();
  Scheme scheme = Scheme::Bisift;
  bool scheme_known = false;

  for (const DescriptorSet& set : sets) {
    if (set.dtype() != dtype) {
      throw InvalidInputError("descriptor sets in one file must share a dtype; '" + set.image_id +
                              "' is " + to_string(set.dtype()) + ", expected " + to_string(dtype));
    }
    if (dtype != Dtype::Binary128) continue;
    for (const BinaryFingerprint& fp : std::get<std::vector<BinaryFingerprint>>(set.descriptors)) {
      if (!scheme_known) {
        scheme = fp.scheme;
        scheme_known = true;
      } else if (fp.scheme != scheme) {
        throw SchemeError("mixed fingerprint schemes in one file");
      }
    }
  }
  if (sets.size() > 0xFFFFFFFFu) throw InvalidInputError("too many images for one descriptor file");

  detail::ByteWriter w;
  w.text(kMagic);
  w.u16(kVersion);
  w.u8(static_cast<std::uint8_t>(dtype));
  w.u8(dtype == Dtype::Binary128 ? static_cast<std::uint8_t>(scheme) : 0);
  w.u32(static_cast<std::uint32_t>(sets.size()));
  for (const DescriptorSet& set : sets) write_record(w, set);
  w.write_to(path);
}

DescriptorFile read_descriptor_file(const std::filesystem::path& path) {
  const auto bytes = detail::read_file_bytes(path);
  detail::ByteReader r(bytes);
  const Header h = read_header(r);

  DescriptorFile file;
  file.dtype = h.dtype;
  file.scheme = h.scheme;
  for (std::uint32_t i = 0; i < h.image_count; ++i) {
    file.offsets.push_back(r.pos());
    file.sets.push_back(read_record(r, h));
  }
  if (!r.at_end()) {
    throw CorruptionError("trailing " + std::to_string(r.remaining()) + " bytes after last image at byte offset " +
                          std::to_string(r.pos()));
  }
  return file;
}

std::vector<DescriptorSet> load_descriptors(const std::filesystem::path& path) {
  return read_descriptor_file(path).sets;
}

std::vector<DescriptorSet> read_descriptor_sets_at(const std::filesystem::path& path,
                                                   std::span<const std::uint64_t> offsets) {
  const auto bytes = detail::read_file_bytes(path);
  detail::ByteReader header_reader(bytes);
  const Header h = read_header(header_reader);
  std::vector<DescriptorSet> sets;
  sets.reserve(offsets.size());
  for (std::uint64_t offset : offsets) {
    if (offset < header_reader.pos() || offset >= bytes.size()) {
      throw CorruptionError("record offset " + std::to_string(offset) + " outside '" + path.string() + "'");
    }
    detail::ByteReader r(bytes, static_cast<std::size_t>(offset));
    sets.push_back(read_record(r, h));
  }
  return sets;
}

DescriptorSet read_descriptor_set_at(const std::filesystem::path& path, std::uint64_t offset) {
  return read_descriptor_sets_at(path, std::span(&offset, 1)).front();
}

DescriptorSet import_text_descriptors(const std::filesystem::path& path, std::string image_id) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");

  std::vector<FloatDescriptor> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::vector<float> values;
    std::string token;
    while (fields >> token) {
      float v = 0.0f;
      auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
      if (ec != std::errc{} || ptr != token.data() + token.size()) {
        throw FormatError(path.string() + ":" + std::to_string(line_no) + ": not a number: '" + token + "'");
      }
      if (v < 0.0f) {
        throw InvalidInputError(path.string() + ":" + std::to_string(line_no) + ": negative component");
      }
      values.push_back(v);
    }
    if (values.empty()) continue;
    if (values.size() != kDescriptorDim) {
      throw DimensionError(path.string() + ":" + std::to_string(line_no) + ": expected 128 components, got " +
                           std::to_string(values.size()));
    }
    FloatDescriptor d{};
    std::copy(values.begin(), values.end(), d.begin());
    rows.push_back(d);
  }
  return DescriptorSet{std::move(image_id), std::move(rows)};
}

}  // namespace bisift
