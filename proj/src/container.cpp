#include "psar/container.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace psar {

namespace {

constexpr char kMagic[5] = {'S', 'A', 'R', 'P', '1'};

const char* dtype_name(Blob::Dtype d) { return d == Blob::Dtype::f64 ? "f64" : "c128"; }

Blob::Dtype parse_dtype(const std::string& s) {
  if (s == "f64") return Blob::Dtype::f64;
  if (s == "c128") return Blob::Dtype::c128;
  throw FormatError("SARP1: unknown dtype '" + s + "'");
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

double get_f64(const std::uint8_t* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

std::int64_t Blob::element_count() const {
  std::int64_t n = 1;
  for (auto s : shape) n *= s;
  return n;
}

void Container::add(Blob blob) {
  if (contains(blob.name)) throw InvalidArgument("SARP1: duplicate blob '" + blob.name + "'");
  const std::int64_t per = blob.dtype == Blob::Dtype::c128 ? 2 : 1;
  require(static_cast<std::int64_t>(blob.data.size()) == blob.element_count() * per,
          "SARP1: blob '" + blob.name + "' data does not match its shape");
  blobs_.push_back(std::move(blob));
}

void Container::add_real(const std::string& name, const RVec& v) {
  add({name, {v.size()}, Blob::Dtype::f64, std::vector<double>(v.data(), v.data() + v.size())});
}

void Container::add_real(const std::string& name, std::vector<std::int64_t> shape,
                         std::vector<double> data) {
  add({name, std::move(shape), Blob::Dtype::f64, std::move(data)});
}

void Container::add_complex(const std::string& name, const CVec& v) {
  std::vector<double> data;
  data.reserve(2 * v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    data.push_back(v[i].real());
    data.push_back(v[i].imag());
  }
  add({name, {v.size()}, Blob::Dtype::c128, std::move(data)});
}

bool Container::contains(const std::string& name) const {
  return std::any_of(blobs_.begin(), blobs_.end(), [&](const Blob& b) { return b.name == name; });
}

const Blob& Container::blob(const std::string& name) const {
  for (const auto& b : blobs_)
    if (b.name == name) return b;
  throw FormatError("SARP1: missing blob '" + name + "'");
}

RVec Container::real(const std::string& name) const {
  const Blob& b = blob(name);
  if (b.dtype != Blob::Dtype::f64) throw FormatError("SARP1: blob '" + name + "' is not f64");
  return Eigen::Map<const RVec>(b.data.data(), static_cast<Eigen::Index>(b.data.size()));
}

CVec Container::complex(const std::string& name) const {
  const Blob& b = blob(name);
  if (b.dtype != Blob::Dtype::c128) throw FormatError("SARP1: blob '" + name + "' is not c128");
  CVec v(static_cast<Eigen::Index>(b.data.size() / 2));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = Complex(b.data[2 * i], b.data[2 * i + 1]);
  return v;
}

std::vector<std::uint8_t> encode_container(const Container& c) {
  nlohmann::json header = c.meta;
  nlohmann::json index = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& b : c.blobs()) {
    const std::uint64_t bytes = 8 * b.data.size();
    index.push_back({{"name", b.name},
                     {"offset", offset},
                     {"bytes", bytes},
                     {"shape", b.shape},
                     {"dtype", dtype_name(b.dtype)}});
    offset += bytes;
  }
  header["blobs"] = std::move(index);
  const std::string text = header.dump();

  std::vector<std::uint8_t> out;
  out.reserve(9 + text.size() + offset);
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  for (const auto& b : c.blobs())
    for (double v : b.data) put_f64(out, v);
  return out;
}

Container decode_container(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 9 || std::memcmp(bytes.data(), kMagic, 5) != 0)
    throw FormatError("SARP1: bad magic");
  std::uint32_t header_len = 0;
  for (int i = 0; i < 4; ++i) header_len |= static_cast<std::uint32_t>(bytes[5 + i]) << (8 * i);
  if (9 + static_cast<std::uint64_t>(header_len) > bytes.size())
    throw FormatError("SARP1: header length exceeds file size");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + 9, bytes.begin() + 9 + header_len);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("SARP1: malformed header: ") + e.what());
  }
  if (!header.is_object() || !header.contains("blobs") || !header["blobs"].is_array())
    throw FormatError("SARP1: header lacks a blob index");

  const std::uint64_t data_start = 9 + static_cast<std::uint64_t>(header_len);
  const std::uint64_t data_len = bytes.size() - data_start;

  Container c;
  try {
    for (const auto& entry : header["blobs"]) {
      Blob b;
      b.name = entry.at("name").get<std::string>();
      b.shape = entry.at("shape").get<std::vector<std::int64_t>>();
      b.dtype = parse_dtype(entry.at("dtype").get<std::string>());
      const auto offset = entry.at("offset").get<std::uint64_t>();
      const auto nbytes = entry.at("bytes").get<std::uint64_t>();
      const std::int64_t per = b.dtype == Blob::Dtype::c128 ? 2 : 1;
      if (nbytes % 8 != 0 || offset > data_len || nbytes > data_len - offset)
        throw FormatError("SARP1: blob '" + b.name + "' exceeds file size");
      if (static_cast<std::int64_t>(nbytes / 8) != b.element_count() * per)
        throw FormatError("SARP1: blob '" + b.name + "' length does not match its shape");
      b.data.resize(nbytes / 8);
      const std::uint8_t* p = bytes.data() + data_start + offset;
      for (size_t i = 0; i < b.data.size(); ++i) b.data[i] = get_f64(p + 8 * i);
      c.add(std::move(b));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("SARP1: malformed blob index: ") + e.what());
  }
  header.erase("blobs");
  c.meta = std::move(header);
  return c;
}

void write_container(const std::filesystem::path& path, const Container& c) {
  const auto bytes = encode_container(c);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

Container read_container(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_container(bytes);
}

}  // namespace psar
