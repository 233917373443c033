#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "psar/types.hpp"

namespace psar {

/// SARP1 container: "SARP1", u32 LE header length, UTF-8 JSON header, then
/// raw little-endian f64 blobs. Complex blobs are interleaved (re, im).
struct Blob {
  enum class Dtype { f64, c128 };

  std::string name;
  std::vector<std::int64_t> shape;
  Dtype dtype = Dtype::f64;
  std::vector<double> data;  // interleaved for c128

  std::int64_t element_count() const;
};

class Container {
public:
  nlohmann::json meta = nlohmann::json::object();

  void add(Blob blob);
  void add_real(const std::string& name, const RVec& v);
  void add_real(const std::string& name, std::vector<std::int64_t> shape, std::vector<double> data);
  void add_complex(const std::string& name, const CVec& v);

  bool contains(const std::string& name) const;
  const Blob& blob(const std::string& name) const;
  RVec real(const std::string& name) const;
  CVec complex(const std::string& name) const;

  const std::vector<Blob>& blobs() const { return blobs_; }

private:
  std::vector<Blob> blobs_;
};

std::vector<std::uint8_t> encode_container(const Container& c);
Container decode_container(const std::vector<std::uint8_t>& bytes);

void write_container(const std::filesystem::path& path, const Container& c);
Container read_container(const std::filesystem::path& path);

}  // namespace psar
