#include "adlabel/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <sstream>

#include <nlohmann/json.hpp>

#include "adlabel/error.hpp"

namespace adlabel {
namespace {

constexpr const char* kFormat = "adlabel-checkpoint";

template <typename T>
void append_le(std::string& out, std::span<const T> values) {
  const std::size_t start = out.size();
  out.resize(start + values.size_bytes());
  std::memcpy(out.data() + start, values.data(), values.size_bytes());
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = start; i < out.size(); i += sizeof(T)) std::reverse(out.begin() + i, out.begin() + i + sizeof(T));
  }
}

template <typename T>
void read_le(const char* bytes, std::span<T> out) {
  std::memcpy(out.data(), bytes, out.size_bytes());
  if constexpr (std::endian::native == std::endian::big) {
    auto* raw = reinterpret_cast<unsigned char*>(out.data());
    for (std::size_t i = 0; i < out.size_bytes(); i += sizeof(T)) std::reverse(raw + i, raw + i + sizeof(T));
  }
}

}  // namespace

std::string checkpoint_dtype_name(std::size_t scalar_bytes) {
  return scalar_bytes == 4 ? "f32" : "f64";
}

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor<T>>& entries) {
  nlohmann::json header;
  header["format"] = kFormat;
  header["version"] = 1;
  header["dtype"] = checkpoint_dtype_name(sizeof(T));
  header["entries"] = nlohmann::json::array();
  std::string payload;
  for (const auto& e : entries) {
    const std::size_t offset = payload.size();
    append_le<T>(payload, e.value.data());
    header["entries"].push_back({{"name", e.name},
                                 {"shape", e.value.shape()},
                                 {"offset", offset},
                                 {"nbytes", payload.size() - offset}});
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open checkpoint for writing: " + path.string());
  out << header.dump() << '\n';
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw DataError("failed writing checkpoint: " + path.string());
}

template <typename T>
std::vector<NamedTensor<T>> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path.string());
  std::string header_line;
  if (!std::getline(in, header_line)) throw DataError("empty checkpoint: " + path.string());
  std::string payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_line);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed checkpoint header in " + path.string() + ": " + e.what());
  }
  try {
    if (header.at("format") != kFormat) throw DataError("not an adlabel checkpoint: " + path.string());
    const std::string dtype = header.at("dtype");
    if (dtype != checkpoint_dtype_name(sizeof(T))) {
      throw DataError("checkpoint " + path.string() + " stores " + dtype + ", expected " +
                      checkpoint_dtype_name(sizeof(T)));
    }
    std::vector<NamedTensor<T>> out;
    for (const auto& e : header.at("entries")) {
      Shape shape = e.at("shape").get<Shape>();
      const auto offset = e.at("offset").get<std::size_t>();
      const auto nbytes = e.at("nbytes").get<std::size_t>();
      Tensor<T> value(shape);
      if (nbytes != value.size() * sizeof(T) || offset + nbytes > payload.size()) {
        throw DataError("checkpoint entry " + e.at("name").get<std::string>() + " has inconsistent size in " +
                        path.string());
      }
      read_le<T>(payload.data() + offset, value.data());
      out.push_back({e.at("name").get<std::string>(), std::move(value)});
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed checkpoint header in " + path.string() + ": " + e.what());
  }
}

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path.string());
  std::uint64_t h = 1469598103934665603ULL;
  char buf[1 << 14];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

template void save_checkpoint<float>(const std::filesystem::path&, const std::vector<NamedTensor<float>>&);
template void save_checkpoint<double>(const std::filesystem::path&, const std::vector<NamedTensor<double>>&);
template std::vector<NamedTensor<float>> load_checkpoint<float>(const std::filesystem::path&);
template std::vector<NamedTensor<double>> load_checkpoint<double>(const std::filesystem::path&);

}  // namespace adlabel
