#pragma once

// TensorFile: a text header of `key: value` lines ended by a blank line,
// followed by little-endian float32 data in row-major order.
//
//   magic: POLARTOF1
//   dtype: f32
//   shape: 32 32 256 4 4
//   units: ...
//   bin_width: 2.5e-11
//   endianness: LE
//   <extra keys>
//   <blank line>
//   <payload>

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "polartof/error.hpp"
#include "polartof/render/types.hpp"

namespace polartof {

inline constexpr const char* kTensorMagic = "POLARTOF1";

struct TensorFile {
  std::vector<std::int64_t> shape;
  std::string units = "1";
  double bin_width = 0.0;
  std::map<std::string, std::string> extra;
  std::vector<float> data;

  std::size_t count() const {
    std::size_t n = 1;
    for (auto s : shape) n *= static_cast<std::size_t>(s);
    return n;
  }
};

namespace detail {
inline std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}
}  // namespace detail

inline void write_tensor(const std::filesystem::path& path, const TensorFile& file) {
  if (file.data.size() != file.count()) throw Error(ErrorCode::ShapeMismatch, "tensor payload does not match its shape");
  static const char* reserved[] = {"magic", "dtype", "shape", "units", "bin_width", "endianness"};
  std::ostringstream header;
  header << "magic: " << kTensorMagic << "\n";
  header << "dtype: f32\n";
  header << "shape:";
  for (auto s : file.shape) header << ' ' << s;
  header << "\nunits: " << file.units << "\n";
  header << "bin_width: " << detail::format_double(file.bin_width) << "\n";
  header << "endianness: LE\n";
  for (const auto& [k, v] : file.extra) {
    for (const char* r : reserved)
      if (k == r) throw Error(ErrorCode::InvalidParam, "extra header key collides with a reserved key: " + k);
    if (k.find_first_of(":\n") != std::string::npos || v.find('\n') != std::string::npos || k.empty())
      throw Error(ErrorCode::InvalidParam, "malformed tensor header entry: " + k);
    header << k << ": " << v << "\n";
  }
  header << "\n";

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open for writing: " + path.string());
  const std::string h = header.str();
  out.write(h.data(), static_cast<std::streamsize>(h.size()));
  std::vector<unsigned char> bytes(file.data.size() * 4);
  for (std::size_t i = 0; i < file.data.size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(file.data[i]);
    for (int b = 0; b < 4; ++b) bytes[4 * i + b] = static_cast<unsigned char>((bits >> (8 * b)) & 0xFFu);
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

inline TensorFile read_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open for reading: " + path.string());
  std::map<std::string, std::string> header;
  std::string line;
  bool terminated = false;
  while (std::getline(in, line)) {
    if (line.empty()) {
      terminated = true;
      break;
    }
    const auto colon = line.find(':');
    if (colon == std::string::npos) throw Error(ErrorCode::Io, "malformed header line in " + path.string());
    std::string value = line.substr(colon + 1);
    value.erase(0, value.find_first_not_of(' '));
    header[line.substr(0, colon)] = value;
  }
  if (!terminated) throw Error(ErrorCode::Io, "tensor header is not terminated: " + path.string());
  auto take = [&](const std::string& key) {
    const auto it = header.find(key);
    if (it == header.end()) throw Error(ErrorCode::Io, "tensor header lacks '" + key + "': " + path.string());
    std::string v = it->second;
    header.erase(it);
    return v;
  };
  if (take("magic") != kTensorMagic) throw Error(ErrorCode::Io, "not a POLARTOF1 tensor: " + path.string());
  if (take("dtype") != "f32") throw Error(ErrorCode::Io, "unsupported dtype in " + path.string());
  if (take("endianness") != "LE") throw Error(ErrorCode::Io, "unsupported endianness in " + path.string());

  TensorFile file;
  std::istringstream shape(take("shape"));
  std::int64_t dim = 0;
  while (shape >> dim) {
    if (dim < 0) throw Error(ErrorCode::Io, "negative dimension in " + path.string());
    file.shape.push_back(dim);
  }
  if (!shape.eof()) throw Error(ErrorCode::Io, "malformed shape in " + path.string());
  file.units = take("units");
  try {
    file.bin_width = std::stod(take("bin_width"));
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::Io, "malformed bin_width in " + path.string());
  }
  file.extra = std::move(header);

  const std::size_t n = file.count();
  std::vector<unsigned char> bytes(n * 4);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (static_cast<std::size_t>(in.gcount()) != bytes.size())
    throw Error(ErrorCode::Io, "tensor payload is shorter than its shape: " + path.string());
  if (in.peek() != std::char_traits<char>::eof())
    throw Error(ErrorCode::Io, "tensor payload is longer than its shape: " + path.string());
  file.data.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(bytes[4 * i + b]) << (8 * b);
    file.data[i] = std::bit_cast<float>(bits);
  }
  return file;
}

inline std::vector<float> to_f32(const std::vector<double>& v) { return {v.begin(), v.end()}; }

inline void write_cube(const std::filesystem::path& path, const TransientMuellerCube& cube) {
  TensorFile f;
  f.shape = {cube.height, cube.width, cube.num_bins, 4, 4};
  f.units = "mueller";
  f.bin_width = cube.bin_width;
  f.data = to_f32(cube.data);
  write_tensor(path, f);
}

inline TransientMuellerCube read_cube(const std::filesystem::path& path) {
  const TensorFile f = read_tensor(path);
  if (f.shape.size() != 5 || f.shape[3] != 4 || f.shape[4] != 4)
    throw Error(ErrorCode::ShapeMismatch, "expected a [H, W, T, 4, 4] cube: " + path.string());
  TransientMuellerCube cube(static_cast<int>(f.shape[0]), static_cast<int>(f.shape[1]), static_cast<int>(f.shape[2]),
                            f.bin_width);
  cube.data.assign(f.data.begin(), f.data.end());
  return cube;
}

inline void write_captures(const std::filesystem::path& path, const CaptureStack& stack) {
  TensorFile f;
  f.shape = {stack.n, stack.height, stack.width, stack.num_bins};
  f.units = "intensity";
  f.bin_width = stack.bin_width;
  if (!stack.schedule_ref.empty()) f.extra["schedule"] = stack.schedule_ref;
  f.data = to_f32(stack.data);
  write_tensor(path, f);
}

inline CaptureStack read_captures(const std::filesystem::path& path) {
  const TensorFile f = read_tensor(path);
  if (f.shape.size() != 4) throw Error(ErrorCode::ShapeMismatch, "expected an [N, H, W, T] capture stack: " + path.string());
  CaptureStack stack(static_cast<int>(f.shape[0]), static_cast<int>(f.shape[1]), static_cast<int>(f.shape[2]),
                     static_cast<int>(f.shape[3]), f.bin_width);
  if (const auto it = f.extra.find("schedule"); it != f.extra.end()) stack.schedule_ref = it->second;
  stack.data.assign(f.data.begin(), f.data.end());
  return stack;
}

}  // namespace polartof
