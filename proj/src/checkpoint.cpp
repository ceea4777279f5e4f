#include "nco/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace nco {
namespace {

// Host is assumed little-endian (x86/ARM64); raw f64 writes round-trip.
static_assert(std::endian::native == std::endian::little, "checkpoint format is little-endian");

template <typename T>
void put(std::ostream& os, T x) {
  os.write(reinterpret_cast<const char*>(&x), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T x{};
  is.read(reinterpret_cast<char*>(&x), sizeof(T));
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return x;
}

void put_string(std::ostream& os, const std::string& s) {
  put<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& is) {
  auto n = get<std::uint32_t>(is);
  std::string s(n, '\0');
  is.read(s.data(), n);
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return s;
}

void put_tensor_data(std::ostream& os, const Tensor& t) {
  os.write(reinterpret_cast<const char*>(t.data.data()),
           static_cast<std::streamsize>(t.data.size() * sizeof(double)));
}

void get_tensor_data(std::istream& is, Tensor& t) {
  is.read(reinterpret_cast<char*>(t.data.data()),
          static_cast<std::streamsize>(t.data.size() * sizeof(double)));
  if (!is) throw std::runtime_error("checkpoint: truncated file");
}

}  // namespace

void save_checkpoint(const std::string& path, const ParamStore& params, const AdamState* adam) {
  std::filesystem::path target(path);
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("checkpoint: cannot open " + tmp.string());
    put<std::uint32_t>(os, kCheckpointVersion);
    put<std::uint32_t>(os, adam ? 1u : 0u);
    put<std::uint64_t>(os, params.count());
    for (const auto& e : params.entries()) {
      put_string(os, e.name);
      put<std::uint32_t>(os, static_cast<std::uint32_t>(e.value.shape.size()));
      for (int ext : e.value.shape) put<std::uint64_t>(os, static_cast<std::uint64_t>(ext));
      put_tensor_data(os, e.value);
    }
    if (adam) {
      put<std::int64_t>(os, adam->step);
      put<double>(os, adam->base_lr);
      put<double>(os, adam->beta1);
      put<double>(os, adam->beta2);
      put<double>(os, adam->eps);
      put<std::int64_t>(os, adam->decay_interval);
      put<double>(os, adam->decay_factor);
      for (const auto& t : adam->m) put_tensor_data(os, t);
      for (const auto& t : adam->v) put_tensor_data(os, t);
    }
    if (!os) throw std::runtime_error("checkpoint: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, target);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
  auto version = get<std::uint32_t>(is);
  if (version != kCheckpointVersion)
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  auto has_adam = get<std::uint32_t>(is);
  auto n = get<std::uint64_t>(is);
  Checkpoint ck;
  for (std::uint64_t p = 0; p < n; ++p) {
    std::string name = get_string(is);
    auto ndim = get<std::uint32_t>(is);
    std::vector<int> shape;
    for (std::uint32_t i = 0; i < ndim; ++i) shape.push_back(static_cast<int>(get<std::uint64_t>(is)));
    Tensor t = Tensor::zeros(shape);
    get_tensor_data(is, t);
    ck.params.add(name, std::move(t));
  }
  if (has_adam) {
    AdamState s;
    s.step = get<std::int64_t>(is);
    s.base_lr = get<double>(is);
    s.beta1 = get<double>(is);
    s.beta2 = get<double>(is);
    s.eps = get<double>(is);
    s.decay_interval = get<std::int64_t>(is);
    s.decay_factor = get<double>(is);
    for (const auto& e : ck.params.entries()) {
      Tensor t = Tensor::zeros(e.value.shape);
      get_tensor_data(is, t);
      s.m.push_back(std::move(t));
    }
    for (const auto& e : ck.params.entries()) {
      Tensor t = Tensor::zeros(e.value.shape);
      get_tensor_data(is, t);
      s.v.push_back(std::move(t));
    }
    ck.adam = std::move(s);
  }
  return ck;
}

}  // namespace nco
