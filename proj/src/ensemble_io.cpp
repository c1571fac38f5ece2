#include <cstring>
#include <fstream>

#include "stablelike/error.hpp"
#include "stablelike/sampler.hpp"

// Little-endian layout:
//   "SLPE" u32 version u32 dim u64 n_paths u64 grid_len f64[grid_len] grid
//   u64 seed u32 channel f64 delta f64 truncation_l2 u32 method_len bytes method
//   f64[n*grid_len*dim] states f64[n*(grid_len-1)*dim] continuous increments
//   u64[n+1] jump offsets, then for J jumps: f64[J] times u32[J] steps f64[J*dim] values

namespace stablelike {

namespace {
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ofstream& o, const T& v) {
  o.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
void put_vec(std::ofstream& o, const std::vector<T>& v) {
  if (!v.empty()) o.write(reinterpret_cast<const char*>(v.data()), std::streamsize(v.size() * sizeof(T)));
}
template <class T>
T get(std::ifstream& i) {
  T v;
  if (!i.read(reinterpret_cast<char*>(&v), sizeof(T))) throw InvalidInput("ensemble file truncated");
  return v;
}
template <class T>
void get_vec(std::ifstream& i, std::vector<T>& v, std::size_t n) {
  v.resize(n);
  if (n && !i.read(reinterpret_cast<char*>(v.data()), std::streamsize(n * sizeof(T))))
    throw InvalidInput("ensemble file truncated");
}
}  // namespace

void write_ensemble(const PathEnsemble& e, const std::string& path) {
  std::ofstream o(path, std::ios::binary);
  if (!o) throw InvalidInput("cannot open " + path + " for writing");
  o.write("SLPE", 4);
  put(o, kVersion);
  put(o, std::uint32_t(e.dim));
  put(o, std::uint64_t(e.n_paths));
  put(o, std::uint64_t(e.grid.size()));
  put_vec(o, e.grid);
  put(o, e.seed);
  put(o, e.channel);
  put(o, e.delta);
  put(o, e.truncation_l2);
  put(o, std::uint32_t(e.method.size()));
  o.write(e.method.data(), std::streamsize(e.method.size()));
  put_vec(o, e.states);
  put_vec(o, e.cont);
  std::vector<std::uint64_t> off(e.jump_offsets.begin(), e.jump_offsets.end());
  put_vec(o, off);
  put_vec(o, e.jump_times);
  put_vec(o, e.jump_steps);
  put_vec(o, e.jump_values);
  if (!o) throw InvalidInput("write failed for " + path);
}

PathEnsemble read_ensemble(const std::string& path) {
  std::ifstream i(path, std::ios::binary);
  if (!i) throw InvalidInput("cannot open " + path);
  char magic[4];
  if (!i.read(magic, 4) || std::memcmp(magic, "SLPE", 4) != 0) throw InvalidInput("not an ensemble file");
  if (get<std::uint32_t>(i) != kVersion) throw InvalidInput("unsupported ensemble version");
  PathEnsemble e;
  e.dim = int(get<std::uint32_t>(i));
  e.n_paths = get<std::uint64_t>(i);
  auto g = get<std::uint64_t>(i);
  get_vec(i, e.grid, g);
  e.seed = get<std::uint64_t>(i);
  e.channel = get<std::uint32_t>(i);
  e.delta = get<double>(i);
  e.truncation_l2 = get<double>(i);
  auto ml = get<std::uint32_t>(i);
  e.method.resize(ml);
  if (ml && !i.read(e.method.data(), ml)) throw InvalidInput("ensemble file truncated");
  get_vec(i, e.states, e.n_paths * g * e.dim);
  get_vec(i, e.cont, e.n_paths * (g - 1) * e.dim);
  std::vector<std::uint64_t> off;
  get_vec(i, off, e.n_paths + 1);
  e.jump_offsets.assign(off.begin(), off.end());
  std::size_t J = off.back();
  get_vec(i, e.jump_times, J);
  get_vec(i, e.jump_steps, J);
  get_vec(i, e.jump_values, J * e.dim);
  return e;
}

}  // namespace stablelike
