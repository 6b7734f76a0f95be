#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "astrogate/common.hpp"
#include "astrogate/simulator.hpp"

namespace astrogate::io {

static_assert(std::endian::native == std::endian::little, "binary cache assumes a little-endian host");

inline constexpr char kTrajectoryMagic[6] = {'C', 'A', 'S', 'I', 'M', '1'};

// Layout: magic "CASIM1", u64 n_samples, u64 n_cells, u64 n_pools (=3),
// then f64 times[n_samples], then each pool (c, E, IP3) row-major [n_samples][n_cells].
inline void write_trajectory_binary(const Trajectory& t, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(kTrajectoryMagic, sizeof(kTrajectoryMagic));
  const std::uint64_t dims[3] = {t.n_samples(), t.n_cells, 3};
  out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  auto put = [&](const std::vector<double>& v) {
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  };
  put(t.times);
  put(t.c_series);
  put(t.e_series);
  put(t.ip3_series);
  if (!out) throw std::runtime_error("short write to " + path);
}

inline Trajectory read_trajectory_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open trajectory cache " + path);
  char magic[6];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kTrajectoryMagic, sizeof(magic)) != 0)
    throw std::runtime_error(path + ": not a CASIM1 trajectory file");
  std::uint64_t dims[3];
  in.read(reinterpret_cast<char*>(dims), sizeof(dims));
  if (!in || dims[2] != 3) throw std::runtime_error(path + ": bad trajectory header");
  Trajectory t;
  t.n_cells = dims[1];
  auto get = [&](std::vector<double>& v, std::size_t n) {
    v.resize(n);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) throw std::runtime_error(path + ": truncated trajectory");
  };
  get(t.times, dims[0]);
  get(t.c_series, dims[0] * dims[1]);
  get(t.e_series, dims[0] * dims[1]);
  get(t.ip3_series, dims[0] * dims[1]);
  return t;
}

/// One CSV per pool: header `tau,cell_0,...,cell_{N-1}`.
inline void write_pool_csv(const Trajectory& t, const std::vector<double>& pool, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "tau";
  for (std::size_t i = 0; i < t.n_cells; ++i) out << ",cell_" << i;
  out << '\n';
  for (std::size_t s = 0; s < t.n_samples(); ++s) {
    out << format_double(t.times[s]);
    for (std::size_t i = 0; i < t.n_cells; ++i) out << ',' << format_double(pool[s * t.n_cells + i]);
    out << '\n';
  }
}

inline void write_trajectory_csv(const Trajectory& t, const std::string& stem) {
  write_pool_csv(t, t.c_series, stem + "_c.csv");
  write_pool_csv(t, t.e_series, stem + "_er.csv");
  write_pool_csv(t, t.ip3_series, stem + "_ip3.csv");
}

inline void read_pool_csv(const std::string& path, std::vector<double>& times, std::vector<double>& pool,
                          std::size_t& n_cells) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trajectory cache " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("tau", 0) != 0) throw std::runtime_error(path + ": missing header");
  n_cells = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
  times.clear();
  pool.clear();
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::size_t col = 0;
    while (std::getline(ss, field, ',')) {
      double v = 0.0;
      if (!parse_double(field, v)) throw std::runtime_error(path + ":" + std::to_string(lineno) + ": bad number");
      (col == 0 ? times : pool).push_back(v);
      ++col;
    }
    if (col != n_cells + 1) throw std::runtime_error(path + ":" + std::to_string(lineno) + ": wrong column count");
  }
}

inline Trajectory read_trajectory_csv(const std::string& stem) {
  Trajectory t;
  std::vector<double> times;
  std::size_t n = 0;
  read_pool_csv(stem + "_c.csv", t.times, t.c_series, t.n_cells);
  read_pool_csv(stem + "_er.csv", times, t.e_series, n);
  read_pool_csv(stem + "_ip3.csv", times, t.ip3_series, n);
  return t;
}

}  // namespace astrogate::io
