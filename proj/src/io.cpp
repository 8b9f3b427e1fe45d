#include "plantmf/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "plantmf/error.hpp"

namespace plantmf {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string header_comment(std::uint64_t config_hash, std::uint64_t seed) {
  return "# config_hash=" + hex64(config_hash) + " seed=" + std::to_string(seed) + "\n";
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj, unsigned workers) {
  os << "t,plant_id,s,x1,x2,S,gamma,C_index\n";
  const auto& p = traj.params();
  for (const auto& state : traj.states()) {
    const auto c = competition_indices(p, state, workers);
    for (std::size_t i = 0; i < state.size(); ++i) {
      const auto& th = state.traits[i];
      os << format_double(state.t) << ',' << i << ',' << format_double(state.sizes[i]) << ','
         << format_double(th.x[0]) << ',' << format_double(th.x[1]) << ','
         << format_double(th.S) << ',' << format_double(th.gamma) << ','
         << format_double(c[i]) << '\n';
    }
  }
}

void write_samples_csv(std::ostream& os, std::span<const Sample> samples) {
  os << "id,s0,x1,x2,S,gamma\n";
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    os << i << ',' << format_double(s.s0) << ',' << format_double(s.traits.x[0]) << ','
       << format_double(s.traits.x[1]) << ',' << format_double(s.traits.S) << ','
       << format_double(s.traits.gamma) << '\n';
  }
}

void write_distances_csv(std::ostream& os, std::span<const DistanceReport> reports) {
  os << "N,t,w1_size,w1_full,flow_gap,bound_value\n";
  for (const auto& r : reports) {
    os << r.N << ',' << format_double(r.t) << ',' << format_double(r.w1_size) << ','
       << format_double(r.w1_full) << ',' << format_double(r.flow_gap) << ','
       << format_double(r.bound_value) << '\n';
  }
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open for writing: " + path.string());
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  f.close();
  if (!f) throw IoError("write failed: " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for reading: " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace plantmf
