#pragma once

// Deterministic text output: round-trip number formatting and CSV writers.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>

#include "plantmf/init_dist.hpp"
#include "plantmf/metrics.hpp"
#include "plantmf/population.hpp"

namespace plantmf {

// Shortest decimal string that parses back to the same double; "nan",
// "inf" and "-inf" for non-finite values.
std::string format_double(double v);

// 16 lower-case hex digits.
std::string hex64(std::uint64_t v);

// "# config_hash=<hex64> seed=<seed>\n"
std::string header_comment(std::uint64_t config_hash, std::uint64_t seed);

// t,plant_id,s,x1,x2,S,gamma,C_index ; one row per snapshot and individual.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj, unsigned workers = 1);

// id,s0,x1,x2,S,gamma
void write_samples_csv(std::ostream& os, std::span<const Sample> samples);

// N,t,w1_size,w1_full,flow_gap,bound_value
void write_distances_csv(std::ostream& os, std::span<const DistanceReport> reports);

// Writes the whole string or throws IoError.
void write_file(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

}  // namespace plantmf
