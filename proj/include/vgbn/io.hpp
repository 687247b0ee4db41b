#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vgbn/kalman.hpp"
#include "vgbn/network.hpp"
#include "vgbn/transform.hpp"

namespace vgbn::io {

/// Significant digits for text output; 17 round-trips a double.
inline constexpr int kDefaultDigits = 12;
inline constexpr int kFullDigits = 17;

/// Parses a network document. Syntax errors carry line:column, schema errors
/// the JSON pointer of the offending value; both throw Error(ParseError).
/// Structural checks are left to validate().
NetworkSpec parse_network(std::string_view text);
std::string serialize_network(const NetworkSpec& net);

struct FilterDocument {
  std::vector<kalman::SystemModel> models;
  kalman::FilterState init;
  std::vector<Vector> inputs;
  std::vector<std::vector<kalman::Measurement>> measurements;
  std::optional<std::vector<Vector>> truth;  // k = 0..N when present
  std::optional<std::size_t> simulate_steps;
};

FilterDocument parse_filter(std::string_view text);

std::string read_file(const std::filesystem::path& path);

std::string format_number(double v, int digits);
std::string format_vector(const Vector& v, int digits);
std::string format_matrix(const Matrix& m, int digits);

/// CSV with header k,xhat_0..,Pdiag_0..,nees; nees is blank without truth.
std::string trajectory_csv(const std::vector<kalman::FilterState>& trajectory,
                           const std::optional<std::vector<Vector>>& truth, int digits);

std::string trace_to_json(const std::vector<transform::TransformStep>& trace);

}  // namespace vgbn::io
