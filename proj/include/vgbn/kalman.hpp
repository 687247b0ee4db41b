#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "vgbn/gaussian.hpp"

namespace vgbn::kalman {

struct Sensor {
  Matrix h;
  Matrix r;
};

/// x(k+1) = F x(k) + G u(k) + v(k),  z_j(k) = H_j x(k) + w_j(k).
struct SystemModel {
  Matrix f;
  Matrix g;  // n_x x n_u; may have zero columns
  Matrix q;
  std::vector<Sensor> sensors;

  Index state_dim() const { return f.rows(); }
  Index input_dim() const { return g.cols(); }
  /// Throws DimMismatch / InvalidArgument on inconsistent shapes or non-PSD noise.
  void check() const;
};

struct FilterState {
  int k = 0;
  Vector mean;
  Matrix cov;
};

struct Reading {
  Matrix h;
  Matrix r;
  Vector z;
};

/// A measurement on one of the model's sensors.
struct Measurement {
  std::size_t sensor = 0;
  Vector z;
};

enum class UpdateMode { Centralized, Decentralized };

/// π(x(k+1)): the current slice and the deterministic input are the parents of
/// the next state; the time-k slice is then rolled up.
Gaussian predict(const FilterState& state, const SystemModel& model, const Vector& input);

/// Information-form fusion of every reading: P⁻¹ ← P⁻¹ + Σ HᵀR⁻¹H, P⁻¹x̂ ← P⁻¹x̂ + Σ HᵀR⁻¹z.
FilterState update_decentralized(const Gaussian& predicted, const std::vector<Reading>& readings, int k);

/// Gain-form update for one (possibly stacked) observation, carried out as
/// evidence absorption on the two-node slice x -> z.
FilterState update_centralized(const Gaussian& predicted, const Matrix& h, const Matrix& r,
                               const Vector& z, int k);

/// Readings for one step, resolved against the model's sensor list.
std::vector<Reading> readings_for(const SystemModel& model, const std::vector<Measurement>& measurements);

/// Runs steps k = 1..N. `models` holds one model (constant) or N models, model
/// k-1 driving the transition into step k and the sensors at step k. `inputs`
/// may be empty (zero input). The returned trajectory starts with `init` at k = 0.
std::vector<FilterState> run_filter(const std::vector<SystemModel>& models, const std::vector<Vector>& inputs,
                                    const std::vector<std::vector<Measurement>>& measurements,
                                    const FilterState& init, UpdateMode mode);

struct Simulation {
  std::vector<Vector> truth;  // k = 0..N
  std::vector<std::vector<Measurement>> measurements;  // k = 1..N, every sensor every step
};

/// Draws a ground-truth trajectory and noisy readings from the model.
Simulation simulate(const std::vector<SystemModel>& models, const std::vector<Vector>& inputs,
                    const FilterState& init, std::size_t steps, std::uint64_t seed);

/// (x - x̂)ᵀP⁻¹(x - x̂).
double nees(const FilterState& state, const Vector& truth);

}  // namespace vgbn::kalman
