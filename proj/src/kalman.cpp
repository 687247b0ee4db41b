#include "vgbn/kalman.hpp"

#include <random>

#include "vgbn/network.hpp"
#include "vgbn/propagation.hpp"
#include "vgbn/transform.hpp"

namespace vgbn::kalman {

namespace {

Vector sample(const Vector& mean, const Matrix& cov, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(cov));
  const Vector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  Vector w(mean.size());
  for (Index i = 0; i < w.size(); ++i) w(i) = normal(rng);
  return mean + eig.eigenvectors() * root.asDiagonal() * w;
}

const SystemModel& model_at(const std::vector<SystemModel>& models, std::size_t step) {
  return models.size() == 1 ? models.front() : models.at(step);
}

void check_sequences(const std::vector<SystemModel>& models, const std::vector<Vector>& inputs, std::size_t steps) {
  if (models.empty()) throw Error(ErrorCode::SequenceMismatch, "no system model");
  if (models.size() != 1 && models.size() != steps) {
    throw Error(ErrorCode::SequenceMismatch, std::to_string(models.size()) + " models for " +
                                                 std::to_string(steps) + " steps");
  }
  if (!inputs.empty() && inputs.size() != steps) {
    throw Error(ErrorCode::SequenceMismatch, std::to_string(inputs.size()) + " inputs for " +
                                                 std::to_string(steps) + " steps");
  }
  for (const auto& m : models) m.check();
}

Vector input_at(const std::vector<Vector>& inputs, const SystemModel& model, std::size_t step) {
  return inputs.empty() ? Vector::Zero(model.input_dim()) : inputs[step];
}

}  // namespace

void SystemModel::check() const {
  const Index n = f.rows();
  if (n < 1 || f.cols() != n) throw Error(ErrorCode::DimMismatch, "F must be square and nonempty");
  if (g.rows() != n) throw Error(ErrorCode::DimMismatch, "G must have n_x rows");
  if (q.rows() != n || q.cols() != n) throw Error(ErrorCode::DimMismatch, "Q must be n_x x n_x");
  if (!is_psd(q)) throw Error(ErrorCode::InvalidArgument, "Q is not symmetric PSD");
  for (std::size_t j = 0; j < sensors.size(); ++j) {
    const Sensor& s = sensors[j];
    const std::string tag = "sensor " + std::to_string(j);
    if (s.h.cols() != n || s.h.rows() < 1) throw Error(ErrorCode::DimMismatch, tag + ": H must be n_z x n_x");
    if (s.r.rows() != s.h.rows() || s.r.cols() != s.h.rows()) {
      throw Error(ErrorCode::DimMismatch, tag + ": R must be n_z x n_z");
    }
    if (!is_psd(s.r)) throw Error(ErrorCode::InvalidArgument, tag + ": R is not symmetric PSD");
  }
}

Gaussian predict(const FilterState& state, const SystemModel& model, const Vector& input) {
  if (input.size() != model.input_dim()) {
    throw Error(ErrorCode::DimMismatch, "input has length " + std::to_string(input.size()) + ", G has " +
                                            std::to_string(model.input_dim()) + " columns");
  }
  std::vector<LinearTerm> parents{{model.f, Gaussian(state.mean, state.cov)}};
  if (model.input_dim() > 0) parents.push_back({model.g, Gaussian::delta(input)});
  const NodeSpec next = NodeSpec::internal("x", model.q);
  return propagation::compute_pi(next, parents);
}

FilterState update_decentralized(const Gaussian& predicted, const std::vector<Reading>& readings, int k) {
  if (!try_spd_inverse(predicted.cov())) {
    throw Error(ErrorCode::SingularPriorCovariance, "predicted covariance is singular");
  }
  std::vector<InfoForm> terms;
  for (const auto& rd : readings) terms.push_back(pullback(rd.h, Gaussian(rd.z, rd.r)));
  const InfoForm lambda = info_product(terms, predicted.dim());
  const Gaussian post = propagation::belief(predicted, lambda);
  return {k, post.mean(), post.cov()};
}

FilterState update_centralized(const Gaussian& predicted, const Matrix& h, const Matrix& r, const Vector& z,
                               int k) {
  if (h.rows() == 0) return {k, predicted.mean(), predicted.cov()};
  NetworkSpec slice;
  slice.nodes.push_back(NodeSpec::root("x", predicted));
  slice.nodes.push_back(NodeSpec::internal("z", r));
  slice.links.push_back({"x", "z", h});
  slice.evidence["z"] = z;
  const NetworkSpec reduced = transform::absorb_evidence(slice, "z");
  const Gaussian& post = *reduced.node("x").prior;
  return {k, post.mean(), post.cov()};
}

std::vector<Reading> readings_for(const SystemModel& model, const std::vector<Measurement>& measurements) {
  std::vector<Reading> out;
  for (const auto& m : measurements) {
    if (m.sensor >= model.sensors.size()) {
      throw Error(ErrorCode::InvalidArgument, "unknown sensor index " + std::to_string(m.sensor));
    }
    const Sensor& s = model.sensors[m.sensor];
    if (m.z.size() != s.h.rows()) {
      throw Error(ErrorCode::DimMismatch, "reading for sensor " + std::to_string(m.sensor) + " has length " +
                                              std::to_string(m.z.size()));
    }
    out.push_back({s.h, s.r, m.z});
  }
  return out;
}

std::vector<FilterState> run_filter(const std::vector<SystemModel>& models, const std::vector<Vector>& inputs,
                                    const std::vector<std::vector<Measurement>>& measurements,
                                    const FilterState& init, UpdateMode mode) {
  const std::size_t steps = measurements.size();
  check_sequences(models, inputs, steps);
  if (init.mean.size() != models.front().state_dim()) {
    throw Error(ErrorCode::DimMismatch, "initial mean does not match the state dimension");
  }

  std::vector<FilterState> trajectory{init};
  for (std::size_t s = 0; s < steps; ++s) {
    const SystemModel& model = model_at(models, s);
    const int k = static_cast<int>(s) + 1;
    try {
      const Gaussian predicted = predict(trajectory.back(), model, input_at(inputs, model, s));
      const auto readings = readings_for(model, measurements[s]);
      if (mode == UpdateMode::Decentralized) {
        trajectory.push_back(update_decentralized(predicted, readings, k));
      } else {
        std::vector<Matrix> hs, rs;
        std::vector<Vector> zs;
        for (const auto& rd : readings) {
          hs.push_back(rd.h);
          rs.push_back(rd.r);
          zs.push_back(rd.z);
        }
        trajectory.push_back(update_centralized(predicted, vstack(hs, model.state_dim()), block_diag(rs),
                                                vconcat(zs), k));
      }
    } catch (const Error& e) {
      throw Error(e.code(), "step " + std::to_string(k) + ": " + e.what());
    }
  }
  return trajectory;
}

Simulation simulate(const std::vector<SystemModel>& models, const std::vector<Vector>& inputs,
                    const FilterState& init, std::size_t steps, std::uint64_t seed) {
  check_sequences(models, inputs, steps);
  std::mt19937_64 rng(seed);
  Simulation sim;
  sim.truth.push_back(sample(init.mean, init.cov, rng));
  for (std::size_t s = 0; s < steps; ++s) {
    const SystemModel& model = model_at(models, s);
    const Index n = model.state_dim();
    const Vector x = model.f * sim.truth.back() + model.g * input_at(inputs, model, s) +
                     sample(Vector::Zero(n), model.q, rng);
    std::vector<Measurement> ms;
    for (std::size_t j = 0; j < model.sensors.size(); ++j) {
      const Sensor& sn = model.sensors[j];
      ms.push_back({j, sn.h * x + sample(Vector::Zero(sn.h.rows()), sn.r, rng)});
    }
    sim.truth.push_back(x);
    sim.measurements.push_back(std::move(ms));
  }
  return sim;
}

double nees(const FilterState& state, const Vector& truth) {
  const Vector e = truth - state.mean;
  const Matrix p_inv = spd_inverse(state.cov, ErrorCode::SingularCovariance, "state covariance");
  return e.dot(p_inv * e);
}

}  // namespace vgbn::kalman
