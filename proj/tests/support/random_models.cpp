#include "random_models.hpp"

#include <algorithm>
#include <set>

namespace vgbn::testing {

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

Index uniform_int(Rng& rng, Index lo, Index hi) { return std::uniform_int_distribution<Index>(lo, hi)(rng); }

Vector random_vector(Rng& rng, Index n, double scale) {
  std::normal_distribution<double> normal(0.0, scale);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

Matrix random_matrix(Rng& rng, Index rows, Index cols, double scale) {
  std::normal_distribution<double> normal(0.0, scale);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

Matrix random_spd(Rng& rng, Index n, double floor) {
  const Matrix a = random_matrix(rng, n, n);
  return symmetrize(a.transpose() * a / static_cast<double>(n) + floor * Matrix::Identity(n, n));
}

std::map<std::string, Vector> sample_nodes(const NetworkSpec& net, Rng& rng) {
  std::map<std::string, Vector> values;
  auto draw = [&](const Vector& mean, const Matrix& cov) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
    const Vector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return Vector(mean + eig.eigenvectors() * root.asDiagonal() * random_vector(rng, mean.size()));
  };
  for (const auto& id : topological_order(net)) {
    const NodeSpec& n = net.node(id);
    if (n.is_root()) {
      values[id] = draw(n.prior->mean(), n.prior->cov());
    } else {
      Vector m = n.offset;
      for (const LinkSpec* l : net.parent_links(id)) m += l->matrix * values.at(l->from);
      values[id] = draw(m, *n.noise_cov);
    }
  }
  return values;
}

NetworkSpec random_polytree(Rng& rng, const NetworkShape& shape) {
  const Index count = uniform_int(rng, shape.min_nodes, shape.max_nodes);
  std::vector<std::string> ids;
  std::vector<Index> dims;
  for (Index i = 0; i < count; ++i) {
    ids.push_back("n" + std::to_string(i));
    dims.push_back(uniform_int(rng, shape.min_dim, shape.max_dim));
  }

  NetworkSpec net;
  std::set<std::string> has_parent;
  for (Index i = 1; i < count; ++i) {
    const Index j = uniform_int(rng, 0, i - 1);
    const bool down = uniform(rng, 0.0, 1.0) < 0.5;
    const Index from = down ? j : i;
    const Index to = down ? i : j;
    net.links.push_back({ids[from], ids[to], random_matrix(rng, dims[to], dims[from], 0.8)});
    has_parent.insert(ids[to]);
  }
  for (Index i = 0; i < count; ++i) {
    const Index d = dims[i];
    if (has_parent.count(ids[i])) {
      Vector offset = uniform(rng, 0.0, 1.0) < shape.offset_probability ? random_vector(rng, d) : Vector::Zero(d);
      net.nodes.push_back(NodeSpec::internal(ids[i], random_spd(rng, d), offset));
    } else {
      net.nodes.push_back(NodeSpec::root(ids[i], Gaussian(random_vector(rng, d), random_spd(rng, d))));
    }
  }

  if (shape.evidence) {
    const auto values = sample_nodes(net, rng);
    std::vector<Index> order(static_cast<std::size_t>(count));
    for (Index i = 0; i < count; ++i) order[static_cast<std::size_t>(i)] = i;
    std::shuffle(order.begin(), order.end(), rng);
    const Index observed = uniform_int(rng, 1, count);
    for (Index k = 0; k < observed; ++k) {
      const std::string& id = ids[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])];
      net.evidence[id] = values.at(id);
    }
  }
  return net;
}

NetworkSpec random_star(Rng& rng, bool singular_lambda) {
  NetworkSpec net;
  const Index n = singular_lambda ? uniform_int(rng, 2, 4) : uniform_int(rng, 1, 4);
  net.nodes.push_back(NodeSpec::internal("x", random_spd(rng, n), random_vector(rng, n)));
  const Index parents = uniform_int(rng, 1, 3);
  for (Index i = 0; i < parents; ++i) {
    const std::string id = "u" + std::to_string(i);
    const Index d = uniform_int(rng, 1, 3);
    net.nodes.push_back(NodeSpec::root(id, Gaussian(random_vector(rng, d), random_spd(rng, d))));
    net.links.push_back({id, "x", random_matrix(rng, n, d, 0.8)});
  }
  // Child rows: fewer than n keeps Λ rank-deficient, at least n makes it invertible.
  Index rows = singular_lambda ? uniform_int(rng, 1, n - 1) : uniform_int(rng, n, n + 2);
  for (Index j = 0; rows > 0; ++j) {
    const std::string id = "y" + std::to_string(j);
    const Index d = uniform_int(rng, 1, rows);
    rows -= d;
    net.nodes.push_back(NodeSpec::internal(id, random_spd(rng, d)));
    net.links.push_back({"x", id, random_matrix(rng, d, n)});
  }
  const auto values = sample_nodes(net, rng);
  for (const auto& node : net.nodes)
    if (node.id[0] == 'y') net.evidence[node.id] = values.at(node.id);
  return net;
}

kalman::SystemModel random_system(Rng& rng, Index n_x, Index n_u, Index n_sensors) {
  kalman::SystemModel m;
  // Scale F so its spectral radius stays near one.
  Matrix f = random_matrix(rng, n_x, n_x);
  Eigen::EigenSolver<Matrix> es(f);
  const double radius = es.eigenvalues().cwiseAbs().maxCoeff();
  m.f = f * (uniform(rng, 0.6, 1.0) / std::max(radius, 1e-6));
  m.g = random_matrix(rng, n_x, n_u);
  m.q = random_spd(rng, n_x, 0.1) * 0.2;
  for (Index j = 0; j < n_sensors; ++j) {
    const Index n_z = uniform_int(rng, 1, n_x);
    m.sensors.push_back({random_matrix(rng, n_z, n_x), random_spd(rng, n_z, 0.2)});
  }
  return m;
}

}  // namespace vgbn::testing
