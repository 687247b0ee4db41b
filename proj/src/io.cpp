#include "vgbn/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace vgbn::io {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::ParseError, "at " + (where.empty() ? std::string("/") : where) + ": " + what);
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::size_t begin = text.rfind('\n', e.byte > 1 ? e.byte - 2 : 0);
    begin = begin == std::string_view::npos ? 0 : begin + 1;
    std::size_t end = text.find('\n', begin);
    std::string context(text.substr(begin, end == std::string_view::npos ? text.npos : end - begin));
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ", column " + std::to_string(col) +
                                           ": " + e.what() + "\n  | " + context);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
}

const json& member(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) fail(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(path, "missing field '" + key + "'");
  return *it;
}

const json* optional_member(const json& obj, const std::string& key) {
  auto it = obj.find(key);
  return it == obj.end() || it->is_null() ? nullptr : &*it;
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

std::string text_of(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

const json& array(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array");
  return j;
}

Vector vector_of(const json& j, const std::string& path) {
  array(j, path);
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = number(j[i], path + "/" + std::to_string(i));
  return v;
}

Matrix matrix_of(const json& j, const std::string& path) {
  array(j, path);
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string rp = path + "/" + std::to_string(r);
    array(j[r], rp);
    if (r == 0) {
      cols = j[r].size();
    } else if (j[r].size() != cols) {
      fail(rp, "row " + std::to_string(r) + " has length " + std::to_string(j[r].size()) + ", expected " +
                   std::to_string(cols));
    }
  }
  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Index>(r), static_cast<Index>(c)) =
          number(j[r][c], path + "/" + std::to_string(r) + "/" + std::to_string(c));
  return m;
}

Gaussian gaussian_of(const json& j, const std::string& path) {
  Vector mean = vector_of(member(j, "mean", path), path + "/mean");
  Matrix cov = matrix_of(member(j, "cov", path), path + "/cov");
  try {
    return Gaussian(std::move(mean), std::move(cov));
  } catch (const Error& e) {
    fail(path, e.what());
  }
}

json to_json(const Vector& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json to_json(const Matrix& m) {
  json a = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    a.push_back(std::move(row));
  }
  return a;
}

kalman::SystemModel model_of(const json& j, const std::string& path) {
  kalman::SystemModel m;
  m.f = matrix_of(member(j, "F", path), path + "/F");
  m.q = matrix_of(member(j, "Q", path), path + "/Q");
  if (const json* g = optional_member(j, "G")) {
    m.g = matrix_of(*g, path + "/G");
  } else {
    m.g = Matrix::Zero(m.f.rows(), 0);
  }
  if (const json* sensors = optional_member(j, "sensors")) {
    array(*sensors, path + "/sensors");
    for (std::size_t i = 0; i < sensors->size(); ++i) {
      const std::string sp = path + "/sensors/" + std::to_string(i);
      m.sensors.push_back({matrix_of(member((*sensors)[i], "H", sp), sp + "/H"),
                           matrix_of(member((*sensors)[i], "R", sp), sp + "/R")});
    }
  }
  try {
    m.check();
  } catch (const Error& e) {
    fail(path, e.what());
  }
  return m;
}

}  // namespace

NetworkSpec parse_network(std::string_view text) {
  const json doc = parse_json(text);
  if (!doc.is_object()) fail("", "expected an object");
  NetworkSpec net;

  const json& nodes = array(member(doc, "nodes", ""), "/nodes");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string p = "/nodes/" + std::to_string(i);
    const json& n = nodes[i];
    NodeSpec node;
    node.id = text_of(member(n, "id", p), p + "/id");
    const json& dim = member(n, "dim", p);
    if (!dim.is_number_integer() || dim.get<long long>() < 1) fail(p + "/dim", "expected a positive integer");
    node.dim = static_cast<Index>(dim.get<long long>());
    if (const json* prior = optional_member(n, "prior")) node.prior = gaussian_of(*prior, p + "/prior");
    if (const json* q = optional_member(n, "noise_cov")) {
      node.noise_cov = matrix_of(*q, p + "/noise_cov");
      node.offset = Vector::Zero(node.dim);
    }
    if (const json* off = optional_member(n, "offset")) {
      if (!node.noise_cov) fail(p + "/offset", "offset is only meaningful on non-root nodes");
      node.offset = vector_of(*off, p + "/offset");
    }
    net.nodes.push_back(std::move(node));
  }

  if (const json* links = optional_member(doc, "links")) {
    array(*links, "/links");
    for (std::size_t i = 0; i < links->size(); ++i) {
      const std::string p = "/links/" + std::to_string(i);
      const json& l = (*links)[i];
      net.links.push_back({text_of(member(l, "from", p), p + "/from"), text_of(member(l, "to", p), p + "/to"),
                           matrix_of(member(l, "matrix", p), p + "/matrix")});
    }
  }

  if (const json* evidence = optional_member(doc, "evidence")) {
    array(*evidence, "/evidence");
    for (std::size_t i = 0; i < evidence->size(); ++i) {
      const std::string p = "/evidence/" + std::to_string(i);
      const json& e = (*evidence)[i];
      std::string id = text_of(member(e, "node", p), p + "/node");
      if (net.evidence.count(id)) fail(p, "second evidence entry for '" + id + "'");
      net.evidence[id] = vector_of(member(e, "value", p), p + "/value");
    }
  }
  return net;
}

std::string serialize_network(const NetworkSpec& net) {
  json doc;
  doc["nodes"] = json::array();
  for (const auto& n : net.nodes) {
    json j;
    j["id"] = n.id;
    j["dim"] = n.dim;
    if (n.prior) j["prior"] = {{"mean", to_json(n.prior->mean())}, {"cov", to_json(n.prior->cov())}};
    if (n.noise_cov) {
      j["noise_cov"] = to_json(*n.noise_cov);
      if (!n.offset.isZero(0.0)) j["offset"] = to_json(n.offset);
    }
    doc["nodes"].push_back(std::move(j));
  }
  doc["links"] = json::array();
  for (const auto& l : net.links) doc["links"].push_back({{"from", l.from}, {"to", l.to}, {"matrix", to_json(l.matrix)}});
  doc["evidence"] = json::array();
  for (const auto& [id, v] : net.evidence) doc["evidence"].push_back({{"node", id}, {"value", to_json(v)}});
  return doc.dump(2) + "\n";
}

FilterDocument parse_filter(std::string_view text) {
  const json doc = parse_json(text);
  if (!doc.is_object()) fail("", "expected an object");
  FilterDocument out;

  const json* model = optional_member(doc, "model");
  const json* models = optional_member(doc, "models");
  if (model && models) fail("", "give either 'model' or 'models', not both");
  if (model) {
    out.models.push_back(model_of(*model, "/model"));
  } else if (models) {
    array(*models, "/models");
    for (std::size_t i = 0; i < models->size(); ++i) out.models.push_back(model_of((*models)[i], "/models/" + std::to_string(i)));
    if (out.models.empty()) fail("/models", "empty model list");
  } else {
    fail("", "missing field 'model'");
  }
  const Index n = out.models.front().state_dim();
  for (std::size_t i = 0; i < out.models.size(); ++i) {
    if (out.models[i].state_dim() != n) fail("/models/" + std::to_string(i), "state dimension changes between steps");
  }

  const json& init = member(doc, "init", "");
  const Gaussian g = gaussian_of(init, "/init");
  if (g.dim() != n) fail("/init", "initial state dimension does not match F");
  out.init = {0, g.mean(), g.cov()};

  if (const json* inputs = optional_member(doc, "inputs")) {
    array(*inputs, "/inputs");
    for (std::size_t i = 0; i < inputs->size(); ++i) {
      const std::string p = "/inputs/" + std::to_string(i);
      Vector u = vector_of((*inputs)[i], p);
      const auto& m = out.models.size() == 1 ? out.models.front() : out.models.at(std::min(i, out.models.size() - 1));
      if (u.size() != m.input_dim()) fail(p, "input length does not match G");
      out.inputs.push_back(std::move(u));
    }
  }

  if (const json* ms = optional_member(doc, "measurements")) {
    array(*ms, "/measurements");
    for (std::size_t k = 0; k < ms->size(); ++k) {
      const std::string p = "/measurements/" + std::to_string(k);
      array((*ms)[k], p);
      std::vector<kalman::Measurement> step;
      for (std::size_t i = 0; i < (*ms)[k].size(); ++i) {
        const std::string mp = p + "/" + std::to_string(i);
        const json& m = (*ms)[k][i];
        const json& idx = member(m, "sensor_index", mp);
        if (!idx.is_number_integer() || idx.get<long long>() < 0) fail(mp + "/sensor_index", "expected a sensor index");
        step.push_back({static_cast<std::size_t>(idx.get<long long>()), vector_of(member(m, "z", mp), mp + "/z")});
      }
      out.measurements.push_back(std::move(step));
    }
  }

  if (const json* truth = optional_member(doc, "truth")) {
    array(*truth, "/truth");
    std::vector<Vector> t;
    for (std::size_t k = 0; k < truth->size(); ++k) {
      Vector x = vector_of((*truth)[k], "/truth/" + std::to_string(k));
      if (x.size() != n) fail("/truth/" + std::to_string(k), "truth dimension does not match the state");
      t.push_back(std::move(x));
    }
    out.truth = std::move(t);
  }

  if (const json* sim = optional_member(doc, "simulate")) {
    const json& steps = member(*sim, "steps", "/simulate");
    if (!steps.is_number_integer() || steps.get<long long>() < 0) fail("/simulate/steps", "expected a step count");
    if (optional_member(doc, "measurements")) fail("/simulate", "simulated runs cannot also list measurements");
    out.simulate_steps = static_cast<std::size_t>(steps.get<long long>());
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string format_number(double v, int digits) {
  if (v == 0.0) v = 0.0;  // drop the sign of negative zero
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::string format_vector(const Vector& v, int digits) {
  std::string s = "[";
  for (Index i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_number(v(i), digits);
  return s + "]";
}

std::string format_matrix(const Matrix& m, int digits) {
  std::string s = "[";
  for (Index r = 0; r < m.rows(); ++r) s += (r ? ", " : "") + format_vector(m.row(r).transpose(), digits);
  return s + "]";
}

std::string trajectory_csv(const std::vector<kalman::FilterState>& trajectory,
                           const std::optional<std::vector<Vector>>& truth, int digits) {
  std::ostringstream os;
  const Index n = trajectory.empty() ? 0 : trajectory.front().mean.size();
  os << "k";
  for (Index i = 0; i < n; ++i) os << ",xhat_" << i;
  for (Index i = 0; i < n; ++i) os << ",Pdiag_" << i;
  os << ",nees\n";
  for (std::size_t s = 0; s < trajectory.size(); ++s) {
    const auto& st = trajectory[s];
    os << st.k;
    for (Index i = 0; i < n; ++i) os << ',' << format_number(st.mean(i), digits);
    for (Index i = 0; i < n; ++i) os << ',' << format_number(st.cov(i, i), digits);
    os << ',';
    if (truth && s < truth->size()) os << format_number(kalman::nees(st, (*truth)[s]), digits);
    os << '\n';
  }
  return os.str();
}

std::string trace_to_json(const std::vector<transform::TransformStep>& trace) {
  json a = json::array();
  for (const auto& step : trace) {
    json j{{"kind", std::string(transform::to_string(step.kind))}, {"target", step.target}};
    if (!step.members.empty()) j["members"] = step.members;
    a.push_back(std::move(j));
  }
  return a.dump(2) + "\n";
}

}  // namespace vgbn::io
