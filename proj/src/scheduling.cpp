#include "zonotube/scheduling.hpp"

#include "zonotube/log.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace zonotube {

using json = nlohmann::json;

Scheduling SchedulingBounds::vertex(int i) const {
  Scheduling v;
  for (int j = 0; j < kNumScheduling; ++j) v(j) = ((i >> j) & 1) ? upper(j) : lower(j);
  return v;
}

Scheduling SchedulingBounds::clamp(const Scheduling& zeta, double tolerance) const {
  Scheduling out = zeta;
  for (int j = 0; j < kNumScheduling; ++j) {
    const double slack = tolerance * (upper(j) - lower(j));
    if (!std::isfinite(zeta(j)) || zeta(j) < lower(j) - slack || zeta(j) > upper(j) + slack) {
      std::ostringstream msg;
      msg << "scheduling variable " << j << " = " << zeta(j) << " outside [" << lower(j) << ", "
          << upper(j) << "]";
      throw std::domain_error(msg.str());
    }
    if (zeta(j) < lower(j) || zeta(j) > upper(j)) {
      log().warn("scheduling variable {} = {} clamped into [{}, {}]", j, zeta(j), lower(j),
                 upper(j));
      out(j) = std::clamp(zeta(j), lower(j), upper(j));
    }
  }
  return out;
}

Scheduling SchedulingBounds::project(const Scheduling& zeta) const {
  return zeta.cwiseMax(lower).cwiseMin(upper);
}

bool SchedulingBounds::contains(const Scheduling& zeta) const {
  return (zeta.array() >= lower.array()).all() && (zeta.array() <= upper.array()).all();
}

void SchedulingBounds::validate() const {
  if (!lower.allFinite() || !upper.allFinite() || !(lower.array() < upper.array()).all())
    throw std::invalid_argument("scheduling bounds: need finite lower < upper");
}

GainSchedule GainSchedule::with_lqr_gains() const {
  if (!k_lqr) throw std::runtime_error("gain schedule has no LQR gains");
  GainSchedule out = *this;
  out.k = *k_lqr;
  return out;
}

std::array<double, kNumVertices> membership_weights(const Scheduling& zeta,
                                                    const SchedulingBounds& b) {
  const Scheduling z = b.clamp(zeta, 0.01);
  Eigen::Vector3d eta0;
  for (int j = 0; j < kNumScheduling; ++j) eta0(j) = (b.upper(j) - z(j)) / (b.upper(j) - b.lower(j));
  std::array<double, kNumVertices> mu{};
  for (int i = 0; i < kNumVertices; ++i) {
    double w = 1.0;
    for (int j = 0; j < kNumScheduling; ++j) w *= ((i >> j) & 1) ? 1.0 - eta0(j) : eta0(j);
    mu[static_cast<size_t>(i)] = w;
  }
  return mu;
}

Matrix25 interpolate_gain(const std::array<double, kNumVertices>& weights, const GainSchedule& gs) {
  Matrix25 k = Matrix25::Zero();
  for (int i = 0; i < kNumVertices; ++i) k += weights[static_cast<size_t>(i)] * gs.k[static_cast<size_t>(i)];
  return k;
}

Matrix25 interpolate_gain(const std::vector<double>& weights, const GainSchedule& gs) {
  if (weights.size() != gs.k.size())
    throw std::invalid_argument("interpolate_gain: " + std::to_string(weights.size()) +
                                " weights for " + std::to_string(gs.k.size()) + " vertices");
  std::array<double, kNumVertices> w{};
  std::copy(weights.begin(), weights.end(), w.begin());
  return interpolate_gain(w, gs);
}

Matrix25 gain_at(const Scheduling& zeta, const GainSchedule& gs) {
  return interpolate_gain(membership_weights(zeta, gs.bounds), gs);
}

// ---- gains file ---------------------------------------------------------------

namespace {

template <int R, int C>
Eigen::Matrix<double, R, C> matrix_from(const json& j, const char* what) {
  if (!j.is_array() || j.size() != R) throw std::runtime_error(std::string(what) + ": expected " + std::to_string(R) + " rows");
  Eigen::Matrix<double, R, C> m;
  for (int r = 0; r < R; ++r) {
    if (!j[static_cast<size_t>(r)].is_array() || j[static_cast<size_t>(r)].size() != C)
      throw std::runtime_error(std::string(what) + ": expected " + std::to_string(C) + " columns");
    for (int c = 0; c < C; ++c) m(r, c) = j[static_cast<size_t>(r)][static_cast<size_t>(c)].get<double>();
  }
  return m;
}

json rows_of(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(row);
  }
  return out;
}

std::array<Matrix25, kNumVertices> gains_from(const json& j, const char* what) {
  if (!j.is_array()) throw std::runtime_error(std::string(what) + ": expected a list of gains");
  if (j.size() != kNumVertices)
    throw std::runtime_error(std::string(what) + ": expected " + std::to_string(kNumVertices) +
                             " vertex gains, found " + std::to_string(j.size()));
  std::array<Matrix25, kNumVertices> k;
  for (int i = 0; i < kNumVertices; ++i) k[static_cast<size_t>(i)] = matrix_from<2, 5>(j[static_cast<size_t>(i)], what);
  return k;
}

const json& field(const json& j, const char* key) {
  if (!j.contains(key)) throw std::runtime_error(std::string("missing field '") + key + "'");
  return j.at(key);
}

}  // namespace

GainSchedule parse_gains(const std::string& text, const std::string& origin) {
  try {
    const json j = json::parse(text);
    GainSchedule gs;
    if (field(j, "n").get<int>() != 5 || field(j, "m").get<int>() != 2 ||
        field(j, "n_zeta").get<int>() != kNumScheduling)
      throw std::runtime_error("dimensions must be n = 5, m = 2, n_zeta = 3");

    const json& bounds = field(j, "bounds");
    if (!bounds.is_array() || bounds.size() != kNumScheduling)
      throw std::runtime_error("bounds: expected 3 intervals");
    for (int v = 0; v < kNumScheduling; ++v) {
      gs.bounds.lower(v) = bounds[static_cast<size_t>(v)].at(0).get<double>();
      gs.bounds.upper(v) = bounds[static_cast<size_t>(v)].at(1).get<double>();
    }
    gs.bounds.validate();

    const json& order = field(j, "vertex_order");
    if (!order.is_array() || order.size() != kNumVertices)
      throw std::runtime_error("vertex_order: expected " + std::to_string(kNumVertices) + " vertices, found " +
                               std::to_string(order.size()));
    for (int i = 0; i < kNumVertices; ++i)
      for (int b = 0; b < kNumScheduling; ++b)
        if (order[static_cast<size_t>(i)].at(static_cast<size_t>(b)).get<int>() != ((i >> b) & 1))
          throw std::runtime_error("vertex_order: must be the binary counter over (v_x, v_y, delta)");

    gs.k = gains_from(field(j, "K"), "K");
    if (j.contains("K_lqr")) gs.k_lqr = gains_from(j["K_lqr"], "K_lqr");

    gs.p = matrix_from<5, 5>(field(j, "P"), "P");
    if ((gs.p - gs.p.transpose()).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, gs.p.cwiseAbs().maxCoeff()))
      throw std::runtime_error("P is not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix5> eig(gs.p);
    if (!(eig.eigenvalues().minCoeff() > 0.0))
      throw std::runtime_error("P is not positive definite (min eigenvalue " +
                               std::to_string(eig.eigenvalues().minCoeff()) + ")");

    gs.gamma = field(j, "gamma").get<double>();
    if (j.contains("design")) {
      const json& d = j["design"];
      gs.design.stiffness = d.value("stiffness", gs.design.stiffness);
      gs.design.ts = d.value("Ts", gs.design.ts);
      gs.design.substeps = d.value("substeps", gs.design.substeps);
    }
    if (j.contains("terminal_set")) {
      const json& t = j["terminal_set"];
      auto c = field(t, "center").get<std::vector<double>>();
      if (c.size() != 5) throw std::runtime_error("terminal_set.center: expected 5 entries");
      const json& g = field(t, "generators");
      Matrix gen(5, g.empty() ? 0 : static_cast<Eigen::Index>(g.at(0).size()));
      for (Eigen::Index r = 0; r < 5 && !g.empty(); ++r)
        for (Eigen::Index col = 0; col < gen.cols(); ++col)
          gen(r, col) = g.at(static_cast<size_t>(r)).at(static_cast<size_t>(col)).get<double>();
      TerminalSet ts{Zonotope(Eigen::Map<Vector>(c.data(), 5), gen),
                     t.value("epsilon_achieved", 0.0), t.value("iterations", 0)};
      gs.terminal = ts;
    }
    if (j.contains("metadata")) {
      gs.tool = j["metadata"].value("tool", std::string());
      gs.date = j["metadata"].value("date", std::string());
    }
    for (const auto& k : gs.k)
      if (!k.allFinite()) throw std::runtime_error("K contains non-finite entries");
    return gs;
  } catch (const json::exception& e) {
    throw std::runtime_error("gains file " + origin + ": " + e.what());
  } catch (const std::runtime_error& e) {
    throw std::runtime_error("gains file " + origin + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error("gains file " + origin + ": " + e.what());
  }
}

GainSchedule load_gains(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open gains file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_gains(buf.str(), path);
}

std::string serialize_gains(const GainSchedule& gs) {
  json j;
  j["format"] = "zonotube-gains/1";
  j["n"] = 5;
  j["m"] = 2;
  j["n_zeta"] = kNumScheduling;
  j["scheduling_variables"] = {"v_x", "v_y", "delta"};
  j["bounds"] = json::array();
  for (int v = 0; v < kNumScheduling; ++v) j["bounds"].push_back({gs.bounds.lower(v), gs.bounds.upper(v)});
  j["vertex_order"] = json::array();
  for (int i = 0; i < kNumVertices; ++i)
    j["vertex_order"].push_back({(i >> 0) & 1, (i >> 1) & 1, (i >> 2) & 1});
  j["K"] = json::array();
  for (const auto& k : gs.k) j["K"].push_back(rows_of(k));
  if (gs.k_lqr) {
    j["K_lqr"] = json::array();
    for (const auto& k : *gs.k_lqr) j["K_lqr"].push_back(rows_of(k));
  }
  j["P"] = rows_of(gs.p);
  j["gamma"] = gs.gamma;
  j["design"] = {{"stiffness", gs.design.stiffness}, {"Ts", gs.design.ts}, {"substeps", gs.design.substeps}};
  if (gs.terminal) {
    const Zonotope& z = gs.terminal->set;
    j["terminal_set"] = {
        {"center", std::vector<double>(z.center().data(), z.center().data() + z.dim())},
        {"generators", rows_of(z.generators())},
        {"epsilon_achieved", gs.terminal->epsilon_achieved},
        {"iterations", gs.terminal->iterations}};
  }
  j["metadata"] = {{"tool", gs.tool}, {"date", gs.date}};
  return j.dump(1) + "\n";
}

void save_gains(const GainSchedule& gs, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write gains file: " + path);
  out << serialize_gains(gs);
}

}  // namespace zonotube
