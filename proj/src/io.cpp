#include "flowlab/io.hpp"

#include "flowlab/config.hpp"
#include "flowlab/errors.hpp"

#include <filesystem>
#include <fstream>

namespace flowlab {

namespace {

Json vec(const VectorXd& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Json mat(const MatrixXd& m) {
  Json a = Json::array();
  for (Index i = 0; i < m.rows(); ++i) a.push_back(vec(m.row(i).transpose()));
  return a;
}

std::string csv_num(double v) { return std::isfinite(v) ? format_double(v) : ""; }

}  // namespace

Json to_json(const ConditionReport& r) {
  Json j;
  j["model"] = r.model;
  j["dim"] = r.dim;
  j["lambda_A"] = r.lambda_A;
  j["argmax"] = vec(r.argmax);
  j["rho_star"] = r.rho_star;
  j["rho_sq"] = r.rho_sq;
  j["chi"] = r.chi;
  j["chi_constant"] = r.chi_constant;
  j["drift_hess_sup"] = r.drift_hess_sup;
  j["min_a_eigenvalue"] = r.min_a_eigenvalue;
  j["samples"] = r.samples;
  if (r.growth) {
    const auto& g = *r.growth;
    j["growth"] = {{"alpha0", g.alpha0}, {"alpha1", g.alpha1}, {"alpha2", g.alpha2},
                   {"beta0", g.beta0},   {"beta1", g.beta1},   {"beta2", g.beta2}};
  }
  for (const auto& o : r.orders) {
    const std::string n = std::to_string(o.n);
    j["lambda_A_" + n] = o.lambda_A_n;
    j["T_" + n] = o.T_n;
    if (o.kappa) {
      j["kappa_" + n] = o.kappa->kappa;
      j["beta2_" + n] = o.kappa->beta2_n;
      j["P_" + n] = o.kappa->satisfied;
    }
  }
  return j;
}

Json to_json(const DecompositionReport<double>& r) {
  Json j;
  j["lhs"] = vec(r.lhs);
  j["t_hat"] = vec(r.t_hat);
  j["s_hat"] = vec(r.s_hat);
  j["residual"] = vec(r.residual);
  j["residual_norm"] = r.residual.norm();
  j["estimator_steps"] = r.estimator_steps;
  j["fine_steps"] = r.fine_steps;
  j["H"] = r.H;
  j["h"] = r.h;
  j["diverged"] = r.diverged;
  if (!r.nodes.empty()) {
    Json nodes = Json::array();
    for (const auto& n : r.nodes)
      nodes.push_back({{"node", n.node}, {"u", n.u}, {"t_part", vec(n.t_part)},
                       {"s_part", vec(n.s_part)}});
    j["nodes"] = nodes;
  }
  return j;
}

Json to_json(const VarianceReport& r) {
  return {{"diagonal_term", r.diagonal_term},     {"cross_term", r.cross_term},
          {"total", r.total},                     {"empirical_variance", r.empirical_variance},
          {"mc_stderr", r.mc_stderr},             {"diagonal_stderr", r.diagonal_stderr},
          {"cross_stderr", r.cross_stderr},       {"paired_stderr", r.paired_stderr},
          {"s_mean", r.s_mean},                   {"s_mean_stderr", r.s_mean_stderr},
          {"cross_forced_zero", r.cross_forced_zero}, {"samples", r.samples},
          {"divergent", r.divergent}};
}

Json to_json(const MomentEstimate& e) {
  return {{"order", e.order},
          {"value", e.value},
          {"stderr", e.std_error},
          {"ci95", {e.value - e.half_width(), e.value + e.half_width()}},
          {"raw_mean", e.raw_mean},
          {"samples", e.samples},
          {"divergent", e.divergent},
          {"seed", e.seed}};
}

Json to_json(const GradientEstimate& e) {
  return {{"value", vec(e.value)},
          {"stderr", vec(e.std_error)},
          {"samples", e.samples},
          {"divergent", e.divergent}};
}

Json to_json(const HessianEstimate& e) {
  return {{"value", mat(e.value)},
          {"stderr", mat(e.std_error)},
          {"samples", e.samples},
          {"divergent", e.divergent}};
}

Json to_json(const SemigroupResult& r) {
  return {{"lhs", r.lhs},       {"lhs_stderr", r.lhs_stderr},
          {"rhs", r.rhs},       {"rhs_stderr", r.rhs_stderr},
          {"combined_stderr", r.combined_stderr()},
          {"cost", r.cost},     {"outer", r.outer},
          {"inner", r.inner},   {"nodes", r.nodes}};
}

Json to_json(const InvariantResult& r) {
  return {{"value", r.value},     {"stderr", r.std_error}, {"horizon", r.horizon},
          {"lambda_A", r.lambda_A}, {"samples", r.samples}};
}

Json to_json(const ExperimentResult& r) {
  Json j;
  j["name"] = r.name;
  j["config_digest"] = r.config_digest;
  j["result_digest"] = r.digest();
  j["passed"] = r.passed();
  Json verdicts = Json::array();
  for (const auto& v : r.verdicts)
    verdicts.push_back({{"criterion", v.criterion}, {"passed", v.passed}, {"detail", v.detail}});
  j["verdicts"] = verdicts;
  Json slopes = Json::array();
  for (const auto& s : r.slopes)
    slopes.push_back({{"name", s.name},
                      {"slope", s.slope},
                      {"stderr", s.std_error},
                      {"intercept", s.intercept},
                      {"points", s.points}});
  j["slopes"] = slopes;
  Json rows = Json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"label", row.label},
                    {"parameter", row.parameter},
                    {"measured", row.measured},
                    {"target", row.target},
                    {"stderr", row.std_error}});
  j["rows"] = rows;
  j["wall_time"] = r.wall_time;
  return j;
}

void write_csv(std::ostream& os, const ExperimentResult& r) {
  os << "label,parameter,measured,target,stderr\n";
  for (const auto& row : r.rows)
    os << row.label << ',' << csv_num(row.parameter) << ',' << csv_num(row.measured) << ','
       << csv_num(row.target) << ',' << csv_num(row.std_error) << '\n';
}

void write_path_csv(std::ostream& os, const BrownianGrid& grid, const VariationalPaths<double>& p) {
  const Index d = p.flow.states.cols();
  const bool tangent = !p.tangent.matrices.empty();
  os << 't';
  for (Index i = 0; i < d; ++i) os << ",x_" << i + 1;
  if (tangent)
    for (Index i = 0; i < d; ++i)
      for (Index k = 0; k < d; ++k) os << ",J_" << i + 1 << '_' << k + 1;
  os << '\n';
  for (Index row = 0; row < p.flow.states.rows(); ++row) {
    os << format_double(grid.time(p.flow.first_index + row));
    for (Index i = 0; i < d; ++i) os << ',' << format_double(p.flow.states(row, i));
    if (tangent) {
      const bool have = row < static_cast<Index>(p.tangent.matrices.size());
      for (Index i = 0; i < d; ++i)
        for (Index k = 0; k < d; ++k)
          os << ',' << (have ? format_double(p.tangent.matrices[row](i, k)) : "");
    }
    os << '\n';
  }
}

void write_text(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

}  // namespace flowlab
