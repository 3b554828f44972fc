#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "dnr/network.hpp"

namespace dnr {

// Variables of the branch flow model: squared voltages v, squared currents l,
// sending-end flows P/Q keyed by branch id over the closed-branch set, and
// per-bus complex injections s (consumption negative).
struct BranchFlowState {
  std::map<int, double> v;
  std::map<int, double> l;
  std::map<int, double> P;
  std::map<int, double> Q;
  std::map<int, Complex> s;
};

// One relaxed OPF instance: a network, a radial switch configuration, and
// per-bus demands (per-unit, consumption positive). Buses absent from the
// demand map draw nothing.
class OPFProblem {
 public:
  OPFProblem(const Network& net, SwitchConfiguration config,
             std::map<int, Complex> demands)
      : net_(&net), config_(std::move(config)), demands_(std::move(demands)) {
    if (!is_radial(net, config_))
      fail_validation("OPF problem requires a radial configuration, got ",
                      config_.to_string());
    for (const auto& [bus_id, d] : demands_) {
      (void)d;
      net.bus_index(bus_id);  // throws on unknown id
    }
    closed_ = net.closed_branch_indices(config_);
  }

  static OPFProblem from_network_demands(const Network& net,
                                         const SwitchConfiguration& config) {
    std::map<int, Complex> demands;
    for (const Bus& b : net.buses())
      if (b.demand_p != 0.0 || b.demand_q != 0.0)
        demands[b.id] = Complex(b.demand_p, b.demand_q);
    return OPFProblem(net, config, std::move(demands));
  }

  const Network& network() const { return *net_; }
  const SwitchConfiguration& config() const { return config_; }
  const std::vector<std::size_t>& closed_branches() const { return closed_; }

  Complex demand(int bus_id) const {
    auto it = demands_.find(bus_id);
    return it == demands_.end() ? Complex(0.0, 0.0) : it->second;
  }
  const std::map<int, Complex>& demands() const { return demands_; }

 private:
  const Network* net_;
  SwitchConfiguration config_;
  std::map<int, Complex> demands_;
  std::vector<std::size_t> closed_;
};

namespace detail {

inline void require_state_keys(const OPFProblem& prob, const BranchFlowState& st) {
  const Network& net = prob.network();
  if (st.v.size() != net.bus_count())
    fail_validation("state has ", st.v.size(), " bus voltages, network has ",
                    net.bus_count(), " buses");
  for (const Bus& b : net.buses())
    if (!st.v.count(b.id)) fail_validation("state missing voltage for bus ", b.id);
  const auto& closed = prob.closed_branches();
  auto check_branch_map = [&](const std::map<int, double>& m, const char* what) {
    if (m.size() != closed.size())
      fail_validation("state has ", m.size(), " ", what, " entries, configuration has ",
                      closed.size(), " closed branches");
    for (std::size_t bi : closed)
      if (!m.count(net.branches()[bi].id))
        fail_validation("state missing ", what, " for closed branch ",
                        net.branches()[bi].id);
  };
  check_branch_map(st.l, "l");
  check_branch_map(st.P, "P");
  check_branch_map(st.Q, "Q");
}

}  // namespace detail

// Per-bus complex mismatch of the power balance equations:
// residual_i = s_i - [sum_out S_ij - sum_in (S_ki - l_ki z_ki)].
inline std::map<int, Complex> power_balance_residual(const OPFProblem& prob,
                                                     const BranchFlowState& st) {
  detail::require_state_keys(prob, st);
  const Network& net = prob.network();
  std::map<int, Complex> residual;
  for (const Bus& b : net.buses()) {
    auto it = st.s.find(b.id);
    residual[b.id] = it == st.s.end() ? Complex(0.0, 0.0) : it->second;
  }
  for (std::size_t bi : prob.closed_branches()) {
    const Branch& br = net.branches()[bi];
    const Complex flow(st.P.at(br.id), st.Q.at(br.id));
    const Complex z(br.r, br.x);
    residual[br.from_bus] -= flow;                       // sum_j S_ij at the from bus
    residual[br.to_bus] += flow - st.l.at(br.id) * z;    // sum_k (S_ki - l_ki z_ki)
  }
  return residual;
}

// Per-branch mismatch of the voltage drop equation:
// residual_ij = v_j - v_i + 2(r P + x Q) - (r^2 + x^2) l.
inline std::map<int, double> voltage_drop_residual(const OPFProblem& prob,
                                                   const BranchFlowState& st) {
  detail::require_state_keys(prob, st);
  const Network& net = prob.network();
  std::map<int, double> residual;
  for (std::size_t bi : prob.closed_branches()) {
    const Branch& br = net.branches()[bi];
    const double vi = st.v.at(br.from_bus);
    const double vj = st.v.at(br.to_bus);
    residual[br.id] = vj - vi + 2.0 * (br.r * st.P.at(br.id) + br.x * st.Q.at(br.id)) -
                      (br.r * br.r + br.x * br.x) * st.l.at(br.id);
  }
  return residual;
}

// Per-branch slack of the second-order cone relaxation:
// gap_ij = l_ij - (P_ij^2 + Q_ij^2) / v_i. Feasible iff gap >= 0; the
// relaxation is tight (the squared-current identity holds) iff gap = 0.
inline std::map<int, double> socp_gap(const OPFProblem& prob, const BranchFlowState& st) {
  detail::require_state_keys(prob, st);
  const Network& net = prob.network();
  std::map<int, double> gap;
  for (std::size_t bi : prob.closed_branches()) {
    const Branch& br = net.branches()[bi];
    const double vi = st.v.at(br.from_bus);
    if (!(vi > 0.0))
      fail_validation("socp_gap: nonpositive squared voltage at bus ", br.from_bus);
    const double p = st.P.at(br.id), q = st.Q.at(br.id);
    gap[br.id] = st.l.at(br.id) - (p * p + q * q) / vi;
  }
  return gap;
}

inline double max_abs_socp_gap(const OPFProblem& prob, const BranchFlowState& st) {
  double worst = 0.0;
  for (const auto& [id, g] : socp_gap(prob, st)) {
    (void)id;
    worst = std::max(worst, std::abs(g));
  }
  return worst;
}

// Total line loss, sum over closed branches of l_ij * r_ij (per-unit).
inline double objective_loss(const OPFProblem& prob, const BranchFlowState& st) {
  detail::require_state_keys(prob, st);
  const Network& net = prob.network();
  double loss = 0.0;
  for (std::size_t bi : prob.closed_branches()) {
    const Branch& br = net.branches()[bi];
    loss += st.l.at(br.id) * br.r;
  }
  return loss;
}

inline double to_kw(const Network& net, double loss_pu) {
  return loss_pu * net.base_mva() * 1000.0;
}

struct LimitViolation {
  enum class Kind { under_voltage, over_voltage, over_current };
  Kind kind;
  int element_id;  // bus id for voltage, branch id for current
  double value;
  double bound;

  std::string describe() const {
    switch (kind) {
      case Kind::under_voltage:
        return detail::concat("bus ", element_id, ": v=", value, " below v_min=", bound);
      case Kind::over_voltage:
        return detail::concat("bus ", element_id, ": v=", value, " above v_max=", bound);
      case Kind::over_current:
        return detail::concat("branch ", element_id, ": l=", value, " above l_max=", bound);
    }
    return {};
  }
};

// Voltage and current limit checks, Eqs.-of-limits style: empty result iff
// v_min <= v <= v_max per bus and l <= l_max per closed branch, within tol.
inline std::vector<LimitViolation> check_limits(const OPFProblem& prob,
                                                const BranchFlowState& st,
                                                double tol = 1e-6) {
  detail::require_state_keys(prob, st);
  const Network& net = prob.network();
  std::vector<LimitViolation> out;
  for (const Bus& b : net.buses()) {
    const double v = st.v.at(b.id);
    if (v < b.v_min - tol)
      out.push_back({LimitViolation::Kind::under_voltage, b.id, v, b.v_min});
    if (v > b.v_max + tol)
      out.push_back({LimitViolation::Kind::over_voltage, b.id, v, b.v_max});
  }
  for (std::size_t bi : prob.closed_branches()) {
    const Branch& br = net.branches()[bi];
    const double l = st.l.at(br.id);
    if (l > br.l_max + tol)
      out.push_back({LimitViolation::Kind::over_current, br.id, l, br.l_max});
  }
  return out;
}

inline nlohmann::json state_to_json(const BranchFlowState& st) {
  nlohmann::json j;
  auto dump_map = [](const std::map<int, double>& m) {
    nlohmann::json o = nlohmann::json::object();
    for (const auto& [k, val] : m) o[std::to_string(k)] = val;
    return o;
  };
  j["v"] = dump_map(st.v);
  j["l"] = dump_map(st.l);
  j["P"] = dump_map(st.P);
  j["Q"] = dump_map(st.Q);
  nlohmann::json s = nlohmann::json::object();
  for (const auto& [k, val] : st.s)
    s[std::to_string(k)] = {{"p", val.real()}, {"q", val.imag()}};
  j["s"] = s;
  return j;
}

}  // namespace dnr
