#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dnr/common.hpp"
#include "dnr/parallel.hpp"

namespace dnr {

enum class BusRole { slack, load };

struct Bus {
  int id = 0;
  BusRole role = BusRole::load;
  double v_min = 0.81;  // squared voltage bounds, per-unit^2
  double v_max = 1.21;
  double demand_p = 0.0;  // per-unit
  double demand_q = 0.0;
};

enum class BranchKind { fixed, switchable };

struct Branch {
  int id = 0;
  int from_bus = 0;
  int to_bus = 0;
  double r = 0.0;  // per-unit
  double x = 0.0;
  double l_max = 4.0;  // squared current limit, per-unit^2
  BranchKind kind = BranchKind::fixed;
  std::string name;          // defaults to "BR-<id>"
  bool normally_open = true; // baseline switch state; meaningful for switchables only

  bool switchable() const { return kind == BranchKind::switchable; }
};

// Boolean vector over the network's switchable branches, file order.
// true = closed.
struct SwitchConfiguration {
  std::vector<bool> states;

  friend bool operator==(const SwitchConfiguration& a, const SwitchConfiguration& b) {
    return a.states == b.states;
  }
  friend bool operator<(const SwitchConfiguration& a, const SwitchConfiguration& b) {
    return std::lexicographical_compare(a.states.begin(), a.states.end(),
                                        b.states.begin(), b.states.end());
  }
  std::string to_string() const {
    std::string s;
    s.reserve(states.size());
    for (bool on : states) s += on ? '1' : '0';
    return s;
  }
};

// Immutable bus/branch graph with per-unit data. Validated on construction;
// safe to share read-only across threads.
class Network {
 public:
  Network(std::vector<Bus> buses, std::vector<Branch> branches,
          double base_mva, double base_kv)
      : buses_(std::move(buses)),
        branches_(std::move(branches)),
        base_mva_(base_mva),
        base_kv_(base_kv) {
    validate();
  }

  const std::vector<Bus>& buses() const { return buses_; }
  const std::vector<Branch>& branches() const { return branches_; }
  double base_mva() const { return base_mva_; }
  double base_kv() const { return base_kv_; }

  std::size_t bus_count() const { return buses_.size(); }
  std::size_t slack_count() const { return slack_count_; }

  std::size_t bus_index(int bus_id) const {
    auto it = bus_index_.find(bus_id);
    if (it == bus_index_.end()) fail_validation("unknown bus id ", bus_id);
    return it->second;
  }
  std::size_t branch_index(int branch_id) const {
    auto it = branch_index_.find(branch_id);
    if (it == branch_index_.end()) fail_validation("unknown branch id ", branch_id);
    return it->second;
  }

  // Switchable branch indices, file order; defines SwitchConfiguration layout.
  const std::vector<std::size_t>& switchable_indices() const { return switchables_; }
  std::size_t switchable_count() const { return switchables_.size(); }

  // Baseline switch states from the normally_open flags in the input file.
  SwitchConfiguration baseline_configuration() const {
    SwitchConfiguration cfg;
    cfg.states.reserve(switchables_.size());
    for (std::size_t bi : switchables_) cfg.states.push_back(!branches_[bi].normally_open);
    return cfg;
  }

  // Branch indices active under cfg: all fixed branches plus closed switchables.
  std::vector<std::size_t> closed_branch_indices(const SwitchConfiguration& cfg) const {
    require_cfg(cfg);
    std::vector<std::size_t> closed;
    closed.reserve(branches_.size());
    std::size_t s = 0;
    for (std::size_t bi = 0; bi < branches_.size(); ++bi) {
      if (branches_[bi].switchable()) {
        if (cfg.states[s++]) closed.push_back(bi);
      } else {
        closed.push_back(bi);
      }
    }
    return closed;
  }

  void require_cfg(const SwitchConfiguration& cfg) const {
    if (cfg.states.size() != switchables_.size())
      fail_validation("switch configuration has ", cfg.states.size(),
                      " entries, network has ", switchables_.size(),
                      " switchable branches");
  }

 private:
  void validate() {
    if (base_mva_ <= 0.0) fail_validation("base_mva must be positive");
    if (base_kv_ <= 0.0) fail_validation("base_kv must be positive");
    if (buses_.empty()) fail_validation("network has no buses");
    for (std::size_t i = 0; i < buses_.size(); ++i) {
      const Bus& b = buses_[i];
      if (!(b.v_min > 0.0 && b.v_min < b.v_max))
        fail_validation("bus ", b.id, ": requires 0 < v_min < v_max");
      if (!bus_index_.emplace(b.id, i).second)
        fail_validation("duplicate bus id ", b.id);
      if (b.role == BusRole::slack) ++slack_count_;
    }
    if (slack_count_ == 0) fail_validation("network has no slack bus");
    for (std::size_t i = 0; i < branches_.size(); ++i) {
      Branch& br = branches_[i];
      if (!branch_index_.emplace(br.id, i).second)
        fail_validation("duplicate branch id ", br.id);
      if (br.from_bus == br.to_bus)
        fail_validation("branch ", br.id, ": from_bus equals to_bus");
      if (!bus_index_.count(br.from_bus))
        fail_validation("branch ", br.id, ": unknown from bus ", br.from_bus);
      if (!bus_index_.count(br.to_bus))
        fail_validation("branch ", br.id, ": unknown to bus ", br.to_bus);
      if (br.r < 0.0) fail_validation("branch ", br.id, ": negative resistance");
      if (br.r == 0.0 && br.x == 0.0)
        fail_validation("branch ", br.id, ": r and x both zero");
      if (br.l_max <= 0.0) fail_validation("branch ", br.id, ": l_max must be positive");
      if (br.name.empty()) br.name = "BR-" + std::to_string(br.id);
      if (br.switchable()) switchables_.push_back(i);
    }
  }

  std::vector<Bus> buses_;
  std::vector<Branch> branches_;
  double base_mva_ = 1.0;
  double base_kv_ = 1.0;
  std::map<int, std::size_t> bus_index_;
  std::map<int, std::size_t> branch_index_;
  std::vector<std::size_t> switchables_;
  std::size_t slack_count_ = 0;
};

namespace detail {

inline const nlohmann::json& expect_field(const nlohmann::json& j, const char* key,
                                          const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) fail_parse(where, ": missing field '", key, "'");
  return *it;
}

inline double expect_number(const nlohmann::json& j, const char* key,
                            const std::string& where) {
  const auto& f = expect_field(j, key, where);
  if (!f.is_number()) fail_parse(where, ": field '", key, "' must be a number");
  return f.get<double>();
}

inline int expect_int(const nlohmann::json& j, const char* key, const std::string& where) {
  const auto& f = expect_field(j, key, where);
  if (!f.is_number_integer()) fail_parse(where, ": field '", key, "' must be an integer");
  return f.get<int>();
}

// Union-find over bus indices.
class DisjointSet {
 public:
  explicit DisjointSet(std::size_t n) : parent_(n), rank_(n, 0) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }
  std::size_t find(std::size_t a) {
    while (parent_[a] != a) {
      parent_[a] = parent_[parent_[a]];
      a = parent_[a];
    }
    return a;
  }
  // false if a and b were already connected (union would close a cycle).
  bool unite(std::size_t a, std::size_t b) {
    std::size_t ra = find(a), rb = find(b);
    if (ra == rb) return false;
    if (rank_[ra] < rank_[rb]) std::swap(ra, rb);
    parent_[rb] = ra;
    if (rank_[ra] == rank_[rb]) ++rank_[ra];
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> rank_;
};

}  // namespace detail

inline Network parse_network_json(const nlohmann::json& doc, const std::string& origin) {
  using detail::expect_field;
  using detail::expect_int;
  using detail::expect_number;

  double base_mva = expect_number(doc, "base_mva", origin);
  double base_kv = expect_number(doc, "base_kv", origin);

  const auto& jbuses = expect_field(doc, "buses", origin);
  if (!jbuses.is_array()) fail_parse(origin, ": 'buses' must be an array");
  std::vector<Bus> buses;
  buses.reserve(jbuses.size());
  for (std::size_t i = 0; i < jbuses.size(); ++i) {
    std::string where = origin + ": buses[" + std::to_string(i) + "]";
    const auto& jb = jbuses[i];
    Bus b;
    b.id = expect_int(jb, "id", where);
    std::string role = expect_field(jb, "role", where).get<std::string>();
    if (role == "slack") {
      b.role = BusRole::slack;
    } else if (role == "load") {
      b.role = BusRole::load;
    } else {
      fail_parse(where, ": role must be \"slack\" or \"load\", got \"", role, "\"");
    }
    b.v_min = expect_number(jb, "v_min", where);
    b.v_max = expect_number(jb, "v_max", where);
    b.demand_p = expect_number(jb, "p", where);
    b.demand_q = expect_number(jb, "q", where);
    buses.push_back(b);
  }

  const auto& jbranches = expect_field(doc, "branches", origin);
  if (!jbranches.is_array()) fail_parse(origin, ": 'branches' must be an array");
  std::vector<Branch> branches;
  branches.reserve(jbranches.size());
  for (std::size_t i = 0; i < jbranches.size(); ++i) {
    std::string where = origin + ": branches[" + std::to_string(i) + "]";
    const auto& jb = jbranches[i];
    Branch br;
    br.id = expect_int(jb, "id", where);
    br.from_bus = expect_int(jb, "from", where);
    br.to_bus = expect_int(jb, "to", where);
    br.r = expect_number(jb, "r", where);
    br.x = expect_number(jb, "x", where);
    br.l_max = expect_number(jb, "l_max", where);
    const auto& sw = expect_field(jb, "switchable", where);
    if (!sw.is_boolean()) fail_parse(where, ": 'switchable' must be a boolean");
    br.kind = sw.get<bool>() ? BranchKind::switchable : BranchKind::fixed;
    if (auto it = jb.find("name"); it != jb.end()) br.name = it->get<std::string>();
    if (auto it = jb.find("normally_open"); it != jb.end()) {
      if (!it->is_boolean()) fail_parse(where, ": 'normally_open' must be a boolean");
      br.normally_open = it->get<bool>();
    }
    branches.push_back(br);
  }

  return Network(std::move(buses), std::move(branches), base_mva, base_kv);
}

// Loads and validates a network file (JSON schema documented in the README).
inline Network load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_parse("cannot open network file: ", path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    fail_parse(path, ": ", e.what());
  }
  return parse_network_json(doc, path);
}

// Symmetric 0/1 bus adjacency under cfg, indexed by bus position in the file.
// A[i][j] = 1 iff a fixed branch or a closed switchable branch joins i and j.
inline std::vector<std::vector<int>> adjacency_matrix(const Network& net,
                                                      const SwitchConfiguration& cfg) {
  const std::size_t n = net.bus_count();
  std::vector<std::vector<int>> a(n, std::vector<int>(n, 0));
  for (std::size_t bi : net.closed_branch_indices(cfg)) {
    const Branch& br = net.branches()[bi];
    std::size_t i = net.bus_index(br.from_bus);
    std::size_t j = net.bus_index(br.to_bus);
    a[i][j] = 1;
    a[j][i] = 1;
  }
  return a;
}

// True iff the closed-branch subgraph is a spanning forest in which every
// tree contains exactly one slack bus: edge count N - d, no cycles, and no
// bus left without (or with more than one) slack. Union-find keeps the test
// exact over integers.
inline bool is_radial(const Network& net, const SwitchConfiguration& cfg) {
  const auto closed = net.closed_branch_indices(cfg);
  const std::size_t n = net.bus_count();
  const std::size_t d = net.slack_count();
  if (closed.size() != n - d) return false;

  detail::DisjointSet ds(n);
  for (std::size_t bi : closed) {
    const Branch& br = net.branches()[bi];
    if (!ds.unite(net.bus_index(br.from_bus), net.bus_index(br.to_bus)))
      return false;  // cycle
  }
  // Edge count and acyclicity leave exactly d components; each needs its slack.
  std::map<std::size_t, int> slacks_per_root;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t root = ds.find(i);
    if (net.buses()[i].role == BusRole::slack) ++slacks_per_root[root];
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto it = slacks_per_root.find(ds.find(i));
    if (it == slacks_per_root.end() || it->second != 1) return false;
  }
  return true;
}

// All radial members of the 2^S switch permutations, lexicographic by state
// vector. The index space is partitioned across workers and merged back in
// order, so output is identical for any worker count.
inline std::vector<SwitchConfiguration> enumerate_radial_configurations(
    const Network& net, unsigned max_switchables = 20, unsigned workers = 1) {
  const std::size_t s = net.switchable_count();
  if (s > max_switchables)
    fail_validation("network has ", s, " switchable branches, enumeration cap is ",
                    max_switchables, "; raise the cap to enumerate 2^", s,
                    " configurations");

  const std::uint64_t total = std::uint64_t{1} << s;
  const std::size_t chunk_count = std::min<std::uint64_t>(total, workers == 0 ? 1 : workers);
  const std::uint64_t chunk = (total + chunk_count - 1) / chunk_count;

  auto scan = [&](std::size_t c) {
    std::vector<SwitchConfiguration> found;
    const std::uint64_t lo = c * chunk;
    const std::uint64_t hi = std::min<std::uint64_t>(total, lo + chunk);
    for (std::uint64_t code = lo; code < hi; ++code) {
      SwitchConfiguration cfg;
      cfg.states.resize(s);
      for (std::size_t k = 0; k < s; ++k)
        cfg.states[k] = (code >> (s - 1 - k)) & 1u;  // states[0] most significant
      if (is_radial(net, cfg)) found.push_back(std::move(cfg));
    }
    return found;
  };

  auto chunks = parallel_map<std::vector<SwitchConfiguration>>(
      chunk_count, static_cast<unsigned>(chunk_count), scan);
  std::vector<SwitchConfiguration> out;
  for (auto& part : chunks)
    out.insert(out.end(), std::make_move_iterator(part.begin()),
               std::make_move_iterator(part.end()));
  return out;
}

// Names of switchable branches open under cfg, file order.
inline std::vector<std::string> open_switch_names(const Network& net,
                                                  const SwitchConfiguration& cfg) {
  net.require_cfg(cfg);
  std::vector<std::string> names;
  for (std::size_t k = 0; k < cfg.states.size(); ++k)
    if (!cfg.states[k]) names.push_back(net.branches()[net.switchable_indices()[k]].name);
  return names;
}

}  // namespace dnr
