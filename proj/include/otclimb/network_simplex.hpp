#pragma once

// Primal network simplex for integer min-cost flow with warm restarts.
//
// Spanning-tree basis stored with parent / thread / successor-count indices and
// an artificial root, block-search pivoting.  Between solves the caller may
// append arcs (they enter nonbasic at zero flow) and change arc costs; the
// previous basis stays primal feasible, so the next solve resumes from it.
//
// lock_optimal_face() freezes every nonbasic arc with nonzero reduced cost;
// later pivots use only zero-reduced-cost arcs, so the previous objective is
// preserved and a secondary objective can be optimised over the optimal face.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "otclimb/exact.hpp"

namespace otclimb {

class NetworkSimplex {
 public:
  using Flow = std::int64_t;
  using Cost = std::int64_t;
  using ArcId = std::size_t;

  static constexpr Flow kInfinite = std::numeric_limits<Flow>::max();

  enum class Status { optimal, infeasible, unbounded };

  // cost_bound bounds |cost| of every arc ever added or set.
  NetworkSimplex(std::size_t node_count, Cost cost_bound)
      : node_num_(static_cast<int>(node_count)), cost_bound_(cost_bound) {
    if (cost_bound < 0) throw std::invalid_argument("cost bound must be nonnegative");
    BigInt art = (BigInt(cost_bound) + 1) * (node_count + 1);
    if (art * 4 > BigInt(std::numeric_limits<Cost>::max())) {
      throw std::overflow_error("network simplex cost bound too large for 64-bit potentials");
    }
    art_cost_ = static_cast<Cost>(art);
    supply_.assign(node_count + 1, 0);
    // Artificial arc of node u has index u.
    source_.assign(node_count, 0);
    target_.assign(node_count, 0);
    cap_.assign(node_count, kInfinite);
    cost_.assign(node_count, 0);
    flow_.assign(node_count, 0);
    state_.assign(node_count, kStateTree);
  }

  std::size_t node_count() const { return static_cast<std::size_t>(node_num_); }
  std::size_t arc_count() const { return source_.size() - static_cast<std::size_t>(node_num_); }

  void set_supply(std::size_t node, Flow supply) {
    if (initialized_) throw std::logic_error("supplies are fixed after the first solve");
    supply_.at(node) = supply;
  }

  ArcId add_arc(std::size_t from, std::size_t to, Flow capacity, Cost cost) {
    if (face_locked_) throw std::logic_error("cannot add arcs while the optimal face is locked");
    if (from >= node_count() || to >= node_count()) throw std::out_of_range("arc endpoint");
    if (capacity < 0) throw std::invalid_argument("negative capacity");
    check_cost(cost);
    source_.push_back(static_cast<int>(from));
    target_.push_back(static_cast<int>(to));
    cap_.push_back(capacity);
    cost_.push_back(cost);
    flow_.push_back(0);
    state_.push_back(kStateLower);
    return source_.size() - 1 - static_cast<std::size_t>(node_num_);
  }

  void set_cost(ArcId arc, Cost cost) {
    check_cost(cost);
    cost_[internal(arc)] = cost;
    potentials_stale_ = true;
  }

  Cost cost(ArcId arc) const { return cost_[internal(arc)]; }
  Flow flow(ArcId arc) const { return flow_[internal(arc)]; }
  Flow capacity(ArcId arc) const { return cap_[internal(arc)]; }
  Cost potential(std::size_t node) const { return pi_[node]; }
  Cost reduced_cost(ArcId arc) const {
    auto e = internal(arc);
    return cost_[e] + pi_[source_[e]] - pi_[target_[e]];
  }
  std::int64_t pivot_count() const { return pivots_; }

  BigInt total_cost() const {
    BigInt total = 0;
    for (std::size_t e = static_cast<std::size_t>(node_num_); e < source_.size(); ++e) {
      if (flow_[e] != 0) total += BigInt(flow_[e]) * cost_[e];
    }
    return total;
  }

  Status solve() {
    if (!initialized_) {
      init_tree();
    } else if (potentials_stale_) {
      recompute_potentials();
    }
    potentials_stale_ = false;
    Status status = run();
    if (status == Status::optimal) {
      for (int u = 0; u < node_num_; ++u) {
        if (flow_[static_cast<std::size_t>(u)] != 0) return Status::infeasible;
      }
    }
    return status;
  }

  // Restrict subsequent pivots to the optimal face of the current costs.
  void lock_optimal_face() {
    face_rc_.assign(source_.size(), 0);
    for (std::size_t e = 0; e < source_.size(); ++e) {
      face_rc_[e] = cost_[e] + pi_[source_[e]] - pi_[target_[e]];
    }
    face_locked_ = true;
  }

  void unlock_face() {
    face_locked_ = false;
    face_rc_.clear();
  }

  // Primal feasibility plus nonnegative reduced cost on every residual arc
  // (restricted to the locked face when one is active).
  bool certify_optimal() const {
    std::vector<BigInt> balance(static_cast<std::size_t>(node_num_) + 1, 0);
    for (std::size_t e = 0; e < source_.size(); ++e) {
      if (flow_[e] < 0 || flow_[e] > cap_[e]) return false;
      balance[static_cast<std::size_t>(source_[e])] += flow_[e];
      balance[static_cast<std::size_t>(target_[e])] -= flow_[e];
    }
    for (int u = 0; u < node_num_; ++u) {
      if (balance[static_cast<std::size_t>(u)] != supply_[static_cast<std::size_t>(u)]) return false;
    }
    for (std::size_t e = static_cast<std::size_t>(node_num_); e < source_.size(); ++e) {
      if (face_locked_ && face_rc_[e] != 0) continue;
      Cost rc = cost_[e] + pi_[source_[e]] - pi_[target_[e]];
      if (flow_[e] < cap_[e] && rc < 0) return false;
      if (flow_[e] > 0 && rc > 0) return false;
    }
    return true;
  }

 private:
  static constexpr signed char kStateUpper = -1;
  static constexpr signed char kStateTree = 0;
  static constexpr signed char kStateLower = 1;
  static constexpr signed char kDirUp = 1;
  static constexpr signed char kDirDown = -1;

  std::size_t internal(ArcId arc) const {
    std::size_t e = arc + static_cast<std::size_t>(node_num_);
    if (e >= source_.size()) throw std::out_of_range("arc id");
    return e;
  }

  void check_cost(Cost cost) const {
    if (cost > cost_bound_ || cost < -cost_bound_) {
      throw std::out_of_range("arc cost exceeds the declared cost bound");
    }
  }

  void init_tree() {
    Flow sum = 0;
    for (int u = 0; u < node_num_; ++u) sum += supply_[static_cast<std::size_t>(u)];
    if (sum != 0) throw std::invalid_argument("supplies must balance");
    const int root = node_num_;
    const auto n = static_cast<std::size_t>(node_num_) + 1;
    parent_.assign(n, -1);
    pred_.assign(n, -1);
    thread_.assign(n, 0);
    rev_thread_.assign(n, 0);
    succ_num_.assign(n, 1);
    last_succ_.assign(n, 0);
    pred_dir_.assign(n, kDirUp);
    pi_.assign(n, 0);

    parent_[root] = -1;
    pred_[root] = -1;
    thread_[root] = 0;
    rev_thread_[0] = root;
    succ_num_[root] = node_num_ + 1;
    last_succ_[root] = root - 1;
    supply_[static_cast<std::size_t>(root)] = 0;
    pi_[root] = 0;

    for (int u = 0; u < node_num_; ++u) {
      auto uu = static_cast<std::size_t>(u);
      parent_[uu] = root;
      pred_[uu] = u;
      thread_[uu] = u + 1;
      rev_thread_[uu + 1] = u;
      succ_num_[uu] = 1;
      last_succ_[uu] = u;
      state_[uu] = kStateTree;
      cap_[uu] = kInfinite;
      if (supply_[uu] >= 0) {
        pred_dir_[uu] = kDirUp;
        pi_[uu] = 0;
        source_[uu] = u;
        target_[uu] = root;
        flow_[uu] = supply_[uu];
        cost_[uu] = 0;
      } else {
        pred_dir_[uu] = kDirDown;
        pi_[uu] = art_cost_;
        source_[uu] = root;
        target_[uu] = u;
        flow_[uu] = -supply_[uu];
        cost_[uu] = art_cost_;
      }
    }
    initialized_ = true;
  }

  void recompute_potentials() {
    const int root = node_num_;
    pi_[static_cast<std::size_t>(root)] = 0;
    for (int u = thread_[static_cast<std::size_t>(root)]; u != root; u = thread_[static_cast<std::size_t>(u)]) {
      auto uu = static_cast<std::size_t>(u);
      auto e = static_cast<std::size_t>(pred_[uu]);
      auto p = static_cast<std::size_t>(parent_[uu]);
      pi_[uu] = pred_dir_[uu] == kDirUp ? pi_[p] - cost_[e] : pi_[p] + cost_[e];
    }
  }

  bool find_entering_arc() {
    const std::size_t first = static_cast<std::size_t>(node_num_);
    const std::size_t last = source_.size();
    if (first == last) return false;
    if (next_arc_ < first || next_arc_ >= last) next_arc_ = first;
    const std::size_t search_num = last - first;
    const auto block = std::max<std::size_t>(10, static_cast<std::size_t>(std::sqrt(static_cast<double>(search_num))));
    Cost best = 0;
    std::size_t count = block;
    std::size_t e = next_arc_;
    for (std::size_t visited = 0; visited < search_num; ++visited) {
      if (!face_locked_ || face_rc_[e] == 0) {
        Cost c = state_[e] * (cost_[e] + pi_[static_cast<std::size_t>(source_[e])] -
                              pi_[static_cast<std::size_t>(target_[e])]);
        if (c < best) {
          best = c;
          in_arc_ = e;
        }
      }
      if (++e == last) e = first;
      if (--count == 0) {
        if (best < 0) break;
        count = block;
      }
    }
    if (best >= 0) return false;
    next_arc_ = e;
    return true;
  }

  void find_join_node() {
    int u = source_[in_arc_];
    int v = target_[in_arc_];
    while (u != v) {
      if (succ_num_[static_cast<std::size_t>(u)] < succ_num_[static_cast<std::size_t>(v)]) {
        u = parent_[static_cast<std::size_t>(u)];
      } else {
        v = parent_[static_cast<std::size_t>(v)];
      }
    }
    join_ = u;
  }

  // Returns false when the entering arc itself blocks (bound flip).
  bool find_leaving_arc() {
    int first, second;
    if (state_[in_arc_] == kStateLower) {
      first = source_[in_arc_];
      second = target_[in_arc_];
    } else {
      first = target_[in_arc_];
      second = source_[in_arc_];
    }
    delta_ = cap_[in_arc_];
    int result = 0;
    for (int u = first; u != join_; u = parent_[static_cast<std::size_t>(u)]) {
      auto uu = static_cast<std::size_t>(u);
      auto e = static_cast<std::size_t>(pred_[uu]);
      Flow d = flow_[e];
      if (pred_dir_[uu] == kDirDown) {
        Flow c = cap_[e];
        d = c >= kInfinite ? kInfinite : c - d;
      }
      if (d < delta_) {
        delta_ = d;
        u_out_ = u;
        result = 1;
      }
    }
    for (int u = second; u != join_; u = parent_[static_cast<std::size_t>(u)]) {
      auto uu = static_cast<std::size_t>(u);
      auto e = static_cast<std::size_t>(pred_[uu]);
      Flow d = flow_[e];
      if (pred_dir_[uu] == kDirUp) {
        Flow c = cap_[e];
        d = c >= kInfinite ? kInfinite : c - d;
      }
      if (d <= delta_) {
        delta_ = d;
        u_out_ = u;
        result = 2;
      }
    }
    if (result == 1) {
      u_in_ = first;
      v_in_ = second;
    } else {
      u_in_ = second;
      v_in_ = first;
    }
    return result != 0;
  }

  void change_flow(bool change) {
    if (delta_ > 0) {
      Flow val = state_[in_arc_] * delta_;
      flow_[in_arc_] += val;
      for (int u = source_[in_arc_]; u != join_; u = parent_[static_cast<std::size_t>(u)]) {
        auto uu = static_cast<std::size_t>(u);
        flow_[static_cast<std::size_t>(pred_[uu])] -= pred_dir_[uu] * val;
      }
      for (int u = target_[in_arc_]; u != join_; u = parent_[static_cast<std::size_t>(u)]) {
        auto uu = static_cast<std::size_t>(u);
        flow_[static_cast<std::size_t>(pred_[uu])] += pred_dir_[uu] * val;
      }
    }
    if (change) {
      state_[in_arc_] = kStateTree;
      auto out = static_cast<std::size_t>(pred_[static_cast<std::size_t>(u_out_)]);
      state_[out] = flow_[out] == 0 ? kStateLower : kStateUpper;
    } else {
      state_[in_arc_] = static_cast<signed char>(-state_[in_arc_]);
    }
  }

  void update_tree_structure() {
    auto at = [](int v) { return static_cast<std::size_t>(v); };
    int old_rev_thread = rev_thread_[at(u_out_)];
    int old_succ_num = succ_num_[at(u_out_)];
    int old_last_succ = last_succ_[at(u_out_)];
    v_out_ = parent_[at(u_out_)];

    if (u_in_ == u_out_) {
      parent_[at(u_in_)] = v_in_;
      pred_[at(u_in_)] = static_cast<int>(in_arc_);
      pred_dir_[at(u_in_)] = u_in_ == source_[in_arc_] ? kDirUp : kDirDown;
      if (thread_[at(v_in_)] != u_out_) {
        int after = thread_[at(old_last_succ)];
        thread_[at(old_rev_thread)] = after;
        rev_thread_[at(after)] = old_rev_thread;
        after = thread_[at(v_in_)];
        thread_[at(v_in_)] = u_out_;
        rev_thread_[at(u_out_)] = v_in_;
        thread_[at(old_last_succ)] = after;
        rev_thread_[at(after)] = old_last_succ;
      }
    } else {
      int thread_continue = old_rev_thread == v_in_ ? thread_[at(old_last_succ)] : thread_[at(v_in_)];

      int stem = u_in_;
      int par_stem = v_in_;
      int next_stem;
      int last = last_succ_[at(u_in_)];
      int before;
      int after = thread_[at(last)];
      thread_[at(v_in_)] = u_in_;
      dirty_revs_.clear();
      dirty_revs_.push_back(v_in_);
      while (stem != u_out_) {
        next_stem = parent_[at(stem)];
        thread_[at(last)] = next_stem;
        dirty_revs_.push_back(last);

        before = rev_thread_[at(stem)];
        thread_[at(before)] = after;
        rev_thread_[at(after)] = before;

        parent_[at(stem)] = par_stem;
        par_stem = stem;
        stem = next_stem;

        last = last_succ_[at(stem)] == last_succ_[at(par_stem)] ? rev_thread_[at(par_stem)]
                                                               : last_succ_[at(stem)];
        after = thread_[at(last)];
      }
      parent_[at(u_out_)] = par_stem;
      thread_[at(last)] = thread_continue;
      rev_thread_[at(thread_continue)] = last;
      last_succ_[at(u_out_)] = last;

      if (old_rev_thread != v_in_) {
        thread_[at(old_rev_thread)] = after;
        rev_thread_[at(after)] = old_rev_thread;
      }

      for (int u : dirty_revs_) rev_thread_[at(thread_[at(u)])] = u;

      int tmp_sc = 0;
      int tmp_ls = last_succ_[at(u_out_)];
      for (int u = u_out_, p = parent_[at(u)]; u != u_in_; u = p, p = parent_[at(u)]) {
        pred_[at(u)] = pred_[at(p)];
        pred_dir_[at(u)] = static_cast<signed char>(-pred_dir_[at(p)]);
        tmp_sc += succ_num_[at(u)] - succ_num_[at(p)];
        succ_num_[at(u)] = tmp_sc;
        last_succ_[at(p)] = tmp_ls;
      }
      pred_[at(u_in_)] = static_cast<int>(in_arc_);
      pred_dir_[at(u_in_)] = u_in_ == source_[in_arc_] ? kDirUp : kDirDown;
      succ_num_[at(u_in_)] = old_succ_num;
    }

    int up_limit_out = last_succ_[at(join_)] == v_in_ ? join_ : -1;
    int last_succ_out = last_succ_[at(u_out_)];
    for (int u = v_in_; u != -1 && last_succ_[at(u)] == v_in_; u = parent_[at(u)]) {
      last_succ_[at(u)] = last_succ_out;
    }

    if (join_ != old_rev_thread && v_in_ != old_rev_thread) {
      for (int u = v_out_; u != up_limit_out && last_succ_[at(u)] == old_last_succ; u = parent_[at(u)]) {
        last_succ_[at(u)] = old_rev_thread;
      }
    } else if (last_succ_out != old_last_succ) {
      for (int u = v_out_; u != up_limit_out && last_succ_[at(u)] == old_last_succ; u = parent_[at(u)]) {
        last_succ_[at(u)] = last_succ_out;
      }
    }

    for (int u = v_in_; u != join_; u = parent_[at(u)]) succ_num_[at(u)] += old_succ_num;
    for (int u = v_out_; u != join_; u = parent_[at(u)]) succ_num_[at(u)] -= old_succ_num;
  }

  void update_potential() {
    auto at = [](int v) { return static_cast<std::size_t>(v); };
    Cost sigma = pi_[at(v_in_)] - pi_[at(u_in_)] - pred_dir_[at(u_in_)] * cost_[in_arc_];
    int end = thread_[at(last_succ_[at(u_in_)])];
    for (int u = u_in_; u != end; u = thread_[at(u)]) pi_[at(u)] += sigma;
  }

  Status run() {
    while (find_entering_arc()) {
      find_join_node();
      bool change = find_leaving_arc();
      if (delta_ >= kInfinite) return Status::unbounded;
      change_flow(change);
      if (change) {
        update_tree_structure();
        update_potential();
      }
      ++pivots_;
    }
    return Status::optimal;
  }

  int node_num_;
  Cost cost_bound_;
  Cost art_cost_ = 0;
  bool initialized_ = false;
  bool potentials_stale_ = false;
  bool face_locked_ = false;

  std::vector<Flow> supply_;
  std::vector<int> source_;
  std::vector<int> target_;
  std::vector<Flow> cap_;
  std::vector<Cost> cost_;
  std::vector<Flow> flow_;
  std::vector<signed char> state_;
  std::vector<Cost> face_rc_;

  std::vector<int> parent_;
  std::vector<int> pred_;
  std::vector<int> thread_;
  std::vector<int> rev_thread_;
  std::vector<int> succ_num_;
  std::vector<int> last_succ_;
  std::vector<signed char> pred_dir_;
  std::vector<Cost> pi_;
  std::vector<int> dirty_revs_;

  std::size_t next_arc_ = 0;
  std::size_t in_arc_ = 0;
  int join_ = 0;
  int u_in_ = 0;
  int v_in_ = 0;
  int u_out_ = 0;
  int v_out_ = 0;
  Flow delta_ = 0;
  std::int64_t pivots_ = 0;
};

}  // namespace otclimb
