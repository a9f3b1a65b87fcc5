#include "grasshopper/annealer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <numeric>
#include <random>

#include "grasshopper/error.hpp"
#include "grasshopper/kernels.hpp"
#include "grasshopper/site_index.hpp"

namespace grasshopper {

namespace {

constexpr double kFrozenAcceptance = 0.05;

void require_same_grid(const LawnState& state, const ShellTable& shells) {
  if (state.grid_ptr() != shells.grid_ptr() && state.grid().hash() != shells.grid().hash()) {
    fail(ErrorCode::GridMismatch, "lawn and shell table were built on different grids");
  }
}

/// Cached local fields for O(|shell|) updates and O(1) deltas.
/// One-lawn: F_i = sum_j w_ij s_j, Q = s . F.
/// Two-lawn: G_i = sum_j w_ij (1 - s2_j), H_j = sum_i w_ji s1_i, Q = s1 . G.
class FieldCache {
 public:
  FieldCache(LawnState& state, const ShellTable& shells)
      : state_(state),
        shells_(shells),
        two_(is_two_lawn(state.setup())),
        pre_(probability_prefactor(state.size(), state.grid().spacing(), shells.theta())) {
    rebuild();
  }

  void rebuild() {
    const std::size_t n = state_.size();
    const Spins& s1 = state_.spins(1);
    a_.assign(n, 0.0);
    b_.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto nb = shells_.neighbors(i);
      const auto w = shells_.weights(i);
      double fa = 0.0;
      double fb = 0.0;
      for (std::size_t k = 0; k < nb.size(); ++k) {
        if (two_) {
          if (!state_.spins(2)[nb[k]]) fa += w[k];
          if (s1[nb[k]]) fb += w[k];
        } else if (s1[nb[k]]) {
          fa += w[k];
        }
      }
      a_[i] = fa;
      b_[i] = fb;
    }
    std::vector<double> terms(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      if (s1[i]) terms[i] = a_[i];
    q_ = kernels::pairwise_sum(terms);
  }

  double probability() const { return pre_ * q_; }
  double prefactor() const { return pre_; }

  /// Change in Q when every site in `sites` of `lawn` is toggled.
  double delta_q(int lawn, std::span<const std::uint32_t> sites) const {
    const Spins& s = state_.spins(lawn);
    double dq = 0.0;
    if (!two_) {
      for (std::size_t x = 0; x < sites.size(); ++x) {
        const double dx = s[sites[x]] ? -1.0 : 1.0;
        dq += 2.0 * dx * a_[sites[x]];
        for (std::size_t y = x + 1; y < sites.size(); ++y) {
          const double w = shells_.weight(sites[x], sites[y]);
          if (w != 0.0) dq += 2.0 * dx * (s[sites[y]] ? -1.0 : 1.0) * w;
        }
      }
    } else if (lawn == 1) {
      for (std::uint32_t x : sites) dq += (s[x] ? -1.0 : 1.0) * a_[x];
    } else {
      for (std::uint32_t y : sites) dq -= (s[y] ? -1.0 : 1.0) * b_[y];
    }
    return dq;
  }

  void apply(int lawn, std::span<const std::uint32_t> sites, double dq) {
    for (std::uint32_t x : sites) {
      const double d = state_.spins(lawn)[x] ? -1.0 : 1.0;
      const auto nb = shells_.neighbors(x);
      const auto w = shells_.weights(x);
      if (!two_) {
        for (std::size_t k = 0; k < nb.size(); ++k) a_[nb[k]] += d * w[k];
      } else if (lawn == 1) {
        for (std::size_t k = 0; k < nb.size(); ++k) b_[nb[k]] += d * w[k];
      } else {
        for (std::size_t k = 0; k < nb.size(); ++k) a_[nb[k]] -= d * w[k];
      }
      state_.toggle(lawn, x);
    }
    q_ += dq;
  }

  const std::vector<double>& field_a() const { return a_; }

 private:
  LawnState& state_;
  const ShellTable& shells_;
  bool two_;
  double pre_;
  std::vector<double> a_;
  std::vector<double> b_;
  double q_ = 0.0;
};

struct FlipSet {
  int lawn = 1;
  std::vector<std::uint32_t> sites;
};

/// Tracks 1-sites and 0-sites for O(1) uniform exchange proposals.
class OccupancyLists {
 public:
  explicit OccupancyLists(const Spins& s) : pos_(s.size()) {
    for (std::uint32_t i = 0; i < s.size(); ++i) {
      auto& list = s[i] ? ones_ : zeros_;
      pos_[i] = list.size();
      list.push_back(i);
    }
  }
  const std::vector<std::uint32_t>& ones() const { return ones_; }
  const std::vector<std::uint32_t>& zeros() const { return zeros_; }
  /// Records that `on` (a 1-site) and `off` (a 0-site) swapped values.
  void exchange(std::uint32_t on, std::uint32_t off) {
    const std::size_t a = pos_[on];
    const std::size_t b = pos_[off];
    ones_[a] = off;
    zeros_[b] = on;
    pos_[off] = a;
    pos_[on] = b;
  }

 private:
  std::vector<std::size_t> pos_;
  std::vector<std::uint32_t> ones_;
  std::vector<std::uint32_t> zeros_;
};

using Rng = std::mt19937_64;

std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

/// Proposal source: fills a flip set, or returns false when it has nothing to
/// propose. `accepted` is called after an accepted flip has been applied.
struct Proposer {
  std::function<void()> begin_sweep;
  std::function<std::size_t()> sweep_length;
  std::function<bool(Rng&, FlipSet&)> propose;
  std::function<void(const FlipSet&)> accepted;
};

Proposer full_proposer(LawnState& state, std::shared_ptr<OccupancyLists> lists) {
  Proposer p;
  const std::size_t n = state.size();
  p.begin_sweep = [] {};
  p.sweep_length = [n] { return n / 2; };
  if (state.setup() == SetupKind::NonAntipodalOneLawn) {
    p.propose = [lists](Rng& rng, FlipSet& f) {
      f.lawn = 1;
      f.sites.assign({lists->ones()[uniform_index(rng, lists->ones().size())],
                      lists->zeros()[uniform_index(rng, lists->zeros().size())]});
      return true;
    };
    p.accepted = [lists](const FlipSet& f) { lists->exchange(f.sites[0], f.sites[1]); };
  } else {
    const bool two = is_two_lawn(state.setup());
    const SphericalGrid* g = &state.grid();
    p.propose = [two, g, n](Rng& rng, FlipSet& f) {
      f.lawn = two && (rng() & 1u) ? 2 : 1;
      const auto i = static_cast<std::uint32_t>(uniform_index(rng, n));
      f.sites.assign({i, g->antipode(i)});
      return true;
    };
    p.accepted = [](const FlipSet&) {};
  }
  return p;
}

OptimizationResult run_metropolis(const LawnState& start, const ShellTable& shells,
                                  const AnnealSchedule& schedule, Phase phase,
                                  const std::function<Proposer(LawnState&)>& make_proposer,
                                  double t_initial) {
  if (!(schedule.cooling > 0.0 && schedule.cooling < 1.0) || schedule.sweeps_per_temperature < 1 ||
      schedule.stall_limit < 1 || schedule.refresh_interval < 1) {
    fail(ErrorCode::InvalidArgument, "invalid annealing schedule");
  }
  const double t_min = schedule.t_min > 0.0 ? schedule.t_min : t_initial * 1e-4;
  if (!(t_min < t_initial)) fail(ErrorCode::InvalidArgument, "t_min must be below t_initial");

  LawnState state = start;
  FieldCache cache(state, shells);
  Proposer proposer = make_proposer(state);
  Rng rng(schedule.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  OptimizationResult result{start, cache.probability(), {}, phase, t_initial, 0};
  FlipSet flip;
  long long sweep = 0;
  int stall = 0;
  bool stop = false;
  for (double temp = t_initial; temp > t_min && !stop; temp *= schedule.cooling) {
    for (int s = 0; s < schedule.sweeps_per_temperature && !stop; ++s) {
      proposer.begin_sweep();
      const std::size_t length = proposer.sweep_length();
      std::size_t accepted = 0;
      std::size_t proposed = 0;
      for (std::size_t k = 0; k < length; ++k) {
        if (!proposer.propose(rng, flip)) break;
        ++proposed;
        const double dq = cache.delta_q(flip.lawn, flip.sites);
        const double dp = cache.prefactor() * dq;
        if (dp >= 0.0 || unit(rng) < std::exp(dp / temp)) {
          cache.apply(flip.lawn, flip.sites, dq);
          proposer.accepted(flip);
          ++accepted;
        }
      }
      result.moves_applied += static_cast<long long>(accepted);
      ++sweep;
      if (sweep % schedule.refresh_interval == 0) cache.rebuild();
      if (schedule.check_invariants) state.validate();
      const double rate = proposed ? static_cast<double>(accepted) / static_cast<double>(proposed) : 0.0;
      const double current = cache.probability();
      if (current > result.best_probability) {
        result.best_probability = current;
        result.best_state = state;
        stall = 0;
      } else if (rate < kFrozenAcceptance) {
        ++stall;
      }
      result.history.push_back({temp, current, result.best_probability, rate});
      if (proposed == 0 || stall >= schedule.stall_limit) stop = true;
      if (schedule.max_sweeps > 0 && sweep >= schedule.max_sweeps) stop = true;
    }
  }
  result.best_probability = evaluate_probability(result.best_state, shells);
  return result;
}

/// 5 x mean |dP| over 1000 proposals from `state` (nothing is applied).
double initial_temperature(LawnState& state, const ShellTable& shells, Proposer p,
                           std::uint64_t seed) {
  FieldCache cache(state, shells);
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  FlipSet flip;
  p.begin_sweep();
  double sum = 0.0;
  int samples = 0;
  for (; samples < 1000 && p.propose(rng, flip); ++samples) {
    sum += std::abs(cache.prefactor() * cache.delta_q(flip.lawn, flip.sites));
  }
  const double t = samples ? 5.0 * sum / samples : 0.0;
  return t > 0.0 ? t : 1e-12;
}

}  // namespace

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::FullAnneal: return "FullAnneal";
    case Phase::BoundaryAnneal: return "BoundaryAnneal";
    case Phase::Greedy: return "Greedy";
    case Phase::SymmetricAnneal: return "SymmetricAnneal";
  }
  return "FullAnneal";
}

double auto_initial_temperature(const LawnState& state, const ShellTable& shells,
                                std::uint64_t seed) {
  require_same_grid(state, shells);
  LawnState scratch = state;
  return initial_temperature(scratch, shells,
                             full_proposer(scratch, std::make_shared<OccupancyLists>(scratch.spins(1))), seed);
}

OptimizationResult anneal(const LawnState& state, const ShellTable& shells,
                          const AnnealSchedule& schedule) {
  require_same_grid(state, shells);
  const double t0 = schedule.t_initial > 0.0 ? schedule.t_initial
                                             : auto_initial_temperature(state, shells, schedule.seed);
  return run_metropolis(
      state, shells, schedule, Phase::FullAnneal,
      [](LawnState& s) { return full_proposer(s, std::make_shared<OccupancyLists>(s.spins(1))); }, t0);
}

OptimizationResult boundary_refine(const LawnState& state, const ShellTable& shells,
                                   const AnnealSchedule& schedule, double radius_factor) {
  require_same_grid(state, shells);
  if (radius_factor < 1.0) fail(ErrorCode::InvalidArgument, "radius_factor must be >= 1");
  const SphericalGrid& g = state.grid();
  const SiteIndex index(g);
  auto near = std::make_shared<std::vector<std::vector<std::uint32_t>>>(g.size());
  for (std::uint32_t i = 0; i < g.size(); ++i) (*near)[i] = index.neighbors_within(i, radius_factor * g.spacing());

  const double t0 = schedule.t_initial > 0.0 ? schedule.t_initial
                                             : auto_initial_temperature(state, shells, schedule.seed);
  const auto make = [near](LawnState& s) {
    Proposer p;
    const int lawns = is_two_lawn(s.setup()) ? 2 : 1;
    const bool exchange = s.setup() == SetupKind::NonAntipodalOneLawn;
    // boundary[k][0] / [1]: boundary sites of lawn k+1 with spin 0 / 1.
    auto boundary = std::make_shared<std::array<std::array<std::vector<std::uint32_t>, 2>, 2>>();
    const std::size_t n = s.size();
    p.begin_sweep = [&s, near, boundary, lawns] {
      for (int k = 0; k < lawns; ++k) {
        const Spins& sp = s.spins(k + 1);
        for (auto& v : (*boundary)[k]) v.clear();
        for (std::uint32_t i = 0; i < sp.size(); ++i) {
          for (std::uint32_t j : (*near)[i]) {
            if (sp[j] != sp[i]) {
              (*boundary)[k][sp[i]].push_back(i);
              break;
            }
          }
        }
      }
    };
    p.sweep_length = [n] { return n / 2; };
    const SphericalGrid* g = &s.grid();
    p.propose = [boundary, lawns, exchange, g](Rng& rng, FlipSet& f) {
      f.lawn = lawns == 2 && (rng() & 1u) ? 2 : 1;
      const auto& b = (*boundary)[f.lawn - 1];
      if (exchange) {
        if (b[0].empty() || b[1].empty()) return false;
        f.sites.assign({b[1][uniform_index(rng, b[1].size())], b[0][uniform_index(rng, b[0].size())]});
        return true;
      }
      const std::size_t total = b[0].size() + b[1].size();
      if (total == 0) return false;
      const std::size_t k = uniform_index(rng, total);
      const std::uint32_t i = k < b[0].size() ? b[0][k] : b[1][k - b[0].size()];
      f.sites.assign({i, g->antipode(i)});
      return true;
    };
    // A flipped boundary site may have left the boundary; the next sweep
    // recomputes the lists, and stale entries are still valid moves.
    p.accepted = [boundary, exchange, lawns](const FlipSet& f) {
      if (!exchange) return;
      auto& b = (*boundary)[0];
      for (int v = 0; v < 2; ++v) {
        for (auto& x : b[v]) {
          if (x == f.sites[0]) x = f.sites[1];
          else if (x == f.sites[1]) x = f.sites[0];
        }
      }
      (void)lawns;
    };
    return p;
  };
  OptimizationResult r = run_metropolis(state, shells, schedule, Phase::BoundaryAnneal, make, t0);
  return r;
}

OptimizationResult greedy_descent(const LawnState& state, const ShellTable& shells,
                                  std::uint64_t seed) {
  require_same_grid(state, shells);
  LawnState s = state;
  FieldCache cache(s, shells);
  Rng rng(seed);
  const std::size_t n = s.size();
  // Guard against accepting pure rounding noise, which could cycle.
  const double eps = 1e-12 * std::max(1.0, cache.probability()) / cache.prefactor();
  OptimizationResult result{state, cache.probability(), {}, Phase::Greedy, 0.0, 0};
  FlipSet flip;

  if (s.setup() != SetupKind::NonAntipodalOneLawn) {
    std::vector<std::pair<int, std::uint32_t>> moves;
    const int lawns = is_two_lawn(s.setup()) ? 2 : 1;
    for (int k = 1; k <= lawns; ++k)
      for (std::uint32_t i = 0; i < n; ++i)
        if (i < s.grid().antipode(i)) moves.emplace_back(k, i);
    while (true) {
      std::shuffle(moves.begin(), moves.end(), rng);
      std::size_t applied = 0;
      for (const auto& [lawn, i] : moves) {
        flip.lawn = lawn;
        flip.sites.assign({i, s.grid().antipode(i)});
        const double dq = cache.delta_q(lawn, flip.sites);
        if (dq > eps) {
          cache.apply(lawn, flip.sites, dq);
          ++applied;
        }
      }
      result.moves_applied += static_cast<long long>(applied);
      result.history.push_back({0.0, cache.probability(), cache.probability(), double(applied) / double(moves.size())});
      if (applied == 0) break;
    }
  } else {
    // For each 1-site a (shuffled), the best exchange partner b maximizes
    // F_b - w_ab over 0-sites; apply it when it improves P.
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    while (true) {
      std::shuffle(order.begin(), order.end(), rng);
      std::size_t applied = 0;
      for (std::uint32_t a : order) {
        if (!s.spins(1)[a]) continue;
        const auto& f = cache.field_a();
        std::uint32_t best = 0;
        double best_gain = -1e300;
        for (std::uint32_t b = 0; b < n; ++b) {
          if (s.spins(1)[b]) continue;
          double gain = f[b];
          if (gain <= best_gain) continue;
          gain -= shells.weight(a, b);
          if (gain > best_gain) {
            best_gain = gain;
            best = b;
          }
        }
        flip.lawn = 1;
        flip.sites.assign({a, best});
        const double dq = cache.delta_q(1, flip.sites);
        if (dq > eps) {
          cache.apply(1, flip.sites, dq);
          ++applied;
        }
      }
      result.moves_applied += static_cast<long long>(applied);
      result.history.push_back({0.0, cache.probability(), cache.probability(), double(applied) / double(n / 2)});
      if (applied == 0) break;
    }
  }
  result.best_state = s;
  result.best_probability = evaluate_probability(s, shells);
  return result;
}

namespace {

/// Label of site i: the site nearest to p_i rotated back into the wedge
/// [0, 2 pi / k) about the frame axis, followed until it is a fixed point.
std::vector<std::uint32_t> wedge_labels(const SphericalGrid& g, const SiteIndex& index,
                                        const Frame& frame, int k_fold) {
  const std::size_t n = g.size();
  const double width = 2.0 * std::numbers::pi / k_fold;
  std::vector<std::uint32_t> rep(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const Vec3 q = frame.to_local(g.point(i));
    const double phi = azimuth(q);
    const int m = std::min(k_fold - 1, static_cast<int>(phi / width));
    if (m == 0) {
      rep[i] = i;
      continue;
    }
    const double back = -m * width;
    const Vec3 r{q.x * std::cos(back) - q.y * std::sin(back), q.x * std::sin(back) + q.y * std::cos(back), q.z};
    rep[i] = index.nearest(frame.to_world(r));
  }
  std::vector<std::uint32_t> label(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    std::uint32_t x = i;
    std::uint32_t lowest = i;
    // Chains are short (a lookup lands at most one cell outside the wedge);
    // a cycle is broken at its smallest member.
    for (int step = 0; step < 8 && rep[x] != x; ++step) {
      x = rep[x];
      lowest = std::min(lowest, x);
    }
    label[i] = rep[x] == x ? x : lowest;
  }
  return label;
}

}  // namespace

OptimizationResult anneal_symmetric(const LawnState& state, const ShellTable& shells,
                                    const AnnealSchedule& schedule, int k_fold, const Vec3& axis) {
  require_same_grid(state, shells);
  if (k_fold < 1) fail(ErrorCode::InvalidArgument, "k_fold must be >= 1");
  if (!is_antipodal(state.setup())) {
    fail(ErrorCode::SymmetryIncompatible,
         "orbit flips change the lawn area; symmetric annealing needs an antipodal setup");
  }
  const SphericalGrid& g = state.grid();
  const std::size_t n = g.size();
  const Frame frame = Frame::about(axis);
  const SiteIndex index(g);
  const std::vector<std::uint32_t> label = wedge_labels(g, index, frame, k_fold);

  // Primary sites (upper hemisphere about the axis, ties by index) carry their
  // wedge label; each antipode takes the opposite spin, so every orbit flip
  // keeps the lawn exactly antipodal and at area N/2.
  const auto primary = [&](std::uint32_t i) {
    const double z = dot(g.point(i), frame.e3);
    const double za = dot(g.point(g.antipode(i)), frame.e3);
    return z > za || (z == za && i < g.antipode(i));
  };
  std::vector<std::int64_t> comp_id(n, -1);
  std::vector<std::vector<std::uint32_t>> comps;
  std::vector<std::uint32_t> root;
  for (std::uint32_t i = 0; i < n; ++i) {
    if (!primary(i)) continue;
    std::int64_t& id = comp_id[label[i]];
    if (id < 0) {
      id = static_cast<std::int64_t>(comps.size());
      comps.emplace_back();
      root.push_back(i);
    }
    comps[id].push_back(i);
    comps[id].push_back(g.antipode(i));
  }

  // Project the start state: each orbit follows the spin of its first primary.
  const int lawns = is_two_lawn(state.setup()) ? 2 : 1;
  Spins proj[2];
  for (int k = 0; k < lawns; ++k) {
    const Spins& src = state.spins(k + 1);
    proj[k].resize(n);
    for (std::size_t c = 0; c < comps.size(); ++c) {
      const std::uint8_t v = src[root[c]];
      for (std::size_t x = 0; x < comps[c].size(); x += 2) {
        proj[k][comps[c][x]] = v;
        proj[k][comps[c][x + 1]] = v ^ 1u;
      }
    }
  }
  const LawnState start =
      lawns == 2 ? LawnState(state.grid_ptr(), state.setup(), proj[0], proj[1])
                 : LawnState(state.grid_ptr(), state.setup(), proj[0]);

  auto shared = std::make_shared<std::vector<std::vector<std::uint32_t>>>(std::move(comps));
  const auto make = [shared, lawns](LawnState&) {
    Proposer p;
    p.begin_sweep = [] {};
    p.sweep_length = [shared] { return shared->size(); };
    p.propose = [shared, lawns](Rng& rng, FlipSet& f) {
      f.lawn = lawns == 2 && (rng() & 1u) ? 2 : 1;
      f.sites = (*shared)[uniform_index(rng, shared->size())];
      return true;
    };
    p.accepted = [](const FlipSet&) {};
    return p;
  };
  LawnState scratch = start;
  const double t0 = schedule.t_initial > 0.0
                        ? schedule.t_initial
                        : initial_temperature(scratch, shells, make(scratch), schedule.seed);
  return run_metropolis(start, shells, schedule, Phase::SymmetricAnneal, make, t0);
}

PipelineResult optimize(const LawnState& state, const ShellTable& shells,
                        const AnnealSchedule& schedule) {
  PipelineResult out{anneal(state, shells, schedule), {state, 0.0, {}, Phase::BoundaryAnneal, 0.0, 0},
                     {state, 0.0, {}, Phase::Greedy, 0.0, 0}};
  AnnealSchedule fine = schedule;
  fine.t_initial = 0.05 * out.full.t_initial;
  fine.t_min = schedule.t_min > 0.0 ? schedule.t_min : out.full.t_initial * 1e-4;
  if (fine.t_min >= fine.t_initial) fine.t_min = fine.t_initial * 1e-2;
  fine.seed = schedule.seed + 1;
  out.boundary = boundary_refine(out.full.best_state, shells, fine);
  out.greedy = greedy_descent(out.boundary.best_state, shells, schedule.seed + 2);
  return out;
}

}  // namespace grasshopper
