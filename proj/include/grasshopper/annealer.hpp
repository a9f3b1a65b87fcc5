#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "grasshopper/lawn.hpp"

namespace grasshopper {

/// Geometric cooling schedule. Zero temperatures mean "derive": t_initial
/// from auto_initial_temperature, t_min = t_initial * 1e-4.
struct AnnealSchedule {
  double t_initial = 0.0;
  double t_min = 0.0;
  double cooling = 0.98;
  int sweeps_per_temperature = 10;
  std::uint64_t seed = 1;
  /// Sweeps without a new best before stopping; only counted once the
  /// acceptance rate has dropped below 5% (the chain is frozen).
  int stall_limit = 50;
  /// Hard cap on sweeps (0 = none).
  long long max_sweeps = 0;
  /// Sweeps between full recomputations of the cached fields.
  int refresh_interval = 100;
  /// Validate the lawn invariants after every sweep (test hook).
  bool check_invariants = false;
};

enum class Phase { FullAnneal, BoundaryAnneal, Greedy, SymmetricAnneal };
std::string_view to_string(Phase phase);

struct SweepRecord {
  double temperature = 0.0;
  double current = 0.0;
  double best = 0.0;
  double acceptance = 0.0;
};

struct OptimizationResult {
  LawnState best_state;
  double best_probability = 0.0;
  std::vector<SweepRecord> history;
  Phase phase = Phase::FullAnneal;
  double t_initial = 0.0;
  long long moves_applied = 0;
};

/// 5 x mean |dP| over 1000 random valid moves from `state`.
double auto_initial_temperature(const LawnState& state, const ShellTable& shells,
                                std::uint64_t seed);

/// Metropolis maximization of P. One sweep = N/2 proposals.
OptimizationResult anneal(const LawnState& state, const ShellTable& shells,
                          const AnnealSchedule& schedule);

/// As anneal, with proposals drawn from sites that have an opposite-spin
/// site within radius_factor * h (boundary recomputed every sweep).
OptimizationResult boundary_refine(const LawnState& state, const ShellTable& shells,
                                   const AnnealSchedule& schedule, double radius_factor = 1.5);

/// First-improvement hill climbing over all single moves until a full pass
/// applies nothing.
OptimizationResult greedy_descent(const LawnState& state, const ShellTable& shells,
                                  std::uint64_t seed);

/// Annealing restricted to lawns invariant under rotation by 2 pi / k_fold
/// about `axis` (orbits via nearest-site lookup of rotated positions).
/// Antipodal setups only.
OptimizationResult anneal_symmetric(const LawnState& state, const ShellTable& shells,
                                    const AnnealSchedule& schedule, int k_fold, const Vec3& axis);

struct PipelineResult {
  OptimizationResult full;
  OptimizationResult boundary;
  OptimizationResult greedy;
  const OptimizationResult& final() const { return greedy; }
};

/// anneal -> boundary_refine -> greedy_descent. The boundary stage starts at
/// 5% of the full anneal's initial temperature.
PipelineResult optimize(const LawnState& state, const ShellTable& shells,
                        const AnnealSchedule& schedule);

}  // namespace grasshopper
