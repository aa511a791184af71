// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sgdlab/chain.hpp"
#include "sgdlab/models.hpp"
#include "sgdlab/parallel.hpp"
#include "sgdlab/stats.hpp"

namespace sgdlab {

/// Per-step contraction factor of the squared coupled distance,
/// ρ = 1 − 2μγ(1 − γL/2), with the global strong-convexity constant.
double contraction_rate(const ObjectiveModel& model, double gamma);
/// (1 − γμ)^{1/2}, the rate quoted for the averaged-iterate expansion. Recorded only.
double contraction_rate_alt(const ObjectiveModel& model, double gamma);
/// Smallest burn-in with ρ^n ≤ tol.
std::uint64_t minimum_burn_in(const ObjectiveModel& model, double gamma, double tol = 1e-8);
/// γ τ₂² / (μ(1 − γL)); +∞ when γL ≥ 1.
double second_moment_bound(const ObjectiveModel& model, double gamma);

struct StationaryOptions {
  std::size_t replicas = 1;
  std::size_t batches = 50;  // per replica; replicas·batches must be ≥ 50
  std::optional<Vector> theta0;  // default θ*
  /// Estimate the mean through θ − η, where η is the linearized chain driven
  /// by the same draws: η ← η − γ(H(η − θ*) + g_i(θ*)). Its stationary mean is
  /// exactly θ*, so the estimator stays unbiased with far smaller variance.
  bool control_variate = false;
  std::uint64_t cbar_stride = 10;  // C(θ_k) evaluated every cbar_stride steps
  double target_se = 0.0;          // > 0: NoiseFloorError if a mean SE exceeds it
  Execution exec;
};

struct StationaryEstimate {
  double gamma = 0.0;
  std::uint64_t burn_in = 0;
  std::uint64_t samples = 0;  // per replica
  std::size_t replicas = 0;
  std::size_t batches = 0;    // total
  bool control_variate = false;

  Vector mean;
  Vector mean_se;
  /// ∫(θ−θ*)^{⊗2} dπ_γ
  Matrix second_moment;
  Matrix second_moment_se;
  /// ∫C(θ) dπ_γ
  Matrix cbar;
  Matrix cbar_se;
  MeanWithError trace_second_moment;  // ∫‖θ−θ*‖²
  MeanWithError fourth_moment;        // ∫‖θ−θ*‖⁴
  MeanWithError fgap;                 // ∫f − f*
  /// ‖mean − θ*‖; se = (Σ_i se_i²)^{1/2}
  MeanWithError bias_norm;
};

/// Time averages after burn-in, pooled over replicas (replica r uses stream
/// (seed, r, chain)). Throws InvalidArgument when burn_in is below
/// minimum_burn_in, NoiseFloorError for too few samples per batch.
StationaryEstimate estimate_stationary(const ObjectiveModel& model, double gamma, std::uint64_t seed,
                                       std::uint64_t burn_in, std::uint64_t samples,
                                       const StationaryOptions& options = {});

/// Chains at several step sizes driven by one shared atom sequence, each with
/// its own control-variate chain. Channel (j, i) holds coordinate i of
/// θ_j − η_j, whose stationary mean is θ̄_{γ_j} − θ*.
class CoupledBias {
 public:
  CoupledBias(std::vector<double> gammas, int d, BatchMeans batches)
      : gammas_(std::move(gammas)), d_(d), batches_(std::move(batches)) {}

  const std::vector<double>& gammas() const { return gammas_; }
  std::size_t index_of(double gamma) const;

  /// Estimate of Σ_j w_j θ̄_{γ_j} − θ* (weights sum to 1) with coordinate SEs.
  Vector combination(std::span<const double> weights, Vector* se = nullptr) const;
  /// Norm of the combination; SE of the projection on its direction.
  MeanWithError combination_norm(std::span<const double> weights) const;

  Vector bias(std::size_t j, Vector* se = nullptr) const;

 private:
  std::vector<double> gammas_;
  int d_;
  BatchMeans batches_;
};

CoupledBias estimate_coupled_bias(const ObjectiveModel& model, std::vector<double> gammas,
                                  std::uint64_t seed, std::uint64_t burn_in, std::uint64_t samples,
                                  std::size_t replicas, std::size_t batches, const Execution& exec);

struct BiasPoint {
  double gamma = 0.0;
  MeanWithError single;
  MeanWithError rr2;
  std::optional<MeanWithError> rr3;  // absent when 4γ ≥ 2/L
};

struct BiasScaling {
  std::vector<BiasPoint> points;
  Vector delta;  // predicted first-order constant
  std::optional<ScalingFit> single_fit;
  std::optional<ScalingFit> rr2_fit;
  std::string single_note;  // why a fit is missing (noise floor)
  std::string rr2_note;
};

struct BiasScalingOptions {
  std::uint64_t burn_in = 0;  // 0: largest minimum_burn_in over the chains
  std::uint64_t samples = 20000;
  std::size_t replicas = 2000;
  std::size_t batches = 1;  // per replica
  double min_span = 8.0;
  Execution exec;
};

/// ‖θ̄_γ − θ*‖, ‖2θ̄_γ − θ̄_{2γ} − θ*‖ and ‖(8/3)θ̄_γ − 2θ̄_{2γ} + (1/3)θ̄_{4γ} − θ*‖
/// over a γ grid, with log-log fits of the first two.
BiasScaling fit_bias_scaling(const ObjectiveModel& model, const std::vector<double>& gammas,
                             std::uint64_t seed, const BiasScalingOptions& options = {});

enum class StartMode {
  kFixed,       // every replica starts at θ₀
  kStationary,  // end state of a burn-in run from θ₀ (stream purpose burn-in)
};

struct KScalingOptions {
  std::size_t replicas = 10000;
  StartMode start = StartMode::kFixed;
  std::uint64_t burn_in = 0;         // stationary start; 0 → minimum_burn_in
  std::optional<Vector> reference;  // θ̄_γ; default θ* for least squares
  Execution exec;
};

struct KScaling {
  std::vector<std::uint64_t> k;
  std::vector<Vector> mean_error;     // E θ̄_k − θ̄_γ
  std::vector<Vector> mean_error_se;
  std::vector<MeanWithError> mse;     // E‖θ̄_k − θ̄_γ‖²
  Vector direction;                   // projection used for the bias fit
  InversePowerFit bias_fit;           // uᵀ(E θ̄_k − θ̄_γ) ≈ c1/k + c2/k²
  InversePowerFit mse_fit;            // E‖θ̄_k − θ̄_γ‖² ≈ c1/k + c2/k²
  /// Least squares only (NaN otherwise): uᵀΣ^{-1}(θ₀−θ*)/γ, tr Σ^{-1}CbarΣ^{-1},
  /// and the trace of the k^{-2} coefficient.
  double predicted_bias = 0.0;
  double predicted_variance = 0.0;
  double predicted_second_order = 0.0;
};

KScaling fit_k_scaling(const ObjectiveModel& model, double gamma, const Vector& theta0,
                       const std::vector<std::uint64_t>& k_grid, std::uint64_t seed,
                       const KScalingOptions& options = {});

struct CouplingResult {
  std::vector<std::uint64_t> k;
  std::vector<double> distance;  // D(k) = mean ‖θ_k¹ − θ_k²‖²
  std::vector<double> se;
  std::vector<double> bound;      // ρ^k D(0)
  std::vector<double> bound_alt;  // (1 − γμ)^k D(0)
  double rate = 0.0;
  double rate_alt = 0.0;

  /// max_k (D(k) − (1 + rel_slack)·bound(k) − sigmas·se(k)); ≤ 0 means the bound holds.
  double worst_excess(double sigmas = 3.0, double rel_slack = 0.0) const;
};

/// Two chains per replica from θ₀¹ and θ₀², consuming identical atom draws.
CouplingResult coupling_contraction(const ObjectiveModel& model, double gamma, const Vector& theta0_a,
                                    const Vector& theta0_b, std::size_t replicas,
                                    std::uint64_t horizon, std::uint64_t seed,
                                    const Execution& exec = {});

struct MomentGrowth {
  int p = 1;
  std::vector<double> gammas;
  std::vector<MeanWithError> moments;  // ∫‖θ−θ*‖^{2p} dπ_γ
  std::vector<double> bound;           // p = 1: second_moment_bound
  std::optional<ScalingFit> fit;
  std::string note;
};

MomentGrowth moment_growth_check(const ObjectiveModel& model, const std::vector<double>& gammas,
                                 int p, std::uint64_t seed, std::uint64_t samples,
                                 const StationaryOptions& options = {}, double min_span = 8.0);

}  // namespace sgdlab
