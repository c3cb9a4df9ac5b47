#pragma once

#include "nkq/problem.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nkq {

// theta, x ~ U[0,1]^d, g = sum x_i^2.5 + sum theta_i^2.5, f(z) = z^2.
// Truth 16/49 d^2 + 25/294 d (121/294 for d = 1).
NestedProblem synthetic(Index d = 1);

// Inner expectation of the synthetic problem at theta (d = 1): 2/7 + theta^2.5.
double synthetic_inner(double theta);

struct FinanceParams {
  double s0 = 100.0;
  double sigma = 0.3;
  double k1 = 50.0;
  double k2 = 150.0;
  double zeta = 2.0;
  double eta = 1.0;
  double shock = 0.2;
};

// Butterfly payoff psi(x) = (x-K1)+ + (x-K2)+ - 2 (x-(K1+K2)/2)+.
double butterfly_payoff(const FinanceParams &p, double x);

// Loss of a butterfly call under a price shock: g(x) = psi(x) - psi((1+s) x),
// f(z) = max(z, 0). Both stages lognormal, mapped from U[0,1].
NestedProblem finance(const FinanceParams &params = {});

enum class EvppiVariant {
  // Condition on the two durations of response (x6, x14). Reproduces the
  // quoted EVPPI of 538.
  Durations,
  // Condition on the two response probabilities.
  ResponseProbabilities,
};

struct EvppiModel {
  Vector mean;  // 19 entries: x1..x17, theta1, theta2
  Matrix cov;
  std::vector<Index> conditioned;  // indices into the 19 variables
  std::vector<Index> rest;
};

EvppiModel evppi_model(EvppiVariant variant = EvppiVariant::Durations);

// g1 and g2 evaluated on the full 19-vector (x1..x17, theta1, theta2).
void evppi_outcomes(std::span<const double> v, double &g1, double &g2);

// EVPPI = E[max(J1, J2)] - max(E J1, E J2). Targets: "I1" (Gaussian k_X,
// Matern12 k_Theta), "I2_1" and "I2_2" (Gaussian, Gaussian).
NestedProblem evppi(EvppiVariant variant = EvppiVariant::Durations);

struct GpLookaheadParams {
  double lengthscale = 1.0;
  double amplitude = 1.0;
  std::uint64_t seed = 7;
  bool zero_observations = false;        // y = 0 instead of sin(3 z)
  std::optional<double> reward_threshold;  // overrides r_max = max(y)
  double z1 = 0.25, z2 = 0.75;           // first look-ahead pair
  double zp1 = 0.4, zp2 = 0.6;           // frozen second pair
};

// Two-step look-ahead q-EI (q = 2) under a Matern12 GP conditioned on two
// observations: theta = f(z) | D, x = f(z') | D, (z, theta).
// g = max(max_j x_j - r, 0) + max(max_j theta_j - r, 0), f = identity.
NestedProblem gp_lookahead(const GpLookaheadParams &params = {});

std::vector<std::string> problem_ids();

// Builds a problem by id with JSON overrides, e.g. {"d": 3} for synthetic.
NestedProblem make_problem(std::string_view id, std::string_view overrides_json = "{}");

}  // namespace nkq
