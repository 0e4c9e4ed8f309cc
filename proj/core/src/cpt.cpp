#include "goesched/cpt.hpp"

#include <cmath>
#include <string>

#include "goesched/errors.hpp"

namespace goesched {

namespace {
constexpr double kMinInverseSGamma = 0.28;
}

void validate(const CptParams& params) {
  if (!(params.alpha_gain > 0.0 && params.alpha_gain <= 1.0)) {
    throw ValidationError("cpt.alpha must be in (0, 1]");
  }
  if (!(params.beta_loss > 0.0 && params.beta_loss <= 1.0)) {
    throw ValidationError("cpt.beta must be in (0, 1]");
  }
  if (!(params.lambda_loss >= 1.0)) {
    throw ValidationError("cpt.lambda must be >= 1");
  }
  if (!(params.goe_ref >= 0.0)) {
    throw ValidationError("cpt.goe_ref must be >= 0");
  }
  if (params.weighting == Weighting::kInverseS &&
      !(params.weighting_gamma > kMinInverseSGamma &&
        params.weighting_gamma <= 1.0)) {
    throw ValidationError("cpt.weighting_gamma must be in (0.28, 1]");
  }
}

double value(double x, double ref_point, const CptParams& params) {
  if (x >= ref_point) return std::pow(x - ref_point, params.alpha_gain);
  return -params.lambda_loss * std::pow(ref_point - x, params.beta_loss);
}

double value_gain_only(double x, double ref_point, const CptParams& params) {
  if (x < ref_point) return 0.0;
  return std::pow(x - ref_point, params.alpha_gain);
}

double weight(double p, const CptParams& params) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw DomainError("probability " + std::to_string(p) + " outside [0, 1]");
  }
  if (params.weighting == Weighting::kIdentity) return p;
  if (p == 0.0 || p == 1.0) return p;
  const double g = params.weighting_gamma;
  const double pg = std::pow(p, g);
  const double qg = std::pow(1.0 - p, g);
  return pg / std::pow(pg + qg, 1.0 / g);
}

}  // namespace goesched
