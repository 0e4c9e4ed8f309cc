#pragma once

namespace goesched {

enum class Weighting { kIdentity, kInverseS };

// Shape of the prospect-theory value function and probability weighting.
struct CptParams {
  double alpha_gain = 0.5;
  double beta_loss = 0.5;
  double lambda_loss = 2.0;
  double goe_ref = 0.2;
  Weighting weighting = Weighting::kIdentity;
  double weighting_gamma = 0.65;
};

// Throws ValidationError when a field is outside its admissible range.
void validate(const CptParams& params);

// (x - ref)^alpha for gains, -lambda (ref - x)^beta for losses.
double value(double x, double ref_point, const CptParams& params);

// Gain branch only; zero below the reference point.
double value_gain_only(double x, double ref_point, const CptParams& params);

// Probability weighting. Identity, or the inverse-S curve
// p^g / (p^g + (1-p)^g)^(1/g). Throws DomainError for p outside [0, 1].
double weight(double p, const CptParams& params);

}  // namespace goesched
