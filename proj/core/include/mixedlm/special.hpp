#pragma once

namespace mixedlm {

// F distribution with positive integer degrees of freedom.
struct FDist {
  int d1;
  int d2;
  FDist(int df1, int df2);
};

// Natural log of the gamma function for x > 0. Lanczos approximation with
// g = 7 and the standard 9-coefficient set; relative error stays below
// ~1e-13 over [0.5, 1e6], reflection handles (0, 0.5).
double ln_gamma(double x);

// Regularized incomplete beta function I_x(a, b) for a, b > 0 and
// x in [0, 1]. Continued fraction evaluated by the modified Lentz
// algorithm, switching to the symmetric tail when x > (a+1)/(a+b+2).
double reg_inc_beta(double x, double a, double b);

double f_cdf(const FDist& dist, double x);
double f_pdf(const FDist& dist, double x);

// Upper quantile: the q with P(F > q) = delta, delta in (0, 1).
// Bracketing followed by safeguarded Newton; |cdf(q) - (1-delta)| <= 1e-10.
double f_upper_quantile(const FDist& dist, double delta);

double normal_cdf(double z);

// Standard normal quantile for p in (0, 1); absolute error below 1e-9
// (rational initial guess plus one Halley refinement).
double normal_quantile(double p);

}  // namespace mixedlm
