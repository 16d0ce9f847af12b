#pragma once

#include "levy/model.hpp"

namespace levy {

/// Standard normal distribution function, via erfc.
double normal_cdf(double z);
/// log Phi(z), accurate in the far left tail.
double log_normal_cdf(double z);
double normal_pdf(double z);

/// Density at u of the hitting time of level z by m s + W_s:
///   |z| / sqrt(2 pi u^3) * exp(-(z - m u)^2 / (2 u)).
/// Throws NonPositiveTime for u <= 0.
double tilde_f(double u, double z, double m);

/// P(hitting time of z = infinity) = 1 - exp(m z - |m z|).
double tilde_defect(double z, double m);

/// P(hitting time of z > t) for z > 0; 1 at t = 0.
double tilde_survival(double t, double z, double m);

/// Hitting law of level z for Brownian motion with drift m.
struct HittingLaw {
  double z;
  double m;

  double density(double u) const { return tilde_f(u, z, m); }
  double defect() const { return tilde_defect(z, m); }
  double survival(double t) const { return tilde_survival(t, z, m); }
};

/// Value at t = 0 of the first-passage density of the jump diffusion:
///   (lambda/2)(2 - F(x) - F(x-)) + (lambda/4)(F(x) - F(x-)).
double f_at_zero(const ValidatedParams& p);

/// C (1/t + 1/sqrt(t)) with C = (e^{-1/2} + |m|) / sqrt(2 pi); dominates tilde_f(t, z, m) for all z.
double tilde_f_bound(double t, double m);

struct Lemma5Value {
  double value;
  double bound;
};

/// A(mu, sigma, m, t) = E[(mu - sigma G + m t)_+ / sqrt(2 pi t^3) exp(-(mu - sigma G)^2 / (2t))]
/// for G standard normal, in closed form, together with the bound
///   C1/s^3 + C2/s + sigma C3/(s^2 sqrt(t)),  s^2 = sigma^2 + t.
/// The bound is only claimed for sigma^2 + t <= 1.
Lemma5Value lemma5_A(double mu, double sigma, double m, double t);

/// 2 lambda t, an upper bound on E[sqrt(T_{N_t} / (t - T_{N_t}))].
double lemma6_bound(double lambda, double t);

}  // namespace levy
