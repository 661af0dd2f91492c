#pragma once

#include <cmath>
#include <string>

#include "coneglm/types.hpp"

namespace coneglm {

enum class Family { gaussian, binomial, poisson };
enum class Link { identity, log, logit, probit, sqrt };

inline const char* family_name(Family f) {
  switch (f) {
    case Family::gaussian: return "gaussian";
    case Family::binomial: return "binomial";
    case Family::poisson: return "poisson";
  }
  return "?";
}

inline const char* link_name(Link l) {
  switch (l) {
    case Link::identity: return "identity";
    case Link::log: return "log";
    case Link::logit: return "logit";
    case Link::probit: return "probit";
    case Link::sqrt: return "sqrt";
  }
  return "?";
}

// Probit coefficients are obtained by rescaling a logit fit by this factor.
inline constexpr double kProbitLogitScale = 0.62665706865775006;  // sqrt(pi/8)

// A validated family-link pair. Only the supported combinations are
// constructible: gaussian+identity, binomial+{logit, probit, log},
// poisson+{log, identity, sqrt}.
class FamilyLink {
 public:
  FamilyLink(Family f, Link l) : family_(f), link_(l) {
    if (!supported(f, l))
      throw InputError(std::string("unsupported family-link combination: ") +
                       family_name(f) + " + " + link_name(l));
  }

  static bool supported(Family f, Link l) {
    switch (f) {
      case Family::gaussian: return l == Link::identity;
      case Family::binomial:
        return l == Link::logit || l == Link::probit || l == Link::log;
      case Family::poisson:
        return l == Link::log || l == Link::identity || l == Link::sqrt;
    }
    return false;
  }

  static FamilyLink parse(const std::string& family, const std::string& link) {
    Family f;
    if (family == "gaussian") f = Family::gaussian;
    else if (family == "binomial") f = Family::binomial;
    else if (family == "poisson") f = Family::poisson;
    else throw InputError("unknown family '" + family + "'");
    Link l;
    if (link == "identity") l = Link::identity;
    else if (link == "log") l = Link::log;
    else if (link == "logit") l = Link::logit;
    else if (link == "probit") l = Link::probit;
    else if (link == "sqrt") l = Link::sqrt;
    else throw InputError("unknown link '" + link + "'");
    return FamilyLink(f, l);
  }

  Family family() const { return family_; }
  Link link() const { return link_; }
  bool operator==(const FamilyLink& o) const {
    return family_ == o.family_ && link_ == o.link_;
  }

  std::string name() const {
    return std::string(family_name(family_)) + "+" + link_name(link_);
  }

  // mu = g^{-1}(eta)
  double linkinv(double eta) const {
    switch (link_) {
      case Link::identity: return eta;
      case Link::log: return std::exp(eta);
      case Link::logit: return 1.0 / (1.0 + std::exp(-eta));
      case Link::probit: return 0.5 * std::erfc(-eta / std::sqrt(2.0));
      case Link::sqrt: return eta * eta;
    }
    return kNaN;
  }

  double link_of_mean(double mu) const {
    switch (link_) {
      case Link::identity: return mu;
      case Link::log: return std::log(mu);
      case Link::logit: return std::log(mu / (1.0 - mu));
      case Link::probit: {
        // inverse of the standard normal CDF via Newton on erfc
        double eta = 0.0;
        for (int it = 0; it < 60; ++it) {
          const double f = linkinv(eta) - mu;
          const double d = mu_eta(eta);
          if (d <= 0) break;
          const double step = f / d;
          eta -= step;
          if (std::abs(step) < 1e-14) break;
        }
        return eta;
      }
      case Link::sqrt: return std::sqrt(mu);
    }
    return kNaN;
  }

  // d mu / d eta
  double mu_eta(double eta) const {
    switch (link_) {
      case Link::identity: return 1.0;
      case Link::log: return std::exp(eta);
      case Link::logit: {
        const double m = linkinv(eta);
        return m * (1.0 - m);
      }
      case Link::probit:
        return std::exp(-0.5 * eta * eta) / std::sqrt(2.0 * M_PI);
      case Link::sqrt: return 2.0 * eta;
    }
    return kNaN;
  }

  // Unit-dispersion variance function V(mu).
  double variance(double mu) const {
    switch (family_) {
      case Family::gaussian: return 1.0;
      case Family::binomial: return mu * (1.0 - mu);
      case Family::poisson: return mu;
    }
    return kNaN;
  }

  // Whether the linear predictor is inside the link's domain. Boundary
  // values are allowed; the likelihood handles them via its own limits.
  bool eta_in_domain(double eta) const {
    if (family_ == Family::binomial && link_ == Link::log) return eta <= 0.0;
    if (family_ == Family::poisson &&
        (link_ == Link::identity || link_ == Link::sqrt))
      return eta >= 0.0;
    return true;
  }

  // True when this combination is fitted by rescaling a logit fit.
  bool fitted_via_logit_scaling() const { return link_ == Link::probit; }

 private:
  Family family_;
  Link link_;
};

}  // namespace coneglm
