#pragma once

// Tangential p-flow u_{x,r} of a field.

#include "qstrat/fields.hpp"
#include "qstrat/means.hpp"

namespace qstrat {

/// u_{x,r}(y) on B_{rho/r}(0), where B_rho(x) is the largest ball about x in the domain:
///   p > 2:  r^{p-2} u(x + r y)
///   p = 2:  u(x + r y) - M(u,x,r)
///   p < 2:  (u(x + r y) - u(x)) / r^{2-p}
inline ScalarField p_flow(const ScalarField& u, const Point& x, double r, const Quadrature& quad) {
  if (!u.contains(x)) throw Error(ErrorCode::domain, "flow center outside field domain");
  const double rho = u.room(x);
  if (!(r > 0.0) || !(r < rho)) throw Error(ErrorCode::scale, "flow scale must satisfy 0 < r < room(x)");
  const double p = u.p();
  if (!(p >= 1.0)) throw Error(ErrorCode::unsupported_characteristic, "field characteristic p must be >= 1");
  const Ball domain{Point{}, rho / r};
  ScalarField flowed;
  if (p > 2.0) {
    const double factor = std::pow(r, p - 2.0);
    flowed = ScalarField(u.dim(), domain, p, [u, x, r, factor](const Point& y) { return factor * u(x + r * y); }, u.label());
  } else if (p == 2.0) {
    const double m = spherical_max(u, x, r, quad);
    flowed = ScalarField(u.dim(), domain, p, [u, x, r, m](const Point& y) { return u(x + r * y) - m; }, u.label());
  } else {
    const double ux = u(x);
    const double factor = std::pow(r, p - 2.0);
    flowed = ScalarField(u.dim(), domain, p, [u, x, r, ux, factor](const Point& y) { return factor * (u(x + r * y) - ux); },
                         u.label());
  }
  for (const auto& locus : u.singular_loci())
    flowed.add_singular_locus(SingularLocus{(1.0 / r) * (locus.base - x), locus.plane});
  return flowed;
}

}  // namespace qstrat
