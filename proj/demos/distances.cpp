// Distances and a projection between two small grid histograms.

#include <cstdio>

#include "otclimb/otclimb.hpp"

using namespace otclimb;

int main() {
  // Two 6x6 images: a blob in the top-left corner and a bar on the right.
  auto a = make_image(6, 6, {4, 3, 1, 0, 0, 0,
                             3, 2, 1, 0, 0, 0,
                             1, 1, 0, 0, 0, 0,
                             0, 0, 0, 0, 0, 0,
                             0, 0, 0, 0, 0, 0,
                             0, 0, 0, 0, 0, 0});
  auto b = make_image(6, 6, {0, 0, 0, 0, 0, 2,
                             0, 0, 0, 0, 0, 2,
                             0, 0, 0, 0, 0, 2,
                             0, 0, 0, 0, 0, 2,
                             0, 0, 0, 0, 0, 2,
                             0, 0, 0, 0, 0, 6});
  auto mu = from_grid(a, true);
  auto nu_b = from_grid(b, true);
  DiscreteMeasure nu(mu.ground_ptr(), {nu_b.atoms().begin(), nu_b.atoms().end()}, nu_b.unit_scale());
  auto cost = CostOracle::scaled_pixel(mu.ground_ptr(), a.resolution_tag);

  for (int p : {1, 2, 4}) {
    auto r = w_p(mu, nu, cost, p);
    std::printf("W_%d   = %.6f  (%s)\n", p, r.value, to_string(r.exactness));
  }
  auto inf = w_infinity(mu, nu, cost);
  std::printf("W_inf = %.6f  after %zu rungs\n", inf.value, inf.rungs);

  double t = cost.key_for_value(0.5);
  std::printf("W_1 truncated at 0.5 = %.6f\n", w_p_truncated(mu, nu, cost, 1, t).value);

  // Cap at 60%% of the peak, on a grid padded by half its width.
  auto padded = from_grid(pad(a, 3), true);
  auto cap = cap_from_theta(padded, Rational(3, 5));
  auto pixel = CostOracle::scaled_pixel(padded.ground_ptr(), a.resolution_tag);
  auto proj = project_winf(padded, cap, pixel);
  std::printf("W_inf projection: tau = %.6f, support %zu -> %zu pixels\n", proj.tau, padded.support().size(),
              proj.zeta.support().size());
  return 0;
}
