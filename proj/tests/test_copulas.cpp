#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <vector>

#include "cdn/copulas.hpp"
#include "cdn/errors.hpp"
#include "cdn/margins.hpp"
#include "cdn/rng.hpp"
#include "cdn/signed_log.hpp"

using namespace cdn;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double clayton_value(double theta, std::vector<double> u) {
  return clayton_log_partial(ClaytonCopula{theta, static_cast<int>(u.size())},
                             u, 0)
      .to_linear();
}

double clayton_partial(double theta, std::vector<double> u,
                       std::uint32_t mask) {
  return clayton_log_partial(ClaytonCopula{theta, static_cast<int>(u.size())},
                             u, mask)
      .to_linear();
}

// Central finite difference of a Clayton partial in one argument slot.
double clayton_fd_arg(double theta, std::vector<double> u, std::uint32_t mask,
                      int slot, double h) {
  auto up = u, dn = u;
  up[slot] += h;
  dn[slot] -= h;
  return (clayton_partial(theta, up, mask) -
          clayton_partial(theta, dn, mask)) /
         (2 * h);
}

double normal_partial(double rho, double w1, double w2, std::uint32_t mask) {
  return normal_pair_log_partial(NormalPairCopula{rho}, w1, w2, mask)
      .to_linear();
}

}  // namespace

TEST_CASE("clayton closed-form spot values at theta 2") {
  const ClaytonCopula c{2.0, 2};
  const std::vector<double> u{0.5, 0.5};
  CHECK(clayton_log_partial(c, u, 0).to_linear() ==
        doctest::Approx(0.37796447300922725).epsilon(1e-12));
  CHECK(clayton_log_partial(c, u, 0b01).to_linear() ==
        doctest::Approx(0.43195939772483105).epsilon(1e-12));
  CHECK(clayton_log_partial(c, u, 0b10).to_linear() ==
        doctest::Approx(0.43195939772483105).epsilon(1e-12));
  CHECK(clayton_log_partial(c, u, 0b11).to_linear() ==
        doctest::Approx(1.481003649342278).epsilon(1e-12));
  CHECK(clayton_log_param_partial(c, u, 0).to_linear() ==
        doctest::Approx(0.034165506678080215).epsilon(1e-11));
}

TEST_CASE("clayton partials match finite differences across the grid") {
  for (double theta : {0.1, 1.0, 5.0, 50.0}) {
    for (double u1 : {0.05, 0.5, 0.95}) {
      for (double u2 : {0.05, 0.5, 0.95}) {
        const std::vector<double> u{u1, u2};
        const double h1 = 1e-5 * u1, h2 = 1e-5 * u2;

        // First partials differentiate the plain CDF value.
        const auto fd_c = [&](int slot, double h) {
          auto up = u, dn = u;
          up[slot] += h;
          dn[slot] -= h;
          return (clayton_value(theta, up) - clayton_value(theta, dn)) /
                 (2 * h);
        };
        CHECK(clayton_partial(theta, u, 0b01) ==
              doctest::Approx(fd_c(0, h1)).epsilon(1e-4));
        CHECK(clayton_partial(theta, u, 0b10) ==
              doctest::Approx(fd_c(1, h2)).epsilon(1e-4));

        // The density is the cross difference of the first partial.
        const double fd_density = clayton_fd_arg(theta, u, 0b01, 1, h2);
        CHECK(clayton_partial(theta, u, 0b11) ==
              doctest::Approx(fd_density).epsilon(1e-4));
      }
    }
  }
}

TEST_CASE("clayton arity-3 partials match nested finite differences") {
  const double theta = 1.7;
  const std::vector<double> u{0.3, 0.6, 0.8};
  const double h = 1e-4;

  // d/du1 of C.
  const auto fd1 = [&](std::vector<double> base, int slot,
                       std::uint32_t mask) {
    auto up = base, dn = base;
    up[slot] += h;
    dn[slot] -= h;
    return (clayton_partial(theta, up, mask) -
            clayton_partial(theta, dn, mask)) /
           (2 * h);
  };
  CHECK(clayton_partial(theta, u, 0b001) ==
        doctest::Approx(fd1(u, 0, 0)).epsilon(1e-5));
  // d2/du1 du3 as a difference of the u1 partial.
  CHECK(clayton_partial(theta, u, 0b101) ==
        doctest::Approx(fd1(u, 2, 0b001)).epsilon(1e-5));
  // Full mixed partial as a difference of the two-way partial.
  CHECK(clayton_partial(theta, u, 0b111) ==
        doctest::Approx(fd1(u, 1, 0b101)).epsilon(1e-5));
}

TEST_CASE("clayton parameter partials match finite differences in theta") {
  for (double theta : {0.1, 1.0, 5.0, 50.0}) {
    for (double u1 : {0.05, 0.5, 0.95}) {
      for (double u2 : {0.05, 0.5, 0.95}) {
        const std::vector<double> u{u1, u2};
        const double h = 1e-5 * theta;
        for (std::uint32_t mask : {0u, 1u, 2u, 3u}) {
          const double fd = (clayton_partial(theta + h, u, mask) -
                             clayton_partial(theta - h, u, mask)) /
                            (2 * h);
          const double got =
              clayton_log_param_partial(ClaytonCopula{theta, 2}, u, mask)
                  .to_linear();
          if (std::fabs(fd) > 1e-12) {
            CHECK(got == doctest::Approx(fd).epsilon(1e-4));
          } else {
            CHECK(std::fabs(got) < 1e-8);
          }
        }
      }
    }
  }
}

TEST_CASE("clayton marginalized slots reduce the arity exactly") {
  const ClaytonCopula c{3.0, 2};
  // C(u, 1) = u, so the value is u and its u-derivative is 1.
  CHECK(clayton_log_partial(c, {0.4, 1.0}, 0).to_linear() ==
        doctest::Approx(0.4).epsilon(1e-14));
  CHECK(clayton_log_partial(c, {0.4, 1.0}, 0b01).to_linear() ==
        doctest::Approx(1.0).epsilon(1e-12));
  // Three-variable factor with one slot marginalized equals the pair value.
  const ClaytonCopula c3{3.0, 3};
  const ClaytonCopula c2{3.0, 2};
  CHECK(clayton_log_partial(c3, {0.3, 1.0, 0.7}, 0b101).to_linear() ==
        doctest::Approx(
            clayton_log_partial(c2, {0.3, 0.7}, 0b11).to_linear())
            .epsilon(1e-12));
}

TEST_CASE("clayton zero argument collapses the whole factor") {
  const ClaytonCopula c{2.0, 2};
  CHECK(clayton_log_partial(c, {0.0, 0.5}, 0).is_zero());
  CHECK(clayton_log_partial(c, {0.0, 0.5}, 0b10).is_zero());
  CHECK(clayton_log_param_partial(c, {0.5, 0.0}, 0).is_zero());
}

TEST_CASE("clayton stays finite at theta 500 and tiny arguments") {
  const ClaytonCopula c{500.0, 2};
  const std::vector<double> u{1e-8, 0.9};
  const SignedLog v = clayton_log_partial(c, u, 0);
  CHECK(v.sign == +1);
  CHECK(std::isfinite(v.log_abs));
  // For huge theta the Clayton approaches the comonotone bound min(u).
  CHECK(v.log_abs == doctest::Approx(std::log(1e-8)).epsilon(1e-3));
  const SignedLog d = clayton_log_partial(c, u, 0b11);
  CHECK(std::isfinite(d.log_abs));
  const SignedLog p = clayton_log_param_partial(c, u, 0b11);
  CHECK(std::isfinite(p.log_abs));
}

TEST_CASE("clayton respects the Frechet-Hoeffding envelope") {
  Rng rng(5);
  for (int i = 0; i < 300; ++i) {
    const double theta = std::exp(rng.next_open(-2.0, 4.0));
    const double u1 = rng.next_open(0.01, 0.99);
    const double u2 = rng.next_open(0.01, 0.99);
    const double c = clayton_value(theta, {u1, u2});
    CHECK(c <= std::min(u1, u2) + 1e-12);
    CHECK(c >= std::max(0.0, u1 + u2 - 1.0) - 1e-12);
  }
}

TEST_CASE("normal pair closed-form spot values") {
  CHECK(normal_partial(0.0, 0.0, 0.0, 0) ==
        doctest::Approx(0.25).epsilon(1e-12));
  CHECK(normal_partial(0.0, 0.0, 0.0, 0b01) ==
        doctest::Approx(0.5 * std_normal_pdf(0.0)).epsilon(1e-12));
  CHECK(normal_partial(0.0, 0.0, 0.0, 0b11) ==
        doctest::Approx(1.0 / (2.0 * M_PI)).epsilon(1e-12));
  // With one slot at +inf the pair degenerates to the univariate pieces.
  CHECK(normal_partial(0.6, 0.3, kInf, 0) ==
        doctest::Approx(std_normal_cdf(0.3)).epsilon(1e-12));
  CHECK(normal_partial(0.6, 0.3, kInf, 0b01) ==
        doctest::Approx(std_normal_pdf(0.3)).epsilon(1e-12));
  // A -inf slot makes the event impossible.
  CHECK(normal_pair_log_partial(NormalPairCopula{0.6}, -kInf, 0.3, 0)
            .is_zero());
}

TEST_CASE("normal pair partials match finite differences on the grid") {
  for (double rho : {-0.9, 0.0, 0.6, 0.9}) {
    for (double p1 : {0.05, 0.5, 0.95}) {
      for (double p2 : {0.05, 0.5, 0.95}) {
        const double w1 = std_normal_quantile(p1);
        const double w2 = std_normal_quantile(p2);
        const double h = 1e-5;

        CHECK(normal_partial(rho, w1, w2, 0) ==
              doctest::Approx(binormal_cdf(w1, w2, rho)).epsilon(1e-10));
        const double fd1 = (binormal_cdf(w1 + h, w2, rho) -
                            binormal_cdf(w1 - h, w2, rho)) /
                           (2 * h);
        CHECK(normal_partial(rho, w1, w2, 0b01) ==
              doctest::Approx(fd1).epsilon(1e-4));
        const double fd2 = (binormal_cdf(w1, w2 + h, rho) -
                            binormal_cdf(w1, w2 - h, rho)) /
                           (2 * h);
        CHECK(normal_partial(rho, w1, w2, 0b10) ==
              doctest::Approx(fd2).epsilon(1e-4));
        const double fd11 = (normal_partial(rho, w1, w2 + h, 0b01) -
                             normal_partial(rho, w1, w2 - h, 0b01)) /
                            (2 * h);
        CHECK(normal_partial(rho, w1, w2, 0b11) ==
              doctest::Approx(fd11).epsilon(1e-4));
      }
    }
  }
}

TEST_CASE("normal pair parameter partials match finite differences in rho") {
  for (double rho : {-0.9, 0.0, 0.6, 0.9}) {
    for (double p1 : {0.05, 0.5, 0.95}) {
      for (double p2 : {0.05, 0.5, 0.95}) {
        const double w1 = std_normal_quantile(p1);
        const double w2 = std_normal_quantile(p2);
        const double h = 1e-6;
        for (std::uint32_t mask : {0u, 1u, 2u, 3u}) {
          const double fd = (normal_partial(rho + h, w1, w2, mask) -
                             normal_partial(rho - h, w1, w2, mask)) /
                            (2 * h);
          const double got =
              normal_pair_log_param_partial(NormalPairCopula{rho}, w1, w2,
                                            mask)
                  .to_linear();
          if (std::fabs(fd) > 1e-10) {
            CHECK(got == doctest::Approx(fd).epsilon(1e-4));
          } else {
            CHECK(std::fabs(got) < 1e-7);
          }
        }
      }
    }
  }
}

TEST_CASE("parameter domains are the open model intervals") {
  const auto c2 = param_domain(CopulaKind::clayton, 2);
  CHECK(c2.lo == 0.0);
  CHECK(c2.hi == kInf);
  CHECK(c2.contains(3.0));
  CHECK_FALSE(c2.contains(0.0));
  const auto np = param_domain(CopulaKind::normal_pair, 2);
  CHECK(np.lo == -1.0);
  CHECK(np.hi == 1.0);
  CHECK(np.contains(0.0));
  CHECK_FALSE(np.contains(1.0));
  CHECK_THROWS_AS((void)param_domain(CopulaKind::normal_pair, 3),
                  UnsupportedArity);
  CHECK_THROWS_AS((void)param_domain(CopulaKind::clayton, 1),
                  UnsupportedArity);
}
