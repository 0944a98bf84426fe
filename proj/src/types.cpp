#include "camen/types.hpp"

namespace camen {

namespace {
void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}
}  // namespace

void MarketParams::validate() const {
  require(tau >= 0.0, "overbooking rate tau must be >= 0");
  for (double r : {rho1, rho2, rho3, rho4, rho5}) {
    require(r > 0.0 && r <= 1.0, "risk thresholds must lie in (0,1]");
  }
  require(u_min > 0.0, "u_min must be positive");
  require(dp_mu > 0.0 && dp_es > 0.0, "price steps must be positive");
  require(bandwidth_w > 0.0, "bandwidth must be positive");
  require(v1 > 0.0 && v2 > 0.0 && v3 > 0.0, "valuation weights must be positive");
  require(q_ue >= 0.0 && q_eu >= 0.0 && q_ec >= 0.0, "penalties must be non-negative");
  require(p_min_ue >= 0.0 && p_min_ec >= 0.0, "initial prices must be non-negative");
  require(exact_enum_limit >= 1, "exact_enum_limit must be >= 1");
  require(mc_expectation_samples >= 1, "mc_expectation_samples must be >= 1");
}

void Scenario::validate() const {
  params.validate();
  for (size_t i = 0; i < mus.size(); ++i) {
    const MobileUser& mu = mus[i];
    require(mu.id == static_cast<int>(i), "MU ids must be dense 0..n-1");
    require(mu.f_u > 0.0 && mu.e_t > 0.0 && mu.e_u > 0.0,
            "MU powers and capability must be positive");
    require(mu.d_u >= 0.0 && mu.r_u >= 0.0, "task size must be non-negative");
    require(mu.a > 0.0 && mu.a <= 1.0, "participation probability must be in (0,1]");
    require(mu.gamma_low > 0.0 && mu.gamma_low < mu.gamma_high,
            "channel-gain bounds must satisfy 0 < low < high");
    for (int c : mu.candidates) {
      require(c >= 0 && c < static_cast<int>(ess.size()),
              "MU candidate references unknown edge server");
    }
  }
  for (size_t j = 0; j < ess.size(); ++j) {
    const EdgeServer& es = ess[j];
    require(es.id == static_cast<int>(j), "ES ids must be dense 0..n-1");
    require(es.f_e > 0.0 && es.e_e > 0.0, "ES capability and power must be positive");
    require(es.g_e >= 0, "ES VM count must be >= 0");
    require(es.g_e <= es.k_e, "ES VM count must not exceed its subcarrier count");
    require(es.c_hw >= 0.0, "hardware cost must be non-negative");
  }
  for (size_t k = 0; k < css.size(); ++k) {
    const CloudServer& cs = css[k];
    require(cs.id == static_cast<int>(k), "CS ids must be dense 0..n-1");
    require(cs.f_c > 0.0 && cs.e_c > 0.0, "CS capability and power must be positive");
    require(cs.g_c >= 1, "CS VM count must be >= 1");
    require(cs.sigma >= 0.0, "inherent-demand mean must be >= 0");
    require(cs.c_hw >= 0.0, "hardware cost must be non-negative");
  }
}

}  // namespace camen
