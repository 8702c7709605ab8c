#include "cavmix/cacc_model.hpp"

#include <algorithm>
#include <cmath>

namespace cavmix {

namespace {
constexpr double kSingularDenominator = 1e-9;
}

double desired_gap(double v, double v_lead, double T, const CaccParams& p) noexcept {
  const double interaction = v * (v - v_lead) / (2.0 * std::sqrt(p.a_max * p.b_des));
  return p.s0 + v * T + std::max(0.0, interaction);
}

double idm_free_acceleration(double v, double v_des, const CaccParams& p) noexcept {
  return p.a_max * (1.0 - std::pow(v / v_des, p.delta));
}

double idm_acceleration(const EidmInputs& in, const CaccParams& p) noexcept {
  const double s_star = desired_gap(in.v, in.v_lead, time_gap(in.gap_mode, p), p);
  const double ratio = s_star / in.s;
  return idm_free_acceleration(in.v, in.v_des, p) - p.a_max * ratio * ratio;
}

double cah_acceleration(const EidmInputs& in, double a_self, const CaccParams& /*p*/) noexcept {
  const double a_eff = std::min(in.a_lead, a_self);
  const double dv = in.v - in.v_lead;  // positive while closing
  const double denom = in.v_lead * in.v_lead - 2.0 * in.s * a_eff;
  if (in.v_lead * dv <= -2.0 * in.s * a_eff && std::abs(denom) >= kSingularDenominator) {
    return in.v * in.v * a_eff / denom;
  }
  const double closing = dv > 0.0 ? dv * dv : 0.0;
  return a_eff - closing / (2.0 * in.s);
}

double eidm_acceleration(const EidmInputs& in, const CaccParams& p) noexcept {
  const double a_idm = idm_acceleration(in, p);
  const double a_cah = cah_acceleration(in, a_idm, p);
  double a = a_idm;
  if (a_idm < a_cah) {
    a = (1.0 - p.coolness) * a_idm +
        p.coolness * (a_cah + p.b_des * std::tanh((a_idm - a_cah) / p.b_des));
  }
  return std::clamp(a, p.max_decel, p.a_max);
}

GapMode select_gap_mode(const std::optional<LeaderLink>& leader, const CaccParams& p) noexcept {
  if (leader && leader->cls == VehicleClass::CAV && leader->net_gap <= p.comm_range) {
    return GapMode::Cacc;
  }
  return GapMode::Acc;
}

}  // namespace cavmix
