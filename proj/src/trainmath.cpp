#include "detkit/trainmath.hpp"

#include <charconv>
#include <cmath>

#include "detkit/error.hpp"

namespace detkit {

namespace {

// Value at an integer epoch, warmup already handled by the caller.
double value_at_integer(const ScheduleSpec& spec, long epoch) {
  if (spec.kind == ScheduleKind::step) {
    int drops = 0;
    for (int m : spec.milestones) {
      if (m <= epoch) ++drops;
    }
    return spec.base_lr * std::pow(spec.gamma, drops);
  }

  // Cosine with warm restarts: walk the cycle lengths to locate the epoch.
  const double first_cycle =
      spec.t0 > 0.0 ? spec.t0 : static_cast<double>(spec.total_epochs);
  double cycle_start = 0.0;
  double cycle_len = first_cycle;
  while (static_cast<double>(epoch) - cycle_start >= cycle_len) {
    cycle_start += cycle_len;
    cycle_len *= spec.t_mult;
  }
  return sgdr_value(spec.eta_min, spec.base_lr,
                    static_cast<double>(epoch) - cycle_start, cycle_len);
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

void ScheduleSpec::validate() const {
  if (!(base_lr > 0.0)) throw InvalidInputError("schedule: base_lr must be > 0");
  if (total_epochs < 1) {
    throw InvalidInputError("schedule: total_epochs must be >= 1");
  }
  if (warmup_epochs < 0 || warmup_epochs > total_epochs) {
    throw InvalidInputError("schedule: warmup_epochs out of range");
  }
  if (kind == ScheduleKind::step) {
    int prev = -1;
    for (int m : milestones) {
      if (m <= prev || m >= total_epochs) {
        throw InvalidInputError(
            "schedule: milestones must be strictly increasing and below "
            "total_epochs");
      }
      prev = m;
    }
    if (!(gamma > 0.0) || gamma > 1.0) {
      throw InvalidInputError("schedule: gamma must be in (0,1]");
    }
  } else {
    if (eta_min < 0.0 || eta_min >= base_lr) {
      throw InvalidInputError("schedule: require 0 <= eta_min < base_lr");
    }
    if (t0 < 0.0 || (t0 > 0.0 && t0 < 1.0)) {
      throw InvalidInputError("schedule: t0 must be 0 (auto) or >= 1");
    }
    if (t_mult < 1.0) throw InvalidInputError("schedule: t_mult must be >= 1");
  }
}

double lr_at(const ScheduleSpec& spec, double epoch) {
  spec.validate();
  if (!(epoch >= 0.0) || epoch >= static_cast<double>(spec.total_epochs)) {
    throw InvalidInputError("lr_at: epoch " + std::to_string(epoch) +
                            " outside [0, " +
                            std::to_string(spec.total_epochs) + ")");
  }
  if (epoch < static_cast<double>(spec.warmup_epochs)) {
    return spec.base_lr * (epoch + 1.0) / spec.warmup_epochs;
  }

  const double floor_epoch = std::floor(epoch);
  const long n = static_cast<long>(floor_epoch);
  const double frac = epoch - floor_epoch;
  if (spec.kind == ScheduleKind::step || frac == 0.0) {
    return value_at_integer(spec, n);
  }
  const double lo = value_at_integer(spec, n);
  const double hi = value_at_integer(spec, n + 1);
  return lo + frac * (hi - lo);
}

double sgdr_value(double eta_min, double eta_max, double t_cur, double t_i) {
  if (!(t_i > 0.0)) throw InvalidInputError("sgdr_value: t_i must be > 0");
  return eta_min +
         0.5 * (eta_max - eta_min) * (1.0 + std::cos(M_PI * t_cur / t_i));
}

std::vector<double> smooth_labels(int category, int num_categories,
                                  double eps) {
  if (num_categories < 1) {
    throw InvalidInputError("smooth_labels: need at least one category");
  }
  if (category < 0 || category >= num_categories) {
    throw InvalidInputError("smooth_labels: category " +
                            std::to_string(category) + " outside [0, " +
                            std::to_string(num_categories) + ")");
  }
  if (eps < 0.0 || eps >= 1.0) {
    throw InvalidInputError("smooth_labels: eps must be in [0,1)");
  }
  std::vector<double> q(num_categories, eps / num_categories);
  q[category] += 1.0 - eps;
  return q;
}

std::string schedule_to_csv(const ScheduleSpec& spec) {
  spec.validate();
  std::string out = "epoch,lr\n";
  for (int e = 0; e < spec.total_epochs; ++e) {
    out += std::to_string(e) + "," +
           format_double(lr_at(spec, static_cast<double>(e))) + "\n";
  }
  return out;
}

}  // namespace detkit
