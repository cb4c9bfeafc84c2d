#pragma once

#include <string>
#include <vector>

namespace detkit {

enum class ScheduleKind { step, cosine };

// Learning-rate program. Step: base_lr * gamma^(milestones passed).
// Cosine: half-cosine from base_lr down to eta_min within each cycle,
// restarting at base_lr; cycle lengths grow by t_mult. An optional warmup
// ramps linearly from base_lr/warmup_epochs to base_lr.
struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::step;
  double base_lr = 1e-3;
  int total_epochs = 200;

  std::vector<int> milestones = {160, 180};
  double gamma = 0.1;

  double eta_min = 0.0;
  double t0 = 0.0;  // first cycle length; 0 means one cycle over all epochs
  double t_mult = 1.0;

  int warmup_epochs = 0;

  void validate() const;
};

// Value at a (possibly fractional) epoch in [0, total_epochs). Integer
// epochs are the schedule's defining samples; fractional input holds the
// step value constant within the epoch and interpolates the cosine value
// linearly between adjacent epochs.
double lr_at(const ScheduleSpec& spec, double epoch);

// eta_min + (eta_max - eta_min)/2 * (1 + cos(pi * t_cur / t_i)).
double sgdr_value(double eta_min, double eta_max, double t_cur, double t_i);

// (1-eps) one-hot plus eps/K everywhere; sums to 1, argmax preserved for
// every eps < 1.
std::vector<double> smooth_labels(int category, int num_categories,
                                  double eps);

// `epoch,lr` rows over the whole program.
std::string schedule_to_csv(const ScheduleSpec& spec);

}  // namespace detkit
