/**
 * @file sample_rf.cpp
 * @brief Samples the tanh noise model on a VP schedule with AB2 and CAB-2.
 */
#include <cstdio>

#include "cab/cab.hpp"

int main() {
  const cab::Schedule schedule = cab::Schedule::vp_linear();
  const cab::ModelField model = cab::bench::tanh_noise_model(3);
  const cab::RectifiedField field(model, schedule);
  const cab::State x0 = cab::standard_normal(3, 7);

  cab::SamplerConfig cfg;
  cfg.steps = 40;
  cfg.grid = cab::GridKind::uniform_t;
  const cab::SamplingGrid grid = cab::build_grid(schedule, cfg);
  const cab::State ref = cab::sample_rectified_reference(field, grid, x0, 1e-11).final_node().y;

  for (cab::Solver s : {cab::Solver::ab2, cab::Solver::cab2}) {
    cfg.solver = s;
    const cab::Trajectory traj = cab::sample(field, cfg, grid, x0);
    const cab::State& y = traj.final_node().y;
    std::printf("%-5s nfe=%zu err=%.3e\n", std::string(cab::to_string(s)).c_str(), traj.nfe_count,
                cab::distance(y, ref));
  }
}
