// Sweeps a gaussian pulse over r, picks the worst characteristic and prints
// its Q(t) history, e.g.
//   demo_worst_characteristic 0.499 0.9315

#include <cstdio>
#include <cstdlib>

#include "coldplasma/serialize.hpp"
#include "coldplasma/sweep.hpp"

int main(int argc, char** argv) {
  namespace cp = coldplasma;
  const double a = argc > 1 ? std::atof(argv[1]) : 0.499;
  const double nu = argc > 2 ? std::atof(argv[2]) : 0.9315;
  const cp::ModelParams params{2, nu};
  const auto pulse = cp::PulseProfile::gaussian(a);

  const auto sweep = cp::sweep_r(pulse, cp::RGrid{0.001, 1.5, 0.005}, params, cp::default_horizon(nu));
  std::printf("global: %s, worst r = %s, q_min = %s\n", cp::to_string(sweep.global).c_str(),
              cp::format_double(sweep.worst_r).c_str(), cp::format_double(sweep.worst_q_min).c_str());

  cp::CriteriaOptions opts;
  opts.control.sample_stride = 20;
  const auto run = cp::simulate_characteristic(pulse, sweep.worst_r, params, 20.0, opts);
  std::printf("t,Q\n");
  for (const auto& s : run.trajectory.samples) std::printf("%.4f,%.6f\n", s.t, s.y[5]);
  std::printf("verdict: %s\n", cp::to_string(run.verdict.status).c_str());
}
