// SPDX-License-Identifier: Apache-2.0
// Serial reference vs OpenMP replica kernels on the same workload.
#include <chrono>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <string>

#include <omp.h>

#include "sgdlab/chain.hpp"
#include "sgdlab/model_io.hpp"
#include "sgdlab/stationary.hpp"

namespace {

double seconds(const std::function<void()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void report(const std::string& name, double serial, double parallel, int workers, bool identical) {
  std::cout << std::left << std::setw(28) << name << std::right << std::fixed << std::setprecision(3)
            << " serial " << std::setw(8) << serial << "s  omp(" << workers << ") " << std::setw(8) << parallel
            << "s  speedup " << std::setprecision(2) << serial / parallel << "x  "
            << (identical ? "identical" : "MISMATCH") << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  const int workers = argc > 1 ? std::atoi(argv[1]) : omp_get_max_threads();
  const sgdlab::ObjectiveModel l1 = sgdlab::builtin_model("l1");
  const sgdlab::ObjectiveModel lms3 = sgdlab::builtin_model("lms3");
  const sgdlab::Execution serial{1}, parallel{workers};

  {
    const auto theta0 = lms3.optimum() + sgdlab::Vector::Ones(3);
    const auto sched = sgdlab::RecordSchedule::geometric(1.5);
    sgdlab::Trajectory a, b;
    const double ts = seconds([&] { a = sgdlab::replica_mean_chain(lms3, 0.1, theta0, 20000, sched, 1, 256, serial); });
    const double tp = seconds([&] { b = sgdlab::replica_mean_chain(lms3, 0.1, theta0, 20000, sched, 1, 256, parallel); });
    report("replica_mean_chain lms3", ts, tp, workers, a.rows.back().fgap_avg == b.rows.back().fgap_avg);
  }
  {
    const double l = l1.constants().L;
    sgdlab::BiasScalingOptions opt;
    opt.samples = 5000;
    opt.replicas = 200;
    sgdlab::BiasScaling a, b;
    opt.exec = serial;
    const double ts = seconds([&] { a = sgdlab::fit_bias_scaling(l1, {0.05 / l, 0.1 / l, 0.2 / l, 0.4 / l}, 1, opt); });
    opt.exec = parallel;
    const double tp = seconds([&] { b = sgdlab::fit_bias_scaling(l1, {0.05 / l, 0.1 / l, 0.2 / l, 0.4 / l}, 1, opt); });
    report("coupled bias l1", ts, tp, workers, a.points.back().rr2.mean == b.points.back().rr2.mean);
  }
  {
    const sgdlab::Vector a0 = sgdlab::Vector::Constant(1, 2.0), b0 = sgdlab::Vector::Constant(1, -1.0);
    sgdlab::CouplingResult a, b;
    const double ts = seconds([&] { a = sgdlab::coupling_contraction(l1, 0.5, a0, b0, 4000, 500, 1, serial); });
    const double tp = seconds([&] { b = sgdlab::coupling_contraction(l1, 0.5, a0, b0, 4000, 500, 1, parallel); });
    report("coupling l1", ts, tp, workers, a.distance == b.distance);
  }
  return 0;
}
