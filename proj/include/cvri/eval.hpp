#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "cvri/config.hpp"
#include "cvri/dataset.hpp"
#include "cvri/metrics.hpp"
#include "cvri/operators.hpp"
#include "cvri/parallel.hpp"
#include "cvri/types.hpp"

namespace cvri {

template <class Scalar = double>
struct Method {
  std::string name;
  std::function<ImageReal<Scalar>(const EchoMatrix<Scalar>&)> reconstruct;
};

struct EvalCell {
  double mean_rmse = 0;
  int trials = 0;
};

struct EvalReport {
  std::vector<std::string> methods;
  std::vector<double> snrs_db;
  std::vector<std::vector<EvalCell>> cells; // [method][snr]
};

// RMSE-vs-SNR sweep: for each trial a fresh held-out scene is drawn, its
// noisy echo handed to every method, and each output scored against the
// rendered ground truth. All methods see identical inputs per cell, and the
// scene stream does not depend on the SNR, so cells within a row are paired.
// Results depend only on (seed, snr list, trials), never on timing or thread
// count.
template <class Scalar = double>
EvalReport sweep(const ImagingGeometry& geom, const TrainConfig& cfg,
                 const std::vector<Method<Scalar>>& methods, const std::vector<double>& snrs_db,
                 int trials, int n_threads = 0) {
  require(trials >= 1, "sweep: trials must be >= 1");
  require(!methods.empty(), "sweep: no methods given");
  EvalReport report;
  for (const auto& m : methods) report.methods.push_back(m.name);
  report.snrs_db = snrs_db;
  report.cells.assign(methods.size(), std::vector<EvalCell>(snrs_db.size()));

  for (std::size_t si = 0; si < snrs_db.size(); ++si) {
    TrainConfig ecfg = cfg;
    ecfg.snr_min_db = snrs_db[si];
    ecfg.snr_max_db = snrs_db[si];
    ecfg.examples_total = trials;
    ecfg.batch_size = 1;
    const auto data = heldout_dataset<Scalar>(geom, ecfg, 1ull << 33);
    std::vector<std::vector<double>> errs(methods.size(), std::vector<double>(trials, 0.0));
    parallel_for(
        trials,
        [&](long t) {
          const auto ex = data.example(t, 0);
          for (std::size_t mi = 0; mi < methods.size(); ++mi) {
            const ImageReal<Scalar> out = methods[mi].reconstruct(ex.noisy_echo);
            errs[mi][static_cast<std::size_t>(t)] = static_cast<double>(rmse(out, ex.target));
          }
        },
        n_threads);
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      double sum = 0;
      for (double e : errs[mi]) sum += e;
      report.cells[mi][si] = {sum / trials, trials};
    }
  }
  return report;
}

// Machine-readable rows: exact reproducible values, no timing.
inline std::string format_report_csv(const EvalReport& r) {
  std::ostringstream out;
  out.precision(17);
  out << "method,snr_db,trials,mean_rmse\n";
  for (std::size_t mi = 0; mi < r.methods.size(); ++mi)
    for (std::size_t si = 0; si < r.snrs_db.size(); ++si)
      out << r.methods[mi] << ',' << r.snrs_db[si] << ',' << r.cells[mi][si].trials << ','
          << r.cells[mi][si].mean_rmse << '\n';
  return out.str();
}

inline std::string format_report_table(const EvalReport& r) {
  std::ostringstream out;
  out << std::left << std::setw(16) << "method";
  for (double s : r.snrs_db) {
    std::ostringstream h;
    h << "rmse@" << s << "dB";
    out << std::right << std::setw(14) << h.str();
  }
  out << '\n';
  for (std::size_t mi = 0; mi < r.methods.size(); ++mi) {
    out << std::left << std::setw(16) << r.methods[mi];
    for (std::size_t si = 0; si < r.snrs_db.size(); ++si)
      out << std::right << std::setw(14) << std::fixed << std::setprecision(5)
          << r.cells[mi][si].mean_rmse;
    out << '\n';
  }
  return out.str();
}

struct TimingResult {
  std::string method;
  int trials = 0;
  double mean_total_ms = 0;
  double std_total_ms = 0;
  bool split = false;          // CNN methods report the two stages separately
  double mean_operator_ms = 0; // fixed matched-filter stage
  double mean_network_ms = 0;  // convolutional stage
};

namespace detail {

inline double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

inline TimingResult summarize_timing(const std::string& name, const std::vector<double>& totals) {
  TimingResult r;
  r.method = name;
  r.trials = static_cast<int>(totals.size());
  double sum = 0;
  for (double t : totals) sum += t;
  r.mean_total_ms = sum / totals.size();
  double var = 0;
  for (double t : totals) var += (t - r.mean_total_ms) * (t - r.mean_total_ms);
  r.std_total_ms = totals.size() > 1 ? std::sqrt(var / (totals.size() - 1)) : 0.0;
  return r;
}

} // namespace detail

// Wall-clock timing of a single-stage method. Runs sequentially; the first
// `warmup` runs are discarded.
template <class Scalar, class Fn>
TimingResult time_method(const std::string& name, const EchoMatrix<Scalar>& echo, Fn&& fn,
                         int trials, int warmup = 3) {
  require(trials >= 1, "time_method: trials must be >= 1");
  for (int i = 0; i < warmup; ++i) fn(echo);
  std::vector<double> totals(static_cast<std::size_t>(trials));
  for (int i = 0; i < trials; ++i) {
    const double t0 = detail::now_ms();
    fn(echo);
    totals[static_cast<std::size_t>(i)] = detail::now_ms() - t0;
  }
  return detail::summarize_timing(name, totals);
}

// Two-stage timing for the network methods: the operator stage maps the echo
// to the matched-filter image, the network stage maps that image to the
// output.
template <class Scalar, class OpFn, class NetFn>
TimingResult time_split_method(const std::string& name, const EchoMatrix<Scalar>& echo,
                               OpFn&& op_stage, NetFn&& net_stage, int trials, int warmup = 3) {
  require(trials >= 1, "time_split_method: trials must be >= 1");
  for (int i = 0; i < warmup; ++i) net_stage(op_stage(echo));
  std::vector<double> totals(static_cast<std::size_t>(trials));
  double op_sum = 0, net_sum = 0;
  for (int i = 0; i < trials; ++i) {
    const double t0 = detail::now_ms();
    auto mid = op_stage(echo);
    const double t1 = detail::now_ms();
    net_stage(mid);
    const double t2 = detail::now_ms();
    op_sum += t1 - t0;
    net_sum += t2 - t1;
    totals[static_cast<std::size_t>(i)] = t2 - t0;
  }
  TimingResult r = detail::summarize_timing(name, totals);
  r.split = true;
  r.mean_operator_ms = op_sum / trials;
  r.mean_network_ms = net_sum / trials;
  return r;
}

inline std::string format_timing_table(const std::vector<TimingResult>& rows) {
  std::ostringstream out;
  out << std::left << std::setw(16) << "method" << std::right << std::setw(12) << "total_ms"
      << std::setw(12) << "std_ms" << std::setw(14) << "operator_ms" << std::setw(13)
      << "network_ms" << '\n';
  for (const auto& r : rows) {
    out << std::left << std::setw(16) << r.method << std::right << std::setw(12) << std::fixed
        << std::setprecision(3) << r.mean_total_ms << std::setw(12) << r.std_total_ms;
    if (r.split)
      out << std::setw(14) << r.mean_operator_ms << std::setw(13) << r.mean_network_ms;
    else
      out << std::setw(14) << "-" << std::setw(13) << "-";
    out << '\n';
  }
  return out.str();
}

} // namespace cvri
