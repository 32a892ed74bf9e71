#include "mbms/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace mbms {

std::optional<double> power_gain(double p0, double pref) {
  if (!(pref > 0.0)) return std::nullopt;
  return (pref - p0) / pref;
}

double accrue_power(int subbands, double total_power_w, int num_subbands) {
  return total_power_w / num_subbands * subbands;
}

std::optional<double> usr(std::span<const SessionRecord> sessions) {
  if (sessions.empty()) return std::nullopt;
  const auto ok = std::count_if(sessions.begin(), sessions.end(),
                                [](const SessionRecord& s) { return s.satisfied; });
  return static_cast<double>(ok) / static_cast<double>(sessions.size());
}

std::optional<double> avg_harq_attempts(std::span<const int> attempts) {
  if (attempts.empty()) return std::nullopt;
  double sum = 0.0;
  for (int a : attempts) sum += a;
  return sum / static_cast<double>(attempts.size());
}

std::optional<double> transmit_rate_kbps(long total_bits, long blocks, double tti_s) {
  if (blocks <= 0) return std::nullopt;
  return static_cast<double>(total_bits) / static_cast<double>(blocks) / tti_s / 1000.0;
}

FeedbackRatio feedback_ratio(const FeedbackCounters& scheme, const FeedbackCounters& baseline) {
  FeedbackRatio r;
  if (baseline.harq_reports > 0) {
    r.harq = static_cast<double>(scheme.harq_reports) / static_cast<double>(baseline.harq_reports);
  }
  if (baseline.cqi_reports > 0) {
    r.cqi = static_cast<double>(scheme.cqi_reports) / static_cast<double>(baseline.cqi_reports);
  }
  return r;
}

void attach_baseline(MetricsRecord& target, const MetricsRecord* adaptive_baseline,
                     const MetricsRecord* ptp_reference, const MetricsRecord* fixed_reference) {
  if (adaptive_baseline != nullptr) {
    const FeedbackRatio r = feedback_ratio(target.feedback, adaptive_baseline->feedback);
    target.harq_feedback_ratio = r.harq;
    target.cqi_feedback_ratio = r.cqi;
  }
  if (ptp_reference != nullptr) {
    target.gain_vs_ptp = power_gain(target.power_per_group_w, ptp_reference->power_per_group_w);
  }
  if (fixed_reference != nullptr) {
    target.gain_vs_fixed = power_gain(target.power_per_group_w, fixed_reference->power_per_group_w);
  }
}

double empirical_cdf(std::span<const double> sorted, double x) {
  if (sorted.empty()) return 0.0;
  const auto it = std::upper_bound(sorted.begin(), sorted.end(), x);
  return static_cast<double>(it - sorted.begin()) / static_cast<double>(sorted.size());
}

double order_statistic_cdf(std::span<const double> single_sorted, std::span<const int> group_sizes,
                           double x) {
  if (group_sizes.empty()) return 0.0;
  const double survive = 1.0 - empirical_cdf(single_sorted, x);
  std::map<int, long> counts;
  for (int n : group_sizes) ++counts[n];
  double acc = 0.0;
  for (const auto& [n, c] : counts) acc += c * (1.0 - std::pow(survive, n));
  return acc / static_cast<double>(group_sizes.size());
}

Distribution worst_user_distribution(std::span<const WorstUserSample> samples, double lo_db,
                                     double hi_db, double bin_db) {
  Distribution d;
  const int bins = static_cast<int>(std::ceil((hi_db - lo_db) / bin_db));
  std::vector<long> counts(bins, 0);
  for (const WorstUserSample& s : samples) {
    const int b = std::clamp(static_cast<int>(std::floor((s.sinr_db - lo_db) / bin_db)), 0, bins - 1);
    ++counts[b];
  }
  const double total = static_cast<double>(samples.size());
  long cum = 0;
  for (int b = 0; b < bins; ++b) {
    cum += counts[b];
    d.bin_centre_db.push_back(lo_db + (b + 0.5) * bin_db);
    d.pdf.push_back(total > 0 ? counts[b] / total / bin_db : 0.0);
    d.cdf.push_back(total > 0 ? cum / total : 0.0);
  }
  return d;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

std::string format_number(const std::optional<double>& v) {
  return v ? format_number(*v) : std::string();
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

void check(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw std::runtime_error("error writing '" + path.string() + "'");
}

std::string label(const MetricsRecord& m) { return std::string(to_string(m.mode)); }

}  // namespace

void write_summary_csv(std::span<const RunResult> runs, std::ostream& out) {
  out << "mode,feedback_scheme,users_per_cell,seed,measured_ttis,watts_per_group,watts_per_user,"
         "sessions,satisfied,usr,harq_blocks,max_harq_attempts,avg_harq_attempts,"
         "scheduled_blocks,transmit_rate_kbps,harq_feedback,cqi_feedback,acks,nacks,"
         "harq_feedback_ratio,cqi_feedback_ratio,gate_checks,gated_ttis,gated_fraction,"
         "total_load,disjointness_violations,fixed_mcs,fixed_subbands,gate_threshold,"
         "gain_vs_ptp,gain_vs_fixed\n";
  for (const RunResult& r : runs) {
    const MetricsRecord& m = r.metrics;
    out << label(m) << ',' << to_string(m.scheme) << ',' << m.users_per_cell << ',' << m.seed
        << ',' << m.measured_ttis << ',' << format_number(m.power_per_group_w) << ','
        << format_number(m.power_per_user_w) << ',' << m.sessions << ',' << m.satisfied << ','
        << format_number(m.usr) << ',' << m.harq_blocks << ',' << m.max_harq_attempts << ','
        << format_number(m.avg_harq_attempts) << ',' << m.scheduled_blocks << ','
        << format_number(m.transmit_rate_kbps) << ',' << m.feedback.harq_reports << ','
        << m.feedback.cqi_reports << ',' << m.feedback.acks << ',' << m.feedback.nacks << ','
        << format_number(m.harq_feedback_ratio) << ',' << format_number(m.cqi_feedback_ratio)
        << ',' << m.gate_checks << ',' << m.gated_ttis << ',' << format_number(m.gated_fraction)
        << ',' << format_number(m.total_load) << ',' << m.disjointness_violations << ','
        << m.fixed_mcs << ',' << m.fixed_subbands << ',' << format_number(m.gate_threshold)
        << ',' << format_number(m.gain_vs_ptp) << ',' << format_number(m.gain_vs_fixed) << '\n';
  }
}

void write_sessions_csv(std::span<const RunResult> runs, std::ostream& out) {
  out << "mode,users_per_cell,seed,ue_id,spawn_tti,end_tti,cell,wait_s,stall_s,loss_rate,frames,"
         "satisfied,reason\n";
  for (const RunResult& r : runs) {
    for (const SessionRecord& s : r.sessions) {
      out << label(r.metrics) << ',' << r.metrics.users_per_cell << ',' << r.metrics.seed << ','
          << s.ue_id << ',' << s.spawn_tti << ',' << s.end_tti << ',' << s.cell << ','
          << format_number(s.wait_s) << ',' << format_number(s.stall_s) << ','
          << format_number(s.loss_rate) << ',' << s.frames << ',' << (s.satisfied ? 1 : 0) << ','
          << to_string(s.reason) << '\n';
    }
  }
}

void export_csv(std::span<const RunResult> runs, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create '" + dir.string() + "': " + ec.message());

  auto write = [&](const std::string& name, auto&& body) {
    const auto path = dir / name;
    std::ofstream out = open_csv(path);
    body(out);
    check(out, path);
  };

  write("summary.csv", [&](std::ostream& out) { write_summary_csv(runs, out); });
  write("sessions.csv", [&](std::ostream& out) { write_sessions_csv(runs, out); });

  write("fig1.csv", [&](std::ostream& out) {
    out << "mode,users_per_cell,seed,sinr_db,pdf,cdf\n";
    for (const RunResult& r : runs) {
      if (r.worst_user.empty()) continue;
      const Distribution d = worst_user_distribution(r.worst_user);
      for (std::size_t b = 0; b < d.pdf.size(); ++b) {
        out << label(r.metrics) << ',' << r.metrics.users_per_cell << ',' << r.metrics.seed << ','
            << format_number(d.bin_centre_db[b]) << ',' << format_number(d.pdf[b]) << ','
            << format_number(d.cdf[b]) << '\n';
      }
    }
  });

  auto per_run = [&](const std::string& name, const std::string& header, auto&& value) {
    write(name, [&](std::ostream& out) {
      out << "mode,users_per_cell,seed," << header << '\n';
      for (const RunResult& r : runs) {
        const std::string v = value(r.metrics);
        if (v.empty()) continue;
        out << label(r.metrics) << ',' << r.metrics.users_per_cell << ',' << r.metrics.seed << ','
            << v << '\n';
      }
    });
  };

  per_run("fig2.csv", "watts_per_user",
          [](const MetricsRecord& m) { return format_number(m.power_per_user_w); });
  per_run("fig3.csv", "harq_feedback_ratio,cqi_feedback_ratio", [](const MetricsRecord& m) {
    if (!m.harq_feedback_ratio && !m.cqi_feedback_ratio) return std::string();
    return format_number(m.harq_feedback_ratio) + ',' + format_number(m.cqi_feedback_ratio);
  });
  per_run("fig4.csv", "usr", [](const MetricsRecord& m) { return format_number(m.usr); });
  per_run("fig5.csv", "watts_per_group", [](const MetricsRecord& m) {
    if (m.mode != Mode::PtmAdaptive && m.mode != Mode::PtmNackOriented) return std::string();
    return format_number(m.power_per_group_w);
  });
  per_run("fig6.csv", "transmit_rate_kbps",
          [](const MetricsRecord& m) { return format_number(m.transmit_rate_kbps); });
  per_run("fig7.csv", "avg_harq_attempts",
          [](const MetricsRecord& m) { return format_number(m.avg_harq_attempts); });
}

}  // namespace mbms
