#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <string>
#include <vector>

#include "mbms/channel.hpp"
#include "mbms/config.hpp"
#include "mbms/engine.hpp"
#include "mbms/harq.hpp"
#include "mbms/metrics.hpp"

namespace py = pybind11;
using namespace mbms;

namespace {

py::object opt(const std::optional<double>& v) { return v ? py::cast(*v) : py::none(); }

py::dict metrics_dict(const MetricsRecord& m) {
  py::dict d;
  d["mode"] = std::string(to_string(m.mode));
  d["feedback_scheme"] = std::string(to_string(m.scheme));
  d["users_per_cell"] = m.users_per_cell;
  d["seed"] = m.seed;
  d["measured_ttis"] = m.measured_ttis;
  d["watts_per_group"] = m.power_per_group_w;
  d["watts_per_user"] = m.power_per_user_w;
  d["sessions"] = m.sessions;
  d["satisfied"] = m.satisfied;
  d["usr"] = opt(m.usr);
  d["harq_blocks"] = m.harq_blocks;
  d["max_harq_attempts"] = m.max_harq_attempts;
  d["avg_harq_attempts"] = opt(m.avg_harq_attempts);
  d["scheduled_blocks"] = m.scheduled_blocks;
  d["transmit_rate_kbps"] = opt(m.transmit_rate_kbps);
  d["harq_feedback"] = m.feedback.harq_reports;
  d["cqi_feedback"] = m.feedback.cqi_reports;
  d["acks"] = m.feedback.acks;
  d["nacks"] = m.feedback.nacks;
  d["harq_feedback_ratio"] = opt(m.harq_feedback_ratio);
  d["cqi_feedback_ratio"] = opt(m.cqi_feedback_ratio);
  d["gate_checks"] = m.gate_checks;
  d["gated_ttis"] = m.gated_ttis;
  d["gated_fraction"] = opt(m.gated_fraction);
  d["total_load"] = m.total_load;
  d["disjointness_violations"] = m.disjointness_violations;
  d["fixed_mcs"] = m.fixed_mcs;
  d["fixed_subbands"] = m.fixed_subbands;
  d["gate_threshold"] = m.gate_threshold;
  d["gain_vs_ptp"] = opt(m.gain_vs_ptp);
  d["gain_vs_fixed"] = opt(m.gain_vs_fixed);
  return d;
}

SimulationConfig make_config(const py::dict& settings) {
  SimulationConfig cfg;
  for (const auto& [k, v] : settings) {
    const std::string key = py::str(k);
    std::string value = py::isinstance<py::bool_>(v) ? (v.cast<bool>() ? "1" : "0")
                                                      : std::string(py::str(v));
    apply_setting(cfg, key, value);
  }
  validate(cfg);
  return cfg;
}

py::dict config_dict(const SimulationConfig& cfg) {
  py::dict d;
  const std::string text = to_text(cfg);
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t end = text.find('\n', pos);
    const std::string line = text.substr(pos, end - pos);
    const std::size_t eq = line.find(" = ");
    if (eq != std::string::npos) d[py::str(line.substr(0, eq))] = line.substr(eq + 3);
    pos = end == std::string::npos ? text.size() : end + 1;
  }
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "MBMS system-level simulator";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<InvariantViolation>(m, "InvariantViolation", PyExc_RuntimeError);

  py::class_<RunResult>(m, "RunResult")
      .def_property_readonly("metrics", [](const RunResult& r) { return metrics_dict(r.metrics); })
      .def_property_readonly("sessions",
                             [](const RunResult& r) {
                               py::list out;
                               for (const SessionRecord& s : r.sessions) {
                                 py::dict d;
                                 d["ue_id"] = s.ue_id;
                                 d["spawn_tti"] = s.spawn_tti;
                                 d["end_tti"] = s.end_tti;
                                 d["cell"] = s.cell;
                                 d["wait_s"] = s.wait_s;
                                 d["stall_s"] = s.stall_s;
                                 d["loss_rate"] = s.loss_rate;
                                 d["frames"] = s.frames;
                                 d["satisfied"] = s.satisfied;
                                 d["reason"] = std::string(to_string(s.reason));
                                 out.append(d);
                               }
                               return out;
                             })
      .def_property_readonly("worst_user", [](const RunResult& r) {
        py::list out;
        for (const WorstUserSample& s : r.worst_user) {
          out.append(py::make_tuple(s.tti, s.cell, s.group_size, s.sinr_db));
        }
        return out;
      });

  m.def("default_config", [] { return config_dict(SimulationConfig{}); },
        "All configuration keys with their default values, as strings.");
  m.def(
      "config", [](const py::dict& settings) { return config_dict(make_config(settings)); },
      py::arg("settings") = py::dict(), "Validated configuration with `settings` applied.");
  m.def(
      "run",
      [](const py::dict& settings) {
        const SimulationConfig cfg = make_config(settings);
        py::gil_scoped_release release;
        return run_simulation(cfg);
      },
      py::arg("settings") = py::dict(),
      "Runs one simulation. `settings` maps configuration keys to values.");
  m.def(
      "attach_baseline",
      [](RunResult& target, const RunResult* adaptive, const RunResult* ptp, const RunResult* fixed) {
        attach_baseline(target.metrics, adaptive ? &adaptive->metrics : nullptr,
                        ptp ? &ptp->metrics : nullptr, fixed ? &fixed->metrics : nullptr);
      },
      py::arg("target"), py::arg("adaptive") = nullptr, py::arg("ptp") = nullptr,
      py::arg("fixed") = nullptr);
  m.def(
      "export_csv",
      [](const std::vector<RunResult>& runs, const std::filesystem::path& dir) { export_csv(runs, dir); },
      py::arg("runs"), py::arg("out_dir"));
  m.def("path_loss_db", [](double d) { return path_loss_db(d); }, py::arg("distance_m"));
  m.def("power_gain", &power_gain, py::arg("p0"), py::arg("pref"));
  m.def(
      "aggregate_cqi",
      [](const std::vector<std::vector<std::uint8_t>>& reports) {
        std::vector<CqiReport> rs(reports.size());
        std::vector<const CqiReport*> ptrs;
        for (std::size_t i = 0; i < reports.size(); ++i) {
          rs[i].tti = 0;
          rs[i].cqi = reports[i];
          ptrs.push_back(&rs[i]);
        }
        return aggregate_cqi(ptrs).cqi;
      },
      py::arg("reports"), "Elementwise minimum of per-subband CQI reports.");
}
