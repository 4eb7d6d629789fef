#include "oppload/harness/output.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace oppload::harness {

using nlohmann::json;

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::optional<client::HandleStatus> status_from_string(std::string_view s) {
  for (auto st : {client::HandleStatus::Pending, client::HandleStatus::Succeeded,
                  client::HandleStatus::Failed, client::HandleStatus::TimedOut})
    if (client::to_string(st) == s) return st;
  return std::nullopt;
}

std::optional<ErrorClass> error_from_string(std::string_view s) {
  for (auto c : {ErrorClass::TaskExecution, ErrorClass::WorkerSelection, ErrorClass::WorkerCalling})
    if (to_string(c) == s) return c;
  return std::nullopt;
}

json to_json(const ExperimentReport& r) {
  json j;
  j["scenario"] = r.scenario;
  j["strategy"] = r.strategy;
  j["seed"] = r.seed;
  j["config_digest"] = r.config_digest;
  j["clients"] = r.clients;
  j["ended_at"] = r.ended_at;
  json wfs = json::array();
  for (const auto& w : r.workflows) {
    json tasks = json::array();
    for (const auto& t : w.tasks)
      tasks.push_back({{"runtime_s", t.runtime_s},
                       {"transmission_s", t.transmission_s},
                       {"execution_s", t.execution_s}});
    wfs.push_back({{"id", w.id.to_string()},
                   {"state", to_string(w.state)},
                   {"status", client::to_string(w.status)},
                   {"error", w.error ? json(to_string(*w.error)) : json(nullptr)},
                   {"submitted_at", w.submitted_at},
                   {"finished_at", w.finished_at},
                   {"tasks", tasks}});
  }
  j["workflows"] = wfs;
  json sel = json::array();
  for (const auto& [caller, row] : r.selections)
    for (const auto& [worker, n] : row)
      sel.push_back({{"caller", caller.to_string()}, {"worker", worker.to_string()}, {"count", n}});
  j["selections"] = sel;
  json workers = json::array();
  for (const auto& w : r.workers)
    workers.push_back({{"address", w.address.to_string()},
                       {"cohort", w.cohort},
                       {"initial_energy", w.initial_energy},
                       {"residual_energy", w.residual_energy},
                       {"executions", w.executions}});
  j["workers"] = workers;
  j["probes"] = {{"executions_after_deadline", r.executions_after_deadline},
                 {"terminal_transitions", r.terminal_transitions},
                 {"cleanup_leaks", r.cleanup_leaks},
                 {"bundles_transferred", r.bundles_transferred},
                 {"transfers_aborted", r.transfers_aborted}};
  return j;
}

NodeAddress address(const json& j) {
  auto a = NodeAddress::parse(j.get<std::string>());
  if (!a) throw std::runtime_error("bad node address '" + j.get<std::string>() + "'");
  return *a;
}

ExperimentReport from_json(const json& j) {
  ExperimentReport r;
  r.scenario = j.at("scenario").get<std::string>();
  r.strategy = j.at("strategy").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.config_digest = j.at("config_digest").get<std::string>();
  r.clients = j.at("clients").get<std::size_t>();
  r.ended_at = j.at("ended_at").get<double>();
  for (const auto& w : j.at("workflows")) {
    WorkflowRecord rec;
    auto id = WorkflowId::parse(w.at("id").get<std::string>());
    auto state = final_state_from_string(w.at("state").get<std::string>());
    auto status = status_from_string(w.at("status").get<std::string>());
    if (!id || !state || !status) throw std::runtime_error("malformed workflow record");
    rec.id = *id;
    rec.state = *state;
    rec.status = *status;
    if (!w.at("error").is_null()) {
      auto e = error_from_string(w.at("error").get<std::string>());
      if (!e) throw std::runtime_error("unknown error class");
      rec.error = *e;
    }
    rec.submitted_at = w.at("submitted_at").get<double>();
    rec.finished_at = w.at("finished_at").get<double>();
    for (const auto& t : w.at("tasks"))
      rec.tasks.push_back({t.at("runtime_s").get<double>(), t.at("transmission_s").get<double>(),
                           t.at("execution_s").get<double>()});
    r.workflows.push_back(std::move(rec));
  }
  for (const auto& s : j.at("selections"))
    r.selections[address(s.at("caller"))][address(s.at("worker"))] = s.at("count").get<std::uint64_t>();
  for (const auto& w : j.at("workers"))
    r.workers.push_back(WorkerRecord{address(w.at("address")), w.at("cohort").get<std::string>(),
                                     w.at("initial_energy").get<double>(),
                                     w.at("residual_energy").get<double>(),
                                     w.at("executions").get<std::uint64_t>()});
  const auto& p = j.at("probes");
  r.executions_after_deadline = p.at("executions_after_deadline").get<std::uint64_t>();
  r.terminal_transitions = p.at("terminal_transitions").get<std::uint64_t>();
  r.cleanup_leaks = p.at("cleanup_leaks").get<std::uint64_t>();
  r.bundles_transferred = p.at("bundles_transferred").get<std::uint64_t>();
  r.transfers_aborted = p.at("transfers_aborted").get<std::uint64_t>();
  return r;
}

std::string group_stem(const GroupKey& k) {
  return k.scenario + "_" + std::to_string(k.clients) + "c_" + k.strategy;
}

void add_common_tables(OutputSet& out, const std::vector<ExperimentReport>& reports) {
  out.emplace_back("reports.json", reports_json(reports));

  std::ostringstream phases;
  phases << "scenario,clients,strategy,seed,workflow,state,task,runtime_s,transmission_s,"
            "execution_s,total_s\n";
  for (const auto& r : reports)
    for (const auto& w : r.workflows)
      for (std::size_t k = 0; k < w.tasks.size(); ++k) {
        const auto& t = w.tasks[k];
        phases << r.scenario << ',' << r.clients << ',' << r.strategy << ',' << r.seed << ','
               << w.id.to_string() << ',' << to_string(w.state) << ',' << k + 1 << ','
               << num(t.runtime_s) << ',' << num(t.transmission_s) << ',' << num(t.execution_s)
               << ',' << num(t.total()) << '\n';
      }
  out.emplace_back("phases.csv", phases.str());

  const auto agg = aggregate(reports);
  std::ostringstream summary;
  summary << "scenario,clients,strategy,runs,workflows,successes,success_rate,execution_mean,"
             "execution_sd,runtime_mean,runtime_sd,transmission_mean,transmission_sd,total_mean,"
             "total_sd\n";
  std::ostringstream states;
  states << "scenario,clients,strategy";
  for (auto s : kAllFinalStates) states << ',' << to_string(s);
  states << '\n';
  for (const auto& row : agg.rows) {
    const auto& k = row.key;
    summary << k.scenario << ',' << k.clients << ',' << k.strategy << ',' << row.runs << ','
            << row.workflows << ',' << row.successes << ',' << num(row.success_rate) << ','
            << num(row.execution.mean) << ',' << num(row.execution.sd) << ','
            << num(row.runtime.mean) << ',' << num(row.runtime.sd) << ','
            << num(row.transmission.mean) << ',' << num(row.transmission.sd) << ','
            << num(row.total.mean) << ',' << num(row.total.sd) << '\n';
    states << k.scenario << ',' << k.clients << ',' << k.strategy;
    for (auto n : row.states) states << ',' << n;
    states << '\n';
  }
  out.emplace_back("summary.csv", summary.str());
  out.emplace_back("final_states.csv", states.str());

  for (const auto& [key, m] : agg.load) {
    std::set<NodeAddress> workers;
    for (const auto& [caller, row] : m)
      for (const auto& [w, n] : row) workers.insert(w);
    std::ostringstream csv;
    csv << "caller";
    for (const auto& w : workers) csv << ',' << w.to_string();
    csv << '\n';
    for (const auto& [caller, row] : m) {
      csv << caller.to_string();
      for (const auto& w : workers) {
        auto it = row.find(w);
        csv << ',' << (it == row.end() ? 0 : it->second);
      }
      csv << '\n';
    }
    out.emplace_back("load_matrix_" + group_stem(key) + ".csv", csv.str());
  }
}

}  // namespace

std::string report_json(const ExperimentReport& report) { return to_json(report).dump(2); }

std::string reports_json(const std::vector<ExperimentReport>& reports) {
  json arr = json::array();
  for (const auto& r : reports) arr.push_back(to_json(r));
  return json{{"reports", arr}}.dump(2) + "\n";
}

std::vector<ExperimentReport> parse_reports(std::string_view text) {
  std::vector<ExperimentReport> out;
  try {
    const auto j = json::parse(text);
    for (const auto& r : j.at("reports")) out.push_back(from_json(r));
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed reports: ") + e.what());
  }
  return out;
}

OutputSet suite_tables(const std::vector<SuiteRun>& runs) {
  OutputSet out;
  std::ostringstream manifest;
  manifest << "scenario,clients,strategy,seed,config_digest,status,error\n";
  std::vector<ExperimentReport> reports;
  for (const auto& run : runs) {
    const auto& c = run.config;
    std::string err = run.error;
    for (auto& ch : err)
      if (ch == ',' || ch == '\n') ch = ';';
    manifest << c.name << ',' << c.clients << ',' << assignment::to_string(c.runtime.strategy)
             << ',' << c.seed << ',' << c.digest() << ',' << (run.report ? "ok" : "failed") << ','
             << err << '\n';
    if (run.report) reports.push_back(*run.report);
  }
  out.emplace_back("manifest.csv", manifest.str());
  add_common_tables(out, reports);
  return out;
}

OutputSet report_tables(const std::vector<ExperimentReport>& reports) {
  OutputSet out;
  std::ostringstream manifest;
  manifest << "scenario,clients,strategy,seed,config_digest,status,error\n";
  for (const auto& r : reports)
    manifest << r.scenario << ',' << r.clients << ',' << r.strategy << ',' << r.seed << ','
             << r.config_digest << ",ok,\n";
  out.emplace_back("manifest.csv", manifest.str());
  add_common_tables(out, reports);
  return out;
}

OutputSet plot_tables(const std::vector<ExperimentReport>& reports) {
  OutputSet out;
  const auto agg = aggregate(reports);
  std::ostringstream phases, states, load;
  phases << "scenario,clients,strategy,phase,mean_s,sd_s,n\n";
  states << "scenario,clients,strategy,state,count\n";
  load << "scenario,clients,strategy,caller,worker,count,share\n";
  for (const auto& row : agg.rows) {
    const auto& k = row.key;
    const std::string prefix =
        k.scenario + "," + std::to_string(k.clients) + "," + k.strategy + ",";
    for (const auto& [name, st] : {std::pair{"execution", row.execution},
                                   std::pair{"runtime", row.runtime},
                                   std::pair{"transmission", row.transmission},
                                   std::pair{"total", row.total}})
      phases << prefix << name << ',' << num(st.mean) << ',' << num(st.sd) << ',' << st.n << '\n';
    for (auto s : kAllFinalStates)
      states << prefix << to_string(s) << ',' << row.states[static_cast<std::size_t>(s)] << '\n';
  }
  for (const auto& [k, m] : agg.load) {
    const std::string prefix =
        k.scenario + "," + std::to_string(k.clients) + "," + k.strategy + ",";
    for (const auto& [caller, row] : m) {
      std::uint64_t total = 0;
      for (const auto& [w, n] : row) total += n;
      for (const auto& [w, n] : row)
        load << prefix << caller.to_string() << ',' << w.to_string() << ',' << n << ','
             << num(static_cast<double>(n) / static_cast<double>(total)) << '\n';
    }
  }
  out.emplace_back("plot_phases.csv", phases.str());
  out.emplace_back("plot_final_states.csv", states.str());
  out.emplace_back("plot_load.csv", load.str());
  return out;
}

void write_outputs(const std::filesystem::path& dir, const OutputSet& files) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw OutputError("cannot create output directory '" + dir.string() + "'");
  std::vector<fs::path> temps;
  auto cleanup = [&] {
    for (const auto& t : temps) fs::remove(t, ec);
  };
  for (const auto& [name, content] : files) {
    const auto tmp = dir / ("." + name + ".tmp");
    temps.push_back(tmp);
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
    out.close();
    if (!out) {
      cleanup();
      throw OutputError("cannot write '" + (dir / name).string() + "'");
    }
  }
  for (const auto& [name, content] : files) {
    if (fs::is_directory(dir / name)) {
      cleanup();
      throw OutputError("'" + (dir / name).string() + "' is a directory");
    }
  }
  for (std::size_t i = 0; i < files.size(); ++i) {
    fs::rename(temps[i], dir / files[i].first, ec);
    if (ec) {
      cleanup();
      throw OutputError("cannot move '" + files[i].first + "' into place: " + ec.message());
    }
  }
}

std::vector<ExperimentReport> load_reports(const std::filesystem::path& dir) {
  const auto path = std::filesystem::is_directory(dir) ? dir / "reports.json" : dir;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_reports(ss.str());
}

}  // namespace oppload::harness
