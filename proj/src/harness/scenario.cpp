#include "oppload/harness/scenario.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <set>
#include <sstream>

#include "oppload/harness/ini.hpp"

namespace oppload::harness {

namespace {

std::optional<double> to_double(std::string_view s) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<std::uint64_t> to_uint(std::string_view s) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<bool> to_bool(std::string_view s) {
  if (s == "true" || s == "yes" || s == "1") return true;
  if (s == "false" || s == "no" || s == "0") return false;
  return std::nullopt;
}

/// Collects problems while reading fields.
struct Reader {
  std::vector<std::string>& problems;

  void bad(const IniEntry& e, const std::string& what) {
    problems.push_back("line " + std::to_string(e.line) + ": " + e.key + ": " + what);
  }

  void number(const IniEntry& e, double& out) {
    if (auto v = to_double(e.value)) out = *v;
    else bad(e, "expected a number, got '" + e.value + "'");
  }

  template <class Int>
  void integer(const IniEntry& e, Int& out) {
    if (auto v = to_uint(e.value)) out = static_cast<Int>(*v);
    else bad(e, "expected a non-negative integer, got '" + e.value + "'");
  }

  void boolean(const IniEntry& e, bool& out) {
    if (auto v = to_bool(e.value)) out = *v;
    else bad(e, "expected true or false, got '" + e.value + "'");
  }

  /// `k=v k=v ...` attribute lists.
  std::vector<std::pair<std::string, std::string>> attributes(const IniEntry& e) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& tok : split_ws(e.value)) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos || eq == 0) {
        bad(e, "expected attr=value, got '" + tok + "'");
        continue;
      }
      out.emplace_back(tok.substr(0, eq), tok.substr(eq + 1));
    }
    return out;
  }

  void attr_number(const IniEntry& e, const std::string& k, const std::string& v, double& out) {
    if (auto d = to_double(v)) out = *d;
    else bad(e, k + ": expected a number, got '" + v + "'");
  }
};

using Handler = std::function<void(const IniEntry&)>;

void dispatch(const IniSection& section, const std::map<std::string, Handler>& handlers,
              const std::function<void(const IniEntry&)>& fallback, Reader& r) {
  for (const auto& e : section.entries) {
    if (auto it = handlers.find(e.key); it != handlers.end()) it->second(e);
    else if (fallback) fallback(e);
    else r.bad(e, "unknown key in [" + section.name + "]");
  }
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

std::string_view to_string(Topology t) {
  return t == Topology::Ring ? "ring" : "random_waypoint";
}

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error([&] {
        std::string msg = "invalid scenario:";
        for (const auto& p : problems) msg += "\n  " + p;
        return msg;
      }()),
      problems_(std::move(problems)) {}

std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::vector<std::size_t> cohort_sizes(const ScenarioConfig& config, std::size_t workers) {
  std::vector<std::size_t> sizes;
  if (config.cohort_mode == CohortMode::Count) {
    for (const auto& c : config.cohorts) sizes.push_back(static_cast<std::size_t>(c.share));
    return sizes;
  }
  std::size_t total = 0, largest = 0;
  for (std::size_t i = 0; i < config.cohorts.size(); ++i) {
    const auto n = static_cast<std::size_t>(std::floor(config.cohorts[i].share * workers + 0.5));
    sizes.push_back(n);
    total += n;
    if (config.cohorts[i].share > config.cohorts[largest].share) largest = i;
  }
  if (!sizes.empty() && total != workers) {
    const auto diff = static_cast<long long>(workers) - static_cast<long long>(total);
    sizes[largest] = static_cast<std::size_t>(
        std::max(0LL, static_cast<long long>(sizes[largest]) + diff));
  }
  return sizes;
}

std::vector<std::string> ScenarioConfig::validate() const {
  std::vector<std::string> p;
  if (topology == Topology::Ring && nodes < 3) p.push_back("a ring needs at least 3 nodes");
  if (nodes < 2) p.push_back("at least 2 nodes are required");
  if (topology == Topology::Ring && !(ring_spacing_m > 0)) p.push_back("spacing_m must be positive");
  if (topology == Topology::RandomWaypoint) {
    if (!(waypoint.area_width > 0 && waypoint.area_height > 0)) p.push_back("area must be positive");
    if (!(waypoint.speed_min > 0 && waypoint.speed_max >= waypoint.speed_min))
      p.push_back("speeds need 0 < speed_min <= speed_max");
    if (!(waypoint.pause_max >= 0)) p.push_back("pause_max_s must be non-negative");
    if (!(warmup_s >= 0)) p.push_back("warmup_s must be non-negative");
  }
  if (!(link.bandwidth_bps > 0)) p.push_back("bandwidth_bps must be positive");
  if (!(link.latency_s >= 0)) p.push_back("latency_s must be non-negative");
  if (!(range_m > 0)) p.push_back("range_m must be positive");
  if (!(tick_s > 0)) p.push_back("tick_s must be positive");

  std::set<std::string> names;
  if (services.empty()) p.push_back("no services defined");
  for (const auto& s : services) {
    if (!s.valid()) p.push_back("service '" + s.name + "' has an invalid definition");
    if (!names.insert(s.name).second) p.push_back("service '" + s.name + "' defined twice");
  }

  if (clients == 0) p.push_back("at least one client is required");
  if (clients > nodes) p.push_back("more clients than nodes");
  const std::size_t workers = clients_are_workers ? nodes : nodes - std::min(nodes, clients);
  if (cohorts.empty()) {
    p.push_back("no capability cohorts defined");
  } else {
    double total = 0.0;
    std::set<std::size_t> pins;
    for (const auto& c : cohorts) {
      total += c.share;
      if (!(c.share >= 0)) p.push_back("cohort '" + c.name + "' has a negative share");
      if (cohort_mode == CohortMode::Count && c.share != std::floor(c.share))
        p.push_back("cohort '" + c.name + "' needs a whole node count");
      for (auto i : c.pinned) {
        if (i >= nodes || (!clients_are_workers && i < clients))
          p.push_back("cohort '" + c.name + "' pins node " + std::to_string(i) +
                      " which is not a worker");
        if (!pins.insert(i).second) p.push_back("node " + std::to_string(i) + " pinned twice");
      }
    }
    if (cohort_mode == CohortMode::Count && std::llround(total) != static_cast<long long>(workers))
      p.push_back("cohort counts sum to " + fmt(total) + " but there are " +
                  std::to_string(workers) + " workers");
    if (cohort_mode == CohortMode::Fraction && std::abs(total - 1.0) > 1e-9)
      p.push_back("cohort fractions sum to " + fmt(total) + ", not 1");
    if (p.empty()) {
      auto sizes = cohort_sizes(*this, workers);
      for (std::size_t i = 0; i < cohorts.size(); ++i)
        if (cohorts[i].pinned.size() > sizes[i])
          p.push_back("cohort '" + cohorts[i].name + "' pins more nodes than it holds");
    }
  }

  if (workflow_text.empty()) {
    p.push_back("no workflow given");
  } else {
    try {
      const auto wf = workflow::parse(workflow_text);
      for (const auto& t : wf.tasks) {
        if (!names.count(t.service))
          p.push_back("workflow uses undefined service '" + t.service + "'");
        if (!t.just_in_time()) {
          const auto a = std::get<workflow::AheadOfTime>(t.worker).worker.value();
          if (a == 0 || a > nodes)
            p.push_back("workflow names worker " +
                        std::get<workflow::AheadOfTime>(t.worker).worker.to_string() +
                        " which is not in the network");
        }
      }
      if (!(wf.ttl_seconds > 0)) p.push_back("workflow ttl must be positive");
    } catch (const workflow::ParseError& e) {
      p.push_back(std::string("workflow: ") + e.what());
    }
  }

  if (!runtime.weights.valid()) p.push_back("weights must lie in [0, 1] and sum to 1");
  if (!(runtime.announce_interval_s > 0)) p.push_back("announce_interval_s must be positive");
  if (!(runtime.offer_expiry_s > 0)) p.push_back("offer_expiry_s must be positive");
  if (!(runtime.preprocess_s >= 0 && runtime.postprocess_s >= 0))
    p.push_back("pre- and postprocessing times must be non-negative");
  if (!(runtime.fault_probability >= 0 && runtime.fault_probability <= 1))
    p.push_back("fault_probability must lie in [0, 1]");
  if (!(duration_s > 0)) p.push_back("duration_s must be positive");
  if (!(drain_s >= 0)) p.push_back("drain_s must be non-negative");
  if (!(offload_at_s >= 0 && offload_at_s < duration_s))
    p.push_back("offload_at_s must lie within the run");
  if (seeds == 0) p.push_back("seeds must be at least 1");
  return p;
}

std::string ScenarioConfig::canonical() const {
  std::ostringstream os;
  os << "name=" << name << "\ntopology=" << to_string(topology) << "\nnodes=" << nodes
     << "\nspacing=" << fmt(ring_spacing_m) << "\narea=" << fmt(waypoint.area_width) << 'x'
     << fmt(waypoint.area_height) << "\nspeed=" << fmt(waypoint.speed_min) << ','
     << fmt(waypoint.speed_max) << "\npause=" << fmt(waypoint.pause_max) << "\nwarmup=" << fmt(warmup_s)
     << "\nbandwidth=" << fmt(link.bandwidth_bps) << "\nlatency=" << fmt(link.latency_s)
     << "\nrange=" << fmt(range_m) << "\ntick=" << fmt(tick_s) << '\n';
  for (const auto& s : services)
    os << "service=" << s.name << ',' << s.param_count << ',' << fmt(s.profile.exec_seconds_mean)
       << ',' << fmt(s.profile.exec_seconds_jitter) << ',' << s.profile.output_size_bytes << ','
       << fmt(s.profile.energy_cost_e) << ',' << s.extension << '\n';
  os << "cohort_mode=" << (cohort_mode == CohortMode::Count ? "count" : "fraction") << '\n';
  for (const auto& c : cohorts) {
    os << "cohort=" << c.name << ',' << fmt(c.share) << ',' << fmt(c.capabilities.cpu) << ','
       << fmt(c.capabilities.memory) << ',' << fmt(c.capabilities.disk) << ','
       << fmt(c.capabilities.energy) << ",pin";
    for (auto i : c.pinned) os << ':' << i;
    os << '\n';
  }
  const auto& w = runtime.weights;
  os << "clients_are_workers=" << clients_are_workers << "\nworkflow=" << workflow_text
     << "\ninput=" << input_size_bytes << "\nclients=" << clients
     << "\noffload_at=" << fmt(offload_at_s)
     << "\nstrategy=" << assignment::to_string(runtime.strategy) << "\nweights=" << fmt(w.energy)
     << ',' << fmt(w.distance) << ',' << fmt(w.cpu) << ',' << fmt(w.memory) << ','
     << fmt(w.disk) << "\nannounce=" << fmt(runtime.announce_interval_s)
     << "\nexpiry=" << fmt(runtime.offer_expiry_s) << "\npre=" << fmt(runtime.preprocess_s)
     << "\npost=" << fmt(runtime.postprocess_s) << "\nfault=" << fmt(runtime.fault_probability)
     << "\nduration=" << fmt(duration_s) << "\ndrain=" << fmt(drain_s) << '\n';
  return os.str();
}

std::string ScenarioConfig::digest() const {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << fnv1a(canonical());
  return os.str();
}

ScenarioConfig parse_scenario(std::string_view text, const std::filesystem::path& base_dir) {
  std::vector<std::string> problems;
  IniDocument doc;
  try {
    doc = IniDocument::parse(text);
  } catch (const IniError& e) {
    throw ConfigError({e.what()});
  }
  Reader r{problems};
  ScenarioConfig c;
  c.services.clear();

  static const std::set<std::string> known = {"scenario", "topology", "link", "services",
                                              "cohorts", "workflow", "run"};
  for (const auto& s : doc.sections())
    if (!known.count(s.name))
      problems.push_back("line " + std::to_string(s.line) + ": unknown section [" + s.name + "]");

  if (auto s = doc.section("scenario"))
    dispatch(*s, {{"name", [&](const IniEntry& e) { c.name = e.value; }}}, nullptr, r);

  if (auto s = doc.section("topology")) {
    dispatch(*s,
             {{"kind",
               [&](const IniEntry& e) {
                 if (e.value == "ring") c.topology = Topology::Ring;
                 else if (e.value == "random_waypoint") c.topology = Topology::RandomWaypoint;
                 else r.bad(e, "expected ring or random_waypoint");
               }},
              {"nodes", [&](const IniEntry& e) { r.integer(e, c.nodes); }},
              {"spacing_m", [&](const IniEntry& e) { r.number(e, c.ring_spacing_m); }},
              {"width_m", [&](const IniEntry& e) { r.number(e, c.waypoint.area_width); }},
              {"height_m", [&](const IniEntry& e) { r.number(e, c.waypoint.area_height); }},
              {"speed_min", [&](const IniEntry& e) { r.number(e, c.waypoint.speed_min); }},
              {"speed_max", [&](const IniEntry& e) { r.number(e, c.waypoint.speed_max); }},
              {"pause_max_s", [&](const IniEntry& e) { r.number(e, c.waypoint.pause_max); }},
              {"warmup_s", [&](const IniEntry& e) { r.number(e, c.warmup_s); }}},
             nullptr, r);
  } else {
    problems.push_back("missing section [topology]");
  }

  if (auto s = doc.section("link"))
    dispatch(*s,
             {{"bandwidth_bps", [&](const IniEntry& e) { r.number(e, c.link.bandwidth_bps); }},
              {"latency_s", [&](const IniEntry& e) { r.number(e, c.link.latency_s); }},
              {"range_m", [&](const IniEntry& e) { r.number(e, c.range_m); }},
              {"tick_s", [&](const IniEntry& e) { r.number(e, c.tick_s); }}},
             nullptr, r);

  if (auto s = doc.section("services")) {
    dispatch(*s, {}, [&](const IniEntry& e) {
      runtime::ServiceDefinition def;
      def.name = e.key;
      for (const auto& [k, v] : r.attributes(e)) {
        if (k == "params") {
          if (auto n = to_uint(v); n && *n <= 0xffff) def.param_count = static_cast<std::uint16_t>(*n);
          else r.bad(e, "params: expected a small integer");
        } else if (k == "mean_s") {
          r.attr_number(e, k, v, def.profile.exec_seconds_mean);
        } else if (k == "jitter_s") {
          r.attr_number(e, k, v, def.profile.exec_seconds_jitter);
        } else if (k == "output_bytes") {
          if (auto n = to_uint(v)) def.profile.output_size_bytes = *n;
          else r.bad(e, "output_bytes: expected a byte count");
        } else if (k == "energy") {
          r.attr_number(e, k, v, def.profile.energy_cost_e);
        } else if (k == "ext") {
          def.extension = v;
        } else {
          r.bad(e, "unknown attribute '" + k + "'");
        }
      }
      c.services.push_back(std::move(def));
    }, r);
  } else {
    problems.push_back("missing section [services]");
  }

  if (auto s = doc.section("cohorts")) {
    dispatch(*s,
             {{"mode",
               [&](const IniEntry& e) {
                 if (e.value == "count") c.cohort_mode = CohortMode::Count;
                 else if (e.value == "fraction") c.cohort_mode = CohortMode::Fraction;
                 else r.bad(e, "expected count or fraction");
               }}},
             [&](const IniEntry& e) {
               Cohort cohort;
               cohort.name = e.key;
               for (const auto& [k, v] : r.attributes(e)) {
                 if (k == "share") r.attr_number(e, k, v, cohort.share);
                 else if (k == "cpu") r.attr_number(e, k, v, cohort.capabilities.cpu);
                 else if (k == "memory") r.attr_number(e, k, v, cohort.capabilities.memory);
                 else if (k == "disk") r.attr_number(e, k, v, cohort.capabilities.disk);
                 else if (k == "energy") r.attr_number(e, k, v, cohort.capabilities.energy);
                 else if (k == "pin") {
                   for (const auto& item : split_list(v)) {
                     if (auto n = to_uint(item)) cohort.pinned.push_back(*n);
                     else r.bad(e, "pin: expected node indices");
                   }
                 } else {
                   r.bad(e, "unknown attribute '" + k + "'");
                 }
               }
               c.cohorts.push_back(std::move(cohort));
             },
             r);
  } else {
    problems.push_back("missing section [cohorts]");
  }

  if (auto s = doc.section("workflow")) {
    dispatch(*s,
             {{"file",
               [&](const IniEntry& e) {
                 const auto path = base_dir / e.value;
                 std::ifstream in(path);
                 if (!in) {
                   r.bad(e, "cannot read '" + path.string() + "'");
                   return;
                 }
                 std::ostringstream ss;
                 ss << in.rdbuf();
                 c.workflow_text = ss.str();
                 c.workflow_source = e.value;
               }},
              {"input_bytes", [&](const IniEntry& e) { r.integer(e, c.input_size_bytes); }},
              {"clients", [&](const IniEntry& e) { r.integer(e, c.clients); }},
              {"offload_at_s", [&](const IniEntry& e) { r.number(e, c.offload_at_s); }},
              {"clients_are_workers",
               [&](const IniEntry& e) { r.boolean(e, c.clients_are_workers); }}},
             nullptr, r);
  } else {
    problems.push_back("missing section [workflow]");
  }

  if (auto s = doc.section("run"))
    dispatch(
        *s,
        {{"strategy",
          [&](const IniEntry& e) {
            if (auto st = assignment::strategy_from_string(e.value)) c.runtime.strategy = *st;
            else r.bad(e, "unknown strategy '" + e.value + "', expected recent, random, best or spread");
          }},
         {"seed", [&](const IniEntry& e) { r.integer(e, c.seed); }},
         {"seeds", [&](const IniEntry& e) { r.integer(e, c.seeds); }},
         {"duration_s", [&](const IniEntry& e) { r.number(e, c.duration_s); }},
         {"drain_s", [&](const IniEntry& e) { r.number(e, c.drain_s); }},
         {"announce_interval_s", [&](const IniEntry& e) { r.number(e, c.runtime.announce_interval_s); }},
         {"offer_expiry_s", [&](const IniEntry& e) { r.number(e, c.runtime.offer_expiry_s); }},
         {"preprocess_s", [&](const IniEntry& e) { r.number(e, c.runtime.preprocess_s); }},
         {"postprocess_s", [&](const IniEntry& e) { r.number(e, c.runtime.postprocess_s); }},
         {"fault_probability", [&](const IniEntry& e) { r.number(e, c.runtime.fault_probability); }},
         {"weights",
          [&](const IniEntry& e) {
            for (const auto& [k, v] : r.attributes(e)) {
              auto m = workflow::metric_from_string(k);
              if (!m) {
                r.bad(e, "unknown metric '" + k + "'");
                continue;
              }
              r.attr_number(e, k, v, c.runtime.weights.of(*m));
            }
          }}},
        nullptr, r);

  auto more = c.validate();
  problems.insert(problems.end(), more.begin(), more.end());
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return c;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot read scenario '" + path.string() + "'"});
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path.parent_path());
}

}  // namespace oppload::harness
