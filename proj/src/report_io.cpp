#include "eesim/report_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "eesim/errors.hpp"
#include "eesim/stats.hpp"

namespace eesim {
namespace {

BatchCurve curve_from_json(const Json& j, const std::string& where) {
  if (!j.is_object() || j.empty()) throw ValidationError(where + ": expected a non-empty {batch: ms} object");
  std::map<int, double> pts;
  for (const auto& [key, val] : j.items()) {
    int b = 0;
    const auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), b);
    if (ec != std::errc() || ptr != key.data() + key.size() || b < 1)
      throw ValidationError(where + ": batch key '" + key + "' is not a positive integer");
    if (!val.is_number()) throw ValidationError(where + "." + key + ": latency must be a number");
    pts[b] = val.get<double>();
  }
  BatchCurve c(std::move(pts));
  if (auto msg = c.check_latency_invariants(); !msg.empty()) throw ValidationError(where + ": " + msg);
  return c;
}

Json curve_to_json(const BatchCurve& c) {
  Json j = Json::object();
  for (const auto& [b, ms] : c.points()) j[std::to_string(b)] = ms;
  return j;
}

Json opt_layer(const std::optional<LayerId>& l) { return l ? Json(*l) : Json(nullptr); }

Json latency_json(const Percentiles& p) {
  return {{"p25", p.p25}, {"p50", p.p50}, {"p95", p.p95}, {"mean", p.mean}, {"max", p.max}};
}

Json utilities_json(const UtilityReport& u) {
  Json ramps = Json::array();
  for (const auto& r : u.ramps)
    ramps.push_back({{"site", r.site},
                     {"savings_ms", r.savings_ms},
                     {"overheads_ms", r.overheads_ms},
                     {"exit_rate", r.exit_rate},
                     {"utility_ms", r.utility_ms}});
  return {{"period_len", u.period_len}, {"mean_savings_ms", u.mean_savings_ms}, {"ramps", std::move(ramps)}};
}

Json events_json(const std::vector<AdaptationEvent>& events) {
  Json out = Json::array();
  for (const auto& e : events) {
    Json j{{"time_ms", e.time_ms},
           {"after_requests", e.after_requests},
           {"kind", to_string(e.kind)},
           {"action", to_string(e.action)},
           {"before", config_to_json(e.before)},
           {"after", config_to_json(e.after)}};
    if (e.utilities) j["utilities"] = utilities_json(*e.utilities);
    out.push_back(std::move(j));
  }
  return out;
}

// Minimal structural checker with JSON-pointer-like paths in messages.
class Checker {
 public:
  explicit Checker(std::string root) : root_(std::move(root)) {}

  const Json& field(const Json& obj, const std::string& path, const std::string& key) const {
    if (!obj.is_object()) fail(path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) fail(path, "missing field '" + key + "'");
    return *it;
  }
  double number(const Json& obj, const std::string& path, const std::string& key) const {
    const auto& v = field(obj, path, key);
    if (!v.is_number()) fail(path + "." + key, "expected a number");
    return v.get<double>();
  }
  double nonneg(const Json& obj, const std::string& path, const std::string& key) const {
    const double v = number(obj, path, key);
    if (!(v >= 0.0)) fail(path + "." + key, "must be >= 0");
    return v;
  }
  std::string string(const Json& obj, const std::string& path, const std::string& key) const {
    const auto& v = field(obj, path, key);
    if (!v.is_string()) fail(path + "." + key, "expected a string");
    return v.get<std::string>();
  }
  bool boolean(const Json& obj, const std::string& path, const std::string& key) const {
    const auto& v = field(obj, path, key);
    if (!v.is_boolean()) fail(path + "." + key, "expected a boolean");
    return v.get<bool>();
  }
  const Json& array(const Json& obj, const std::string& path, const std::string& key) const {
    const auto& v = field(obj, path, key);
    if (!v.is_array()) fail(path + "." + key, "expected an array");
    return v;
  }
  void layer_or_null(const Json& obj, const std::string& path, const std::string& key) const {
    const auto& v = field(obj, path, key);
    if (!v.is_null() && !v.is_string()) fail(path + "." + key, "expected a layer name or null");
  }
  [[noreturn]] void fail(const std::string& path, const std::string& msg) const {
    throw ValidationError(root_ + path + ": " + msg);
  }

 private:
  std::string root_;
};

void check_latency(const Checker& c, const Json& summary, const std::string& path,
                   const std::vector<double>& sample) {
  const auto& lat = c.field(summary, path, "latency");
  const Percentiles expect = summarize(sample);
  const std::pair<const char*, double> keys[] = {
      {"p25", expect.p25}, {"p50", expect.p50}, {"p95", expect.p95}, {"mean", expect.mean}, {"max", expect.max}};
  for (const auto& [k, v] : keys) {
    const double got = c.number(lat, path + ".latency", k);
    if (std::abs(got - v) > 1e-9 * std::max(1.0, std::abs(v)))
      c.fail(path + ".latency." + k, "inconsistent with the per-record latencies");
  }
}

void check_config_doc(const Checker& c, const Json& cfg, const std::string& path) {
  const auto& ramps = c.array(cfg, path, "ramps");
  for (std::size_t i = 0; i < ramps.size(); ++i) {
    const std::string p = path + ".ramps[" + std::to_string(i) + "]";
    c.string(ramps[i], p, "site");
    const double t = c.number(ramps[i], p, "threshold");
    if (!(t >= 0.0 && t <= 1.0)) c.fail(p + ".threshold", "outside [0,1]");
  }
}

void check_events(const Checker& c, const Json& doc, const std::string& path) {
  const auto& events = c.array(doc, path, "events");
  for (std::size_t i = 0; i < events.size(); ++i) {
    const std::string p = path + ".events[" + std::to_string(i) + "]";
    c.nonneg(events[i], p, "time_ms");
    const auto kind = c.string(events[i], p, "kind");
    if (kind != "threshold_tune" && kind != "ramp_adjust") c.fail(p + ".kind", "unknown event kind");
    c.string(events[i], p, "action");
    check_config_doc(c, c.field(events[i], p, "before"), p + ".before");
    check_config_doc(c, c.field(events[i], p, "after"), p + ".after");
  }
}

void check_sim(const Checker& c, const Json& doc, const std::string& path) {
  const auto mode = c.string(doc, path, "mode");
  if (mode != "vanilla" && mode != "adaptive" && mode != "optimal") c.fail(path + ".mode", "unknown mode");
  const auto& summary = c.field(doc, path, "summary");
  const std::string sp = path + ".summary";
  const auto& reqs = c.array(doc, path, "requests");
  std::vector<double> served;
  std::size_t dropped = 0;
  for (std::size_t i = 0; i < reqs.size(); ++i) {
    const std::string p = path + ".requests[" + std::to_string(i) + "]";
    const auto& r = reqs[i];
    c.number(r, p, "id");
    c.nonneg(r, p, "arrival_ms");
    const double q = c.nonneg(r, p, "queue_ms");
    const double s = c.nonneg(r, p, "serve_ms");
    const double t = c.nonneg(r, p, "total_ms");
    c.layer_or_null(r, p, "exit_site");
    c.boolean(r, p, "correct");
    c.boolean(r, p, "slo_violated");
    const bool d = c.boolean(r, p, "dropped");
    c.nonneg(r, p, "batch");
    if (std::abs(q + s - t) > 1e-9 * std::max(1.0, t)) c.fail(p + ".total_ms", "differs from queue_ms + serve_ms");
    if (d)
      ++dropped;
    else
      served.push_back(t);
  }
  if (c.nonneg(summary, sp, "requests") != static_cast<double>(reqs.size()))
    c.fail(sp + ".requests", "does not match the request list");
  if (c.nonneg(summary, sp, "dropped") != static_cast<double>(dropped))
    c.fail(sp + ".dropped", "does not match the request list");
  const double acc = c.number(summary, sp, "accuracy");
  if (!(acc >= 0.0 && acc <= 1.0)) c.fail(sp + ".accuracy", "outside [0,1]");
  c.nonneg(summary, sp, "throughput_rps");
  c.nonneg(summary, sp, "makespan_ms");
  c.nonneg(summary, sp, "busy_ms");
  c.nonneg(summary, sp, "batches");
  c.nonneg(summary, sp, "slo_violations");
  check_latency(c, summary, sp, served);
  const auto& windows = c.array(doc, path, "window_accuracy");
  for (std::size_t i = 0; i < windows.size(); ++i)
    if (!windows[i].is_number() || windows[i].get<double>() < 0.0 || windows[i].get<double>() > 1.0)
      c.fail(path + ".window_accuracy[" + std::to_string(i) + "]", "expected a fraction");
  check_config_doc(c, c.field(doc, path, "initial_config"), path + ".initial_config");
  check_config_doc(c, c.field(doc, path, "final_config"), path + ".final_config");
  check_events(c, doc, path);
}

void check_tpt(const Checker& c, const Json& doc) {
  const auto& summary = c.field(doc, "", "summary");
  const auto& tokens = c.array(doc, "", "tokens");
  std::vector<double> lat;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::string p = ".tokens[" + std::to_string(i) + "]";
    c.number(tokens[i], p, "seq");
    c.nonneg(tokens[i], p, "idx");
    const double l = c.number(tokens[i], p, "latency_ms");
    if (!(l > 0.0)) c.fail(p + ".latency_ms", "must be > 0");
    c.layer_or_null(tokens[i], p, "exit_site");
    c.boolean(tokens[i], p, "correct");
    lat.push_back(l);
  }
  if (c.nonneg(summary, ".summary", "tokens") != static_cast<double>(tokens.size()))
    c.fail(".summary.tokens", "does not match the token list");
  c.nonneg(summary, ".summary", "vanilla_tpt_ms");
  c.nonneg(summary, ".summary", "feedback_tokens");
  check_latency(c, summary, ".summary", lat);
  const auto& seqs = c.array(doc, "", "sequences");
  std::size_t counted = 0;
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    const std::string p = ".sequences[" + std::to_string(i) + "]";
    c.number(seqs[i], p, "seq");
    counted += static_cast<std::size_t>(c.nonneg(seqs[i], p, "tokens"));
    c.nonneg(seqs[i], p, "mean_tpt_ms");
    c.nonneg(seqs[i], p, "total_ms");
    c.nonneg(seqs[i], p, "vanilla_total_ms");
    c.nonneg(seqs[i], p, "max_deferred");
  }
  if (counted != tokens.size()) c.fail(".sequences", "token counts do not add up to the token list");
  const auto& deferred = c.array(doc, "", "deferred");
  for (std::size_t i = 0; i < deferred.size(); ++i) {
    const std::string p = ".deferred[" + std::to_string(i) + "]";
    c.string(deferred[i], p, "ramp");
    c.nonneg(deferred[i], p, "tokens");
    c.number(deferred[i], p, "penalty");
    const auto kind = c.string(deferred[i], p, "kind");
    if (kind != "carry" && kind != "flush" && kind != "final_flush") c.fail(p + ".kind", "unknown kind");
  }
  check_config_doc(c, c.field(doc, "", "final_config"), ".final_config");
  check_events(c, doc, "");
}

}  // namespace

ModelProfile profile_from_json(const Json& doc) {
  try {
    if (doc.contains("schema") && doc.at("schema") != kProfileSchema)
      throw ValidationError("profile: unsupported schema " + doc.at("schema").dump());
    std::vector<LayerId> nodes = doc.at("nodes").get<std::vector<LayerId>>();
    std::vector<Edge> edges;
    for (const auto& e : doc.at("edges")) {
      if (!e.is_array() || e.size() != 2) throw ValidationError("profile: edges must be [from, to] pairs");
      edges.push_back({e[0].get<LayerId>(), e[1].get<LayerId>()});
    }
    std::map<LayerId, BatchCurve> lat, ramp;
    for (const auto& [layer, c] : doc.at("latencies").items()) lat.emplace(layer, curve_from_json(c, "latencies." + layer));
    if (doc.contains("ramp_latency"))
      for (const auto& [layer, c] : doc.at("ramp_latency").items())
        ramp.emplace(layer, curve_from_json(c, "ramp_latency." + layer));
    return ModelProfile(doc.value("name", std::string("model")), std::move(nodes), std::move(edges), std::move(lat),
                        std::move(ramp), doc.at("output").get<LayerId>());
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("profile: ") + e.what());
  }
}

Json profile_to_json(const ModelProfile& profile) {
  Json edges = Json::array();
  for (const auto& e : profile.edges()) edges.push_back({e.from, e.to});
  Json lat = Json::object(), ramp = Json::object();
  for (const auto& n : profile.nodes()) {
    lat[n] = curve_to_json(profile.layer_latency().at(n));
    if (auto it = profile.ramp_latency().find(n); it != profile.ramp_latency().end()) ramp[n] = curve_to_json(it->second);
  }
  return {{"schema", kProfileSchema}, {"name", profile.name()},     {"nodes", profile.nodes()},
          {"edges", std::move(edges)}, {"latencies", std::move(lat)}, {"ramp_latency", std::move(ramp)},
          {"output", profile.output()}};
}

ModelProfile load_profile(const std::filesystem::path& path) { return profile_from_json(read_json_file(path)); }

Json config_to_json(const EEConfig& config) {
  Json ramps = Json::array();
  for (const auto& r : config.ramps) ramps.push_back({{"site", r.site.layer}, {"threshold", r.threshold}});
  return {{"ramps", std::move(ramps)}};
}

EEConfig config_from_json(const Json& doc, const ModelProfile& profile) {
  const auto sites = find_feasible_sites(profile);
  EEConfig cfg;
  try {
    for (const auto& r : doc.at("ramps")) {
      const auto layer = r.at("site").get<LayerId>();
      const auto i = find_site(sites, layer);
      if (i == sites.size()) throw ValidationError("config: '" + layer + "' is not a feasible ramp site");
      cfg.ramps.push_back({sites[i], r.at("threshold").get<double>()});
    }
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  check_config(cfg);
  return cfg;
}

Json to_json(const SimReport& report) {
  std::size_t served = 0;
  Json reqs = Json::array();
  for (const auto& r : report.requests) {
    if (!r.dropped) ++served;
    reqs.push_back({{"id", r.id},
                    {"arrival_ms", r.arrival_ms},
                    {"queue_ms", r.queue_ms},
                    {"serve_ms", r.serve_ms},
                    {"total_ms", r.total_ms},
                    {"exit_site", opt_layer(r.exit_site)},
                    {"correct", r.correct},
                    {"slo_violated", r.slo_violated},
                    {"dropped", r.dropped},
                    {"batch", r.batch}});
  }
  Json summary{{"requests", report.requests.size()},
               {"served", served},
               {"dropped", report.dropped},
               {"accuracy", report.accuracy},
               {"throughput_rps", report.throughput_rps},
               {"makespan_ms", report.makespan_ms},
               {"busy_ms", report.busy_ms},
               {"batches", report.batches},
               {"slo_violations", report.slo_violations},
               {"latency", latency_json(report.latency)}};
  return {{"schema", kSimReportSchema},
          {"mode", to_string(report.mode)},
          {"summary", std::move(summary)},
          {"window_accuracy", report.window_accuracy},
          {"initial_config", config_to_json(report.initial_config)},
          {"final_config", config_to_json(report.final_config)},
          {"events", events_json(report.events)},
          {"requests", std::move(reqs)}};
}

Json to_json(const ComparisonReport& report) {
  Json j{{"schema", kCompareSchema}};
  Json summary = Json::object();
  const std::pair<const char*, const SimReport*> modes[] = {
      {"vanilla", &report.vanilla}, {"adaptive", &report.adaptive}, {"optimal", &report.optimal}};
  for (const auto& [name, rep] : modes) {
    summary[name] = {{"p25", rep->latency.p25},
                     {"p50", rep->latency.p50},
                     {"p95", rep->latency.p95},
                     {"accuracy", rep->accuracy},
                     {"throughput_rps", rep->throughput_rps}};
  }
  const auto& v = report.vanilla.latency;
  for (const auto& [name, rep] : modes) {
    if (rep == &report.vanilla) continue;
    summary[std::string(name) + "_vs_vanilla"] = {{"p25_ms", rep->latency.p25 - v.p25},
                                                  {"p50_ms", rep->latency.p50 - v.p50},
                                                  {"p95_ms", rep->latency.p95 - v.p95}};
  }
  j["summary"] = std::move(summary);
  for (const auto& [name, rep] : modes) {
    Json sub = to_json(*rep);
    sub.erase("schema");
    j[name] = std::move(sub);
  }
  return j;
}

Json to_json(const TptReport& report) {
  Json tokens = Json::array();
  for (const auto& t : report.tokens)
    tokens.push_back({{"seq", t.seq_id},
                      {"idx", t.index},
                      {"latency_ms", t.latency_ms},
                      {"exit_site", opt_layer(t.exit_site)},
                      {"correct", t.correct}});
  Json seqs = Json::array();
  for (const auto& s : report.sequences)
    seqs.push_back({{"seq", s.seq_id},
                    {"tokens", s.tokens},
                    {"mean_tpt_ms", s.mean_tpt_ms},
                    {"total_ms", s.total_ms},
                    {"vanilla_total_ms", s.vanilla_total_ms},
                    {"max_deferred", s.max_deferred}});
  Json deferred = Json::array();
  for (const auto& d : report.deferred)
    deferred.push_back({{"seq", d.seq_id},
                        {"idx", d.token_index},
                        {"ramp", d.ramp},
                        {"tokens", d.tokens},
                        {"penalty", d.penalty},
                        {"kind", to_string(d.kind)}});
  return {{"schema", kTptReportSchema},
          {"summary",
           {{"tokens", report.tokens.size()},
            {"sequences", report.sequences.size()},
            {"vanilla_tpt_ms", report.vanilla_tpt_ms},
            {"feedback_tokens", report.feedback_tokens},
            {"latency", latency_json(report.latency)}}},
          {"final_config", config_to_json(report.final_config)},
          {"events", events_json(report.events)},
          {"sequences", std::move(seqs)},
          {"deferred", std::move(deferred)},
          {"tokens", std::move(tokens)}};
}

void validate_report(const Json& doc) {
  if (!doc.is_object() || !doc.contains("schema") || !doc.at("schema").is_string())
    throw ValidationError("report: missing schema field");
  const auto schema = doc.at("schema").get<std::string>();
  const Checker c(schema);
  if (doc.contains("manifest")) {
    const auto& m = doc.at("manifest");
    c.string(m, ".manifest", "command");
    c.string(m, ".manifest", "version");
    c.array(m, ".manifest", "args");
    c.field(m, ".manifest", "inputs");
    c.number(m, ".manifest", "seed");
  }
  if (schema == kSimReportSchema) {
    check_sim(c, doc, "");
  } else if (schema == kCompareSchema) {
    c.field(doc, "", "summary");
    for (const char* m : {"vanilla", "adaptive", "optimal"}) check_sim(c, c.field(doc, "", m), std::string(".") + m);
  } else if (schema == kTptReportSchema) {
    check_tpt(c, doc);
  } else if (schema == kTuneSchema) {
    check_config_doc(c, c.field(doc, "", "config"), ".config");
    c.nonneg(doc, "", "latency_savings_ms");
    c.number(doc, "", "accuracy");
  } else if (schema == kPercentileSchema) {
    c.nonneg(doc, "", "n");
    const auto& ps = c.array(doc, "", "percentiles");
    for (std::size_t i = 0; i < ps.size(); ++i) {
      const std::string p = ".percentiles[" + std::to_string(i) + "]";
      const double q = c.number(ps[i], p, "p");
      if (!(q >= 0.0 && q <= 100.0)) c.fail(p + ".p", "outside [0,100]");
      c.number(ps[i], p, "value");
    }
  } else if (schema == kConfigSchema) {
    check_config_doc(c, doc, "");
  } else if (schema == kProfileSchema) {
    profile_from_json(doc);
  } else {
    throw ValidationError("report: unknown schema '" + schema + "'");
  }
}

std::vector<double> report_latencies(const Json& doc) {
  validate_report(doc);
  std::vector<double> out;
  const auto schema = doc.at("schema").get<std::string>();
  if (schema == kSimReportSchema) {
    for (const auto& r : doc.at("requests"))
      if (!r.at("dropped").get<bool>()) out.push_back(r.at("total_ms").get<double>());
  } else if (schema == kTptReportSchema) {
    for (const auto& t : doc.at("tokens")) out.push_back(t.at("latency_ms").get<double>());
  } else {
    throw ValidationError("report: schema '" + schema + "' carries no latency sample");
  }
  return out;
}

std::string format_number(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

void write_requests_csv(const SimReport& report, std::ostream& out) {
  out << "id,arrival_ms,queue_ms,serve_ms,total_ms,exit_site,correct,slo_violated,dropped,batch\n";
  for (const auto& r : report.requests)
    out << r.id << ',' << format_number(r.arrival_ms) << ',' << format_number(r.queue_ms) << ','
        << format_number(r.serve_ms) << ',' << format_number(r.total_ms) << ',' << r.exit_site.value_or("") << ','
        << int(r.correct) << ',' << int(r.slo_violated) << ',' << int(r.dropped) << ',' << r.batch << '\n';
}

void write_tokens_csv(const TptReport& report, std::ostream& out) {
  out << "seq,idx,latency_ms,exit_site,correct\n";
  for (const auto& t : report.tokens)
    out << t.seq_id << ',' << t.index << ',' << format_number(t.latency_ms) << ',' << t.exit_site.value_or("") << ','
        << int(t.correct) << '\n';
}

void write_cdf_csv(const std::vector<double>& latencies, std::ostream& out) {
  out << "latency_ms,cumulative_fraction\n";
  for (const auto& [v, f] : empirical_cdf(latencies)) out << format_number(v) << ',' << format_number(f) << '\n';
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace eesim
