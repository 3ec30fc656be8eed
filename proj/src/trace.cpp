#include "eesim/trace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "eesim/errors.hpp"

namespace eesim {
namespace {

using nlohmann::json;

constexpr const char* kTraceSchema = "eesim.trace/1";

std::string record_tag(std::int64_t id) { return "record " + std::to_string(id); }

RequestRecord record_from_json(const json& j) {
  RequestRecord r;
  r.id = j.at("id").get<std::int64_t>();
  try {
    r.arrival_ms = j.at("arrival_ms").get<double>();
    r.final_label = j.at("final").get<std::int64_t>();
    for (const auto& [layer, sig] : j.at("ramps").items()) {
      RampSignal s;
      s.err = sig.at("err").get<double>();
      s.label = sig.at("label").get<std::int64_t>();
      r.ramps.emplace(layer, s);
    }
  } catch (const json::exception& e) {
    throw ValidationError(record_tag(r.id) + ": " + e.what());
  }
  return r;
}

json record_to_json(const RequestRecord& r) {
  json ramps = json::object();
  for (const auto& [layer, s] : r.ramps) ramps[layer] = {{"err", s.err}, {"label", s.label}};
  return {{"id", r.id}, {"arrival_ms", r.arrival_ms}, {"ramps", std::move(ramps)}, {"final", r.final_label}};
}

void check_curve(const std::map<LayerId, double>& curve, std::span<const RampSite> sites, const char* what) {
  double prev = 0.0;
  for (const auto& site : sites) {
    auto it = curve.find(site.layer);
    if (it == curve.end())
      throw ParameterError(std::string(what) + " has no value for site '" + site.layer + "'");
    const double p = it->second;
    if (!(p >= 0.0 && p <= 1.0))
      throw ParameterError(std::string(what) + " value for '" + site.layer + "' is outside [0,1]");
    if (p < prev)
      throw ParameterError(std::string(what) + " must be non-decreasing along the model; '" + site.layer +
                           "' drops below an earlier site");
    prev = p;
  }
}

double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

const RampSignal& RequestRecord::signal(const LayerId& layer) const {
  auto it = ramps.find(layer);
  if (it == ramps.end()) throw ValidationError(record_tag(id) + ": missing ramp signal for site '" + layer + "'");
  return it->second;
}

void validate_record(const RequestRecord& record, std::span<const RampSite> sites) {
  for (const auto& site : sites) {
    auto it = record.ramps.find(site.layer);
    if (it == record.ramps.end())
      throw ValidationError(record_tag(record.id) + ": missing ramp signal for site '" + site.layer + "'");
  }
  for (const auto& [layer, s] : record.ramps) {
    if (!(s.err >= 0.0 && s.err <= 1.0)) {
      std::ostringstream msg;
      msg << record_tag(record.id) << ": ramps." << layer << ".err = " << s.err << " is outside [0,1]";
      throw ValidationError(msg.str());
    }
  }
  if (!std::isfinite(record.arrival_ms))
    throw ValidationError(record_tag(record.id) + ": arrival_ms is not finite");
}

void validate_workload(const Workload& workload, std::span<const RampSite> sites) {
  std::set<std::int64_t> ids;
  double last_arrival = -std::numeric_limits<double>::infinity();
  for (const auto& r : workload.records) {
    validate_record(r, sites);
    if (!ids.insert(r.id).second) throw ValidationError(record_tag(r.id) + ": duplicate id");
    if (r.arrival_ms < last_arrival) {
      std::ostringstream msg;
      msg << record_tag(r.id) << ": arrival_ms " << r.arrival_ms << " precedes previous arrival " << last_arrival;
      throw ValidationError(msg.str());
    }
    last_arrival = r.arrival_ms;
  }
}

Workload parse_workload(std::istream& in, const ModelProfile& profile, const std::string& origin) {
  Workload w;
  w.profile_ref = profile.name();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ValidationError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (j.contains("schema")) {
      if (j.at("schema") != kTraceSchema)
        throw ValidationError(origin + ": unsupported trace schema " + j.at("schema").dump());
      if (j.contains("profile")) w.profile_ref = j.at("profile").get<std::string>();
      continue;
    }
    if (!j.contains("id")) throw ValidationError(origin + ":" + std::to_string(lineno) + ": record has no id");
    w.records.push_back(record_from_json(j));
  }
  validate_workload(w, find_feasible_sites(profile));
  return w;
}

Workload load_workload(const std::filesystem::path& path, const ModelProfile& profile) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trace '" + path.string() + "'");
  return parse_workload(in, profile, path.string());
}

void write_workload(const Workload& workload, std::ostream& out) {
  out << json{{"schema", kTraceSchema}, {"profile", workload.profile_ref}}.dump() << '\n';
  for (const auto& r : workload.records) out << record_to_json(r).dump() << '\n';
}

void save_workload(const Workload& workload, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write trace '" + path.string() + "'");
  write_workload(workload, out);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::map<LayerId, double> linear_agreement(std::span<const RampSite> sites, double lo, double hi) {
  std::map<LayerId, double> curve;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    const double w = sites.size() == 1 ? 1.0 : static_cast<double>(i) / static_cast<double>(sites.size() - 1);
    curve[sites[i].layer] = lo + w * (hi - lo);
  }
  return curve;
}

SyntheticWorkload synthesize_workload(const ModelProfile& profile, const SynthesisParams& params) {
  const auto sites = find_feasible_sites(profile);
  check_curve(params.agreement_curve, sites, "agreement curve");
  if (params.drift) check_curve(params.drift->agreement_after, sites, "post-drift agreement curve");
  if (!(params.continuity >= 0.0 && params.continuity <= 1.0))
    throw ParameterError("continuity must lie in [0,1]");
  if (params.num_classes < 2) throw ParameterError("need at least two classes");
  if (!(params.mean_interarrival_ms >= 0.0)) throw ParameterError("mean inter-arrival must be >= 0");

  std::mt19937_64 rng(params.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<std::int64_t> klass(0, params.num_classes - 1);
  std::uniform_int_distribution<std::int64_t> wrong_offset(1, params.num_classes - 1);
  std::exponential_distribution<double> gap(params.mean_interarrival_ms > 0 ? 1.0 / params.mean_interarrival_ms : 1.0);

  const double rho = params.continuity;
  const double innovation = std::sqrt(std::max(0.0, 1.0 - rho * rho));

  SyntheticWorkload out;
  out.workload.profile_ref = profile.name();
  out.workload.records.reserve(params.n);
  out.difficulty.reserve(params.n);

  double z = gauss(rng);
  double clock = 0.0;
  for (std::size_t t = 0; t < params.n; ++t) {
    if (t > 0) z = rho * z + innovation * gauss(rng);
    // Uniform marginal keeps P(agree at j) equal to the curve value.
    const double difficulty = standard_normal_cdf(z);
    const bool drifted = params.drift && t >= params.drift->at;
    const auto& agreement = drifted ? params.drift->agreement_after : params.agreement_curve;

    RequestRecord r;
    r.id = static_cast<std::int64_t>(t);
    if (t > 0) clock += params.poisson_arrivals ? (params.mean_interarrival_ms > 0 ? gap(rng) : 0.0)
                                                : params.mean_interarrival_ms;
    r.arrival_ms = clock;
    r.final_label = klass(rng);
    for (const auto& site : sites) {
      const double p = agreement.at(site.layer);
      const double calibrated = params.agreement_curve.at(site.layer);
      const bool agree = p >= 1.0 || difficulty < p;
      const std::int64_t offset = wrong_offset(rng);
      const double noise = gauss(rng);
      RampSignal s;
      s.label = agree ? r.final_label : (r.final_label + offset) % params.num_classes;
      const double margin = calibrated - difficulty;
      const double base = 0.5 - 0.5 * std::tanh(params.score_sharpness * margin);
      s.err = std::clamp(base + params.score_noise * noise, 0.0, 1.0);
      r.ramps.emplace(site.layer, s);
    }
    out.workload.records.push_back(std::move(r));
    out.difficulty.push_back(difficulty);
  }
  return out;
}

}  // namespace eesim
