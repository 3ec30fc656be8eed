#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <openssl/evp.h>

#include "eesim/errors.hpp"
#include "eesim/generative_sim.hpp"
#include "eesim/report_io.hpp"
#include "eesim/serving_sim.hpp"
#include "eesim/stats.hpp"
#include "eesim/threshold_tuner.hpp"
#include "eesim/trace.hpp"

namespace eesim::cli {
namespace {

const std::vector<std::string> kOutputFlags = {"--out", "--csv", "--cdf"};

struct Context {
  std::string command;
  std::vector<std::string> args;  // everything after the command, outputs removed
  std::vector<std::string> inputs;
  std::uint64_t seed = 1;
  std::ostream& out;
  std::ostream& err;
};

Json manifest(const Context& ctx) {
  Json inputs = Json::object();
  for (const auto& p : ctx.inputs) inputs[p] = sha256_file(p);
  return {{"tool", "eesim"},
          {"version", kVersion},
          {"command", ctx.command},
          {"args", ctx.args},
          {"inputs", std::move(inputs)},
          {"seed", ctx.seed}};
}

Json with_manifest(const Json& doc, const Context& ctx) {
  Json out{{"schema", doc.at("schema")}, {"manifest", manifest(ctx)}};
  for (const auto& [k, v] : doc.items())
    if (k != "schema") out[k] = v;
  return out;
}

void emit_json(const Json& doc, const std::string& path, std::ostream& out) {
  validate_report(doc);
  const std::string text = doc.dump(2) + "\n";
  if (path.empty())
    out << text;
  else
    write_text_file(path, text);
}

std::vector<double> parse_number_list(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || ptr != item.data() + item.size())
      throw ParameterError(flag + ": '" + item + "' is not a number");
    out.push_back(v);
  }
  if (out.empty()) throw ParameterError(flag + ": expected a comma-separated list");
  return out;
}

BatchCurve parse_penalty(const std::string& text) {
  std::map<int, double> pts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    int b = 0;
    double m = 0.0;
    bool ok = colon != std::string::npos;
    if (ok) {
      const auto r1 = std::from_chars(item.data(), item.data() + colon, b);
      const auto r2 = std::from_chars(item.data() + colon + 1, item.data() + item.size(), m);
      ok = r1.ec == std::errc() && r1.ptr == item.data() + colon && r2.ec == std::errc() &&
           r2.ptr == item.data() + item.size() && b >= 1;
    }
    if (!ok) throw ParameterError("--penalty: '" + item + "' is not batch:multiplier");
    pts[b] = m;
  }
  if (pts.empty()) throw ParameterError("--penalty: expected batch:multiplier pairs");
  return BatchCurve(std::move(pts));
}

struct TunerFlags {
  double acc_loss = 0.01;
  double init_step = 0.1;
  double min_step = 0.01;
  std::size_t window = 16;
  std::size_t history = 128;
  int avg_k = 1;

  void add(CLI::App* app) {
    app->add_option("--acc-constraint", acc_loss, "Tolerated accuracy loss (0.01 = 1%)")->capture_default_str();
    app->add_option("--init-step", init_step, "Initial threshold step")->capture_default_str();
    app->add_option("--min-step", min_step, "Minimum threshold step")->capture_default_str();
    app->add_option("--acc-window", window, "Accuracy monitor window")->capture_default_str();
    app->add_option("--history", history, "Records used for tuning")->capture_default_str();
    app->add_option("--avg-k", avg_k, "Average error scores over the last k ramps")->capture_default_str();
  }
  TunerParams params() const {
    TunerParams t;
    t.acc_loss_budget = acc_loss;
    t.init_step = init_step;
    t.min_step = min_step;
    t.accuracy_window = window;
    t.tuning_history = history;
    t.avg_k = avg_k;
    t.validate();
    return t;
  }
};

struct ServeFlags {
  std::string profile, trace, config, out, csv;
  double slo = 100.0;
  int max_batch = 16;
  double budget = 0.02;
  std::size_t ramp_period = 128;
  bool no_adapt = false, no_ramp_adjust = false, drop_late = false, initial_tune = false;
  std::string mode = "adaptive";
  TunerFlags tuner;

  void add(CLI::App* app, bool with_mode) {
    app->add_option("--profile", profile, "Model profile JSON")->required();
    app->add_option("--trace", trace, "Request trace JSONL")->required();
    app->add_option("--slo", slo, "Latency SLO in ms")->capture_default_str();
    app->add_option("--max-batch", max_batch, "Maximum batch size")->capture_default_str();
    app->add_option("--budget", budget, "Ramp budget as a fraction of model latency")->capture_default_str();
    app->add_option("--ramp-period", ramp_period, "Requests between ramp adjustments")->capture_default_str();
    app->add_option("--config", config, "Starting ramp configuration JSON");
    app->add_flag("--no-adapt", no_adapt, "Disable all runtime adaptation");
    app->add_flag("--no-ramp-adjust", no_ramp_adjust, "Keep the ramp set fixed");
    app->add_flag("--drop-late", drop_late, "Drop requests that already missed the SLO");
    app->add_flag("--initial-tune", initial_tune, "Tune thresholds on the first history records before serving");
    if (with_mode) app->add_option("--mode", mode, "vanilla | adaptive | optimal")->capture_default_str();
    app->add_option("--out", out, "Report JSON (stdout when omitted)");
    tuner.add(app);
  }
  ServingParams params(const ModelProfile& profile) const {
    ServingParams p;
    p.slo_ms = slo;
    p.max_batch = max_batch;
    p.acc_constraint = 1.0 - tuner.acc_loss;
    p.budget = RampBudget{budget};
    p.tuner = tuner.params();
    p.ramp_period = ramp_period;
    p.adaptation_enabled = !no_adapt;
    p.ramp_adjust_enabled = !no_ramp_adjust;
    p.drop_late = drop_late;
    p.mode = parse_mode(mode);
    p.initial_tune = initial_tune;
    if (!config.empty()) p.initial_config = config_from_json(read_json_file(config), profile);
    p.validate();
    return p;
  }
};

int cmd_simulate(Context& ctx, const ServeFlags& f) {
  ctx.inputs = {f.profile, f.trace};
  if (!f.config.empty()) ctx.inputs.push_back(f.config);
  const auto profile = load_profile(f.profile);
  const auto workload = load_workload(f.trace, profile);
  const auto report = run(workload, profile, f.params(profile));
  emit_json(with_manifest(to_json(report), ctx), f.out, ctx.out);
  if (!f.csv.empty()) {
    std::ostringstream csv;
    write_requests_csv(report, csv);
    write_text_file(f.csv, csv.str());
  }
  return kExitOk;
}

int cmd_compare(Context& ctx, const ServeFlags& f) {
  ctx.inputs = {f.profile, f.trace};
  if (!f.config.empty()) ctx.inputs.push_back(f.config);
  const auto profile = load_profile(f.profile);
  const auto workload = load_workload(f.trace, profile);
  const auto report = compare_baselines(workload, profile, f.params(profile));
  emit_json(with_manifest(to_json(report), ctx), f.out, ctx.out);
  if (!f.out.empty()) {
    ctx.out << "mode      p25_ms      p50_ms      p95_ms      accuracy\n";
    const std::pair<const char*, const SimReport*> rows[] = {
        {"vanilla", &report.vanilla}, {"adaptive", &report.adaptive}, {"optimal", &report.optimal}};
    for (const auto& [name, r] : rows)
      ctx.out << std::left << std::setw(10) << name << std::right << std::fixed << std::setprecision(3)
              << std::setw(10) << r->latency.p25 << "  " << std::setw(10) << r->latency.p50 << "  " << std::setw(10)
              << r->latency.p95 << "  " << std::setw(10) << std::setprecision(4) << r->accuracy << '\n';
  }
  return kExitOk;
}

struct GenFlags {
  std::string profile, trace, config, out, csv;
  int flush_cap = 4;
  std::string penalty = "1:1.0,4:1.0";
  std::size_t max_ramps = 1;
  std::optional<double> threshold;
  bool adapt = false;
  std::size_t ramp_period = 128;
  TunerFlags tuner;

  void add(CLI::App* app) {
    app->add_option("--profile", profile, "Decode-phase profile JSON")->required();
    app->add_option("--trace", trace, "Token trace JSONL")->required();
    app->add_option("--flush-cap", flush_cap, "Deferred tokens per ramp that force a flush")->capture_default_str();
    app->add_option("--penalty", penalty, "Batch penalty table, batch:multiplier,...")->capture_default_str();
    app->add_option("--max-ramps", max_ramps, "Active ramps in the default configuration")->capture_default_str();
    app->add_option("--threshold", threshold, "Fixed threshold for the default configuration");
    app->add_option("--config", config, "Starting ramp configuration JSON");
    app->add_option("--ramp-period", ramp_period, "Feedback tokens between ramp adjustments")->capture_default_str();
    app->add_flag("--adapt", adapt, "Tune from truncated token feedback between sequences");
    app->add_option("--out", out, "TPT report JSON (stdout when omitted)");
    tuner.add(app);
  }
};

int cmd_simulate_gen(Context& ctx, const GenFlags& f) {
  ctx.inputs = {f.profile, f.trace};
  if (!f.config.empty()) ctx.inputs.push_back(f.config);
  const auto profile = load_profile(f.profile);
  const auto sequences = load_token_trace(f.trace, profile);
  const auto sites = find_feasible_sites(profile);

  GenerativeParams gp;
  gp.flush_cap = f.flush_cap;
  gp.batch_penalty = parse_penalty(f.penalty);
  gp.avg_k = f.tuner.avg_k;
  gp.adaptation_enabled = f.adapt;
  gp.control.tuner = f.tuner.params();
  gp.control.acc_constraint = 1.0 - f.tuner.acc_loss;
  gp.control.ramp_period = f.ramp_period;
  gp.control.budget = RampBudget{1.0};
  gp.validate();

  EEConfig cfg;
  if (!f.config.empty()) {
    cfg = config_from_json(read_json_file(f.config), profile);
  } else {
    if (f.max_ramps < 1) throw ParameterError("--max-ramps must be >= 1");
    if (sites.empty()) throw DomainError("profile has no feasible ramp sites");
    for (auto i : even_spacing(sites.size(), std::min(f.max_ramps, sites.size()))) cfg.ramps.push_back({sites[i], 0.0});
    if (f.threshold) {
      for (auto& r : cfg.ramps) r.threshold = *f.threshold;
      check_config(cfg);
    } else {
      std::vector<RequestRecord> history;
      for (const auto& s : sequences)
        for (const auto& t : s.tokens)
          if (history.size() < gp.control.tuner.tuning_history) history.push_back(t.as_request());
      if (!history.empty()) {
        const auto tuned = tune(history, cfg.sites(), gp.control.tuner, profile);
        for (std::size_t i = 0; i < cfg.ramps.size(); ++i) cfg.ramps[i].threshold = tuned.thresholds[i];
      }
    }
  }

  const auto report = run_generative(sequences, profile, cfg, gp);
  emit_json(with_manifest(to_json(report), ctx), f.out, ctx.out);
  if (!f.csv.empty()) {
    std::ostringstream csv;
    write_tokens_csv(report, csv);
    write_text_file(f.csv, csv.str());
  }
  return kExitOk;
}

struct GenTraceFlags {
  std::string profile, out;
  std::size_t n = 1000;
  double continuity = 0.9;
  double agree_lo = 0.4, agree_hi = 0.95;
  double interarrival = 10.0;
  bool uniform_arrivals = false;
  int classes = 10;
  double sharpness = 6.0, noise = 0.05;
  std::optional<std::size_t> drift_at;
  double drift_lo = 0.1, drift_hi = 0.6;
  bool tokens = false;
  std::size_t sequences = 50, seq_len = 32;

  void add(CLI::App* app) {
    app->add_option("--profile", profile, "Model profile JSON")->required();
    app->add_option("--out", out, "Trace JSONL")->required();
    app->add_option("--n", n, "Records to generate")->capture_default_str();
    app->add_option("--continuity", continuity, "Lag-1 correlation of request difficulty")->capture_default_str();
    app->add_option("--agree-lo", agree_lo, "Agreement rate at the first ramp site")->capture_default_str();
    app->add_option("--agree-hi", agree_hi, "Agreement rate at the last ramp site")->capture_default_str();
    app->add_option("--interarrival", interarrival, "Mean inter-arrival time in ms")->capture_default_str();
    app->add_flag("--uniform-arrivals", uniform_arrivals, "Fixed spacing instead of Poisson arrivals");
    app->add_option("--classes", classes, "Label alphabet size")->capture_default_str();
    app->add_option("--sharpness", sharpness, "Error score sharpness")->capture_default_str();
    app->add_option("--noise", noise, "Error score noise")->capture_default_str();
    app->add_option("--drift-at", drift_at, "Record index where agreement shifts");
    app->add_option("--drift-lo", drift_lo, "Agreement at the first site after the shift")->capture_default_str();
    app->add_option("--drift-hi", drift_hi, "Agreement at the last site after the shift")->capture_default_str();
    app->add_flag("--tokens", tokens, "Emit a token trace instead of a request trace");
    app->add_option("--sequences", sequences, "Token sequences (with --tokens)")->capture_default_str();
    app->add_option("--seq-len", seq_len, "Tokens per sequence (with --tokens)")->capture_default_str();
  }
};

std::string add_header_manifest(const std::string& text, const Context& ctx) {
  const auto eol = text.find('\n');
  auto header = nlohmann::json::parse(text.substr(0, eol));
  header["manifest"] = nlohmann::json::parse(manifest(ctx).dump());
  return header.dump() + text.substr(eol);
}

int cmd_gen_trace(Context& ctx, const GenTraceFlags& f) {
  ctx.inputs = {f.profile};
  const auto profile = load_profile(f.profile);
  const auto sites = find_feasible_sites(profile);
  SynthesisParams sp;
  sp.n = f.n;
  sp.continuity = f.continuity;
  sp.agreement_curve = linear_agreement(sites, f.agree_lo, f.agree_hi);
  sp.seed = ctx.seed;
  sp.mean_interarrival_ms = f.interarrival;
  sp.poisson_arrivals = !f.uniform_arrivals;
  sp.num_classes = f.classes;
  sp.score_sharpness = f.sharpness;
  sp.score_noise = f.noise;
  if (f.drift_at) sp.drift = DriftSpec{*f.drift_at, linear_agreement(sites, f.drift_lo, f.drift_hi)};

  std::ostringstream text;
  std::size_t count = 0;
  if (f.tokens) {
    const auto seqs = synthesize_token_trace(profile, f.sequences, f.seq_len, sp);
    write_token_trace(seqs, profile.name(), text);
    count = f.sequences * f.seq_len;
  } else {
    const auto synth = synthesize_workload(profile, sp);
    write_workload(synth.workload, text);
    count = synth.workload.records.size();
  }
  write_text_file(f.out, add_header_manifest(text.str(), ctx));
  ctx.out << "wrote " << count << (f.tokens ? " tokens" : " records") << " to " << f.out << '\n';
  return kExitOk;
}

struct ValidateFlags {
  std::string profile, trace, tokens, report;
  void add(CLI::App* app) {
    app->add_option("--profile", profile, "Model profile JSON");
    app->add_option("--trace", trace, "Request trace JSONL (needs --profile)");
    app->add_option("--tokens", tokens, "Token trace JSONL (needs --profile)");
    app->add_option("--report", report, "Any report JSON written by this tool");
  }
};

int cmd_validate(Context& ctx, const ValidateFlags& f) {
  if (f.profile.empty() && f.report.empty()) throw ParameterError("validate needs --profile or --report");
  if ((!f.trace.empty() || !f.tokens.empty()) && f.profile.empty())
    throw ParameterError("--trace and --tokens need --profile");
  if (!f.profile.empty()) {
    const auto profile = load_profile(f.profile);
    ctx.out << "profile ok: " << profile.size() << " layers, " << find_feasible_sites(profile).size()
            << " ramp sites\n";
    if (!f.trace.empty()) {
      const auto w = load_workload(f.trace, profile);
      ctx.out << "trace ok: " << w.records.size() << " records\n";
    }
    if (!f.tokens.empty()) {
      const auto seqs = load_token_trace(f.tokens, profile);
      std::size_t n = 0;
      for (const auto& s : seqs) n += s.tokens.size();
      ctx.out << "token trace ok: " << seqs.size() << " sequences, " << n << " tokens\n";
    }
  }
  if (!f.report.empty()) {
    const auto doc = read_json_file(f.report);
    validate_report(doc);
    ctx.out << "report ok: " << doc.at("schema").get<std::string>() << '\n';
  }
  return kExitOk;
}

struct ReportFlags {
  std::string in, percentiles = "25,50,95", cdf, out;
  void add(CLI::App* app) {
    app->add_option("--in", in, "Simulation or TPT report JSON")->required();
    app->add_option("--percentiles", percentiles, "Comma-separated percentiles")->capture_default_str();
    app->add_option("--cdf", cdf, "Write a latency CDF CSV");
    app->add_option("--out", out, "Percentile summary JSON");
  }
};

int cmd_report(Context& ctx, const ReportFlags& f) {
  ctx.inputs = {f.in};
  const auto doc = read_json_file(f.in);
  const auto lat = report_latencies(doc);
  const auto ps = parse_number_list(f.percentiles, "--percentiles");
  Json rows = Json::array();
  if (!lat.empty()) {
    const auto vals = percentiles(lat, ps);
    for (std::size_t i = 0; i < ps.size(); ++i) {
      rows.push_back({{"p", ps[i]}, {"value", vals[i]}});
      ctx.out << 'p' << format_number(ps[i]) << ' ' << format_number(vals[i]) << '\n';
    }
  }
  if (!f.out.empty()) {
    Json summary{{"schema", kPercentileSchema},
                 {"source_schema", doc.at("schema")},
                 {"n", lat.size()},
                 {"percentiles", std::move(rows)}};
    emit_json(with_manifest(summary, ctx), f.out, ctx.out);
  }
  if (!f.cdf.empty()) {
    std::ostringstream csv;
    write_cdf_csv(lat, csv);
    write_text_file(f.cdf, csv.str());
  }
  return kExitOk;
}

struct TuneFlags {
  std::string profile, trace, ramps, method = "hill", out;
  std::size_t offset = 0;
  double step = 0.01;
  double grid_cap = static_cast<double>(kDefaultGridCap);
  TunerFlags tuner;
  void add(CLI::App* app) {
    app->add_option("--profile", profile, "Model profile JSON")->required();
    app->add_option("--trace", trace, "Request trace JSONL")->required();
    app->add_option("--offset", offset, "First record of the tuning window")->capture_default_str();
    app->add_option("--ramps", ramps, "Comma-separated ramp sites (default: initial placement)");
    app->add_option("--method", method, "hill | grid")->capture_default_str();
    app->add_option("--step", step, "Grid step")->capture_default_str();
    app->add_option("--grid-cap", grid_cap, "Refuse grids with more points")->capture_default_str();
    app->add_option("--out", out, "Tuning result JSON (stdout when omitted)");
    tuner.add(app);
  }
};

int cmd_tune(Context& ctx, const TuneFlags& f) {
  ctx.inputs = {f.profile, f.trace};
  const auto profile = load_profile(f.profile);
  const auto workload = load_workload(f.trace, profile);
  const auto sites = find_feasible_sites(profile);
  const auto tp = f.tuner.params();

  std::vector<RampSite> ramps;
  if (f.ramps.empty()) {
    ramps = initial_placement(sites, RampBudget{}, profile).sites();
  } else {
    std::stringstream ss(f.ramps);
    std::string layer;
    while (std::getline(ss, layer, ',')) {
      const auto i = find_site(sites, layer);
      if (i == sites.size()) throw ValidationError("'" + layer + "' is not a feasible ramp site");
      ramps.push_back(sites[i]);
    }
    std::sort(ramps.begin(), ramps.end(), [](const RampSite& a, const RampSite& b) { return a.topo_index < b.topo_index; });
  }
  if (f.offset >= workload.records.size()) throw DomainError("--offset is past the end of the trace");
  const auto end = std::min(workload.records.size(), f.offset + tp.tuning_history);
  std::span<const RequestRecord> window(workload.records.data() + f.offset, end - f.offset);

  TuneResult res;
  if (f.method == "hill") {
    res = tune(window, ramps, tp, profile);
  } else if (f.method == "grid") {
    if (!(f.grid_cap >= 1.0)) throw ParameterError("--grid-cap must be >= 1");
    res = grid_oracle(window, ramps, tp.acc_loss_budget, f.step, profile, static_cast<std::size_t>(f.grid_cap),
                      tp.avg_k);
  } else {
    throw ParameterError("--method must be hill or grid");
  }
  EEConfig cfg;
  for (std::size_t i = 0; i < ramps.size(); ++i) cfg.ramps.push_back({ramps[i], res.thresholds[i]});
  Json doc{{"schema", kTuneSchema},
           {"method", f.method},
           {"records", window.size()},
           {"config", config_to_json(cfg)},
           {"latency_savings_ms", res.latency_savings_ms},
           {"accuracy", res.accuracy},
           {"rounds", res.rounds.size()}};
  emit_json(with_manifest(doc, ctx), f.out, ctx.out);
  return kExitOk;
}

Json read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Json doc = Json::parse(text, nullptr, false);
  if (doc.is_discarded()) doc = Json::parse(text.substr(0, text.find('\n')), nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("manifest"))
    throw ValidationError(path + ": no manifest found");
  return doc.at("manifest");
}

struct ReplayFlags {
  std::string source, out, csv, cdf;
  bool ignore_digests = false;
  void add(CLI::App* app) {
    app->add_option("source", source, "Report or trace carrying a manifest")->required();
    app->add_option("--out", out, "Output path for the re-run");
    app->add_option("--csv", csv, "CSV output path for the re-run");
    app->add_option("--cdf", cdf, "CDF output path for the re-run");
    app->add_flag("--ignore-digests", ignore_digests, "Re-run even if inputs changed");
  }
};

int cmd_replay(Context& ctx, const ReplayFlags& f) {
  const auto m = read_manifest(f.source);
  std::vector<std::string> args;
  try {
    if (m.at("version").get<std::string>() != kVersion)
      throw ValidationError("manifest was written by version " + m.at("version").get<std::string>());
    if (!f.ignore_digests)
      for (const auto& [path, digest] : m.at("inputs").items())
        if (sha256_file(path) != digest.get<std::string>())
          throw ValidationError("input '" + path + "' changed since the manifest was written");
    args.push_back(m.at("command").get<std::string>());
    for (const auto& a : m.at("args")) args.push_back(a.get<std::string>());
  } catch (const Json::exception& e) {
    throw ValidationError(f.source + ": malformed manifest: " + e.what());
  }
  if (args.front() == "replay") throw ValidationError("manifest names the replay command");
  if (!f.out.empty()) args.insert(args.end(), {"--out", f.out});
  if (!f.csv.empty()) args.insert(args.end(), {"--csv", f.csv});
  if (!f.cdf.empty()) args.insert(args.end(), {"--cdf", f.cdf});
  return run(args, ctx.out, ctx.err);
}

std::vector<std::string> strip_outputs(const std::vector<std::string>& args) {
  std::vector<std::string> kept;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const auto& a = args[i];
    bool dropped = false;
    for (const auto& flag : kOutputFlags) {
      if (a == flag) {
        ++i;
        dropped = true;
      } else if (a.rfind(flag + "=", 0) == 0) {
        dropped = true;
      }
    }
    if (!dropped) kept.push_back(a);
  }
  return kept;
}

}  // namespace

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  EVP_MD_CTX* md = EVP_MD_CTX_new();
  EVP_DigestInit_ex(md, EVP_sha256(), nullptr);
  char buf[1 << 15];
  while (in) {
    in.read(buf, sizeof buf);
    EVP_DigestUpdate(md, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(md, digest, &len);
  EVP_MD_CTX_free(md);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return hex.str();
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Early-exit serving simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  std::uint64_t seed = 1;

  auto* sim = app.add_subcommand("simulate", "Serve a request trace and report latency and accuracy");
  ServeFlags sim_f;
  sim_f.add(sim, true);
  sim->add_option("--csv", sim_f.csv, "Per-request CSV");

  auto* cmp = app.add_subcommand("compare", "Run vanilla, adaptive and optimal serving on one trace");
  ServeFlags cmp_f;
  cmp_f.add(cmp, false);

  auto* gen = app.add_subcommand("simulate-gen", "Token-level simulation of a generative trace");
  GenFlags gen_f;
  gen_f.add(gen);
  gen->add_option("--csv", gen_f.csv, "Per-token CSV");

  auto* gt = app.add_subcommand("gen-trace", "Synthesize a request or token trace");
  GenTraceFlags gt_f;
  gt_f.add(gt);

  auto* val = app.add_subcommand("validate", "Check a profile, trace or report");
  ValidateFlags val_f;
  val_f.add(val);

  auto* rep = app.add_subcommand("report", "Percentiles and CDF from a report");
  ReportFlags rep_f;
  rep_f.add(rep);

  auto* tn = app.add_subcommand("tune", "Tune thresholds on a trace window");
  TuneFlags tn_f;
  tn_f.add(tn);

  auto* rp = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  ReplayFlags rp_f;
  rp_f.add(rp);

  for (auto* sub : {sim, cmp, gen, gt, val, rep, tn}) sub->add_option("--seed", seed, "Random seed")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  Context ctx{args.front(), strip_outputs({args.begin() + 1, args.end()}), {}, seed, out, err};
  try {
    if (*sim) return cmd_simulate(ctx, sim_f);
    if (*cmp) return cmd_compare(ctx, cmp_f);
    if (*gen) return cmd_simulate_gen(ctx, gen_f);
    if (*gt) return cmd_gen_trace(ctx, gt_f);
    if (*val) return cmd_validate(ctx, val_f);
    if (*rep) return cmd_report(ctx, rep_f);
    if (*tn) return cmd_tune(ctx, tn_f);
    if (*rp) return cmd_replay(ctx, rp_f);
  } catch (const ParameterError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ExplosionCapError& e) {
    err << "error: " << e.what() << '\n';
    return kExitExplosionCap;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitUsage;
}

}  // namespace eesim::cli
