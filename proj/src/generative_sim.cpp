#include "eesim/generative_sim.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "eesim/errors.hpp"

namespace eesim {
namespace {

using nlohmann::json;

constexpr const char* kTokenSchema = "eesim.tokens/1";

}  // namespace

RequestRecord TokenRecord::as_request() const {
  RequestRecord r;
  r.id = seq_id * 1'000'000 + index;
  r.ramps = ramps;
  r.final_label = final_token;
  return r;
}

std::vector<TokenSequence> group_tokens(std::vector<TokenRecord> records, std::span<const RampSite> sites) {
  std::vector<TokenSequence> seqs;
  std::map<std::int64_t, std::size_t> slot;
  for (auto& t : records) {
    for (const auto& site : sites)
      if (!t.ramps.count(site.layer))
        throw ValidationError("sequence " + std::to_string(t.seq_id) + " token " + std::to_string(t.index) +
                              ": missing ramp signal for site '" + site.layer + "'");
    for (const auto& [layer, s] : t.ramps)
      if (!(s.err >= 0.0 && s.err <= 1.0))
        throw ValidationError("sequence " + std::to_string(t.seq_id) + " token " + std::to_string(t.index) +
                              ": ramps." + layer + ".err is outside [0,1]");
    auto [it, fresh] = slot.emplace(t.seq_id, seqs.size());
    if (fresh) seqs.push_back({t.seq_id, {}});
    seqs[it->second].tokens.push_back(std::move(t));
  }
  for (auto& s : seqs) {
    std::stable_sort(s.tokens.begin(), s.tokens.end(),
                     [](const TokenRecord& a, const TokenRecord& b) { return a.index < b.index; });
    for (std::size_t i = 0; i < s.tokens.size(); ++i)
      if (s.tokens[i].index != static_cast<std::int64_t>(i))
        throw ValidationError("sequence " + std::to_string(s.seq_id) + ": token indices are not contiguous from 0");
  }
  return seqs;
}

std::vector<TokenSequence> parse_token_trace(std::istream& in, const ModelProfile& profile,
                                             const std::string& origin) {
  std::vector<TokenRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = origin + ":" + std::to_string(lineno);
    try {
      const json j = json::parse(line);
      if (j.contains("schema")) {
        if (j.at("schema") != kTokenSchema)
          throw ValidationError(where + ": unsupported token trace schema " + j.at("schema").dump());
        continue;
      }
      TokenRecord t;
      t.seq_id = j.at("seq").get<std::int64_t>();
      t.index = j.at("idx").get<std::int64_t>();
      t.final_token = j.at("final").get<std::int64_t>();
      for (const auto& [layer, sig] : j.at("ramps").items())
        t.ramps.emplace(layer, RampSignal{sig.at("err").get<double>(), sig.at("label").get<std::int64_t>()});
      records.push_back(std::move(t));
    } catch (const json::exception& e) {
      throw ValidationError(where + ": " + e.what());
    }
  }
  return group_tokens(std::move(records), find_feasible_sites(profile));
}

std::vector<TokenSequence> load_token_trace(const std::filesystem::path& path, const ModelProfile& profile) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open token trace '" + path.string() + "'");
  return parse_token_trace(in, profile, path.string());
}

void write_token_trace(std::span<const TokenSequence> sequences, const std::string& profile_ref, std::ostream& out) {
  out << json{{"schema", kTokenSchema}, {"profile", profile_ref}}.dump() << '\n';
  for (const auto& s : sequences)
    for (const auto& t : s.tokens) {
      json ramps = json::object();
      for (const auto& [layer, sig] : t.ramps) ramps[layer] = {{"err", sig.err}, {"label", sig.label}};
      out << json{{"seq", t.seq_id}, {"idx", t.index}, {"ramps", std::move(ramps)}, {"final", t.final_token}}.dump()
          << '\n';
    }
}

std::vector<TokenSequence> synthesize_token_trace(const ModelProfile& profile, std::size_t num_sequences,
                                                  std::size_t seq_len, SynthesisParams params) {
  if (seq_len == 0) throw ParameterError("sequence length must be >= 1");
  params.n = num_sequences * seq_len;
  auto synth = synthesize_workload(profile, params);
  std::vector<TokenSequence> seqs(num_sequences);
  for (std::size_t t = 0; t < params.n; ++t) {
    auto& rec = synth.workload.records[t];
    const std::size_t s = t / seq_len;
    seqs[s].seq_id = static_cast<std::int64_t>(s);
    TokenRecord tok;
    tok.seq_id = static_cast<std::int64_t>(s);
    tok.index = static_cast<std::int64_t>(t % seq_len);
    tok.ramps = std::move(rec.ramps);
    tok.final_token = rec.final_label;
    seqs[s].tokens.push_back(std::move(tok));
  }
  return seqs;
}

void GenerativeParams::validate() const {
  if (flush_cap < 1) throw ParameterError("flush cap must be >= 1");
  if (batch_penalty.empty()) throw ParameterError("batch penalty table is empty");
  for (const auto& [b, m] : batch_penalty.points())
    if (!(m > 0.0)) throw ParameterError("batch penalty at " + std::to_string(b) + " must be positive");
  if (avg_k < 1) throw ParameterError("score averaging depth must be >= 1");
  if (adaptation_enabled) control.tuner.validate();
}

std::string to_string(DeferredKind kind) {
  switch (kind) {
    case DeferredKind::carry: return "carry";
    case DeferredKind::flush: return "flush";
    case DeferredKind::final_flush: return "final_flush";
  }
  return "carry";
}

std::vector<TokenFeedback> token_feedback(const TokenSequence& sequence, std::span<const ExitOutcome> outcomes) {
  if (outcomes.size() != sequence.tokens.size())
    throw DomainError("token feedback needs one outcome per token");
  std::vector<TokenFeedback> out;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& tok = sequence.tokens[i];
    TokenFeedback fb;
    fb.seq_id = tok.seq_id;
    fb.index = tok.index;
    fb.exit_site = outcomes[i].exit_site;
    fb.released = outcomes[i].released_label;
    fb.final_token = tok.final_token;
    fb.correct = fb.released == fb.final_token;
    out.push_back(fb);
    if (!fb.correct) break;
  }
  return out;
}

TptReport run_generative(std::span<const TokenSequence> sequences, const ModelProfile& profile,
                         const EEConfig& config, const GenerativeParams& params) {
  params.validate();
  check_config(config);
  const auto sites = find_feasible_sites(profile);
  for (const auto& r : config.ramps)
    if (find_site(sites, r.site.layer) == sites.size())
      throw ValidationError("configured ramp '" + r.site.layer + "' is not a feasible site of the profile");

  auto control = params.control;
  control.adaptation_enabled = params.adaptation_enabled;
  Controller controller(profile, sites, config, control);

  TptReport rep;
  const double full = profile.total_ms(1);
  rep.vanilla_tpt_ms = full;
  double clock = 0.0;
  auto penalty = [&](int b) { return params.batch_penalty.at(b); };

  for (const auto& seq : sequences) {
    for (const auto& tok : seq.tokens)
      for (const auto& site : sites)
        if (!tok.ramps.count(site.layer))
          throw ValidationError("sequence " + std::to_string(seq.seq_id) + " token " + std::to_string(tok.index) +
                                ": missing ramp signal for site '" + site.layer + "'");

    const auto cfg = controller.snapshot();
    const std::size_t nramps = cfg->size();
    std::vector<int> deferred(nramps, 0);
    double pending = 0.0;  // flush work that must finish before the next token starts
    double seq_total = 0.0;
    std::size_t peak = 0;
    std::vector<ExitOutcome> outcomes;
    outcomes.reserve(seq.tokens.size());

    for (const auto& tok : seq.tokens) {
      const auto rec = tok.as_request();
      auto out = evaluate_record(rec, *cfg, profile, 1, params.avg_k);
      const std::size_t e = out.exit_ramp.value_or(nramps);

      int carried = 0;
      double extra = 0.0;     // penalty cost beyond single-token layer time
      double overhead = 0.0;  // ramps evaluated for this token
      double prev_prefix = 0.0;
      for (std::size_t j = 0; j < nramps; ++j) {
        const auto& site = cfg->ramps[j].site;
        const double at = site.prefix_ms(1);
        if (carried > 0) extra += (penalty(1 + carried) - 1.0) * (at - prev_prefix);
        overhead += site.ramp_ms(1);
        if (j == e) break;
        if (deferred[j] > 0) {
          carried += deferred[j];
          rep.deferred.push_back({seq.seq_id, tok.index, site.layer, deferred[j], penalty(1 + carried),
                                  DeferredKind::carry});
          deferred[j] = 0;
        }
        prev_prefix = at;
      }

      double tpt = 0.0;
      if (e < nramps) {
        const auto& site = cfg->ramps[e].site;
        tpt = pending + site.prefix_ms(1) + overhead + extra;
        pending = 0.0;
        deferred[e] += 1 + carried;
        if (deferred[e] >= params.flush_cap) {
          const double p = penalty(deferred[e]);
          pending = (full - site.prefix_ms(1)) * p;
          rep.deferred.push_back({seq.seq_id, tok.index, site.layer, deferred[e], p, DeferredKind::flush});
          deferred[e] = 0;
        }
      } else {
        if (carried > 0) extra += (penalty(1 + carried) - 1.0) * (full - prev_prefix);
        tpt = pending + full + overhead + extra;
        pending = 0.0;
      }
      for (int d : deferred) peak = std::max(peak, static_cast<std::size_t>(d));

      rep.tokens.push_back({seq.seq_id, tok.index, tpt, out.exit_site, out.correct});
      seq_total += tpt;
      outcomes.push_back(std::move(out));
    }

    double tail = pending;
    for (std::size_t j = 0; j < nramps; ++j) {
      if (deferred[j] == 0) continue;
      const auto& site = cfg->ramps[j].site;
      const double p = penalty(deferred[j]);
      tail += (full - site.prefix_ms(1)) * p;
      const std::int64_t last = seq.tokens.empty() ? 0 : seq.tokens.back().index;
      rep.deferred.push_back({seq.seq_id, last, site.layer, deferred[j], p, DeferredKind::final_flush});
    }

    SequenceSummary sum;
    sum.seq_id = seq.seq_id;
    sum.tokens = seq.tokens.size();
    sum.mean_tpt_ms = seq.tokens.empty() ? 0.0 : seq_total / static_cast<double>(seq.tokens.size());
    sum.total_ms = seq_total + tail;
    sum.vanilla_total_ms = full * static_cast<double>(seq.tokens.size());
    sum.max_deferred = peak;
    rep.sequences.push_back(sum);
    clock += sum.total_ms;

    const auto feedback = token_feedback(seq, outcomes);
    rep.feedback_tokens += feedback.size();
    for (std::size_t i = 0; i < feedback.size(); ++i)
      controller.observe(seq.tokens[i].as_request(), outcomes[i], *cfg, 1, clock);
  }

  std::vector<double> lat;
  lat.reserve(rep.tokens.size());
  for (const auto& t : rep.tokens) lat.push_back(t.latency_ms);
  rep.latency = summarize(lat);
  rep.events = controller.events();
  rep.final_config = *controller.snapshot();
  return rep;
}

}  // namespace eesim
