#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eesim/controller.hpp"
#include "eesim/stats.hpp"
#include "eesim/trace.hpp"

namespace eesim {

struct TokenRecord {
  std::int64_t seq_id = 0;
  std::int64_t index = 0;
  std::map<LayerId, RampSignal> ramps;
  std::int64_t final_token = 0;

  RequestRecord as_request() const;
  bool operator==(const TokenRecord&) const = default;
};

struct TokenSequence {
  std::int64_t seq_id = 0;
  std::vector<TokenRecord> tokens;  // index order, contiguous from 0
};

// Groups records by sequence (first-appearance order) and checks that every
// feasible site is covered and indices run 0..n-1. Throws ValidationError.
std::vector<TokenSequence> group_tokens(std::vector<TokenRecord> records, std::span<const RampSite> sites);

std::vector<TokenSequence> load_token_trace(const std::filesystem::path& path, const ModelProfile& profile);
std::vector<TokenSequence> parse_token_trace(std::istream& in, const ModelProfile& profile,
                                             const std::string& origin = "<stream>");
void write_token_trace(std::span<const TokenSequence> sequences, const std::string& profile_ref, std::ostream& out);

// Cuts a synthesized request stream into `num_sequences` sequences of
// `seq_len` tokens each; difficulty continuity carries across tokens.
std::vector<TokenSequence> synthesize_token_trace(const ModelProfile& profile, std::size_t num_sequences,
                                                  std::size_t seq_len, SynthesisParams params);

struct GenerativeParams {
  int flush_cap = 4;
  // Multiplier on single-token suffix time when b tokens run it together.
  BatchCurve batch_penalty{{{1, 1.0}, {4, 1.0}}};
  int avg_k = 1;
  // Closed-loop tuning from truncated token feedback, applied between sequences.
  bool adaptation_enabled = false;
  ControllerParams control;

  void validate() const;
};

struct TokenResult {
  std::int64_t seq_id = 0;
  std::int64_t index = 0;
  double latency_ms = 0.0;
  std::optional<LayerId> exit_site;
  bool correct = true;
};

enum class DeferredKind { carry, flush, final_flush };
std::string to_string(DeferredKind kind);

struct DeferredEvent {
  std::int64_t seq_id = 0;
  std::int64_t token_index = 0;  // token that carried or triggered the work
  LayerId ramp;
  int tokens = 0;
  double penalty = 1.0;
  DeferredKind kind = DeferredKind::carry;
};

struct SequenceSummary {
  std::int64_t seq_id = 0;
  std::size_t tokens = 0;
  double mean_tpt_ms = 0.0;
  double total_ms = 0.0;          // all tokens plus trailing flush work
  double vanilla_total_ms = 0.0;
  std::size_t max_deferred = 0;   // peak per-ramp deferred count after flushing
};

struct TokenFeedback {
  std::int64_t seq_id = 0;
  std::int64_t index = 0;
  std::optional<LayerId> exit_site;
  std::int64_t released = 0;
  std::int64_t final_token = 0;
  bool correct = true;
};

struct TptReport {
  std::vector<TokenResult> tokens;
  std::vector<SequenceSummary> sequences;
  Percentiles latency;
  double vanilla_tpt_ms = 0.0;
  std::vector<DeferredEvent> deferred;
  std::size_t feedback_tokens = 0;
  std::vector<AdaptationEvent> events;
  EEConfig final_config;
};

// Exited tokens leave their remaining layers pending at the exit ramp. The
// next token that passes that ramp without exiting runs them alongside its
// own suffix, paying batch_penalty(1 + carried). A ramp holding flush_cap
// pending tokens flushes at once, delaying the next token; sequence end
// flushes whatever is left.
TptReport run_generative(std::span<const TokenSequence> sequences, const ModelProfile& profile,
                         const EEConfig& config, const GenerativeParams& params);

// Feedback for one sequence: every token up to and including the first whose
// released token differs from the original model; later tokens are dropped.
std::vector<TokenFeedback> token_feedback(const TokenSequence& sequence, std::span<const ExitOutcome> outcomes);

}  // namespace eesim
