#pragma once

// Constraint-enforcing beam search over a LanguageModel.
//
// Every hypothesis carries the metrical state needed to reject a character
// the moment it would make the poem fail validation at the requested
// strictness: the surviving whole-poem templates (Strict) or line patterns
// (Relaxed), and the rhyme groups still shared by the rhyme-line endings.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "guiyun/language_model.h"
#include "guiyun/prompt.h"
#include "guiyun/prosody.h"

namespace guiyun::generation {

using prosody::Strictness;

struct DecodeOptions {
  Strictness strictness = Strictness::Relaxed;
  std::size_t beam_width = 16;
  std::uint64_t seed = 0;
  /// Conditioning boost applied to theme/key characters; 1 disables it.
  double boost = std::exp(1.0);
  /// Scale of the seeded Gumbel noise added to each step's log-probability
  /// when ranking hypotheses. 0 gives plain beam search.
  double noise = 1.0;
  /// RR2TEXT: accept any character of the rhyme group at rhyme positions
  /// instead of the original's exact characters.
  bool same_group_only = false;
  /// Strictness levels to fall back through when the beam runs dry.
  int max_retries = 2;
};

struct DecodeResult {
  NormalizedPoem poem;
  Strictness strictness_used = Strictness::Relaxed;
  std::vector<std::string> notes;
  double log_prob = 0.0;  // generated characters, line breaks and end marker
};

/// Throws Error("infeasible") when no poem satisfies the constraints at
/// RhymeOnly, Error("invalid_prompt") for a malformed prompt.
DecodeResult constrained_decode(const LanguageModel& lm, const PromptSpec& prompt, const prosody::RhymeBook& book,
                                const DecodeOptions& options);

}  // namespace guiyun::generation
