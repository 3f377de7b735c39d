#pragma once

#include <memory>
#include <string>

#include "prism/gateway.hpp"
#include "prism/scoring.hpp"

namespace prism {

inline constexpr double kMockConfidence = 0.8;

/// Offline stand-in for the model. Severities come from the lexicon applied
/// to the wrapped content. An agent flags when some severity exceeds a
/// threshold listed in its context, or, without listed thresholds, when the
/// largest severity is above 0.5. Manager prompts get an expert proposal
/// computed by the deterministic selection rule.
std::string mock_reply(const ChatRequest& request, const Lexicon& lexicon);

MockResponder make_mock_responder(std::shared_ptr<const Lexicon> lexicon);

}  // namespace prism
