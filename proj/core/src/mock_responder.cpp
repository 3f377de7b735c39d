#include "prism/mock_responder.hpp"

#include <algorithm>
#include <cstdio>

#include "prism/orchestrator.hpp"
#include "prism/prompts.hpp"

namespace prism {

std::string mock_reply(const ChatRequest& request, const Lexicon& lexicon) {
  const std::string content = prompts::extract_content(request.user_text).value_or(request.user_text);
  const SeverityVector severities = lexicon.score(content);
  const auto lines = prompts::parse_profile_lines(request.user_text);

  if (request.system_text == prompts::manager_prompt()) {
    PerDimension<double> weights(0.0);
    for (const auto& line : lines) weights[line.dimension] = line.weight;
    nlohmann::ordered_json out;
    out["experts"] = nlohmann::ordered_json::array();
    for (ExpertKind e : select_experts(severities, weights)) out["experts"].push_back(expert_name(e));
    out["summary"] = "routed by lexicon pre-scan";
    return out.dump();
  }

  ExpertAnalysis analysis;
  analysis.severities = severities;
  analysis.confidence = kMockConfidence;
  std::string reasons;
  char buf[96];
  if (!lines.empty()) {
    for (const auto& line : lines) {
      if (severities[line.dimension] > line.threshold) {
        std::snprintf(buf, sizeof buf, "%s%s %.2f > %.2f", reasons.empty() ? "" : ", ",
                      std::string(dimension_name(line.dimension)).c_str(),
                      severities[line.dimension], line.threshold);
        reasons += buf;
      }
    }
  } else {
    const auto& v = severities.values().values();
    const double peak = *std::max_element(v.begin(), v.end());
    if (peak > 0.5) {
      std::snprintf(buf, sizeof buf, "peak severity %.2f > 0.50", peak);
      reasons = buf;
    }
  }
  analysis.decision = reasons.empty() ? Label::keep : Label::flag;
  analysis.reasoning = reasons.empty() ? "nothing above the listed thresholds"
                                       : "above threshold: " + reasons;
  return to_response_json(analysis);
}

MockResponder make_mock_responder(std::shared_ptr<const Lexicon> lexicon) {
  if (!lexicon) lexicon = std::make_shared<Lexicon>();
  return [lexicon](const ChatRequest& request) { return mock_reply(request, *lexicon); };
}

}  // namespace prism
