#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "prism/profile.hpp"
#include "prism/scoring.hpp"

namespace prism::prompts {

/// Bumped whenever any template text changes; recorded fixtures are only
/// valid for the version they were captured with.
inline constexpr std::string_view kTemplateVersion = "prism-prompts/1";

/// Static persona text for an expert or the ghost.
std::string_view base_prompt(ExpertKind kind);
std::string_view manager_prompt();
std::string_view single_agent_prompt();

/// "<<<CONTENT\n" + text + "\nCONTENT>>>"
std::string wrap_content(std::string_view text);

/// Inverse of wrap_content over a whole prompt; nullopt without markers.
std::optional<std::string> extract_content(std::string_view prompt);

/// Fixed instruction demanding the expert response schema, followed by the
/// wrapped content.
std::string task_text(std::string_view content);

/// Manager instruction demanding {"experts": [...], "summary": "..."}.
std::string manager_task_text(std::string_view content);

/// "- dehumanise: threshold 0.15 (highly sensitive), weight 0.30 (moderate concern)"
std::string profile_line(Dimension d, double threshold, double weight,
                         const CalibrationTable& calibration);

/// Rendered only when the mean confidence is below 1.
std::string confidence_line(double mean_confidence);

struct CompositePrompt {
  std::string system_text;  // base prompt
  std::string user_text;    // dynamic context + "\n\n" + task

  /// base + "\n\n" + dynamic context + "\n\n" + task
  std::string joined() const { return system_text + "\n\n" + user_text; }
};

CompositePrompt compose(std::string_view base, std::string_view dynamic_context,
                        std::string_view task);

struct ProfileLine {
  Dimension dimension;
  double threshold = 0.0;
  double weight = 0.0;
};

/// Recovers the profile lines rendered by profile_line; used by the offline
/// responder so it reacts to the same context a real model would see.
std::vector<ProfileLine> parse_profile_lines(std::string_view prompt);

}  // namespace prism::prompts
