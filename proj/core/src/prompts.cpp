#include "prism/prompts.hpp"

#include <cstdio>
#include <cstdlib>

namespace prism::prompts {
namespace {

constexpr std::string_view kOpen = "<<<CONTENT\n";
constexpr std::string_view kClose = "\nCONTENT>>>";

constexpr std::string_view kSociologist =
    "You are a sociologist reviewing online content for one specific reader. "
    "You look at how the text positions social groups: claims about the standing of a group, "
    "language that strips people of their humanity, and calls for the removal or destruction "
    "of a group. Judge the text by its effect on the targeted group, not by the vocabulary alone.";

constexpr std::string_view kLinguist =
    "You are a linguist reviewing online content for one specific reader. "
    "You look at the form of the language: overall sentiment, disrespect, insults, attempts to "
    "humiliate, and general toxicity. Pay attention to register, irony and reclaimed terms "
    "before deciding that wording is abusive.";

constexpr std::string_view kPsychologist =
    "You are a psychologist reviewing online content for one specific reader. "
    "You look at threats, incitement and descriptions of violence, and at whether the text "
    "attacks a target or defends against an attack. Consider how the reader would likely feel "
    "on encountering the text.";

constexpr std::string_view kGhost =
    "You stand in for one particular reader. The specialists who looked at this content did "
    "not agree. Using the reader's learned thresholds below, decide whether this reader would "
    "want the content hidden. Reason from the reader's profile, not from general policy.";

constexpr std::string_view kManager =
    "You route content to specialist reviewers. The available specialists are "
    "sociologist (group status, dehumanise, genocide), linguist (sentiment, respect, insult, "
    "humiliate, toxicity) and psychologist (violence, attack_defend). Choose between one and "
    "three of them.";

constexpr std::string_view kSingleAgent =
    "You review online content for one specific reader and decide on your own whether it "
    "should be hidden from them. Cover all ten harm dimensions yourself.";

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string schema_lines() {
  std::string dims;
  for (Dimension d : kAllDimensions) {
    if (!dims.empty()) dims += ", ";
    dims += "\"" + std::string(dimension_name(d)) + "\": <0..1>";
  }
  return "{\"decision\": \"hate\" | \"neutral\", \"severities\": {" + dims +
         "}, \"confidence\": <0..1>, \"reasoning\": \"<one or two sentences>\"}";
}

}  // namespace

std::string_view base_prompt(ExpertKind kind) {
  switch (kind) {
    case ExpertKind::sociologist: return kSociologist;
    case ExpertKind::linguist: return kLinguist;
    case ExpertKind::psychologist: return kPsychologist;
    case ExpertKind::ghost: return kGhost;
  }
  return kLinguist;
}

std::string_view manager_prompt() { return kManager; }
std::string_view single_agent_prompt() { return kSingleAgent; }

std::string wrap_content(std::string_view text) {
  std::string out;
  out.reserve(text.size() + kOpen.size() + kClose.size());
  out.append(kOpen).append(text).append(kClose);
  return out;
}

std::optional<std::string> extract_content(std::string_view prompt) {
  const auto open = prompt.find(kOpen);
  if (open == std::string_view::npos) return std::nullopt;
  const auto begin = open + kOpen.size();
  const auto close = prompt.rfind(kClose);
  if (close == std::string_view::npos || close < begin) return std::nullopt;
  return std::string(prompt.substr(begin, close - begin));
}

std::string task_text(std::string_view content) {
  return "Rate the content between the markers for this reader. Severities run from 0 (absent) "
         "to 1 (extreme). Answer \"hate\" if the reader would want it hidden and \"neutral\" "
         "otherwise. Reply with exactly one JSON object:\n" +
         schema_lines() + "\n\n" + wrap_content(content);
}

std::string manager_task_text(std::string_view content) {
  return "Pick the specialists for the content between the markers. Reply with exactly one JSON "
         "object:\n{\"experts\": [\"sociologist\" | \"linguist\" | \"psychologist\", ...], "
         "\"summary\": \"<what the content is doing>\"}\n\n" +
         wrap_content(content);
}

std::string profile_line(Dimension d, double threshold, double weight,
                         const CalibrationTable& calibration) {
  return "- " + std::string(dimension_name(d)) + ": threshold " + fixed(threshold) + " (" +
         calibration.describe_threshold(threshold) + "), weight " + fixed(weight) + " (" +
         calibration.describe_weight(weight) + ")";
}

std::string confidence_line(double mean_confidence) {
  return "Profile confidence: " + fixed(mean_confidence) +
         ". This profile is still close to population defaults, so fall back on them when a "
         "case is borderline.";
}

CompositePrompt compose(std::string_view base, std::string_view dynamic_context,
                        std::string_view task) {
  CompositePrompt p;
  p.system_text = std::string(base);
  p.user_text = std::string(dynamic_context) + "\n\n" + std::string(task);
  return p;
}

std::vector<ProfileLine> parse_profile_lines(std::string_view prompt) {
  std::vector<ProfileLine> out;
  std::size_t pos = 0;
  while (pos < prompt.size()) {
    auto end = prompt.find('\n', pos);
    if (end == std::string_view::npos) end = prompt.size();
    const std::string_view line = prompt.substr(pos, end - pos);
    pos = end + 1;
    if (line.rfind("- ", 0) != 0) continue;
    const auto colon = line.find(": threshold ");
    if (colon == std::string_view::npos) continue;
    const auto dim = parse_dimension(line.substr(2, colon - 2));
    if (!dim) continue;
    const std::string rest(line.substr(colon + 12));
    char* after = nullptr;
    const double t = std::strtod(rest.c_str(), &after);
    if (after == rest.c_str()) continue;
    double w = 0.0;
    const auto wpos = rest.find(", weight ");
    if (wpos != std::string::npos) w = std::strtod(rest.c_str() + wpos + 9, nullptr);
    out.push_back({*dim, t, w});
  }
  return out;
}

}  // namespace prism::prompts
