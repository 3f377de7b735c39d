#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>

#include "prism/errors.hpp"
#include "prism/profile_json.hpp"
#include "prism/store.hpp"

namespace prism {

void export_store(ProfileStore& store, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const auto base = std::filesystem::path(dir);
  std::ofstream profiles(base / "profiles.json");
  std::ofstream feedback(base / "feedback.jsonl");
  if (!profiles || !feedback) throw StorageError("cannot write export files in " + dir);

  ordered_json all = ordered_json::array();
  for (const std::string& user : store.user_ids()) {
    if (auto p = store.load_profile(user)) all.push_back(to_json(*p));
    std::uint64_t seq = 0;
    for (const FeedbackEvent& e : store.feedback_log(user)) {
      ordered_json line;
      line["user_id"] = user;
      line["sequence"] = ++seq;
      line["event"] = to_json(e);
      feedback << line.dump() << '\n';
    }
  }
  profiles << all.dump(2) << '\n';
  if (!profiles || !feedback) throw StorageError("export to " + dir + " failed");
}

std::size_t import_store(ProfileStore& store, const std::string& dir) {
  const auto base = std::filesystem::path(dir);
  std::ifstream profiles(base / "profiles.json");
  if (!profiles) throw StorageError("missing " + (base / "profiles.json").string());
  const auto parsed = nlohmann::json::parse(profiles, nullptr, false);
  if (parsed.is_discarded() || !parsed.is_array()) {
    throw ValidationError("profiles.json must hold a JSON array");
  }

  std::map<std::string, std::vector<std::pair<std::uint64_t, FeedbackEvent>>> logs;
  if (std::ifstream feedback(base / "feedback.jsonl"); feedback) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(feedback, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto row = nlohmann::json::parse(line, nullptr, false);
      if (row.is_discarded() || !row.contains("user_id") || !row.contains("sequence") ||
          !row.contains("event")) {
        throw ValidationError("feedback.jsonl line " + std::to_string(line_no) + " is malformed");
      }
      logs[row["user_id"].get<std::string>()].emplace_back(row["sequence"].get<std::uint64_t>(),
                                                           feedback_from_json(row["event"]));
    }
  }

  std::size_t count = 0;
  for (const auto& item : parsed) {
    const ProfileRecord profile = profile_from_json(item);
    auto& entries = logs[profile.user_id];
    std::stable_sort(entries.begin(), entries.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<FeedbackEvent> events;
    for (auto& [_, e] : entries) events.push_back(std::move(e));
    store.replace_user(profile, events);
    logs.erase(profile.user_id);
    ++count;
  }
  for (const auto& [user, entries] : logs) {
    if (!entries.empty()) {
      throw ValidationError("feedback.jsonl references user '" + user + "' without a profile");
    }
  }
  return count;
}

}  // namespace prism
