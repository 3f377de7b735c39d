#include "prism/store.hpp"

#include <set>

#include "prism/errors.hpp"

namespace prism {

std::vector<SeverityVector> severity_history(const std::vector<FeedbackEvent>& feedback,
                                             const std::vector<DecisionRecord>& decisions) {
  std::vector<SeverityVector> history;
  std::set<std::string> seen;
  for (auto it = feedback.rbegin(); it != feedback.rend(); ++it) {
    if (seen.insert(it->content_id).second) history.push_back(it->severities);
  }
  for (auto it = decisions.rbegin(); it != decisions.rend(); ++it) {
    if (seen.insert(it->content_id).second) history.push_back(it->severities);
  }
  return history;
}

ProfileRecord feedback_step(const ProfileRecord& current, const FeedbackEvent& event,
                            const std::vector<FeedbackEvent>& prior_feedback,
                            const std::vector<DecisionRecord>& decisions,
                            const LearningConfig& config) {
  ProfileRecord next = apply_feedback(current, event, config);
  std::vector<FeedbackEvent> all = prior_feedback;
  all.push_back(event);
  const auto history = severity_history(all, decisions);
  next.weights = recompute_weights(history);
  return next;
}

ProfileRecord ProfileStore::load_or_init(const std::string& user_id, const PopulationPrior& prior) {
  auto lock = lock_user(user_id);
  if (auto existing = load_profile(user_id)) return *existing;
  ProfileRecord fresh = init_profile(user_id, prior);
  save_profile(fresh);
  return fresh;
}

std::vector<std::string> ProfileStore::repair(const PopulationPrior& prior,
                                              const LearningConfig& config) {
  std::vector<std::string> repaired;
  for (const std::string& user : user_ids()) {
    auto lock = lock_user(user);
    const auto log = feedback_log(user);
    const auto current = load_profile(user);
    if (log.empty() || (current && current->samples == log.size())) continue;
    const auto recorded = decisions(user);
    ProfileRecord rebuilt = init_profile(user, prior);
    std::vector<FeedbackEvent> replayed;
    for (const FeedbackEvent& e : log) {
      rebuilt = feedback_step(rebuilt, e, replayed, recorded, config);
      replayed.push_back(e);
    }
    replace_user(rebuilt, log);
    repaired.push_back(user);
  }
  return repaired;
}

void ProfileStore::set_fault_hook(FaultHook hook) {
  std::lock_guard lock(hook_mutex_);
  fault_hook_ = std::move(hook);
}

std::unique_lock<std::recursive_mutex> ProfileStore::lock_user(const std::string& user_id) {
  std::recursive_mutex* m = nullptr;
  {
    std::lock_guard guard(locks_mutex_);
    auto& slot = user_locks_[user_id];
    if (!slot) slot = std::make_unique<std::recursive_mutex>();
    m = slot.get();
  }
  return std::unique_lock(*m);
}

void ProfileStore::fault_point(std::string_view point) {
  FaultHook hook;
  {
    std::lock_guard lock(hook_mutex_);
    hook = fault_hook_;
  }
  if (hook) hook(point);
}

std::shared_ptr<ProfileStore> open_store(const std::string& path, Clock clock) {
  if (path.empty() || path == ":memory:") return make_memory_store();
  return open_sqlite_store(path, std::move(clock));
}

}  // namespace prism
