#include <algorithm>
#include <shared_mutex>

#include "prism/errors.hpp"
#include "prism/store.hpp"

namespace prism {
namespace {

class MemoryStore final : public ProfileStore {
 public:
  std::optional<ProfileRecord> load_profile(const std::string& user_id) override {
    std::shared_lock lock(data_mutex_);
    const auto it = profiles_.find(user_id);
    if (it == profiles_.end()) return std::nullopt;
    return it->second;
  }

  void save_profile(const ProfileRecord& profile) override {
    profile.validate();
    auto user_lock = lock_user(profile.user_id);
    std::unique_lock lock(data_mutex_);
    profiles_[profile.user_id] = profile;
  }

  ProfileRecord apply_feedback_transactional(const std::string& user_id, const FeedbackEvent& event,
                                             const PopulationPrior& prior,
                                             const LearningConfig& config) override {
    auto user_lock = lock_user(user_id);
    const ProfileRecord current = load_profile(user_id).value_or(init_profile(user_id, prior));
    std::vector<FeedbackEvent> log = feedback_log(user_id);
    const ProfileRecord next = feedback_step(current, event, log, decisions(user_id), config);
    next.validate();

    // Staged: nothing becomes visible unless both writes go through.
    log.push_back(event);
    fault_point(kFaultAfterLogAppend);
    std::unique_lock lock(data_mutex_);
    feedback_[user_id] = std::move(log);
    profiles_[user_id] = next;
    return next;
  }

  void append_decision(const DecisionRecord& record) override {
    std::unique_lock lock(data_mutex_);
    decisions_[record.user_id].push_back(record);
  }

  std::optional<DecisionRecord> latest_decision(const std::string& user_id,
                                                const std::string& content_id) override {
    std::shared_lock lock(data_mutex_);
    const auto it = decisions_.find(user_id);
    if (it == decisions_.end()) return std::nullopt;
    for (auto r = it->second.rbegin(); r != it->second.rend(); ++r) {
      if (r->content_id == content_id) return *r;
    }
    return std::nullopt;
  }

  std::vector<DecisionRecord> decisions(const std::string& user_id) override {
    std::shared_lock lock(data_mutex_);
    const auto it = decisions_.find(user_id);
    return it == decisions_.end() ? std::vector<DecisionRecord>{} : it->second;
  }

  std::vector<FeedbackEvent> feedback_log(const std::string& user_id) override {
    std::shared_lock lock(data_mutex_);
    const auto it = feedback_.find(user_id);
    return it == feedback_.end() ? std::vector<FeedbackEvent>{} : it->second;
  }

  std::vector<std::string> user_ids() override {
    std::shared_lock lock(data_mutex_);
    std::vector<std::string> ids;
    for (const auto& [id, _] : profiles_) ids.push_back(id);
    for (const auto& [id, _] : feedback_) {
      if (!profiles_.count(id)) ids.push_back(id);
    }
    std::sort(ids.begin(), ids.end());
    return ids;
  }

  void replace_user(const ProfileRecord& profile,
                    const std::vector<FeedbackEvent>& feedback) override {
    profile.validate();
    auto user_lock = lock_user(profile.user_id);
    std::unique_lock lock(data_mutex_);
    profiles_[profile.user_id] = profile;
    feedback_[profile.user_id] = feedback;
  }

 private:
  std::shared_mutex data_mutex_;
  std::map<std::string, ProfileRecord> profiles_;
  std::map<std::string, std::vector<FeedbackEvent>> feedback_;
  std::map<std::string, std::vector<DecisionRecord>> decisions_;
};

}  // namespace

std::shared_ptr<ProfileStore> make_memory_store() { return std::make_shared<MemoryStore>(); }

}  // namespace prism
