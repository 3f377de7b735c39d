#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "prism/profile.hpp"
#include "prism/timeutil.hpp"

namespace prism {

/// One moderation outcome as persisted. `payload` is the canonical decision
/// JSON; the consensus severities are kept alongside so feedback can reuse
/// them without decoding the payload.
struct DecisionRecord {
  std::string user_id;
  std::string content_id;
  Timestamp decided_at{};
  SeverityVector severities;
  std::string payload;

  friend bool operator==(const DecisionRecord&, const DecisionRecord&) = default;
};

/// Called at named points inside a write transaction. Tests throw from it
/// (or terminate the process) to simulate a crash at that point.
using FaultHook = std::function<void(std::string_view point)>;

inline constexpr std::string_view kFaultAfterLogAppend = "after_log_append";

/// Severity history that enters the weight computation: every logged feedback
/// plus every moderated item, one entry per content id, feedback taking
/// precedence over a decision for the same content.
std::vector<SeverityVector> severity_history(const std::vector<FeedbackEvent>& feedback,
                                             const std::vector<DecisionRecord>& decisions);

/// The pure part of a feedback transaction: one learning step, then weights
/// recomputed over the history including the new event.
ProfileRecord feedback_step(const ProfileRecord& current, const FeedbackEvent& event,
                            const std::vector<FeedbackEvent>& prior_feedback,
                            const std::vector<DecisionRecord>& decisions,
                            const LearningConfig& config);

/// Profiles, feedback log and decision log. All mutations of one user are
/// serialized; reads never observe a partially applied transaction.
class ProfileStore {
 public:
  virtual ~ProfileStore() = default;

  /// Absent for unknown users. Throws IntegrityError on an undecodable row.
  virtual std::optional<ProfileRecord> load_profile(const std::string& user_id) = 0;

  /// Validates, then upserts. Durable once it returns.
  virtual void save_profile(const ProfileRecord& profile) = 0;

  /// Loads the profile or creates and saves one from the prior.
  ProfileRecord load_or_init(const std::string& user_id, const PopulationPrior& prior);

  /// Atomically: load (or init) -> learning step -> append to the feedback
  /// log -> recompute weights over the full history -> save.
  virtual ProfileRecord apply_feedback_transactional(const std::string& user_id,
                                                     const FeedbackEvent& event,
                                                     const PopulationPrior& prior,
                                                     const LearningConfig& config = {}) = 0;

  virtual void append_decision(const DecisionRecord& record) = 0;
  virtual std::optional<DecisionRecord> latest_decision(const std::string& user_id,
                                                        const std::string& content_id) = 0;
  virtual std::vector<DecisionRecord> decisions(const std::string& user_id) = 0;

  /// In sequence order.
  virtual std::vector<FeedbackEvent> feedback_log(const std::string& user_id) = 0;

  /// Sorted.
  virtual std::vector<std::string> user_ids() = 0;

  /// Replaces a user's profile and feedback log in one step (import).
  virtual void replace_user(const ProfileRecord& profile,
                            const std::vector<FeedbackEvent>& feedback) = 0;

  /// Rebuilds every profile whose non-empty feedback log disagrees with its
  /// sample count by replaying the log from the prior. Returns the repaired
  /// user ids.
  std::vector<std::string> repair(const PopulationPrior& prior, const LearningConfig& config = {});

  void set_fault_hook(FaultHook hook);

 protected:
  std::unique_lock<std::recursive_mutex> lock_user(const std::string& user_id);
  void fault_point(std::string_view point);

 private:
  std::mutex locks_mutex_;
  std::map<std::string, std::unique_ptr<std::recursive_mutex>, std::less<>> user_locks_;
  std::mutex hook_mutex_;
  FaultHook fault_hook_;
};

/// Process-local store for tests and evaluation runs.
std::shared_ptr<ProfileStore> make_memory_store();

/// Single-file SQLite store (WAL journal, synchronous=FULL). `clock` stamps
/// profile rows.
std::shared_ptr<ProfileStore> open_sqlite_store(const std::string& path, Clock clock = now_utc);

/// ":memory:" or an empty path selects the in-memory store, anything else
/// the SQLite file.
std::shared_ptr<ProfileStore> open_store(const std::string& path, Clock clock = now_utc);

/// Writes <dir>/profiles.json (array of canonical profiles) and
/// <dir>/feedback.jsonl ({"user_id", "sequence", "event"} per line).
void export_store(ProfileStore& store, const std::string& dir);

/// Inverse of export_store. Returns the number of users imported.
std::size_t import_store(ProfileStore& store, const std::string& dir);

}  // namespace prism
