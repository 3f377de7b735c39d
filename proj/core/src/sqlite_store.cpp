#include <sqlite3.h>

#include <algorithm>

#include "prism/errors.hpp"
#include "prism/profile_json.hpp"
#include "prism/store.hpp"

namespace prism {
namespace {

constexpr const char* kSchema = R"sql(
CREATE TABLE IF NOT EXISTS profiles (
  user_id    TEXT PRIMARY KEY,
  body       TEXT NOT NULL,
  updated_at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS feedback (
  user_id  TEXT NOT NULL REFERENCES profiles(user_id) DEFERRABLE INITIALLY DEFERRED,
  sequence INTEGER NOT NULL,
  body     TEXT NOT NULL,
  PRIMARY KEY (user_id, sequence)
);
CREATE TABLE IF NOT EXISTS decisions (
  id         INTEGER PRIMARY KEY AUTOINCREMENT,
  user_id    TEXT NOT NULL,
  content_id TEXT NOT NULL,
  decided_at TEXT NOT NULL,
  severities TEXT NOT NULL,
  body       TEXT NOT NULL
);
CREATE INDEX IF NOT EXISTS decisions_by_content ON decisions (user_id, content_id, id);
)sql";

class Statement {
 public:
  Statement(sqlite3* db, const char* sql) : db_(db) {
    if (sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr) != SQLITE_OK) {
      throw StorageError(std::string("prepare failed: ") + sqlite3_errmsg(db));
    }
  }
  Statement(const Statement&) = delete;
  Statement& operator=(const Statement&) = delete;
  ~Statement() { sqlite3_finalize(stmt_); }

  Statement& bind(int index, const std::string& value) {
    check(sqlite3_bind_text(stmt_, index, value.c_str(), static_cast<int>(value.size()),
                            SQLITE_TRANSIENT));
    return *this;
  }
  Statement& bind(int index, std::int64_t value) {
    check(sqlite3_bind_int64(stmt_, index, value));
    return *this;
  }

  /// True while a row is available.
  bool step() {
    const int rc = sqlite3_step(stmt_);
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    throw StorageError(std::string("step failed: ") + sqlite3_errmsg(db_));
  }

  std::string text(int col) const {
    const auto* p = sqlite3_column_text(stmt_, col);
    return p == nullptr ? std::string() : std::string(reinterpret_cast<const char*>(p));
  }
  std::int64_t integer(int col) const { return sqlite3_column_int64(stmt_, col); }

 private:
  void check(int rc) {
    if (rc != SQLITE_OK) throw StorageError(std::string("bind failed: ") + sqlite3_errmsg(db_));
  }

  sqlite3* db_;
  sqlite3_stmt* stmt_ = nullptr;
};

class SqliteStore final : public ProfileStore {
 public:
  SqliteStore(const std::string& path, Clock clock) : clock_(std::move(clock)) {
    if (sqlite3_open_v2(path.c_str(), &db_,
                        SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX,
                        nullptr) != SQLITE_OK) {
      const std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
      sqlite3_close(db_);
      throw StorageError("cannot open store " + path + ": " + msg);
    }
    sqlite3_busy_timeout(db_, 5000);
    exec("PRAGMA journal_mode=WAL;");
    exec("PRAGMA synchronous=FULL;");
    exec("PRAGMA foreign_keys=ON;");
    exec(kSchema);
  }

  ~SqliteStore() override { sqlite3_close(db_); }

  std::optional<ProfileRecord> load_profile(const std::string& user_id) override {
    std::lock_guard lock(db_mutex_);
    return load_locked(user_id);
  }

  void save_profile(const ProfileRecord& profile) override {
    profile.validate();
    auto user_lock = lock_user(profile.user_id);
    std::lock_guard lock(db_mutex_);
    upsert_locked(profile);
  }

  ProfileRecord apply_feedback_transactional(const std::string& user_id, const FeedbackEvent& event,
                                             const PopulationPrior& prior,
                                             const LearningConfig& config) override {
    auto user_lock = lock_user(user_id);
    std::lock_guard lock(db_mutex_);
    const ProfileRecord current = load_locked(user_id).value_or(init_profile(user_id, prior));
    const auto log = feedback_locked(user_id);
    const ProfileRecord next = feedback_step(current, event, log, decisions_locked(user_id), config);
    next.validate();

    exec("BEGIN IMMEDIATE;");
    try {
      Statement insert(db_, "INSERT INTO feedback (user_id, sequence, body) VALUES (?, ?, ?)");
      insert.bind(1, user_id).bind(2, static_cast<std::int64_t>(log.size() + 1));
      insert.bind(3, to_json(event).dump());
      insert.step();
      fault_point(kFaultAfterLogAppend);
      upsert_locked(next);
      exec("COMMIT;");
    } catch (...) {
      sqlite3_exec(db_, "ROLLBACK;", nullptr, nullptr, nullptr);
      throw;
    }
    return next;
  }

  void append_decision(const DecisionRecord& record) override {
    std::lock_guard lock(db_mutex_);
    Statement insert(db_,
                     "INSERT INTO decisions (user_id, content_id, decided_at, severities, body) "
                     "VALUES (?, ?, ?, ?, ?)");
    insert.bind(1, record.user_id).bind(2, record.content_id);
    insert.bind(3, format_timestamp(record.decided_at));
    insert.bind(4, to_json(record.severities).dump()).bind(5, record.payload);
    insert.step();
  }

  std::optional<DecisionRecord> latest_decision(const std::string& user_id,
                                                const std::string& content_id) override {
    std::lock_guard lock(db_mutex_);
    Statement q(db_,
                "SELECT user_id, content_id, decided_at, severities, body FROM decisions "
                "WHERE user_id = ? AND content_id = ? ORDER BY id DESC LIMIT 1");
    q.bind(1, user_id).bind(2, content_id);
    if (!q.step()) return std::nullopt;
    return decision_row(q);
  }

  std::vector<DecisionRecord> decisions(const std::string& user_id) override {
    std::lock_guard lock(db_mutex_);
    return decisions_locked(user_id);
  }

  std::vector<FeedbackEvent> feedback_log(const std::string& user_id) override {
    std::lock_guard lock(db_mutex_);
    return feedback_locked(user_id);
  }

  std::vector<std::string> user_ids() override {
    std::lock_guard lock(db_mutex_);
    Statement q(db_,
                "SELECT user_id FROM profiles UNION SELECT user_id FROM feedback ORDER BY 1");
    std::vector<std::string> ids;
    while (q.step()) ids.push_back(q.text(0));
    return ids;
  }

  void replace_user(const ProfileRecord& profile,
                    const std::vector<FeedbackEvent>& feedback) override {
    profile.validate();
    auto user_lock = lock_user(profile.user_id);
    std::lock_guard lock(db_mutex_);
    exec("BEGIN IMMEDIATE;");
    try {
      Statement del(db_, "DELETE FROM feedback WHERE user_id = ?");
      del.bind(1, profile.user_id);
      del.step();
      std::int64_t seq = 0;
      for (const FeedbackEvent& e : feedback) {
        Statement insert(db_, "INSERT INTO feedback (user_id, sequence, body) VALUES (?, ?, ?)");
        insert.bind(1, profile.user_id).bind(2, ++seq).bind(3, to_json(e).dump());
        insert.step();
      }
      upsert_locked(profile);
      exec("COMMIT;");
    } catch (...) {
      sqlite3_exec(db_, "ROLLBACK;", nullptr, nullptr, nullptr);
      throw;
    }
  }

 private:
  void exec(const char* sql) {
    char* err = nullptr;
    if (sqlite3_exec(db_, sql, nullptr, nullptr, &err) != SQLITE_OK) {
      std::string msg = err ? err : "unknown error";
      sqlite3_free(err);
      throw StorageError("sqlite: " + msg);
    }
  }

  std::optional<ProfileRecord> load_locked(const std::string& user_id) {
    Statement q(db_, "SELECT body FROM profiles WHERE user_id = ?");
    q.bind(1, user_id);
    if (!q.step()) return std::nullopt;
    try {
      ProfileRecord p = profile_from_json(nlohmann::json::parse(q.text(0)));
      if (p.user_id != user_id) throw ValidationError("row is keyed by another user id");
      return p;
    } catch (const std::exception& e) {
      throw IntegrityError(user_id, std::string("profile row: ") + e.what());
    }
  }

  void upsert_locked(const ProfileRecord& profile) {
    Statement q(db_,
                "INSERT INTO profiles (user_id, body, updated_at) VALUES (?, ?, ?) "
                "ON CONFLICT(user_id) DO UPDATE SET body = excluded.body, "
                "updated_at = excluded.updated_at");
    q.bind(1, profile.user_id).bind(2, to_json(profile).dump());
    q.bind(3, format_timestamp(clock_()));
    q.step();
  }

  std::vector<FeedbackEvent> feedback_locked(const std::string& user_id) {
    Statement q(db_, "SELECT body FROM feedback WHERE user_id = ? ORDER BY sequence");
    q.bind(1, user_id);
    std::vector<FeedbackEvent> out;
    while (q.step()) {
      try {
        out.push_back(feedback_from_json(nlohmann::json::parse(q.text(0))));
      } catch (const std::exception& e) {
        throw IntegrityError(user_id, std::string("feedback row: ") + e.what());
      }
    }
    return out;
  }

  std::vector<DecisionRecord> decisions_locked(const std::string& user_id) {
    Statement q(db_,
                "SELECT user_id, content_id, decided_at, severities, body FROM decisions "
                "WHERE user_id = ? ORDER BY id");
    q.bind(1, user_id);
    std::vector<DecisionRecord> out;
    while (q.step()) out.push_back(decision_row(q));
    return out;
  }

  static DecisionRecord decision_row(const Statement& q) {
    DecisionRecord r;
    r.user_id = q.text(0);
    r.content_id = q.text(1);
    try {
      r.decided_at = parse_timestamp(q.text(2));
      r.severities = severities_from_json(nlohmann::json::parse(q.text(3)));
    } catch (const std::exception& e) {
      throw IntegrityError(r.user_id, std::string("decision row: ") + e.what());
    }
    r.payload = q.text(4);
    return r;
  }

  Clock clock_;
  sqlite3* db_ = nullptr;
  std::mutex db_mutex_;
};

}  // namespace

std::shared_ptr<ProfileStore> open_sqlite_store(const std::string& path, Clock clock) {
  return std::make_shared<SqliteStore>(path, clock ? std::move(clock) : Clock(now_utc));
}

}  // namespace prism
