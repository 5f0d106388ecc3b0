#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "scadscope/change_tracking.hpp"
#include "scadscope/report.hpp"

namespace scadscope {

struct HistoryRecord {
  int record_id = 0;
  std::string timestamp;  // UTC ISO-8601
  std::string code;       // full snapshot
  Origin origin = Origin::kHuman;
  std::vector<ChangeRecord> change_records;  // vs. the state it was committed on
  std::optional<AiReport> report;
  std::string label;
  bool superseded = false;  // left behind by a commit made after an undo
  std::optional<int> parent;

  friend bool operator==(const HistoryRecord&, const HistoryRecord&) = default;
};

struct AttributedChange {
  int record_id = 0;
  ChangeRecord change;

  friend bool operator==(const AttributedChange&, const AttributedChange&) = default;
};

std::string utc_timestamp();

inline constexpr int kHistoryFormatVersion = 1;

/// Append-only snapshot history with a cursor on the active chain (the
/// records not superseded). Not thread-safe; callers serialize mutations.
class SessionHistory {
 public:
  using Clock = std::function<std::string()>;

  explicit SessionHistory(Clock clock = utc_timestamp) : clock_(std::move(clock)) {}

  const std::vector<HistoryRecord>& records() const { return records_; }
  bool empty() const { return records_.empty(); }
  /// Index of the current record; nullopt while empty.
  std::optional<std::size_t> cursor() const { return cursor_; }
  const HistoryRecord* current() const;
  std::string current_code() const;
  /// Throws Error(kNotFound).
  const HistoryRecord& record(int record_id) const;

  /// Appends a snapshot after the cursor. Committing the current code again
  /// is a no-op returning the current record. Active records after the
  /// cursor become superseded. Change records default to a local line diff
  /// against the current state.
  const HistoryRecord& commit(const std::string& code, Origin origin,
                              std::optional<AiReport> report = std::nullopt,
                              std::string label = {},
                              std::optional<std::vector<ChangeRecord>> changes = std::nullopt);

  /// Commits a copy of record `record_id` labelled "restored from #k" with
  /// human origin; a no-op when it already matches the current code.
  /// Returns the current code. Throws Error(kNotFound).
  std::string restore(int record_id);

  /// Move along the active chain. Throw Error(kBoundary) at either end.
  std::string undo();
  std::string redo();
  bool can_undo() const;
  bool can_redo() const;

  std::vector<AttributedChange> changes(Origin origin) const;

  /// JSON lines: a header {format_version, cursor, record_count}, then one
  /// record per line. Written to a temporary file and renamed.
  void save(const std::filesystem::path& path) const;
  /// Throws Error(kMigration) for another format version and Error(kIo)
  /// for unreadable, truncated or corrupt files.
  static SessionHistory load(const std::filesystem::path& path, Clock clock = utc_timestamp);

  friend bool operator==(const SessionHistory& a, const SessionHistory& b) {
    return a.records_ == b.records_ && a.cursor_ == b.cursor_;
  }

 private:
  std::optional<std::size_t> step(int direction) const;

  Clock clock_;
  std::vector<HistoryRecord> records_;
  std::optional<std::size_t> cursor_;
};

void to_json(nlohmann::json& j, const HistoryRecord& record);
void from_json(const nlohmann::json& j, HistoryRecord& record);

}  // namespace scadscope
