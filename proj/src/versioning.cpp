#include "scadscope/versioning.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

#include "scadscope/error.hpp"

namespace scadscope {

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[40];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

const HistoryRecord* SessionHistory::current() const {
  return cursor_ ? &records_[*cursor_] : nullptr;
}

std::string SessionHistory::current_code() const {
  const auto* c = current();
  return c ? c->code : std::string();
}

const HistoryRecord& SessionHistory::record(int record_id) const {
  if (record_id >= 1 && static_cast<std::size_t>(record_id) <= records_.size())
    return records_[static_cast<std::size_t>(record_id - 1)];
  throw Error(ErrorCode::kNotFound, "no history record #" + std::to_string(record_id));
}

const HistoryRecord& SessionHistory::commit(const std::string& code, Origin origin,
                                            std::optional<AiReport> report, std::string label,
                                            std::optional<std::vector<ChangeRecord>> changes) {
  if (const auto* c = current(); c && c->code == code) return *c;
  const std::size_t after = cursor_ ? *cursor_ + 1 : 0;
  for (std::size_t i = after; i < records_.size(); ++i) records_[i].superseded = true;

  HistoryRecord r;
  r.record_id = static_cast<int>(records_.size()) + 1;
  r.timestamp = clock_();
  r.code = code;
  r.origin = origin;
  r.change_records = changes ? std::move(*changes) : local_changes(current_code(), code, origin);
  for (auto& c : r.change_records) c.origin = origin;
  r.report = std::move(report);
  r.label = std::move(label);
  if (const auto* c = current()) r.parent = c->record_id;
  records_.push_back(std::move(r));
  cursor_ = records_.size() - 1;
  return records_.back();
}

std::string SessionHistory::restore(int record_id) {
  const std::string code = record(record_id).code;
  commit(code, Origin::kHuman, std::nullopt, "restored from #" + std::to_string(record_id));
  return current_code();
}

std::optional<std::size_t> SessionHistory::step(int direction) const {
  if (!cursor_) return std::nullopt;
  for (auto i = static_cast<std::ptrdiff_t>(*cursor_) + direction;
       i >= 0 && i < static_cast<std::ptrdiff_t>(records_.size()); i += direction)
    if (!records_[static_cast<std::size_t>(i)].superseded) return static_cast<std::size_t>(i);
  return std::nullopt;
}

bool SessionHistory::can_undo() const { return step(-1).has_value(); }
bool SessionHistory::can_redo() const { return step(+1).has_value(); }

std::string SessionHistory::undo() {
  const auto to = step(-1);
  if (!to) throw Error(ErrorCode::kBoundary, "nothing to undo");
  cursor_ = *to;
  return current_code();
}

std::string SessionHistory::redo() {
  const auto to = step(+1);
  if (!to) throw Error(ErrorCode::kBoundary, "nothing to redo");
  cursor_ = *to;
  return current_code();
}

std::vector<AttributedChange> SessionHistory::changes(Origin origin) const {
  std::vector<AttributedChange> out;
  for (const auto& r : records_)
    if (r.origin == origin)
      for (const auto& c : r.change_records) out.push_back({r.record_id, c});
  return out;
}

void to_json(nlohmann::json& j, const HistoryRecord& r) {
  j = nlohmann::json{{"record_id", r.record_id},
                     {"timestamp", r.timestamp},
                     {"code", r.code},
                     {"origin", to_string(r.origin)},
                     {"change_records", r.change_records},
                     {"report", r.report ? nlohmann::json(*r.report) : nlohmann::json()},
                     {"label", r.label},
                     {"superseded", r.superseded},
                     {"parent", r.parent ? nlohmann::json(*r.parent) : nlohmann::json()}};
}

void from_json(const nlohmann::json& j, HistoryRecord& r) {
  r = HistoryRecord{};
  r.record_id = j.at("record_id").get<int>();
  r.timestamp = j.at("timestamp").get<std::string>();
  r.code = j.at("code").get<std::string>();
  r.origin = origin_from_string(j.at("origin").get<std::string>());
  for (const auto& c : j.at("change_records")) {
    ChangeRecord rec;
    from_json(c, rec);
    rec.origin = r.origin;
    r.change_records.push_back(std::move(rec));
  }
  if (!j.at("report").is_null()) {
    AiReport report;
    from_json(j.at("report"), report);
    r.report = std::move(report);
  }
  r.label = j.at("label").get<std::string>();
  r.superseded = j.at("superseded").get<bool>();
  if (!j.at("parent").is_null()) r.parent = j.at("parent").get<int>();
}

void SessionHistory::save(const std::filesystem::path& path) const {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write history file", path.string());
    const nlohmann::json header = {
        {"format_version", kHistoryFormatVersion},
        {"cursor", cursor_ ? nlohmann::json(*cursor_) : nlohmann::json()},
        {"record_count", records_.size()}};
    out << header.dump() << '\n';
    for (const auto& r : records_) out << nlohmann::json(r).dump() << '\n';
    out.flush();
    if (!out) throw Error(ErrorCode::kIo, "failed writing history file", path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot replace history file", ec.message());
}

SessionHistory SessionHistory::load(const std::filesystem::path& path, Clock clock) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read history file", path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();

  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    const auto nl = text.find('\n', start);
    if (nl == std::string::npos)
      throw Error(ErrorCode::kIo, "history file is truncated (unterminated line " +
                                      std::to_string(lines.size() + 1) + ")", path.string());
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  if (lines.empty()) throw Error(ErrorCode::kIo, "history file is empty", path.string());

  const auto header = nlohmann::json::parse(lines[0], nullptr, false);
  if (!header.is_object() || !header.contains("format_version"))
    throw Error(ErrorCode::kIo, "history file has no header", path.string());
  if (header["format_version"] != kHistoryFormatVersion)
    throw Error(ErrorCode::kMigration,
                "unsupported history format_version " + header["format_version"].dump() +
                    " (this build reads version " + std::to_string(kHistoryFormatVersion) + ")",
                path.string());

  SessionHistory h(std::move(clock));
  try {
    const auto count = header.at("record_count").get<std::size_t>();
    if (lines.size() - 1 != count)
      throw Error(ErrorCode::kIo, "history file is truncated: expected " + std::to_string(count) +
                                      " records, found " + std::to_string(lines.size() - 1),
                  path.string());
    for (std::size_t i = 1; i < lines.size(); ++i) {
      HistoryRecord r = nlohmann::json::parse(lines[i]).get<HistoryRecord>();
      if (r.record_id != static_cast<int>(i))
        throw Error(ErrorCode::kIo, "history record ids are out of order", path.string());
      h.records_.push_back(std::move(r));
    }
    if (!header.at("cursor").is_null()) {
      const auto c = header.at("cursor").get<std::size_t>();
      if (c >= h.records_.size() || h.records_[c].superseded)
        throw Error(ErrorCode::kIo, "history cursor is invalid", path.string());
      h.cursor_ = c;
    } else if (!h.records_.empty()) {
      throw Error(ErrorCode::kIo, "history cursor is missing", path.string());
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kIo, "history file is corrupt", e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kIo) throw;
    throw Error(ErrorCode::kIo, "history file is corrupt", e.what());
  }
  return h;
}

}  // namespace scadscope
