#include "cadence/event_log.hpp"

namespace cadence {

EventLog::EventLog(std::filesystem::path dir) : dir_(std::move(dir)) {
  if (dir_.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create storage directory " + dir_.string() + ": " + ec.message());
  out_.open(file(), std::ios::app | std::ios::binary);
  if (!out_) throw Error(ErrorCode::kIo, "cannot open event log " + file().string());
}

void EventLog::append(const Json& event) {
  if (dir_.empty()) return;
  std::lock_guard lock(mutex_);
  out_ << event.dump() << '\n';
  out_.flush();
  if (!out_) throw Error(ErrorCode::kIo, "failed to append to " + file().string());
}

void EventLog::replay(const std::function<void(const Json&)>& fn) const {
  if (dir_.empty()) return;
  std::ifstream in(file(), std::ios::binary);
  if (!in) return;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (line.empty()) continue;
    Json event;
    try {
      event = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw Error(ErrorCode::kParse, file().string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    fn(event);
  }
}

}  // namespace cadence
