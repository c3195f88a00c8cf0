#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>

#include "cadence/serialization.hpp"

namespace cadence {

/// Append-only JSONL event log at <dir>/events.jsonl. Each event is flushed
/// before append() returns. An empty directory path keeps events in memory
/// only (nothing is written).
class EventLog {
 public:
  explicit EventLog(std::filesystem::path dir = {});

  void append(const Json& event);

  /// Calls fn for every stored event in order. Throws Error(kParse) on a
  /// corrupt line.
  void replay(const std::function<void(const Json&)>& fn) const;

  bool persistent() const noexcept { return !dir_.empty(); }
  std::filesystem::path file() const { return dir_ / "events.jsonl"; }

 private:
  std::filesystem::path dir_;
  std::mutex mutex_;
  std::ofstream out_;
};

}  // namespace cadence
