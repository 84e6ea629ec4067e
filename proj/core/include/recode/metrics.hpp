#pragma once

#include <json.hpp>

#include <fstream>
#include <string>
#include <vector>

namespace recode::metrics {

using Json = nlohmann::json;

constexpr int kSchemaVersion = 1;

/// Line-delimited JSON, single-writer append. Every record carries the
/// schema version.
class JsonlWriter {
 public:
  explicit JsonlWriter(const std::string& path);
  void write(Json record);
  void flush();
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ofstream out_;
};

std::vector<Json> read_jsonl(const std::string& path);

}  // namespace recode::metrics
