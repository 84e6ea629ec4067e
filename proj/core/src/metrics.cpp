#include "recode/metrics.hpp"

#include <stdexcept>

namespace recode::metrics {

JsonlWriter::JsonlWriter(const std::string& path) : path_(path), out_(path, std::ios::trunc) {
  if (!out_) throw std::runtime_error("JsonlWriter: cannot open " + path);
}

void JsonlWriter::write(Json record) {
  record["v"] = kSchemaVersion;
  out_ << record.dump() << '\n';
  if (!out_) throw std::runtime_error("JsonlWriter: write failed for " + path_);
}

void JsonlWriter::flush() { out_.flush(); }

std::vector<Json> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_jsonl: cannot open " + path);
  std::vector<Json> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    records.push_back(Json::parse(line));
  }
  return records;
}

}  // namespace recode::metrics
