#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "mottlab/lab/config.hpp"

namespace mottlab::lab {

// Output directory for one recipe. A default-constructed OutputDir is
// disabled and every write is a no-op, so recipes can run in memory.
class OutputDir {
 public:
  OutputDir() = default;
  explicit OutputDir(const std::string& path);

  bool enabled() const { return !root_.empty(); }
  const std::filesystem::path& root() const { return root_; }

  /// Replaces `name` through a temporary file and a rename.
  void write_atomic(const std::string& name, const std::string& content) const;

  /// Appends one complete line and flushes; writes `header` first if the
  /// file does not exist yet.
  void append_line(const std::string& name, const std::string& header,
                   const std::string& line) const;

  /// Data rows of a CSV written by append_line, split on commas. An
  /// unterminated last line or a row with the wrong field count is ignored.
  std::vector<std::vector<std::string>> read_rows(const std::string& name,
                                                  std::size_t n_fields) const;

 private:
  std::filesystem::path root_;
  mutable std::mutex mutex_;
};

// manifest.json: config hash, code version, and wall-clock per cell.
class Manifest {
 public:
  Manifest(const OutputDir& out, const ExperimentConfig& config, std::string command);

  void record(const std::string& cell, double seconds);
  void write() const;

 private:
  const OutputDir& out_;
  nlohmann::json config_;
  std::string hash_;
  std::string command_;
  std::string started_;
  std::map<std::string, double> cells_;
  mutable std::mutex mutex_;
};

std::string format_double(double v);

}  // namespace mottlab::lab
