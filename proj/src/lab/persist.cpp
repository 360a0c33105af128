#include "mottlab/lab/persist.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace mottlab::lab {

namespace fs = std::filesystem;

namespace {

std::string now_iso() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

OutputDir::OutputDir(const std::string& path) : root_(path) {
  if (enabled()) fs::create_directories(root_);
}

void OutputDir::write_atomic(const std::string& name, const std::string& content) const {
  if (!enabled()) return;
  const std::lock_guard lock(mutex_);
  const fs::path target = root_ / name;
  const fs::path tmp = root_ / (name + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, target);
}

void OutputDir::append_line(const std::string& name, const std::string& header,
                            const std::string& line) const {
  if (!enabled()) return;
  const std::lock_guard lock(mutex_);
  const fs::path target = root_ / name;
  const bool fresh = !fs::exists(target);
  bool torn = false;
  if (!fresh && fs::file_size(target) > 0) {
    std::ifstream tail(target, std::ios::binary);
    tail.seekg(-1, std::ios::end);
    torn = tail.get() != '\n';
  }
  std::ofstream out(target, std::ios::binary | std::ios::app);
  if (!out) throw Error("cannot append to " + target.string());
  std::string chunk = fresh ? header + "\n" : std::string(torn ? "\n" : "");
  chunk += line;
  chunk += '\n';
  out.write(chunk.data(), static_cast<std::streamsize>(chunk.size()));
  out.flush();
}

std::vector<std::vector<std::string>> OutputDir::read_rows(const std::string& name,
                                                           std::size_t n_fields) const {
  std::vector<std::vector<std::string>> rows;
  if (!enabled()) return rows;
  std::ifstream in(root_ / name);
  if (!in) return rows;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (in.eof()) break;  // no trailing newline: interrupted write
    if (header) {
      header = false;
      continue;
    }
    auto fields = split(line);
    if (fields.size() != n_fields) continue;
    if (std::ranges::any_of(fields, [](const std::string& f) { return f.empty(); })) continue;
    rows.push_back(std::move(fields));
  }
  return rows;
}

Manifest::Manifest(const OutputDir& out, const ExperimentConfig& config, std::string command)
    : out_(out), config_(to_json(config)), command_(std::move(command)), started_(now_iso()) {
  std::ostringstream h;
  h << std::hex << std::setw(16) << std::setfill('0') << config_hash(config);
  hash_ = h.str();
  if (!out_.enabled()) return;
  // Keep timings of cells finished by an earlier, interrupted run.
  std::ifstream in(out_.root() / "manifest.json");
  if (!in) return;
  try {
    nlohmann::json old;
    in >> old;
    if (old.value("config_hash", "") != hash_) {
      throw InvalidArgument("output directory " + out_.root().string() +
                            " holds results of a different configuration");
    }
    if (old.contains("cells")) {
      for (const auto& [key, seconds] : old["cells"].items()) cells_[key] = seconds.get<double>();
    }
  } catch (const nlohmann::json::exception&) {
    // A torn manifest only loses timings.
  }
}

void Manifest::record(const std::string& cell, double seconds) {
  const std::lock_guard lock(mutex_);
  cells_[cell] = seconds;
}

void Manifest::write() const {
  if (!out_.enabled()) return;
  const std::lock_guard lock(mutex_);
  nlohmann::json j;
  j["config_hash"] = hash_;
  j["code_version"] = MOTTLAB_VERSION;
  j["command"] = command_;
  j["config"] = config_;
  j["started_at"] = started_;
  j["written_at"] = now_iso();
  j["cells"] = cells_;
  out_.write_atomic("manifest.json", j.dump(2) + "\n");
}

}  // namespace mottlab::lab
