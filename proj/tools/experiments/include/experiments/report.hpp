#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "membrane/site.hpp"

namespace experiments {

std::string version_string();

// Floating point with 17 significant digits; the CSV and JSON number format.
inline std::string num(double v) { return fmt::format("{:.17g}", v); }

// Fixed-column CSV writer. The first lines carry `# key=value` provenance
// (tool version, config hash, subcommand) and then the column names.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::string& config_hash, const std::string& subcommand,
            std::vector<std::string> columns);

  CsvWriter& operator<<(double v);
  CsvWriter& operator<<(long long v);
  CsvWriter& operator<<(unsigned long long v);
  CsvWriter& operator<<(int v) { return *this << static_cast<long long>(v); }
  CsvWriter& operator<<(std::size_t v) { return *this << static_cast<unsigned long long>(v); }
  CsvWriter& operator<<(long v) { return *this << static_cast<long long>(v); }
  CsvWriter& operator<<(const std::string& s);
  CsvWriter& operator<<(const char* s) { return *this << std::string(s); }
  CsvWriter& operator<<(const membrane::Site& s);  // space-separated coordinates
  void end_row();

  const std::filesystem::path& path() const { return path_; }

 private:
  void cell(const std::string& text);
  std::filesystem::path path_;
  std::ofstream os_;
  std::size_t columns_;
  std::size_t filled_ = 0;
};

// Output directory of one run: CSV files plus summary.json.
class RunOutput {
 public:
  RunOutput(std::filesystem::path dir, std::string config_hash, std::string subcommand);

  const std::filesystem::path& dir() const { return dir_; }
  const std::string& config_hash() const { return hash_; }
  CsvWriter csv(const std::string& name, std::vector<std::string> columns) const;
  // Opens a text file that starts with the same provenance header.
  std::ofstream text(const std::string& name) const;
  nlohmann::json& summary() { return summary_; }
  void write_summary(int exit_code);
  std::vector<std::string> files() const { return files_; }

 private:
  std::filesystem::path dir_;
  std::string hash_;
  std::string subcommand_;
  nlohmann::json summary_;
  mutable std::vector<std::string> files_;
};

// Runs f(0..n-1) on up to `threads` workers. Exceptions are rethrown (the one
// from the lowest index) after every worker has stopped.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& f);

}  // namespace experiments
