#include "experiments/report.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>

#ifndef MEMBRANE_VERSION
#define MEMBRANE_VERSION "0.0.0"
#endif

namespace experiments {

std::string version_string() { return MEMBRANE_VERSION; }

namespace {

std::string header_lines(const std::string& hash, const std::string& subcommand) {
  return fmt::format("# membrane_version={}\n# config_hash={}\n# subcommand={}\n", version_string(), hash, subcommand);
}

}  // namespace

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::string& config_hash, const std::string& subcommand,
                     std::vector<std::string> columns)
    : path_(path), os_(path), columns_(columns.size()) {
  if (!os_) throw std::runtime_error("cannot write " + path.string());
  os_ << header_lines(config_hash, subcommand);
  for (std::size_t i = 0; i < columns.size(); ++i) os_ << (i ? "," : "") << columns[i];
  os_ << '\n';
}

void CsvWriter::cell(const std::string& text) {
  if (filled_ == columns_) throw std::logic_error("too many cells in CSV row of " + path_.string());
  os_ << (filled_ ? "," : "") << text;
  ++filled_;
}

CsvWriter& CsvWriter::operator<<(double v) {
  cell(num(v));
  return *this;
}
CsvWriter& CsvWriter::operator<<(long long v) {
  cell(std::to_string(v));
  return *this;
}
CsvWriter& CsvWriter::operator<<(unsigned long long v) {
  cell(std::to_string(v));
  return *this;
}
CsvWriter& CsvWriter::operator<<(const std::string& s) {
  if (s.find_first_of(",\"\n") != std::string::npos) {
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    cell(q + "\"");
  } else {
    cell(s);
  }
  return *this;
}
CsvWriter& CsvWriter::operator<<(const membrane::Site& s) {
  std::string t;
  for (int i = 0; i < s.dim(); ++i) t += (i ? " " : "") + std::to_string(s[i]);
  cell(t);
  return *this;
}

void CsvWriter::end_row() {
  if (filled_ != columns_)
    throw std::logic_error(fmt::format("CSV row of {} has {} cells, expected {}", path_.string(), filled_, columns_));
  os_ << '\n';
  filled_ = 0;
}

RunOutput::RunOutput(std::filesystem::path dir, std::string config_hash, std::string subcommand)
    : dir_(std::move(dir)), hash_(std::move(config_hash)), subcommand_(std::move(subcommand)) {
  std::filesystem::create_directories(dir_);
  summary_["membrane_version"] = version_string();
  summary_["config_hash"] = hash_;
  summary_["subcommand"] = subcommand_;
}

CsvWriter RunOutput::csv(const std::string& name, std::vector<std::string> columns) const {
  files_.push_back(name);
  return CsvWriter(dir_ / name, hash_, subcommand_, std::move(columns));
}

std::ofstream RunOutput::text(const std::string& name) const {
  files_.push_back(name);
  std::ofstream os(dir_ / name);
  if (!os) throw std::runtime_error("cannot write " + (dir_ / name).string());
  os << header_lines(hash_, subcommand_);
  return os;
}

void RunOutput::write_summary(int exit_code) {
  summary_["exit_code"] = exit_code;
  summary_["files"] = files_;
  std::ofstream os(dir_ / "summary.json");
  os << summary_.dump(2) << '\n';
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& f) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::map<std::size_t, std::exception_ptr> errors;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard lock(mu);
          errors.emplace(i, std::current_exception());
        }
      }
    });
  for (auto& t : pool) t.join();
  if (!errors.empty()) std::rethrow_exception(errors.begin()->second);
}

}  // namespace experiments
