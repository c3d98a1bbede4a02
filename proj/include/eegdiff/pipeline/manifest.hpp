#pragma once

#include <filesystem>
#include <map>
#include <string>

namespace eegdiff::pipeline {

// Lower-case hex SHA-256.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

struct ManifestEntry {
  std::string sha256;
  std::uintmax_t bytes = 0;
  std::string stage;
};

// Every artifact the pipeline writes, keyed by path relative to a root.
// Lives at <report_dir>/manifest.json and is merged across stages.
class Manifest {
 public:
  Manifest(std::filesystem::path file, std::filesystem::path root);

  // Hash the file as it is now on disk.
  void record(const std::filesystem::path& artifact, const std::string& stage);
  void save() const;

  const std::map<std::string, ManifestEntry>& entries() const { return entries_; }

 private:
  std::filesystem::path file_, root_;
  std::map<std::string, ManifestEntry> entries_;
};

}  // namespace eegdiff::pipeline
