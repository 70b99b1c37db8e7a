// Per-run record: what was asked, what was read and written, by digest.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace xrnpe::cli {

/// Lowercase hex SHA-256 of a file. Throws DataError when unreadable.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(const std::string& bytes);

class RunManifest {
 public:
  RunManifest(std::string command, std::vector<std::string> argv);

  void input(const std::filesystem::path& path);
  void output(const std::filesystem::path& path);
  void format(const std::string& role, const std::string& name);
  void param(const std::string& key, nlohmann::ordered_json value);
  void seed(std::uint64_t seed) { seed_ = seed; }
  void threads(int threads) { threads_ = threads; }

  const std::vector<std::string>& outputs() const { return outputs_; }

  nlohmann::ordered_json to_json(int exit_code, const std::string& error) const;

 private:
  std::string command_;
  std::vector<std::string> argv_;
  std::uint64_t seed_ = 0;
  int threads_ = 1;
  nlohmann::ordered_json formats_ = nlohmann::ordered_json::object();
  nlohmann::ordered_json params_ = nlohmann::ordered_json::object();
  nlohmann::ordered_json inputs_ = nlohmann::ordered_json::array();
  std::vector<std::string> outputs_;
};

}  // namespace xrnpe::cli
