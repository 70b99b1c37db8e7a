#include "manifest.hpp"

#include <array>
#include <fstream>
#include <iterator>
#include <memory>

#include <openssl/evp.h>

#include "xrnpe/error.hpp"

namespace xrnpe::cli {

namespace {

std::string hex(const unsigned char* bytes, unsigned len) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2u);
  for (unsigned i = 0; i < len; ++i) {
    out += digits[bytes[i] >> 4];
    out += digits[bytes[i] & 0xF];
  }
  return out;
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), md.data(), &len) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  return hex(md.data(), len);
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  return sha256_hex(std::string(std::istreambuf_iterator<char>(in), {}));
}

RunManifest::RunManifest(std::string command, std::vector<std::string> argv)
    : command_(std::move(command)), argv_(std::move(argv)) {}

void RunManifest::input(const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["path"] = path.string();
  j["sha256"] = sha256_file(path);
  inputs_.push_back(std::move(j));
}

void RunManifest::output(const std::filesystem::path& path) { outputs_.push_back(path.string()); }

void RunManifest::format(const std::string& role, const std::string& name) { formats_[role] = name; }

void RunManifest::param(const std::string& key, nlohmann::ordered_json value) { params_[key] = std::move(value); }

nlohmann::ordered_json RunManifest::to_json(int exit_code, const std::string& error) const {
  nlohmann::ordered_json j;
  j["tool"] = "xrnpe";
  j["version"] = XRNPE_VERSION;
  j["command"] = command_;
  j["argv"] = argv_;
  j["seed"] = seed_;
  j["threads"] = threads_;
  j["formats"] = formats_;
  j["params"] = params_;
  j["inputs"] = inputs_;
  nlohmann::ordered_json outs = nlohmann::ordered_json::array();
  for (const std::string& p : outputs_) {
    nlohmann::ordered_json o;
    o["path"] = p;
    // Outputs of a failed run may be missing or partial.
    std::error_code ec;
    if (std::filesystem::is_regular_file(p, ec)) o["sha256"] = sha256_file(p);
    outs.push_back(std::move(o));
  }
  j["outputs"] = std::move(outs);
  j["exit_code"] = exit_code;
  if (!error.empty()) j["error"] = error;
  return j;
}

}  // namespace xrnpe::cli
