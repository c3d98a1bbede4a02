#include "eegdiff/pipeline/manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <memory>

#include <json.hpp>

#include "eegdiff/errors.hpp"

namespace eegdiff::pipeline {

namespace fs = std::filesystem;

namespace {

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) throw std::runtime_error("sha256 init failed");
  }
  void update(const void* data, std::size_t n) { EVP_DigestUpdate(ctx_.get(), data, n); }
  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_.get(), md.data(), &len);
    static const char* digits = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
      out += digits[md[i] >> 4];
      out += digits[md[i] & 15];
    }
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  Sha256 h;
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

Manifest::Manifest(fs::path file, fs::path root) : file_(std::move(file)), root_(std::move(root)) {
  if (!fs::exists(file_)) return;
  std::ifstream in(file_);
  try {
    const auto j = nlohmann::json::parse(in);
    for (const auto& [name, e] : j.at("files").items()) {
      entries_[name] = {e.at("sha256").get<std::string>(), e.at("bytes").get<std::uintmax_t>(),
                        e.at("stage").get<std::string>()};
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("corrupt manifest " + file_.string() + ": " + e.what());
  }
}

void Manifest::record(const fs::path& artifact, const std::string& stage) {
  auto rel = fs::absolute(artifact).lexically_relative(fs::absolute(root_));
  const auto key = (rel.empty() || *rel.begin() == "..") ? fs::absolute(artifact).generic_string() : rel.generic_string();
  entries_[key] = {sha256_file(artifact), fs::file_size(artifact), stage};
}

void Manifest::save() const {
  nlohmann::json j;
  j["files"] = nlohmann::json::object();
  for (const auto& [name, e] : entries_) {
    j["files"][name] = {{"sha256", e.sha256}, {"bytes", e.bytes}, {"stage", e.stage}};
  }
  if (file_.has_parent_path()) fs::create_directories(file_.parent_path());
  std::ofstream out(file_, std::ios::binary);
  if (!out) throw DataError("cannot write " + file_.string());
  out << j.dump(2) << '\n';
}

}  // namespace eegdiff::pipeline
