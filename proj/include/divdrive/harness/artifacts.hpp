#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <string>

#include "divdrive/error.hpp"
#include "divdrive/learning/snapshot.hpp"
#include "divdrive/text_format.hpp"

namespace divdrive::harness {

namespace fs = std::filesystem;

/// Output directory of one experiment. Text artifacts start with a
/// `# config=<hash>` line and snapshots carry the hash as their tag; reading
/// anything written under another configuration is an error.
class ArtifactStore {
 public:
  ArtifactStore(fs::path root, std::string config_hash) : root_(std::move(root)), hash_(std::move(config_hash)) {
    fs::create_directories(root_);
    const fs::path stamp = root_ / "config.hash";
    if (fs::exists(stamp)) {
      std::ifstream in(stamp);
      std::string existing;
      std::getline(in, existing);
      if (text::trim(existing) != hash_)
        throw Error(ErrorCode::kConfig, "output directory " + root_.string() + " belongs to config " +
                                            std::string(text::trim(existing)) + ", not " + hash_);
    } else {
      write_raw(stamp, hash_ + "\n");
    }
  }

  [[nodiscard]] const fs::path& root() const { return root_; }
  [[nodiscard]] const std::string& hash() const { return hash_; }
  [[nodiscard]] fs::path path(const fs::path& relative) const { return root_ / relative; }
  [[nodiscard]] bool exists(const fs::path& relative) const { return fs::exists(path(relative)); }

  void write_text(const fs::path& relative, const std::string& body) const {
    write_raw(path(relative), "# config=" + hash_ + "\n" + body);
  }

  [[nodiscard]] std::string read_text(const fs::path& relative) const {
    const fs::path p = path(relative);
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error(ErrorCode::kIo, "cannot open " + p.string());
    std::string first;
    std::getline(in, first);
    check_stamp(p, first);
    std::ostringstream rest;
    rest << in.rdbuf();
    return first + "\n" + rest.str();
  }

  void write_snapshot(const fs::path& relative, learning::PolicySnapshot snap) const {
    snap.tag = hash_;
    write_raw(path(relative), learning::serialize(snap));
  }

  [[nodiscard]] learning::PolicySnapshot read_snapshot(const fs::path& relative) const {
    learning::PolicySnapshot snap = learning::load_snapshot(path(relative).string());
    if (snap.tag != hash_)
      throw Error(ErrorCode::kConfig, path(relative).string() + " was written under config '" + snap.tag + "'");
    return snap;
  }

 private:
  void check_stamp(const fs::path& p, std::string_view first) const {
    const std::string_view expected = "# config=";
    if (first.substr(0, expected.size()) != expected)
      throw Error(ErrorCode::kCorrupt, p.string() + " lacks a config stamp");
    if (text::trim(first.substr(expected.size())) != hash_)
      throw Error(ErrorCode::kConfig, p.string() + " was written under config " +
                                          std::string(text::trim(first.substr(expected.size()))));
  }

  void write_raw(const fs::path& p, const std::string& bytes) const {
    std::lock_guard lock(mutex_);
    fs::create_directories(p.parent_path());
    const fs::path tmp = p.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
      out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
      if (!out) throw Error(ErrorCode::kIo, "short write to " + tmp.string());
    }
    fs::rename(tmp, p);
  }

  fs::path root_;
  std::string hash_;
  mutable std::mutex mutex_;
};

}  // namespace divdrive::harness
