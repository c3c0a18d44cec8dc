#pragma once

// Access to the checked-in fixture directories.

#include <filesystem>
#include <fstream>
#include <string>

#include "txpoc/pipeline.hpp"

namespace txpoc::testkit {

inline std::filesystem::path fixtures_dir() { return TXPOC_FIXTURES_DIR; }

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline const std::string& fixture_text(const std::string& rel) {
  static std::mutex mu;
  static std::map<std::string, std::string> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(rel);
  if (it == cache.end()) it = cache.emplace(rel, read_text(fixtures_dir() / rel)).first;
  return it->second;
}

inline const TraceStream& webkey_trace() {
  static const TraceStream ts = parse_trace(fixture_text("webkey/trace.jsonl"), TraceFormat::Native);
  return ts;
}

inline const TraceStream& flash_trace() {
  static const TraceStream ts = parse_trace(fixture_text("flash/trace.jsonl"), TraceFormat::Native);
  return ts;
}

inline SelectorDb fixture_selectors(const std::string& name) {
  SelectorDb db = SelectorDb::builtin();
  db.load_file((fixtures_dir() / name / "selectors.json").string());
  return db;
}

/// Fixture input for the pipeline: trace plus selectors from `name`/.
inline TxInput fixture_input(const std::string& name) {
  TxInput in;
  in.name = name;
  in.trace_text = fixture_text(name + "/trace.jsonl");
  in.selectors_json = fixture_text(name + "/selectors.json");
  return in;
}

inline PipelineConfig fixture_config(const std::string& dir) {
  auto cfg = load_config((fixtures_dir() / dir / "config.toml").string());
  cfg.harness.forge.work_root = std::filesystem::temp_directory_path() / "txpoc-tests";
  return cfg;
}

struct FailureCase {
  std::string id;
  TxInput input;
  PipelineConfig config;
  std::string expect;
};

/// failures/<id>/fixture.json: trace and selectors relative to the case directory, plus the expected label.
inline FailureCase failure_case(const std::string& id) {
  auto dir = fixtures_dir() / "failures" / id;
  auto j = json::parse(read_text(dir / "fixture.json"));
  FailureCase c;
  c.id = id;
  c.input.name = id;
  c.input.trace_text = read_text(dir / j.at("trace").get<std::string>());
  c.input.selectors_json = read_text(dir / j.at("selectors").get<std::string>());
  c.config = fixture_config("failures/" + id);
  c.expect = j.at("expect").get<std::string>();
  return c;
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<unsigned> n{0};
    path_ = std::filesystem::temp_directory_path() /
            ("txpoc-t" + std::to_string(::getpid()) + "-" + std::to_string(n++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  void put(const std::string& rel, const std::string& text) const {
    std::filesystem::create_directories((path_ / rel).parent_path());
    std::ofstream(path_ / rel, std::ios::binary) << text;
  }

 private:
  std::filesystem::path path_;
};

}  // namespace txpoc::testkit
