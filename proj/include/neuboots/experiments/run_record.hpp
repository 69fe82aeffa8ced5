#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <filesystem>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "neuboots/experiments/config.hpp"
#include "neuboots/io/report.hpp"

namespace neuboots::experiments {

// Build identifier (git describe at configure time).
std::string code_version();

struct RunRecord {
  ExperimentConfig config;
  std::string config_hash;
  std::string code_version;
  // Metric tables, one CSV each. Rows are sorted by seed, so re-running a
  // config reproduces them byte for byte.
  std::map<std::string, io::MetricTable> tables;
  // Seed-averaged headline numbers, deterministic like the tables.
  nlohmann::json summary = nlohmann::json::object();
  // Wall-clock measurements (seconds, or ratios for *_relative, speedup_*
  // and train_overhead phases), kept apart because they are not reproducible.
  io::MetricTable timings{{"seed", "method", "phase", "value"}};
};

RunRecord make_record(const ExperimentConfig& cfg);

// Writes <table>.csv per metric table, timings.csv, config.json (the full
// effective config), seeds.txt and run_record.json into `dir`.
void write_run(const RunRecord& record, const std::filesystem::path& dir);

nlohmann::json record_to_json(const RunRecord& record);

std::size_t resolve_threads(std::size_t requested);

// Runs fn(i) for i in [0, count) on up to `threads` workers. Each index is
// handled exactly once; if any call throws, the exception of the lowest
// failing index is rethrown after all workers stop.
template <class Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  threads = std::min(resolve_threads(threads), count);
  std::vector<std::exception_ptr> errors(count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
        break;
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::vector<std::thread> workers;
    for (std::size_t t = 0; t < threads; ++t) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < count && !failed; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
            failed = true;
          }
        }
      });
    }
    for (auto& w : workers) w.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace neuboots::experiments
