#include "neuboots/experiments/run_record.hpp"

#include <fstream>

#include "neuboots/error.hpp"

#ifndef NEUBOOTS_VERSION
#define NEUBOOTS_VERSION "unknown"
#endif

namespace neuboots::experiments {

using nlohmann::json;

std::string code_version() { return NEUBOOTS_VERSION; }

RunRecord make_record(const ExperimentConfig& cfg) {
  RunRecord r;
  r.config = cfg;
  r.config_hash = config_hash(cfg);
  r.code_version = code_version();
  return r;
}

std::size_t resolve_threads(std::size_t requested) {
  if (requested > 0) return requested;
  const auto hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

json record_to_json(const RunRecord& record) {
  json tables = json::object();
  for (const auto& [name, table] : record.tables) {
    tables[name] = {{"file", name + ".csv"}, {"columns", table.columns()}, {"rows", table.size()}};
  }
  return {{"schema_version", kConfigSchemaVersion},
          {"kind", to_string(record.config.kind)},
          {"config_hash", record.config_hash},
          {"code_version", record.code_version},
          {"seeds", record.config.seeds},
          {"config", to_json(record.config)},
          {"tables", std::move(tables)},
          {"summary", record.summary},
          {"timings", record.timings.to_json()}};
}

void write_run(const RunRecord& record, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir.string() + ": " + ec.message());
  for (const auto& [name, table] : record.tables) io::write_table_csv(dir / (name + ".csv"), table);
  io::write_table_csv(dir / "timings.csv", record.timings);
  save_config(dir / "config.json", record.config);
  {
    std::ofstream out(dir / "seeds.txt");
    if (!out) throw DataError("cannot write " + (dir / "seeds.txt").string());
    for (auto s : record.config.seeds) out << s << '\n';
  }
  std::ofstream out(dir / "run_record.json");
  if (!out) throw DataError("cannot write " + (dir / "run_record.json").string());
  out << record_to_json(record).dump(2) << '\n';
}

}  // namespace neuboots::experiments
