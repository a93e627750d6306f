#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "bb84sim/harness.hpp"
#include "bb84sim/quantum_core.hpp"

namespace bb84sim::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitInvariant = 3;

enum class OutputFormat { Json, Csv };

OutputFormat parse_format(std::string_view text);

using Cell = std::variant<std::nullptr_t, bool, std::int64_t, double, std::string>;

/// Flat table: every row has one cell per column.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add_row(std::vector<Cell> row);
};

struct Parameter {
    std::string key;
    Cell value;
};

struct RunManifest {
    std::string command;
    std::vector<Parameter> parameters;
    std::optional<std::uint64_t> seed;
    std::string artifact_version;
    std::string timestamp;  // ISO-8601 UTC
};

struct ResultDocument {
    RunManifest manifest;
    Table results;
    std::optional<Table> records;
};

std::string utc_timestamp_now();

/// 17 significant digits, round-trip safe.
std::string format_double(double value);

std::string to_json(const ResultDocument& doc);
std::string manifest_json(const RunManifest& manifest);
std::string to_csv(const Table& table);

ResultDocument cmd_cascade(Bb84Symbol state, std::uint64_t shots, std::uint64_t seed);

ResultDocument cmd_sweep_sigma(double min, double max, std::size_t steps,
                               std::size_t quadrature_points);

ResultDocument cmd_bb84(std::size_t pulses, const EveStrategy& eve, std::uint64_t seed,
                        bool emit_records, Fault fault = Fault::None,
                        const RunOptions& options = {});

/// Full command-line entry point. Returns the process exit status.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace bb84sim::cli
