#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "bb84sim/cascade.hpp"
#include "bb84sim/counter_rng.hpp"
#include "bb84sim/error.hpp"
#include "bb84sim/weak_measurement.hpp"

#ifndef BB84SIM_VERSION
#define BB84SIM_VERSION "0.0.0"
#endif

namespace bb84sim::cli {

namespace {

using ordered_json = nlohmann::ordered_json;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

Cell opt_cell(const std::optional<double>& v) {
    if (v) return *v;
    return nullptr;
}

ordered_json cell_json(const Cell& cell) {
    return std::visit(
        [](const auto& v) -> ordered_json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::nullptr_t>) {
                return nullptr;
            } else {
                return v;
            }
        },
        cell);
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string cell_text(const Cell& cell) {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::nullptr_t>) {
                return "";
            } else if constexpr (std::is_same_v<T, bool>) {
                return v ? "true" : "false";
            } else if constexpr (std::is_same_v<T, std::int64_t>) {
                return std::to_string(v);
            } else if constexpr (std::is_same_v<T, double>) {
                return format_double(v);
            } else {
                return csv_escape(v);
            }
        },
        cell);
}

ordered_json table_json(const Table& table) {
    ordered_json rows = ordered_json::array();
    for (const auto& row : table.rows) {
        ordered_json obj = ordered_json::object();
        for (std::size_t c = 0; c < table.columns.size(); ++c) obj[table.columns[c]] = cell_json(row[c]);
        rows.push_back(std::move(obj));
    }
    return rows;
}

ordered_json manifest_object(const RunManifest& m) {
    ordered_json params = ordered_json::object();
    for (const Parameter& p : m.parameters) params[p.key] = cell_json(p.value);
    ordered_json obj = ordered_json::object();
    obj["command"] = m.command;
    obj["parameters"] = std::move(params);
    obj["seed"] = m.seed ? ordered_json(*m.seed) : ordered_json(nullptr);
    obj["artifact_version"] = m.artifact_version;
    obj["timestamp"] = m.timestamp;
    return obj;
}

RunManifest make_manifest(std::string command, std::vector<Parameter> params,
                          std::optional<std::uint64_t> seed) {
    return {std::move(command), std::move(params), seed, BB84SIM_VERSION, utc_timestamp_now()};
}

Cell count_cell(std::size_t n) { return static_cast<std::int64_t>(n); }

}  // namespace

OutputFormat parse_format(std::string_view text) {
    if (text == "json") return OutputFormat::Json;
    if (text == "csv") return OutputFormat::Csv;
    throw UsageError("unknown format '" + std::string(text) + "' (expected json or csv)");
}

void Table::add_row(std::vector<Cell> row) {
    if (row.size() != columns.size()) {
        throw Error(ErrorCode::InvariantViolation, "row width does not match table columns");
    }
    rows.push_back(std::move(row));
}

std::string utc_timestamp_now() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string format_double(double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

std::string to_json(const ResultDocument& doc) {
    ordered_json root = ordered_json::object();
    root["manifest"] = manifest_object(doc.manifest);
    root["results"] = table_json(doc.results);
    if (doc.records) root["records"] = table_json(*doc.records);
    return root.dump(2) + "\n";
}

std::string manifest_json(const RunManifest& manifest) {
    return manifest_object(manifest).dump(2) + "\n";
}

std::string to_csv(const Table& table) {
    std::string out;
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        if (c) out += ',';
        out += csv_escape(table.columns[c]);
    }
    out += "\r\n";
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out += ',';
            out += cell_text(row[c]);
        }
        out += "\r\n";
    }
    return out;
}

ResultDocument cmd_cascade(Bb84Symbol state, std::uint64_t shots, std::uint64_t seed) {
    const CascadeResult cascade = propagate_cascade(make_bb84_state(state));
    const DetectorId predicted = khokhlov_predicted_detector(state);

    std::array<std::int64_t, 4> clicks{};
    const CounterRng rng(seed);
    for (std::uint64_t k = 0; k < shots; ++k) {
        const DetectorId hit = sample_detector(cascade.dist, rng.uniform(k, 1));
        ++clicks[static_cast<std::size_t>(hit)];
    }

    ResultDocument doc{make_manifest("cascade",
                                     {{"state", std::string(to_string(state))},
                                      {"shots", static_cast<std::int64_t>(shots)}},
                                     seed),
                       {{"state", "detector", "probability", "khokhlov_predicted",
                         "predicted_detector", "clicks"},
                        {}},
                       std::nullopt};
    for (DetectorId id : kDetectorOrder) {
        const Cell clicks_cell =
            shots > 0 ? Cell{clicks[static_cast<std::size_t>(id)]} : Cell{nullptr};
        doc.results.add_row({std::string(to_string(state)), std::string(to_string(id)),
                             cascade.dist[id], id == predicted, std::string(to_string(predicted)),
                             clicks_cell});
    }
    return doc;
}

ResultDocument cmd_sweep_sigma(double min, double max, std::size_t steps,
                               std::size_t quadrature_points) {
    if (!(min > 0.0) || !(max > min)) throw UsageError("sweep range must satisfy 0 < min < max");
    if (steps < 2) throw UsageError("--steps must be at least 2");
    if (quadrature_points < 2) throw UsageError("--quadrature-points must be at least 2");

    const std::vector<double> grid = log_spaced_grid(min, max, steps);
    ResultDocument doc{make_manifest("sweep-sigma",
                                     {{"min", min},
                                      {"max", max},
                                      {"steps", count_cell(steps)},
                                      {"quadrature_points", count_cell(quadrature_points)}},
                                     std::nullopt),
                       {{"sigma", "info_gain", "avg_fidelity_D"}, {}},
                       std::nullopt};
    for (const TradeoffRow& row : tradeoff_curve(grid, quadrature_points)) {
        doc.results.add_row({row.sigma, row.info_gain, row.avg_fidelity_d});
    }
    return doc;
}

ResultDocument cmd_bb84(std::size_t pulses, const EveStrategy& eve, std::uint64_t seed,
                        bool emit_records, Fault fault, const RunOptions& options) {
    const SessionResult session =
        run_session(SessionConfig{pulses, eve, seed, fault}, options);
    const ExactResult exact = enumerate_exact(eve);
    const SessionStats& s = session.stats;

    std::vector<Parameter> params{{"pulses", count_cell(pulses)},
                                  {"eve", std::string(to_string(eve.kind()))},
                                  {"sigma", opt_cell(eve.sigma())},
                                  {"emit_records", emit_records}};
    ResultDocument doc{make_manifest("bb84", std::move(params), seed),
                       {{"source", "strategy", "sigma", "n_pulses", "n_sifted", "qber",
                         "qber_rectilinear", "qber_diagonal", "eve_accuracy",
                         "eve_mutual_information", "empty_session"},
                        {}},
                       std::nullopt};
    const std::string strategy(to_string(eve.kind()));
    const Cell mi = s.eve_accuracy ? Cell{eve_mutual_information(*s.eve_accuracy)} : Cell{nullptr};
    doc.results.add_row({std::string("monte_carlo"), strategy, opt_cell(eve.sigma()),
                         count_cell(s.n_pulses), count_cell(s.n_sifted), opt_cell(s.qber),
                         opt_cell(s.qber_by_basis[0]), opt_cell(s.qber_by_basis[1]),
                         opt_cell(s.eve_accuracy), mi, s.empty_session()});
    doc.results.add_row({std::string("exact"), strategy, opt_cell(eve.sigma()), nullptr, nullptr,
                         exact.qber, exact.qber_by_basis[0], exact.qber_by_basis[1],
                         exact.eve_accuracy, eve_mutual_information(exact.eve_accuracy), false});

    if (emit_records) {
        Table records{{"pulse", "alice_bit", "alice_basis", "alice_symbol", "eve_guess_bit",
                       "eve_detector", "eve_p0", "bob_basis", "bob_bit", "sifted"},
                      {}};
        records.rows.reserve(session.records.size());
        for (std::size_t i = 0; i < session.records.size(); ++i) {
            const PulseRecord& r = session.records[i];
            const Cell guess = r.eve_guess_bit ? Cell{std::int64_t{*r.eve_guess_bit}} : Cell{nullptr};
            const Cell det =
                r.eve_detector ? Cell{std::string(to_string(*r.eve_detector))} : Cell{nullptr};
            records.add_row({count_cell(i), std::int64_t{r.alice_bit},
                             std::string(to_string(r.alice_basis)),
                             std::string(to_string(r.alice_symbol)), guess, det,
                             opt_cell(r.eve_p0), std::string(to_string(r.bob_basis)),
                             std::int64_t{r.bob_bit}, r.sifted});
        }
        doc.records = std::move(records);
    }
    return doc;
}

namespace {

// A command-line option that may also be supplied by the --config file.
struct Field {
    std::string key;
    CLI::Option* opt;
    std::function<void(const nlohmann::json&)> assign;
    bool from_config = false;

    bool present() const { return opt->count() > 0 || from_config; }
};

template <typename T>
Field field(CLI::App& app, const std::string& key, T& target, const std::string& help) {
    CLI::Option* opt = app.add_option("--" + key, target, help);
    return {key, opt, [&target](const nlohmann::json& v) { target = v.get<T>(); }};
}

Field flag_field(CLI::App& app, const std::string& key, bool& target, const std::string& help) {
    CLI::Option* opt = app.add_flag("--" + key, target, help);
    return {key, opt, [&target](const nlohmann::json& v) { target = v.get<bool>(); }};
}

void apply_config(const std::string& path, std::vector<Field>& fields) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file '" + path + "'");
    nlohmann::json cfg;
    try {
        cfg = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    if (!cfg.is_object()) throw UsageError("config file must hold a JSON object");
    for (const auto& [raw_key, value] : cfg.items()) {
        std::string key = raw_key;
        std::replace(key.begin(), key.end(), '_', '-');
        auto it = std::find_if(fields.begin(), fields.end(),
                               [&](const Field& f) { return f.key == key; });
        if (it == fields.end()) throw UsageError("unknown config key '" + raw_key + "'");
        if (it->opt->count() > 0) continue;  // explicit flag wins
        try {
            it->assign(value);
        } catch (const nlohmann::json::exception& e) {
            throw UsageError("config key '" + raw_key + "' has the wrong type: " + e.what());
        }
        it->from_config = true;
    }
}

const Field& get(const std::vector<Field>& fields, const std::string& key) {
    return *std::find_if(fields.begin(), fields.end(), [&](const Field& f) { return f.key == key; });
}

void require(const std::vector<Field>& fields, std::initializer_list<const char*> keys) {
    for (const char* key : keys) {
        if (!get(fields, key).present()) throw UsageError(std::string("--") + key + " is required");
    }
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
    f << text;
    if (!f) throw std::runtime_error("failed writing '" + path.string() + "'");
}

void emit(const ResultDocument& doc, OutputFormat format, const std::string& output,
          std::ostream& out) {
    if (format == OutputFormat::Json) {
        if (output.empty()) {
            out << to_json(doc);
        } else {
            write_file(output, to_json(doc));
        }
        return;
    }
    if (output.empty()) {
        out << to_csv(doc.results);
        return;
    }
    std::filesystem::path path(output);
    write_file(path, to_csv(doc.results));
    std::filesystem::path sidecar = path;
    write_file(sidecar.replace_extension(".manifest.json"), manifest_json(doc.manifest));
    if (doc.records) {
        std::filesystem::path rec = path;
        write_file(rec.replace_extension(".records.csv"), to_csv(*doc.records));
    }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Single-photon BB84 attack simulator: interferometric cascade, weak "
                 "measurement tradeoff, and Monte Carlo BB84 sessions."};
    app.require_subcommand(1);

    std::string format_text = "json";
    std::string output;
    std::string config_path;
    auto add_common = [&](CLI::App* sub, std::vector<Field>& fields) {
        fields.push_back(field(*sub, "format", format_text, "Output format: json or csv"));
        sub->add_option("-o,--output", output, "Write results to a file instead of stdout");
        sub->add_option("--config", config_path, "JSON file mirroring the flags");
    };

    // cascade
    CLI::App* cascade = app.add_subcommand("cascade", "Exact detector distribution of the cascade");
    std::string state_text;
    std::uint64_t shots = 0;
    std::uint64_t cascade_seed = 0;
    std::vector<Field> cascade_fields;
    cascade_fields.push_back(field(*cascade, "state", state_text, "Input state: H, V, D or A"));
    cascade_fields.push_back(field(*cascade, "shots", shots, "Sampled clicks (0: exact only)"));
    cascade_fields.push_back(field(*cascade, "seed", cascade_seed, "Seed for sampled clicks"));
    add_common(cascade, cascade_fields);

    // sweep-sigma
    CLI::App* sweep = app.add_subcommand("sweep-sigma", "Information gain vs disturbance over sigma");
    double sweep_min = 0.0;
    double sweep_max = 0.0;
    std::size_t steps = 0;
    std::size_t quadrature_points = 2000;
    std::vector<Field> sweep_fields;
    sweep_fields.push_back(field(*sweep, "min", sweep_min, "Smallest sigma"));
    sweep_fields.push_back(field(*sweep, "max", sweep_max, "Largest sigma"));
    sweep_fields.push_back(field(*sweep, "steps", steps, "Number of log-spaced sigma values"));
    sweep_fields.push_back(
        field(*sweep, "quadrature-points", quadrature_points, "Trapezoid nodes per fidelity"));
    add_common(sweep, sweep_fields);

    // bb84
    CLI::App* bb84 = app.add_subcommand("bb84", "Monte Carlo BB84 session with an eavesdropper");
    std::size_t pulses = 0;
    std::string eve_text;
    double sigma = 0.0;
    std::uint64_t bb84_seed = 0;
    bool emit_records = false;
    std::string fault_text;
    std::vector<Field> bb84_fields;
    bb84_fields.push_back(field(*bb84, "pulses", pulses, "Number of pulses"));
    bb84_fields.push_back(field(*bb84, "eve", eve_text, "none, intercept, cascade or weak"));
    bb84_fields.push_back(field(*bb84, "sigma", sigma, "Pointer width for --eve weak"));
    bb84_fields.push_back(field(*bb84, "seed", bb84_seed, "Session seed"));
    bb84_fields.push_back(flag_field(*bb84, "emit-records", emit_records, "Include per-pulse records"));
    bb84->add_option("--fault", fault_text)->group("");
    add_common(bb84, bb84_fields);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        std::vector<Field>* fields = cascade->parsed() ? &cascade_fields
                                     : sweep->parsed() ? &sweep_fields
                                                       : &bb84_fields;
        if (!config_path.empty()) apply_config(config_path, *fields);
        const OutputFormat format = parse_format(format_text);

        ResultDocument doc;
        if (cascade->parsed()) {
            require(*fields, {"state"});
            Bb84Symbol symbol;
            try {
                symbol = parse_symbol(state_text);
            } catch (const Error& e) {
                throw UsageError(e.what());
            }
            doc = cmd_cascade(symbol, shots, cascade_seed);
        } else if (sweep->parsed()) {
            require(*fields, {"min", "max", "steps"});
            doc = cmd_sweep_sigma(sweep_min, sweep_max, steps, quadrature_points);
        } else {
            require(*fields, {"pulses", "eve", "seed"});
            if (pulses < 1) throw UsageError("--pulses must be at least 1");
            const std::optional<double> sig =
                get(*fields, "sigma").present() ? std::optional<double>(sigma) : std::nullopt;
            const EveStrategy eve = EveStrategy::parse(eve_text, sig);
            if (emit_records && format == OutputFormat::Csv && output.empty()) {
                throw UsageError("--emit-records with --format csv needs --output");
            }
            Fault fault = Fault::None;
            if (fault_text == "assume-claimed-detector") {
                fault = Fault::AssumeClaimedDetector;
            } else if (!fault_text.empty()) {
                throw UsageError("unknown fault '" + fault_text + "'");
            }
            doc = cmd_bb84(pulses, eve, bb84_seed, emit_records, fault, run_options_from_env());
        }
        doc.manifest.parameters.push_back({"format", format_text});
        emit(doc, format, output, out);
        return kExitOk;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return e.code() == ErrorCode::InvariantViolation ? kExitInvariant : kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}

}  // namespace bb84sim::cli
