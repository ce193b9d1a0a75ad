#pragma once
// Append-only run record. Serialized two ways: a flat CSV with fixed columns
// (time,level,event,agent_id,variable,value) for plotting, and a JSON-lines
// file carrying exact rational timestamps. Both writers are deterministic so
// identical runs produce byte-identical files.

#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlsim/core.hpp"
#include "mlsim/rational.hpp"

namespace mlsim {

struct LogRecord {
    Rational time;
    std::string level;
    std::string event;     // step, delta, inert, spawn, aggregate, disaggregate,
                           // conflict, frequency, demand, note
    std::string agent;     // body or agent id as decimal text; may be empty
    std::string variable;
    std::string value;
};

class RunLog {
public:
    void append(LogRecord rec) { records_.push_back(std::move(rec)); }

    void event(Rational t, const LevelId& level, std::string kind, std::string agent,
               std::string variable, std::string value) {
        records_.push_back({t, level.name, std::move(kind), std::move(agent), std::move(variable),
                            std::move(value)});
    }

    const std::vector<LogRecord>& records() const { return records_; }

    std::map<std::string, std::int64_t>& counters() { return counters_; }
    const std::map<std::string, std::int64_t>& counters() const { return counters_; }
    void bump(const std::string& key, std::int64_t by = 1) { counters_[key] += by; }

    std::string csv() const {
        std::string out = "time,level,event,agent_id,variable,value\n";
        for (const auto& r : records_) {
            out += format_double(r.time.to_double());
            out += ',';
            out += r.level;
            out += ',';
            out += r.event;
            out += ',';
            out += r.agent;
            out += ',';
            out += r.variable;
            out += ',';
            out += r.value;
            out += '\n';
        }
        return out;
    }

    std::string jsonl() const {
        std::string out;
        for (const auto& r : records_) {
            nlohmann::json j{{"t", r.time.str()},
                             {"tv", r.time.to_double()},
                             {"level", r.level},
                             {"event", r.event}};
            if (!r.agent.empty()) j["agent"] = r.agent;
            if (!r.variable.empty()) j["var"] = r.variable;
            if (!r.value.empty()) j["value"] = r.value;
            out += j.dump();
            out += '\n';
        }
        nlohmann::json tail{{"event", "summary"}, {"counters", counters_}};
        out += tail.dump();
        out += '\n';
        return out;
    }

    void write_csv(const std::string& path) const { write_file(path, csv()); }
    void write_jsonl(const std::string& path) const { write_file(path, jsonl()); }

private:
    static void write_file(const std::string& path, const std::string& content) {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw Error(Errc::io, "cannot open '" + path + "' for writing");
        f << content;
    }

    std::vector<LogRecord> records_;
    std::map<std::string, std::int64_t> counters_;
};

}  // namespace mlsim
