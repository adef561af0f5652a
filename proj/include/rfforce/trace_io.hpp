#pragma once

// Trace files. JSON Lines with keys t, epc, ch, f_mhz, phase_deg, rssi_dbm, or
// CSV with the same column order. Numbers are written in shortest round-trip
// form, so write -> read is lossless.

#include <algorithm>
#include <cctype>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rfforce/angles.hpp"
#include "rfforce/errors.hpp"
#include "rfforce/format.hpp"
#include "rfforce/link_sim.hpp"

namespace rfforce {

enum class trace_format { jsonl, csv };

inline trace_format parse_trace_format(const std::string& s) {
    if (s == "jsonl") return trace_format::jsonl;
    if (s == "csv") return trace_format::csv;
    throw input_error("unknown trace format '" + s + "' (expected jsonl or csv)");
}

inline constexpr const char* trace_csv_header = "t,epc,ch,f_mhz,phase_deg,rssi_dbm";

inline void write_trace_jsonl(std::ostream& out, const std::vector<TagReadRecord>& records) {
    for (const auto& r : records) {
        out << "{\"t\":" << format_double(r.timestamp) << ",\"epc\":" << nlohmann::json(r.epc).dump()
            << ",\"ch\":" << r.channel_index << ",\"f_mhz\":" << format_double(r.frequency / 1e6)
            << ",\"phase_deg\":" << format_double(r.phase_deg) << ",\"rssi_dbm\":" << format_double(r.rssi_dbm)
            << "}\n";
    }
}

inline void write_trace_csv(std::ostream& out, const std::vector<TagReadRecord>& records) {
    out << trace_csv_header << '\n';
    for (const auto& r : records) {
        out << format_double(r.timestamp) << ',' << r.epc << ',' << r.channel_index << ','
            << format_double(r.frequency / 1e6) << ',' << format_double(r.phase_deg) << ','
            << format_double(r.rssi_dbm) << '\n';
    }
}

inline void write_trace(std::ostream& out, const std::vector<TagReadRecord>& records, trace_format format) {
    if (format == trace_format::jsonl) write_trace_jsonl(out, records);
    else write_trace_csv(out, records);
}

inline std::vector<TagReadRecord> read_trace_jsonl(std::istream& in) {
    std::vector<TagReadRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            TagReadRecord r;
            r.timestamp = j.at("t").get<double>();
            r.epc = j.at("epc").get<std::string>();
            r.channel_index = j.at("ch").get<int>();
            r.frequency = j.at("f_mhz").get<double>() * 1e6;
            r.phase_deg = j.at("phase_deg").get<double>();
            r.rssi_dbm = j.at("rssi_dbm").get<double>();
            out.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw import_error(std::string("malformed trace record: ") + e.what(), lineno);
        }
    }
    return out;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.emplace_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

inline std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

}  // namespace detail

enum class phase_units { deg, raw4096 };

inline phase_units parse_phase_units(const std::string& s) {
    if (s == "deg") return phase_units::deg;
    if (s == "raw4096") return phase_units::raw4096;
    throw input_error("unknown phase units '" + s + "' (expected deg or raw4096)");
}

/// Reader export in CSV. Recognized column names (case-insensitive):
///   timestamp | t | time          seconds
///   epc
///   channel | ch | channel_index
///   phase | phase_deg | phase_raw
///   rssi | rssi_dbm
///   f_mhz | frequency_mhz          optional; otherwise from `plan`
/// raw4096 maps a reading v to v * 360 / 4096 degrees. Records are returned
/// sorted by timestamp (stable).
inline std::vector<TagReadRecord> import_reader_trace(std::istream& in, phase_units units,
                                                      const ChannelPlan& plan = default_channel_plan()) {
    std::string line;
    if (!std::getline(in, line)) throw import_error("empty file", 1);
    const auto header = detail::split_csv_line(line);

    std::map<std::string, std::size_t> col;
    auto bind = [&](const std::string& key, std::initializer_list<const char*> names) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            const auto h = detail::lower(header[i]);
            for (const char* n : names) {
                if (h == n) {
                    col[key] = i;
                    return;
                }
            }
        }
    };
    bind("t", {"timestamp", "t", "time"});
    bind("epc", {"epc"});
    bind("ch", {"channel", "ch", "channel_index"});
    bind("phase", {"phase", "phase_deg", "phase_raw"});
    bind("rssi", {"rssi", "rssi_dbm"});
    bind("f", {"f_mhz", "frequency_mhz"});
    for (const char* required : {"t", "epc", "ch", "phase", "rssi"}) {
        if (!col.count(required)) throw import_error(std::string("missing column '") + required + "'", 1);
    }

    std::vector<TagReadRecord> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size()) {
            throw import_error("expected " + std::to_string(header.size()) + " columns, got " +
                                   std::to_string(cells.size()),
                               lineno);
        }
        auto num = [&](const char* key) {
            auto v = parse_double(cells[col.at(key)]);
            if (!v) throw import_error(std::string("malformed ") + key + " value '" + cells[col.at(key)] + "'", lineno);
            return *v;
        };
        TagReadRecord r;
        r.timestamp = num("t");
        r.epc = cells[col.at("epc")];
        if (r.epc.empty()) throw import_error("empty epc", lineno);
        const auto ch = parse_int(cells[col.at("ch")]);
        if (!ch || *ch < 0) throw import_error("malformed channel index '" + cells[col.at("ch")] + "'", lineno);
        r.channel_index = static_cast<int>(*ch);
        const double phase = num("phase");
        r.phase_deg = units == phase_units::raw4096 ? phase * 360.0 / 4096.0 : phase;
        if (!(r.phase_deg >= 0.0 && r.phase_deg < 360.0)) {
            throw import_error("phase out of range [0, 360) degrees", lineno);
        }
        r.rssi_dbm = num("rssi");
        if (col.count("f")) r.frequency = num("f") * 1e6;
        else r.frequency = r.channel_index < plan.channel_count() ? plan.frequency(r.channel_index) : 0.0;
        out.push_back(std::move(r));
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const TagReadRecord& a, const TagReadRecord& b) { return a.timestamp < b.timestamp; });
    return out;
}

/// Reads either trace format; CSV is recognized by its header line.
inline std::vector<TagReadRecord> read_trace(std::istream& in) {
    const auto first = in.peek();
    if (first == '{' || first == std::char_traits<char>::eof()) return read_trace_jsonl(in);
    return import_reader_trace(in, phase_units::deg);
}

}  // namespace rfforce
