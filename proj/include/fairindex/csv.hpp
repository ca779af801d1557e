#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "fairindex/errors.hpp"
#include "fairindex/ledger.hpp"

// Plain comma-separated tables, UTF-8 with a header row, '.' as the
// decimal separator, no quoting (ids must not contain commas).
//
// funds.csv     time,fund_id,units,unit_value[,post_units,post_value,net_flow]
// prices.csv    time,asset_id,price
// holdings.csv  time,fund_id,asset_id,asset_units
// mergers.csv   time,absorbed,survivor,post_units
//
// post_units / post_value describe the state right after a unit split
// settled at that time; leave both empty when no split occurred. When
// only one is given the other follows from conservation of fund assets.
// When both are given and they disagree with conservation by more than
// one part in a thousand the row is rejected; smaller disagreements are
// treated as display rounding and the post value is rederived from the
// post unit count. Once any net_flow cell is filled, the column counts
// as recorded for every fund and empty cells read as zero.

namespace fairindex {

namespace detail {

inline std::string csv_context(const std::string& name, std::size_t line) {
    return name + ":" + std::to_string(line);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(field);
            field.clear();
        } else {
            field += c;
        }
    }
    fields.push_back(field);
    for (auto& f : fields) {
        const auto b = f.find_first_not_of(" \t\r");
        const auto e = f.find_last_not_of(" \t\r");
        f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
    }
    return fields;
}

inline double parse_csv_double(const std::string& field, const std::string& ctx,
                               const char* column) {
    double value = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || field.empty() || !std::isfinite(value))
        throw ParseError(ctx + ": bad " + std::string(column) + " '" + field + "'");
    return value;
}

inline Time parse_csv_time(const std::string& field, const std::string& ctx) {
    int value = 0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || field.empty() || value < 0)
        throw ParseError(ctx + ": bad time '" + field + "'");
    return static_cast<Time>(value);
}

/// Shortest decimal text that parses back to exactly the same double.
inline std::string format_double(double x) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    if (ec != std::errc()) throw Error("number formatting failed");
    return std::string(buf, ptr);
}

/// Reads non-empty lines, each already split into trimmed fields.
inline std::vector<std::vector<std::string>> read_csv_rows(std::istream& in,
                                                           const std::string& name) {
    if (!in) throw MissingDataError("cannot read " + name);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        rows.push_back(split_csv_line(line));
    }
    if (rows.empty()) throw ParseError(name + ": empty file");
    return rows;
}

} // namespace detail

inline GroupHistory read_funds_csv(std::istream& in, const std::string& name) {
    const auto rows = detail::read_csv_rows(in, name);
    const auto& header = rows.front();
    static const std::vector<std::string> required = {"time", "fund_id", "units", "unit_value"};
    static const std::vector<std::string> optional_cols = {"post_units", "post_value", "net_flow"};
    if (header.size() < required.size())
        throw ParseError(name + ":1: header must start with time,fund_id,units,unit_value");
    for (std::size_t c = 0; c < required.size(); ++c)
        if (header[c] != required[c])
            throw ParseError(name + ":1: expected column '" + required[c] + "', got '" +
                             header[c] + "'");
    std::map<std::string, std::size_t> opt_index;
    {
        std::size_t next = 0;
        for (std::size_t c = required.size(); c < header.size(); ++c) {
            while (next < optional_cols.size() && optional_cols[next] != header[c]) ++next;
            if (next == optional_cols.size())
                throw ParseError(name + ":1: unknown or misplaced column '" + header[c] + "'");
            opt_index[header[c]] = c;
        }
    }

    struct ParsedRow {
        double units, value;
        std::optional<double> post_units, post_value, net_flow;
        std::size_t line;
    };
    std::vector<std::string> fund_order;
    std::map<std::string, std::map<Time, ParsedRow>> by_fund;
    bool any_flow = false;

    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        const std::string ctx = detail::csv_context(name, r + 1);
        if (row.size() != header.size())
            throw ParseError(ctx + ": expected " + std::to_string(header.size()) +
                             " fields, got " + std::to_string(row.size()));
        const Time t = detail::parse_csv_time(row[0], ctx);
        const std::string& id = row[1];
        if (id.empty()) throw ParseError(ctx + ": empty fund_id");
        ParsedRow p;
        p.line = r + 1;
        p.units = detail::parse_csv_double(row[2], ctx, "units");
        p.value = detail::parse_csv_double(row[3], ctx, "unit_value");
        auto optional_cell = [&](const char* col) -> std::optional<double> {
            auto it = opt_index.find(col);
            if (it == opt_index.end() || row[it->second].empty()) return std::nullopt;
            return detail::parse_csv_double(row[it->second], ctx, col);
        };
        p.post_units = optional_cell("post_units");
        p.post_value = optional_cell("post_value");
        p.net_flow = optional_cell("net_flow");
        if (p.net_flow) any_flow = true;
        if (by_fund.find(id) == by_fund.end()) fund_order.push_back(id);
        if (!by_fund[id].emplace(t, p).second)
            throw ParseError(ctx + ": duplicate row for fund '" + id + "' at time " +
                             std::to_string(t));
    }

    GroupHistory h;
    for (const auto& id : fund_order) {
        const auto& times = by_fund[id];
        FundLedger f;
        f.id = id;
        Time expected = 0;
        for (const auto& [t, p] : times) {
            if (t != expected)
                throw ParseError(name + ": fund '" + id + "' is missing time " +
                                 std::to_string(expected));
            ++expected;
            f.units.push_back(p.units);
            f.values.push_back(p.value);
            if (p.post_units || p.post_value) {
                const double before = p.units * p.value;
                double ku, wu;
                if (p.post_units && p.post_value) {
                    ku = *p.post_units;
                    wu = *p.post_value;
                    const double after = ku * wu;
                    if (std::abs(after - before) > 1e-3 * std::abs(before))
                        throw ParseError(detail::csv_context(name, p.line) +
                                         ": post_units * post_value does not conserve fund "
                                         "assets");
                    if (std::abs(after - before) > FundLedger::split_conservation_tol *
                                                       std::abs(before))
                        wu = before / ku;  // display rounding; unit count is authoritative
                } else if (p.post_units) {
                    ku = *p.post_units;
                    wu = before / ku;
                } else {
                    wu = *p.post_value;
                    ku = before / wu;
                }
                if (!(ku > 0.0) || !(wu > 0.0))
                    throw ParseError(detail::csv_context(name, p.line) +
                                     ": post-split state must be positive");
                f.post[t] = SplitState{ku, wu};
            }
            if (any_flow) f.net_flows.push_back(p.net_flow.value_or(0.0));
        }
        h.funds.push_back(std::move(f));
    }
    // Ledger-level rules (positive cells, conserving splits) count as
    // input errors when the data came from a file.
    try {
        h.validate();
    } catch (const Error& e) {
        throw ParseError(name + ": " + e.what());
    }
    return h;
}

inline MarketPath read_prices_csv(std::istream& in, const std::string& name) {
    const auto rows = detail::read_csv_rows(in, name);
    if (rows.front() != std::vector<std::string>{"time", "asset_id", "price"})
        throw ParseError(name + ":1: header must be time,asset_id,price");
    std::vector<std::string> order;
    std::map<std::string, std::map<Time, double>> by_asset;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        const std::string ctx = detail::csv_context(name, r + 1);
        if (row.size() != 3) throw ParseError(ctx + ": expected 3 fields");
        const Time t = detail::parse_csv_time(row[0], ctx);
        if (row[1].empty()) throw ParseError(ctx + ": empty asset_id");
        if (by_asset.find(row[1]) == by_asset.end()) order.push_back(row[1]);
        if (!by_asset[row[1]].emplace(t, detail::parse_csv_double(row[2], ctx, "price")).second)
            throw ParseError(ctx + ": duplicate price for '" + row[1] + "' at time " +
                             std::to_string(t));
    }
    MarketPath m;
    m.asset_ids = order;
    Time T = -1;
    for (const auto& id : order) {
        const Time last = by_asset[id].rbegin()->first;
        if (T < 0) T = last;
        if (last != T || static_cast<std::size_t>(last) + 1 != by_asset[id].size())
            throw ParseError(name + ": asset '" + id + "' does not cover times 0.." +
                             std::to_string(T));
    }
    m.prices.assign(static_cast<std::size_t>(T) + 1, std::vector<double>(order.size()));
    for (std::size_t j = 0; j < order.size(); ++j)
        for (const auto& [t, price] : by_asset[order[j]])
            m.prices[static_cast<std::size_t>(t)][j] = price;
    m.validate();
    return m;
}

/// Attaches asset positions to an already loaded group. The group must
/// carry the market path the asset ids refer to.
inline void read_holdings_csv(GroupHistory& h, std::istream& in, const std::string& name) {
    if (!h.market) throw MissingDataError("holdings need the market path loaded first");
    const auto rows = detail::read_csv_rows(in, name);
    if (rows.front() != std::vector<std::string>{"time", "fund_id", "asset_id", "asset_units"})
        throw ParseError(name + ":1: header must be time,fund_id,asset_id,asset_units");
    const std::size_t n_assets = h.market->asset_ids.size();
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        const std::string ctx = detail::csv_context(name, r + 1);
        if (row.size() != 4) throw ParseError(ctx + ": expected 4 fields");
        const Time t = detail::parse_csv_time(row[0], ctx);
        std::size_t fi, aj;
        try {
            fi = h.fund_index(row[1]);
            aj = h.market->asset_index(row[2]);
        } catch (const Error& e) {
            throw ParseError(ctx + ": " + e.what());
        }
        FundLedger& f = h.funds[fi];
        if (!f.covers(t))
            throw ParseError(ctx + ": fund '" + f.id + "' has no observation at time " +
                             std::to_string(t));
        if (f.holdings.empty()) f.holdings.resize(f.units.size());
        auto& slot = f.holdings[static_cast<std::size_t>(t)];
        if (slot.empty()) slot.assign(n_assets, 0.0);
        slot[aj] = detail::parse_csv_double(row[3], ctx, "asset_units");
    }
    h.validate();
}

inline std::vector<MergerEvent> read_mergers_csv(std::istream& in, const std::string& name) {
    const auto rows = detail::read_csv_rows(in, name);
    if (rows.front() != std::vector<std::string>{"time", "absorbed", "survivor", "post_units"})
        throw ParseError(name + ":1: header must be time,absorbed,survivor,post_units");
    std::vector<MergerEvent> events;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        const std::string ctx = detail::csv_context(name, r + 1);
        if (row.size() != 4) throw ParseError(ctx + ": expected 4 fields");
        MergerEvent ev;
        ev.time = detail::parse_csv_time(row[0], ctx);
        ev.absorbed = row[1];
        ev.survivor = row[2];
        ev.post_units = detail::parse_csv_double(row[3], ctx, "post_units");
        if (ev.absorbed.empty() || ev.survivor.empty())
            throw ParseError(ctx + ": empty fund id");
        events.push_back(std::move(ev));
    }
    return events;
}

inline void write_funds_csv(std::ostream& out, const GroupHistory& h) {
    out << "time,fund_id,units,unit_value,post_units,post_value,net_flow\n";
    for (const auto& f : h.funds)
        for (Time t = 0; t <= f.horizon(); ++t) {
            out << t << ',' << f.id << ',' << detail::format_double(f.units_at(t)) << ','
                << detail::format_double(f.value_at(t)) << ',';
            if (f.has_split(t))
                out << detail::format_double(f.post_units_at(t)) << ','
                    << detail::format_double(f.post_value_at(t)) << ',';
            else
                out << ",,";
            if (f.has_net_flows())
                out << detail::format_double(f.net_flows[static_cast<std::size_t>(t)]);
            out << '\n';
        }
}

inline void write_prices_csv(std::ostream& out, const MarketPath& m) {
    out << "time,asset_id,price\n";
    for (Time t = 0; t <= m.horizon(); ++t)
        for (std::size_t j = 0; j < m.asset_ids.size(); ++j)
            out << t << ',' << m.asset_ids[j] << ','
                << detail::format_double(m.prices[static_cast<std::size_t>(t)][j]) << '\n';
}

inline void write_holdings_csv(std::ostream& out, const GroupHistory& h) {
    if (!h.market) throw MissingDataError("cannot write holdings without a market path");
    out << "time,fund_id,asset_id,asset_units\n";
    for (const auto& f : h.funds)
        for (Time t = 0; t <= f.horizon(); ++t) {
            if (!f.has_holdings_at(t)) continue;
            const auto& row = f.holdings[static_cast<std::size_t>(t)];
            for (std::size_t j = 0; j < row.size(); ++j)
                out << t << ',' << f.id << ',' << h.market->asset_ids[j] << ','
                    << detail::format_double(row[j]) << '\n';
        }
}

inline void write_mergers_csv(std::ostream& out, const std::vector<MergerEvent>& events) {
    out << "time,absorbed,survivor,post_units\n";
    for (const auto& ev : events)
        out << ev.time << ',' << ev.absorbed << ',' << ev.survivor << ','
            << detail::format_double(ev.post_units) << '\n';
}

namespace detail {

inline std::ifstream open_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingDataError("cannot open '" + path + "'");
    return in;
}

} // namespace detail

inline GroupHistory read_funds_file(const std::string& path) {
    auto in = detail::open_csv(path);
    return read_funds_csv(in, path);
}

inline MarketPath read_prices_file(const std::string& path) {
    auto in = detail::open_csv(path);
    return read_prices_csv(in, path);
}

inline std::vector<MergerEvent> read_mergers_file(const std::string& path) {
    auto in = detail::open_csv(path);
    return read_mergers_csv(in, path);
}

/// Loads a group from its fund table plus optional market and holdings
/// tables. Empty path strings mean "not provided".
inline GroupHistory load_history(const std::string& funds_path,
                                 const std::string& prices_path = "",
                                 const std::string& holdings_path = "") {
    GroupHistory h = read_funds_file(funds_path);
    if (!prices_path.empty()) {
        h.market = read_prices_file(prices_path);
        h.validate();
    }
    if (!holdings_path.empty()) {
        if (prices_path.empty())
            throw MissingDataError("holdings given without the market price table");
        auto in = detail::open_csv(holdings_path);
        read_holdings_csv(h, in, holdings_path);
    }
    return h;
}

} // namespace fairindex
