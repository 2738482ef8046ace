#include "flash/workload.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "flash/rng.hpp"

namespace flash {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

std::int64_t parse_int(const std::string& token, const char* what, std::size_t line) {
    try {
        std::size_t pos = 0;
        long long v = std::stoll(token, &pos);
        if (pos != token.size()) throw std::invalid_argument(what);
        return v;
    } catch (const std::exception&) {
        throw ParseError(std::string("bad ") + what + " '" + token + "'", line);
    }
}

}  // namespace

std::vector<TraceRecord> load_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open trace file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("missing header", 1);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "sender,receiver,volume,timestamp")
        throw ParseError("expected header 'sender,receiver,volume,timestamp'", 1);

    std::vector<TraceRecord> records;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != 4) throw ParseError("expected 4 fields", lineno);
        TraceRecord rec;
        rec.sender = fields[0];
        rec.receiver = fields[1];
        rec.volume = parse_int(fields[2], "volume", lineno);
        rec.timestamp = parse_int(fields[3], "timestamp", lineno);
        if (rec.volume <= 0) throw ParseError("volume must be positive", lineno);
        if (rec.sender == rec.receiver) throw ParseError("sender equals receiver", lineno);
        if (rec.sender.empty() || rec.receiver.empty())
            throw ParseError("empty endpoint id", lineno);
        records.push_back(std::move(rec));
    }
    return records;
}

void save_trace(const std::vector<TraceRecord>& records, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write trace file: " + path);
    out << "sender,receiver,volume,timestamp\n";
    for (const auto& r : records)
        out << r.sender << ',' << r.receiver << ',' << r.volume << ',' << r.timestamp << '\n';
}

Amount percentile_threshold(const std::vector<Amount>& volumes, double q) {
    if (volumes.empty()) throw InvalidParameter("percentile of empty input");
    if (!(q > 0.0 && q < 1.0)) throw InvalidParameter("percentile q must be in (0,1)");
    std::vector<Amount> sorted = volumes;
    std::sort(sorted.begin(), sorted.end());
    // The 1e-9 guard keeps q*N that is an exact integer from ceiling up
    // when the product lands one ulp high.
    std::size_t rank = static_cast<std::size_t>(
        std::ceil(q * static_cast<double>(sorted.size()) - 1e-9));
    if (rank == 0) rank = 1;
    if (rank > sorted.size()) rank = sorted.size();
    return sorted[rank - 1];
}

std::vector<Payment> sample_payments(const std::vector<TraceRecord>& records,
                                     std::size_t n, const Topology& topology,
                                     Pairing pairing, std::uint64_t seed) {
    if (records.empty()) throw InvalidParameter("empty trace");
    if (topology.node_count() < 2) throw InvalidParameter("topology too small");
    const auto graph = topology.connectivity();
    const auto& nodes = topology.nodes();

    // Stable injection: the i-th distinct trace identity gets the i-th
    // entry of a seeded node permutation, wrapping if identities exceed
    // nodes (the injection then degrades to a many-to-one map).
    std::vector<NodeId> permuted = nodes;
    Rng map_rng = Rng::derive(seed, 0x6d6170);  // "map"
    map_rng.shuffle(permuted);
    std::map<std::string, NodeId> identity_map;
    auto map_identity = [&](const std::string& id) {
        auto it = identity_map.find(id);
        if (it != identity_map.end()) return it->second;
        NodeId node = permuted[identity_map.size() % permuted.size()];
        identity_map.emplace(id, node);
        return node;
    };

    constexpr int kMaxResample = 10'000;
    Rng rng = Rng::derive(seed, 0x736d70);  // "smp"
    std::vector<Payment> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Payment p;
        p.id = i;
        p.seq = i;
        bool ok = false;
        for (int attempt = 0; attempt < kMaxResample; ++attempt) {
            if (pairing == Pairing::TracePairsMapped) {
                const TraceRecord& rec = records[rng.below(records.size())];
                p.sender = map_identity(rec.sender);
                p.receiver = map_identity(rec.receiver);
                p.demand = rec.volume;
            } else {
                p.sender = nodes[rng.below(nodes.size())];
                p.receiver = nodes[rng.below(nodes.size())];
                p.demand = records[rng.below(records.size())].volume;
            }
            if (p.sender == p.receiver) continue;
            if (!graph.reachable(p.sender, p.receiver)) continue;
            ok = true;
            break;
        }
        if (!ok) throw InvalidParameter("no path-connected endpoint pair found");
        out.push_back(p);
    }
    return out;
}

std::vector<CdfRow> size_cdf(const std::vector<TraceRecord>& records) {
    if (records.empty()) throw InvalidParameter("empty trace");
    std::vector<Amount> volumes;
    volumes.reserve(records.size());
    for (const auto& r : records) volumes.push_back(r.volume);
    std::sort(volumes.begin(), volumes.end());

    double total = 0.0;
    for (Amount v : volumes) total += static_cast<double>(v);

    std::vector<CdfRow> rows;
    rows.reserve(volumes.size());
    double cum = 0.0;
    for (std::size_t i = 0; i < volumes.size(); ++i) {
        cum += static_cast<double>(volumes[i]);
        rows.push_back(CdfRow{volumes[i],
                              static_cast<double>(i + 1) / static_cast<double>(volumes.size()),
                              cum / total});
    }
    return rows;
}

std::vector<WindowStats> recurrence_stats(std::vector<TraceRecord> records,
                                          std::int64_t window_seconds, bool ordered) {
    if (window_seconds <= 0) throw InvalidParameter("window must be positive");
    std::stable_sort(records.begin(), records.end(),
                     [](const TraceRecord& a, const TraceRecord& b) {
                         return a.timestamp < b.timestamp;
                     });

    std::vector<WindowStats> out;
    std::size_t i = 0;
    while (i < records.size()) {
        std::int64_t start =
            records[i].timestamp - ((records[i].timestamp % window_seconds + window_seconds) %
                                    window_seconds);
        std::size_t j = i;
        while (j < records.size() && records[j].timestamp < start + window_seconds) ++j;

        std::map<std::pair<std::string, std::string>, std::size_t> pair_count;
        // sender -> (receiver -> recurring transaction count)
        std::map<std::string, std::map<std::string, std::size_t>> recurring_to;
        std::size_t recurring = 0;
        for (std::size_t t = i; t < j; ++t) {
            auto key = std::make_pair(records[t].sender, records[t].receiver);
            if (!ordered && key.second < key.first) std::swap(key.first, key.second);
            if (pair_count[key]++ > 0) {
                ++recurring;
                ++recurring_to[records[t].sender][records[t].receiver];
            }
        }

        double share_sum = 0.0;
        std::size_t senders = 0;
        for (const auto& [sender, to] : recurring_to) {
            std::vector<std::size_t> counts;
            std::size_t total = 0;
            for (const auto& [recv, c] : to) {
                counts.push_back(c);
                total += c;
            }
            std::sort(counts.rbegin(), counts.rend());
            std::size_t top5 = 0;
            for (std::size_t r = 0; r < counts.size() && r < 5; ++r) top5 += counts[r];
            share_sum += static_cast<double>(top5) / static_cast<double>(total);
            ++senders;
        }

        WindowStats w;
        w.window_start = start;
        w.transactions = j - i;
        w.recurring_fraction = static_cast<double>(recurring) / static_cast<double>(j - i);
        w.top5_share = senders == 0 ? 0.0 : share_sum / static_cast<double>(senders);
        out.push_back(w);
        i = j;
    }
    return out;
}

std::vector<TraceRecord> synthetic_trace(std::size_t count, std::uint64_t seed,
                                         const SyntheticConfig& config) {
    if (config.identities < 2) throw InvalidParameter("need at least 2 identities");
    // Pareto tail fitted to two anchors: the top decile of payments holds
    // 94.5% of total volume (fixes the shape a) and the median payment is
    // 480 units (fixes the scale xm): share = 0.1^(1 - 1/a).
    const double shape = 1.0 / (1.0 - std::log(0.945) / std::log(0.1));
    const double scale = 480.0 / std::pow(2.0, 1.0 / shape);

    Rng rng = Rng::derive(seed, 0x747263);  // "trc"
    std::vector<TraceRecord> records;
    records.reserve(count);
    // Per-sender receiver history for preferential reattachment.
    std::map<std::string, std::vector<std::string>> history;
    for (std::size_t i = 0; i < count; ++i) {
        TraceRecord rec;
        std::size_t s = rng.below(config.identities);
        rec.sender = "n" + std::to_string(s);
        auto& past = history[rec.sender];
        if (!past.empty() && rng.chance(config.recur_probability)) {
            rec.receiver = past[rng.below(past.size())];
        } else {
            std::size_t r = rng.below(config.identities - 1);
            if (r >= s) ++r;
            rec.receiver = "n" + std::to_string(r);
        }
        past.push_back(rec.receiver);

        double u = rng.uniform();
        double x = scale * std::pow(1.0 - u, -1.0 / shape);
        Amount volume = static_cast<Amount>(std::llround(x));
        if (volume < 1) volume = 1;
        if (volume > config.max_volume) volume = config.max_volume;
        rec.volume = volume;
        rec.timestamp = static_cast<std::int64_t>(i) * config.interval_seconds;
        records.push_back(std::move(rec));
    }
    return records;
}

}  // namespace flash
