#include "eventid/core.hpp"

#include <algorithm>
#include <charconv>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace eventid {

const char* channel_name(Channel c) {
    switch (c) {
        case Channel::Vm: return "Vm";
        case Channel::Va: return "Va";
        case Channel::F: return "F";
    }
    return "?";
}

Channel channel_from_name(const std::string& name) {
    for (Channel c : kChannels)
        if (name == channel_name(c)) return c;
    throw FormatError("unknown channel name: " + name);
}

const char* split_name(Split s) {
    switch (s) {
        case Split::Test: return "TEST";
        case Split::TrainLr: return "TRAIN_LR";
        case Split::TrainGb: return "TRAIN_GB";
    }
    return "?";
}

Split split_from_name(const std::string& name) {
    if (name == "TEST") return Split::Test;
    if (name == "TRAIN_LR") return Split::TrainLr;
    if (name == "TRAIN_GB") return Split::TrainGb;
    throw FormatError("unknown split name: " + name);
}

void EventWindow::validate() const {
    check_label(label);
    if (ts <= 0.0) throw FormatError("event " + id + ": sample period must be > 0");
    const auto rows = samples[0].rows();
    const auto cols = samples[0].cols();
    if (rows < 1 || cols < 1) throw FormatError("event " + id + ": empty sample block");
    for (int c = 1; c < kNumChannels; ++c) {
        if (samples[c].rows() != rows || samples[c].cols() != cols)
            throw FormatError("event " + id + ": channel " +
                              channel_name(static_cast<Channel>(c)) +
                              " geometry differs from Vm");
    }
}

FeatureLayout::Coord FeatureLayout::describe(int index) const {
    if (index < 0 || index >= dim()) throw InvalidCount("feature index out of range");
    const int per = per_channel();
    const Channel c = static_cast<Channel>(index / per);
    int r = index % per;
    if (r < p_prime) return {c, FeatureClass::Omega, r, -1};
    r -= p_prime;
    if (r < p_prime) return {c, FeatureClass::Sigma, r, -1};
    r -= p_prime;
    if (r < p_prime * m_prime) return {c, FeatureClass::ResidueMag, r / m_prime, r % m_prime};
    r -= p_prime * m_prime;
    return {c, FeatureClass::ResidueAngle, r / m_prime, r % m_prime};
}

std::vector<const EventWindow*> Dataset::events_in(Split s) const {
    std::vector<const EventWindow*> out;
    for (const auto& e : events) {
        auto it = split_assignment.find(e.id);
        if (it != split_assignment.end() && it->second == s) out.push_back(&e);
    }
    return out;
}

Dataset split_dataset(std::vector<EventWindow> events, std::uint64_t seed) {
    if (events.size() < 10) throw TooFewEvents("need at least 10 events to split");
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < events.size(); ++i) {
        check_label(events[i].label);
        (events[i].label == kLabelGenLoss ? pos : neg).push_back(i);
    }
    if (pos.empty() || neg.empty()) throw TooFewEvents("both labels must be present");

    Dataset d;
    std::mt19937_64 rng(seed);
    for (auto* group : {&pos, &neg}) {
        std::shuffle(group->begin(), group->end(), rng);
        const std::size_t n = group->size();
        std::size_t n_test = static_cast<std::size_t>(std::llround(0.2 * static_cast<double>(n)));
        std::size_t n_lr = static_cast<std::size_t>(std::llround(0.4 * static_cast<double>(n)));
        n_test = std::max<std::size_t>(n_test, 1);
        n_lr = std::max<std::size_t>(n_lr, 1);
        if (n_test + n_lr + 1 > n)
            throw TooFewEvents("a split would receive zero events of one class");
        for (std::size_t i = 0; i < n; ++i) {
            Split s = i < n_test ? Split::Test : (i < n_test + n_lr ? Split::TrainLr : Split::TrainGb);
            d.split_assignment[events[(*group)[i]].id] = s;
        }
    }
    d.events = std::move(events);
    return d;
}

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(const std::string& tok, const std::string& where) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size())
        throw FormatError(where + ": bad number '" + tok + "'");
    return v;
}

}  // namespace

void save_dataset(const Dataset& d, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    for (const auto& e : d.events) {
        e.validate();
        out << "event " << e.id << ' ' << e.label << ' ' << fmt_double(e.ts) << ' '
            << e.num_pmus() << ' ' << e.num_samples() << '\n';
        for (Channel c : kChannels) {
            const auto& m = e.channel(c);
            for (Eigen::Index i = 0; i < m.rows(); ++i) {
                for (Eigen::Index n = 0; n < m.cols(); ++n) {
                    if (n) out << ' ';
                    out << fmt_double(m(i, n));
                }
                out << '\n';
            }
        }
    }
    if (!out) throw IoError("write failed: " + path);
    out.close();

    std::ofstream man(path + ".splits");
    if (!man) throw IoError("cannot open for writing: " + path + ".splits");
    for (const auto& [id, s] : d.split_assignment) man << id << ' ' << split_name(s) << '\n';
    if (!man) throw IoError("write failed: " + path + ".splits");
}

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);

    Dataset d;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream hdr(line);
        std::string tag;
        hdr >> tag;
        if (tag != "event")
            throw FormatError(path + ":" + std::to_string(lineno) + ": expected 'event' header");
        EventWindow e;
        int m = 0, n = 0;
        std::string ts_tok;
        if (!(hdr >> e.id >> e.label >> ts_tok >> m >> n))
            throw FormatError(path + ":" + std::to_string(lineno) + ": malformed event header");
        e.ts = parse_double(ts_tok, path + ":" + std::to_string(lineno));
        if (m < 1 || n < 1)
            throw FormatError(path + ":" + std::to_string(lineno) + ": event " + e.id +
                              " has invalid geometry");
        for (Channel c : kChannels) {
            Eigen::MatrixXd& mat = e.channel(c);
            mat.resize(m, n);
            for (int i = 0; i < m; ++i) {
                if (!std::getline(in, line))
                    throw FormatError(path + ": event " + e.id + ": truncated sample block for channel " +
                                      channel_name(c));
                ++lineno;
                std::istringstream row(line);
                std::string tok;
                int col = 0;
                while (row >> tok) {
                    if (col >= n)
                        throw FormatError(path + ":" + std::to_string(lineno) + ": event " + e.id +
                                          ": too many samples in row");
                    mat(i, col++) = parse_double(tok, path + ":" + std::to_string(lineno));
                }
                if (col != n)
                    throw FormatError(path + ":" + std::to_string(lineno) + ": event " + e.id +
                                      ": channel row has " + std::to_string(col) + " samples, expected " +
                                      std::to_string(n));
            }
        }
        e.validate();
        d.events.push_back(std::move(e));
    }
    if (d.events.empty()) throw FormatError(path + ": no events found");

    std::ifstream man(path + ".splits");
    if (!man) throw IoError("cannot open: " + path + ".splits");
    std::size_t mline = 0;
    while (std::getline(man, line)) {
        ++mline;
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string id, sname;
        if (!(row >> id >> sname))
            throw FormatError(path + ".splits:" + std::to_string(mline) + ": malformed record");
        d.split_assignment[id] = split_from_name(sname);
    }
    return d;
}

}  // namespace eventid
