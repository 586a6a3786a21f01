#include "dataset.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "error.hpp"

namespace timebridge {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    cells.push_back(cur);
    return cells;
}

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

bool parse_double(const std::string& cell, double& out) {
    const std::string t = trim(cell);
    if (t.empty()) return false;
    const char* begin = t.data();
    const char* end = t.data() + t.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    if (ec != std::errc() || ptr != end) return false;
    return std::isfinite(out);
}

bool iequals(const std::string& a, const char* b) {
    std::size_t i = 0;
    for (; i < a.size() && b[i]; ++i) {
        if (std::tolower(static_cast<unsigned char>(a[i])) !=
            std::tolower(static_cast<unsigned char>(b[i])))
            return false;
    }
    return i == a.size() && b[i] == '\0';
}

}  // namespace

std::vector<double> TimeSeriesFrame::channel(std::int64_t c) const {
    std::vector<double> out(static_cast<std::size_t>(rows()));
    for (std::int64_t t = 0; t < rows(); ++t) out[static_cast<std::size_t>(t)] = at(t, c);
    return out;
}

TimeSeriesFrame load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open CSV file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw parse_error("empty CSV file: " + path);
    std::vector<std::string> header = split_line(line);
    for (auto& h : header) h = trim(h);
    if (header.empty() || (header.size() == 1 && header[0].empty())) {
        throw parse_error("CSV header row is empty: " + path);
    }

    const bool has_date = iequals(header[0], "date");
    const std::size_t first_value_col = has_date ? 1 : 0;
    if (header.size() <= first_value_col) {
        throw parse_error("CSV has no value columns: " + path);
    }

    TimeSeriesFrame frame;
    frame.channel_names.assign(header.begin() + static_cast<std::ptrdiff_t>(first_value_col),
                               header.end());
    const std::size_t n_cols = frame.channel_names.size();

    std::vector<double> data;
    std::int64_t row = 0;  // 1-based data row in error messages
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++row;
        std::vector<std::string> cells = split_line(line);
        if (cells.size() != header.size()) {
            throw parse_error("row " + std::to_string(row) + ": expected " +
                              std::to_string(header.size()) + " cells, got " +
                              std::to_string(cells.size()));
        }
        if (has_date) frame.timestamps.push_back(trim(cells[0]));
        for (std::size_t c = 0; c < n_cols; ++c) {
            double v;
            if (!parse_double(cells[first_value_col + c], v)) {
                throw parse_error("row " + std::to_string(row) + ", column \"" +
                                  frame.channel_names[c] + "\": cannot parse \"" +
                                  trim(cells[first_value_col + c]) + "\" as a finite number");
            }
            data.push_back(v);
        }
    }
    if (row == 0) throw parse_error("CSV has a header but no data rows: " + path);
    frame.values = Tensor({row, static_cast<std::int64_t>(n_cols)}, std::move(data));
    return frame;
}

void save_csv(const TimeSeriesFrame& frame, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open file for writing: " + path);
    const bool has_date = !frame.timestamps.empty();
    if (has_date) out << "date";
    for (std::size_t c = 0; c < frame.channel_names.size(); ++c) {
        if (has_date || c > 0) out << ",";
        out << frame.channel_names[c];
    }
    out << "\n";
    char buf[64];
    for (std::int64_t t = 0; t < frame.rows(); ++t) {
        if (has_date) out << frame.timestamps[static_cast<std::size_t>(t)];
        for (std::int64_t c = 0; c < frame.cols(); ++c) {
            if (has_date || c > 0) out << ",";
            // 17 significant digits round-trips every float64 exactly
            std::snprintf(buf, sizeof(buf), "%.17g", frame.at(t, c));
            out << buf;
        }
        out << "\n";
    }
    if (!out) throw io_error("write failed: " + path);
}

SplitFrames chronological_split(const TimeSeriesFrame& frame, const SplitSpec& spec) {
    const std::int64_t T = frame.rows();
    if (spec.train <= 0 || spec.val <= 0 || spec.test <= 0) {
        throw config_error("split lengths/ratios must all be positive");
    }
    std::int64_t n_train, n_val, n_test;
    if (spec.is_ratios()) {
        n_train = static_cast<std::int64_t>(spec.train * static_cast<double>(T));
        n_val = static_cast<std::int64_t>(spec.val * static_cast<double>(T));
        n_test = static_cast<std::int64_t>(spec.test * static_cast<double>(T));
    } else {
        auto whole = [](double v, const char* which) {
            if (v != std::floor(v)) {
                throw config_error(std::string("split ") + which +
                                   " must be an integer length or a ratio < 1");
            }
            return static_cast<std::int64_t>(v);
        };
        n_train = whole(spec.train, "train");
        n_val = whole(spec.val, "val");
        n_test = whole(spec.test, "test");
    }
    if (n_train < 1 || n_val < 1 || n_test < 1 || n_train + n_val + n_test > T) {
        throw config_error("split (" + std::to_string(n_train) + "," + std::to_string(n_val) +
                           "," + std::to_string(n_test) + ") does not fit series of length " +
                           std::to_string(T));
    }

    auto take = [&](std::int64_t begin, std::int64_t len) {
        TimeSeriesFrame part;
        part.channel_names = frame.channel_names;
        Tensor vals({len, frame.cols()});
        for (std::int64_t t = 0; t < len; ++t) {
            if (!frame.timestamps.empty())
                part.timestamps.push_back(frame.timestamps[static_cast<std::size_t>(begin + t)]);
            for (std::int64_t c = 0; c < frame.cols(); ++c) vals.at(t, c) = frame.at(begin + t, c);
        }
        part.values = std::move(vals);
        return part;
    };

    SplitFrames out;
    out.train = take(0, n_train);
    out.val = take(n_train, n_val);
    out.test = take(n_train + n_val, n_test);
    return out;
}

ChannelStats compute_stats(const TimeSeriesFrame& train) {
    const std::int64_t T = train.rows(), C = train.cols();
    ChannelStats stats;
    stats.mean.resize(static_cast<std::size_t>(C));
    stats.std.resize(static_cast<std::size_t>(C));
    for (std::int64_t c = 0; c < C; ++c) {
        double m = 0.0;
        for (std::int64_t t = 0; t < T; ++t) m += train.at(t, c);
        m /= static_cast<double>(T);
        double v = 0.0;
        for (std::int64_t t = 0; t < T; ++t) {
            const double d = train.at(t, c) - m;
            v += d * d;
        }
        v /= static_cast<double>(T);
        const double s = std::sqrt(v);
        if (s == 0.0) {
            throw degenerate_error("channel \"" + train.channel_names[static_cast<std::size_t>(c)] +
                                   "\" has zero variance in the train split");
        }
        stats.mean[static_cast<std::size_t>(c)] = m;
        stats.std[static_cast<std::size_t>(c)] = s;
    }
    return stats;
}

TimeSeriesFrame standardize(const TimeSeriesFrame& frame, const ChannelStats& stats) {
    if (static_cast<std::int64_t>(stats.mean.size()) != frame.cols()) {
        throw dimension_error("standardize: stats for " + std::to_string(stats.mean.size()) +
                              " channels, frame has " + std::to_string(frame.cols()));
    }
    TimeSeriesFrame out = frame;
    for (std::int64_t t = 0; t < frame.rows(); ++t)
        for (std::int64_t c = 0; c < frame.cols(); ++c)
            out.values.at(t, c) = (frame.at(t, c) - stats.mean[static_cast<std::size_t>(c)]) /
                                  stats.std[static_cast<std::size_t>(c)];
    return out;
}

TimeSeriesFrame unstandardize(const TimeSeriesFrame& frame, const ChannelStats& stats) {
    TimeSeriesFrame out = frame;
    for (std::int64_t t = 0; t < frame.rows(); ++t)
        for (std::int64_t c = 0; c < frame.cols(); ++c)
            out.values.at(t, c) = frame.at(t, c) * stats.std[static_cast<std::size_t>(c)] +
                                  stats.mean[static_cast<std::size_t>(c)];
    return out;
}

Tensor unstandardize_values(const Tensor& values_ct, const ChannelStats& stats) {
    if (values_ct.ndim() != 2 ||
        values_ct.dim(0) != static_cast<std::int64_t>(stats.mean.size())) {
        throw dimension_error("unstandardize_values: expected [C x n] with C = " +
                              std::to_string(stats.mean.size()));
    }
    Tensor out = values_ct;
    for (std::int64_t c = 0; c < out.dim(0); ++c)
        for (std::int64_t i = 0; i < out.dim(1); ++i)
            out.at(c, i) = values_ct.at(c, i) * stats.std[static_cast<std::size_t>(c)] +
                           stats.mean[static_cast<std::size_t>(c)];
    return out;
}

std::vector<Sample> windows(const TimeSeriesFrame& frame, std::int64_t input_len,
                            std::int64_t output_len, std::int64_t stride) {
    const std::int64_t T = frame.rows(), C = frame.cols();
    if (input_len < 1 || output_len < 1 || stride < 1) {
        throw config_error("windows: input_len, output_len and stride must be >= 1");
    }
    if (T < input_len + output_len) {
        throw config_error("windows: series length " + std::to_string(T) +
                           " is shorter than input+output " +
                           std::to_string(input_len + output_len));
    }
    const std::int64_t count = (T - input_len - output_len) / stride + 1;
    std::vector<Sample> out;
    out.reserve(static_cast<std::size_t>(count));
    for (std::int64_t k = 0; k < count; ++k) {
        const std::int64_t base = k * stride;
        Sample s;
        s.input = Tensor({C, input_len});
        s.target = Tensor({C, output_len});
        for (std::int64_t c = 0; c < C; ++c) {
            for (std::int64_t t = 0; t < input_len; ++t) s.input.at(c, t) = frame.at(base + t, c);
            for (std::int64_t t = 0; t < output_len; ++t)
                s.target.at(c, t) = frame.at(base + input_len + t, c);
        }
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace timebridge
