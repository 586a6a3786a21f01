#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace timebridge {

// Multivariate series, rows = time, columns = channels. Immutable after load.
struct TimeSeriesFrame {
    std::vector<std::string> channel_names;
    std::vector<std::string> timestamps;  // empty when the CSV has no date column
    Tensor values;                        // [T x C]

    std::int64_t rows() const { return values.dim(0); }
    std::int64_t cols() const { return values.dim(1); }
    double at(std::int64_t t, std::int64_t c) const { return values.at(t, c); }
    std::vector<double> channel(std::int64_t c) const;
};

// Chronological split; either absolute lengths or ratios, never mixed.
struct SplitSpec {
    double train = 0.7;
    double val = 0.1;
    double test = 0.2;

    // Values are ratios when all three are < 1, absolute lengths otherwise.
    bool is_ratios() const { return train < 1.0 && val < 1.0 && test < 1.0; }
};

struct SplitFrames {
    TimeSeriesFrame train;
    TimeSeriesFrame val;
    TimeSeriesFrame test;
};

struct ChannelStats {
    std::vector<double> mean;  // per channel
    std::vector<double> std;   // per channel, population convention (ddof = 0)
};

struct Sample {
    Tensor input;   // [C x I]
    Tensor target;  // [C x O]
};

// CSV grammar: first row is a header; an optional leading column named "date"
// carries timestamps verbatim; every other column must parse as a float64.
// Any unparseable or missing cell aborts the load with its data row (1-based,
// header excluded) and column name.
TimeSeriesFrame load_csv(const std::string& path);
void save_csv(const TimeSeriesFrame& frame, const std::string& path);

SplitFrames chronological_split(const TimeSeriesFrame& frame, const SplitSpec& spec);

// z-scores every frame with the *train* statistics. Zero-variance train
// channels are an error naming the channel.
ChannelStats compute_stats(const TimeSeriesFrame& train);
TimeSeriesFrame standardize(const TimeSeriesFrame& frame, const ChannelStats& stats);
TimeSeriesFrame unstandardize(const TimeSeriesFrame& frame, const ChannelStats& stats);
Tensor unstandardize_values(const Tensor& values_ct, const ChannelStats& stats);  // [C x n]

// Sliding windows over one split: sample k covers input rows
// [k*stride, k*stride + I) and target rows [k*stride + I, k*stride + I + O).
// Samples are channel-major ([C x I] / [C x O]) to match the model input.
std::vector<Sample> windows(const TimeSeriesFrame& frame, std::int64_t input_len,
                            std::int64_t output_len, std::int64_t stride = 1);

}  // namespace timebridge
