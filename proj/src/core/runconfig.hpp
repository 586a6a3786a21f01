#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "model.hpp"
#include "optim.hpp"

namespace timebridge {

// Flat `key = value` run configuration with a fixed schema: every key is
// typed and has a default; setting an unknown key or a malformed value is an
// error. Files use one pair per line, `#` starts a comment.
class RunConfig {
public:
    RunConfig();  // schema defaults

    void load_file(const std::string& path);
    void set(const std::string& key, const std::string& value);

    std::string get(const std::string& key) const;
    std::int64_t get_int(const std::string& key) const;
    double get_double(const std::string& key) const;
    bool get_bool(const std::string& key) const;

    // Snapshot in schema order, parseable by load_file.
    std::string to_text() const;

    ModelConfig model_config() const;  // channels from the `channels` key
    TrainConfig train_config() const;
    SplitSpec split_spec() const;

    static const std::vector<std::string>& keys();

private:
    std::vector<std::string> values_;  // aligned with the schema table
    std::size_t key_index(const std::string& key) const;
};

}  // namespace timebridge
