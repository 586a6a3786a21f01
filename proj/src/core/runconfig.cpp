#include "runconfig.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include "error.hpp"

namespace timebridge {

namespace {

enum class KeyType { integer, real, boolean, text, choice };

struct KeyDef {
    const char* name;
    KeyType type;
    const char* default_value;
    const char* choices;  // '|'-separated, for KeyType::choice
};

// Schema: one row per key. Order here is the snapshot order.
const KeyDef kSchema[] = {
    {"csv_path", KeyType::text, "", nullptr},
    {"out_dir", KeyType::text, "tb_out", nullptr},
    {"split_train", KeyType::real, "0.7", nullptr},
    {"split_val", KeyType::real, "0.1", nullptr},
    {"split_test", KeyType::real, "0.2", nullptr},
    {"window_stride", KeyType::integer, "1", nullptr},
    {"channels", KeyType::integer, "0", nullptr},
    {"input_len", KeyType::integer, "96", nullptr},
    {"output_len", KeyType::integer, "24", nullptr},
    {"patch_len", KeyType::integer, "8", nullptr},
    {"downsampled_patches", KeyType::integer, "0", nullptr},
    {"hidden_dim", KeyType::integer, "64", nullptr},
    {"ff_dim", KeyType::integer, "128", nullptr},
    {"n_integrated_layers", KeyType::integer, "1", nullptr},
    {"n_cointegrated_layers", KeyType::integer, "1", nullptr},
    {"n_heads", KeyType::integer, "8", nullptr},
    {"detrend_kernel", KeyType::integer, "0", nullptr},
    {"integrated_norm", KeyType::boolean, "true", nullptr},
    {"cointegrated_norm", KeyType::boolean, "false", nullptr},
    {"integrated_channel_mode", KeyType::choice, "ci", "ci|cd"},
    {"cointegrated_channel_mode", KeyType::choice, "cd", "ci|cd"},
    {"block_order", KeyType::choice, "integrated_first", "integrated_first|cointegrated_first"},
    {"learning_rate", KeyType::real, "1e-4", nullptr},
    {"adam_beta1", KeyType::real, "0.9", nullptr},
    {"adam_beta2", KeyType::real, "0.999", nullptr},
    {"adam_eps", KeyType::real, "1e-8", nullptr},
    {"epochs", KeyType::integer, "10", nullptr},
    {"batch_size", KeyType::integer, "32", nullptr},
    {"alpha", KeyType::real, "0.35", nullptr},
    {"seed", KeyType::integer, "42", nullptr},
    {"gradcheck_eps", KeyType::real, "1e-5", nullptr},
    {"gradcheck_threshold", KeyType::real, "1e-4", nullptr},
};

constexpr std::size_t kSchemaSize = sizeof(kSchema) / sizeof(kSchema[0]);

std::string strip(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

void check_value(const KeyDef& def, const std::string& value) {
    switch (def.type) {
        case KeyType::integer: {
            std::int64_t v;
            auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
            if (ec != std::errc() || p != value.data() + value.size())
                throw config_error("config key \"" + std::string(def.name) +
                                   "\" expects an integer, got \"" + value + "\"");
            break;
        }
        case KeyType::real: {
            double v;
            auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
            if (ec != std::errc() || p != value.data() + value.size() || !std::isfinite(v))
                throw config_error("config key \"" + std::string(def.name) +
                                   "\" expects a finite number, got \"" + value + "\"");
            break;
        }
        case KeyType::boolean:
            if (value != "true" && value != "false")
                throw config_error("config key \"" + std::string(def.name) +
                                   "\" expects true or false, got \"" + value + "\"");
            break;
        case KeyType::choice: {
            std::string choices(def.choices);
            std::size_t pos = 0;
            bool ok = false;
            while (pos != std::string::npos) {
                const auto next = choices.find('|', pos);
                const std::string option = choices.substr(
                    pos, next == std::string::npos ? std::string::npos : next - pos);
                if (option == value) ok = true;
                pos = next == std::string::npos ? next : next + 1;
            }
            if (!ok)
                throw config_error("config key \"" + std::string(def.name) + "\" must be one of " +
                                   choices + ", got \"" + value + "\"");
            break;
        }
        case KeyType::text:
            break;
    }
}

}  // namespace

RunConfig::RunConfig() {
    values_.reserve(kSchemaSize);
    for (const auto& def : kSchema) values_.emplace_back(def.default_value);
}

const std::vector<std::string>& RunConfig::keys() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& def : kSchema) v.emplace_back(def.name);
        return v;
    }();
    return names;
}

std::size_t RunConfig::key_index(const std::string& key) const {
    for (std::size_t i = 0; i < kSchemaSize; ++i)
        if (key == kSchema[i].name) return i;
    throw config_error("unknown config key \"" + key + "\"");
}

void RunConfig::set(const std::string& key, const std::string& value) {
    const std::size_t idx = key_index(key);
    const std::string v = strip(value);
    check_value(kSchema[idx], v);
    values_[idx] = v;
}

std::string RunConfig::get(const std::string& key) const { return values_[key_index(key)]; }

std::int64_t RunConfig::get_int(const std::string& key) const {
    return std::stoll(values_[key_index(key)]);
}

double RunConfig::get_double(const std::string& key) const {
    return std::stod(values_[key_index(key)]);
}

bool RunConfig::get_bool(const std::string& key) const {
    return values_[key_index(key)] == "true";
}

void RunConfig::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open config file: " + path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        const std::string stripped = strip(line);
        if (stripped.empty()) continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw parse_error(path + ":" + std::to_string(line_no) +
                              ": expected `key = value`, got \"" + stripped + "\"");
        }
        try {
            set(strip(stripped.substr(0, eq)), strip(stripped.substr(eq + 1)));
        } catch (const config_error& e) {
            throw config_error(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

std::string RunConfig::to_text() const {
    std::string out;
    for (std::size_t i = 0; i < kSchemaSize; ++i) {
        out += kSchema[i].name;
        out += " = ";
        out += values_[i];
        out += "\n";
    }
    return out;
}

ModelConfig RunConfig::model_config() const {
    ModelConfig c;
    c.channels = get_int("channels");
    c.input_len = get_int("input_len");
    c.output_len = get_int("output_len");
    c.patch_len = get_int("patch_len");
    c.downsampled_patches = get_int("downsampled_patches");
    c.hidden_dim = get_int("hidden_dim");
    c.ff_dim = get_int("ff_dim");
    c.n_integrated_layers = static_cast<int>(get_int("n_integrated_layers"));
    c.n_cointegrated_layers = static_cast<int>(get_int("n_cointegrated_layers"));
    c.n_heads = static_cast<int>(get_int("n_heads"));
    c.detrend_kernel = get_int("detrend_kernel");
    c.integrated_norm = get_bool("integrated_norm");
    c.cointegrated_norm = get_bool("cointegrated_norm");
    c.integrated_mode = channel_mode_from_name(get("integrated_channel_mode"));
    c.cointegrated_mode = channel_mode_from_name(get("cointegrated_channel_mode"));
    c.block_order = block_order_from_name(get("block_order"));
    return c;
}

TrainConfig RunConfig::train_config() const {
    TrainConfig t;
    t.learning_rate = get_double("learning_rate");
    t.adam_beta1 = get_double("adam_beta1");
    t.adam_beta2 = get_double("adam_beta2");
    t.adam_eps = get_double("adam_eps");
    t.epochs = static_cast<int>(get_int("epochs"));
    t.batch_size = static_cast<int>(get_int("batch_size"));
    t.alpha = get_double("alpha");
    t.seed = static_cast<std::uint64_t>(get_int("seed"));
    return t;
}

SplitSpec RunConfig::split_spec() const {
    SplitSpec s;
    s.train = get_double("split_train");
    s.val = get_double("split_val");
    s.test = get_double("split_test");
    return s;
}

}  // namespace timebridge
