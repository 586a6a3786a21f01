#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <timebridge/timebridge.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("tb_capi_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

struct Config {
    tb_config* ptr = tb_config_new();
    ~Config() { tb_config_free(ptr); }
    void set(const char* key, const std::string& value) {
        REQUIRE(tb_config_set(ptr, key, value.c_str()) == TB_OK);
    }
};

std::string take(char* s) {
    REQUIRE(s != nullptr);
    std::string out(s);
    tb_string_free(s);
    return out;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("status names and version") {
    CHECK(std::string(tb_status_name(TB_OK)) == "ok");
    CHECK(std::string(tb_status_name(TB_ERR_CONFIG)) == "config_error");
    CHECK(std::string(tb_version()).size() > 0);
}

TEST_CASE("config handle: set, get, unknown keys, snapshot") {
    Config cfg;
    cfg.set("alpha", "0.2");
    char* value = nullptr;
    REQUIRE(tb_config_get(cfg.ptr, "alpha", &value) == TB_OK);
    CHECK(take(value) == "0.2");

    CHECK(tb_config_set(cfg.ptr, "bogus_key", "1") == TB_ERR_CONFIG);
    CHECK(std::string(tb_last_error()).find("bogus_key") != std::string::npos);
    CHECK(tb_config_set(cfg.ptr, "epochs", "many") == TB_ERR_CONFIG);

    char* text = nullptr;
    REQUIRE(tb_config_text(cfg.ptr, &text) == TB_OK);
    const std::string snapshot = take(text);
    CHECK(snapshot.find("alpha = 0.2") != std::string::npos);

    CHECK(tb_config_set(nullptr, "alpha", "0.1") == TB_ERR_INVALID_ARGUMENT);
}

TEST_CASE("config load_file round trips through the documented format") {
    TempDir tmp;
    const std::string path = tmp.file("cfg.cfg");
    {
        std::ofstream out(path);
        out << "input_len = 24\nalpha = 0.05\n";
    }
    Config cfg;
    REQUIRE(tb_config_load_file(cfg.ptr, path.c_str()) == TB_OK);
    char* v = nullptr;
    REQUIRE(tb_config_get(cfg.ptr, "input_len", &v) == TB_OK);
    CHECK(take(v) == "24");
    CHECK(tb_config_load_file(cfg.ptr, tmp.file("missing.cfg").c_str()) == TB_ERR_IO);
}

TEST_CASE("prop1 through the C API is deterministic and well formed") {
    char* a = nullptr;
    char* b = nullptr;
    REQUIRE(tb_cmd_prop1(4, 10, 0, 8, 1.0, 0, 2000, 7, &a) == TB_OK);
    REQUIRE(tb_cmd_prop1(4, 10, 0, 8, 1.0, 0, 2000, 7, &b) == TB_OK);
    const std::string ja = take(a), jb = take(b);
    CHECK(ja == jb);
    CHECK(ja.find("\"closed_form\"") != std::string::npos);
    CHECK(ja.find("\"monte_carlo\"") != std::string::npos);
    CHECK(ja.find("\"rel_err\"") != std::string::npos);

    char* bad = nullptr;
    CHECK(tb_cmd_prop1(0, 10, 0, 8, 1.0, 0, 2000, 7, &bad) == TB_ERR_CONFIG);
    CHECK(bad == nullptr);  // outputs untouched on failure
    CHECK(std::string(tb_last_error()).size() > 0);
}

TEST_CASE("adf synthetic through the C API") {
    char* out = nullptr;
    REQUIRE(tb_cmd_adf_synthetic("white_noise", 500, 3, 1.0, "constant", 0, 11, &out) == TB_OK);
    const std::string j = take(out);
    CHECK(j.find("\"mean_statistic\"") != std::string::npos);
    char* err = nullptr;
    CHECK(tb_cmd_adf_synthetic("sawtooth", 500, 3, 1.0, "constant", 0, 11, &err) == TB_ERR_CONFIG);
}

TEST_CASE("synth then eg through the C API") {
    TempDir tmp;
    const std::string csv = tmp.file("pair.csv");
    char* out = nullptr;
    REQUIRE(tb_cmd_synth("cointegrated_pair", 2000, 2, 1.0, 2.0, 0.5, 13, csv.c_str(), &out) ==
            TB_OK);
    take(out);
    char* eg = nullptr;
    REQUIRE(tb_cmd_eg_csv(csv.c_str(), "x", "y", 0.05, &eg) == TB_OK);
    const std::string j = take(eg);
    CHECK(j.find("\"cointegrated\": true") != std::string::npos);

    char* pc = nullptr;
    REQUIRE(tb_cmd_eg_pair_count(csv.c_str(), 0.05, &pc) == TB_OK);
    CHECK(take(pc).find("\"pair_count\": 2") != std::string::npos);
}

TEST_CASE("train, eval and checkpoint reuse through the C API") {
    TempDir tmp;
    const std::string csv = tmp.file("data.csv");
    char* out = nullptr;
    REQUIRE(tb_cmd_synth("trend_sinusoid", 160, 2, 1.0, 2.0, 0.5, 17, csv.c_str(), &out) == TB_OK);
    take(out);

    Config cfg;
    cfg.set("csv_path", csv);
    cfg.set("out_dir", tmp.file("run"));
    cfg.set("input_len", "12");
    cfg.set("output_len", "4");
    cfg.set("patch_len", "3");
    cfg.set("downsampled_patches", "2");
    cfg.set("hidden_dim", "4");
    cfg.set("ff_dim", "8");
    cfg.set("n_heads", "2");
    cfg.set("epochs", "2");
    cfg.set("batch_size", "16");
    cfg.set("seed", "23");

    char* train_json = nullptr;
    REQUIRE(tb_cmd_train(cfg.ptr, &train_json) == TB_OK);
    const std::string tj = take(train_json);
    CHECK(tj.find("\"command\": \"train\"") != std::string::npos);
    const std::string ckpt = tmp.file("run/model.ckpt");
    CHECK(fs::exists(ckpt));

    char* eval_json = nullptr;
    REQUIRE(tb_cmd_eval(cfg.ptr, ckpt.c_str(), "test", &eval_json) == TB_OK);
    const std::string ej = take(eval_json);
    CHECK(ej.find("\"standardized\"") != std::string::npos);
    CHECK(ej.find("\"raw\"") != std::string::npos);

    char* bad_eval = nullptr;
    CHECK(tb_cmd_eval(cfg.ptr, ckpt.c_str(), "bogus", &bad_eval) == TB_ERR_CONFIG);

    // determinism across full reruns: byte-identical checkpoints
    Config cfg2;
    char* text = nullptr;
    REQUIRE(tb_config_text(cfg.ptr, &text) == TB_OK);
    const std::string snapshot_path = tmp.file("snap.cfg");
    {
        std::ofstream snap(snapshot_path);
        snap << take(text);
    }
    REQUIRE(tb_config_load_file(cfg2.ptr, snapshot_path.c_str()) == TB_OK);
    REQUIRE(tb_config_set(cfg2.ptr, "out_dir", tmp.file("run_b").c_str()) == TB_OK);
    char* rerun = nullptr;
    REQUIRE(tb_cmd_train(cfg2.ptr, &rerun) == TB_OK);
    take(rerun);
    CHECK(slurp(ckpt) == slurp(tmp.file("run_b/model.ckpt")));
}

TEST_CASE("missing dataset path surfaces as a config error naming the key") {
    Config cfg;
    char* out = nullptr;
    CHECK(tb_cmd_train(cfg.ptr, &out) == TB_ERR_CONFIG);
    CHECK(std::string(tb_last_error()).find("csv_path") != std::string::npos);
}

TEST_CASE("gradcheck status reflects the threshold") {
    Config cfg;
    cfg.set("channels", "2");
    cfg.set("input_len", "12");
    cfg.set("output_len", "4");
    cfg.set("patch_len", "3");
    cfg.set("downsampled_patches", "2");
    cfg.set("hidden_dim", "4");
    cfg.set("ff_dim", "8");
    cfg.set("n_heads", "2");

    char* out = nullptr;
    REQUIRE(tb_cmd_gradcheck(cfg.ptr, &out) == TB_OK);
    CHECK(take(out).find("\"pass\": true") != std::string::npos);

    // an absurd threshold flips the status but still yields the report
    cfg.set("gradcheck_threshold", "1e-18");
    char* strict = nullptr;
    CHECK(tb_cmd_gradcheck(cfg.ptr, &strict) == TB_ERR_THRESHOLD);
    CHECK(take(strict).find("\"pass\": false") != std::string::npos);
    CHECK(std::string(tb_last_error()).find("max_rel_err") != std::string::npos);
}

TEST_CASE("backtest through the C API") {
    TempDir tmp;
    {
        std::ofstream pred(tmp.file("p.csv"));
        pred << "a,b\n0.01,0.02\n0.03,0.01\n0.02,0.02\n";
        std::ofstream real(tmp.file("r.csv"));
        real << "a,b\n0.01,0.02\n0.03,0.01\n0.02,0.02\n";
    }
    char* out = nullptr;
    REQUIRE(tb_cmd_backtest(tmp.file("p.csv").c_str(), tmp.file("r.csv").c_str(), nullptr, 1,
                            nullptr, &out) == TB_OK);
    const std::string j = take(out);
    CHECK(j.find("\"arr\"") != std::string::npos);
    CHECK(j.find("\"mdd\"") != std::string::npos);

    char* bad = nullptr;
    CHECK(tb_cmd_backtest(tmp.file("p.csv").c_str(), tmp.file("r.csv").c_str(), nullptr, 9,
                          nullptr, &bad) == TB_ERR_CONFIG);
}
