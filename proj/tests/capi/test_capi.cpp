#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "rnnorbit/rnnorbit.h"

namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const char* name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str(const char* child = nullptr) const {
        return child ? (path / child).string() : path.string();
    }
};

void write(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

// Simple repetitive text with enough variety to build a vocabulary.
std::string small_corpus() {
    static const char* nouns[] = {"garden", "river", "house", "window", "table"};
    static const char* verbs[] = {"opened", "watched", "carried", "followed"};
    std::string text;
    for (int i = 0; i < 900; ++i) {
        text += "the ";
        text += nouns[i % 5];
        text += " ";
        text += verbs[(i * 7) % 4];
        text += " the ";
        text += nouns[(i * 3) % 5];
        text += (i % 4 == 0) ? " .\n" : " ,\n";
    }
    return text;
}

// Trains a tiny model and returns the checkpoint path.
std::string train_fixture(const TempDir& dir) {
    write(dir.str("corpus.txt"), small_corpus());
    write(dir.str("config.txt"),
          "corpus = " + dir.str("corpus.txt") + "\n" +
              "arch = vanilla\n"
              "hidden_size = 8\n"
              "embed_size = 6\n"
              "window = 10\n"
              "batch_size = 4\n"
              "max_epochs = 2\n"
              "checkpoint_epochs = 0,2\n"
              "seed = 5\n"
              "min_count = 1\n");
    REQUIRE(ro_train(dir.str("config.txt").c_str(), dir.str("run").c_str()) == RO_OK);
    return dir.str("run/vanilla_epoch2.ckpt");
}

}  // namespace

TEST_CASE("version and error strings are always available") {
    REQUIRE(ro_version() != nullptr);
    CHECK(std::strlen(ro_version()) > 0);
    REQUIRE(ro_last_error() != nullptr);
}

TEST_CASE("ro_train validates arguments and reports failures") {
    CHECK(ro_train(nullptr, "/tmp/x") == RO_ERR_USAGE);
    CHECK(std::strlen(ro_last_error()) > 0);
    TempDir dir("rnnorbit_capi_badtrain");
    CHECK(ro_train(dir.str("missing_config.txt").c_str(), dir.str("out").c_str()) ==
          RO_ERR_USAGE);
}

TEST_CASE("full train/open/analyze/report cycle") {
    TempDir dir("rnnorbit_capi_cycle");
    const std::string ckpt = train_fixture(dir);
    const std::string vocab = dir.str("run/vocab.txt");
    REQUIRE(fs::exists(ckpt));
    REQUIRE(fs::exists(vocab));

    ro_model* model = ro_model_open(ckpt.c_str(), vocab.c_str());
    REQUIRE(model != nullptr);

    ro_model_info info;
    REQUIRE(ro_model_get_info(model, &info) == RO_OK);
    CHECK(std::string(info.arch) == "vanilla");
    CHECK(info.epoch == 2);
    CHECK(info.hidden_size == 8);
    CHECK(info.embed_size == 6);
    CHECK(info.vocab_size > 0);
    CHECK(info.val_perplexity > 0.0);

    ro_analyze_opts opts;
    std::memset(&opts, 0, sizeof opts);
    opts.mode = "without-input";
    opts.detect_steps = 400;
    opts.verify_steps = 800;
    opts.count = 4;
    opts.seed = 1;
    opts.dump_trajectories = 1;
    const std::string csv = dir.str("verdicts.csv");
    REQUIRE(ro_analyze(model, &opts, csv.c_str(), dir.str("dumps").c_str()) == RO_OK);
    REQUIRE(fs::exists(csv));

    const std::string dump = dir.str("dumps/vanilla_without-input_epoch2_cond0.traj");
    REQUIRE(fs::exists(dump));

    const char* verdicts[] = {csv.c_str()};
    const char* dumps[] = {dump.c_str()};
    REQUIRE(ro_report(verdicts, 1, dumps, 1, dir.str("report").c_str()) == RO_OK);
    CHECK(fs::exists(dir.str("report/table_without-input.csv")));
    CHECK(fs::exists(dir.str("report/vanilla_without-input_epoch2_cond0.svg")));

    ro_model_close(model);
}

TEST_CASE("ro_model_open rejects a mismatched vocabulary") {
    TempDir dir("rnnorbit_capi_mismatch");
    const std::string ckpt = train_fixture(dir);
    write(dir.str("other_vocab.txt"), "# rnnorbit vocab v1\nalpha\n<unk>\n");
    CHECK(ro_model_open(ckpt.c_str(), dir.str("other_vocab.txt").c_str()) == nullptr);
    CHECK(std::strlen(ro_last_error()) > 0);
    CHECK(ro_model_open(dir.str("nope.ckpt").c_str(), dir.str("run/vocab.txt").c_str()) ==
          nullptr);
    CHECK(ro_model_open(nullptr, nullptr) == nullptr);
}

TEST_CASE("ro_analyze and ro_report argument validation") {
    TempDir dir("rnnorbit_capi_args");
    const std::string ckpt = train_fixture(dir);
    ro_model* model = ro_model_open(ckpt.c_str(), dir.str("run/vocab.txt").c_str());
    REQUIRE(model != nullptr);

    ro_analyze_opts opts;
    std::memset(&opts, 0, sizeof opts);
    opts.mode = "sideways";  // not a mode
    CHECK(ro_analyze(model, &opts, dir.str("v.csv").c_str(), nullptr) == RO_ERR_USAGE);
    CHECK(ro_analyze(nullptr, &opts, dir.str("v.csv").c_str(), nullptr) == RO_ERR_USAGE);
    opts.mode = "without-input";
    opts.count = 0;  // without-input needs a count
    opts.detect_steps = 400;
    opts.verify_steps = 800;
    CHECK(ro_analyze(model, &opts, dir.str("v.csv").c_str(), nullptr) == RO_ERR_USAGE);
    CHECK(ro_analyze(model, &opts, nullptr, nullptr) == RO_ERR_USAGE);

    CHECK(ro_report(nullptr, 2, nullptr, 0, dir.str("r").c_str()) == RO_ERR_USAGE);
    CHECK(ro_report(nullptr, 0, nullptr, 0, dir.str("r").c_str()) == RO_ERR_USAGE);
    CHECK(ro_report(nullptr, 0, nullptr, 0, nullptr) == RO_ERR_USAGE);

    ro_model_close(model);
    ro_model_close(nullptr);  // must be a no-op
}
