#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "helpers.hpp"
#include "hst/archive.hpp"
#include "hst/cli.hpp"

using namespace hst;
using testutil::TempDir;

namespace {

struct CliResult {
    int code = -1;
    std::string out, err;
};

CliResult run(std::vector<std::string> args) {
    std::vector<const char*> argv{"hstloc"};
    for (const auto& a : args) argv.push_back(a.c_str());

    std::ostringstream out, err;
    auto* old_out = std::cout.rdbuf(out.rdbuf());
    auto* old_err = std::cerr.rdbuf(err.rdbuf());
    CliResult res;
    res.code = cli::run_cli(static_cast<int>(argv.size()), argv.data());
    std::cout.rdbuf(old_out);
    std::cerr.rdbuf(old_err);
    res.out = out.str();
    res.err = err.str();
    return res;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string write_file(const TempDir& dir, const std::string& name, const std::string& text) {
    const std::string path = dir.str(name);
    std::ofstream(path) << text;
    return path;
}

// Feather-weight run config against the tiny synthetic site.
std::string tiny_config(const std::string& model, const std::string& cache,
                        const std::string& out, int stages, unsigned seed = 5) {
    std::ostringstream cfg;
    cfg << R"({"model": ")" << model << R"(", "seed": )" << seed << ",\n"
        << R"("data": {"cache_dir": ")" << cache << R"("}, "output_dir": ")" << out << "\",\n"
        << R"("sae": {"encoder_widths": [8], "learning_rate": 1e-3, "batch_size": 16,)"
        << R"( "max_epochs": 2, "early_stop": false},)" << "\n"
        << R"("dnn": {"common_widths": [8], "location_hidden": 8},)" << "\n"
        << R"("cnn": {"building_hidden": [8], "conv": [[4, 3], [2, 2]]},)" << "\n"
        << R"("stages": [)";
    for (int i = 0; i < stages; ++i) {
        if (i) cfg << ", ";
        cfg << R"({"learning_rate": 1e-3, "batch_size": 16, "max_epochs": 2,)"
            << R"( "early_stop": false})";
    }
    cfg << "]}";
    return cfg.str();
}

std::string synth_site_json() {
    return R"({"buildings": 1, "floors_per_building": [2], "num_aps": 12,
               "train_records": 120, "test_records": 24})";
}

}  // namespace

TEST_CASE("cli: --help exits 0, bad flags and commands exit 2") {
    CHECK(run({"--help"}).code == cli::kExitOk);
    CHECK(run({"synth", "--help"}).code == cli::kExitOk);
    CHECK(run({"frobnicate"}).code == cli::kExitConfig);
    CHECK(run({"train"}).code == cli::kExitConfig);  // missing required --config
    CHECK(run({}).code == cli::kExitConfig);         // subcommand required
}

TEST_CASE("cli: synth writes a cache and is deterministic") {
    TempDir dir("cli");
    const auto site = write_file(dir, "site.json", synth_site_json());

    const auto r1 = run({"synth", "--site", site, "--seed", "3", "--out", dir.str("c1")});
    REQUIRE(r1.code == cli::kExitOk);
    CHECK(r1.out == "train=120 test=24\n");
    CHECK(std::filesystem::exists(dir.str("c1/train.bin")));
    CHECK(std::filesystem::exists(dir.str("c1/test.bin")));
    CHECK(std::filesystem::exists(dir.str("c1/manifest.json")));

    // rerun without --force refuses; with --force reproduces identical bytes
    CHECK(run({"synth", "--site", site, "--seed", "3", "--out", dir.str("c1")}).code ==
          cli::kExitConfig);
    const std::string manifest = slurp(dir.str("c1/manifest.json"));
    const auto r2 = run({"synth", "--site", site, "--seed", "3", "--out", dir.str("c1"),
                         "--force"});
    REQUIRE(r2.code == cli::kExitOk);
    CHECK(slurp(dir.str("c1/manifest.json")) == manifest);

    // same seed, fresh directory: identical dataset bytes
    run({"synth", "--site", site, "--seed", "3", "--out", dir.str("c2")});
    CHECK(slurp(dir.str("c1/train.bin")) == slurp(dir.str("c2/train.bin")));
    // different seed: different data
    run({"synth", "--site", site, "--seed", "4", "--out", dir.str("c3")});
    CHECK(slurp(dir.str("c1/train.bin")) != slurp(dir.str("c3/train.bin")));
}

TEST_CASE("cli: prepare-data with a missing csv leaves no partial cache") {
    TempDir dir("cli");
    const auto r = run({"prepare-data", "--train-csv", dir.str("no.csv"), "--test-csv",
                        dir.str("no2.csv"), "--out", dir.str("cache")});
    CHECK(r.code == cli::kExitData);
    CHECK_FALSE(std::filesystem::exists(dir.str("cache")));
}

TEST_CASE("cli: train produces stage archives, manifest, losses and timing") {
    TempDir dir("cli");
    const auto site = write_file(dir, "site.json", synth_site_json());
    REQUIRE(run({"synth", "--site", site, "--seed", "3", "--out", dir.str("cache")}).code == 0);

    SUBCASE("linked-dnn: two stage archives; reruns are bit-identical") {
        const auto cfg = write_file(dir, "dnn.json",
                                    tiny_config("linked-dnn", dir.str("cache"), dir.str("r1"), 2));
        const auto r = run({"train", "--config", cfg, "--mode", "hst"});
        REQUIRE(r.code == cli::kExitOk);
        CHECK(std::filesystem::exists(dir.str("r1/sae.weights.json")));
        CHECK(std::filesystem::exists(dir.str("r1/stage1.weights.json")));
        CHECK(std::filesystem::exists(dir.str("r1/stage2.weights.json")));
        CHECK_FALSE(std::filesystem::exists(dir.str("r1/stage3.weights.json")));
        CHECK(std::filesystem::exists(dir.str("r1/model.json")));
        CHECK(std::filesystem::exists(dir.str("r1/timing.json")));
        CHECK(std::filesystem::exists(dir.str("r1/loss_sae.csv")));
        CHECK(std::filesystem::exists(dir.str("r1/loss_stage1.csv")));

        const auto manifest = nlohmann::json::parse(slurp(dir.str("r1/model.json")));
        CHECK(manifest.at("model") == "linked-dnn");
        CHECK(manifest.at("stages").size() == 2);

        // same config and seed -> identical archives
        const auto cfg2 = write_file(dir, "dnn2.json",
                                     tiny_config("linked-dnn", dir.str("cache"), dir.str("r2"), 2));
        REQUIRE(run({"train", "--config", cfg2}).code == cli::kExitOk);
        CHECK(slurp(dir.str("r1/stage1.weights.json")) == slurp(dir.str("r2/stage1.weights.json")));
        CHECK(slurp(dir.str("r1/stage2.weights.json")) == slurp(dir.str("r2/stage2.weights.json")));

        // different seed -> different weights
        const auto cfg3 = write_file(dir, "dnn3.json",
                                     tiny_config("linked-dnn", dir.str("cache"), dir.str("r3"), 2,
                                                 99));
        REQUIRE(run({"train", "--config", cfg3}).code == cli::kExitOk);
        CHECK(slurp(dir.str("r1/stage2.weights.json")) != slurp(dir.str("r3/stage2.weights.json")));

        // --seed flag overrides the config seed
        const auto cfg4 = write_file(dir, "dnn4.json",
                                     tiny_config("linked-dnn", dir.str("cache"), dir.str("r4"), 2,
                                                 99));
        REQUIRE(run({"train", "--config", cfg4, "--seed", "5"}).code == cli::kExitOk);
        CHECK(slurp(dir.str("r1/stage2.weights.json")) == slurp(dir.str("r4/stage2.weights.json")));
    }

    SUBCASE("linked-cnnloc: three stage archives") {
        const auto cfg = write_file(dir, "cnn.json",
                                    tiny_config("linked-cnnloc", dir.str("cache"), dir.str("rc"),
                                                3));
        REQUIRE(run({"train", "--config", cfg}).code == cli::kExitOk);
        CHECK(std::filesystem::exists(dir.str("rc/stage3.weights.json")));
        const auto archive = io::load_weights_archive(dir.str("rc/stage3.weights.json"));
        CHECK(archive.model == "linked-cnnloc");
        CHECK(archive.stage == 3);
        CHECK(archive.blocks.count("E_L") == 1);
        CHECK(archive.blocks.count("C_L") == 1);
        CHECK(archive.blocks.count("H_L") == 1);
    }

    SUBCASE("mode mismatch is a config error") {
        const auto cfg = write_file(dir, "m.json",
                                    tiny_config("linked-dnn", dir.str("cache"), dir.str("rm"), 2));
        const auto r = run({"train", "--config", cfg, "--mode", "reference"});
        CHECK(r.code == cli::kExitConfig);
        CHECK_FALSE(std::filesystem::exists(dir.str("rm")));
    }

    SUBCASE("missing cache directory is a data error") {
        const auto cfg = write_file(dir, "d.json",
                                    tiny_config("linked-dnn", dir.str("nocache"), dir.str("rd"),
                                                2));
        CHECK(run({"train", "--config", cfg}).code == cli::kExitData);
        CHECK_FALSE(std::filesystem::exists(dir.str("rd")));
    }

    SUBCASE("HST_DATA_DIR overrides the configured cache dir") {
        const auto cfg = write_file(dir, "e.json",
                                    tiny_config("linked-dnn", dir.str("nocache"), dir.str("re"),
                                                2));
        setenv("HST_DATA_DIR", dir.str("cache").c_str(), 1);
        const int code = run({"train", "--config", cfg}).code;
        unsetenv("HST_DATA_DIR");
        CHECK(code == cli::kExitOk);
        CHECK(std::filesystem::exists(dir.str("re/model.json")));
    }
}

TEST_CASE("cli: evaluate and report round trip") {
    TempDir dir("cli");
    const auto site = write_file(dir, "site.json", synth_site_json());
    REQUIRE(run({"synth", "--site", site, "--seed", "3", "--out", dir.str("cache")}).code == 0);
    const auto bad_cfg = write_file(dir, "bad.json",
                                    tiny_config("linked-dnnloc", dir.str("cache"),
                                                dir.str("run_dnn"), 2));
    CHECK(run({"train", "--config", bad_cfg}).code == cli::kExitConfig);

    const auto dnn_cfg = write_file(dir, "dnn.json",
                                    tiny_config("linked-dnn", dir.str("cache"), dir.str("run_dnn"),
                                                2));
    REQUIRE(run({"train", "--config", dnn_cfg}).code == cli::kExitOk);

    const auto ref_cfg = write_file(dir, "ref.json",
                                    tiny_config("reference-dnn", dir.str("cache"),
                                                dir.str("run_ref"), 1));
    REQUIRE(run({"train", "--config", ref_cfg}).code == cli::kExitOk);

    SUBCASE("evaluate writes reports and prints the table") {
        const auto r = run({"evaluate", "--weights", dir.str("run_dnn"), "--data",
                            dir.str("cache")});
        REQUIRE(r.code == cli::kExitOk);
        CHECK(r.out.find("linked-dnn") != std::string::npos);
        CHECK(std::filesystem::exists(dir.str("run_dnn/report_test.json")));
        CHECK(std::filesystem::exists(dir.str("run_dnn/report_test.txt")));

        const auto rep = nlohmann::json::parse(slurp(dir.str("run_dnn/report_test.json")));
        CHECK(rep.at("model") == "linked-dnn");
        CHECK(rep.at("count") == 24);
        CHECK(rep.at("error_model").at("kind") == "penalty");

        // train split evaluation lands in separate files
        REQUIRE(run({"evaluate", "--weights", dir.str("run_dnn"), "--data", dir.str("cache"),
                     "--split", "train"})
                    .code == cli::kExitOk);
        CHECK(std::filesystem::exists(dir.str("run_dnn/report_train.json")));

        // error-model override is recorded
        REQUIRE(run({"evaluate", "--weights", dir.str("run_dnn"), "--data", dir.str("cache"),
                     "--error-model", "euclidean3d", "--out", dir.str("alt")})
                    .code == cli::kExitOk);
        const auto rep2 = nlohmann::json::parse(slurp(dir.str("alt/report_test.json")));
        CHECK(rep2.at("error_model").at("kind") == "euclidean3d");
    }

    SUBCASE("weights from the wrong model kind are rejected with no report") {
        // swap in the reference run's archive under the dnn manifest
        std::filesystem::copy_file(dir.str("run_ref/stage1.weights.json"),
                                   dir.str("run_dnn/stage1.weights.json"),
                                   std::filesystem::copy_options::overwrite_existing);
        const auto r = run({"evaluate", "--weights", dir.str("run_dnn"), "--data",
                            dir.str("cache"), "--out", dir.str("bad_out")});
        CHECK(r.code == cli::kExitConfig);
        CHECK_FALSE(std::filesystem::exists(dir.str("bad_out/report_test.json")));
    }

    SUBCASE("report aggregates runs grouped by model kind") {
        REQUIRE(run({"evaluate", "--weights", dir.str("run_dnn"), "--data", dir.str("cache")})
                    .code == cli::kExitOk);
        REQUIRE(run({"evaluate", "--weights", dir.str("run_ref"), "--data", dir.str("cache")})
                    .code == cli::kExitOk);
        const auto r = run({"report", "--runs", dir.str("run_dnn"), dir.str("run_ref"), "--out",
                            dir.str("summary")});
        REQUIRE(r.code == cli::kExitOk);
        CHECK(r.out.find("linked-dnn") != std::string::npos);
        CHECK(r.out.find("reference-dnn") != std::string::npos);
        const auto sum = nlohmann::json::parse(slurp(dir.str("summary/summary.json")));
        CHECK(sum.at("models").size() == 2);

        // unevaluated run directory is an actionable data error
        const auto cfg2 = write_file(dir, "r2.json",
                                     tiny_config("linked-dnn", dir.str("cache"),
                                                 dir.str("run_unevaluated"), 2));
        REQUIRE(run({"train", "--config", cfg2}).code == cli::kExitOk);
        CHECK(run({"report", "--runs", dir.str("run_unevaluated")}).code == cli::kExitData);
    }
}
